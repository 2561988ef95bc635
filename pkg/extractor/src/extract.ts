/**
 * Extraction pipeline: manifest -> decode -> resample -> frozen forward pass
 * -> pooled vector -> SMOS file plus a sidecar report.
 *
 * Clips are processed concurrently but the output records always follow
 * manifest order. Undecodable clips are skipped with a warning and recorded
 * in the report; a vector of the wrong dimension aborts the run because the
 * dimension table is authoritative.
 */

import { promises as fs } from "node:fs";
import path from "node:path";

import { BackendError, EmbeddingBackend } from "./backends.js";
import { encodeTable, EmbeddingRecord } from "./smos.js";
import { ExtractorSpec } from "./specs.js";
import { resample } from "./resample.js";
import { decodeWav } from "./wav.js";

export interface SkippedClip {
  clip: string;
  reason: string;
}

export interface ExtractionReport {
  ptmId: string;
  dim: number;
  sampleRate: number;
  total: number;
  written: number;
  skipped: SkippedClip[];
}

export interface ExtractOptions {
  concurrency?: number;
  warn?: (message: string) => void;
}

export async function readManifest(manifestPath: string): Promise<string[]> {
  const text = await fs.readFile(manifestPath, "utf-8");
  return text
    .split("\n")
    .map((line) => line.trim())
    .filter((line) => line.length > 0 && !line.startsWith("#"));
}

export function clipIdOf(clipPath: string): string {
  const base = path.basename(clipPath);
  const dot = base.lastIndexOf(".");
  return dot > 0 ? base.slice(0, dot) : base;
}

async function embedClip(
  audioDir: string,
  clipPath: string,
  spec: ExtractorSpec,
  backend: EmbeddingBackend,
): Promise<Float32Array> {
  const resolved = path.isAbsolute(clipPath) ? clipPath : path.join(audioDir, clipPath);
  const decoded = decodeWav(await fs.readFile(resolved));
  let samples = resample(decoded.samples, decoded.sampleRate, spec.sampleRate);
  if (spec.maxSeconds !== undefined) {
    const limit = spec.maxSeconds * spec.sampleRate;
    if (samples.length > limit) samples = samples.subarray(0, limit);
  }
  const vector = await backend.embed(samples, spec);
  if (vector.length !== spec.expectedDim) {
    throw new DimMismatchError(
      `${spec.ptmId} produced dim ${vector.length}, expected ${spec.expectedDim}`,
    );
  }
  for (const value of vector) {
    if (!Number.isFinite(value)) {
      throw new DimMismatchError(`${spec.ptmId} produced a non-finite value`);
    }
  }
  return vector;
}

export class DimMismatchError extends Error {}

export async function extract(
  audioDir: string,
  manifest: string[],
  spec: ExtractorSpec,
  backend: EmbeddingBackend,
  options: ExtractOptions = {},
): Promise<{ records: EmbeddingRecord[]; report: ExtractionReport }> {
  const concurrency = Math.max(1, options.concurrency ?? 4);
  const warn = options.warn ?? ((message: string) => console.error(message));

  const results: (EmbeddingRecord | SkippedClip)[] = new Array(manifest.length);
  let cursor = 0;
  const worker = async () => {
    for (;;) {
      const index = cursor++;
      if (index >= manifest.length) return;
      const clipPath = manifest[index];
      try {
        const vector = await embedClip(audioDir, clipPath, spec, backend);
        results[index] = { clipId: clipIdOf(clipPath), vector };
      } catch (err) {
        // a wrong dimension or an unusable backend aborts the whole run;
        // only per-clip problems (undecodable, unreadable) are skippable
        if (err instanceof DimMismatchError || err instanceof BackendError) throw err;
        const reason = err instanceof Error ? err.message : String(err);
        warn(`skipping ${clipPath}: ${reason}`);
        results[index] = { clip: clipPath, reason };
      }
    }
  };
  await Promise.all(Array.from({ length: concurrency }, worker));

  const records: EmbeddingRecord[] = [];
  const skipped: SkippedClip[] = [];
  for (const result of results) {
    if ("vector" in result) records.push(result);
    else skipped.push(result);
  }
  return {
    records,
    report: {
      ptmId: spec.ptmId,
      dim: spec.expectedDim,
      sampleRate: spec.sampleRate,
      total: manifest.length,
      written: records.length,
      skipped,
    },
  };
}

export async function extractToFile(
  audioDir: string,
  manifestPath: string,
  spec: ExtractorSpec,
  backend: EmbeddingBackend,
  outPath: string,
  options: ExtractOptions = {},
): Promise<ExtractionReport> {
  const manifest = await readManifest(manifestPath);
  const { records, report } = await extract(audioDir, manifest, spec, backend, options);
  const bytes = encodeTable({ ptmId: spec.ptmId, dim: spec.expectedDim, records });
  await fs.mkdir(path.dirname(path.resolve(outPath)), { recursive: true });
  await fs.writeFile(outPath, bytes);
  await fs.writeFile(`${outPath}.report.json`, JSON.stringify(report, null, 2) + "\n");
  return report;
}
