/**
 * Embedding backends.
 *
 * `huggingface` runs the real frozen models through transformers.js (an
 * optional install; weights download from the hub on first use). The two
 * speaker models publish no transformers.js-compatible export, so that
 * backend rejects them until an ONNX export is supplied.
 *
 * `deterministic` is a weight-free stand-in used by the test suite and for
 * offline pipeline checks: frame-level signal statistics pushed through a
 * projection seeded by the ptm id. It is deterministic in (ptm, audio) and
 * honours each spec's output dimension, which is exactly what the container
 * format and the downstream reader care about.
 */

import { meanOverTime } from "./pool.js";
import { ExtractorSpec } from "./specs.js";

export interface EmbeddingBackend {
  name: string;
  embed(samples: Float32Array, spec: ExtractorSpec): Promise<Float32Array>;
}

/** A backend that cannot serve the model at all: aborts the run, never a per-clip skip. */
export class BackendError extends Error {}

// ------------------------------------------------------------ deterministic

/** splitmix32: tiny seeded PRNG, stable across platforms */
function splitmix32(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x9e3779b9) >>> 0;
    let z = state;
    z = Math.imul(z ^ (z >>> 16), 0x21f0aaad);
    z = Math.imul(z ^ (z >>> 15), 0x735a2d97);
    z = z ^ (z >>> 15);
    return (z >>> 0) / 0x100000000;
  };
}

function seedFrom(text: string): number {
  let h = 2166136261 >>> 0; // FNV-1a
  for (let i = 0; i < text.length; i++) {
    h = Math.imul(h ^ text.charCodeAt(i), 16777619) >>> 0;
  }
  return h;
}

const FRAME_FEATURES = 3; // mean, rms, zero-crossing rate

function frameFeatures(samples: Float32Array, frameCount: number): Float32Array[] {
  const frames: Float32Array[] = [];
  const size = Math.max(1, Math.floor(samples.length / frameCount));
  for (let f = 0; f < frameCount; f++) {
    const start = f * size;
    const stop = Math.min(samples.length, start + size);
    let mean = 0;
    let energy = 0;
    let crossings = 0;
    for (let i = start; i < stop; i++) {
      mean += samples[i];
      energy += samples[i] * samples[i];
      if (i > start && samples[i - 1] * samples[i] < 0) crossings++;
    }
    const n = Math.max(1, stop - start);
    frames.push(new Float32Array([mean / n, Math.sqrt(energy / n), crossings / n]));
  }
  return frames;
}

export class DeterministicBackend implements EmbeddingBackend {
  name = "deterministic";
  private projections = new Map<string, Float32Array>();

  private projection(spec: ExtractorSpec): Float32Array {
    let proj = this.projections.get(spec.ptmId);
    if (!proj) {
      const next = splitmix32(seedFrom(spec.ptmId));
      proj = new Float32Array(spec.expectedDim * FRAME_FEATURES);
      for (let i = 0; i < proj.length; i++) proj[i] = 2 * next() - 1;
      this.projections.set(spec.ptmId, proj);
    }
    return proj;
  }

  async embed(samples: Float32Array, spec: ExtractorSpec): Promise<Float32Array> {
    const frameCount = spec.utteranceLevel ? 1 : 64;
    const frames = frameFeatures(samples, Math.min(frameCount, Math.max(1, samples.length)));
    const proj = this.projection(spec);
    const projected = frames.map((feat) => {
      const out = new Float32Array(spec.expectedDim);
      for (let d = 0; d < spec.expectedDim; d++) {
        let acc = 0;
        for (let k = 0; k < FRAME_FEATURES; k++) acc += proj[d * FRAME_FEATURES + k] * feat[k];
        out[d] = Math.tanh(acc);
      }
      return out;
    });
    return meanOverTime(projected, spec.expectedDim);
  }
}

// -------------------------------------------------------------- huggingface

export class HuggingFaceBackend implements EmbeddingBackend {
  name = "huggingface";
  private pipelines = new Map<string, Promise<unknown>>();

  private async pipelineFor(spec: ExtractorSpec): Promise<any> {
    if (spec.utteranceLevel) {
      throw new BackendError(
        `${spec.ptmId} ships as a speaker-embedding model without a transformers.js export; ` +
          `provide an ONNX conversion or use the deterministic backend`,
      );
    }
    let cached = this.pipelines.get(spec.ptmId);
    if (!cached) {
      cached = (async () => {
        let transformers: any;
        try {
          transformers = await import("@xenova/transformers");
        } catch {
          throw new BackendError(
            "the huggingface backend needs the optional '@xenova/transformers' package " +
              "(npm install @xenova/transformers)",
          );
        }
        return transformers.pipeline("feature-extraction", spec.modelSource);
      })();
      this.pipelines.set(spec.ptmId, cached);
    }
    return cached;
  }

  async embed(samples: Float32Array, spec: ExtractorSpec): Promise<Float32Array> {
    const pipe = await this.pipelineFor(spec);
    // last hidden state, average-pooled over the time axis
    const output = await pipe(samples, { pooling: "mean" });
    return Float32Array.from(output.data as Iterable<number>);
  }
}

export function backendByName(name: string): EmbeddingBackend {
  if (name === "deterministic") return new DeterministicBackend();
  if (name === "huggingface") return new HuggingFaceBackend();
  throw new Error(`unknown backend '${name}' (expected deterministic or huggingface)`);
}
