#!/usr/bin/env node
/**
 * smos-extract --ptm <token> --audio-dir <dir> --manifest <file> --out <file>
 *              [--backend deterministic|huggingface] [--concurrency N]
 *
 * Writes an SMOS embedding file plus `<out>.report.json`. Exit codes:
 * 0 success, 1 runtime failure, 2 usage error.
 */

import { parseArgs } from "node:util";

import { backendByName } from "./backends.js";
import { extractToFile } from "./extract.js";
import { specFor } from "./specs.js";

async function main(argv: string[]): Promise<number> {
  let parsed;
  try {
    parsed = parseArgs({
      args: argv,
      options: {
        ptm: { type: "string" },
        "audio-dir": { type: "string" },
        manifest: { type: "string" },
        out: { type: "string" },
        backend: { type: "string", default: "huggingface" },
        concurrency: { type: "string", default: "4" },
        help: { type: "boolean", default: false },
      },
      strict: true,
    });
  } catch (err) {
    console.error(`usage error: ${err instanceof Error ? err.message : err}`);
    return 2;
  }

  const { values } = parsed;
  if (values.help) {
    console.log(
      "usage: smos-extract --ptm <token> --audio-dir <dir> --manifest <file> --out <file>\n" +
        "                    [--backend deterministic|huggingface] [--concurrency N]",
    );
    return 0;
  }
  for (const flag of ["ptm", "audio-dir", "manifest", "out"] as const) {
    if (!values[flag]) {
      console.error(`usage error: --${flag} is required`);
      return 2;
    }
  }

  try {
    const spec = specFor(values.ptm as string);
    const backend = backendByName(values.backend as string);
    const report = await extractToFile(
      values["audio-dir"] as string,
      values.manifest as string,
      spec,
      backend,
      values.out as string,
      { concurrency: Number(values.concurrency) },
    );
    console.log(
      `${report.ptmId}: wrote ${report.written}/${report.total} clips ` +
        `(dim ${report.dim}, ${report.skipped.length} skipped) -> ${values.out}`,
    );
    return 0;
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    return 1;
  }
}

main(process.argv.slice(2)).then((code) => {
  process.exitCode = code;
});
