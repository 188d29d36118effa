#!/usr/bin/env node
// One-command corpus -> embedding export. Writes <out>.emb + <out>.keys
// (UTTEMB01 interchange, row order = corpus traversal order) plus
// <out>.manifest.json. Masking is the core's job: run its `mask` verb
// first and point --corpus at the masked file, then record that with
// --masked.

import { createHash } from "node:crypto";
import { promises as fs } from "node:fs";
import { parseArgs } from "node:util";

import { loadUtterances } from "./corpus.js";
import { writeEmbeddings } from "./format.js";
import { resolveEncoder } from "./encoder.js";

export interface ExportOptions {
  corpus: string;
  out: string;
  model?: string;
  dim?: number;
  masked?: boolean;
  unitNorm?: boolean;
}

export interface ExportManifest {
  model: string;
  corpus: string;
  masked: boolean;
  n: number;
  d: number;
  keys_sha256: string;
}

export async function exportEmbeddings(opts: ExportOptions): Promise<ExportManifest> {
  const utterances = await loadUtterances(opts.corpus);
  const encoder = await resolveEncoder(opts.model ?? "hash", opts.dim ?? 768);
  const rows = await encoder.encode(utterances.map((u) => u.text));

  const d = rows[0]?.length ?? encoder.dim;
  const values = new Float32Array(utterances.length * d);
  rows.forEach((row, i) => {
    if (row.length !== d) {
      throw new Error(`row ${i} has dimension ${row.length}, expected ${d}`);
    }
    if (opts.unitNorm) {
      let norm = 0;
      for (const v of row) norm += v * v;
      norm = Math.sqrt(norm);
      if (norm === 0) throw new Error(`row ${i} has zero norm, cannot unit-normalize`);
      for (let j = 0; j < d; j++) values[i * d + j] = row[j] / norm;
    } else {
      values.set(row, i * d);
    }
  });

  const embPath = `${opts.out}.emb`;
  const keysPath = `${opts.out}.keys`;
  await writeEmbeddings(
    { keys: utterances.map((u) => u.key), values, n: utterances.length, d },
    embPath,
    keysPath,
  );

  const manifest: ExportManifest = {
    model: encoder.name,
    corpus: opts.corpus,
    masked: opts.masked ?? false,
    n: utterances.length,
    d,
    keys_sha256: createHash("sha256").update(await fs.readFile(keysPath)).digest("hex"),
  };
  await fs.writeFile(`${opts.out}.manifest.json`, JSON.stringify(manifest, null, 2) + "\n");
  return manifest;
}

export async function main(argv: string[]): Promise<number> {
  let values;
  try {
    ({ values } = parseArgs({
      args: argv,
      options: {
        corpus: { type: "string" },
        out: { type: "string" },
        model: { type: "string", default: "hash" },
        dim: { type: "string", default: "768" },
        masked: { type: "boolean", default: false },
        "unit-norm": { type: "boolean", default: false },
        help: { type: "boolean", default: false },
      },
    }));
  } catch (err) {
    console.error((err as Error).message);
    return 1;
  }
  if (values.help || !values.corpus || !values.out) {
    const usage =
      "usage: uttemb-export --corpus corpus.json --out prefix " +
      "[--model hash|<hf model id>] [--dim 768] [--masked] [--unit-norm]";
    (values.help ? console.log : console.error)(usage);
    return values.help ? 0 : 1;
  }
  try {
    const manifest = await exportEmbeddings({
      corpus: values.corpus,
      out: values.out,
      model: values.model,
      dim: Number(values.dim),
      masked: values.masked,
      unitNorm: values["unit-norm"],
    });
    console.log(
      `wrote ${manifest.n} x ${manifest.d} (${manifest.model}) -> ${values.out}.emb`,
    );
    return 0;
  } catch (err) {
    console.error((err as Error).message);
    return 1;
  }
}

if (import.meta.url === `file://${process.argv[1]}`) {
  process.exitCode = await main(process.argv.slice(2));
}
