import { spawnSync } from "node:child_process";
import { mkdtemp, readFile, rm, writeFile } from "node:fs/promises";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterEach, beforeEach, describe, expect, it } from "vitest";

import { hashingEncoder, resolveEncoder } from "../src/encoder";
import { exportEmbeddings, main } from "../src/export";
import { readEmbeddings } from "../src/format";

let dir: string;
beforeEach(async () => {
  dir = await mkdtemp(join(tmpdir(), "uttemb-"));
});
afterEach(async () => {
  await rm(dir, { recursive: true, force: true });
});

const THREE_UTTERANCES = {
  d1: {
    turns: [
      { speaker: "user", text: "i need a cheap hotel in the north" },
      { speaker: "system", text: "the acorn guest house is cheap" },
    ],
  },
  d2: { turns: [{ speaker: "user", text: "book a table for two" }] },
};

async function writeCorpus(): Promise<string> {
  const path = join(dir, "corpus.json");
  await writeFile(path, JSON.stringify(THREE_UTTERANCES));
  return path;
}

/** Load an export with the core toolkit and report what it sees. */
function coreLoads(prefix: string): { n: number; d: number; self_cos: number[] } {
  const script = [
    "import json, sys",
    "from intentflow.embed import load_embeddings, cosine_similarity",
    "m = load_embeddings(sys.argv[1] + '.emb', sys.argv[1] + '.keys')",
    "print(json.dumps({'n': m.values.shape[0], 'd': m.values.shape[1],",
    "  'self_cos': [float(cosine_similarity(r, r)) for r in m.values]}))",
  ].join("\n");
  const proc = spawnSync("python3", ["-c", script, prefix], { encoding: "utf-8" });
  if (proc.status !== 0) throw new Error(`core loader failed: ${proc.stderr}`);
  return JSON.parse(proc.stdout);
}

describe("hashing encoder", () => {
  it("is deterministic with the advertised dimension", async () => {
    const enc = hashingEncoder(768);
    const [a] = await enc.encode(["i need a cheap hotel"]);
    const [b] = await enc.encode(["i need a cheap hotel"]);
    const [c] = await enc.encode(["book a taxi instead"]);
    expect(a.length).toBe(768);
    expect([...a]).toEqual([...b]);
    expect([...a]).not.toEqual([...c]);
  });

  it("unknown transformer models fail with install guidance", async () => {
    await expect(resolveEncoder("no-such-model", 768)).rejects.toThrow(
      /@huggingface\/transformers/,
    );
  });
});

describe("export round trip through the core loader", () => {
  it("three utterances come back as n=3, d=768 with unit self-similarity", async () => {
    const corpus = await writeCorpus();
    const prefix = join(dir, "out");
    const manifest = await exportEmbeddings({ corpus, out: prefix });
    expect(manifest.n).toBe(3);
    expect(manifest.d).toBe(768);
    expect(manifest.model).toBe("hash-768");

    const seen = coreLoads(prefix);
    expect(seen.n).toBe(3);
    expect(seen.d).toBe(768);
    for (const cos of seen.self_cos) {
      expect(Math.abs(cos - 1.0)).toBeLessThanOrEqual(1e-6);
    }
  });

  it("re-exporting yields an identical keys file", async () => {
    const corpus = await writeCorpus();
    const one = join(dir, "one");
    const two = join(dir, "two");
    const m1 = await exportEmbeddings({ corpus, out: one });
    const m2 = await exportEmbeddings({ corpus, out: two });
    expect(m1.keys_sha256).toBe(m2.keys_sha256);
    expect(await readFile(`${one}.keys`)).toEqual(await readFile(`${two}.keys`));
    expect(await readFile(`${one}.emb`)).toEqual(await readFile(`${two}.emb`));
  });

  it("keys follow corpus traversal order", async () => {
    const corpus = await writeCorpus();
    const prefix = join(dir, "out");
    await exportEmbeddings({ corpus, out: prefix });
    expect(await readFile(`${prefix}.keys`, "utf-8")).toBe("d1:0\nd1:1\nd2:0\n");
  });
});

describe("options", () => {
  it("unit-norm puts every row on the sphere", async () => {
    const corpus = await writeCorpus();
    const prefix = join(dir, "out");
    await exportEmbeddings({ corpus, out: prefix, unitNorm: true });
    const m = await readEmbeddings(`${prefix}.emb`, `${prefix}.keys`);
    for (let i = 0; i < m.n; i++) {
      let norm = 0;
      for (let j = 0; j < m.d; j++) norm += m.values[i * m.d + j] ** 2;
      expect(Math.abs(Math.sqrt(norm) - 1.0)).toBeLessThanOrEqual(1e-5);
    }
  });

  it("masked flag and custom dim land in the manifest", async () => {
    const corpus = await writeCorpus();
    const prefix = join(dir, "out");
    await exportEmbeddings({ corpus, out: prefix, dim: 32, masked: true });
    const manifest = JSON.parse(await readFile(`${prefix}.manifest.json`, "utf-8"));
    expect(manifest).toMatchObject({ masked: true, d: 32, n: 3, model: "hash-32" });
    expect(manifest.keys_sha256).toMatch(/^[0-9a-f]{64}$/);
  });
});

describe("command line", () => {
  it("exports and exits zero", async () => {
    const corpus = await writeCorpus();
    const prefix = join(dir, "cli");
    expect(await main(["--corpus", corpus, "--out", prefix])).toBe(0);
    expect((await readFile(`${prefix}.emb`)).length).toBe(24 + 3 * 768 * 4);
  });

  it("missing arguments exit one", async () => {
    expect(await main([])).toBe(1);
    expect(await main(["--corpus", "x.json"])).toBe(1);
  });
});
