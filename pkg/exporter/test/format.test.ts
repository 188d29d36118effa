import { mkdtemp, readFile, rm, writeFile } from "node:fs/promises";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterEach, beforeEach, describe, expect, it } from "vitest";

import { readEmbeddings, writeEmbeddings } from "../src/format";

let dir: string;
beforeEach(async () => {
  dir = await mkdtemp(join(tmpdir(), "uttemb-"));
});
afterEach(async () => {
  await rm(dir, { recursive: true, force: true });
});

const paths = () => [join(dir, "m.emb"), join(dir, "m.keys")] as const;

describe("binary layout", () => {
  it("writes magic, u64 counts and float32 LE payload", async () => {
    const [emb, keys] = paths();
    await writeEmbeddings(
      { keys: ["a:0"], values: Float32Array.from([0.5]), n: 1, d: 1 },
      emb,
      keys,
    );
    const buf = await readFile(emb);
    expect(buf.length).toBe(28);
    expect(buf.toString("ascii", 0, 8)).toBe("UTTEMB01");
    expect(buf.readBigUInt64LE(8)).toBe(1n);
    expect(buf.readBigUInt64LE(16)).toBe(1n);
    expect([...buf.subarray(24)]).toEqual([0x00, 0x00, 0x00, 0x3f]);
    expect(await readFile(keys, "utf-8")).toBe("a:0\n");
  });

  it("empty matrix is a 24-byte file with an empty keys file", async () => {
    const [emb, keys] = paths();
    await writeEmbeddings({ keys: [], values: new Float32Array(0), n: 0, d: 4 }, emb, keys);
    expect((await readFile(emb)).length).toBe(24);
    expect(await readFile(keys, "utf-8")).toBe("");
  });

  it("round trips", async () => {
    const [emb, keys] = paths();
    const values = Float32Array.from({ length: 6 }, (_, i) => (i - 2.5) / 3);
    await writeEmbeddings({ keys: ["d:0", "d:1"], values, n: 2, d: 3 }, emb, keys);
    const back = await readEmbeddings(emb, keys);
    expect(back.n).toBe(2);
    expect(back.d).toBe(3);
    expect(back.keys).toEqual(["d:0", "d:1"]);
    expect([...back.values]).toEqual([...values]);
  });
});

describe("validation", () => {
  it("rejects bad matrices at write time", async () => {
    const [emb, keys] = paths();
    const ok = { keys: ["a:0"], values: Float32Array.from([1]), n: 1, d: 1 };
    await expect(
      writeEmbeddings({ ...ok, keys: ["a\n0"] }, emb, keys),
    ).rejects.toThrow(/newline/);
    await expect(
      writeEmbeddings(
        { keys: ["a:0", "a:0"], values: Float32Array.from([1, 2]), n: 2, d: 1 },
        emb,
        keys,
      ),
    ).rejects.toThrow(/duplicate/);
    await expect(
      writeEmbeddings({ ...ok, values: Float32Array.from([NaN]) }, emb, keys),
    ).rejects.toThrow(/non-finite/);
    await expect(
      writeEmbeddings({ ...ok, keys: ["a:0", "b:0"] }, emb, keys),
    ).rejects.toThrow(/key count/);
  });

  it("rejects corrupt files at read time", async () => {
    const [emb, keys] = paths();
    await writeFile(keys, "a:0\n");
    await writeFile(emb, Buffer.from("UTTEMB99" + "\0".repeat(16), "ascii"));
    await expect(readEmbeddings(emb, keys)).rejects.toThrow(/magic/);
    const good = Buffer.alloc(28);
    good.write("UTTEMB01", 0, "ascii");
    good.writeBigUInt64LE(1n, 8);
    good.writeBigUInt64LE(1n, 16);
    await writeFile(emb, good.subarray(0, 26));
    await expect(readEmbeddings(emb, keys)).rejects.toThrow(/payload/);
  });
});
