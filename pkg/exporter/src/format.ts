// UTTEMB01 writer/reader.
//
// Layout: bytes 0-7 ASCII magic "UTTEMB01"; bytes 8-15 u64 LE row count n;
// bytes 16-23 u64 LE dimension d; then n*d float32 LE, row-major. Keys live
// in a sidecar UTF-8 file, one per line (line i <-> row i), LF terminated.

import { promises as fs } from "node:fs";

export const MAGIC = "UTTEMB01";
const HEADER_BYTES = 24;

export interface EmbeddingMatrix {
  keys: string[];
  /** row-major n*d */
  values: Float32Array;
  n: number;
  d: number;
}

export function validateMatrix(m: EmbeddingMatrix): void {
  if (m.keys.length !== m.n) {
    throw new Error(`key count ${m.keys.length} != n ${m.n}`);
  }
  if (m.values.length !== m.n * m.d) {
    throw new Error(`payload length ${m.values.length} != n*d ${m.n * m.d}`);
  }
  const seen = new Set<string>();
  for (const key of m.keys) {
    if (!key || /[\r\n]/.test(key)) {
      throw new Error(`bad key ${JSON.stringify(key)}: empty or contains a newline`);
    }
    if (seen.has(key)) throw new Error(`duplicate key ${key}`);
    seen.add(key);
  }
  for (let i = 0; i < m.values.length; i++) {
    if (!Number.isFinite(m.values[i])) {
      throw new Error(`non-finite value at flat index ${i}`);
    }
  }
}

export async function writeEmbeddings(
  m: EmbeddingMatrix,
  embPath: string,
  keysPath: string,
): Promise<void> {
  validateMatrix(m);
  const buf = Buffer.alloc(HEADER_BYTES + m.values.length * 4);
  buf.write(MAGIC, 0, "ascii");
  buf.writeBigUInt64LE(BigInt(m.n), 8);
  buf.writeBigUInt64LE(BigInt(m.d), 16);
  for (let i = 0; i < m.values.length; i++) {
    buf.writeFloatLE(m.values[i], HEADER_BYTES + i * 4);
  }
  await fs.writeFile(embPath, buf);
  const lines = m.keys.map((k) => k + "\n").join("");
  await fs.writeFile(keysPath, lines, "utf-8");
}

export async function readEmbeddings(
  embPath: string,
  keysPath: string,
): Promise<EmbeddingMatrix> {
  const buf = await fs.readFile(embPath);
  if (buf.length < HEADER_BYTES) throw new Error("truncated header");
  if (buf.toString("ascii", 0, 8) !== MAGIC) {
    throw new Error(`magic mismatch: ${buf.toString("ascii", 0, 8)}`);
  }
  const n = Number(buf.readBigUInt64LE(8));
  const d = Number(buf.readBigUInt64LE(16));
  if (buf.length !== HEADER_BYTES + n * d * 4) {
    throw new Error(`payload is ${buf.length - HEADER_BYTES} bytes, expected ${n * d * 4}`);
  }
  const values = new Float32Array(n * d);
  for (let i = 0; i < values.length; i++) {
    values[i] = buf.readFloatLE(HEADER_BYTES + i * 4);
  }
  const text = await fs.readFile(keysPath, "utf-8");
  const keys = text.length === 0 ? [] : text.replace(/\n$/, "").split("\n");
  const m = { keys, values, n, d };
  validateMatrix(m);
  return m;
}
