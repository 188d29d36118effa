// Sentence encoders. The default is a deterministic feature-hashing
// encoder: no model download, identical output on every machine, good
// enough to exercise the full export/load path. Real sentence-transformer
// models go through @huggingface/transformers when that package is
// installed (mean pooling over the token axis).

export interface Encoder {
  name: string;
  dim: number;
  encode(texts: string[]): Promise<Float32Array[]>;
}

function fnv1a(s: string, seed: number): number {
  let h = (0x811c9dc5 ^ seed) >>> 0;
  for (let i = 0; i < s.length; i++) {
    h ^= s.charCodeAt(i);
    h = Math.imul(h, 0x01000193) >>> 0;
  }
  return h >>> 0;
}

function tokens(text: string): string[] {
  return text.toLowerCase().match(/[^\s\p{P}]+/gu) ?? [];
}

export function hashingEncoder(dim = 768): Encoder {
  if (!Number.isInteger(dim) || dim < 1) throw new Error(`bad dim ${dim}`);
  const encodeOne = (text: string): Float32Array => {
    const vec = new Float32Array(dim);
    const toks = tokens(text);
    // unigrams + bigrams, signed hashing trick
    const feats = toks.slice();
    for (let i = 0; i + 1 < toks.length; i++) feats.push(toks[i] + " " + toks[i + 1]);
    if (feats.length === 0) feats.push("<empty>");
    for (const f of feats) {
      const idx = fnv1a(f, 0) % dim;
      const sign = fnv1a(f, 0x9e3779b9) & 1 ? 1 : -1;
      vec[idx] += sign;
    }
    return vec;
  };
  return {
    name: `hash-${dim}`,
    dim,
    encode: async (texts) => texts.map(encodeOne),
  };
}

export async function transformerEncoder(model: string): Promise<Encoder> {
  const pkg = "@huggingface/transformers";
  let pipeline: any;
  try {
    ({ pipeline } = await import(pkg));
  } catch {
    throw new Error(
      `model ${model} needs the optional ${pkg} package (npm install ${pkg})`,
    );
  }
  const extractor = await pipeline("feature-extraction", model);
  let dim = 0;
  return {
    name: model,
    get dim() {
      return dim;
    },
    async encode(texts) {
      const rows: Float32Array[] = [];
      for (const text of texts) {
        const out = await extractor(text, { pooling: "mean", normalize: false });
        const row = Float32Array.from(out.data as ArrayLike<number>);
        dim = row.length;
        rows.push(row);
      }
      return rows;
    },
  };
}

export async function resolveEncoder(model: string, dim: number): Promise<Encoder> {
  return model === "hash" ? hashingEncoder(dim) : transformerEncoder(model);
}
