// Sentence encoders behind one interface: a real transformer backbone via
// @huggingface/transformers when available, and a deterministic hashed
// encoder ("hash:<dim>" model ids) for offline use and tests. Both truncate
// to maxLen whitespace tokens and mean-pool before L2 normalisation.

export interface SentenceEncoder {
  readonly modelId: string;
  readonly dim: number;
  encode(texts: string[], maxLen: number): Promise<Float32Array[]>;
}

function fnv1a64(text: string, salt: number): bigint {
  let h = 0xcbf29ce484222325n ^ BigInt(salt);
  const bytes = Buffer.from(text, 'utf-8');
  for (const b of bytes) {
    h ^= BigInt(b);
    h = (h * 0x100000001b3n) & 0xffffffffffffffffn;
  }
  return h;
}

export class HashEncoder implements SentenceEncoder {
  readonly modelId: string;
  readonly dim: number;

  constructor(dim: number) {
    if (!Number.isInteger(dim) || dim < 2) {
      throw new Error(`hash encoder dimension must be an integer >= 2, got ${dim}`);
    }
    this.dim = dim;
    this.modelId = `hash:${dim}`;
  }

  private tokenVector(token: string): Float32Array {
    const v = new Float32Array(this.dim);
    const h1 = fnv1a64(token, 1);
    const h2 = fnv1a64(token, 2);
    const b1 = Number(h1 % BigInt(this.dim));
    const b2 = Number(h2 % BigInt(this.dim));
    const s1 = (h1 >> 63n) & 1n ? -1 : 1;
    let s2 = (h2 >> 63n) & 1n ? -1 : 1;
    if (b1 === b2) {
      s2 = s1; // keep single-token vectors nonzero when the buckets collide
    }
    v[b1] += s1;
    v[b2] += s2;
    return v;
  }

  async encode(texts: string[], maxLen: number): Promise<Float32Array[]> {
    return texts.map((text) => {
      const tokens = text.split(/\s+/).filter(Boolean).slice(0, maxLen);
      if (tokens.length === 0) {
        throw new Error('cannot encode empty text');
      }
      const pooled = new Float32Array(this.dim);
      const first = this.tokenVector(tokens[0]);
      for (const tok of tokens) {
        const tv = this.tokenVector(tok);
        for (let i = 0; i < this.dim; i++) pooled[i] += tv[i] / tokens.length;
      }
      let norm = Math.hypot(...pooled);
      let out: Float32Array = pooled;
      if (norm === 0) {
        out = first; // mean cancelled exactly; fall back to the first token
        norm = Math.hypot(...out);
      }
      const result = new Float32Array(this.dim);
      for (let i = 0; i < this.dim; i++) result[i] = out[i] / norm;
      return result;
    });
  }
}

class TransformerEncoder implements SentenceEncoder {
  readonly modelId: string;
  readonly dim: number;
  private pipe: any;

  private constructor(modelId: string, pipe: any, dim: number) {
    this.modelId = modelId;
    this.pipe = pipe;
    this.dim = dim;
  }

  static async load(modelId: string): Promise<TransformerEncoder> {
    let pipeline: any;
    try {
      // optional dependency, resolved at runtime only
      const specifier = '@huggingface/transformers';
      ({ pipeline } = await import(specifier));
    } catch (err) {
      throw new Error(
        `model ${modelId} needs @huggingface/transformers (npm install @huggingface/transformers), ` +
        `or use a built-in "hash:<dim>" model: ${(err as Error).message}`,
      );
    }
    let pipe: any;
    try {
      pipe = await pipeline('feature-extraction', modelId);
    } catch (err) {
      throw new Error(`failed to load model ${modelId}: ${(err as Error).message}`);
    }
    const probe = await pipe('dimension probe', { pooling: 'mean', normalize: true });
    const dim = probe.dims[probe.dims.length - 1];
    return new TransformerEncoder(modelId, pipe, dim);
  }

  async encode(texts: string[], maxLen: number): Promise<Float32Array[]> {
    const truncated = texts.map((t) =>
      t.split(/\s+/).filter(Boolean).slice(0, maxLen).join(' '));
    const out: Float32Array[] = [];
    for (const text of truncated) {
      const tensor = await this.pipe(text, { pooling: 'mean', normalize: true });
      out.push(Float32Array.from(tensor.data as Iterable<number>));
    }
    return out;
  }
}

export async function loadEncoder(modelId: string): Promise<SentenceEncoder> {
  const hashMatch = /^hash:(\d+)$/.exec(modelId);
  if (hashMatch) {
    return new HashEncoder(Number(hashMatch[1]));
  }
  return TransformerEncoder.load(modelId);
}
