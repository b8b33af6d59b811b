import { writeFile } from 'node:fs/promises';

import { readCorpus } from './corpus.js';
import { encodeEmb1 } from './emb1.js';
import { loadEncoder } from './model.js';

export interface ExportManifest {
  model: string;
  max_input_length: number;
  corpus_path: string;
  output_path: string;
  n: number;
  d: number;
}

export const DEFAULT_MODEL = 'Xenova/all-MiniLM-L6-v2';
export const DEFAULT_MAX_LEN = 32;

export async function exportEmbeddings(
  corpusPath: string,
  modelId: string = DEFAULT_MODEL,
  outPath: string = 'embeddings.emb',
  maxLen: number = DEFAULT_MAX_LEN,
): Promise<ExportManifest> {
  if (!Number.isInteger(maxLen) || maxLen < 1) {
    throw new Error(`max input length must be a positive integer, got ${maxLen}`);
  }
  const docs = await readCorpus(corpusPath);
  if (docs.length === 0) {
    throw new Error(`empty corpus: ${corpusPath}`);
  }
  const encoder = await loadEncoder(modelId);
  const vectors = await encoder.encode(docs.map((d) => d.text), maxLen);

  const n = docs.length;
  const d = encoder.dim;
  const data = new Float32Array(n * d);
  vectors.forEach((vec, i) => {
    if (vec.length !== d) {
      throw new Error(`model returned ${vec.length} dims for row ${i}, expected ${d}`);
    }
    data.set(vec, i * d);
  });
  const ids = new BigUint64Array(docs.map((doc) => BigInt(doc.id)));
  await writeFile(outPath, encodeEmb1({ n, d, data, ids }));

  const manifest: ExportManifest = {
    model: encoder.modelId,
    max_input_length: maxLen,
    corpus_path: corpusPath,
    output_path: outPath,
    n,
    d,
  };
  await writeFile(`${outPath}.manifest.json`, JSON.stringify(manifest, null, 2) + '\n');
  return manifest;
}
