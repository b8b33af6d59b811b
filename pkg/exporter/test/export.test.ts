import assert from 'node:assert/strict';
import { spawnSync } from 'node:child_process';
import { mkdtemp, readFile, writeFile } from 'node:fs/promises';
import { tmpdir } from 'node:os';
import { join } from 'node:path';
import { test } from 'node:test';

import { decodeEmb1 } from '../src/emb1.js';
import { exportEmbeddings } from '../src/export.js';

async function writeCorpus(dir: string, n = 5): Promise<string> {
  const lines = [JSON.stringify({ num_classes: 2, source_tag: 'test' })];
  for (let i = 0; i < n; i++) {
    lines.push(JSON.stringify({ id: i * 3, text: `document number ${i} about topics`, label: i % 2 }));
  }
  const path = join(dir, 'corpus.jsonl');
  await writeFile(path, lines.join('\n') + '\n');
  return path;
}

test('export writes a decodable EMB1 plus a consistent manifest', async () => {
  const dir = await mkdtemp(join(tmpdir(), 'emb-'));
  const corpus = await writeCorpus(dir);
  const out = join(dir, 'out.emb');
  const manifest = await exportEmbeddings(corpus, 'hash:24', out, 32);
  assert.equal(manifest.n, 5);
  assert.equal(manifest.d, 24);
  assert.equal(manifest.max_input_length, 32);

  const emb = decodeEmb1(await readFile(out));
  assert.equal(emb.n, 5);
  assert.equal(emb.d, 24);
  assert.deepEqual(Array.from(emb.ids ?? []), [0n, 3n, 6n, 9n, 12n]);

  const sidecar = JSON.parse(await readFile(`${out}.manifest.json`, 'utf-8'));
  assert.deepEqual(sidecar, manifest);
});

test('plain text corpora are accepted one document per line', async () => {
  const dir = await mkdtemp(join(tmpdir(), 'emb-'));
  const path = join(dir, 'corpus.txt');
  await writeFile(path, 'first document\nsecond document\n');
  const manifest = await exportEmbeddings(path, 'hash:16', join(dir, 'o.emb'), 32);
  assert.equal(manifest.n, 2);
});

test('empty corpus is an error', async () => {
  const dir = await mkdtemp(join(tmpdir(), 'emb-'));
  const path = join(dir, 'empty.jsonl');
  await writeFile(path, '');
  await assert.rejects(exportEmbeddings(path, 'hash:16', join(dir, 'o.emb')), /empty corpus/);
});

test('exported file loads through the primary python loader', async (t) => {
  const probe = spawnSync('python3', ['-c', 'import clustext'], { encoding: 'utf-8' });
  if (probe.status !== 0) {
    t.skip('python3 with clustext not available');
    return;
  }
  const dir = await mkdtemp(join(tmpdir(), 'emb-'));
  const corpus = await writeCorpus(dir);
  const out = join(dir, 'roundtrip.emb');
  const manifest = await exportEmbeddings(corpus, 'hash:48', out, 32);

  const py = spawnSync('python3', ['-c', `
import json
import numpy as np
from clustext.embed import load_embeddings
emb = load_embeddings(${JSON.stringify(out)})
data = emb.data.astype(np.float64)
self_cos = [float(r @ r / (np.linalg.norm(r) ** 2)) for r in data]
print(json.dumps({"n": emb.n, "d": emb.d, "ids": emb.ids.tolist(),
                  "self_cos_ok": all(abs(c - 1) < 1e-6 for c in self_cos)}))
`], { encoding: 'utf-8' });
  assert.equal(py.status, 0, py.stderr);
  const report = JSON.parse(py.stdout);
  assert.equal(report.n, manifest.n);
  assert.equal(report.d, manifest.d);
  assert.deepEqual(report.ids, [0, 3, 6, 9, 12]);
  assert.ok(report.self_cos_ok);
});
