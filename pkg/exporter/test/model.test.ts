import assert from 'node:assert/strict';
import { test } from 'node:test';

import { HashEncoder, loadEncoder } from '../src/model.js';

function norm(v: Float32Array): number {
  return Math.hypot(...v);
}

test('hash model ids parse into the right dimension', async () => {
  const enc = await loadEncoder('hash:48');
  assert.equal(enc.dim, 48);
  assert.equal(enc.modelId, 'hash:48');
});

test('encoding is deterministic', async () => {
  const enc = new HashEncoder(32);
  const [a] = await enc.encode(['generative ai in education'], 32);
  const [b] = await enc.encode(['generative ai in education'], 32);
  assert.deepEqual(Array.from(a), Array.from(b));
});

test('different texts usually differ', async () => {
  const enc = new HashEncoder(64);
  const [a, b] = await enc.encode(['alpha beta gamma', 'delta epsilon zeta'], 32);
  assert.notDeepEqual(Array.from(a), Array.from(b));
});

test('vectors are unit norm with self-cosine 1', async () => {
  const enc = new HashEncoder(48);
  const texts = ['one', 'two words', 'a much longer document with many words'];
  const vecs = await enc.encode(texts, 32);
  for (const v of vecs) {
    const n = norm(v);
    assert.ok(Math.abs(n - 1) < 1e-6, `norm ${n}`);
    let dot = 0;
    for (const x of v) dot += x * x;
    assert.ok(Math.abs(dot / (n * n) - 1) < 1e-6);
  }
});

test('a long text and its max-len prefix encode identically', async () => {
  const enc = new HashEncoder(48);
  const words = Array.from({ length: 100 }, (_, i) => `tok${i}`);
  const [full] = await enc.encode([words.join(' ')], 32);
  const [prefix] = await enc.encode([words.slice(0, 32).join(' ')], 32);
  assert.deepEqual(Array.from(full), Array.from(prefix));
});

test('empty text rejected', async () => {
  const enc = new HashEncoder(16);
  await assert.rejects(enc.encode(['   '], 32), /empty text/);
});

test('unknown transformer model fails with a clear message', async () => {
  await assert.rejects(loadEncoder('no-such-org/no-such-model-xyz'),
    /no-such-org\/no-such-model-xyz/);
});
