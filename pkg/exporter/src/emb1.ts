// EMB1 binary format, little-endian throughout:
//   "EMB1" | u32 n | u32 d | n*d float32 row-major | optional 0x01 + n*u64 ids

export interface EmbeddingMatrix {
  n: number;
  d: number;
  data: Float32Array; // length n*d, row-major
  ids?: BigUint64Array;
}

const MAGIC = Buffer.from('EMB1', 'ascii');

export function encodeEmb1(emb: EmbeddingMatrix): Buffer {
  const { n, d, data, ids } = emb;
  if (data.length !== n * d) {
    throw new Error(`payload length ${data.length} does not match ${n}x${d}`);
  }
  for (let i = 0; i < data.length; i++) {
    if (!Number.isFinite(data[i])) {
      throw new Error(`non-finite embedding value (row ${Math.floor(i / d)})`);
    }
  }
  const header = Buffer.alloc(8);
  header.writeUInt32LE(n, 0);
  header.writeUInt32LE(d, 4);
  const payload = Buffer.from(data.buffer as ArrayBuffer, data.byteOffset, data.byteLength);
  const parts = [MAGIC, header, payload];
  if (ids) {
    if (ids.length !== n) {
      throw new Error(`id block length ${ids.length} does not match n=${n}`);
    }
    parts.push(Buffer.from([0x01]));
    parts.push(Buffer.from(ids.buffer as ArrayBuffer, ids.byteOffset, ids.byteLength));
  }
  return Buffer.concat(parts);
}

export function decodeEmb1(buf: Buffer): EmbeddingMatrix {
  if (buf.subarray(0, 4).compare(MAGIC) !== 0) {
    throw new Error('not an embedding file');
  }
  const n = buf.readUInt32LE(4);
  const d = buf.readUInt32LE(8);
  const need = n * d * 4;
  if (buf.length < 12 + need) {
    throw new Error(`truncated payload (${buf.length - 12} bytes, expected ${need})`);
  }
  const data = new Float32Array(n * d);
  for (let i = 0; i < n * d; i++) {
    data[i] = buf.readFloatLE(12 + 4 * i);
  }
  let ids: BigUint64Array | undefined;
  if (buf.length > 12 + need && buf[12 + need] === 0x01) {
    ids = new BigUint64Array(n);
    for (let i = 0; i < n; i++) {
      ids[i] = buf.readBigUInt64LE(12 + need + 1 + 8 * i);
    }
  }
  return { n, d, data, ids };
}
