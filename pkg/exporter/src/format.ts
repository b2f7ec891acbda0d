/**
 * ELEC embedding-store binary format (all little-endian):
 *
 *   magic   "ELEC" (4 bytes)
 *   version u32 = 1
 *   count   u64
 *   dim     u32
 *   data    count x dim float32 values, row-major, sample-id order
 */

export const STORE_MAGIC = 'ELEC';
export const STORE_VERSION = 1;
export const HEADER_SIZE = 20;

export function encodeStore(rows: Float32Array[], dim: number): Buffer {
  const count = rows.length;
  const buf = Buffer.alloc(HEADER_SIZE + count * dim * 4);
  buf.write(STORE_MAGIC, 0, 'ascii');
  buf.writeUInt32LE(STORE_VERSION, 4);
  buf.writeBigUInt64LE(BigInt(count), 8);
  buf.writeUInt32LE(dim, 16);
  let offset = HEADER_SIZE;
  for (const row of rows) {
    if (row.length !== dim) {
      throw new Error(`row width ${row.length} does not match dim ${dim}`);
    }
    for (let j = 0; j < dim; j++) {
      buf.writeFloatLE(row[j]!, offset);
      offset += 4;
    }
  }
  return buf;
}

export interface StoreHeader {
  version: number;
  count: number;
  dim: number;
}

/** Read back a header (used by tests; the Python engine is the real consumer). */
export function decodeHeader(buf: Buffer): StoreHeader {
  if (buf.length < HEADER_SIZE || buf.toString('ascii', 0, 4) !== STORE_MAGIC) {
    throw new Error('not an ELEC store');
  }
  return {
    version: buf.readUInt32LE(4),
    count: Number(buf.readBigUInt64LE(8)),
    dim: buf.readUInt32LE(16),
  };
}
