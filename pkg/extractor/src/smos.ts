/**
 * SMOS embedding container (little-endian), the interchange format consumed
 * by the training harness:
 *
 *   magic "SMOS" | u32 version = 1 | ptm_id (u16 length + UTF-8) | u32 dim
 *   | u32 count | count records of: clip_id (u16 length + UTF-8) + dim f32.
 */

export interface EmbeddingRecord {
  clipId: string;
  vector: Float32Array;
}

export interface EmbeddingTable {
  ptmId: string;
  dim: number;
  records: EmbeddingRecord[];
}

export const SMOS_MAGIC = "SMOS";
export const SMOS_VERSION = 1;

class ByteWriter {
  private chunks: Buffer[] = [];

  raw(buf: Buffer): void {
    this.chunks.push(buf);
  }

  u16(value: number): void {
    const b = Buffer.alloc(2);
    b.writeUInt16LE(value);
    this.raw(b);
  }

  u32(value: number): void {
    const b = Buffer.alloc(4);
    b.writeUInt32LE(value);
    this.raw(b);
  }

  str(text: string): void {
    const raw = Buffer.from(text, "utf-8");
    if (raw.length > 0xffff) throw new Error(`string too long for u16 length prefix`);
    this.u16(raw.length);
    this.raw(raw);
  }

  f32Array(values: Float32Array): void {
    const b = Buffer.alloc(values.length * 4);
    for (let i = 0; i < values.length; i++) b.writeFloatLE(values[i], i * 4);
    this.raw(b);
  }

  bytes(): Buffer {
    return Buffer.concat(this.chunks);
  }
}

export function encodeTable(table: EmbeddingTable): Buffer {
  const seen = new Set<string>();
  for (const record of table.records) {
    if (record.vector.length !== table.dim) {
      throw new Error(
        `record '${record.clipId}': vector length ${record.vector.length} != dim ${table.dim}`,
      );
    }
    if (seen.has(record.clipId)) throw new Error(`duplicate clip_id '${record.clipId}'`);
    seen.add(record.clipId);
  }
  const writer = new ByteWriter();
  writer.raw(Buffer.from(SMOS_MAGIC, "ascii"));
  writer.u32(SMOS_VERSION);
  writer.str(table.ptmId);
  writer.u32(table.dim);
  writer.u32(table.records.length);
  for (const record of table.records) {
    writer.str(record.clipId);
    writer.f32Array(record.vector);
  }
  return writer.bytes();
}

class ByteReader {
  private offset = 0;

  constructor(private buf: Buffer) {}

  private need(n: number, what: string): number {
    if (this.offset + n > this.buf.length) {
      throw new Error(`truncated while reading ${what} (byte offset ${this.offset})`);
    }
    const at = this.offset;
    this.offset += n;
    return at;
  }

  ascii(n: number, what: string): string {
    const at = this.need(n, what);
    return this.buf.toString("ascii", at, at + n);
  }

  u16(what: string): number {
    return this.buf.readUInt16LE(this.need(2, what));
  }

  u32(what: string): number {
    return this.buf.readUInt32LE(this.need(4, what));
  }

  str(what: string): string {
    const length = this.u16(`${what} length`);
    const at = this.need(length, what);
    return this.buf.toString("utf-8", at, at + length);
  }

  f32Array(count: number, what: string): Float32Array {
    const at = this.need(count * 4, what);
    const out = new Float32Array(count);
    for (let i = 0; i < count; i++) out[i] = this.buf.readFloatLE(at + i * 4);
    return out;
  }

  atEnd(): boolean {
    return this.offset === this.buf.length;
  }
}

export function decodeTable(buf: Buffer): EmbeddingTable {
  const reader = new ByteReader(buf);
  if (reader.ascii(4, "magic") !== SMOS_MAGIC) throw new Error("not an embedding file: bad magic");
  const version = reader.u32("version");
  if (version !== SMOS_VERSION) throw new Error(`unsupported embedding version ${version}`);
  const ptmId = reader.str("ptm_id");
  const dim = reader.u32("dim");
  const count = reader.u32("count");
  const records: EmbeddingRecord[] = [];
  for (let i = 0; i < count; i++) {
    const clipId = reader.str(`clip_id of record ${i}`);
    records.push({ clipId, vector: reader.f32Array(dim, `vector of record ${i}`) });
  }
  if (!reader.atEnd()) throw new Error("trailing bytes after last record");
  return { ptmId, dim, records };
}
