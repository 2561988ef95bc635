/**
 * Minimal RIFF/WAVE decoder for the clip formats that matter here:
 * PCM 16-bit and IEEE float32, any channel count (mixed down to mono).
 */

export interface DecodedAudio {
  samples: Float32Array;
  sampleRate: number;
}

export class WavError extends Error {}

export function decodeWav(buf: Buffer): DecodedAudio {
  if (buf.length < 44) throw new WavError("file too short for a WAV header");
  if (buf.toString("ascii", 0, 4) !== "RIFF" || buf.toString("ascii", 8, 12) !== "WAVE") {
    throw new WavError("not a RIFF/WAVE file");
  }

  let format = 0;
  let channels = 0;
  let sampleRate = 0;
  let bitsPerSample = 0;
  let dataStart = -1;
  let dataLength = 0;

  let offset = 12;
  while (offset + 8 <= buf.length) {
    const chunkId = buf.toString("ascii", offset, offset + 4);
    const chunkSize = buf.readUInt32LE(offset + 4);
    const body = offset + 8;
    if (chunkId === "fmt ") {
      if (chunkSize < 16) throw new WavError("fmt chunk too short");
      format = buf.readUInt16LE(body);
      channels = buf.readUInt16LE(body + 2);
      sampleRate = buf.readUInt32LE(body + 4);
      bitsPerSample = buf.readUInt16LE(body + 14);
    } else if (chunkId === "data") {
      dataStart = body;
      dataLength = Math.min(chunkSize, buf.length - body);
    }
    offset = body + chunkSize + (chunkSize % 2); // chunks are word-aligned
  }

  if (dataStart < 0) throw new WavError("missing data chunk");
  if (channels < 1) throw new WavError("missing or invalid fmt chunk");
  if (sampleRate < 1) throw new WavError(`invalid sample rate ${sampleRate}`);

  let read: (frame: number, channel: number) => number;
  if (format === 1 && bitsPerSample === 16) {
    read = (frame, ch) => buf.readInt16LE(dataStart + (frame * channels + ch) * 2) / 32768;
  } else if (format === 3 && bitsPerSample === 32) {
    read = (frame, ch) => buf.readFloatLE(dataStart + (frame * channels + ch) * 4);
  } else {
    throw new WavError(`unsupported encoding: format ${format}, ${bitsPerSample} bits`);
  }

  const bytesPerFrame = (bitsPerSample / 8) * channels;
  const frames = Math.floor(dataLength / bytesPerFrame);
  const mono = new Float32Array(frames);
  for (let frame = 0; frame < frames; frame++) {
    let acc = 0;
    for (let ch = 0; ch < channels; ch++) acc += read(frame, ch);
    mono[frame] = acc / channels;
  }
  return { samples: mono, sampleRate };
}

/** Encode mono float samples as PCM16 WAV; used by the test fixtures. */
export function encodeWavPcm16(samples: Float32Array, sampleRate: number): Buffer {
  const data = Buffer.alloc(samples.length * 2);
  for (let i = 0; i < samples.length; i++) {
    const clipped = Math.max(-1, Math.min(1, samples[i]));
    data.writeInt16LE(Math.round(clipped * 32767), i * 2);
  }
  const header = Buffer.alloc(44);
  header.write("RIFF", 0, "ascii");
  header.writeUInt32LE(36 + data.length, 4);
  header.write("WAVE", 8, "ascii");
  header.write("fmt ", 12, "ascii");
  header.writeUInt32LE(16, 16);
  header.writeUInt16LE(1, 20); // PCM
  header.writeUInt16LE(1, 22); // mono
  header.writeUInt32LE(sampleRate, 24);
  header.writeUInt32LE(sampleRate * 2, 28);
  header.writeUInt16LE(2, 32);
  header.writeUInt16LE(16, 34);
  header.write("data", 36, "ascii");
  header.writeUInt32LE(data.length, 40);
  return Buffer.concat([header, data]);
}
