/**
 * Minimal RIFF/WAVE reader: PCM16, PCM24, PCM32 and float32, any channel
 * count (mixed down to mono). No external deps; throws on anything else.
 */

export interface AudioData {
  samples: Float64Array; // mono, in [-1, 1]
  sampleRate: number;
}

function readChunks(buf: Buffer): Map<string, { offset: number; size: number }> {
  if (buf.length < 12 || buf.toString("ascii", 0, 4) !== "RIFF" ||
      buf.toString("ascii", 8, 12) !== "WAVE") {
    throw new Error("not a RIFF/WAVE file");
  }
  const chunks = new Map<string, { offset: number; size: number }>();
  let pos = 12;
  while (pos + 8 <= buf.length) {
    const id = buf.toString("ascii", pos, pos + 4);
    const size = buf.readUInt32LE(pos + 4);
    chunks.set(id, { offset: pos + 8, size });
    pos += 8 + size + (size % 2); // chunks are word aligned
  }
  return chunks;
}

export function decodeWav(buf: Buffer): AudioData {
  const chunks = readChunks(buf);
  const fmt = chunks.get("fmt ");
  const data = chunks.get("data");
  if (!fmt || !data) throw new Error("missing fmt/data chunk");

  const format = buf.readUInt16LE(fmt.offset);
  const channels = buf.readUInt16LE(fmt.offset + 2);
  const sampleRate = buf.readUInt32LE(fmt.offset + 4);
  const bitsPerSample = buf.readUInt16LE(fmt.offset + 14);
  if (channels < 1) throw new Error("no audio channels");

  const bytesPerSample = bitsPerSample / 8;
  const frameCount = Math.floor(data.size / (bytesPerSample * channels));
  const samples = new Float64Array(frameCount);

  const readSample = (off: number): number => {
    if (format === 3 && bitsPerSample === 32) return buf.readFloatLE(off);
    if (format === 1 && bitsPerSample === 16) return buf.readInt16LE(off) / 32768;
    if (format === 1 && bitsPerSample === 24) {
      const v = buf.readUIntLE(off, 3);
      return (v >= 0x800000 ? v - 0x1000000 : v) / 8388608;
    }
    if (format === 1 && bitsPerSample === 32) return buf.readInt32LE(off) / 2147483648;
    throw new Error(`unsupported WAV encoding: format=${format} bits=${bitsPerSample}`);
  };

  for (let i = 0; i < frameCount; i++) {
    let acc = 0;
    for (let c = 0; c < channels; c++) {
      acc += readSample(data.offset + (i * channels + c) * bytesPerSample);
    }
    samples[i] = acc / channels;
  }
  return { samples, sampleRate };
}

/** Linear-interpolation resampler; identity when rates already match. */
export function resampleTo(audio: AudioData, targetRate: number): AudioData {
  if (audio.sampleRate === targetRate) return audio;
  const ratio = audio.sampleRate / targetRate;
  const outLen = Math.max(1, Math.floor(audio.samples.length / ratio));
  const out = new Float64Array(outLen);
  for (let i = 0; i < outLen; i++) {
    const pos = i * ratio;
    const lo = Math.floor(pos);
    const hi = Math.min(lo + 1, audio.samples.length - 1);
    const frac = pos - lo;
    out[i] = audio.samples[lo] * (1 - frac) + audio.samples[hi] * frac;
  }
  return { samples: out, sampleRate: targetRate };
}
