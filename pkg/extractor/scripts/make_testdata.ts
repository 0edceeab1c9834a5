/**
 * Generates the committed test fixtures: three small WAV files in different
 * encodings/rates, the audio manifest, and the golden embedding store the
 * local encoder produces from them. Run once via `npm run make-testdata`;
 * outputs are committed so tests never regenerate them.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { LocalSpectralEncoder } from "../src/encoder";
import { runExtraction } from "../src/extract";

const TESTDATA = path.resolve(__dirname, "..", "testdata");

function wavHeader(dataBytes: number, format: number, channels: number,
                   rate: number, bits: number): Buffer {
  const header = Buffer.alloc(44);
  header.write("RIFF", 0, "ascii");
  header.writeUInt32LE(36 + dataBytes, 4);
  header.write("WAVE", 8, "ascii");
  header.write("fmt ", 12, "ascii");
  header.writeUInt32LE(16, 16);
  header.writeUInt16LE(format, 20);
  header.writeUInt16LE(channels, 22);
  header.writeUInt32LE(rate, 24);
  header.writeUInt32LE((rate * channels * bits) / 8, 28);
  header.writeUInt16LE((channels * bits) / 8, 32);
  header.writeUInt16LE(bits, 34);
  header.write("data", 36, "ascii");
  header.writeUInt32LE(dataBytes, 40);
  return header;
}

/** Deterministic quasi-speech signal: a few harmonics plus seeded noise. */
function synthSignal(seconds: number, rate: number, f0: number, seed: number): Float64Array {
  const n = Math.floor(seconds * rate);
  const out = new Float64Array(n);
  let state = seed >>> 0;
  const rand = () => {
    state = (Math.imul(state, 1664525) + 1013904223) >>> 0;
    return state / 4294967296 - 0.5;
  };
  for (let i = 0; i < n; i++) {
    const t = i / rate;
    out[i] =
      0.5 * Math.sin(2 * Math.PI * f0 * t) +
      0.25 * Math.sin(2 * Math.PI * 2 * f0 * t + 0.7) +
      0.12 * Math.sin(2 * Math.PI * 3.3 * f0 * t) +
      0.05 * rand();
  }
  return out;
}

function writePcm16(file: string, signal: Float64Array, rate: number, channels: number): void {
  const frames = signal.length;
  const data = Buffer.alloc(frames * channels * 2);
  for (let i = 0; i < frames; i++) {
    const v = Math.max(-1, Math.min(1, signal[i]));
    for (let c = 0; c < channels; c++) {
      // second channel slightly attenuated so the mixdown actually mixes
      const scaled = Math.round(v * (c === 0 ? 1 : 0.8) * 32767);
      data.writeInt16LE(scaled, (i * channels + c) * 2);
    }
  }
  fs.writeFileSync(file, Buffer.concat([wavHeader(data.length, 1, channels, rate, 16), data]));
}

function writeFloat32(file: string, signal: Float64Array, rate: number): void {
  const data = Buffer.alloc(signal.length * 4);
  for (let i = 0; i < signal.length; i++) data.writeFloatLE(signal[i], i * 4);
  fs.writeFileSync(file, Buffer.concat([wavHeader(data.length, 3, 1, rate, 32), data]));
}

async function main(): Promise<void> {
  fs.mkdirSync(path.join(TESTDATA, "golden"), { recursive: true });
  writePcm16(path.join(TESTDATA, "spkA_u00.wav"), synthSignal(0.6, 16000, 140, 1), 16000, 1);
  writePcm16(path.join(TESTDATA, "spkA_u01.wav"), synthSignal(0.5, 48000, 155, 2), 48000, 2);
  writeFloat32(path.join(TESTDATA, "spkB_u00.wav"), synthSignal(0.7, 22050, 210, 3), 22050);

  const manifest = [
    "utterance_id\tspeaker_id\tgender\tpath",
    "spkA_u00\tspkA\tM\tspkA_u00.wav",
    "spkA_u01\tspkA\tM\tspkA_u01.wav",
    "spkB_u00\tspkB\tF\tspkB_u00.wav",
  ].join("\n") + "\n";
  fs.writeFileSync(path.join(TESTDATA, "audio_manifest.tsv"), manifest);

  const n = await runExtraction({
    audioManifest: path.join(TESTDATA, "audio_manifest.tsv"),
    outManifest: path.join(TESTDATA, "golden", "embeddings.tsv"),
    outBlob: path.join(TESTDATA, "golden", "embeddings.blob"),
    encoder: new LocalSpectralEncoder(),
  });
  console.log(`wrote ${n} golden embeddings`);
}

main().catch((err) => {
  console.error(err);
  process.exit(1);
});
