import * as fs from "node:fs";
import * as http from "node:http";
import * as os from "node:os";
import * as path from "node:path";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import {
  EMBEDDING_DIM,
  FacodecServiceEncoder,
  LocalSpectralEncoder,
  selectEncoder,
} from "../src/encoder";
import { runExtraction } from "../src/extract";
import { readAudioManifest, writeStore } from "../src/store";
import { decodeWav, resampleTo } from "../src/wav";

const TESTDATA = path.resolve(__dirname, "..", "testdata");
const GOLDEN = path.join(TESTDATA, "golden");

let tmpDir: string;

beforeAll(() => {
  tmpDir = fs.mkdtempSync(path.join(os.tmpdir(), "qvtad-extractor-"));
});

afterAll(() => {
  fs.rmSync(tmpDir, { recursive: true, force: true });
});

describe("wav decoding", () => {
  it("reads 16 kHz mono PCM16", () => {
    const audio = decodeWav(fs.readFileSync(path.join(TESTDATA, "spkA_u00.wav")));
    expect(audio.sampleRate).toBe(16000);
    expect(audio.samples.length).toBeGreaterThan(8000);
    expect(Math.max(...audio.samples)).toBeLessThanOrEqual(1.0);
  });

  it("mixes stereo down to mono", () => {
    const audio = decodeWav(fs.readFileSync(path.join(TESTDATA, "spkA_u01.wav")));
    expect(audio.sampleRate).toBe(48000);
    expect(audio.samples.length).toBeGreaterThan(10000);
  });

  it("reads float32 wavs", () => {
    const audio = decodeWav(fs.readFileSync(path.join(TESTDATA, "spkB_u00.wav")));
    expect(audio.sampleRate).toBe(22050);
  });

  it("rejects non-wav bytes", () => {
    expect(() => decodeWav(Buffer.from("definitely not audio"))).toThrow(/RIFF/);
  });
});

describe("resampling", () => {
  it("is the identity at the target rate", () => {
    const audio = decodeWav(fs.readFileSync(path.join(TESTDATA, "spkA_u00.wav")));
    expect(resampleTo(audio, 16000)).toBe(audio);
  });

  it("converts 48 kHz to 16 kHz with a third of the samples", () => {
    const audio = decodeWav(fs.readFileSync(path.join(TESTDATA, "spkA_u01.wav")));
    const resampled = resampleTo(audio, 16000);
    expect(resampled.sampleRate).toBe(16000);
    const expected = Math.floor(audio.samples.length / 3);
    expect(Math.abs(resampled.samples.length - expected)).toBeLessThanOrEqual(1);
  });
});

describe("local encoder", () => {
  const encoder = new LocalSpectralEncoder();

  it("produces 256 finite dims, unit length", async () => {
    const audio = resampleTo(
      decodeWav(fs.readFileSync(path.join(TESTDATA, "spkA_u00.wav"))), 16000);
    const emb = await encoder.encode(audio.samples, "x");
    expect(emb.length).toBe(EMBEDDING_DIM);
    expect(emb.every(Number.isFinite)).toBe(true);
    const norm = Math.sqrt(emb.reduce((acc, v) => acc + v * v, 0));
    expect(norm).toBeCloseTo(1.0, 9);
  });

  it("is deterministic: same audio twice gives identical vectors", async () => {
    const audio = resampleTo(
      decodeWav(fs.readFileSync(path.join(TESTDATA, "spkB_u00.wav"))), 16000);
    const a = await encoder.encode(audio.samples, "x");
    const b = await encoder.encode(audio.samples, "x");
    expect(Array.from(a)).toEqual(Array.from(b));
  });

  it("separates different audio", async () => {
    const a = await encoder.encode(resampleTo(
      decodeWav(fs.readFileSync(path.join(TESTDATA, "spkA_u00.wav"))), 16000).samples, "a");
    const b = await encoder.encode(resampleTo(
      decodeWav(fs.readFileSync(path.join(TESTDATA, "spkB_u00.wav"))), 16000).samples, "b");
    const dot = a.reduce((acc, v, i) => acc + v * b[i], 0);
    expect(Math.abs(dot)).toBeLessThan(0.99);
  });
});

describe("service encoder", () => {
  it("returns the service's embedding and passes the device along", async () => {
    let seenDevice = "";
    const vector = Array.from({ length: EMBEDDING_DIM }, (_, i) => i / EMBEDDING_DIM);
    const server = http.createServer((req, res) => {
      seenDevice = new URL(req.url!, "http://x").searchParams.get("device") ?? "";
      res.writeHead(200, { "content-type": "application/json" });
      res.end(JSON.stringify({ embedding: vector }));
    });
    await new Promise<void>((resolve) => server.listen(0, resolve));
    const port = (server.address() as { port: number }).port;
    try {
      const encoder = new FacodecServiceEncoder({
        endpoint: `http://127.0.0.1:${port}/encode`,
        device: "cuda:1",
      });
      const emb = await encoder.encode(new Float64Array(1600), "utt");
      expect(Array.from(emb)).toEqual(vector);
      expect(seenDevice).toBe("cuda:1");
    } finally {
      server.close();
    }
  });

  it("rejects wrong dimensionality", async () => {
    const server = http.createServer((_req, res) => {
      res.writeHead(200, { "content-type": "application/json" });
      res.end(JSON.stringify({ embedding: [1, 2, 3] }));
    });
    await new Promise<void>((resolve) => server.listen(0, resolve));
    const port = (server.address() as { port: number }).port;
    try {
      const encoder = new FacodecServiceEncoder({
        endpoint: `http://127.0.0.1:${port}/encode`,
        device: "cpu",
      });
      await expect(encoder.encode(new Float64Array(160), "utt")).rejects.toThrow(/dims/);
    } finally {
      server.close();
    }
  });

  it("selectEncoder picks the service only when an endpoint exists", () => {
    expect(selectEncoder(undefined, "cpu").name).toBe("local-spectral");
    expect(selectEncoder("http://example/encode", "cpu").name).toBe("facodec-service");
  });
});

describe("store writer", () => {
  it("reproduces the golden files byte for byte", async () => {
    const manifest = path.join(tmpDir, "embeddings.tsv");
    const blob = path.join(tmpDir, "embeddings.blob");
    const n = await runExtraction({
      audioManifest: path.join(TESTDATA, "audio_manifest.tsv"),
      outManifest: manifest,
      outBlob: blob,
      encoder: new LocalSpectralEncoder(),
    });
    expect(n).toBe(3);
    expect(fs.readFileSync(blob)).toEqual(
      fs.readFileSync(path.join(GOLDEN, "embeddings.blob")));
    expect(fs.readFileSync(manifest, "utf-8")).toEqual(
      fs.readFileSync(path.join(GOLDEN, "embeddings.tsv"), "utf-8"));
  });

  it("writes offsets in bytes and the declared dim per row", () => {
    const manifest = path.join(tmpDir, "small.tsv");
    const blob = path.join(tmpDir, "small.blob");
    writeStore(manifest, blob, [
      { utteranceId: "u0", speakerId: "s0", gender: "M", values: new Float64Array(4).fill(0.5) },
      { utteranceId: "u1", speakerId: "s0", gender: "M", values: new Float64Array(4).fill(-1) },
    ]);
    const lines = fs.readFileSync(manifest, "utf-8").trim().split("\n");
    expect(lines[0]).toBe("#blob=small.blob");
    expect(lines[1]).toBe("#dim=4");
    expect(lines[3]).toBe("u0\ts0\tM\t0\t4");
    expect(lines[4]).toBe("u1\ts0\tM\t16\t4");
    expect(fs.statSync(blob).size).toBe(32);
  });

  it("rejects duplicates and non-finite values", () => {
    const row = {
      utteranceId: "u0", speakerId: "s0", gender: "M" as const,
      values: new Float64Array(2).fill(0.5),
    };
    expect(() => writeStore(path.join(tmpDir, "x.tsv"), path.join(tmpDir, "x.blob"),
                            [row, { ...row }])).toThrow(/duplicate/);
    expect(() => writeStore(path.join(tmpDir, "y.tsv"), path.join(tmpDir, "y.blob"),
                            [{ ...row, values: Float64Array.from([1, NaN]) }]))
      .toThrow(/non-finite/);
  });

  it("reads the audio manifest with resolved paths", () => {
    const rows = readAudioManifest(path.join(TESTDATA, "audio_manifest.tsv"));
    expect(rows.length).toBe(3);
    expect(rows[0].utteranceId).toBe("spkA_u00");
    expect(path.isAbsolute(rows[0].audioPath)).toBe(true);
    expect(fs.existsSync(rows[0].audioPath)).toBe(true);
  });
});
