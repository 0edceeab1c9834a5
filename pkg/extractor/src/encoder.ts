/**
 * Timbre encoders producing one 256-dim vector per utterance.
 *
 * The real encoder is the frozen FACodec timbre stream, which lives behind an
 * inference service (the pretrained weights are a PyTorch artifact, not a
 * Node one): configure it with --endpoint or FACODEC_ENDPOINT and the wrapper
 * POSTs 16 kHz PCM and receives the per-frame timbre stream already
 * mean-pooled to one vector. Weights are never updated here - inference only.
 *
 * Without an endpoint a deterministic local spectral-projection encoder is
 * used instead. It is NOT FACodec - it exists so the file format, pooling and
 * pipeline plumbing can be exercised offline - but it is a real feature
 * pipeline: windowed DFT band energies projected through a fixed
 * pseudo-random matrix, mean-pooled over frames and length-normalized.
 */

import * as http from "node:http";
import * as https from "node:https";
import { URL } from "node:url";

export const EMBEDDING_DIM = 256;
export const TARGET_SAMPLE_RATE = 16000;

const FRAME_LEN = 400; // 25 ms at 16 kHz
const FRAME_HOP = 160; // 10 ms
const N_BANDS = 32;

export interface Encoder {
  readonly name: string;
  encode(samples: Float64Array, utteranceId: string): Promise<Float64Array>;
}

/** Deterministic 32-bit PRNG (splitmix32) for the fixed projection matrix. */
function splitmix32(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x9e3779b9) >>> 0;
    let z = state;
    z ^= z >>> 16;
    z = Math.imul(z, 0x21f0aaad);
    z ^= z >>> 15;
    z = Math.imul(z, 0x735a2d97);
    z ^= z >>> 15;
    return (z >>> 0) / 4294967296;
  };
}

function projectionMatrix(): Float64Array {
  const rand = splitmix32(0x5eed1234);
  const mat = new Float64Array(EMBEDDING_DIM * N_BANDS);
  for (let i = 0; i < mat.length; i++) {
    // uniform(-1, 1) scaled for unit-ish variance after the band reduction
    mat[i] = (rand() * 2 - 1) / Math.sqrt(N_BANDS);
  }
  return mat;
}

const PROJECTION = projectionMatrix();

/** Geometrically spaced band center frequencies, 100 Hz .. 7 kHz. */
function bandFrequencies(): Float64Array {
  const out = new Float64Array(N_BANDS);
  const lo = 100;
  const hi = 7000;
  for (let b = 0; b < N_BANDS; b++) {
    out[b] = lo * Math.pow(hi / lo, b / (N_BANDS - 1));
  }
  return out;
}

const BAND_FREQS = bandFrequencies();

function frameBandEnergies(samples: Float64Array, start: number): Float64Array {
  const out = new Float64Array(N_BANDS);
  for (let b = 0; b < N_BANDS; b++) {
    const omega = (2 * Math.PI * BAND_FREQS[b]) / TARGET_SAMPLE_RATE;
    let re = 0;
    let im = 0;
    for (let n = 0; n < FRAME_LEN; n++) {
      const idx = start + n;
      const x = idx < samples.length ? samples[idx] : 0;
      const w = 0.5 - 0.5 * Math.cos((2 * Math.PI * n) / (FRAME_LEN - 1)); // hann
      const v = x * w;
      re += v * Math.cos(omega * n);
      im -= v * Math.sin(omega * n);
    }
    out[b] = Math.log1p(re * re + im * im);
  }
  return out;
}

export class LocalSpectralEncoder implements Encoder {
  readonly name = "local-spectral";

  async encode(samples: Float64Array): Promise<Float64Array> {
    const nFrames = Math.max(1, 1 + Math.floor((samples.length - FRAME_LEN) / FRAME_HOP));
    const pooled = new Float64Array(EMBEDDING_DIM);
    for (let f = 0; f < nFrames; f++) {
      const bands = frameBandEnergies(samples, f * FRAME_HOP);
      for (let d = 0; d < EMBEDDING_DIM; d++) {
        let acc = 0;
        const row = d * N_BANDS;
        for (let b = 0; b < N_BANDS; b++) acc += PROJECTION[row + b] * bands[b];
        pooled[d] += Math.tanh(acc);
      }
    }
    let norm = 0;
    for (let d = 0; d < EMBEDDING_DIM; d++) {
      pooled[d] /= nFrames;
      norm += pooled[d] * pooled[d];
    }
    norm = Math.sqrt(norm) || 1;
    for (let d = 0; d < EMBEDDING_DIM; d++) pooled[d] /= norm;
    return pooled;
  }
}

export interface ServiceOptions {
  endpoint: string;
  device: string;
  timeoutMs?: number;
}

/** Frozen FACodec timbre stream behind an HTTP inference endpoint. */
export class FacodecServiceEncoder implements Encoder {
  readonly name = "facodec-service";
  private readonly opts: Required<ServiceOptions>;

  constructor(opts: ServiceOptions) {
    this.opts = { timeoutMs: 30_000, ...opts };
  }

  encode(samples: Float64Array, utteranceId: string): Promise<Float64Array> {
    const pcm = Buffer.alloc(samples.length * 4);
    for (let i = 0; i < samples.length; i++) pcm.writeFloatLE(samples[i], i * 4);
    const url = new URL(this.opts.endpoint);
    url.searchParams.set("device", this.opts.device);
    url.searchParams.set("sample_rate", String(TARGET_SAMPLE_RATE));
    url.searchParams.set("utterance", utteranceId);
    const client = url.protocol === "https:" ? https : http;

    return new Promise((resolve, reject) => {
      const req = client.request(
        url,
        {
          method: "POST",
          headers: {
            "content-type": "application/octet-stream",
            "content-length": pcm.length,
          },
          timeout: this.opts.timeoutMs,
        },
        (res) => {
          const parts: Buffer[] = [];
          res.on("data", (chunk) => parts.push(chunk));
          res.on("end", () => {
            if (res.statusCode !== 200) {
              reject(new Error(`encoder service returned ${res.statusCode}`));
              return;
            }
            try {
              const body = JSON.parse(Buffer.concat(parts).toString("utf-8"));
              if (!Array.isArray(body.embedding) || body.embedding.length !== EMBEDDING_DIM) {
                reject(new Error(
                  `encoder service returned ${body.embedding?.length ?? "no"} dims, ` +
                  `expected ${EMBEDDING_DIM}`));
                return;
              }
              resolve(Float64Array.from(body.embedding));
            } catch (err) {
              reject(new Error(`bad encoder service response: ${err}`));
            }
          });
        },
      );
      req.on("timeout", () => req.destroy(new Error("encoder service timed out")));
      req.on("error", reject);
      req.end(pcm);
    });
  }
}

export function selectEncoder(endpoint: string | undefined, device: string): Encoder {
  const resolved = endpoint ?? process.env.FACODEC_ENDPOINT;
  if (resolved) return new FacodecServiceEncoder({ endpoint: resolved, device });
  return new LocalSpectralEncoder();
}
