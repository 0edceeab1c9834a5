/** Extraction job: audio manifest in, embedding store out. */

import * as fs from "node:fs";

import { Encoder, EMBEDDING_DIM, TARGET_SAMPLE_RATE } from "./encoder";
import { decodeWav, resampleTo } from "./wav";
import { readAudioManifest, StoreRow, writeStore } from "./store";

export interface ExtractionJob {
  audioManifest: string;
  outManifest: string;
  outBlob: string;
  encoder: Encoder;
}

export async function runExtraction(job: ExtractionJob): Promise<number> {
  const rows = readAudioManifest(job.audioManifest);
  const out: StoreRow[] = [];
  for (const row of rows) {
    const audio = resampleTo(decodeWav(fs.readFileSync(row.audioPath)), TARGET_SAMPLE_RATE);
    const values = await job.encoder.encode(audio.samples, row.utteranceId);
    if (values.length !== EMBEDDING_DIM) {
      throw new Error(
        `${row.utteranceId}: encoder produced ${values.length} dims, expected ${EMBEDDING_DIM}`);
    }
    out.push({
      utteranceId: row.utteranceId,
      speakerId: row.speakerId,
      gender: row.gender,
      values,
    });
  }
  writeStore(job.outManifest, job.outBlob, out);
  return out.length;
}
