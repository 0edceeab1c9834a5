/**
 * Embedding store writer, byte-compatible with the Python toolkit:
 * TSV manifest (#blob=/#dim= headers) plus a little-endian float32 blob.
 */

import * as fs from "node:fs";
import * as path from "node:path";

export interface StoreRow {
  utteranceId: string;
  speakerId: string;
  gender: "M" | "F";
  values: Float64Array;
}

const HEADER = "utterance_id\tspeaker_id\tgender\toffset\tdim";

export function writeStore(manifestPath: string, blobPath: string, rows: StoreRow[]): void {
  if (rows.length === 0) throw new Error("refusing to write an empty embedding store");
  const dim = rows[0].values.length;
  for (const row of rows) {
    if (row.values.length !== dim) {
      throw new Error(`inconsistent dims: ${row.utteranceId} has ${row.values.length}, expected ${dim}`);
    }
    for (const v of row.values) {
      if (!Number.isFinite(v)) throw new Error(`non-finite value in ${row.utteranceId}`);
    }
  }
  const seen = new Set<string>();
  for (const row of rows) {
    if (seen.has(row.utteranceId)) throw new Error(`duplicate utterance_id ${row.utteranceId}`);
    seen.add(row.utteranceId);
  }

  const blobName = path.basename(blobPath);
  const lines = [`#blob=${blobName}`, `#dim=${dim}`, HEADER];
  const blob = Buffer.alloc(rows.length * dim * 4);
  let offset = 0;
  for (const row of rows) {
    lines.push(`${row.utteranceId}\t${row.speakerId}\t${row.gender}\t${offset}\t${dim}`);
    for (let d = 0; d < dim; d++) {
      blob.writeFloatLE(Math.fround(row.values[d]), offset + d * 4);
    }
    offset += dim * 4;
  }
  fs.writeFileSync(blobPath, blob);
  fs.writeFileSync(manifestPath, lines.join("\n") + "\n", { encoding: "utf-8" });
}

export interface AudioManifestRow {
  utteranceId: string;
  speakerId: string;
  gender: "M" | "F";
  audioPath: string; // resolved against the manifest directory
}

export function readAudioManifest(manifestPath: string): AudioManifestRow[] {
  const dir = path.dirname(manifestPath);
  const text = fs.readFileSync(manifestPath, "utf-8");
  const rows: AudioManifestRow[] = [];
  const lines = text.split("\n");
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i].trim();
    if (!line || line.startsWith("#")) continue;
    if (line === "utterance_id\tspeaker_id\tgender\tpath") continue;
    const parts = line.split("\t");
    if (parts.length !== 4) {
      throw new Error(`${manifestPath}:${i + 1}: expected 4 tab-separated columns`);
    }
    const [utteranceId, speakerId, gender, audioPath] = parts;
    if (gender !== "M" && gender !== "F") {
      throw new Error(`${manifestPath}:${i + 1}: gender must be M or F, got ${gender}`);
    }
    rows.push({
      utteranceId,
      speakerId,
      gender,
      audioPath: path.resolve(dir, audioPath),
    });
  }
  if (rows.length === 0) throw new Error(`${manifestPath}: no audio rows`);
  return rows;
}
