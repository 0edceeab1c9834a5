#!/usr/bin/env node
/**
 * qvtad-extract: audio manifest -> embedding store (manifest + blob).
 *
 * Usage:
 *   qvtad-extract --audio-manifest audio.tsv --out-manifest emb.tsv \
 *       --out-blob emb.blob [--device cpu] [--endpoint http://facodec:8080/encode]
 *
 * With --endpoint (or FACODEC_ENDPOINT) the frozen FACodec timbre encoder
 * service performs the encoding; otherwise a deterministic local spectral
 * encoder produces format-compatible stand-in vectors.
 */

import { selectEncoder } from "./encoder";
import { runExtraction } from "./extract";

interface CliArgs {
  audioManifest: string;
  outManifest: string;
  outBlob: string;
  device: string;
  endpoint?: string;
}

function parseArgs(argv: string[]): CliArgs {
  const values = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    const flag = argv[i];
    if (!flag.startsWith("--") || i + 1 >= argv.length) {
      throw new Error(`bad argument ${flag}; flags are --name value`);
    }
    values.set(flag.slice(2), argv[i + 1]);
  }
  const known = new Set(["audio-manifest", "out-manifest", "out-blob", "device", "endpoint"]);
  for (const key of values.keys()) {
    if (!known.has(key)) throw new Error(`unknown flag --${key}`);
  }
  for (const required of ["audio-manifest", "out-manifest", "out-blob"]) {
    if (!values.has(required)) throw new Error(`missing required flag --${required}`);
  }
  return {
    audioManifest: values.get("audio-manifest")!,
    outManifest: values.get("out-manifest")!,
    outBlob: values.get("out-blob")!,
    device: values.get("device") ?? "cpu",
    endpoint: values.get("endpoint"),
  };
}

async function main(): Promise<number> {
  let args: CliArgs;
  try {
    args = parseArgs(process.argv.slice(2));
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    return 2;
  }
  const encoder = selectEncoder(args.endpoint, args.device);
  console.error(`encoder: ${encoder.name}`);
  try {
    const n = await runExtraction({
      audioManifest: args.audioManifest,
      outManifest: args.outManifest,
      outBlob: args.outBlob,
      encoder,
    });
    console.error(`wrote ${n} embeddings to ${args.outManifest}`);
    return 0;
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    return 1;
  }
}

main().then((code) => {
  process.exitCode = code;
});
