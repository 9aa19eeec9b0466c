// Process boundary to the native toolkit. Every bound op becomes one
// `sedkit bound-call` invocation exchanging the documented file formats
// inside a throwaway temp directory.

import { spawnSync } from "node:child_process";
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import { SedkitNativeError } from "./types.js";

/** Version of the native library these bindings mirror. */
export const NATIVE_VERSION = "0.1.0";

function cliCommand(): string[] {
  const override = process.env.SEDKIT_CLI;
  if (override && override.trim()) {
    return override.trim().split(/\s+/);
  }
  return ["sedkit"];
}

export function nativeVersion(): string {
  const [cmd, ...pre] = cliCommand();
  const result = spawnSync(cmd, [...pre, "--version"], { encoding: "utf8" });
  if (result.status !== 0) {
    throw new SedkitNativeError("CliUnavailable", result.stderr || "sedkit CLI not found");
  }
  return result.stdout.trim().replace(/^sedkit\s+/, "");
}

export interface BoundCallArgs {
  op: string;
  config?: unknown;
  seed?: number | bigint;
  stream?: number | bigint;
  /** populate the op's input directory before the call */
  prepare: (inDir: string) => void;
  /** read the op's results out of the output directory */
  collect: <T>(outDir: string) => T;
}

export function boundCall<T>(args: BoundCallArgs): T {
  const work = fs.mkdtempSync(path.join(os.tmpdir(), "sedkit-bind-"));
  try {
    const inDir = path.join(work, "in");
    const outDir = path.join(work, "out");
    fs.mkdirSync(inDir);
    args.prepare(inDir);

    const argv = ["bound-call", "--op", args.op, "--in", inDir, "--out", outDir];
    if (args.config !== undefined) {
      const cfgPath = path.join(work, "config.json");
      fs.writeFileSync(cfgPath, JSON.stringify(args.config) + "\n");
      argv.push("--config", cfgPath);
    }
    if (args.seed !== undefined) {
      argv.push("--seed", args.seed.toString());
    }
    if (args.stream !== undefined) {
      argv.push("--stream", args.stream.toString());
    }

    const [cmd, ...pre] = cliCommand();
    const result = spawnSync(cmd, [...pre, ...argv], { encoding: "utf8" });
    if (result.error) {
      throw new SedkitNativeError("CliUnavailable", String(result.error.message));
    }
    if (result.status !== 0) {
      throw parseNativeError(result.stderr ?? "", result.status ?? -1);
    }
    return args.collect(outDir);
  } finally {
    fs.rmSync(work, { recursive: true, force: true });
  }
}

function parseNativeError(stderr: string, status: number): SedkitNativeError {
  for (const line of stderr.trim().split("\n").reverse()) {
    try {
      const payload = JSON.parse(line);
      if (payload && payload.error && payload.error.name) {
        return new SedkitNativeError(payload.error.name, payload.error.message);
      }
    } catch {
      // not a JSON line; keep scanning
    }
  }
  return new SedkitNativeError("NativeError", `sedkit exited with status ${status}: ${stderr.trim()}`);
}
