/**
 * Process plumbing for the absmath CLI.
 *
 * Every operation in this package is a thin shell around one CLI
 * invocation; nothing numeric happens on the Node side. The CLI speaks
 * JSON on stdout and, for domain failures, a single structured JSON
 * object on stderr with exit code 1 (exit code 2 is a usage error).
 */

import { spawn } from "node:child_process";

/** Domain error relayed from the CLI, optionally tagged with the batch row. */
export class AbsmathError extends Error {
  /** Error class name as reported by the CLI, e.g. "GoldInvalid". */
  readonly errorName: string;
  /** Human-readable detail string from the CLI. */
  readonly detail: string;
  /** Index of the batch row that failed, when the call was row-scoped. */
  readonly index?: number;

  constructor(errorName: string, detail: string, index?: number) {
    super(
      index === undefined
        ? `${errorName}: ${detail}`
        : `${errorName} at row ${index}: ${detail}`
    );
    this.name = errorName;
    this.errorName = errorName;
    this.detail = detail;
    this.index = index;
  }
}

export interface RunResult {
  stdout: string;
  stderr: string;
  code: number;
}

/** Name or path of the CLI executable; override with ABSMATH_BIN. */
export function cliBinary(): string {
  return process.env.ABSMATH_BIN ?? "absmath";
}

/** Run the CLI once, optionally feeding a payload to stdin. */
export function runCli(args: string[], stdin?: string): Promise<RunResult> {
  return new Promise((resolve, reject) => {
    const child = spawn(cliBinary(), args, {
      stdio: ["pipe", "pipe", "pipe"],
    });
    let stdout = "";
    let stderr = "";
    child.stdout.setEncoding("utf-8");
    child.stderr.setEncoding("utf-8");
    child.stdout.on("data", (chunk: string) => (stdout += chunk));
    child.stderr.on("data", (chunk: string) => (stderr += chunk));
    child.on("error", (err: NodeJS.ErrnoException) => {
      if (err.code === "ENOENT") {
        reject(
          new AbsmathError(
            "CliNotFound",
            `${cliBinary()} is not on PATH; install the Python package or set ABSMATH_BIN`
          )
        );
      } else {
        reject(err);
      }
    });
    child.on("close", (code) => {
      resolve({ stdout, stderr, code: code ?? -1 });
    });
    if (stdin !== undefined) {
      child.stdin.write(stdin);
    }
    child.stdin.end();
  });
}

/**
 * Parse the CLI's structured stderr into an AbsmathError. Falls back to a
 * generic error when stderr is not the expected JSON object.
 */
function errorFrom(result: RunResult, index?: number): AbsmathError {
  const line = result.stderr.trim().split("\n").pop() ?? "";
  try {
    const doc = JSON.parse(line) as { error?: string; detail?: string };
    if (typeof doc.error === "string") {
      return new AbsmathError(doc.error, doc.detail ?? "", index);
    }
  } catch {
    // fall through to the generic shape
  }
  return new AbsmathError("CliError", result.stderr.trim() || "unknown failure", index);
}

/**
 * Run the CLI and return stdout split into parsed JSON lines.
 * Exit code 1 becomes an AbsmathError carrying the CLI's error name;
 * exit code 2 becomes a UsageError.
 */
export async function runJsonLines(
  args: string[],
  stdin?: string,
  index?: number
): Promise<unknown[]> {
  const result = await runCli(args, stdin);
  if (result.code === 2) {
    throw new AbsmathError("UsageError", result.stderr.trim(), index);
  }
  if (result.code !== 0) {
    throw errorFrom(result, index);
  }
  return result.stdout
    .split("\n")
    .filter((line) => line.trim().length > 0)
    .map((line) => JSON.parse(line));
}

/** Run the CLI expecting exactly one JSON object on stdout. */
export async function runJson(
  args: string[],
  stdin?: string,
  index?: number
): Promise<Record<string, unknown>> {
  const lines = await runJsonLines(args, stdin, index);
  if (lines.length !== 1) {
    throw new AbsmathError(
      "ProtocolError",
      `expected one JSON object, got ${lines.length} lines`,
      index
    );
  }
  return lines[0] as Record<string, unknown>;
}
