/**
 * absmath-bindings
 *
 * Batch grading and group-relative advantage math for RL training loops,
 * backed by the absmath command line tool. All arithmetic runs in the
 * primary package over exact rationals; values cross this boundary as the
 * CLI's own JSON strings (rationals stay strings like "5/2"), so results
 * are bit-identical to driving the CLI by hand.
 *
 * @remarks No math is reimplemented here by design. Each call spawns the
 * CLI; batch grading fans rows out across a bounded worker pool and
 * reassembles results in input order.
 */

import { mkdtemp, rm, writeFile } from "node:fs/promises";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { AbsmathError, runCli, runJson, runJsonLines } from "./runner.js";

export { AbsmathError } from "./runner.js";

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

/** One answer to grade against its gold reference. */
export interface GradeRow {
  /** Candidate answer text containing delimited derivations. */
  answer: string;
  /** Gold answer text; must itself retrieve and solve. */
  gold: string;
  /** Symbol bindings, e.g. { in0: "16", in1: "3" }. Values are rational strings. */
  conditions: Record<string, string>;
  /**
   * Expected final value as a rational string. Optional: when omitted the
   * grader derives it by solving the gold text.
   */
  goldAnswer?: string;
}

/** Reward magnitudes; defaults mirror the CLI (2.5 answer, 1.5 symbolic). */
export interface RewardConfig {
  rCorrect?: number;
  rMax?: number;
}

/** Grading result for one row. Rational fields stay exact strings. */
export interface RewardBreakdown {
  rAnswer: string;
  rSymbolic: string;
  total: string;
  editDistance: number;
  maxLen: number;
  derivedAnswer: string | null;
  failure: string | null;
}

export interface BatchGradeOptions {
  config?: RewardConfig;
  /** Upper bound on concurrent CLI processes (default 8, min 1). */
  workers?: number;
}

export interface BatchGradeResult {
  /** One breakdown per input row, in input order. */
  breakdowns: RewardBreakdown[];
  /** Group-normalized advantages over the totals, in input order. */
  advantages: number[];
}

/** Log-likelihoods for one sampled completion. */
export interface LikelihoodSample {
  logpPolicy: number;
  logpOld?: number;
  logpRef?: number;
}

export interface ObjectiveOptions {
  epsilon?: number;
  beta?: number;
}

/** Result of retrieving derivations from delimited answer text. */
export interface Retrieved {
  derivations: string[];
  final: string | null;
  finalLiteral: string | null;
}

/** Result of solving an abstraction under concrete conditions. */
export interface Solved {
  assignments: Record<string, string>;
  finalAnswer: string | null;
}

/** A dataset row for gold-consistency verification. */
export interface InstanceRecord {
  id: string;
  question: string;
  goldAnswer: string;
  abstractQuestion: string;
  conditions: Record<string, string>;
  goldAbstractAnswer: string;
}

export interface Verdict {
  passed: boolean;
  reason: string | null;
  derived: string | null;
}

// ---------------------------------------------------------------------------
// Grading
// ---------------------------------------------------------------------------

function toBreakdown(doc: Record<string, unknown>): RewardBreakdown {
  return {
    rAnswer: doc.r_answer as string,
    rSymbolic: doc.r_symbolic as string,
    total: doc.total as string,
    editDistance: doc.edit_distance as number,
    maxLen: doc.max_len as number,
    derivedAnswer: (doc.derived_answer ?? null) as string | null,
    failure: (doc.failure ?? null) as string | null,
  };
}

function configArgs(config?: RewardConfig): string[] {
  const args: string[] = [];
  if (config?.rCorrect !== undefined) {
    args.push("--r-correct", String(config.rCorrect));
  }
  if (config?.rMax !== undefined) {
    args.push("--r-max", String(config.rMax));
  }
  return args;
}

/** Grade a single answer. Domain failures raise AbsmathError. */
export async function gradeOne(
  row: GradeRow,
  config?: RewardConfig,
  index?: number
): Promise<RewardBreakdown> {
  const args = [
    "grade",
    "--answer-text",
    row.answer,
    "--gold-text",
    row.gold,
    "--conditions",
    JSON.stringify(row.conditions),
    ...configArgs(config),
  ];
  if (row.goldAnswer !== undefined) {
    args.push("--gold-answer", row.goldAnswer);
  }
  return toBreakdown(await runJson(args, undefined, index));
}

/**
 * Grade a whole candidate group and normalize the totals into advantages.
 *
 * Rows are graded concurrently (bounded by `workers`) and results keep the
 * input order. A failing row rejects the whole call with the CLI's error
 * name and the row index attached. Groups need at least two rows; smaller
 * requests are rejected before any process is spawned.
 */
export async function batchGrade(
  rows: GradeRow[],
  options?: BatchGradeOptions
): Promise<BatchGradeResult> {
  if (rows.length < 2) {
    throw new AbsmathError(
      "GroupTooSmall",
      `got ${rows.length} row(s), need at least 2`
    );
  }
  const workers = Math.max(1, Math.min(options?.workers ?? 8, rows.length));
  const breakdowns: RewardBreakdown[] = new Array(rows.length);
  let cursor = 0;
  const drain = async (): Promise<void> => {
    while (true) {
      const i = cursor++;
      if (i >= rows.length) {
        return;
      }
      breakdowns[i] = await gradeOne(rows[i], options?.config, i);
    }
  };
  await Promise.all(Array.from({ length: workers }, drain));
  const advantages = await groupAdvantages(breakdowns.map((b) => b.total));
  return { breakdowns, advantages };
}

// ---------------------------------------------------------------------------
// GRPO math
// ---------------------------------------------------------------------------

/**
 * Normalize a reward group to mean 0, population std 1. Rewards may be
 * numbers or rational strings straight out of grading.
 */
export async function groupAdvantages(
  rewards: Array<number | string>
): Promise<number[]> {
  const doc = await runJson(["grpo-check"], JSON.stringify({ rewards }));
  return doc.advantages as number[];
}

function sampleToJson(sample: LikelihoodSample, advantage: number) {
  return {
    logp_policy: sample.logpPolicy,
    logp_old: sample.logpOld ?? sample.logpPolicy,
    logp_ref: sample.logpRef ?? sample.logpPolicy,
    advantage,
  };
}

/** Per-sample KL estimate to the reference policy; always >= 0. */
export async function klEstimate(
  samples: LikelihoodSample[]
): Promise<number[]> {
  const payload = { samples: samples.map((s) => sampleToJson(s, 0)) };
  const doc = await runJson(["grpo-check"], JSON.stringify(payload));
  return doc.kl as number[];
}

/** Clipped surrogate objective minus the KL penalty, averaged over samples. */
export async function grpoObjective(
  samples: Array<LikelihoodSample & { advantage: number }>,
  options?: ObjectiveOptions
): Promise<number> {
  const payload: Record<string, unknown> = {
    samples: samples.map((s) => sampleToJson(s, s.advantage)),
  };
  if (options?.epsilon !== undefined) {
    payload.epsilon = options.epsilon;
  }
  if (options?.beta !== undefined) {
    payload.beta = options.beta;
  }
  const doc = await runJson(["grpo-check"], JSON.stringify(payload));
  return doc.objective as number;
}

// ---------------------------------------------------------------------------
// Pipeline stages
// ---------------------------------------------------------------------------

/** Extract delimited derivations and the final symbol from answer text. */
export async function retrieve(text: string): Promise<Retrieved> {
  const doc = await runJson(["retrieve", "--text", text]);
  return {
    derivations: doc.derivations as string[],
    final: (doc.final ?? null) as string | null,
    finalLiteral: (doc.final_literal ?? null) as string | null,
  };
}

/**
 * Solve a compact abstraction ("in0*in1=out0 out0+in2=out1") under the
 * given conditions. Exact rational assignments come back as strings.
 */
export async function solve(
  abstraction: string,
  conditions: Record<string, string>,
  finalSymbol?: string
): Promise<Solved> {
  const args = [
    "solve",
    "--abstraction",
    abstraction,
    "--conditions",
    JSON.stringify(conditions),
  ];
  if (finalSymbol !== undefined) {
    args.push("--final", finalSymbol);
  }
  const doc = await runJson(args);
  return {
    assignments: doc.assignments as Record<string, string>,
    finalAnswer: (doc.final_answer ?? null) as string | null,
  };
}

/** Check that an instance's gold abstraction reproduces its gold answer. */
export async function verifyInstance(
  instance: InstanceRecord
): Promise<Verdict> {
  const row = {
    id: instance.id,
    question: instance.question,
    gold_answer: instance.goldAnswer,
    abstract_question: instance.abstractQuestion,
    conditions: instance.conditions,
    gold_abstract_answer: instance.goldAbstractAnswer,
  };
  const dir = await mkdtemp(join(tmpdir(), "absmath-bindings-"));
  try {
    const path = join(dir, "instance.jsonl");
    await writeFile(path, JSON.stringify(row) + "\n", "utf-8");
    const lines = await runJsonLines(["verify-data", "--input", path]);
    const doc = lines[0] as Record<string, unknown>;
    return {
      passed: doc.passed as boolean,
      reason: (doc.reason ?? null) as string | null,
      derived: (doc.derived ?? null) as string | null,
    };
  } finally {
    await rm(dir, { recursive: true, force: true });
  }
}

/** Version string of the backing CLI, e.g. "absmath 0.1.0". */
export async function cliVersion(): Promise<string> {
  const result = await runCli(["--version"]);
  if (result.code !== 0) {
    throw new AbsmathError("CliError", result.stderr.trim());
  }
  return result.stdout.trim();
}
