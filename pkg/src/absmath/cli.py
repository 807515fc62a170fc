"""Command-line interface to the abstraction pipeline.

Subcommands cover the pipeline stages (recognize, retrieve, solve), grading
and data verification, perturbation generation, robustness evaluation, the
replayable rewrite pipeline, and a GRPO calculator. JSON lines are the
universal inter-command format. Every run that writes an output file also
writes `<output>.manifest.json` recording the command, configuration, seed,
and package version.

Exit codes: 0 success, 1 domain error (structured JSON on stderr), 2 usage.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Iterable, Optional, Sequence

from . import __version__
from .core import (
    Abstraction,
    ConditionSet,
    Derivation,
    Instance,
    Number,
    Symbol,
)
from .errors import AbsMathError, GoldInvalid
from .grpo import GrpoConfig, LikelihoodTriple, group_advantages, grpo_objective, kl_estimate
from .harness import (
    MODE_ABSTRAL,
    NoisyReasoner,
    OracleReasoner,
    SCORING_MODES,
    delta_drop,
    evaluate,
    format_table,
)
from .perturb import (
    Perturbation,
    baseline_instance,
    derive_seed,
    generate,
    instance_from_record,
    instance_record,
    load_templates,
)
from .recognize import ImplicitNumberLexicon, recognize
from .retrieval import retrieve
from .rewards import RewardConfig, grade
from .solver import solve, verify_instance
from .client import Client, EndpointConfig, FixtureStore, Rejected, rewrite_pipeline

ORIGIN_KIND = "origin"
KIND_CHOICES = (ORIGIN_KIND,) + tuple(k.value for k in Perturbation)


def _fail(exc: Exception) -> int:
    name = type(exc).__name__
    print(json.dumps({"error": name, "detail": str(exc)}), file=sys.stderr)
    return 1


def _read_text(args) -> str:
    if getattr(args, "text", None) is not None:
        return args.text
    return Path(args.input).read_text(encoding="utf-8").strip()


def _read_jsonl(path: str) -> Iterable[dict]:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield json.loads(line)


def _manifest(args, output: str):
    skip = {"func", "command"}
    config = {
        k: v
        for k, v in vars(args).items()
        if k not in skip and v is not None and not callable(v)
    }
    manifest = {
        "command": args.command,
        "version": __version__,
        "seed": getattr(args, "seed", None),
        "config": config,
    }
    with open(f"{output}.manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _emit(args, payload_lines: list[str]):
    """Write result lines to --output (plus manifest) or stdout."""
    output = getattr(args, "output", None)
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            for line in payload_lines:
                fh.write(line + "\n")
        _manifest(args, output)
    else:
        for line in payload_lines:
            print(line)


def _load_conditions(spec: str) -> ConditionSet:
    """Accept a JSON object file, an inline JSON object, or inline pairs
    like "in0=24 in1=64"."""
    text = spec
    if os.path.exists(spec):
        text = Path(spec).read_text(encoding="utf-8").strip()
    text = text.strip()
    if text.startswith("{"):
        return ConditionSet.from_mapping(json.loads(text))
    mapping = {}
    for part in text.replace(",", " ").split():
        if "=" not in part:
            raise ValueError(f"condition {part!r} is not sym=value")
        sym, val = part.split("=", 1)
        mapping[sym.strip()] = val.strip()
    return ConditionSet.from_mapping(mapping)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_recognize(args) -> int:
    question = _read_text(args)
    if args.no_lexicon:
        lexicon = ImplicitNumberLexicon.empty()
    elif args.lexicon:
        lexicon = ImplicitNumberLexicon.load(args.lexicon)
    else:
        lexicon = ImplicitNumberLexicon.default()
    result = recognize(question, lexicon)
    _emit(args, [json.dumps(result.to_json())])
    return 0


def cmd_retrieve(args) -> int:
    text = _read_text(args)
    abstraction = retrieve(text)
    payload = {
        "derivations": [d.render() for d in abstraction.derivations],
        "final": abstraction.final.render() if abstraction.final else None,
        "final_literal": (
            abstraction.final_literal.render()
            if abstraction.final_literal is not None
            else None
        ),
    }
    _emit(args, [json.dumps(payload)])
    return 0


def _parse_abstraction(compact: str, final: Optional[str]) -> Abstraction:
    derivations = tuple(Derivation.parse(tok) for tok in compact.split())
    if final is not None:
        final_symbol = Symbol.parse(final)
    elif derivations:
        final_symbol = derivations[-1].defines
    else:
        final_symbol = None
    return Abstraction(derivations=derivations, final=final_symbol)


def cmd_solve(args) -> int:
    if args.abstraction is not None:
        abstraction = _parse_abstraction(args.abstraction, args.final)
    else:
        text = Path(args.answer).read_text(encoding="utf-8")
        abstraction = retrieve(text)
    conditions = _load_conditions(args.conditions)
    result = solve(abstraction, conditions)
    payload = {
        "assignments": {
            sym.render(): value.render() for sym, value in result.assignments.items()
        },
        "final_answer": (
            result.final_answer.render() if result.final_answer is not None else None
        ),
    }
    _emit(args, [json.dumps(payload)])
    return 0


def _reward_config(args) -> RewardConfig:
    return RewardConfig(r_correct=args.r_correct, r_max=args.r_max)


def _resolve_gold_answer(gold_text: str, conditions: ConditionSet, explicit) -> Number:
    """Parse an explicit expected value, or derive one by solving the gold."""
    if explicit is not None:
        return Number.parse(str(explicit))
    try:
        result = solve(retrieve(gold_text), conditions)
    except AbsMathError as exc:
        raise GoldInvalid(exc.describe()) from exc
    if result.final_answer is None:
        raise GoldInvalid("NoFinalAnswer")
    return result.final_answer


def cmd_grade(args) -> int:
    config = _reward_config(args)
    if args.batch:
        lines = []
        for row in _read_jsonl(args.batch):
            conditions = ConditionSet.from_mapping(row["conditions"])
            breakdown = grade(
                row["answer"],
                row["gold"],
                conditions,
                _resolve_gold_answer(row["gold"], conditions, row.get("gold_answer")),
                config,
            )
            payload = breakdown.to_json()
            if "id" in row:
                payload["id"] = row["id"]
            lines.append(json.dumps(payload))
        _emit(args, lines)
        return 0
    if args.answer is not None:
        answer_text = Path(args.answer).read_text(encoding="utf-8")
    else:
        answer_text = args.answer_text
    if args.gold is not None:
        gold_text = Path(args.gold).read_text(encoding="utf-8")
    else:
        gold_text = args.gold_text
    if answer_text is None or gold_text is None or args.conditions is None:
        raise ValueError("grade needs an answer, a gold answer text, and conditions")
    conditions = _load_conditions(args.conditions)
    breakdown = grade(
        answer_text,
        gold_text,
        conditions,
        _resolve_gold_answer(gold_text, conditions, args.gold_answer),
        config,
    )
    _emit(args, [json.dumps(breakdown.to_json())])
    return 0


def cmd_verify_data(args) -> int:
    lines = []
    kept_rows = []
    total = 0
    passed = 0
    for row in _read_jsonl(args.input):
        total += 1
        instance = Instance.from_json(row)
        if instance.gold_abstract_answer is None:
            verdict = {"id": instance.id, "passed": False, "reason": "MissingAbstractAnswer"}
        elif instance.conditions is None or instance.gold_answer is None:
            verdict = {"id": instance.id, "passed": False, "reason": "MissingConditions"}
        else:
            result = verify_instance(
                instance.gold_abstract_answer, instance.conditions, instance.gold_answer
            )
            verdict = result.to_json()
            verdict["id"] = instance.id
        if verdict["passed"]:
            passed += 1
            kept_rows.append(row)
        lines.append(json.dumps(verdict))
    _emit(args, lines)
    if args.keep:
        with open(args.keep, "w", encoding="utf-8") as fh:
            for row in kept_rows:
                fh.write(json.dumps(row) + "\n")
    print(f"kept {passed} of {total}", file=sys.stderr)
    return 0


def _generate_kind_round(templates, kind: str, round_no: int, master_seed: int):
    instances = []
    for template in templates:
        if kind == ORIGIN_KIND:
            instances.append(baseline_instance(template))
        else:
            seed = derive_seed(master_seed, round_no, template.id)
            instances.append(generate(template, Perturbation(kind), seed))
    return instances


def cmd_perturb(args) -> int:
    templates = load_templates(Path(args.templates))
    if not templates:
        raise ValueError(f"no templates found under {args.templates}")
    lines = []
    for round_no in range(args.rounds):
        for template in templates:
            if args.kind == ORIGIN_KIND:
                inst = baseline_instance(template)
                seed = args.seed
            else:
                seed = derive_seed(args.seed, round_no, template.id)
                inst = generate(template, Perturbation(args.kind), seed)
            lines.append(
                json.dumps(instance_record(inst, args.kind, round_no, seed))
            )
    _emit(args, lines)
    return 0


def _make_reasoner(args):
    if args.reasoner == "noisy":
        return NoisyReasoner(corruption=args.corruption, seed=args.noise_seed)
    return OracleReasoner()


def cmd_evaluate(args) -> int:
    reasoner = _make_reasoner(args)
    if args.input:
        rounds_map: dict[int, list[Instance]] = {}
        for row in _read_jsonl(args.input):
            rounds_map.setdefault(int(row.get("round", 0)), []).append(
                instance_from_record(row)
            )
        rounds = [rounds_map[k] for k in sorted(rounds_map)]
        report = evaluate(reasoner, rounds, mode=args.mode, max_workers=args.workers)
        _emit(args, [json.dumps(report.to_json())])
        return 0

    if not args.templates:
        raise ValueError("evaluate needs --input or --templates")
    templates = load_templates(Path(args.templates))
    if not templates:
        raise ValueError(f"no templates found under {args.templates}")
    kinds = [k.strip() for k in args.kinds.split(",") if k.strip()]
    for kind in kinds:
        if kind not in KIND_CHOICES:
            raise ValueError(f"unknown perturbation kind {kind!r}")

    origin_rounds = [
        _generate_kind_round(templates, ORIGIN_KIND, r, args.seed)
        for r in range(args.rounds)
    ]
    origin_report = evaluate(
        reasoner, origin_rounds, mode=args.mode, max_workers=args.workers
    )
    reports = {}
    for kind in kinds:
        if kind == ORIGIN_KIND:
            continue
        kind_rounds = [
            _generate_kind_round(templates, kind, r, args.seed)
            for r in range(args.rounds)
        ]
        report = evaluate(
            reasoner, kind_rounds, mode=args.mode, max_workers=args.workers
        )
        reports[kind] = report.with_baseline(origin_report.mean)

    print(format_table(reports, origin=origin_report), file=sys.stderr)
    payload = {
        "mode": args.mode,
        "rounds": args.rounds,
        "seed": args.seed,
        "reports": {
            ORIGIN_KIND: origin_report.to_json(),
            **{kind: report.to_json() for kind, report in reports.items()},
        },
    }
    _emit(args, [json.dumps(payload)])
    return 0


def cmd_rewrite(args) -> int:
    fixtures = FixtureStore.load(args.fixtures) if args.fixtures else None
    if args.max_requests is not None:
        budget = args.max_requests
    else:
        budget = 0 if fixtures is not None else None
    cfg = EndpointConfig(
        base_url=args.base_url,
        model=args.model,
        api_key_env=args.api_key_env,
        timeout=args.timeout,
        max_retries=args.max_retries,
        temperature=args.temperature,
        max_tokens=args.max_tokens,
        max_requests=budget,
    )
    client = Client(cfg, fixtures=fixtures, record_to=args.record)
    lines = []
    accepted = 0
    total = 0
    for row in _read_jsonl(args.instances):
        total += 1
        instance = Instance.from_json(row)
        outcome = rewrite_pipeline(client, instance)
        if isinstance(outcome, Rejected):
            payload = {
                "id": instance.id,
                "accepted": False,
                "stage": outcome.stage,
                "reason": outcome.reason,
            }
        else:
            accepted += 1
            payload = {"id": instance.id, "accepted": True, "text": outcome}
        lines.append(json.dumps(payload))
    _emit(args, lines)
    print(f"accepted {accepted} of {total}", file=sys.stderr)
    return 0


def cmd_grpo_check(args) -> int:
    if args.input:
        data = json.loads(Path(args.input).read_text(encoding="utf-8"))
    else:
        data = json.load(sys.stdin)
    config = GrpoConfig(
        epsilon=data.get("epsilon", args.epsilon),
        beta=data.get("beta", args.beta),
        group_size=data.get("group_size", args.group_size),
    )
    payload: dict = {}
    advantages = None
    if "rewards" in data:
        # grade emits rationals as strings ("5/2"); accept those alongside
        # plain numbers so grade output pipes straight in.
        rewards = [
            Number.parse(r).value if isinstance(r, str) else r for r in data["rewards"]
        ]
        advantages = group_advantages(rewards)
        payload["advantages"] = advantages
    samples = data.get("samples")
    if samples:
        triples = [
            LikelihoodTriple(
                logp_policy=s["logp_policy"],
                logp_old=s.get("logp_old", s["logp_policy"]),
                logp_ref=s.get("logp_ref", s["logp_policy"]),
            )
            for s in samples
        ]
        payload["kl"] = [kl_estimate(t) for t in triples]
        if advantages is None:
            advantages = [s["advantage"] for s in samples]
        if len(advantages) != len(triples):
            raise ValueError(
                f"{len(advantages)} advantages for {len(triples)} samples"
            )
        payload["objective"] = grpo_objective(list(zip(triples, advantages)), config)
    if not payload:
        raise ValueError("input needs rewards and/or samples")
    _emit(args, [json.dumps(payload)])
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="absmath",
        description=(
            "Abstraction pipeline for math word problems: recognize conditions, "
            "retrieve derivations, solve symbolically, grade, perturb, evaluate."
        ),
        epilog=(
            "Reward and optimizer defaults: r_correct 2.5, r_max 1.5, "
            "group size 16, epsilon 0.2, beta 0.04."
        ),
    )
    parser.add_argument("--version", action="version", version=f"absmath {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(
            name, help=help_text, formatter_class=argparse.ArgumentDefaultsHelpFormatter
        )
        p.set_defaults(func=func)
        return p

    p = add("recognize", cmd_recognize, "replace numerals with input placeholders")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--text", help="question text")
    src.add_argument("--input", help="file holding the question text")
    p.add_argument("--lexicon", help="TSV of implicit number phrases")
    p.add_argument("--no-lexicon", action="store_true", help="explicit numerals only")
    p.add_argument("--output", help="write the result here (plus manifest)")

    p = add("retrieve", cmd_retrieve, "extract derivation regions from answer text")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--text", help="answer text")
    src.add_argument("--input", help="file holding the answer text")
    p.add_argument("--output", help="write the result here (plus manifest)")

    p = add("solve", cmd_solve, "evaluate a derivation system over conditions")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--abstraction", help='compact form, e.g. "in0*in2=out0 in1-out0=out1"')
    src.add_argument("--answer", help="answer text file to retrieve from")
    p.add_argument("--conditions", required=True, help='JSON file/object or "in0=24 in1=64"')
    p.add_argument("--final", help="final symbol (default: last derivation's output)")
    p.add_argument("--output", help="write the result here (plus manifest)")

    p = add("grade", cmd_grade, "score an answer against gold text")
    p.add_argument("--answer", help="candidate answer text file")
    p.add_argument("--answer-text", help="candidate answer text inline")
    p.add_argument("--gold", help="gold answer text file")
    p.add_argument("--gold-text", help="gold answer text inline")
    p.add_argument("--conditions", help='JSON file/object or "in0=24 in1=64"')
    p.add_argument("--gold-answer", help="expected final value, e.g. 16 (default: solve the gold text)")
    p.add_argument("--batch", help="JSONL rows {answer, gold, conditions, gold_answer}")
    p.add_argument("--r-correct", default="2.5", help="reward for a correct final answer")
    p.add_argument("--r-max", default="1.5", help="maximum symbolic closeness reward")
    p.add_argument("--output", help="write results here (plus manifest)")

    p = add("verify-data", cmd_verify_data, "check gold abstract answers derive gold answers")
    p.add_argument("--input", required=True, help="JSONL of instance rows")
    p.add_argument("--keep", help="write only the passing rows here")
    p.add_argument("--output", help="write verdict rows here (plus manifest)")

    p = add("perturb", cmd_perturb, "generate perturbed instances from templates")
    p.add_argument("--templates", required=True, help="directory of template files")
    p.add_argument("--kind", required=True, choices=KIND_CHOICES, help="perturbation kind")
    p.add_argument("--rounds", type=int, default=1, help="evaluation rounds to generate")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--output", help="write JSONL rows here (plus manifest)")

    p = add("evaluate", cmd_evaluate, "score a reasoner over rounds of instances")
    p.add_argument("--input", help="JSONL instance records (grouped by round)")
    p.add_argument("--templates", help="generate rounds from this template directory")
    p.add_argument("--kinds", default="vary-num,vary-name,vary-both,distract",
                   help="comma-separated kinds for the robustness table")
    p.add_argument("--rounds", type=int, default=50, help="rounds to generate")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--mode", choices=SCORING_MODES, default=MODE_ABSTRAL,
                   help="answer scoring mode")
    p.add_argument("--reasoner", choices=("oracle", "noisy"), default="oracle",
                   help="reference reasoner")
    p.add_argument("--corruption", type=float, default=0.3,
                   help="per-instance corruption probability (noisy reasoner)")
    p.add_argument("--noise-seed", type=int, default=0, help="noisy reasoner seed")
    p.add_argument("--workers", type=int, default=8, help="reasoner thread pool size")
    p.add_argument("--output", help="write the JSON report here (plus manifest)")

    p = add("rewrite", cmd_rewrite, "two-stage abstract rewriting with verification gates")
    p.add_argument("--instances", required=True, help="JSONL of instance rows")
    p.add_argument("--fixtures", help="replay store (JSONL); implies offline")
    p.add_argument("--record", help="append live responses to this replay store")
    p.add_argument("--base-url", default="http://localhost:8000", help="endpoint base URL")
    p.add_argument("--model", default="oracle-rewriter", help="model name")
    p.add_argument("--api-key-env", help="environment variable holding the API key")
    p.add_argument("--timeout", type=float, default=30.0, help="request timeout seconds")
    p.add_argument("--max-retries", type=int, default=2, help="retries on transient failures")
    p.add_argument("--max-requests", type=int, help="request budget (0 = offline)")
    p.add_argument("--temperature", type=float, default=0.0, help="sampling temperature")
    p.add_argument("--max-tokens", type=int, default=1024, help="completion token cap")
    p.add_argument("--output", help="write outcome rows here (plus manifest)")

    p = add("grpo-check", cmd_grpo_check, "advantages, KL, and objective from JSON input")
    p.add_argument("--input", help="JSON file (default: stdin)")
    p.add_argument("--epsilon", type=float, default=0.2, help="clip range")
    p.add_argument("--beta", type=float, default=0.04, help="KL penalty coefficient")
    p.add_argument("--group-size", type=int, default=16, help="default group width")
    p.add_argument("--output", help="write the result here (plus manifest)")

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except AbsMathError as exc:
        return _fail(exc)
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        return _fail(exc)


if __name__ == "__main__":
    sys.exit(main())
