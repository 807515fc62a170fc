"""End-to-end acceptance checks.

Each test here is one verifiable claim about the toolkit, checked at full
stated strength: exact values where the contract is exact, explicit numeric
tolerances where it is statistical. One pass/fail line per claim under -v.
"""

import json
import math
import random
import time
from fractions import Fraction
from functools import lru_cache

import pytest

from absmath import (
    Abstraction,
    Client,
    ConditionSet,
    Derivation,
    EndpointConfig,
    FixtureStore,
    Instance,
    NoisyReasoner,
    Number,
    OracleReasoner,
    Perturbation,
    RewardConfig,
    Symbol,
    answer_reward,
    brute_force_check,
    delta_drop,
    evaluate,
    generate_round,
    grade,
    group_advantages,
    grpo_objective,
    kl_estimate,
    load_templates,
    recognize,
    reinstantiate,
    retrieve,
    rewrite_pipeline,
    score_answer,
    solve,
)
from absmath.client import Rejected
from absmath.errors import (
    BudgetExceeded,
    CyclicDependency,
    DivisionByZero,
    UndefinedSymbol,
)
from absmath.grpo import GrpoConfig, LikelihoodTriple
from absmath.retrieval import tokenize
from absmath.rewards import edit_distance, token_reward


# ---------------------------------------------------------------------------
# 1. Case-study pipelines: recognize -> retrieve -> solve, exact finals
# ---------------------------------------------------------------------------

def test_case_study_pipelines_end_to_end(cases):
    expected_finals = {
        "eggs-origin": "16",
        "crackers-vary-both": "29",
        "race-original": "100",
        "race-distract": "100",
    }
    started = time.perf_counter()
    assert set(expected_finals) <= set(cases)
    for case_id, final_text in expected_finals.items():
        case = cases[case_id]
        conditions = ConditionSet.from_mapping(case["conditions"])

        # conditions fall out of the question text alone
        recognized = recognize(case["question"])
        assert recognized.conditions == conditions, case_id
        assert reinstantiate(recognized.abstract_question, recognized.conditions) == case["question"], case_id

        # the recorded answer text yields the derivations, which solve to
        # the expected final value exactly
        abstraction = retrieve(case["abstract_answer"])
        assert [d.render() for d in abstraction.derivations] == [
            d for d in case["abstraction"].split()
        ], case_id
        result = solve(abstraction, conditions)
        assert result.final_answer == Number.parse(final_text), case_id
        assert result.final_answer == Number.parse(case["gold_answer"]), case_id
        for sym_text, value_text in case["derived"].items():
            sym = Symbol.parse(sym_text)
            assert result.assignments[sym] == Number.parse(value_text), case_id
    elapsed = time.perf_counter() - started
    assert elapsed < 1.0, f"pipelines took {elapsed:.3f}s, budget is 1s"


# ---------------------------------------------------------------------------
# 2. Accuracy-drop metric against recorded reference pairs
# ---------------------------------------------------------------------------

# (variant mean, origin mean) -> expected drop in percentage points
DROP_REFERENCE_PAIRS = [
    (0.5804, 0.6000, 3.27),
    (0.7946, 0.8000, 0.68),
    (0.8620, 0.8700, 0.92),
    (0.4456, 0.4400, -1.27),
    (0.6416, 0.6500, 1.29),
    (0.7834, 0.7900, 0.84),
    (0.8834, 0.8900, 0.74),
    (0.9022, 0.9100, 0.86),
    (0.8228, 0.8100, -1.58),
]


def test_delta_drop_reference_pairs():
    for variant, origin, expected in DROP_REFERENCE_PAIRS:
        got = delta_drop(variant, origin)
        assert abs(got - expected) <= 0.01, (
            f"delta_drop({variant}, {origin}) = {got:.4f}, expected {expected}"
        )


# ---------------------------------------------------------------------------
# 3. Symbolic reward vs an independent edit-distance oracle; answer reward
# ---------------------------------------------------------------------------

def _oracle_distance(a, b):
    """Plain recursive Levenshtein with memoization; shares no code with the
    two-row iterative version under test."""

    @lru_cache(maxsize=None)
    def dist(i, j):
        if i == 0:
            return j
        if j == 0:
            return i
        sub = dist(i - 1, j - 1) + (0 if a[i - 1] == b[j - 1] else 1)
        return min(dist(i - 1, j) + 1, dist(i, j - 1) + 1, sub)

    return dist(len(a), len(b))


_TOKEN_ALPHABET = [
    ("sym", "in", 0), ("sym", "in", 1), ("sym", "in", 2),
    ("sym", "out", 0), ("sym", "out", 1),
    ("op", "+"), ("op", "-"), ("op", "*"), ("op", "/"), ("op", "="),
    ("lit", Fraction(2)), ("lit", Fraction(1, 2)),
    ("sep",),
]


def test_symbolic_reward_matches_independent_oracle():
    rng = random.Random(20250816)
    r_max = Fraction(3, 2)
    for _ in range(10_000):
        a = [rng.choice(_TOKEN_ALPHABET) for _ in range(rng.randint(0, 30))]
        b = [rng.choice(_TOKEN_ALPHABET) for _ in range(rng.randint(0, 30))]
        d = _oracle_distance(tuple(a), tuple(b))
        assert edit_distance(a, b) == d
        expected = (
            r_max if max(len(a), len(b)) == 0
            else r_max * (1 - Fraction(d, max(len(a), len(b))))
        )
        got = token_reward(a, b)
        assert got == expected and isinstance(got, Fraction)

    # answer reward matrix: correct derivation 5/2, wrong or broken 0
    conditions = ConditionSet.from_values(["24", "64", "2"])
    gold_answer = Number.parse("16")
    gold_text = "<<in0*in2=out0>> <<in1-out0=out1>> The final answer is out1."

    gold = retrieve(gold_text)
    assert answer_reward(gold, conditions, gold_answer) == Fraction(5, 2)

    wrong_final = retrieve("<<in0*in2=out0>> <<in1-out0=out1>> The final answer is out0.")
    assert answer_reward(wrong_final, conditions, gold_answer) == 0

    wrong_route = retrieve("<<in0+in1=out0>> The final answer is out0.")
    assert answer_reward(wrong_route, conditions, gold_answer) == 0

    unsolvable = retrieve("<<in0*in9=out0>> The final answer is out0.")
    assert answer_reward(unsolvable, conditions, gold_answer) == 0

    malformed = grade("<<in0++=out0>>", gold_text, conditions, gold_answer)
    assert malformed.r_answer == 0


# ---------------------------------------------------------------------------
# 4. Group-advantage normalization, KL estimator, clipped objective
# ---------------------------------------------------------------------------

def test_group_advantage_kl_and_clip_math():
    rng = random.Random(404)

    checked_varying = 0
    for _ in range(1_000):
        n = rng.randint(2, 64)
        if rng.random() < 0.05:
            rewards = [rng.choice([0.0, 2.5, 4.0])] * n  # zero-variance group
        else:
            rewards = [rng.uniform(0.0, 5.0) for _ in range(n)]
        adv = group_advantages(rewards)
        assert len(adv) == n
        if all(a == 0.0 for a in adv):
            assert len(set(rewards)) == 1
            continue
        checked_varying += 1
        mean = math.fsum(adv) / n
        var = math.fsum(a * a for a in adv) / n
        assert abs(mean) < 1e-12
        assert abs(var - 1.0) < 1e-12
    assert checked_varying >= 900

    # KL estimator: nonnegative, and identical to u - ln(u) - 1 at
    # u = ratio of reference to policy likelihood
    for _ in range(1_000):
        lp = rng.uniform(-10.0, 0.0)
        lr = rng.uniform(-10.0, 0.0)
        triple = LikelihoodTriple(logp_policy=lp, logp_old=lp, logp_ref=lr)
        kl = kl_estimate(triple)
        u = math.exp(lr - lp)
        assert kl >= 0.0
        assert abs(kl - (u - math.log(u) - 1.0)) < 1e-9

    # hand-computed clip cases: ratio 2 at epsilon 0.2
    cfg = GrpoConfig(epsilon=0.2, beta=0.0)
    doubled = LikelihoodTriple(logp_policy=math.log(2.0), logp_old=0.0, logp_ref=math.log(2.0))
    assert grpo_objective([(doubled, 1.0)], cfg) == pytest.approx(1.2, abs=1e-12)
    assert grpo_objective([(doubled, -1.0)], cfg) == pytest.approx(-2.0, abs=1e-12)


# ---------------------------------------------------------------------------
# 5. Scheduler-based solver vs naive sweep oracle on random systems
# ---------------------------------------------------------------------------

def _random_abstraction(rng):
    """Random assignment-form system: forward references, occasional
    undefined symbols, zero divisors, and genuine cycles all reachable."""
    n_derivs = rng.randint(1, 10)
    n_inputs = rng.randint(1, 4)

    def operand(self_index):
        roll = rng.random()
        if roll < 0.40:
            return f"in{rng.randrange(n_inputs)}"
        if roll < 0.70:
            k = rng.randrange(n_derivs)
            if k == self_index:
                k = (k + 1) % n_derivs
                if k == self_index:  # single-derivation system
                    return f"in{rng.randrange(n_inputs)}"
            return f"out{k}"
        if roll < 0.78:
            return f"in{n_inputs + rng.randrange(3)}"  # nothing binds these
        if roll < 0.84:
            return f"out{n_derivs + rng.randrange(3)}"  # nor these
        return str(rng.randint(0, 6))

    derivs = []
    for i in range(n_derivs):
        n_ops = rng.randint(1, 3)
        parts = [operand(i)]
        for _ in range(n_ops):
            parts.append(rng.choice("+-*/"))
            parts.append(operand(i))
        derivs.append(Derivation.parse("".join(parts) + f"=out{i}"))

    final = Symbol.output(rng.randrange(n_derivs)) if rng.random() < 0.8 else None
    conditions = ConditionSet.from_values(
        [str(rng.randint(-4, 6)) for _ in range(n_inputs)]
    )
    return Abstraction(tuple(derivs), final=final), conditions


def _outcome(fn, abstraction, conditions):
    try:
        result = fn(abstraction, conditions)
    except UndefinedSymbol as exc:
        return ("UndefinedSymbol", exc.symbol.render())
    except CyclicDependency:
        return ("CyclicDependency",)
    except DivisionByZero:
        # the two evaluators may hit different zero divisions first when
        # several are reachable; the class is the contract, not the index
        return ("DivisionByZero",)
    return (
        "ok",
        tuple(sorted((s.render(), v.render()) for s, v in result.assignments.items())),
        result.final_answer.render() if result.final_answer is not None else None,
    )


def test_solver_agrees_with_naive_oracle():
    rng = random.Random(77)
    seen = set()
    for _ in range(1_000):
        abstraction, conditions = _random_abstraction(rng)
        fast = _outcome(solve, abstraction, conditions)
        slow = _outcome(brute_force_check, abstraction, conditions)
        assert fast == slow, (
            f"{[d.render() for d in abstraction.derivations]} under "
            f"{conditions.render()}: {fast} != {slow}"
        )
        seen.add(fast[0])
    assert seen == {"ok", "UndefinedSymbol", "CyclicDependency", "DivisionByZero"}, (
        f"generator failed to exercise all outcome classes: {seen}"
    )


# ---------------------------------------------------------------------------
# 6. Harness robustness: oracle is flat 1.0, noise shows up in the stats
# ---------------------------------------------------------------------------

def test_oracle_reasoner_is_invariant_across_perturbations(template_dir):
    templates = load_templates(template_dir)
    assert len(templates) >= 10
    started = time.perf_counter()
    for kind in (Perturbation.VARY_NUM, Perturbation.VARY_BOTH, Perturbation.DISTRACT):
        rounds = [
            generate_round(templates, kind, round_no, master_seed=1234)
            for round_no in range(50)
        ]
        report = evaluate(OracleReasoner(), rounds, mode="abstral")
        assert report.mean == 1.0, (kind, report.mean)
        assert report.std == 0.0, (kind, report.std)
        assert report.n_rounds == 50
    elapsed = time.perf_counter() - started
    assert elapsed < 30.0, f"three 50-round evaluations took {elapsed:.1f}s"


def test_noisy_reasoner_statistics_are_consistent(template_dir):
    templates = load_templates(template_dir)
    corruption = 0.3
    noisy = NoisyReasoner(corruption, seed=99)
    rounds = [
        generate_round(templates, Perturbation.VARY_NUM, round_no, master_seed=555)
        for round_no in range(50)
    ]

    # ground truth: score every instance serially
    flat = [inst for rnd in rounds for inst in rnd]
    successes = sum(
        1 for inst in flat if score_answer(noisy.answer(inst), inst, "abstral")
    )
    per_instance_rate = successes / len(flat)

    report = evaluate(noisy, rounds, mode="abstral")
    # equal-sized rounds: the mean of round accuracies IS the overall rate
    assert abs(report.mean - per_instance_rate) < 1e-12

    # and that rate should sit within 3 sigma of the nominal success
    # probability 1 - corruption (a corrupted token may rarely preserve
    # the answer, which only pushes the rate upward)
    sigma = math.sqrt(corruption * (1 - corruption) / len(flat))
    assert report.mean >= (1 - corruption) - 3 * sigma, (
        f"mean {report.mean:.4f} below the 3-sigma band around {1 - corruption}"
    )
    assert report.mean <= 1.0
    assert report.std > 0.0


# ---------------------------------------------------------------------------
# 7. Rewrite gate in replay: recorded conversations pass, mutants fail
# ---------------------------------------------------------------------------

def _load_jsonl(path):
    return [json.loads(line) for line in path.read_text().splitlines() if line.strip()]


def test_rewrite_replay_gate(fixture_dir):
    instances = {
        row["id"]: Instance.from_json(row)
        for row in _load_jsonl(fixture_dir / "rewrite_instances.jsonl")
    }
    assert len(instances) == 5

    # every recorded conversation is accepted, and the accepted text is
    # exactly the recorded second-stage response
    store = FixtureStore.load(fixture_dir / "rewrite_valid.jsonl")
    client = Client(EndpointConfig(max_requests=0), fixtures=store)
    for inst_id, inst in instances.items():
        outcome = rewrite_pipeline(client, inst)
        assert isinstance(outcome, str), f"{inst_id}: {outcome}"
        assert outcome == store.get(f"rewrite2:{inst_id}").strip()
    assert client.requests_spent == 0

    # every one-token mutant is rejected at the recorded stage with the
    # recorded reason
    mutants = _load_jsonl(fixture_dir / "rewrite_mutants.jsonl")
    assert len(mutants) == 20
    for record in mutants:
        mstore = FixtureStore()
        for row in record["rows"]:
            mstore.add(row["key"], row["request_hash"], row["response_text"])
        mclient = Client(EndpointConfig(max_requests=0), fixtures=mstore)
        outcome = rewrite_pipeline(mclient, instances[record["instance_id"]])
        assert isinstance(outcome, Rejected), f"{record['mutant_id']} was accepted"
        assert outcome.stage == record["stage"], record["mutant_id"]
        assert outcome.reason == record["reason"], record["mutant_id"]

    # with no fixture for an instance, offline mode refuses to fabricate
    stranger = Instance(
        id="stranger",
        question="A stranger holds 3 coins and finds 4 more. How many now?",
        gold_answer=Number.parse("7"),
        gold_socratic="3 + 4 = << 3+4=7 >>7 coins. The answer is 7.",
        abstract_question="A stranger holds [in0] coins and finds [in1] more. How many now?",
        conditions=ConditionSet.from_values(["3", "4"]),
    )
    with pytest.raises(BudgetExceeded):
        rewrite_pipeline(client, stranger)
