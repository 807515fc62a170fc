"""
Measuring robustness to perturbed problems
==========================================

A reasoner that truly abstracts a problem should not care which numbers or
names appear in it. This script generates perturbed variants of the shipped
problem templates, evaluates two reference reasoners on them, and prints
the accuracy table with the percentage drop against the unperturbed
baseline.

The oracle reasoner answers with each instance's own gold abstraction, so
its accuracy is flat 1.0 under every perturbation: the symbolic format is
invariant by construction. The noisy reasoner corrupts one derivation token
with probability 0.3, which is what a brittle model looks like.
"""

from importlib import resources

from absmath import (
    NoisyReasoner,
    OracleReasoner,
    Perturbation,
    evaluate,
    generate_round,
    load_templates,
)
from absmath.harness import format_table

ROUNDS = 20
MASTER_SEED = 7

template_dir = resources.files("absmath").joinpath("data/templates")
templates = load_templates(template_dir)
print(f"{len(templates)} templates, {ROUNDS} rounds per perturbation kind\n")

KINDS = [
    Perturbation.VARY_NUM,
    Perturbation.VARY_BOTH,
    Perturbation.INT_DEC_FRA,
    Perturbation.DISTRACT,
]


def sweep(reasoner):
    # the baseline round repeats the unperturbed instances; its accuracy is
    # the "origin" column every drop is measured against
    from absmath import baseline_instance

    origin_rounds = [[baseline_instance(t) for t in templates]] * ROUNDS
    origin = evaluate(reasoner, origin_rounds)

    reports = {}
    for kind in KINDS:
        rounds = [
            generate_round(templates, kind, round_no, MASTER_SEED)
            for round_no in range(ROUNDS)
        ]
        reports[kind.value] = evaluate(reasoner, rounds).with_baseline(origin.mean)
    return origin, reports


print("oracle reasoner (answers with the gold abstraction):")
origin, reports = sweep(OracleReasoner())
print(format_table(reports, origin))

print("\nnoisy reasoner (one corrupted token with probability 0.3):")
origin, reports = sweep(NoisyReasoner(corruption=0.3, seed=11))
print(format_table(reports, origin))

print(
    "\nThe oracle's rows do not move: perturbations change surface text and"
    "\nbindings, never the abstraction. The noisy rows hover near 0.7"
    "\neverywhere, because the corruption is independent of the perturbation."
)
