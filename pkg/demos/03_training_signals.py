"""
From graded answers to a policy-gradient objective
==================================================

Rewards on their own do not train anything. This script takes one problem,
grades a group of sampled answers, normalizes the totals into advantages,
and evaluates the clipped surrogate objective with its KL penalty -- the
quantities a group-relative policy optimizer consumes.
"""

import math

from absmath import (
    ConditionSet,
    GrpoConfig,
    LikelihoodTriple,
    Number,
    grade,
    group_advantages,
    grpo_objective,
    kl_estimate,
)

GOLD = "<<in0*in2=out0>> <<in1-out0=out1>> The final answer is out1."
CONDITIONS = ConditionSet.from_mapping({"in0": "24", "in1": "64", "in2": "2"})
GOLD_ANSWER = Number.parse("16")

# ---------------------------------------------------------------------------
# A sampled group: sixteen generations for the same prompt, from perfect
# replicas down to unparseable junk. Real groups come from a sampler; the
# mix below just makes the normalization visible.
# ---------------------------------------------------------------------------

group = (
    [GOLD] * 6
    + ["<<in1-in0*in2=out0>> The final answer is out0."] * 4  # right value
    + ["<<in0*in2=out0>> <<in1+out0=out1>> The final answer is out1."] * 3
    + ["<<in0*in9=out0>> The final answer is out0."] * 2  # unsolvable
    + ["<<in0++=out0>>"]  # malformed
)

totals = []
for text in group:
    b = grade(text, GOLD, CONDITIONS, GOLD_ANSWER)
    totals.append(float(b.total))

print("group rewards (answer + symbolic):")
print(" ", [round(t, 3) for t in totals])

# ---------------------------------------------------------------------------
# Group normalization: each reward becomes its z-score within the group,
# population std. The group's mean generation is the implicit baseline; no
# learned value model is involved.
# ---------------------------------------------------------------------------

advantages = group_advantages(totals)
print("\nadvantages (mean 0, std 1):")
print(" ", [round(a, 3) for a in advantages])
print("  sum:", round(math.fsum(advantages), 12))

# ---------------------------------------------------------------------------
# The clipped objective. Each sample pairs its advantage with the log-
# likelihoods under the current policy, the policy that sampled it, and the
# frozen reference. Ratios outside [1-eps, 1+eps] stop contributing
# gradient; the KL term pulls the policy back toward the reference.
# ---------------------------------------------------------------------------

cfg = GrpoConfig()  # epsilon 0.2, beta 0.04, group size 16
samples = []
for i, advantage in enumerate(advantages):
    # synthetic likelihoods: the policy drifted a little from both the
    # sampling policy and the reference
    logp_old = -8.0 - 0.1 * i
    triple = LikelihoodTriple(
        logp_policy=logp_old + 0.05,
        logp_old=logp_old,
        logp_ref=logp_old - 0.02,
    )
    samples.append((triple, advantage))

print("\nper-sample KL estimates (all nonnegative):")
print(" ", [round(kl_estimate(t), 6) for t, _ in samples[:4]], "...")

objective = grpo_objective(samples, cfg)
print("objective:", round(objective, 6))

# ---------------------------------------------------------------------------
# Why clipping matters, in two lines. A sample whose likelihood doubled
# (ratio 2) would love to push its advantage harder, but the clip holds the
# improvement at 1 + eps. A negative advantage at the same ratio is NOT
# rescued by the clip: min() keeps the worse term.
# ---------------------------------------------------------------------------

doubled = LikelihoodTriple(logp_policy=math.log(2), logp_old=0.0, logp_ref=math.log(2))
flat = GrpoConfig(beta=0.0)
print("\nratio 2, advantage +1:", grpo_objective([(doubled, +1.0)], flat), "(clipped at 1.2)")
print("ratio 2, advantage -1:", grpo_objective([(doubled, -1.0)], flat), "(unclipped: -2.0)")
