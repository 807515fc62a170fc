"""
One word problem, end to end
============================

The toolkit's core loop has three moves: recognize the numeric conditions
in a question, retrieve the symbolic derivations from an answer, and solve
the resulting equation system exactly. This script walks a single problem
through all three and then grades a few candidate answers against the gold
one.
"""

from absmath import (
    ConditionSet,
    grade,
    recognize,
    reinstantiate,
    retrieve,
    solve,
)

QUESTION = (
    "Janet places eggs on some trays. Each tray can hold 24 eggs. "
    "If he has 64 eggs and 2 trays, how many eggs won't he be able "
    "to place on the tray?"
)

# ---------------------------------------------------------------------------
# Step 1: condition recognition.
# Numerals become indexed input symbols; the bindings are kept separately,
# so the question text turns into a reusable skeleton.
# ---------------------------------------------------------------------------

recognized = recognize(QUESTION)
print("abstract question:")
print(" ", recognized.abstract_question)
print("conditions:", recognized.conditions.render())

# The skeleton plus the bindings reproduce the original question exactly.
assert reinstantiate(recognized.abstract_question, recognized.conditions) == QUESTION

# ---------------------------------------------------------------------------
# Step 2: abstraction retrieval.
# A reasoner answering in the symbolic format marks each derivation inside
# << >> regions. Retrieval pulls them out in order and records which output
# the final-answer statement designates. Spaced delimiters ("< <") work too,
# since generated text is rarely tidy.
# ---------------------------------------------------------------------------

ANSWER_TEXT = """\
Let's think about the sub-questions we need to answer.
Q1: How many eggs can the trays hold?
Q2: How many eggs won't fit?
Q1: Each tray holds [in0] eggs and there are [in2] trays, so the trays hold
< < in0*in2=out0 > > eggs.
Q2: There are [in1] eggs, so < < in1-out0=out1 > > eggs won't fit.
The final answer is out1.
"""

abstraction = retrieve(ANSWER_TEXT)
print("\nretrieved derivations:")
for deriv in abstraction.derivations:
    print(" ", deriv.render())
print("final symbol:", abstraction.final.render())

# ---------------------------------------------------------------------------
# Step 3: symbolic derivation.
# The derivations plus the conditions form an assignment system; solving it
# over exact rationals gives every intermediate and the final answer. No
# floats are involved, so 1/3 stays 1/3.
# ---------------------------------------------------------------------------

result = solve(abstraction, recognized.conditions)
print("\nassignments:")
for sym, value in sorted(result.assignments.items(), key=lambda kv: kv[0].render()):
    print(f"  {sym.render()} = {value.render()}")
print("final answer:", result.final_answer.render())
assert result.final_answer.render() == "16"

# ---------------------------------------------------------------------------
# Grading: answers are scored on two axes. Getting the right final value
# earns the answer reward (5/2); token-level closeness of the derivations
# to the gold ones earns up to 3/2 more, scaled by edit distance.
# ---------------------------------------------------------------------------

GOLD = "<<in0*in2=out0>> <<in1-out0=out1>> The final answer is out1."
conditions = recognized.conditions
gold_answer = result.final_answer

candidates = {
    "gold itself": GOLD,
    "right value, shorter route": "<<in1-in0*in2=out0>> The final answer is out0.",
    "wrong operation": "<<in0+in2=out0>> <<in1-out0=out1>> The final answer is out1.",
    "not even parseable": "<<in0++=out0>> The final answer is out0.",
}

print("\ngrading candidates against gold:")
for label, text in candidates.items():
    b = grade(text, GOLD, conditions, gold_answer)
    print(
        f"  {label:28s} r_answer={str(b.r_answer):>4s} "
        f"r_symbolic={str(b.r_symbolic):>6s} total={str(b.total)}"
    )

# A fresh instantiation of the same skeleton reuses everything: only the
# bindings change, the derivations and grading stay identical.
fresh = ConditionSet.from_mapping({"in0": "39", "in1": "302", "in2": "7"})
print("\nsame skeleton, new conditions:", fresh.render())
print("new question:", reinstantiate(recognized.abstract_question, fresh))
print("new answer:", solve(abstraction, fresh).final_answer.render())
