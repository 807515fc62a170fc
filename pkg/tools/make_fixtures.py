"""Regenerate the shipped replay fixtures under src/absmath/data/fixtures/.

Builds five rewrite conversations (request hashes computed with the same
code path the client uses), a recognition fixture, and a set of one-token
mutant conversations with their frozen rejection outcomes. Everything is
checked against the live pipeline before being written, so a fixture that
would not replay correctly can never ship.

Run from the repository root:  python3 tools/make_fixtures.py
"""

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from absmath.client import (
    Client,
    EndpointConfig,
    FixtureStore,
    Rejected,
    _stage1_query,
    _stage2_query,
    build_payload,
    load_prompt,
    request_hash,
    rewrite_pipeline,
)
from absmath.core import ConditionSet, Instance, Number
from absmath.recognize import ImplicitNumberLexicon
from absmath.solver import verify_instance

OUT = ROOT / "src" / "absmath" / "data" / "fixtures"
CFG = EndpointConfig()  # fixtures are recorded against the default config


INSTANCES = [
    dict(
        id="natalia-clips",
        question=(
            "Natalia sold clips to 48 of her friends in April, and then she sold "
            "half as many clips in May. How many clips did Natalia sell altogether "
            "in April and May?"
        ),
        abstract_question=(
            "Natalia sold clips to [in0] of her friends in April, and then she "
            "sold [in1] as many clips in May. How many clips did Natalia sell "
            "altogether in April and May?"
        ),
        conditions={"in0": "48", "in1": "1/2"},
        gold_answer="72",
        gold_socratic=(
            "How many clips did Natalia sell in May? ** Natalia sold 48/2 = "
            "< < 48/2=24 > >24 clips in May. How many clips did Natalia sell "
            "altogether in April and May? ** Natalia sold 48+24 = < < 48+24=72 > >72 "
            "clips altogether in April and May. The answer is 72."
        ),
        stage1=(
            "How many clips did Natalia sell in May? ** Natalia sold "
            "< < in0*in1=out0 > > clips in May. How many clips did Natalia sell "
            "altogether in April and May? ** Natalia sold < < in0+out0=out1 > > "
            "clips altogether in April and May. The answer is out1."
        ),
        stage2=(
            "Let's think about the sub-questions we need to answer.\n"
            "Q1: How many clips did Natalia sell in May?\n"
            "Q2: How many clips did Natalia sell altogether in April and May?\n"
            "Let's answer each sub-question one by one.\n"
            "Q1: How many clips did Natalia sell in May? Natalia sold [in0] clips "
            "in April. She sold [in1] as many clips in May as she did in April. "
            "So she sold < < in0*in1=out0 > > clips in May.\n"
            "Q2: How many clips did Natalia sell altogether in April and May? "
            "Natalia sold [in0] clips in April. She sold [out0] clips in May. "
            "So she sold < < in0+out0=out1 > > clips altogether in April and May.\n"
            "The final answer is out1."
        ),
    ),
    dict(
        id="flower-pot",
        question=(
            "The flowers cost $9, the clay pot costs $20 more than the flower, "
            "and the bag of soil costs $2 less than the flower. How much does it "
            "cost to plant the flowers?"
        ),
        abstract_question=(
            "The flowers cost $[in0], the clay pot costs $[in1] more than the "
            "flower, and the bag of soil costs $[in2] less than the flower. "
            "How much does it cost to plant the flowers?"
        ),
        conditions={"in0": "9", "in1": "20", "in2": "2"},
        gold_answer="45",
        gold_socratic=(
            "How much does the clay pot cost? ** The clay pot costs $20 + $9 = "
            "$< < 20+9=29 > >29. How much does the bag of soil cost? ** The bag of "
            "soil costs $9 - $2 = $< < 9-2=7 > >7. How much does it cost to plant "
            "the flowers? ** The cost to plant the flowers is $9 + $29 + $7 = "
            "$< < 9+29+7=45 > >45. The answer is 45."
        ),
        stage1=(
            "How much does the clay pot cost? ** The clay pot costs "
            "$< < in1+in0=out0 > >. How much does the bag of soil cost? ** The bag "
            "of soil costs $< < in0-in2=out1 > >. How much does it cost to plant "
            "the flowers? ** The cost to plant the flowers is "
            "$< < in0+out0+out1=out2 > >. The answer is out2."
        ),
        stage2=(
            "Let's think about the sub-questions we need to answer.\n"
            "Q1: How much does the clay pot cost?\n"
            "Q2: How much does the bag of soil cost?\n"
            "Q3: How much does it cost to plant the flowers?\n"
            "Let's answer each sub-question one by one.\n"
            "Q1: How much does the clay pot cost? The flowers cost $[in0]. The clay "
            "pot costs $[in1] more than the flower. So the clay pot costs "
            "$< < in0+in1=out0 > >.\n"
            "Q2: How much does the bag of soil cost? The flowers cost $[in0]. The "
            "bag of soil costs $[in2] less than the flower. So the bag of soil "
            "costs $< < in0-in2=out1 > >.\n"
            "Q3: How much does it cost to plant the flowers? The flowers cost "
            "$[in0]. The clay pot costs $[out0]. The bag of soil costs $[out1]. "
            "So the cost to plant the flowers is $< < in0+out0+out1=out2 > >.\n"
            "The final answer is out2."
        ),
    ),
    dict(
        id="sam-yardwork",
        question=(
            "From March to August, Sam made $460 doing 23 hours of yard work. "
            "However, from September to February, Sam was only able to work for "
            "8 hours. If Sam is saving up to buy a video game console that costs "
            "$600 and has already spent $340 to fix his car, how many more hours "
            "does he need to work before he can buy the video game console?"
        ),
        abstract_question=(
            "From March to August, Sam made $[in0] doing [in1] hours of yard work. "
            "However, from September to February, Sam was only able to work for "
            "[in2] hours. If Sam is saving up to buy a video game console that "
            "costs $[in3] and has already spent $[in4] to fix his car, how many "
            "more hours does he need to work before he can buy the video game "
            "console?"
        ),
        conditions={
            "in0": "460",
            "in1": "23",
            "in2": "8",
            "in3": "600",
            "in4": "340",
        },
        gold_answer="16",
        gold_socratic=(
            "How much does Sam make per hour? ** Sam makes $460 / 23 hrs = "
            "$ < < 460/23=20 > >20/hr. How much did Sam make from September to "
            "February? ** From September to February, Sam made 8hrs x $20/hr = "
            "$< < 8*20=160 > >160. How much did Sam make from March to February? "
            "** From March to February, Sam made a total of $460 + $160 = $620. "
            "How much money did Sam have after fixing his car? ** After fixing his "
            "car, he was left with $620 - $340 = $< < 620-340=280 > >280. How much "
            "money does Sam need to buy the video game console? ** Sam needs "
            "another $600 - $280 = $< < 600-280=320 > >320. How many more hours "
            "does Sam need to work? ** Sam needs to work another $320 / $20/hr = "
            "< < 320/20=16 > >16 hours. The answer is 16."
        ),
        stage1=(
            "How much does Sam make per hour? ** Sam makes $< < in0/in1=out0 > >/hr. "
            "How much did Sam make from September to February? ** From September "
            "to February, Sam made $< < in2*out0=out1 > >. How much did Sam make "
            "from March to February? ** From March to February, Sam made a total "
            "of $< < in0+out1=out2 > >. How much money did Sam have after fixing "
            "his car? ** After fixing his car, he was left with "
            "$< < out2-in4=out3 > >. How much money does Sam need to buy the video "
            "game console? ** Sam needs another $< < in3-out3=out4 > >. How many "
            "more hours does Sam need to work? ** Sam needs to work another "
            "< < out4/out0=out5 > > hours. The answer is out5."
        ),
        stage2=(
            "Let's think about the sub-questions we need to answer.\n"
            "Q1: How much does Sam make per hour?\n"
            "Q2: How much did Sam make from September to February?\n"
            "Q3: How much did Sam make from March to February?\n"
            "Q4: How much money did Sam have after fixing his car?\n"
            "Q5: How much money does Sam need to buy the video game console?\n"
            "Q6: How many more hours does Sam need to work?\n"
            "Let's answer each sub-question one by one.\n"
            "Q1: How much does Sam make per hour? Sam made $[in0] doing [in1] hours "
            "of yard work. So he makes $< < in0/in1=out0 > > per hour.\n"
            "Q2: How much did Sam make from September to February? From September "
            "to February, Sam worked for [in2] hours. He makes $[out0] per hour. "
            "So from September to February, he made $< < in2*out0=out1 > >.\n"
            "Q3: How much did Sam make from March to February? From March to "
            "August, Sam made $[in0]. From September to February, he made $[out1]. "
            "So from March to February, he made a total of $< < in0+out1=out2 > >.\n"
            "Q4: How much money did Sam have after fixing his car? Sam made a "
            "total of $[out2]. He spent $[in4] to fix his car. So after fixing "
            "his car, he was left with $< < out2-in4=out3 > >.\n"
            "Q5: How much money does Sam need to buy the video game console? Sam "
            "was left with $[out3]. The video game console costs $[in3]. So he "
            "needs another $< < in3-out3=out4 > >.\n"
            "Q6: How many more hours does Sam need to work? Sam makes $[out0] per "
            "hour. He needs another $[out4]. So he needs to work another "
            "< < out4/out0=out5 > > hours.\n"
            "The final answer is out5."
        ),
    ),
    dict(
        id="zhang-age",
        question=(
            "Zhang is twice as old as Li. Li is 12 years old. Zhang's brother "
            "Jung is 2 years older than Zhang. How old is Jung?"
        ),
        abstract_question=(
            "Zhang is [in0] times as old as Li. Li is [in1] years old. Zhang's "
            "brother Jung is [in2] years older than Zhang. How old is Jung?"
        ),
        conditions={"in0": "2", "in1": "12", "in2": "2"},
        gold_answer="26",
        gold_socratic=(
            "How old is Zhang? ** Zhang is 2 * 12 years old = < < 2*12=24 > >24 "
            "years old. How old is Jung? ** Jung is 2 years + 24 years = "
            "< < 2+24=26 > >26 years old. The answer is 26."
        ),
        stage1=(
            "How old is Zhang? ** Zhang is < < in0*in1=out0 > > years old. "
            "How old is Jung? ** Jung is < < in2+out0=out1 > > years old. "
            "The answer is out1."
        ),
        stage2=(
            "Let's think about the sub-questions we need to answer.\n"
            "Q1: How old is Zhang?\n"
            "Q2: How old is Jung?\n"
            "Let's answer each sub-question one by one.\n"
            "Q1: How old is Zhang? Zhang is [in0] times as old as Li. Li is [in1] "
            "years old. So Zhang is < < in0*in1=out0 > > years old.\n"
            "Q2: How old is Jung? Zhang is [out0] years old. Jung is [in2] years "
            "older than Zhang. So Jung is < < in2+out0=out1 > > years old.\n"
            "The final answer is out1."
        ),
    ),
    dict(
        id="william-bus",
        question=(
            "Of the 90 people on William's bus, 3/5 were Dutch. Of the 1/2 of the "
            "Dutch who were also American, 1/3 got window seats. What's the number "
            "of Dutch Americans who sat at the windows?"
        ),
        abstract_question=(
            "Of the [in0] people on William's bus, [in1] were Dutch. Of the [in2] "
            "of the Dutch who were also American, [in3] got window seats. What's "
            "the number of Dutch Americans who sat at the windows?"
        ),
        conditions={"in0": "90", "in1": "3/5", "in2": "1/2", "in3": "1/3"},
        gold_answer="9",
        gold_socratic=(
            "How many Dutch people were on the bus? ** On the bus, the number of "
            "Dutch people was 3/5 of the total number, a total of 3/5*90 = "
            "< < 3/5*90=54 > >54 people. How many Dutch Americans were on the bus? "
            "** Out of the 54 people who were Dutch, 1/2 were Dutch Americans, a "
            "total of 1/2*54 = < < 1/2*54=27 > >27 people. How many Dutch Americans "
            "sat at the windows? ** If 1/3 of the passengers on the bus identifying "
            "as Dutch Americans sat at the windows, their number is 1/3*27 = "
            "< < 1/3*27=9 > >9 The answer is 9."
        ),
        stage1=(
            "How many Dutch people were on the bus? ** On the bus, the number of "
            "Dutch people was [in1] of the total number, a total of "
            "< < in1*in0=out0 > > people. How many Dutch Americans were on the bus? "
            "** Out of the [out0] people who were Dutch, [in2] were Dutch "
            "Americans, a total of < < in2*out0=out1 > > people. How many Dutch "
            "Americans sat at the windows? ** If [in3] of the passengers on the "
            "bus identifying as Dutch Americans sat at the windows, their number "
            "is < < in3*out1=out2 > > The answer is out2."
        ),
        stage2=(
            "Let's think about the sub-questions we need to answer.\n"
            "Q1: How many Dutch people were on the bus?\n"
            "Q2: How many Dutch Americans were on the bus?\n"
            "Q3: How many Dutch Americans sat at the windows?\n"
            "Let's answer each sub-question one by one.\n"
            "Q1: How many Dutch people were on the bus? There were [in0] people on "
            "the bus. [in1] of them were Dutch. So the number of Dutch people was "
            "< < in1*in0=out0 > >.\n"
            "Q2: How many Dutch Americans were on the bus? There were [out0] Dutch "
            "people. [in2] of them were also American. So the number of Dutch "
            "Americans was < < in2*out0=out1 > >.\n"
            "Q3: How many Dutch Americans sat at the windows? There were [out1] "
            "Dutch Americans. [in3] of them got window seats. So the number of "
            "Dutch Americans at the windows was < < in3*out1=out2 > >.\n"
            "The final answer is out2."
        ),
    ),
]

# One-token corruptions: (mutant suffix, stage, find, replace)
MUTATIONS = {
    "natalia-clips": [
        ("op", 1, "in0*in1=out0", "in0-in1=out0"),
        ("final", 1, "The answer is out1", "The answer is out2"),
        ("noeq", 2, "in0+out0=out1", "in0+out0out1"),
        ("dup", 2, "in0+out0=out1", "in0+out0=out0"),
    ],
    "flower-pot": [
        ("ref", 1, "in0-in2=out1", "in0-in9=out1"),
        ("op", 1, "in0+out0+out1=out2", "in0+out0*out1=out2"),
        ("op", 2, "in0+in1=out0", "in0*in1=out0"),
        ("final", 2, "The final answer is out2", "The final answer is out0"),
    ],
    "sam-yardwork": [
        ("op", 1, "in0/in1=out0", "in0*in1=out0"),
        ("dup", 1, "out2-in4=out3", "out2-in4=out2"),
        ("ref", 2, "in2*out0=out1", "in2*out7=out1"),
        ("noeq", 2, "in3-out3=out4", "in3-out3out4"),
    ],
    "zhang-age": [
        ("final", 1, "The answer is out1", "The answer is out0"),
        ("op", 1, "in2+out0=out1", "in2-out0=out1"),
        ("dup", 2, "in2+out0=out1", "in2+out0=out0"),
        ("doubleop", 2, "in0*in1=out0", "in0**in1=out0"),
    ],
    "william-bus": [
        ("op", 1, "in1*in0=out0", "in1/in0=out0"),
        ("ref", 1, "in3*out1=out2", "in3*out5=out2"),
        ("final", 2, "The final answer is out2", "The final answer is out5"),
        ("op", 2, "in2*out0=out1", "in2+out0=out1"),
    ],
}


def make_instance(spec: dict) -> Instance:
    return Instance(
        id=spec["id"],
        question=spec["question"],
        gold_answer=Number.parse(spec["gold_answer"]),
        gold_socratic=spec["gold_socratic"],
        abstract_question=spec["abstract_question"],
        conditions=ConditionSet.from_mapping(spec["conditions"]),
    )


def fixture_rows(spec: dict) -> list[dict]:
    inst = make_instance(spec)
    step1 = load_prompt("RewriteStep1")
    step2 = load_prompt("RewriteStep2")
    p1 = step1.render(_stage1_query(inst))
    p2 = step2.render(_stage2_query(inst, spec["stage1"]))
    return [
        {
            "key": f"rewrite1:{inst.id}",
            "request_hash": request_hash(build_payload(CFG, p1)),
            "response_text": spec["stage1"],
        },
        {
            "key": f"rewrite2:{inst.id}",
            "request_hash": request_hash(build_payload(CFG, p2)),
            "response_text": spec["stage2"],
        },
    ]


def recognition_row() -> dict:
    zhang = next(s for s in INSTANCES if s["id"] == "zhang-age")
    template = load_prompt("ConditionRecognition")
    query = f"Input problem: {zhang['question']}\nOutput problem:"
    prompt = template.render(query)
    response = (
        f"Output problem: {zhang['abstract_question']}\n"
        "Equations: in0=2  in1=12  in2=2"
    )
    return {
        "key": "cond-recog-zhang",
        "request_hash": request_hash(build_payload(CFG, prompt)),
        "response_text": response,
    }


def check_valid(spec: dict):
    inst = make_instance(spec)
    for label, text in (("stage1", spec["stage1"]), ("stage2", spec["stage2"])):
        result = verify_instance(text, inst.conditions, inst.gold_answer)
        if not result.passed:
            raise SystemExit(f"{inst.id} {label} does not verify: {result.reason}")


def mutant_records(spec: dict) -> list[dict]:
    inst = make_instance(spec)
    records = []
    for suffix, stage, find, replace in MUTATIONS[spec["id"]]:
        assert spec[f"stage{stage}"].count(find) >= 1, (inst.id, find)
        corrupted = spec[f"stage{stage}"].replace(find, replace, 1)
        check = verify_instance(corrupted, inst.conditions, inst.gold_answer)
        if check.passed:
            raise SystemExit(f"{inst.id}-s{stage}-{suffix}: corruption still verifies")
        mutated = dict(spec)
        mutated[f"stage{stage}"] = corrupted
        rows = fixture_rows(mutated)
        if stage == 1:
            rows = rows[:1]  # the pipeline must never reach stage 2
        records.append(
            {
                "mutant_id": f"{inst.id}-s{stage}-{suffix}",
                "instance_id": inst.id,
                "stage": stage,
                "reason": check.reason,
                "rows": rows,
            }
        )
    return records


def main():
    OUT.mkdir(parents=True, exist_ok=True)

    valid_rows = []
    instance_rows = []
    for spec in INSTANCES:
        check_valid(spec)
        valid_rows.extend(fixture_rows(spec))
        instance_rows.append(make_instance(spec).to_json())
    valid_rows.append(recognition_row())

    mutants = []
    for spec in INSTANCES:
        mutants.extend(mutant_records(spec))

    # Replay the real pipeline against the generated stores before shipping.
    store = FixtureStore()
    for row in valid_rows:
        store.add(row["key"], row["request_hash"], row["response_text"])
    client = Client(EndpointConfig(max_requests=0), fixtures=store)
    for spec in INSTANCES:
        outcome = rewrite_pipeline(client, make_instance(spec))
        if not isinstance(outcome, str):
            raise SystemExit(f"{spec['id']}: valid fixtures rejected: {outcome}")
        if outcome != spec["stage2"]:
            raise SystemExit(f"{spec['id']}: replay returned unexpected text")

    by_id = {spec["id"]: spec for spec in INSTANCES}
    for record in mutants:
        mstore = FixtureStore()
        for row in record["rows"]:
            mstore.add(row["key"], row["request_hash"], row["response_text"])
        mclient = Client(EndpointConfig(max_requests=0), fixtures=mstore)
        outcome = rewrite_pipeline(mclient, make_instance(by_id[record["instance_id"]]))
        if not isinstance(outcome, Rejected):
            raise SystemExit(f"{record['mutant_id']}: pipeline accepted a mutant")
        if outcome.stage != record["stage"] or outcome.reason != record["reason"]:
            raise SystemExit(
                f"{record['mutant_id']}: expected stage {record['stage']} "
                f"{record['reason']}, got stage {outcome.stage} {outcome.reason}"
            )

    with open(OUT / "rewrite_valid.jsonl", "w", encoding="utf-8") as fh:
        for row in valid_rows:
            fh.write(json.dumps(row) + "\n")
    with open(OUT / "rewrite_instances.jsonl", "w", encoding="utf-8") as fh:
        for row in instance_rows:
            fh.write(json.dumps(row) + "\n")
    with open(OUT / "rewrite_mutants.jsonl", "w", encoding="utf-8") as fh:
        for record in mutants:
            fh.write(json.dumps(record) + "\n")

    lexicon_path = ROOT / "src" / "absmath" / "data" / "lexicon.tsv"
    ImplicitNumberLexicon.default().save(lexicon_path)

    print(f"wrote {len(valid_rows)} valid rows, {len(instance_rows)} instances,")
    print(f"      {len(mutants)} mutants, lexicon at {lexicon_path}")


if __name__ == "__main__":
    main()
