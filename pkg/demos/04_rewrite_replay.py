"""
Rewriting solutions into the symbolic format, offline
=====================================================

Training data for abstract reasoning starts as ordinary step-by-step
solutions. A two-stage rewrite turns each one into the symbolic answer
format: stage 1 replaces concrete arithmetic with derivations over input
symbols, stage 2 reshapes the result into the granular sub-question layout.
After each stage the text must still derive the instance's gold answer,
or the instance is dropped -- generation quality is never trusted.

The rewriting normally calls a chat-completions endpoint. Here it runs
entirely from the shipped replay store: every request is answered from the
recorded fixtures and the request budget is zero, so nothing can silently
reach a network.
"""

import json
from importlib import resources

from absmath import (
    Client,
    EndpointConfig,
    FixtureStore,
    Instance,
    rewrite_pipeline,
)

fixture_dir = resources.files("absmath").joinpath("data/fixtures")

instances = [
    Instance.from_json(json.loads(line))
    for line in fixture_dir.joinpath("rewrite_instances.jsonl")
    .read_text()
    .splitlines()
]
store = FixtureStore.load(fixture_dir.joinpath("rewrite_valid.jsonl"))

# max_requests=0 means: replay hits are free, anything else is an error
client = Client(EndpointConfig(max_requests=0), fixtures=store)

print(f"{len(instances)} recorded instances, {len(store)} fixture rows\n")

for inst in instances:
    outcome = rewrite_pipeline(client, inst)
    assert isinstance(outcome, str)
    first_line = outcome.splitlines()[0]
    print(f"accepted {inst.id}:")
    print(f"  {first_line} ...")

print(f"\nnetwork requests spent: {client.requests_spent}")

# ---------------------------------------------------------------------------
# The verification gate at work. The mutant store below answers stage 1
# with a single corrupted token (a flipped operator), so the rewritten text
# no longer derives the gold answer and the pipeline rejects it, naming the
# stage and the reason.
# ---------------------------------------------------------------------------

mutants = [
    json.loads(line)
    for line in fixture_dir.joinpath("rewrite_mutants.jsonl").read_text().splitlines()
]
record = mutants[0]
mutant_store = FixtureStore()
for row in record["rows"]:
    mutant_store.add(row["key"], row["request_hash"], row["response_text"])
mutant_client = Client(EndpointConfig(max_requests=0), fixtures=mutant_store)

target = next(i for i in instances if i.id == record["instance_id"])
outcome = rewrite_pipeline(mutant_client, target)
print(f"\nmutant {record['mutant_id']}: {outcome.describe()}")
