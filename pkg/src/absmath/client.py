"""HTTP reasoner client for chat-completions endpoints, with record-replay.

The client speaks the common /v1/chat/completions JSON shape (model,
messages, temperature, max_tokens). Every request is content-hashed; a
FixtureStore maps request hashes (and stable string keys) to recorded
response text, so the whole data-construction pipeline replays offline and
byte-reproducibly. The API key is read from a named environment variable at
request time and never stored in any config structure.

rewrite_pipeline() is the two-stage answer rewriter: stage 1 turns a
natural-language solution into placeholder derivations, stage 2 restructures
it into the sub-question answer format. Each stage's output is gated by
verify_instance; outputs that fail the gate are Rejected with the stage
number and the checker's reason.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import threading
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional, Union

import requests

from .core import ConditionSet, Instance
from .errors import (
    BudgetExceeded,
    ClientError,
    HttpStatusError,
    RequestTimeout,
)
from .solver import verify_instance

PROMPT_NAMES = (
    "ConditionRecognition",
    "RewriteStep1",
    "RewriteStep2",
    "CoARewrite",
    "Cot8Shot",
)

_PROMPT_FILES = {
    "ConditionRecognition": "condition_recognition.txt",
    "RewriteStep1": "rewrite_step1.txt",
    "RewriteStep2": "rewrite_step2.txt",
    "CoARewrite": "coa_rewrite.txt",
    "Cot8Shot": "cot_8shot.txt",
}

_RETRYABLE_STATUS = frozenset({429, 500, 502, 503, 504})


@dataclass(frozen=True)
class EndpointConfig:
    """Where and how to reach a chat-completions endpoint.

    api_key_env names an environment variable; the key itself is read at
    request time and never lives in this structure or on disk.
    """

    base_url: str = "http://localhost:8000"
    model: str = "oracle-rewriter"
    api_key_env: Optional[str] = None
    timeout: float = 30.0
    max_retries: int = 2
    temperature: float = 0.0
    max_tokens: int = 1024
    max_requests: Optional[int] = None

    def __post_init__(self):
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be nonnegative")
        if self.max_requests is not None and self.max_requests < 0:
            raise ValueError("max_requests must be nonnegative")

    @property
    def url(self) -> str:
        base = self.base_url.rstrip("/")
        if base.endswith("/chat/completions"):
            return base
        return base + "/v1/chat/completions"

    def api_key(self) -> Optional[str]:
        if self.api_key_env is None:
            return None
        key = os.environ.get(self.api_key_env)
        if not key:
            raise ClientError(
                f"api key environment variable {self.api_key_env} is not set"
            )
        return key


@dataclass(frozen=True)
class PromptTemplate:
    name: str
    instruction: str
    examples: tuple[str, ...]

    def render(self, query: str) -> str:
        parts = [self.instruction, ""]
        for i, example in enumerate(self.examples, start=1):
            parts.append(f"Example {i}:")
            parts.append(example)
            parts.append("")
        parts.append(query)
        return "\n".join(parts)


_EXAMPLE_SPLIT_RE = re.compile(r"^Example \d+:\n", re.MULTILINE)


def load_prompt(name: str, directory: Optional[Path] = None) -> PromptTemplate:
    """Load a shipped prompt template by canonical name."""
    if name not in _PROMPT_FILES:
        raise ValueError(f"unknown prompt {name!r}; expected one of {PROMPT_NAMES}")
    filename = _PROMPT_FILES[name]
    if directory is not None:
        text = (directory / filename).read_text(encoding="utf-8")
    else:
        text = (
            resources.files("absmath.data.prompts").joinpath(filename)
        ).read_text(encoding="utf-8")
    blocks = _EXAMPLE_SPLIT_RE.split(text)
    instruction = blocks[0].strip()
    examples = tuple(b.strip() for b in blocks[1:])
    return PromptTemplate(name=name, instruction=instruction, examples=examples)


def request_hash(payload: dict) -> str:
    """Content hash of the canonical JSON encoding of a request payload."""
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def build_payload(cfg: EndpointConfig, prompt: str) -> dict:
    return {
        "model": cfg.model,
        "messages": [{"role": "user", "content": prompt}],
        "temperature": cfg.temperature,
        "max_tokens": cfg.max_tokens,
    }


class FixtureStore:
    """Recorded request→response pairs, one JSON object per line.

    Rows carry {key, request_hash, response_text}. Lookup tries the request
    hash first (exact payload replay) and falls back to the stable key, so
    recorded conversations survive cosmetic config changes.
    """

    def __init__(self):
        self._by_hash: dict[str, str] = {}
        self._by_key: dict[str, str] = {}
        self._rows = 0
        self._lock = threading.Lock()

    @classmethod
    def load(cls, path: Union[str, Path]) -> "FixtureStore":
        store = cls()
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    row = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ClientError(f"{path}:{line_no}: bad fixture row: {exc}")
                if not isinstance(row, dict) or "response_text" not in row:
                    raise ClientError(
                        f"{path}:{line_no}: fixture row needs a response_text field"
                    )
                store.add(
                    key=row.get("key"),
                    req_hash=row.get("request_hash"),
                    response_text=row["response_text"],
                )
        return store

    def add(self, key: Optional[str], req_hash: Optional[str], response_text: str):
        with self._lock:
            if req_hash:
                self._by_hash[req_hash] = response_text
            if key:
                self._by_key[key] = response_text
            self._rows += 1

    def lookup(self, req_hash: str, key: Optional[str] = None) -> Optional[str]:
        with self._lock:
            if req_hash in self._by_hash:
                return self._by_hash[req_hash]
            if key is not None and key in self._by_key:
                return self._by_key[key]
            return None

    def get(self, key: str) -> str:
        with self._lock:
            try:
                return self._by_key[key]
            except KeyError:
                raise ClientError(f"no fixture recorded under key {key!r}")

    def __len__(self) -> int:
        return self._rows


class Client:
    """Chat-completions client: replay-first, budgeted, retrying.

    Safe to share across threads; the request budget is checked and spent
    under a lock. In replay mode (fixtures given) a hit costs nothing; a
    miss falls through to the network path, where a zero budget turns it
    into BudgetExceeded, which is exactly what offline tests want.
    """

    def __init__(
        self,
        cfg: EndpointConfig,
        fixtures: Optional[FixtureStore] = None,
        record_to: Optional[Union[str, Path]] = None,
        session: Optional[requests.Session] = None,
    ):
        self.cfg = cfg
        self.fixtures = fixtures
        self.record_to = Path(record_to) if record_to is not None else None
        self._session = session
        self._lock = threading.Lock()
        self._spent = 0

    @property
    def requests_spent(self) -> int:
        with self._lock:
            return self._spent

    def _charge(self):
        with self._lock:
            limit = self.cfg.max_requests
            if limit is not None and self._spent >= limit:
                raise BudgetExceeded(
                    f"request budget of {limit} exhausted"
                )
            self._spent += 1

    def complete(self, prompt: str, fixture_key: Optional[str] = None) -> str:
        payload = build_payload(self.cfg, prompt)
        h = request_hash(payload)
        if self.fixtures is not None:
            hit = self.fixtures.lookup(h, key=fixture_key)
            if hit is not None:
                return hit
        self._charge()
        text = self._post(payload)
        if self.record_to is not None:
            row = {"key": fixture_key, "request_hash": h, "response_text": text}
            with self._lock:
                with open(self.record_to, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps(row) + "\n")
            if self.fixtures is not None:
                self.fixtures.add(fixture_key, h, text)
        return text

    def _post(self, payload: dict) -> str:
        headers = {"Content-Type": "application/json"}
        key = self.cfg.api_key()
        if key is not None:
            headers["Authorization"] = f"Bearer {key}"
        post = self._session.post if self._session is not None else requests.post
        last_exc: Optional[Exception] = None
        for attempt in range(self.cfg.max_retries + 1):
            if attempt:
                time.sleep(min(0.5 * 2 ** (attempt - 1), 8.0))
            try:
                resp = post(
                    self.cfg.url,
                    json=payload,
                    headers=headers,
                    timeout=self.cfg.timeout,
                )
            except requests.Timeout as exc:
                last_exc = RequestTimeout(str(exc))
                continue
            except requests.ConnectionError as exc:
                last_exc = ClientError(f"connection failed: {exc}")
                continue
            if resp.status_code in _RETRYABLE_STATUS:
                last_exc = HttpStatusError(resp.status_code, resp.text[:200])
                continue
            if resp.status_code != 200:
                raise HttpStatusError(resp.status_code, resp.text[:200])
            try:
                body = resp.json()
                return body["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise ClientError(f"malformed completion response: {exc}")
        assert last_exc is not None
        raise last_exc


# ---------------------------------------------------------------------------
# Two-stage answer rewriting with verification gates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Rejected:
    """A rewrite that failed a verification gate."""

    stage: int
    reason: str

    def describe(self) -> str:
        return f"Rejected(stage {self.stage}, {self.reason})"


def _stage1_query(instance: Instance) -> str:
    return (
        f"Problem: {instance.abstract_question}\n"
        f"Conditions: {instance.conditions.render()}\n"
        f"Solution: {instance.gold_socratic}\n"
        f"Rewrite solution:"
    )


def _stage2_query(instance: Instance, stage1_text: str) -> str:
    return (
        f"Problem: {instance.abstract_question}\n"
        f"Solution: {stage1_text}\n"
        f"Rewrite solution:"
    )


def rewrite_pipeline(
    client: Client,
    instance: Instance,
    prompt_dir: Optional[Path] = None,
) -> Union[str, Rejected]:
    """Rewrite a solved instance into the abstract answer format.

    Returns the accepted stage-2 text, or Rejected carrying the failing
    stage and the checker's reason. Every accepted result passes
    verify_instance by construction.
    """
    if instance.abstract_question is None or instance.conditions is None:
        raise ValueError(f"instance {instance.id} is missing the abstract question")
    if instance.gold_socratic is None:
        raise ValueError(f"instance {instance.id} has no source solution to rewrite")
    if instance.gold_answer is None:
        raise ValueError(f"instance {instance.id} has no gold answer")

    step1 = load_prompt("RewriteStep1", prompt_dir)
    text1 = client.complete(
        step1.render(_stage1_query(instance)),
        fixture_key=f"rewrite1:{instance.id}",
    ).strip()
    check1 = verify_instance(text1, instance.conditions, instance.gold_answer)
    if not check1.passed:
        return Rejected(stage=1, reason=check1.reason)

    step2 = load_prompt("RewriteStep2", prompt_dir)
    text2 = client.complete(
        step2.render(_stage2_query(instance, text1)),
        fixture_key=f"rewrite2:{instance.id}",
    ).strip()
    check2 = verify_instance(text2, instance.conditions, instance.gold_answer)
    if not check2.passed:
        return Rejected(stage=2, reason=check2.reason)
    return text2


# ---------------------------------------------------------------------------
# LLM-backed condition recognition (parity path for the regex recognizer)
# ---------------------------------------------------------------------------

_OUTPUT_PROBLEM_RE = re.compile(
    r"Output problem:\s*(?P<q>.*?)\s*Equations:\s*(?P<eq>.*)", re.DOTALL
)
_EQUATION_RE = re.compile(r"(in\d+)=(\S+)")


def parse_recognition_response(text: str) -> tuple[str, ConditionSet]:
    """Split a recognition completion into the abstract question and the
    recorded value assignments."""
    m = _OUTPUT_PROBLEM_RE.search(text)
    if m is None:
        raise ClientError("response lacks Output problem / Equations sections")
    question = " ".join(m.group("q").split())
    pairs = _EQUATION_RE.findall(m.group("eq"))
    if not pairs:
        raise ClientError("response lists no symbol assignments")
    return question, ConditionSet.from_mapping({sym: val for sym, val in pairs})


def llm_recognize(
    client: Client,
    question: str,
    fixture_key: Optional[str] = None,
    prompt_dir: Optional[Path] = None,
) -> tuple[str, ConditionSet]:
    template = load_prompt("ConditionRecognition", prompt_dir)
    query = f"Input problem: {question}\nOutput problem:"
    text = client.complete(template.render(query), fixture_key=fixture_key)
    if not text.lstrip().startswith("Output problem:"):
        text = "Output problem: " + text.lstrip()
    return parse_recognition_response(text)


class ClientReasoner:
    """Adapts the HTTP client to the harness Reasoner protocol."""

    def __init__(
        self,
        client: Client,
        prompt_name: str = "Cot8Shot",
        use_abstract_question: bool = True,
        prompt_dir: Optional[Path] = None,
    ):
        self.client = client
        self.template = load_prompt(prompt_name, prompt_dir)
        self.use_abstract_question = use_abstract_question

    def answer(self, instance: Instance) -> str:
        if self.use_abstract_question and instance.abstract_question is not None:
            question = instance.abstract_question
        else:
            question = instance.question
        query = f"Question: {question}\nAnswer:"
        return self.client.complete(
            self.template.render(query), fixture_key=f"answer:{instance.id}"
        )
