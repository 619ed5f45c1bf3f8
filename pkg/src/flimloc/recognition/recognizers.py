"""Recognizer backends.

Every backend answers one prompt at a time with free text; ``recognize``
turns the text into a boolean with ``parse_verdict``.
"""

from __future__ import annotations

import json
import logging
import os
import random
import threading
import time
from dataclasses import dataclass
from pathlib import Path

import httpx

from ..errors import ConfigError, MissingGroundTruth, RecognizerError
from ..ingest import Bundle
from .prompt import Prompt

log = logging.getLogger(__name__)

API_KEY_ENV = "FLIMLOC_API_KEY"

FLIM_ANSWER = "ANSWER: FLIM"
NOT_FLIM_ANSWER = "ANSWER: NOT_FLIM"


@dataclass(frozen=True)
class Request:
    bundle: Bundle
    mutant_id: str
    run_index: int
    prompt: Prompt


class Recognizer:
    name = "abstract"

    def respond(self, request: Request) -> str:
        raise NotImplementedError

    def close(self) -> None:
        pass


class NullRecognizer(Recognizer):
    """Never flags anything; MBFL-FLIM degenerates to plain MBFL."""

    name = "null"

    def respond(self, request: Request) -> str:
        return NOT_FLIM_ANSWER


class OracleRecognizer(Recognizer):
    """Answers from the bundle's ground truth: a submitted mutant (already
    known to be killed by a failing test) is a FLIM iff its entity is not
    faulty."""

    name = "oracle"

    def respond(self, request: Request) -> str:
        truth = request.bundle.ground_truth
        if truth is None:
            raise MissingGroundTruth(request.bundle.version_id)
        entity = request.bundle.mutant_by_id[request.mutant_id].entity_id
        return NOT_FLIM_ANSWER if entity in truth else FLIM_ANSWER


class ReplayRecognizer(Recognizer):
    """Canned responses from a JSON-lines file of
    ``{"mutant_id", "run", "response"}`` records.  An optional ``"version"``
    field scopes a record to one bundle (matched against its version id)."""

    name = "replay"

    def __init__(self, records: dict[tuple[str | None, str, int], str]):
        self.records = records

    @classmethod
    def from_file(cls, path: str | Path) -> "ReplayRecognizer":
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"replay file not found: {path}")
        records = {}
        for n, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                key = (rec.get("version"), str(rec["mutant_id"]), int(rec["run"]))
                records[key] = str(rec["response"])
            except (ValueError, KeyError, TypeError) as exc:
                raise ConfigError(f"{path}:{n}: bad replay record ({exc})") from None
        return cls(records)

    def respond(self, request: Request) -> str:
        for version in (request.bundle.version_id, None):
            key = (version, request.mutant_id, request.run_index)
            if key in self.records:
                return self.records[key]
        raise RecognizerError(f"no replay response for {request.mutant_id} run {request.run_index}")


class RemoteRecognizer(Recognizer):
    """Chat-completion style HTTP endpoint.

    Transport errors, 429 and 5xx are retried with exponential backoff and
    jitter; anything else fails immediately.  The underlying
    ``httpx.Client`` is shared and safe across threads.
    """

    name = "remote"

    def __init__(
        self,
        endpoint: str,
        model: str = "default",
        temperature: float = 0.7,
        max_retries: int = 3,
        backoff: float = 1.0,
        timeout: float = 120.0,
        api_key: str | None = None,
        client: httpx.Client | None = None,
        system_prompt: str | None = None,
        seed: int = 0,
    ):
        if not endpoint:
            raise ConfigError("remote recognizer requires an endpoint")
        self.endpoint = endpoint
        self.model = model
        self.temperature = temperature
        self.max_retries = max_retries
        self.backoff = backoff
        self.system_prompt = system_prompt
        key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)
        headers = {"Authorization": f"Bearer {key}"} if key else {}
        self._client = client or httpx.Client(timeout=timeout, headers=headers)
        self._owns_client = client is None
        self._lock = threading.Lock()
        self._rng = random.Random(seed)

    def payload(self, prompt: Prompt) -> dict:
        messages = []
        if self.system_prompt:
            messages.append({"role": "system", "content": self.system_prompt})
        messages.append({"role": "user", "content": prompt.rendered})
        return {"model": self.model, "messages": messages, "temperature": self.temperature}

    def _sleep(self, attempt: int) -> None:
        with self._lock:
            jitter = self._rng.uniform(0, 0.25)
        time.sleep(self.backoff * (2**attempt) * (1 + jitter))

    def respond(self, request: Request) -> str:
        body = self.payload(request.prompt)
        last = "no attempt made"
        for attempt in range(self.max_retries + 1):
            try:
                resp = self._client.post(self.endpoint, json=body)
            except httpx.HTTPError as exc:
                last = f"{type(exc).__name__}: {exc}"
            else:
                if resp.status_code == 200:
                    try:
                        return resp.json()["choices"][0]["message"]["content"]
                    except (ValueError, KeyError, IndexError, TypeError):
                        raise RecognizerError(f"malformed response body: {resp.text[:200]!r}") from None
                last = f"HTTP {resp.status_code}"
                if resp.status_code != 429 and resp.status_code < 500:
                    raise RecognizerError(last)
            if attempt < self.max_retries:
                log.warning("recognizer call for %s run %d failed (%s); retrying",
                            request.mutant_id, request.run_index, last)
                self._sleep(attempt)
        raise RecognizerError(f"gave up after {self.max_retries + 1} attempts: {last}")

    def close(self) -> None:
        if self._owns_client:
            self._client.close()


RECOGNIZER_KINDS = ("null", "oracle", "replay", "remote")


def make_recognizer(
    kind: str,
    endpoint: str | None = None,
    replay: str | Path | None = None,
    model: str = "default",
    temperature: float = 0.7,
    max_retries: int = 3,
    seed: int = 0,
) -> Recognizer:
    if kind == "null":
        return NullRecognizer()
    if kind == "oracle":
        return OracleRecognizer()
    if kind == "replay":
        if not replay:
            raise ConfigError("replay recognizer requires a replay file")
        return ReplayRecognizer.from_file(replay)
    if kind == "remote":
        if not endpoint:
            raise ConfigError("remote recognizer requires an endpoint")
        return RemoteRecognizer(
            endpoint, model=model, temperature=temperature, max_retries=max_retries, seed=seed
        )
    raise ConfigError(f"unknown recognizer {kind!r}; choose from {', '.join(RECOGNIZER_KINDS)}")
