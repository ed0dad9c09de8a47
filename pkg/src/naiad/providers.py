"""Language-model providers and the HTTP transport seam.

Two provider implementations share one contract: an HTTP provider that
posts to a local model-serving endpoint, and a scripted provider driven by
a fixed rule table for hermetic, byte-deterministic tests. All outbound
HTTP in the engine goes through a Transport so tests can record or block
network activity.
"""

from __future__ import annotations

import re
import threading
from dataclasses import dataclass, field

from .errors import ProviderFailure

STAGE_MARKER_RE = re.compile(r"\[stage:(?P<stage>[a-z-]+)\]")


def stage_of(system_prompt: str) -> str | None:
    m = STAGE_MARKER_RE.search(system_prompt or "")
    return m.group("stage") if m else None


class Transport:
    """Thin wrapper over httpx so callers never import it directly."""

    def post_json(self, url: str, payload: dict, timeout: float = 30.0) -> dict:
        import httpx

        try:
            resp = httpx.post(url, json=payload, timeout=timeout)
        except httpx.HTTPError as exc:
            raise ConnectionError(f"POST {url} failed: {exc}") from exc
        if resp.status_code >= 400:
            raise ConnectionError(f"POST {url} returned {resp.status_code}: {resp.text}")
        return resp.json()


class RecordingTransport(Transport):
    """Records every outbound call; optionally forwards to an inner transport.

    With no inner transport it refuses all traffic, which is what --dry-run
    assertions rely on.
    """

    def __init__(self, inner: Transport | None = None):
        self.inner = inner
        self.calls: list[dict] = []
        self._lock = threading.Lock()

    def post_json(self, url: str, payload: dict, timeout: float = 30.0) -> dict:
        with self._lock:
            self.calls.append({"url": url, "payload": payload})
        if self.inner is None:
            raise ConnectionError(f"network disabled; refused POST {url}")
        return self.inner.post_json(url, payload, timeout=timeout)


class HttpProvider:
    """POSTs {model, system, prompt, temperature} to a serving endpoint."""

    def __init__(self, endpoint: str, model_id: str, transport: Transport | None = None):
        self.endpoint = endpoint
        self.model_id = model_id
        self.transport = transport or Transport()

    def complete(self, system: str, prompt: str, temperature: float = 0.0) -> str:
        payload = {
            "model": self.model_id,
            "system": system,
            "prompt": prompt,
            "temperature": temperature,
        }
        try:
            body = self.transport.post_json(self.endpoint, payload)
        except ConnectionError as exc:
            raise ProviderFailure(str(exc)) from exc
        text = body.get("text", "")
        if not text:
            raise ProviderFailure("provider returned an empty completion")
        return text


@dataclass
class ScriptRule:
    """One entry of a scripted provider's fixed response table.

    A rule fires when the stage marker in the system prompt matches (if set)
    and every `match` substring occurs in the user prompt (if set). Rules
    with a `responses` list step through it on repeated hits, which lets
    fixtures script repair loops (fail once, then fix).
    """

    response: str = ""
    stage: str | None = None
    match: str | list[str] | None = None
    responses: list[str] | None = None
    _hits: int = field(default=0, repr=False)

    def applies(self, stage: str | None, prompt: str) -> bool:
        if self.stage is not None and self.stage != stage:
            return False
        if self.match is not None:
            needles = [self.match] if isinstance(self.match, str) else self.match
            lowered = prompt.lower()
            if not all(n.lower() in lowered for n in needles):
                return False
        return True

    def next_response(self) -> str:
        if self.responses:
            idx = min(self._hits, len(self.responses) - 1)
            self._hits += 1
            return self.responses[idx]
        self._hits += 1
        return self.response


class ScriptedProvider:
    """Deterministic provider backed by a fixed, ordered rule table."""

    model_id = "scripted"

    def __init__(self, rules: list[ScriptRule]):
        self.rules = list(rules)
        self._lock = threading.Lock()

    def complete(self, system: str, prompt: str, temperature: float = 0.0) -> str:
        stage = stage_of(system)
        with self._lock:
            for rule in self.rules:
                if rule.applies(stage, prompt):
                    text = rule.next_response()
                    if not text:
                        raise ProviderFailure("scripted rule produced an empty completion")
                    return text
        raise ProviderFailure(
            f"no scripted rule matches stage={stage!r}, prompt head {prompt[:80]!r}"
        )


class CountingProvider:
    """Wraps a provider and counts/records calls; used by budget tests."""

    def __init__(self, inner):
        self.inner = inner
        self.calls: list[dict] = []
        self._lock = threading.Lock()

    @property
    def model_id(self) -> str:
        return self.inner.model_id

    @property
    def call_count(self) -> int:
        return len(self.calls)

    def complete(self, system: str, prompt: str, temperature: float = 0.0) -> str:
        with self._lock:
            self.calls.append({"system": system, "prompt": prompt, "temperature": temperature})
        return self.inner.complete(system, prompt, temperature)
