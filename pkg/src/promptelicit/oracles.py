"""Provider-agnostic clients for the language oracle and the image renderer.

Three interchangeable backends exist for each service:

* scripted — fixture lookup plus deterministic synthesized defaults; the
  workhorse for tests, benchmarks, and offline demo sessions.
* live — a generic JSON-over-HTTP client with retries and schema
  validation, configured by endpoint/model/credential reference.
* journal replay — serves responses recorded in a session journal, used to
  verify that a recorded session reconstructs byte-identically.

Every response, regardless of backend, is validated against the response
schema for its request kind; violations surface as SchemaError so callers
can apply their documented fallbacks instead of absorbing silent defaults.
"""

from __future__ import annotations

import hashlib
import logging
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Mapping, Protocol

from .errors import OracleError, RenderError, ReplayMismatch, SchemaError
from .journal import Journal, canonical_json

log = logging.getLogger(__name__)


class OracleKind(str, Enum):
    EXTRACT_FEATURES = "extract_features"
    PROPOSE_FEATURES = "propose_features"
    SAMPLE_INTENT = "sample_intent"
    RATE_WEIGHT = "rate_weight"
    OPTION_VALUES = "option_values"
    GUIDELINES = "guidelines"
    SYNTHESIZE = "synthesize"
    SIMULATE_ANSWER = "simulate_answer"


@dataclass(frozen=True)
class OracleRequest:
    """One structured call to the language oracle."""

    kind: OracleKind
    payload: Mapping[str, Any]
    temperature: float = 0.0
    request_id: str | None = None

    def payload_hash(self) -> str:
        return hashlib.sha256(canonical_json(dict(self.payload)).encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class RenderRequest:
    """One text-to-image render call; the seed is always explicit."""

    prompt: str
    seed: int
    parameters: Mapping[str, Any] = field(default_factory=lambda: dict(DEFAULT_RENDER_PARAMS))
    request_id: str | None = None

    def payload(self) -> dict:
        return {"prompt": self.prompt, "seed": self.seed, "parameters": dict(self.parameters)}


#: Default generation parameters for the renderer (fast distilled-model profile).
DEFAULT_RENDER_PARAMS: dict[str, Any] = {"steps": 8, "width": 1024, "height": 1024}

GENERIC_GUIDELINES = (
    "Write one vivid, concrete sentence per visual requirement. Lead with the "
    "subject, then style, palette, lighting, and composition. Avoid negations "
    "and vague qualifiers; prefer nameable techniques and materials."
)


# ---------------------------------------------------------------------------
# Response schemas
# ---------------------------------------------------------------------------

def _require(cond: bool, kind: OracleKind, msg: str) -> None:
    if not cond:
        raise SchemaError(f"{kind.value}: {msg}")


def _is_str_list(val: Any) -> bool:
    return isinstance(val, list) and all(isinstance(x, str) for x in val)


def validate_response(kind: OracleKind, data: Any, payload: Mapping[str, Any] | None = None) -> dict:
    """Check ``data`` against the response schema for ``kind``.

    Returns the (unmodified) response dict; raises SchemaError otherwise.
    """
    _require(isinstance(data, dict), kind, f"response must be an object, got {type(data).__name__}")
    if kind is OracleKind.EXTRACT_FEATURES:
        pairs = data.get("pairs")
        _require(isinstance(pairs, list), kind, "missing 'pairs' list")
        for item in pairs:
            _require(isinstance(item, dict), kind, "each pair must be an object")
            _require(isinstance(item.get("feature"), str), kind, "pair missing 'feature' string")
            _require(isinstance(item.get("value"), str), kind, "pair missing 'value' string")
    elif kind is OracleKind.PROPOSE_FEATURES:
        _require(_is_str_list(data.get("features")), kind, "missing 'features' string list")
    elif kind is OracleKind.SAMPLE_INTENT:
        samples = data.get("samples")
        _require(isinstance(samples, list) and len(samples) > 0, kind, "missing non-empty 'samples' list")
        for s in samples:
            _require(isinstance(s, dict), kind, "each sample must be an object")
            _require(all(isinstance(k, str) and isinstance(v, str) for k, v in s.items()),
                     kind, "sample assignments must map strings to strings")
        if payload is not None and "count" in payload:
            _require(len(samples) == payload["count"], kind,
                     f"expected {payload['count']} samples, got {len(samples)}")
    elif kind is OracleKind.RATE_WEIGHT:
        rating = data.get("rating")
        _require(isinstance(rating, (int, float)) and not isinstance(rating, bool),
                 kind, "missing numeric 'rating'")
    elif kind is OracleKind.OPTION_VALUES:
        _require(_is_str_list(data.get("options")), kind, "missing 'options' string list")
    elif kind is OracleKind.GUIDELINES:
        _require(isinstance(data.get("guidelines"), str) and data["guidelines"].strip() != "",
                 kind, "missing non-empty 'guidelines' text")
    elif kind is OracleKind.SYNTHESIZE:
        _require(isinstance(data.get("prompt"), str) and data["prompt"].strip() != "",
                 kind, "missing non-empty 'prompt' text")
    elif kind is OracleKind.SIMULATE_ANSWER:
        idx, other = data.get("option_index"), data.get("other_text")
        _require(idx is None or (isinstance(idx, int) and not isinstance(idx, bool)),
                 kind, "'option_index' must be an integer or null")
        _require(other is None or isinstance(other, str), kind, "'other_text' must be a string or null")
        _require(idx is not None or (other is not None and other.strip() != ""),
                 kind, "answer must carry an option index or residual text")
    else:  # pragma: no cover - enum is closed
        raise SchemaError(f"unknown oracle kind {kind!r}")
    return data


class OracleBackend(Protocol):
    def call(self, req: OracleRequest, meta: dict | None = None) -> dict: ...


class RenderBackend(Protocol):
    def render(self, req: RenderRequest, meta: dict | None = None) -> str: ...


# ---------------------------------------------------------------------------
# Scripted backends
# ---------------------------------------------------------------------------

def fixture_key(kind: OracleKind, payload: Mapping[str, Any]) -> tuple[str, str]:
    """Fixture map key: request kind plus canonical payload hash."""
    digest = hashlib.sha256(canonical_json(dict(payload)).encode("utf-8")).hexdigest()
    return (kind.value, digest)


class ScriptedBackend:
    """Deterministic oracle: fixture lookup, then synthesized defaults.

    ``strict=True`` turns a missing fixture into OracleError instead of a
    default, which is how tests pin the exact call sequence. A
    ``default_provider`` callable may supply payload-aware defaults (the
    benchmark binds one per case); whatever it declines falls through to
    the generic per-kind defaults below. Replaying an identical request
    sequence always yields identical responses.
    """

    def __init__(self, fixtures: Mapping[tuple[str, str], dict] | None = None,
                 strict: bool = False,
                 default_provider: Callable[[OracleRequest], dict | None] | None = None,
                 journal: Journal | None = None,
                 seed: int = 0):
        self.fixtures = dict(fixtures or {})
        self.strict = strict
        self.default_provider = default_provider
        self.journal = journal or Journal()
        self.seed = seed
        self._counter = 0
        self._lock = threading.Lock()

    def add_fixture(self, kind: OracleKind, payload: Mapping[str, Any], response: dict) -> None:
        self.fixtures[fixture_key(kind, payload)] = response

    def _next_id(self, kind: OracleKind) -> str:
        with self._lock:
            self._counter += 1
            return f"{kind.value}-{self._counter}"

    def call(self, req: OracleRequest, meta: dict | None = None) -> dict:
        request_id = req.request_id or self._next_id(req.kind)
        self.journal.record_request("oracle", req.kind.value, request_id, dict(req.payload), meta)
        try:
            data = self._lookup(req)
        except (OracleError, SchemaError) as exc:
            self.journal.record_response("oracle", req.kind.value, request_id,
                                         {"error": str(exc)}, status="error")
            raise
        self.journal.record_response("oracle", req.kind.value, request_id, data)
        return data

    def _lookup(self, req: OracleRequest) -> dict:
        key = fixture_key(req.kind, req.payload)
        if key in self.fixtures:
            return validate_response(req.kind, self.fixtures[key], req.payload)
        if self.strict:
            raise OracleError(f"no fixture for {req.kind.value} payload hash {key[1][:12]}")
        if self.default_provider is not None:
            data = self.default_provider(req)
            if data is not None:
                return validate_response(req.kind, data, req.payload)
        return validate_response(req.kind, generic_default(req), req.payload)


def generic_default(req: OracleRequest) -> dict:
    """Minimal deterministic response for any request kind."""
    payload = req.payload
    kind = req.kind
    if kind is OracleKind.EXTRACT_FEATURES:
        return {"pairs": []}
    if kind is OracleKind.PROPOSE_FEATURES:
        return {"features": []}
    if kind is OracleKind.SAMPLE_INTENT:
        features = list(payload.get("features", []))
        spec_values = {r["feature"]: r["value"] for r in payload.get("requirements", [])}
        sample = {f: spec_values.get(f, f"{f} default") for f in features}
        for feat, val in spec_values.items():
            sample.setdefault(feat, val)
        return {"samples": [dict(sample) for _ in range(int(payload.get("count", 1)))]}
    if kind is OracleKind.RATE_WEIGHT:
        return {"rating": 1.0}
    if kind is OracleKind.OPTION_VALUES:
        feature = payload.get("feature", "feature")
        limit = int(payload.get("max_options", 4))
        return {"options": [f"{feature} option {i}" for i in range(1, limit + 1)]}
    if kind is OracleKind.GUIDELINES:
        return {"guidelines": GENERIC_GUIDELINES}
    if kind is OracleKind.SYNTHESIZE:
        if "rewrite_of" in payload:
            return {"prompt": f"{payload['rewrite_of']}, sharply detailed, balanced composition"}
        parts = [r["value"] for r in payload.get("requirements", [])]
        return {"prompt": ", ".join(parts) if parts else "untitled scene"}
    if kind is OracleKind.SIMULATE_ANSWER:
        return {"option_index": 0, "reasoning": "default scripted pick"}
    raise OracleError(f"no generic default for kind {kind!r}")  # pragma: no cover


class DemoOracle:
    """Default provider with a small built-in design-feature catalog.

    Powers interactive sessions and replay fixtures without any network:
    it proposes features from a fixed catalog, offers canned value options,
    votes deterministically, and composes prompts with the same join rule
    as the synthesis fallback. Pure function of (payload, seed) so replays
    and restarts observe identical behavior.
    """

    CATALOG: tuple[tuple[str, float, tuple[str, ...]], ...] = (
        ("graphic motif", 0.9, ("mountain silhouette", "hiking boots", "winding trail", "backpack")),
        ("color scheme", 0.8, ("dark blue", "earth tones", "vibrant orange", "pastel green")),
        ("artistic style", 0.7, ("flat minimalist", "watercolor", "line art", "retro badge")),
        ("lighting", 0.55, ("golden hour", "soft diffuse", "dramatic backlight", "neutral studio")),
        ("mood", 0.5, ("serene", "adventurous", "cozy", "energetic")),
        ("composition", 0.45, ("centered emblem", "rule of thirds", "radial", "asymmetric")),
        ("background", 0.35, ("solid color", "subtle gradient", "starry sky", "plain white")),
    )

    def __init__(self, seed: int = 0):
        self.seed = seed
        self._by_feature = {name: (weight, pool) for name, weight, pool in self.CATALOG}

    def _offset(self, *parts: object) -> int:
        text = "|".join(str(p) for p in (self.seed, *parts))
        return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:4], "big")

    def __call__(self, req: OracleRequest) -> dict | None:
        payload = req.payload
        kind = req.kind
        if kind is OracleKind.EXTRACT_FEATURES:
            prompt = str(payload.get("prompt", "")).strip()
            return {"pairs": [{"feature": "theme", "value": prompt}]} if prompt else {"pairs": []}
        if kind is OracleKind.PROPOSE_FEATURES:
            have = {r["feature"] for r in payload.get("requirements", [])}
            fresh = [name for name, _, _ in self.CATALOG if name not in have]
            return {"features": fresh[: int(payload.get("max_features", len(fresh)))]}
        if kind is OracleKind.OPTION_VALUES:
            feature = payload.get("feature", "")
            if feature in self._by_feature:
                return {"options": list(self._by_feature[feature][1])}
            return None
        if kind is OracleKind.RATE_WEIGHT:
            feature = payload.get("feature", "")
            if feature in self._by_feature:
                return {"rating": self._by_feature[feature][0]}
            return None
        if kind is OracleKind.SAMPLE_INTENT:
            features = list(payload.get("features", []))
            spec_values = {r["feature"]: r["value"] for r in payload.get("requirements", [])}
            count = int(payload.get("count", 1))
            samples = []
            for k in range(count):
                assignment = dict(spec_values)
                for feat in features:
                    if feat in spec_values:
                        assignment[feat] = spec_values[feat]
                        continue
                    pool = self._by_feature.get(feat, (0.0, (f"{feat} variant A", f"{feat} variant B")))[1]
                    assignment[feat] = pool[(self._offset("vote", feat) + k) % len(pool)]
                samples.append(assignment)
            return {"samples": samples}
        return None  # guidelines/synthesize/simulate_answer fall through to generic defaults


class ScriptedRenderer:
    """Deterministic renderer: handle derived from (prompt hash, seed).

    With a ``media_dir`` it also writes a small solid-color placeholder PNG
    (color derived from the same hash) so interactive clients have real
    bytes to display; without one it returns handles only.
    """

    def __init__(self, media_dir: str | Path | None = None, handle_prefix: str = "",
                 journal: Journal | None = None, fail_on: Callable[[RenderRequest], bool] | None = None):
        self.media_dir = Path(media_dir) if media_dir is not None else None
        self.handle_prefix = handle_prefix
        self.journal = journal or Journal()
        self.fail_on = fail_on
        self._counter = 0
        self._lock = threading.Lock()

    def _next_id(self) -> str:
        with self._lock:
            self._counter += 1
            return f"render-{self._counter}"

    def render(self, req: RenderRequest, meta: dict | None = None) -> str:
        if not req.prompt.strip():
            raise ValueError("render prompt must be non-empty")
        request_id = req.request_id or self._next_id()
        self.journal.record_request("render", "render_image", request_id, req.payload(), meta)
        if self.fail_on is not None and self.fail_on(req):
            self.journal.record_response("render", "render_image", request_id,
                                         {"error": "scripted render failure"}, status="error")
            raise RenderError("scripted render failure")
        digest = hashlib.sha256(f"{req.prompt}|{req.seed}|{canonical_json(dict(req.parameters))}"
                                .encode("utf-8")).hexdigest()
        name = f"{digest[:16]}-{req.seed}.png"
        handle = f"{self.handle_prefix}{name}"
        if self.media_dir is not None:
            self._write_placeholder(self.media_dir / name, digest)
        self.journal.record_response("render", "render_image", request_id, {"handle": handle})
        return handle

    @staticmethod
    def _write_placeholder(path: Path, digest: str) -> None:
        if path.exists():
            return
        from PIL import Image

        color = tuple(int(digest[i:i + 2], 16) for i in (0, 2, 4))
        path.parent.mkdir(parents=True, exist_ok=True)
        Image.new("RGB", (64, 64), color).save(path, format="PNG")


# ---------------------------------------------------------------------------
# Live backends
# ---------------------------------------------------------------------------

@dataclass
class LiveSettings:
    """Connection settings for the live oracle/renderer endpoints."""

    oracle_endpoint: str = ""
    oracle_model: str = ""
    render_endpoint: str = ""
    credential_env: str = "PROMPTELICIT_API_KEY"
    timeout: float = 60.0
    max_retries: int = 2
    backoff: float = 0.5


class LiveOracleBackend:
    """JSON-over-HTTP oracle client with bounded retries.

    POSTs ``{kind, payload, model, temperature}`` and expects the kind's
    response schema back. Transient transport faults and 5xx responses are
    retried up to ``max_retries`` times with exponential backoff; schema
    violations are never retried (the provider answered, just badly).
    """

    def __init__(self, settings: LiveSettings, journal: Journal | None = None,
                 transport: Any | None = None, sleep: Callable[[float], None] = time.sleep):
        import httpx

        self.settings = settings
        self.journal = journal or Journal()
        self._client = transport or httpx.Client(timeout=settings.timeout)
        self._sleep = sleep
        self._counter = 0
        self._lock = threading.Lock()

    def _next_id(self, kind: OracleKind) -> str:
        with self._lock:
            self._counter += 1
            return f"{kind.value}-{self._counter}"

    def _headers(self) -> dict:
        import os

        token = os.environ.get(self.settings.credential_env, "")
        return {"Authorization": f"Bearer {token}"} if token else {}

    def call(self, req: OracleRequest, meta: dict | None = None) -> dict:
        import httpx

        request_id = req.request_id or self._next_id(req.kind)
        body = {"kind": req.kind.value, "payload": dict(req.payload),
                "model": self.settings.oracle_model, "temperature": req.temperature}
        self.journal.record_request("oracle", req.kind.value, request_id, dict(req.payload), meta)
        last_fault = "unknown"
        for attempt in range(self.settings.max_retries + 1):
            if attempt > 0:
                self._sleep(self.settings.backoff * (2 ** (attempt - 1)))
            try:
                resp = self._client.post(self.settings.oracle_endpoint, json=body,
                                         headers=self._headers())
            except httpx.HTTPError as exc:
                last_fault = f"transport: {exc}"
                self.journal.record_retry("oracle", req.kind.value, request_id, attempt + 1, last_fault)
                continue
            if resp.status_code >= 500:
                last_fault = f"server error {resp.status_code}"
                self.journal.record_retry("oracle", req.kind.value, request_id, attempt + 1, last_fault)
                continue
            if resp.status_code >= 400:
                self.journal.record_response("oracle", req.kind.value, request_id,
                                             {"error": f"status {resp.status_code}"}, status="error")
                raise OracleError(f"{req.kind.value}: request rejected with status {resp.status_code}")
            try:
                data = resp.json()
            except ValueError as exc:
                self.journal.record_response("oracle", req.kind.value, request_id,
                                             {"error": "non-JSON response"}, status="error")
                raise SchemaError(f"{req.kind.value}: non-JSON response") from exc
            data = validate_response(req.kind, data, req.payload)
            self.journal.record_response("oracle", req.kind.value, request_id, data)
            return data
        self.journal.record_response("oracle", req.kind.value, request_id,
                                     {"error": last_fault}, status="error")
        raise OracleError(f"{req.kind.value}: retries exhausted ({last_fault})")


class LiveRenderer:
    """HTTP renderer client; stores returned image bytes content-addressed."""

    def __init__(self, settings: LiveSettings, media_dir: str | Path,
                 handle_prefix: str = "", journal: Journal | None = None,
                 transport: Any | None = None, sleep: Callable[[float], None] = time.sleep):
        import httpx

        self.settings = settings
        self.media_dir = Path(media_dir)
        self.handle_prefix = handle_prefix
        self.journal = journal or Journal()
        self._client = transport or httpx.Client(timeout=settings.timeout)
        self._sleep = sleep
        self._counter = 0
        self._lock = threading.Lock()

    def render(self, req: RenderRequest, meta: dict | None = None) -> str:
        import base64

        import httpx

        if not req.prompt.strip():
            raise ValueError("render prompt must be non-empty")
        with self._lock:
            self._counter += 1
            request_id = req.request_id or f"render-{self._counter}"
        self.journal.record_request("render", "render_image", request_id, req.payload(), meta)
        body = req.payload()
        last_fault = "unknown"
        for attempt in range(self.settings.max_retries + 1):
            if attempt > 0:
                self._sleep(self.settings.backoff * (2 ** (attempt - 1)))
            try:
                resp = self._client.post(self.settings.render_endpoint, json=body)
            except httpx.HTTPError as exc:
                last_fault = f"transport: {exc}"
                self.journal.record_retry("render", "render_image", request_id, attempt + 1, last_fault)
                continue
            if resp.status_code >= 500:
                last_fault = f"server error {resp.status_code}"
                self.journal.record_retry("render", "render_image", request_id, attempt + 1, last_fault)
                continue
            if resp.status_code >= 400:
                self.journal.record_response("render", "render_image", request_id,
                                             {"error": f"status {resp.status_code}"}, status="error")
                raise RenderError(f"render rejected with status {resp.status_code}")
            payload = resp.json()
            blob = payload.get("image_b64")
            if not isinstance(blob, str):
                self.journal.record_response("render", "render_image", request_id,
                                             {"error": "missing image_b64"}, status="error")
                raise RenderError("render response missing 'image_b64'")
            raw = base64.b64decode(blob)
            digest = hashlib.sha256(raw).hexdigest()
            name = f"{digest[:16]}-{req.seed}.png"
            self.media_dir.mkdir(parents=True, exist_ok=True)
            (self.media_dir / name).write_bytes(raw)
            handle = f"{self.handle_prefix}{name}"
            self.journal.record_response("render", "render_image", request_id, {"handle": handle})
            return handle
        self.journal.record_response("render", "render_image", request_id,
                                     {"error": last_fault}, status="error")
        raise RenderError(f"render retries exhausted ({last_fault})")


# ---------------------------------------------------------------------------
# Journal replay
# ---------------------------------------------------------------------------

class JournalReplayBackend:
    """Serves oracle and render responses verbatim from a recorded journal.

    Requests are matched per channel in FIFO order against the recorded
    exchange sequence; a kind or payload mismatch means the caller diverged
    from the recording and raises OracleError/RenderError with context.
    """

    def __init__(self, entries: list[dict], journal: Journal | None = None):
        self.journal = journal or Journal()
        pending: dict[str, dict] = {}
        self._queues: dict[str, list[tuple[dict, dict]]] = {"oracle": [], "render": []}
        for entry in entries:
            if entry.get("event") == "request":
                pending[entry["request_id"]] = entry
            elif entry.get("event") == "response":
                request = pending.pop(entry.get("request_id"), None)
                if request is not None:
                    self._queues.setdefault(request["channel"], []).append((request, entry))
        self._lock = threading.Lock()

    def _pop(self, channel: str, kind: str, payload: dict) -> dict:
        with self._lock:
            queue = self._queues.get(channel, [])
            if not queue:
                raise ReplayMismatch(f"{channel}: journal exhausted, live run issued extra {kind} request")
            request, response = queue.pop(0)
        if request["kind"] != kind or canonical_json(request["payload"]) != canonical_json(payload):
            raise ReplayMismatch(
                f"{channel}: request mismatch, recorded {request['kind']} but replay issued {kind}")
        if response.get("status") != "ok":
            raise ReplayMismatch(f"{channel}: recorded {kind} exchange ended in error")
        return response["data"]

    def call(self, req: OracleRequest, meta: dict | None = None) -> dict:
        request_id = req.request_id or f"replay-{req.kind.value}"
        self.journal.record_request("oracle", req.kind.value, request_id, dict(req.payload), meta)
        data = validate_response(req.kind, self._pop("oracle", req.kind.value, dict(req.payload)),
                                 req.payload)
        self.journal.record_response("oracle", req.kind.value, request_id, data)
        return data

    def render(self, req: RenderRequest, meta: dict | None = None) -> str:
        request_id = req.request_id or "replay-render"
        self.journal.record_request("render", "render_image", request_id, req.payload(), meta)
        data = self._pop("render", "render_image", req.payload())
        handle = data.get("handle")
        if not isinstance(handle, str):
            raise ReplayMismatch("render: recorded response missing handle")
        self.journal.record_response("render", "render_image", request_id, data)
        return handle

