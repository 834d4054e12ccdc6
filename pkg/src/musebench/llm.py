"""Client plumbing for chat-completion style LLM endpoints.

The rest of the package only builds ``LlmRequest`` values and consumes
``LlmResponse`` text, so the network layer stays swappable: tests point
the endpoint at a local stub and the pipelines never notice.

Responses are cached on disk keyed by a SHA-256 of the canonical
request JSON. A repeated request is served from the cache without
touching the network, which makes pipeline runs reproducible and
restartable. Cache writes go through a temp file and ``os.replace`` so
a crashed run never leaves a half-written entry behind.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

import requests

from .errors import DispatchError, ResponseFormatError, ValidationFailure

ENDPOINT_ENV = "MUSEBENCH_LLM_ENDPOINT"
TOKEN_ENV = "MUSEBENCH_LLM_TOKEN"

_RETRYABLE_STATUS = frozenset({429, 500, 502, 503, 504})


@dataclass(frozen=True)
class LlmRequest:
    """One instruction for the external model.

    ``params`` carries decoding parameters (temperature and friends)
    straight into the HTTP payload; the template builders leave it
    empty and the config layer fills it in. ``attempt`` is a
    regeneration counter: it changes the cache key without changing the
    payload, so re-requesting after a bad parse draws a fresh sample
    instead of replaying the cached one.
    """

    instruction: str
    model: str = "gpt-4"
    params: Mapping[str, object] = field(default_factory=dict)
    attempt: int = 0

    def __post_init__(self):
        if not self.instruction:
            raise ValidationFailure("instruction text must be non-empty")

    def canonical_json(self) -> str:
        payload = {
            "attempt": self.attempt,
            "instruction": self.instruction,
            "model": self.model,
            "params": dict(sorted(self.params.items())),
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False)

    def cache_key(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class LlmResponse:
    text: str
    status: int
    cached: bool = False


@dataclass(frozen=True)
class ClientConfig:
    """Where and how to talk to the endpoint.

    endpoint/token fall back to the MUSEBENCH_LLM_ENDPOINT and
    MUSEBENCH_LLM_TOKEN environment variables when unset.
    """

    endpoint: str | None = None
    token: str | None = None
    cache_dir: str | Path | None = None
    timeout: float = 30.0
    retries: int = 3
    backoff: float = 0.5
    max_in_flight: int = 4

    def resolved_endpoint(self) -> str:
        url = self.endpoint or os.environ.get(ENDPOINT_ENV, "")
        if not url:
            raise DispatchError(
                f"no LLM endpoint configured; set {ENDPOINT_ENV} or pass endpoint="
            )
        return url

    def resolved_token(self) -> str | None:
        return self.token or os.environ.get(TOKEN_ENV) or None


def _cache_path(config: ClientConfig, request: LlmRequest) -> Path | None:
    if config.cache_dir is None:
        return None
    return Path(config.cache_dir) / f"{request.cache_key()}.json"


def _cache_load(path: Path) -> LlmResponse | None:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
        return LlmResponse(text=obj["response"]["text"], status=int(obj["response"]["status"]), cached=True)
    except (OSError, ValueError, KeyError, TypeError):
        # a corrupt or missing entry is a miss, never a failure
        return None


def _cache_store(path: Path, request: LlmRequest, response: LlmResponse) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    obj = {
        "request": json.loads(request.canonical_json()),
        "response": {"text": response.text, "status": response.status},
    }
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(obj, fh, ensure_ascii=False, indent=2)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _extract_text(body: object) -> str:
    if isinstance(body, Mapping):
        choices = body.get("choices")
        if isinstance(choices, list) and choices:
            first = choices[0]
            if isinstance(first, Mapping):
                msg = first.get("message")
                if isinstance(msg, Mapping) and isinstance(msg.get("content"), str):
                    return msg["content"]
                if isinstance(first.get("text"), str):
                    return first["text"]
        if isinstance(body.get("text"), str):
            return body["text"]
    raise DispatchError("endpoint returned an unrecognized response shape")


def dispatch(request: LlmRequest, config: ClientConfig, *, session=None) -> LlmResponse:
    """Send one request, honoring the cache and the retry budget.

    Network errors and retryable HTTP statuses (429/5xx) back off
    exponentially; any other non-2xx status fails immediately with the
    response body in the message.
    """
    cache_file = _cache_path(config, request)
    if cache_file is not None:
        hit = _cache_load(cache_file)
        if hit is not None:
            return hit

    url = config.resolved_endpoint()
    headers = {"Content-Type": "application/json"}
    token = config.resolved_token()
    if token:
        headers["Authorization"] = f"Bearer {token}"
    payload = {
        "model": request.model,
        "messages": [{"role": "user", "content": request.instruction}],
    }
    payload.update(request.params)

    http = session or requests
    last_err: Exception | None = None
    for i in range(config.retries + 1):
        if i:
            time.sleep(config.backoff * (2 ** (i - 1)))
        try:
            resp = http.post(url, json=payload, headers=headers, timeout=config.timeout)
        except requests.RequestException as exc:
            last_err = exc
            continue
        if resp.status_code in _RETRYABLE_STATUS:
            last_err = DispatchError(f"HTTP {resp.status_code}")
            continue
        if not 200 <= resp.status_code < 300:
            raise DispatchError(
                f"endpoint answered HTTP {resp.status_code}: {resp.text[:500]}"
            )
        try:
            body = resp.json()
        except ValueError as exc:
            raise DispatchError(f"endpoint returned non-JSON body: {exc}") from exc
        result = LlmResponse(text=_extract_text(body), status=resp.status_code)
        if cache_file is not None:
            _cache_store(cache_file, request, result)
        return result
    raise DispatchError(
        f"request failed after {config.retries + 1} attempts: {last_err}"
    )


def dispatch_many(requests_: Sequence[LlmRequest], config: ClientConfig) -> list[LlmResponse]:
    """Dispatch a batch with bounded concurrency, preserving order."""
    if not requests_:
        return []
    workers = max(1, min(config.max_in_flight, len(requests_)))
    session = requests.Session()
    try:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda r: dispatch(r, config, session=session), requests_))
    finally:
        session.close()


def dispatch_parsed(
    request: LlmRequest,
    config: ClientConfig,
    parser: Callable[[str], object],
    *,
    max_regen: int = 3,
    session=None,
):
    """Dispatch and parse, re-requesting on malformed responses.

    Each regeneration bumps the request's attempt counter so the cache
    does not replay the response that just failed to parse. After
    ``max_regen`` extra tries the last ResponseFormatError propagates;
    callers decide what a permanently unparseable element means.
    """
    last: ResponseFormatError | None = None
    for attempt in range(max_regen + 1):
        req = dataclasses.replace(request, attempt=attempt) if attempt else request
        response = dispatch(req, config, session=session)
        try:
            return parser(response.text)
        except ResponseFormatError as exc:
            last = exc
    assert last is not None
    raise last
