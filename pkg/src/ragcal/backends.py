"""Scoring backends: per-label raw log-scores for a rendered prompt.

Two implementations of the same contract:

* ``SyntheticBackend`` -- a deterministic generator whose preference for the
  gold label is controlled by a base-knowledge boost, a relevance boost that
  fires only when an answer-bearing document is in the prompt, and seeded
  Gaussian noise. Used for tests and protocol studies.
* ``RemoteBackend`` -- an HTTP client for the label-logprob protocol:
  ``POST /v1/label_logprobs`` with ``{"prompt": str, "labels": [str]}``
  returning ``{"model": str, "logprobs": [float]}`` (natural log, aligned to
  the request labels).

Raw scores are unnormalized; softmax lives in :mod:`ragcal.metrics` so every
backend is comparable downstream.
"""

from __future__ import annotations

import math
import os
import random
import time
from dataclasses import dataclass
from typing import Mapping, Protocol, Sequence

import requests

from ._hash import content_key, stable_hash64
from .contextgen import ScenarioSpec
from .dataset import QaItem
from .prompt import PromptInstance

LOGPROB_ROUTE = "/v1/label_logprobs"
AUTH_TOKEN_ENV = "RAGCAL_API_TOKEN"

DEFAULT_TIMEOUT = 120.0
DEFAULT_RETRIES = 3


class BackendError(RuntimeError):
    """A backend failed to produce usable scores."""


class TransportError(BackendError):
    """The remote endpoint could not be reached or kept failing."""


class SchemaError(BackendError):
    """The remote endpoint answered with a malformed payload."""


@dataclass(frozen=True)
class BackendId:
    kind: str  # "synthetic" | "remote"
    name: str

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("backend name must be non-empty")


class Backend(Protocol):
    id: BackendId

    def score_options(self, prompt: PromptInstance) -> list[float]: ...


def score_options(backend: Backend, prompt: PromptInstance) -> list[float]:
    """Score a prompt and validate the backend's answer shape."""
    v = backend.score_options(prompt)
    if len(v) != len(prompt.labels):
        raise BackendError(
            f"backend {backend.id.name!r} returned {len(v)} scores for "
            f"{len(prompt.labels)} labels"
        )
    if not all(math.isfinite(x) for x in v):
        raise BackendError(f"backend {backend.id.name!r} returned non-finite scores: {v}")
    return v


@dataclass(frozen=True)
class SyntheticConfig:
    """Knobs of the synthetic generator.

    ``base_knowledge`` is a logit boost the gold label always gets;
    ``relevance_sensitivity`` is an extra gold boost applied only when an
    answer-bearing document is present; ``distractor_noise`` is the stddev of
    seeded Gaussian noise added to every label.
    """

    base_knowledge: float = 0.0
    relevance_sensitivity: float = 0.0
    distractor_noise: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.distractor_noise < 0:
            raise ValueError("distractor_noise must be >= 0")

    @property
    def name(self) -> str:
        return "synthetic-" + content_key(
            self.base_knowledge, self.relevance_sensitivity, self.distractor_noise, self.seed
        )[:12]


def _noise(config: SyntheticConfig, item_id: str, scenario: ScenarioSpec, label_index: int) -> float:
    if config.distractor_noise == 0.0:
        return 0.0
    # Keyed per draw (counter-based), so evaluation order and parallelism
    # cannot change results. The scenario enters only through its seed field:
    # a model with relevance_sensitivity 0 must score identically across
    # mixtures and positions.
    key = stable_hash64(config.seed, item_id, scenario.seed, label_index)
    return random.Random(key).gauss(0.0, config.distractor_noise)


def synth_score(
    config: SyntheticConfig,
    item: QaItem,
    scenario: ScenarioSpec,
    answer_doc_present: bool,
) -> list[float]:
    """Raw log-scores for one item: gold boost plus per-label seeded noise."""
    boost = config.base_knowledge + (config.relevance_sensitivity if answer_doc_present else 0.0)
    scores = []
    for index in range(item.n_options):
        value = _noise(config, item.id, scenario, index)
        if index == item.gold_index:
            value += boost
        scores.append(value)
    return scores


class SyntheticBackend:
    """Deterministic, item-aware scorer; pure function of (config, prompt)."""

    def __init__(self, config: SyntheticConfig, items: Sequence[QaItem] | Mapping[str, QaItem]):
        self.config = config
        if isinstance(items, Mapping):
            self._items = dict(items)
        else:
            self._items = {item.id: item for item in items}
        self.id = BackendId(kind="synthetic", name=config.name)

    def score_options(self, prompt: PromptInstance) -> list[float]:
        try:
            item = self._items[prompt.item_id]
        except KeyError:
            raise BackendError(f"synthetic backend knows no item {prompt.item_id!r}") from None
        return synth_score(
            self.config,
            item,
            prompt.scenario,
            answer_doc_present=prompt.scenario.mixture.needs_rationale,
        )


def http_score(
    endpoint: str,
    prompt_text: str,
    labels: Sequence[str],
    *,
    session: requests.Session | None = None,
    timeout: float = DEFAULT_TIMEOUT,
    retries: int = DEFAULT_RETRIES,
    auth_token: str | None = None,
    backoff: float = 1.0,
) -> list[float]:
    """POST one scoring request to a label-logprob adapter.

    Retries transport failures and 5xx responses with exponential backoff
    (safe: the adapter contract is deterministic). 4xx responses are
    surfaced immediately with the adapter's error message.
    """
    url = endpoint.rstrip("/")
    if not url.endswith(LOGPROB_ROUTE):
        url += LOGPROB_ROUTE
    headers = {}
    if auth_token is None:
        auth_token = os.environ.get(AUTH_TOKEN_ENV)
    if auth_token:
        headers["Authorization"] = f"Bearer {auth_token}"
    payload = {"prompt": prompt_text, "labels": list(labels)}
    post = session.post if session is not None else requests.post

    last_error: Exception | None = None
    for attempt in range(retries + 1):
        try:
            response = post(url, json=payload, headers=headers, timeout=timeout)
        except requests.RequestException as exc:
            last_error = TransportError(f"request to {url} failed: {exc}")
        else:
            if 400 <= response.status_code < 500:
                detail = ""
                try:
                    detail = response.json().get("error", "")
                except ValueError:
                    detail = response.text[:200]
                raise BackendError(f"{url} rejected the request ({response.status_code}): {detail}")
            if response.status_code >= 500:
                last_error = TransportError(f"{url} answered {response.status_code}")
            else:
                return _parse_logprobs(response, labels, url)
        if attempt < retries:
            time.sleep(backoff * (2**attempt))
    raise last_error if last_error is not None else TransportError(f"request to {url} failed")


def _parse_logprobs(response: requests.Response, labels: Sequence[str], url: str) -> list[float]:
    try:
        body = response.json()
    except ValueError:
        raise SchemaError(f"{url} returned non-JSON body") from None
    logprobs = body.get("logprobs")
    if not isinstance(logprobs, list) or not all(isinstance(x, (int, float)) for x in logprobs):
        raise SchemaError(f"{url} response lacks a numeric 'logprobs' list")
    if len(logprobs) != len(labels):
        missing = list(labels[len(logprobs):]) or list(labels)
        raise SchemaError(
            f"{url} returned {len(logprobs)} logprobs for {len(labels)} labels; "
            f"missing scores for {missing}"
        )
    values = [float(x) for x in logprobs]
    if not all(math.isfinite(x) for x in values):
        raise SchemaError(f"{url} returned non-finite logprobs: {values}")
    return values


class RemoteBackend:
    """Client for a label-logprob adapter service.

    Shareable across worker threads; the run orchestrator bounds in-flight
    requests, so no extra limiting happens here.
    """

    def __init__(
        self,
        endpoint: str,
        model: str | None = None,
        *,
        timeout: float = DEFAULT_TIMEOUT,
        retries: int = DEFAULT_RETRIES,
        auth_token: str | None = None,
    ):
        self.endpoint = endpoint
        self.timeout = timeout
        self.retries = retries
        self._auth_token = auth_token
        self._session = requests.Session()
        name = model if model else endpoint.replace("://", "-").strip("/").replace("/", "-")
        self.id = BackendId(kind="remote", name=name)

    def score_options(self, prompt: PromptInstance) -> list[float]:
        return http_score(
            self.endpoint,
            prompt.text,
            prompt.labels,
            session=self._session,
            timeout=self.timeout,
            retries=self.retries,
            auth_token=self._auth_token,
        )
