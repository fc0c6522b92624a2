"""Alignment scorers: a deterministic desk-scale reference pair plus a
registry for remote embedding-backed plugins.

All registered scorers return values in [0,1] with higher meaning better
aligned. The two built-ins need no network: feature coverage counts
matched ground-truth features, and text similarity runs a fixed
hashing-based bag-of-tokens embedding through cosine similarity.
"""

from __future__ import annotations

import hashlib
import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Mapping

from .errors import OracleError
from .intent import Specification
from .matching import match_option, normalize_label

_TOKEN = re.compile(r"[a-z0-9]+")

#: Dimensionality of the hashing embedding; large enough that short texts
#: rarely collide, small enough to stay cheap.
EMBED_DIM = 256


def score_feature_coverage(spec_or_prompt: Specification | str,
                           truth: Mapping[str, str]) -> float:
    """Fraction of ground-truth features whose values appear in the argument.

    Against a Specification, a truth pair counts when the matcher maps the
    true value onto the specified value for that feature. Against a prompt
    string, it counts when the normalized true value occurs as a
    substring.
    """
    if not truth:
        raise ValueError("ground-truth intent must be non-empty")
    matched = 0
    if isinstance(spec_or_prompt, Specification):
        for feature, true_value in truth.items():
            spec_value = spec_or_prompt.value_of(feature)
            if spec_value is not None and match_option(true_value, [spec_value]) == 0:
                matched += 1
    else:
        norm_text = normalize_label(spec_or_prompt)
        for true_value in truth.values():
            if normalize_label(true_value) in norm_text:
                matched += 1
    return matched / len(truth)


def hashing_embedding(text: str) -> list[float]:
    """Fixed bag-of-tokens embedding: each token hashes to one signed bucket."""
    vec = [0.0] * EMBED_DIM
    for token in _TOKEN.findall(text.lower()):
        digest = hashlib.sha256(token.encode("utf-8")).digest()
        index = int.from_bytes(digest[:4], "big") % EMBED_DIM
        sign = 1.0 if digest[4] & 1 else -1.0
        vec[index] += sign
    return vec


def _token_bag(text: str) -> Counter:
    return Counter(_TOKEN.findall(text.lower()))


def cosine(a: list[float], b: list[float]) -> float:
    dot = sum(x * y for x, y in zip(a, b))
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(y * y for y in b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return dot / (na * nb)


def score_text_similarity(a: str, b: str,
                          embed: Callable[[str], list[float]] = hashing_embedding) -> float:
    """Cosine similarity of embeddings mapped to [0,1] via (1+cos)/2.

    With the default deterministic backend, identical token bags score
    exactly 1.0 and token-disjoint texts score 0.5 up to hash-bucket
    collisions (none occur below roughly a hundred distinct tokens in
    practice; the bound is documented, not guaranteed).
    """
    if not a.strip() or not b.strip():
        raise ValueError("both texts must be non-empty")
    if embed is hashing_embedding and _token_bag(a) == _token_bag(b):
        # exact identity without trusting sqrt round-trips
        return 1.0
    return (1.0 + cosine(embed(a), embed(b))) / 2.0


@dataclass(frozen=True)
class Scorer:
    """A named scorer with its comparison modality."""

    name: str
    modality: str  # text_text | image_image | text_image | feature_coverage
    fn: Callable[..., float]


class RemoteEmbeddingScorer:
    """Text scorer backed by a remote embedding endpoint."""

    def __init__(self, endpoint: str, timeout: float = 30.0, transport=None):
        import httpx

        self.endpoint = endpoint
        self._client = transport or httpx.Client(timeout=timeout)

    def embed(self, text: str) -> list[float]:
        import httpx

        try:
            resp = self._client.post(self.endpoint, json={"text": text})
        except httpx.HTTPError as exc:
            raise OracleError(f"embedding service unreachable: {exc}") from exc
        if resp.status_code != 200:
            raise OracleError(f"embedding service returned status {resp.status_code}")
        vector = resp.json().get("embedding")
        if not isinstance(vector, list):
            raise OracleError("embedding service response missing 'embedding'")
        return [float(x) for x in vector]

    def __call__(self, a: str, b: str) -> float:
        return score_text_similarity(a, b, embed=self.embed)


_REGISTRY: dict[str, Scorer] = {}


def register_scorer(scorer: Scorer) -> None:
    _REGISTRY[scorer.name] = scorer


def get_scorer(name: str) -> Scorer:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise KeyError(f"no scorer registered under {name!r}; "
                       f"known: {sorted(_REGISTRY)}") from None


register_scorer(Scorer("feature_coverage", "feature_coverage", score_feature_coverage))
register_scorer(Scorer("text_similarity", "text_text", score_text_similarity))
