"""Partial intent model: the growing requirement specification and the
persona-sampling interface that approximates the distribution over complete
intents consistent with it.

A Specification is an immutable value; every mutation returns a new one
with the revision bumped. The feature set only grows under elicited
answers; manual edits may replace or delete.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Mapping

from .errors import DuplicateFeatureConflict, EmptyPrompt, SchemaError
from .matching import normalize_label, normalize_value
from .oracles import OracleBackend, OracleKind, OracleRequest

log = logging.getLogger(__name__)


class Origin(str, Enum):
    INITIAL_PROMPT = "initial_prompt"
    QUERY_ANSWER = "query_answer"
    OTHER_ANSWER = "other_answer"
    MANUAL_ADD = "manual_add"
    MANUAL_EDIT = "manual_edit"


#: Origins allowed to replace an existing value for the same feature.
_REPLACING_ORIGINS = frozenset({Origin.MANUAL_EDIT, Origin.OTHER_ANSWER, Origin.MANUAL_ADD})


@dataclass(frozen=True)
class FeatureRequirement:
    """One (feature, value) pair with provenance and a monotone sequence index."""

    feature: str
    value: str
    origin: Origin
    seq: int

    def to_record(self) -> dict:
        return {"feature": self.feature, "value": self.value,
                "origin": self.origin.value, "seq": self.seq}

    @classmethod
    def from_record(cls, record: Mapping) -> "FeatureRequirement":
        return cls(feature=record["feature"], value=record["value"],
                   origin=Origin(record["origin"]), seq=int(record["seq"]))


@dataclass(frozen=True)
class Specification:
    """Ordered, feature-unique requirement list with a strictly increasing revision."""

    requirements: tuple[FeatureRequirement, ...] = ()
    revision: int = 0

    def features(self) -> list[str]:
        return [r.feature for r in self.requirements]

    def value_of(self, feature: str) -> str | None:
        norm = normalize_label(feature)
        for r in self.requirements:
            if r.feature == norm:
                return r.value
        return None

    def has_feature(self, feature: str) -> bool:
        return self.value_of(feature) is not None

    def next_seq(self) -> int:
        return max((r.seq for r in self.requirements), default=0) + 1

    def to_record(self) -> dict:
        return {"requirements": [r.to_record() for r in self.requirements],
                "revision": self.revision}

    @classmethod
    def from_record(cls, record: Mapping) -> "Specification":
        return cls(requirements=tuple(FeatureRequirement.from_record(r)
                                      for r in record["requirements"]),
                   revision=int(record["revision"]))


@dataclass(frozen=True)
class FeatureSpace:
    """Feature labels proposed for elicitation, none already specified."""

    features: tuple[str, ...] = ()
    provenance: tuple[str, ...] = ()  # per-feature tag: llm_proposed | seeded

    def __post_init__(self):
        if len(self.provenance) != len(self.features):
            object.__setattr__(self, "provenance",
                               tuple("llm_proposed" for _ in self.features))

    def is_empty(self) -> bool:
        return not self.features


@dataclass(frozen=True)
class IntentSample:
    """One persona-sampled complete intent over the active feature space."""

    assignments: Mapping[str, str]
    sample_id: int
    repaired: bool = False


def initialize_specification(initial_prompt: str, oracle: OracleBackend) -> Specification:
    """Build the starting specification by extracting feature-value pairs.

    Malformed extraction output (schema violation or an empty pair list)
    falls back to a single (theme, raw prompt) requirement so the loop
    always starts non-empty. A failed oracle call propagates.
    """
    prompt = normalize_value(initial_prompt)
    if not prompt:
        raise EmptyPrompt("initial prompt is blank")
    try:
        data = oracle.call(OracleRequest(OracleKind.EXTRACT_FEATURES, {"prompt": prompt}))
        pairs = data["pairs"]
    except SchemaError as exc:
        log.warning("feature extraction returned malformed output (%s); using theme fallback", exc)
        pairs = []
    requirements: list[FeatureRequirement] = []
    seen: set[str] = set()
    for pair in pairs:
        feature = normalize_label(pair["feature"])
        value = normalize_value(pair["value"])
        if not feature or not value or feature in seen:
            continue
        seen.add(feature)
        requirements.append(FeatureRequirement(feature, value, Origin.INITIAL_PROMPT,
                                               len(requirements) + 1))
    if not requirements:
        requirements = [FeatureRequirement("theme", prompt, Origin.INITIAL_PROMPT, 1)]
    return Specification(requirements=tuple(requirements), revision=1)


def update_specification(spec: Specification, feature: str, value: str,
                         origin: Origin) -> Specification:
    """Append a new requirement or replace an existing one, per origin rules.

    Elicited answers (query_answer) may only append; hitting an existing
    feature raises DuplicateFeatureConflict so the engine can never
    silently overwrite one elicited answer with another.
    """
    norm_feature = normalize_label(feature)
    norm_value = normalize_value(value)
    if not norm_feature:
        raise ValueError("feature label must be non-empty")
    if not norm_value:
        raise ValueError("requirement value must be non-empty")
    existing_idx = next((i for i, r in enumerate(spec.requirements)
                         if r.feature == norm_feature), None)
    if existing_idx is None:
        new_req = FeatureRequirement(norm_feature, norm_value, origin, spec.next_seq())
        return Specification(requirements=spec.requirements + (new_req,),
                             revision=spec.revision + 1)
    if origin not in _REPLACING_ORIGINS:
        raise DuplicateFeatureConflict(
            f"feature {norm_feature!r} already has an elicited value; "
            f"origin {origin.value} may not overwrite it")
    new_req = FeatureRequirement(norm_feature, norm_value, origin, spec.next_seq())
    reqs = list(spec.requirements)
    reqs[existing_idx] = new_req
    return Specification(requirements=tuple(reqs), revision=spec.revision + 1)


def delete_requirement(spec: Specification, feature: str) -> Specification:
    """Remove a requirement by feature label; a no-op label raises KeyError."""
    norm_feature = normalize_label(feature)
    reqs = tuple(r for r in spec.requirements if r.feature != norm_feature)
    if len(reqs) == len(spec.requirements):
        raise KeyError(f"no requirement for feature {norm_feature!r}")
    return Specification(requirements=reqs, revision=spec.revision + 1)


def propose_feature_space(spec: Specification, max_features: int,
                          oracle: OracleBackend) -> FeatureSpace:
    """Ask the oracle for up to ``max_features`` features absent from the spec."""
    if max_features < 1:
        raise ValueError("max_features must be >= 1")
    data = oracle.call(OracleRequest(OracleKind.PROPOSE_FEATURES, {
        "requirements": [r.to_record() for r in spec.requirements],
        "max_features": max_features,
    }))
    specified = {r.feature for r in spec.requirements}
    kept: list[str] = []
    for raw in data["features"]:
        label = normalize_label(raw)
        if not label or label in specified or label in kept:
            continue
        kept.append(label)
        if len(kept) == max_features:
            break
    return FeatureSpace(features=tuple(kept),
                        provenance=tuple("llm_proposed" for _ in kept))


def sample_intents(spec: Specification, space: FeatureSpace, k: int,
                   oracle: OracleBackend) -> list[IntentSample]:
    """Draw ``k`` complete intents consistent with the specification.

    One batched oracle request. A sample that contradicts a specified
    value is repaired by overwriting with the spec value and flagged; a
    sample missing a space feature is a schema violation (there is nothing
    to repair it from).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if space.is_empty():
        raise ValueError("feature space must be non-empty")
    data = oracle.call(OracleRequest(OracleKind.SAMPLE_INTENT, {
        "requirements": [r.to_record() for r in spec.requirements],
        "features": list(space.features),
        "count": k,
    }))
    samples: list[IntentSample] = []
    for i, raw in enumerate(data["samples"], start=1):
        assignments = {normalize_label(f): normalize_value(v) for f, v in raw.items()}
        missing = [f for f in space.features if f not in assignments]
        if missing:
            raise SchemaError(f"sample_intent: sample {i} missing features {missing}")
        repaired = False
        for req in spec.requirements:
            if assignments.get(req.feature) != req.value:
                assignments[req.feature] = req.value
                repaired = True
        if repaired:
            log.info("persona sample %d contradicted the specification; repaired", i)
        samples.append(IntentSample(assignments=assignments, sample_id=i, repaired=repaired))
    return samples
