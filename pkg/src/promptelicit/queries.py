"""Candidate query generation, entropy-weighted scoring, and selection.

The scoring core is small and fully deterministic: estimate an option
preference distribution by counting persona votes, take its Shannon
entropy in nats, multiply by the feature's importance weight, and pick
the candidate with the strictly largest product. Ties break on higher
weight, then lower candidate index, so selection never depends on dict
or sort instability.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence

from .errors import (EmptyCandidates, EmptyOtherText, InvalidDistribution,
                     InvalidOptionIndex, NoUnspecifiedFeatures, OracleError,
                     RenderError, SchemaError)
from .intent import (FeatureSpace, IntentSample, Origin, Specification,
                     update_specification)
from .matching import RESIDUAL, match_option, normalize_label, normalize_value
from .oracles import (OracleBackend, OracleKind, OracleRequest, RenderBackend,
                      RenderRequest)

log = logging.getLogger(__name__)

#: Tolerance for distribution normalization checks.
DIST_TOL = 1e-9


@dataclass(frozen=True)
class QueryOption:
    """One selectable value with an optional rendered exemplar."""

    label: str
    exemplar_prompt: str | None = None
    exemplar_image: str | None = None


@dataclass
class CandidateQuery:
    """A feature with value options, a residual bucket, and a weight."""

    feature: str
    options: list[QueryOption]
    has_residual: bool = True
    weight: float = 1.0
    option_distribution: list[float] | None = None
    candidate_index: int = 0

    def bucket_count(self) -> int:
        return len(self.options) + (1 if self.has_residual else 0)

    def option_labels(self) -> list[str]:
        return [o.label for o in self.options]

    def to_record(self) -> dict:
        return {
            "feature": self.feature,
            "options": [{"label": o.label, "exemplar_prompt": o.exemplar_prompt,
                         "exemplar_image": o.exemplar_image} for o in self.options],
            "has_residual": self.has_residual,
            "weight": self.weight,
            "option_distribution": self.option_distribution,
            "candidate_index": self.candidate_index,
        }

    @classmethod
    def from_record(cls, record: dict) -> "CandidateQuery":
        return cls(
            feature=record["feature"],
            options=[QueryOption(label=o["label"],
                                 exemplar_prompt=o.get("exemplar_prompt"),
                                 exemplar_image=o.get("exemplar_image"))
                     for o in record["options"]],
            has_residual=record["has_residual"],
            weight=record["weight"],
            option_distribution=record.get("option_distribution"),
            candidate_index=record.get("candidate_index", 0),
        )


@dataclass(frozen=True)
class ScoredQuery:
    """A candidate with its entropy (nats) and weighted utility."""

    query: CandidateQuery
    entropy: float
    eaug: float


@dataclass(frozen=True)
class Answer:
    """A user response: an option index, or free text for the residual."""

    option_index: int | None = None
    other_text: str | None = None

    def to_record(self) -> dict:
        return {"option_index": self.option_index, "other_text": self.other_text}


@dataclass(frozen=True)
class PreparedQuery:
    """A selected query dressed for presentation, with its scoring context.

    entropy/eaug are None when selection bypassed scoring (the in-context
    baseline asks the first proposal unscored).
    """

    query: CandidateQuery
    entropy: float | None
    eaug: float | None
    scored: tuple[ScoredQuery, ...] = ()
    space: FeatureSpace | None = None


def estimate_weight(feature: str, spec: Specification, oracle: OracleBackend) -> float:
    """Elicit a 0-1 importance rating for ``feature`` conditioned on the spec.

    Oracle faults never surface: any failure or malformed reply falls back
    to 1.0 (treat the feature as fully important) and is logged.
    """
    try:
        data = oracle.call(OracleRequest(OracleKind.RATE_WEIGHT, {
            "feature": feature,
            "requirements": [r.to_record() for r in spec.requirements],
        }))
        rating = float(data["rating"])
    except (OracleError, SchemaError) as exc:
        log.warning("weight elicitation failed for %r (%s); defaulting to 1.0", feature, exc)
        return 1.0
    return min(1.0, max(0.0, rating))


def generate_candidates(spec: Specification, space: FeatureSpace,
                        max_candidates: int, max_options: int,
                        oracle: OracleBackend,
                        weight_for: Callable[[str], float] | None = None) -> list[CandidateQuery]:
    """Build one candidate query per unspecified feature, up to the budget.

    ``weight_for`` lets the engine inject its per-feature weight cache;
    without it each feature's weight is elicited fresh.
    """
    if max_candidates < 1:
        raise ValueError("max_candidates must be >= 1")
    if max_options < 2:
        raise ValueError("max_options must be >= 2")
    if space.is_empty():
        raise NoUnspecifiedFeatures("no unspecified features remain to ask about")
    candidates: list[CandidateQuery] = []
    for feature in space.features:
        if len(candidates) == max_candidates:
            break
        if spec.has_feature(feature):
            continue
        data = oracle.call(OracleRequest(OracleKind.OPTION_VALUES, {
            "feature": feature,
            "requirements": [r.to_record() for r in spec.requirements],
            "max_options": max_options,
        }))
        options: list[QueryOption] = []
        seen: set[str] = set()
        for raw in data["options"]:
            label = normalize_value(raw)
            key = normalize_label(label)
            if not key or key in seen:
                continue
            seen.add(key)
            options.append(QueryOption(label=label))
            if len(options) == max_options:
                break
        if not options:
            log.warning("oracle proposed no usable options for feature %r; skipping", feature)
            continue
        weight = weight_for(feature) if weight_for is not None else estimate_weight(feature, spec, oracle)
        candidates.append(CandidateQuery(feature=feature, options=options,
                                         has_residual=True, weight=weight,
                                         candidate_index=len(candidates)))
    if not candidates:
        raise NoUnspecifiedFeatures("no candidate queries could be built from the feature space")
    return candidates


def estimate_option_distribution(query: CandidateQuery, samples: Sequence[IntentSample],
                                 matcher: Callable[..., int] = match_option) -> list[float]:
    """Vote-count persona samples onto the query's option buckets.

    Each sample's value for the query feature maps to one option index or
    the residual bucket; the normalized counts are stored on the query and
    returned.
    """
    if not samples:
        raise ValueError("samples must be non-empty")
    labels = query.option_labels()
    counts = [0] * query.bucket_count()
    for sample in samples:
        if query.feature not in sample.assignments:
            raise ValueError(f"sample {sample.sample_id} does not assign feature {query.feature!r}")
        idx = matcher(sample.assignments[query.feature], labels, query.has_residual)
        counts[len(labels) if idx == RESIDUAL else idx] += 1
    total = len(samples)
    distribution = [c / total for c in counts]
    query.option_distribution = distribution
    return distribution


def _check_distribution(query: CandidateQuery) -> list[float]:
    dist = query.option_distribution
    if dist is None:
        raise InvalidDistribution(f"query over {query.feature!r} has no option distribution")
    if len(dist) != query.bucket_count():
        raise InvalidDistribution(
            f"distribution has {len(dist)} entries for {query.bucket_count()} buckets")
    if any(p < 0 for p in dist):
        raise InvalidDistribution("distribution has negative entries")
    if abs(sum(dist) - 1.0) > DIST_TOL:
        raise InvalidDistribution(f"distribution sums to {sum(dist)!r}, not 1")
    return dist


def shannon_entropy(distribution: Sequence[float]) -> float:
    """Shannon entropy in nats with the 0 ln 0 = 0 convention."""
    # +0.0 folds the -0.0 that a degenerate distribution would otherwise yield
    return -sum(p * math.log(p) for p in distribution if p > 0.0) + 0.0


def compute_eaug(query: CandidateQuery) -> ScoredQuery:
    """Score a candidate: weight times the entropy of its option distribution."""
    dist = _check_distribution(query)
    entropy = shannon_entropy(dist)
    return ScoredQuery(query=query, entropy=entropy, eaug=query.weight * entropy)


def select_query(scored: Sequence[ScoredQuery]) -> ScoredQuery:
    """Deterministic argmax by utility; ties prefer higher weight, then lower index."""
    if not scored:
        raise EmptyCandidates("select_query called with no scored candidates")
    best = scored[0]
    for cand in scored[1:]:
        if cand.eaug > best.eaug:
            best = cand
        elif cand.eaug == best.eaug and cand.query.weight > best.query.weight:
            best = cand
    return best


def render_query_exemplars(query: CandidateQuery, spec: Specification, seed: int,
                           renderer: RenderBackend,
                           prompt_builder: Callable[[Specification], str],
                           parameters: dict | None = None,
                           group: str | None = None) -> CandidateQuery:
    """Render one exemplar image per option, all under one seed and one
    parameter record so the images differ only in the option's prompt text.

    Per-option render failures degrade that option to text-only; nothing
    here is fatal.
    """
    if not query.options:
        raise ValueError("query must have at least one option")
    from .oracles import DEFAULT_RENDER_PARAMS

    params = dict(parameters) if parameters is not None else dict(DEFAULT_RENDER_PARAMS)
    group_key = group or f"{query.feature}@{spec.revision}"
    rendered: list[QueryOption] = []
    for i, option in enumerate(query.options):
        hypothetical = update_specification(spec, query.feature, option.label,
                                            Origin.QUERY_ANSWER)
        exemplar_prompt = prompt_builder(hypothetical)
        handle: str | None = None
        try:
            handle = renderer.render(
                RenderRequest(prompt=exemplar_prompt, seed=seed, parameters=params),
                meta={"group": group_key, "option_index": i, "feature": query.feature})
        except (RenderError, OracleError) as exc:
            log.warning("exemplar render failed for option %r (%s); degrading to text", option.label, exc)
        rendered.append(QueryOption(label=option.label, exemplar_prompt=exemplar_prompt,
                                    exemplar_image=handle))
    query.options = rendered
    return query


def handle_answer(spec: Specification, query: CandidateQuery, answer: Answer) -> Specification:
    """Fold an answer into the specification.

    Option picks become query_answer requirements; residual free text
    becomes an other_answer requirement (which may overwrite).
    """
    if answer.option_index is not None:
        if not (0 <= answer.option_index < len(query.options)):
            raise InvalidOptionIndex(
                f"option index {answer.option_index} out of range for {len(query.options)} options")
        value = query.options[answer.option_index].label
        return update_specification(spec, query.feature, value, Origin.QUERY_ANSWER)
    text = normalize_value(answer.other_text or "")
    if not text:
        raise EmptyOtherText("residual answer carried no text")
    return update_specification(spec, query.feature, text, Origin.OTHER_ANSWER)
