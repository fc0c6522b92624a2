"""Prompt synthesis: specification in, renderer-ready prompt out.

Two-stage path: first elicit model-specific prompt-writing guidelines
(cached for the session), then compose the prompt from (meta-prompt,
guidelines, requirements). Coverage of every requirement value is checked
by normalized substring; anything missing triggers exactly one repair
round. On oracle failure the deterministic template fallback takes over,
so synthesis is total for any non-empty specification.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

from .errors import OracleError, SchemaError
from .intent import Specification
from .matching import normalize_label
from .oracles import GENERIC_GUIDELINES, OracleBackend, OracleKind, OracleRequest

log = logging.getLogger(__name__)

DEFAULT_META_PROMPT = (
    "You are a prompt engineer for a text-to-image model. Using the "
    "guidelines and the visual requirements below, write a single prompt "
    "that realizes every requirement. Mention each requirement value "
    "explicitly. Output only the prompt text."
)

DEFAULT_MODEL_CONTEXT = (
    "Target: a fast distilled diffusion model (8 inference steps, square "
    "1024px output). It favors short, concrete, comma-separated visual "
    "phrases and ignores long narrative framing."
)

#: Feature labels whose last word should trail the value in the fallback,
#: e.g. (color scheme, dark blue) -> "dark blue color scheme".
SUFFIX_WORDS = frozenset({
    "style", "scheme", "palette", "lighting", "mood", "tone", "angle",
    "perspective", "composition", "finish", "texture",
})


@dataclass(frozen=True)
class SynthesisContext:
    """Templates plus the per-session guideline cache."""

    meta_prompt: str = DEFAULT_META_PROMPT
    model_context: str = DEFAULT_MODEL_CONTEXT
    guidelines: str | None = None


@dataclass(frozen=True)
class SynthesizedPrompt:
    """A prompt bound to the specification revision it was built from."""

    text: str
    source_revision: int
    coverage: tuple[str, ...]

    def to_record(self) -> dict:
        return {"text": self.text, "source_revision": self.source_revision,
                "coverage": list(self.coverage)}


def elicit_guidelines(ctx: SynthesisContext, oracle: OracleBackend) -> SynthesisContext:
    """Fetch prompt-writing guidelines for the target model, once per session."""
    if ctx.guidelines is not None:
        raise ValueError("guidelines already elicited; they are immutable for the session")
    try:
        data = oracle.call(OracleRequest(OracleKind.GUIDELINES,
                                         {"model_context": ctx.model_context}))
        return replace(ctx, guidelines=data["guidelines"])
    except (OracleError, SchemaError) as exc:
        log.warning("guideline elicitation failed (%s); using the generic block", exc)
        return replace(ctx, guidelines=GENERIC_GUIDELINES)


def _covered_features(spec: Specification, text: str) -> list[str]:
    norm_text = normalize_label(text)
    return [r.feature for r in spec.requirements if normalize_label(r.value) in norm_text]


def synthesize_prompt(spec: Specification, ctx: SynthesisContext,
                      oracle: OracleBackend) -> SynthesizedPrompt:
    """Compose a prompt covering every requirement, with one repair round.

    Coverage is a normalized substring check per requirement value. If the
    first composition misses values, a single re-request highlights them;
    the second result is returned regardless. Oracle failure at any point
    falls back to the deterministic template.
    """
    if not spec.requirements:
        raise ValueError("specification must have at least one requirement")
    if ctx.guidelines is None:
        ctx = elicit_guidelines(ctx, oracle)
    base_payload = {
        "meta_prompt": ctx.meta_prompt,
        "guidelines": ctx.guidelines,
        "requirements": [r.to_record() for r in spec.requirements],
    }
    try:
        data = oracle.call(OracleRequest(OracleKind.SYNTHESIZE, base_payload))
        text = data["prompt"]
        missing = [r.feature for r in spec.requirements
                   if normalize_label(r.value) not in normalize_label(text)]
        if missing:
            log.info("synthesized prompt missed %s; running one repair round", missing)
            data = oracle.call(OracleRequest(OracleKind.SYNTHESIZE,
                                             {**base_payload, "missing_features": missing}))
            text = data["prompt"]
    except (OracleError, SchemaError) as exc:
        log.warning("prompt synthesis failed (%s); using the template fallback", exc)
        return template_fallback(spec)
    return SynthesizedPrompt(text=text, source_revision=spec.revision,
                             coverage=tuple(_covered_features(spec, text)))


def template_fallback(spec: Specification) -> SynthesizedPrompt:
    """Deterministic synthesis: values joined by ", ", in requirement order.

    A feature whose label ends in a qualifier word (style, scheme, ...)
    trails that label after its value, so (color scheme, dark blue)
    renders as "dark blue color scheme". Coverage is total by
    construction.
    """
    if not spec.requirements:
        raise ValueError("specification must have at least one requirement")
    parts: list[str] = []
    for req in spec.requirements:
        last_word = req.feature.rsplit(" ", 1)[-1]
        value_words = set(normalize_label(req.value).split())
        if last_word in SUFFIX_WORDS and last_word not in value_words:
            parts.append(f"{req.value} {req.feature}")
        else:
            parts.append(req.value)
    return SynthesizedPrompt(text=", ".join(parts), source_revision=spec.revision,
                             coverage=tuple(r.feature for r in spec.requirements))


def rewrite_prompt(initial_prompt: str, ctx: SynthesisContext,
                   oracle: OracleBackend) -> str:
    """One-shot prompt rewrite used by the automatic-optimization baseline."""
    if ctx.guidelines is None:
        ctx = elicit_guidelines(ctx, oracle)
    try:
        data = oracle.call(OracleRequest(OracleKind.SYNTHESIZE, {
            "meta_prompt": ctx.meta_prompt,
            "guidelines": ctx.guidelines,
            "rewrite_of": initial_prompt,
        }))
        return data["prompt"]
    except (OracleError, SchemaError) as exc:
        log.warning("prompt rewrite failed (%s); keeping the initial prompt", exc)
        return initial_prompt
