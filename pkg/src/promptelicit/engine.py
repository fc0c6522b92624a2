"""The elicitation engine: one object tying intent modeling, query
selection, and prompt synthesis together for a single session or run.

The engine is deliberately thin on state. It caches per-feature weights
(re-rating a feature every iteration would burn oracle calls for no new
information), the session's synthesis guidelines, one fixed render seed,
and a query counter used to group exemplar renders in the journal.
Everything else flows through as immutable values.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .errors import NoUnspecifiedFeatures
from .intent import Specification, propose_feature_space, sample_intents
from .oracles import (DEFAULT_RENDER_PARAMS, OracleBackend, RenderBackend,
                      RenderRequest)
from .queries import (Answer, CandidateQuery, PreparedQuery, ScoredQuery,
                      compute_eaug, estimate_option_distribution,
                      estimate_weight, generate_candidates, handle_answer,
                      render_query_exemplars, select_query)
from .synthesis import (SynthesisContext, SynthesizedPrompt, elicit_guidelines,
                        synthesize_prompt)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Budget:
    """Loop limits; defaults mirror the evaluation apparatus."""

    max_iterations: int = 15
    max_candidates: int = 5
    max_options: int = 5
    persona_samples: int = 8

    def __post_init__(self):
        if self.max_iterations < 1 or self.max_candidates < 1:
            raise ValueError("budget limits must be >= 1")
        if self.max_options < 2:
            raise ValueError("max_options must be >= 2")
        if self.persona_samples < 1:
            raise ValueError("persona_samples must be >= 1")

    def to_record(self) -> dict:
        return {"max_iterations": self.max_iterations,
                "max_candidates": self.max_candidates,
                "max_options": self.max_options,
                "persona_samples": self.persona_samples}


class ElicitationEngine:
    """Drives propose -> candidates -> score -> select -> ask -> update."""

    def __init__(self, oracle: OracleBackend, renderer: RenderBackend,
                 budget: Budget | None = None, seed: int = 0,
                 ctx: SynthesisContext | None = None,
                 render_exemplars: bool = True):
        self.oracle = oracle
        self.renderer = renderer
        self.budget = budget or Budget()
        self.seed = seed
        self.ctx = ctx or SynthesisContext()
        self.render_exemplars = render_exemplars
        self.weights: dict[str, float] = {}
        self.query_counter = 0

    # -- state carried across restarts ------------------------------------

    def snapshot_state(self) -> dict:
        return {"weights": dict(self.weights), "guidelines": self.ctx.guidelines,
                "query_counter": self.query_counter, "seed": self.seed}

    def restore_state(self, state: dict) -> None:
        from dataclasses import replace

        self.weights = dict(state.get("weights", {}))
        if state.get("guidelines") is not None:
            self.ctx = replace(self.ctx, guidelines=state["guidelines"])
        self.query_counter = int(state.get("query_counter", 0))
        self.seed = int(state.get("seed", self.seed))

    # -- elicitation -------------------------------------------------------

    def weight_for(self, feature: str, spec: Specification) -> float:
        if feature not in self.weights:
            self.weights[feature] = estimate_weight(feature, spec, self.oracle)
        return self.weights[feature]

    def ensure_guidelines(self) -> None:
        if self.ctx.guidelines is None:
            self.ctx = elicit_guidelines(self.ctx, self.oracle)

    def prepare_query(self, spec: Specification, mode: str = "eaug") -> PreparedQuery | None:
        """Select and dress the next query, or None when elicitation is done.

        mode="eaug" runs the full scoring path; mode="first" takes the
        oracle's first proposal unscored (the in-context baseline).
        """
        if mode not in ("eaug", "first"):
            raise ValueError(f"unknown query-selection mode {mode!r}")
        space = propose_feature_space(spec, self.budget.max_candidates, self.oracle)
        if space.is_empty():
            return None
        try:
            candidates = generate_candidates(
                spec, space, self.budget.max_candidates, self.budget.max_options,
                self.oracle, weight_for=lambda f: self.weight_for(f, spec))
        except NoUnspecifiedFeatures:
            return None
        if mode == "first":
            chosen = candidates[0]
            entropy = eaug = None
            scored: list[ScoredQuery] = []
        else:
            samples = sample_intents(spec, space, self.budget.persona_samples, self.oracle)
            scored = []
            for cand in candidates:
                estimate_option_distribution(cand, samples)
                scored.append(compute_eaug(cand))
            best = select_query(scored)
            chosen, entropy, eaug = best.query, best.entropy, best.eaug
        self.query_counter += 1
        if self.render_exemplars:
            render_query_exemplars(
                chosen, spec, self.seed, self.renderer,
                prompt_builder=lambda s: self.build_prompt(s).text,
                group=f"query-{self.query_counter}")
        return PreparedQuery(query=chosen, entropy=entropy, eaug=eaug,
                             scored=tuple(scored), space=space)

    def apply_answer(self, spec: Specification, query: CandidateQuery,
                     answer: Answer) -> Specification:
        return handle_answer(spec, query, answer)

    # -- synthesis and rendering -------------------------------------------

    def build_prompt(self, spec: Specification) -> SynthesizedPrompt:
        self.ensure_guidelines()
        return synthesize_prompt(spec, self.ctx, self.oracle)

    def render_prompt(self, prompt_text: str, group: str) -> str:
        """Render a synthesized prompt under the session seed."""
        return self.renderer.render(
            RenderRequest(prompt=prompt_text, seed=self.seed,
                          parameters=dict(DEFAULT_RENDER_PARAMS)),
            meta={"group": group})
