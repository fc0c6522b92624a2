"""Simulated-user benchmark harness: cases, user policies, strategy loops,
and the (case x strategy x run) sweep with per-iteration trace capture.

Four strategies are compared. "ape" is the full adaptive loop with
entropy-weighted query selection; "in_context" runs the same loop but
always asks the oracle's first proposed question; "apo" rewrites the
initial prompt once; "unoptimized" renders the initial prompt as-is.
Everything here runs against scripted backends by default, so a full
sweep is deterministic and completes in seconds.
"""

from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .engine import Budget, ElicitationEngine
from .errors import (ConfigError, OracleError, PromptElicitError, RenderError,
                     SchemaError)
from .intent import Specification, initialize_specification
from .journal import Journal, canonical_json
from .matching import RESIDUAL, match_option, normalize_label, normalize_value
from .metrics import score_feature_coverage, score_text_similarity
from .oracles import (OracleBackend, OracleKind, OracleRequest, RenderBackend,
                      ScriptedBackend, ScriptedRenderer)
from .queries import Answer, CandidateQuery
from .synthesis import SynthesisContext, rewrite_prompt

log = logging.getLogger(__name__)

STRATEGIES = ("ape", "in_context", "apo", "unoptimized")

USER_KINDS = ("vision_based", "intent_based", "scripted")


@dataclass(frozen=True)
class BenchmarkCase:
    """One benchmark input: an initial prompt plus exactly one ground truth.

    synthetic_intent cases are fully scriptable and score by feature
    coverage; brief and reference_images cases keep the published
    benchmark shape and need LLM-backed simulators to answer.
    """

    case_id: str
    initial_prompt: str
    category: str = "uncategorized"
    brief: str | None = None
    reference_images: tuple[str, ...] = ()
    synthetic_intent: Mapping[str, str] | None = None
    # Scripted-oracle knobs for synthetic cases.
    feature_order: tuple[str, ...] = ()
    decoy_features: Mapping[str, str] | None = None
    feature_weights: Mapping[str, float] | None = None
    option_pools: Mapping[str, tuple[str, ...]] | None = None

    def __post_init__(self):
        populated = sum([self.brief is not None, bool(self.reference_images),
                         self.synthetic_intent is not None])
        if populated != 1:
            raise ConfigError(f"case {self.case_id!r}: exactly one ground-truth "
                              f"variant must be populated, found {populated}")
        if self.synthetic_intent is not None and not self.synthetic_intent:
            raise ConfigError(f"case {self.case_id!r}: synthetic_intent must be non-empty")
        if not normalize_value(self.initial_prompt):
            raise ConfigError(f"case {self.case_id!r}: initial_prompt is blank")

    def truth_features(self) -> dict[str, str]:
        return {normalize_label(k): normalize_value(v)
                for k, v in (self.synthetic_intent or {}).items()}

    def truth_as_text(self) -> str:
        if self.synthetic_intent is not None:
            return ", ".join(self.truth_features().values())
        if self.brief is not None:
            return self.brief
        return self.initial_prompt

    def to_record(self) -> dict:
        record: dict = {"case_id": self.case_id, "initial_prompt": self.initial_prompt,
                        "category": self.category}
        if self.brief is not None:
            record["brief"] = self.brief
        if self.reference_images:
            record["reference_images"] = list(self.reference_images)
        if self.synthetic_intent is not None:
            record["synthetic_intent"] = dict(self.synthetic_intent)
        if self.feature_order:
            record["feature_order"] = list(self.feature_order)
        if self.decoy_features:
            record["decoy_features"] = dict(self.decoy_features)
        if self.feature_weights:
            record["feature_weights"] = dict(self.feature_weights)
        if self.option_pools:
            record["option_pools"] = {k: list(v) for k, v in self.option_pools.items()}
        return record

    @classmethod
    def from_record(cls, record: Mapping) -> "BenchmarkCase":
        try:
            return cls(
                case_id=record["case_id"],
                initial_prompt=record["initial_prompt"],
                category=record.get("category", "uncategorized"),
                brief=record.get("brief"),
                reference_images=tuple(record.get("reference_images", ())),
                synthetic_intent=record.get("synthetic_intent"),
                feature_order=tuple(record.get("feature_order", ())),
                decoy_features=record.get("decoy_features"),
                feature_weights=record.get("feature_weights"),
                option_pools={k: tuple(v) for k, v in record["option_pools"].items()}
                if "option_pools" in record else None,
            )
        except KeyError as exc:
            raise ConfigError(f"case record missing field {exc}") from exc


def load_cases(paths: Sequence[str | Path]) -> list[BenchmarkCase]:
    """Load case files (or directories of ``*.json`` case files)."""
    cases: list[BenchmarkCase] = []
    for raw in paths:
        path = Path(raw)
        if path.is_dir():
            files = sorted(path.glob("*.json"))
            if not files:
                raise ConfigError(f"case directory {path} contains no *.json files")
            cases.extend(load_cases(files))
            continue
        if not path.exists():
            raise ConfigError(f"case file not found: {path}")
        try:
            record = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"case file {path} is not valid JSON: {exc}") from exc
        cases.append(BenchmarkCase.from_record(record))
    seen: set[str] = set()
    for case in cases:
        if case.case_id in seen:
            raise ConfigError(f"duplicate case_id {case.case_id!r}")
        seen.add(case.case_id)
    return cases


# ---------------------------------------------------------------------------
# Scripted oracle behavior for synthetic cases
# ---------------------------------------------------------------------------

class SyntheticCaseOracle:
    """Payload-aware scripted defaults that realize one synthetic case.

    Proposal order follows the case's feature_order (truth features plus
    any decoys). Persona votes cycle the option pool on truth features, so
    their preference distributions carry real entropy, and agree
    unanimously on decoy features, whose entropy is therefore zero. The
    informative-query selector consequently defers decoys; a selector that
    asks questions in proposal order spends iterations on them.
    """

    def __init__(self, case: BenchmarkCase, seed: int = 0):
        if case.synthetic_intent is None:
            raise ConfigError(f"case {case.case_id!r} has no synthetic_intent; "
                              "the synthetic oracle cannot serve it")
        self.case = case
        self.seed = seed
        self.truth = case.truth_features()
        self.decoys = {normalize_label(k): normalize_value(v)
                       for k, v in (case.decoy_features or {}).items()}
        self.weights = {normalize_label(k): float(v)
                        for k, v in (case.feature_weights or {}).items()}
        order = [normalize_label(f) for f in case.feature_order]
        for feature in list(self.decoys) + list(self.truth):
            if feature not in order:
                order.append(feature)
        self.order = order
        self.pools: dict[str, tuple[str, ...]] = {}
        for feature, pool in (case.option_pools or {}).items():
            self.pools[normalize_label(feature)] = tuple(normalize_value(v) for v in pool)

    def pool_for(self, feature: str) -> tuple[str, ...]:
        if feature in self.pools:
            return self.pools[feature]
        anchor = self.truth.get(feature) or self.decoys.get(feature) or f"{feature} choice A"
        return (anchor, f"{feature} alternative B", f"{feature} alternative C",
                f"{feature} alternative D")

    def _vote_offset(self, feature: str) -> int:
        text = f"{self.seed}|{self.case.case_id}|{feature}"
        return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:4], "big")

    def __call__(self, req: OracleRequest) -> dict | None:
        payload = req.payload
        kind = req.kind
        if kind is OracleKind.EXTRACT_FEATURES:
            prompt = normalize_value(str(payload.get("prompt", "")))
            return {"pairs": [{"feature": "theme", "value": prompt}]} if prompt else {"pairs": []}
        if kind is OracleKind.PROPOSE_FEATURES:
            have = {r["feature"] for r in payload.get("requirements", [])}
            fresh = [f for f in self.order if f not in have]
            return {"features": fresh[: int(payload.get("max_features", len(fresh)))]}
        if kind is OracleKind.OPTION_VALUES:
            feature = normalize_label(str(payload.get("feature", "")))
            limit = int(payload.get("max_options", 4))
            return {"options": list(self.pool_for(feature))[:limit]}
        if kind is OracleKind.RATE_WEIGHT:
            feature = normalize_label(str(payload.get("feature", "")))
            if feature in self.weights:
                return {"rating": self.weights[feature]}
            return {"rating": 0.8 if feature in self.truth else 0.2}
        if kind is OracleKind.SAMPLE_INTENT:
            features = [normalize_label(f) for f in payload.get("features", [])]
            spec_values = {r["feature"]: r["value"] for r in payload.get("requirements", [])}
            count = int(payload.get("count", 1))
            samples = []
            for k in range(count):
                assignment = dict(spec_values)
                for feature in features:
                    if feature in spec_values:
                        continue
                    pool = self.pool_for(feature)
                    if feature in self.decoys:
                        # unanimous persona agreement: a zero-entropy question
                        assignment[feature] = self.decoys[feature]
                    else:
                        assignment[feature] = pool[(self._vote_offset(feature) + k) % len(pool)]
                samples.append(assignment)
            return {"samples": samples}
        if kind is OracleKind.SIMULATE_ANSWER:
            return self._simulated_answer(payload)
        return None  # guidelines/synthesize use the generic defaults

    def _simulated_answer(self, payload: Mapping) -> dict:
        feature = normalize_label(str(payload.get("feature", "")))
        labels = [str(o) for o in payload.get("options", [])]
        truth_value = self.truth.get(feature)
        reasoning = (f"simulator deliberation for {self.case.case_id}/{feature}: "
                     f"my unarticulated vision wants {truth_value!r}; scanning the "
                     f"presented options for the closest match before answering.")
        if truth_value is None:
            return {"option_index": 0, "other_text": None, "reasoning": reasoning}
        idx = match_option(truth_value, labels, has_residual=True)
        if idx == RESIDUAL:
            return {"option_index": None, "other_text": truth_value, "reasoning": reasoning}
        return {"option_index": idx, "other_text": None, "reasoning": reasoning}


# ---------------------------------------------------------------------------
# Simulated users
# ---------------------------------------------------------------------------

@dataclass
class SimulatedUser:
    """An answer policy bound to one case's ground truth.

    Scripted users answer deterministically from the synthetic intent.
    LLM-backed users (vision_based, intent_based) route through the oracle
    and may reason freely there, but only the selected option or residual
    text ever leaves this object: the reasoning field is dropped before
    the answer reaches the engine.
    """

    kind: str
    case: BenchmarkCase
    oracle: OracleBackend | None = None

    def __post_init__(self):
        if self.kind not in USER_KINDS:
            raise ConfigError(f"unknown simulated-user kind {self.kind!r}")
        if self.kind == "scripted" and self.case.synthetic_intent is None:
            raise ConfigError("scripted users require a synthetic_intent ground truth")

    def answer(self, query: CandidateQuery) -> Answer:
        if self.kind == "scripted":
            return self._scripted_answer(query)
        return self._oracle_answer(query)

    def _scripted_answer(self, query: CandidateQuery) -> Answer:
        truth_value = self.case.truth_features().get(query.feature)
        if truth_value is None:
            # a feature outside the true intent: accept the first option
            return Answer(option_index=0)
        idx = match_option(truth_value, query.option_labels(), query.has_residual)
        if idx == RESIDUAL:
            return Answer(other_text=truth_value)
        return Answer(option_index=idx)

    def _oracle_answer(self, query: CandidateQuery) -> Answer:
        if self.oracle is None:
            raise ConfigError(f"{self.kind} users need an oracle backend bound before answering")
        payload: dict = {"feature": query.feature,
                         "options": query.option_labels(),
                         "has_residual": query.has_residual}
        if self.kind == "intent_based":
            payload["brief"] = self.case.brief or self.case.truth_as_text()
        else:
            payload["reference_images"] = list(self.case.reference_images)
        data = self.oracle.call(OracleRequest(OracleKind.SIMULATE_ANSWER, payload))
        # leakage guard: everything but the selection stays here
        if data.get("option_index") is not None:
            return Answer(option_index=int(data["option_index"]))
        return Answer(other_text=str(data["other_text"]))


def simulate_answer(user: SimulatedUser, query: CandidateQuery) -> Answer:
    """Module-level alias for the user's answer policy."""
    if not query.options:
        raise ValueError("query must have at least one option")
    return user.answer(query)


# ---------------------------------------------------------------------------
# Strategy loops
# ---------------------------------------------------------------------------

@dataclass
class IterationRecord:
    iteration: int
    query_feature: str | None = None
    entropy: float | None = None
    eaug: float | None = None
    answer: dict | None = None
    specification: dict | None = None
    prompt: str | None = None
    image_handle: str | None = None
    scores: dict[str, float] = field(default_factory=dict)
    failed: bool = False
    error: str | None = None

    def to_record(self) -> dict:
        return {
            "iteration": self.iteration, "query_feature": self.query_feature,
            "entropy": self.entropy, "eaug": self.eaug, "answer": self.answer,
            "specification": self.specification, "prompt": self.prompt,
            "image_handle": self.image_handle, "scores": self.scores,
            "failed": self.failed, "error": self.error,
        }


@dataclass
class RunTrace:
    case_id: str
    category: str
    strategy: str
    run_index: int
    run_seed: int
    iterations: list[IterationRecord] = field(default_factory=list)
    final_specification: dict | None = None
    journal: Journal | None = None

    def to_record(self) -> dict:
        return {
            "case_id": self.case_id, "category": self.category,
            "strategy": self.strategy, "run_index": self.run_index,
            "run_seed": self.run_seed,
            "iterations": [rec.to_record() for rec in self.iterations],
            "final_specification": self.final_specification,
        }


def derive_run_seed(case_id: str, strategy: str, run_index: int, base_seed: int = 0) -> int:
    """Stable per-run seed from the run coordinates."""
    text = f"{base_seed}|{case_id}|{strategy}|{run_index}"
    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "big")


def _score_iteration(case: BenchmarkCase, prompt: str | None) -> dict[str, float]:
    scores: dict[str, float] = {}
    if prompt is None:
        return scores
    if case.synthetic_intent is not None:
        scores["feature_coverage"] = score_feature_coverage(prompt, case.truth_features())
    scores["text_similarity"] = score_text_similarity(prompt, case.truth_as_text())
    return scores


def build_scripted_stack(case: BenchmarkCase, seed: int,
                         journal: Journal | None = None) -> tuple[OracleBackend, RenderBackend]:
    """Oracle + renderer sharing one journal, scripted for this case."""
    journal = journal or Journal()
    provider = SyntheticCaseOracle(case, seed=seed) if case.synthetic_intent is not None else None
    oracle = ScriptedBackend(default_provider=provider, journal=journal, seed=seed)
    renderer = ScriptedRenderer(journal=journal)
    return oracle, renderer


def run_elicitation(case: BenchmarkCase, user: SimulatedUser, strategy: str,
                    budget: Budget, run_seed: int = 0, run_index: int = 0,
                    oracle: OracleBackend | None = None,
                    renderer: RenderBackend | None = None) -> RunTrace:
    """Execute one strategy loop on one case and capture the trace.

    Per-iteration oracle or render faults mark that iteration failed and
    the loop continues; only setup faults abort the run.
    """
    if strategy not in STRATEGIES:
        raise ConfigError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
    journal = Journal()
    if oracle is None or renderer is None:
        built_oracle, built_renderer = build_scripted_stack(case, run_seed, journal)
        oracle = oracle or built_oracle
        renderer = renderer or built_renderer
    else:
        journal = getattr(oracle, "journal", journal)
    if user.kind != "scripted" and user.oracle is None:
        user.oracle = oracle
    trace = RunTrace(case_id=case.case_id, category=case.category, strategy=strategy,
                     run_index=run_index, run_seed=run_seed, journal=journal)
    engine = ElicitationEngine(oracle, renderer, budget, seed=run_seed)

    if strategy in ("unoptimized", "apo"):
        _run_single_shot(case, strategy, engine, trace)
        return trace

    mode = "eaug" if strategy == "ape" else "first"
    spec = initialize_specification(case.initial_prompt, oracle)
    for iteration in range(1, budget.max_iterations + 1):
        record = IterationRecord(iteration=iteration)
        try:
            prepared = engine.prepare_query(spec, mode=mode)
            if prepared is None:
                break  # elicitation exhausted
            answer = simulate_answer(user, prepared.query)
            spec = engine.apply_answer(spec, prepared.query, answer)
            record.query_feature = prepared.query.feature
            record.entropy = prepared.entropy
            record.eaug = prepared.eaug
            record.answer = answer.to_record()
            prompt = engine.build_prompt(spec)
            record.prompt = prompt.text
            try:
                record.image_handle = engine.render_prompt(prompt.text, f"final-{iteration}")
            except RenderError as exc:
                record.error = f"render failed: {exc}"
            record.scores = _score_iteration(case, prompt.text)
        except (OracleError, RenderError, SchemaError) as exc:
            record.failed = True
            record.error = str(exc)
            log.warning("%s/%s run %d iteration %d failed: %s",
                        case.case_id, strategy, run_index, iteration, exc)
        record.specification = spec.to_record()
        trace.iterations.append(record)
    trace.final_specification = spec.to_record()
    return trace


def _run_single_shot(case: BenchmarkCase, strategy: str,
                     engine: ElicitationEngine, trace: RunTrace) -> None:
    record = IterationRecord(iteration=1)
    try:
        if strategy == "unoptimized":
            prompt_text = normalize_value(case.initial_prompt)
        else:
            prompt_text = rewrite_prompt(case.initial_prompt, engine.ctx, engine.oracle)
        record.prompt = prompt_text
        try:
            record.image_handle = engine.render_prompt(prompt_text, "final-1")
        except RenderError as exc:
            record.error = f"render failed: {exc}"
        record.scores = _score_iteration(case, prompt_text)
    except (OracleError, RenderError, SchemaError) as exc:
        record.failed = True
        record.error = str(exc)
    trace.iterations.append(record)
    trace.final_specification = Specification().to_record()


# ---------------------------------------------------------------------------
# The sweep
# ---------------------------------------------------------------------------

@dataclass
class BenchmarkResult:
    rows: list[dict] = field(default_factory=list)
    traces: list[RunTrace] = field(default_factory=list)
    completed: int = 0
    failed: int = 0

    def metrics(self) -> list[str]:
        return sorted({row["metric"] for row in self.rows})


def _user_for(case: BenchmarkCase) -> SimulatedUser:
    if case.synthetic_intent is not None:
        return SimulatedUser(kind="scripted", case=case)
    if case.brief is not None:
        return SimulatedUser(kind="intent_based", case=case)
    return SimulatedUser(kind="vision_based", case=case)


def _trace_rows(trace: RunTrace, max_iterations: int) -> list[dict]:
    """Flatten one trace into long-form rows, padding curves carry-forward.

    Every run contributes a value at every iteration index so aggregated
    curves compare equal sample counts per point.
    """
    rows: list[dict] = []
    last_scores: dict[str, float] = {}
    by_iteration: dict[int, IterationRecord] = {r.iteration: r for r in trace.iterations}
    for iteration in range(1, max_iterations + 1):
        record = by_iteration.get(iteration)
        if record is not None:
            if record.scores:
                last_scores = dict(record.scores)
            if record.eaug is not None:
                rows.append(_row(trace, iteration, "eaug", record.eaug))
        for metric, value in last_scores.items():
            rows.append(_row(trace, iteration, metric, value))
    return rows


def _row(trace: RunTrace, iteration: int, metric: str, value: float) -> dict:
    return {"case_id": trace.case_id, "category": trace.category,
            "strategy": trace.strategy, "run": trace.run_index,
            "iteration": iteration, "metric": metric, "value": value}


def run_benchmark(cases: Sequence[BenchmarkCase], strategies: Sequence[str],
                  runs_per_case: int, budget: Budget, base_seed: int = 0,
                  parallel: int = 1, user_factory=None,
                  stack_factory=None) -> BenchmarkResult:
    """Execute every (case, strategy, run) combination with distinct seeds.

    ``stack_factory(case, run_seed, journal) -> (oracle, renderer)`` swaps
    in non-scripted backends; each run still gets its own journal.
    """
    if runs_per_case < 1:
        raise ConfigError("runs_per_case must be >= 1")
    for strategy in strategies:
        if strategy not in STRATEGIES:
            raise ConfigError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
    user_factory = user_factory or _user_for
    jobs = [(case, strategy, run)
            for case in cases for strategy in strategies
            for run in range(1, runs_per_case + 1)]

    def execute(job: tuple[BenchmarkCase, str, int]) -> RunTrace:
        case, strategy, run = job
        seed = derive_run_seed(case.case_id, strategy, run, base_seed)
        oracle = renderer = None
        if stack_factory is not None:
            oracle, renderer = stack_factory(case, seed, Journal())
        try:
            return run_elicitation(case, user_factory(case), strategy, budget,
                                   run_seed=seed, run_index=run,
                                   oracle=oracle, renderer=renderer)
        except PromptElicitError as exc:
            log.error("%s/%s run %d aborted during setup: %s", case.case_id, strategy, run, exc)
            return RunTrace(case_id=case.case_id, category=case.category,
                            strategy=strategy, run_index=run, run_seed=seed,
                            iterations=[IterationRecord(iteration=1, failed=True,
                                                        error=str(exc))],
                            final_specification=Specification().to_record())

    result = BenchmarkResult()
    if parallel > 1:
        with ThreadPoolExecutor(max_workers=parallel) as pool:
            traces = list(pool.map(execute, jobs))
    else:
        traces = [execute(job) for job in jobs]
    for trace in traces:
        result.traces.append(trace)
        result.rows.extend(_trace_rows(trace, budget.max_iterations))
        if any(rec.failed for rec in trace.iterations):
            result.failed += 1
        else:
            result.completed += 1
    return result


def scan_leakage(result: BenchmarkResult) -> list[str]:
    """Return reasoning strings that leaked into engine-visible records.

    Engine-visible means: trace answers and specifications, plus the
    payload of every journaled request that is not the simulator's own
    answer call. An empty return is the leakage-guard pass condition.
    """
    leaks: list[str] = []
    for trace in result.traces:
        if trace.journal is None:
            continue
        reasoning_texts = [
            response["data"]["reasoning"]
            for request, response in trace.journal.exchanges("oracle")
            if request["kind"] == OracleKind.SIMULATE_ANSWER.value
            and response.get("status") == "ok"
            and isinstance(response["data"].get("reasoning"), str)
        ]
        if not reasoning_texts:
            continue
        visible_parts = [canonical_json(trace.to_record())]
        for request, _ in trace.journal.exchanges():
            if request["kind"] != OracleKind.SIMULATE_ANSWER.value:
                visible_parts.append(canonical_json(request["payload"]))
        visible = "\n".join(visible_parts)
        for text in reasoning_texts:
            if text and text in visible:
                leaks.append(f"{trace.case_id}/{trace.strategy}/run{trace.run_index}: {text[:60]}")
    return leaks
