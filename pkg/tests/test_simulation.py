from __future__ import annotations

import json
import math

import pytest

from promptelicit.engine import Budget
from promptelicit.errors import ConfigError
from promptelicit.journal import Journal
from promptelicit.oracles import (DemoOracle, OracleKind, OracleRequest,
                                  ScriptedBackend, ScriptedRenderer)
from promptelicit.queries import CandidateQuery, QueryOption
from promptelicit.simulation import (STRATEGIES, BenchmarkCase, SimulatedUser,
                                     SyntheticCaseOracle, derive_run_seed,
                                     load_cases, run_benchmark,
                                     run_elicitation, scan_leakage,
                                     simulate_answer)

LN_4 = 1.3862943611198906


def _case(**overrides) -> BenchmarkCase:
    base = dict(
        case_id="tiny",
        initial_prompt="an app icon for hiking",
        category="icon",
        synthetic_intent={"color scheme": "dark blue", "mood": "serene"},
        feature_order=("canvas shape", "color scheme", "mood"),
        decoy_features={"canvas shape": "square"},
        feature_weights={"color scheme": 0.9, "mood": 0.6, "canvas shape": 0.2},
        option_pools={"color scheme": ("dark blue", "earth tones", "vibrant orange", "pastel green"),
                      "mood": ("serene", "cozy", "tense", "bold")},
    )
    base.update(overrides)
    return BenchmarkCase(**base)


def _brief_case() -> BenchmarkCase:
    return BenchmarkCase(case_id="briefed", initial_prompt="a poster",
                         brief="a navy blue poster of a lighthouse at dusk")


# ---------------------------------------------------------------------------
# BenchmarkCase / load_cases
# ---------------------------------------------------------------------------

def test_case_requires_exactly_one_ground_truth():
    with pytest.raises(ConfigError, match="exactly one"):
        BenchmarkCase(case_id="none", initial_prompt="p")
    with pytest.raises(ConfigError, match="exactly one"):
        BenchmarkCase(case_id="two", initial_prompt="p", brief="b",
                      synthetic_intent={"mood": "serene"})


def test_case_rejects_blank_prompt_and_empty_intent():
    with pytest.raises(ConfigError, match="blank"):
        BenchmarkCase(case_id="c", initial_prompt="  ", brief="b")
    with pytest.raises(ConfigError, match="non-empty"):
        BenchmarkCase(case_id="c", initial_prompt="p", synthetic_intent={})


def test_case_truth_text_variants():
    assert _case().truth_as_text() == "dark blue, serene"
    assert _brief_case().truth_as_text() == "a navy blue poster of a lighthouse at dusk"
    ref = BenchmarkCase(case_id="r", initial_prompt="p", reference_images=("a.png",))
    assert ref.truth_as_text() == "p"


def test_case_record_round_trip():
    case = _case()
    again = BenchmarkCase.from_record(case.to_record())
    assert again.to_record() == case.to_record()


def test_load_cases_from_files_and_dirs(tmp_path):
    a = tmp_path / "a.json"
    a.write_text(json.dumps(_case().to_record()), encoding="utf-8")
    sub = tmp_path / "more"
    sub.mkdir()
    b = sub / "b.json"
    b.write_text(json.dumps(_brief_case().to_record()), encoding="utf-8")
    cases = load_cases([a, sub])
    assert [c.case_id for c in cases] == ["tiny", "briefed"]


def test_load_cases_missing_path_names_it(tmp_path):
    missing = tmp_path / "nope.json"
    with pytest.raises(ConfigError, match="nope.json"):
        load_cases([missing])


def test_load_cases_rejects_duplicates_and_bad_json(tmp_path):
    a = tmp_path / "a.json"
    a.write_text(json.dumps(_case().to_record()), encoding="utf-8")
    b = tmp_path / "b.json"
    b.write_text(json.dumps(_case().to_record()), encoding="utf-8")
    with pytest.raises(ConfigError, match="duplicate"):
        load_cases([a, b])
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError, match="valid JSON"):
        load_cases([bad])


def test_load_cases_empty_dir(tmp_path):
    with pytest.raises(ConfigError, match="no \\*.json"):
        load_cases([tmp_path])


# ---------------------------------------------------------------------------
# SyntheticCaseOracle
# ---------------------------------------------------------------------------

def test_synthetic_oracle_requires_synthetic_intent():
    with pytest.raises(ConfigError):
        SyntheticCaseOracle(_brief_case())


def test_synthetic_oracle_proposes_in_case_order():
    oracle = SyntheticCaseOracle(_case())
    data = oracle(OracleRequest(OracleKind.PROPOSE_FEATURES, {
        "requirements": [{"feature": "theme", "value": "t"}], "max_features": 5}))
    assert data["features"] == ["canvas shape", "color scheme", "mood"]
    data = oracle(OracleRequest(OracleKind.PROPOSE_FEATURES, {
        "requirements": [{"feature": "color scheme", "value": "dark blue"}],
        "max_features": 5}))
    assert data["features"] == ["canvas shape", "mood"]


def test_synthetic_oracle_truth_votes_cycle_and_decoys_are_unanimous():
    oracle = SyntheticCaseOracle(_case(), seed=3)
    data = oracle(OracleRequest(OracleKind.SAMPLE_INTENT, {
        "features": ["color scheme", "canvas shape"], "requirements": [], "count": 8}))
    color_votes = {s["color scheme"] for s in data["samples"]}
    assert color_votes == {"dark blue", "earth tones", "vibrant orange", "pastel green"}
    canvas_votes = {s["canvas shape"] for s in data["samples"]}
    assert canvas_votes == {"square"}


def test_synthetic_oracle_vote_cycle_is_balanced_over_eight_samples():
    oracle = SyntheticCaseOracle(_case(), seed=11)
    data = oracle(OracleRequest(OracleKind.SAMPLE_INTENT, {
        "features": ["mood"], "requirements": [], "count": 8}))
    counts: dict[str, int] = {}
    for sample in data["samples"]:
        counts[sample["mood"]] = counts.get(sample["mood"], 0) + 1
    assert sorted(counts.values()) == [2, 2, 2, 2]  # uniform: entropy ln 4


def test_synthetic_oracle_weights_fall_back_by_truth_membership():
    case = _case(feature_weights=None)
    oracle = SyntheticCaseOracle(case)
    truth = oracle(OracleRequest(OracleKind.RATE_WEIGHT, {"feature": "color scheme"}))
    decoy = oracle(OracleRequest(OracleKind.RATE_WEIGHT, {"feature": "canvas shape"}))
    assert truth["rating"] == 0.8
    assert decoy["rating"] == 0.2


def test_synthetic_oracle_respects_specified_values():
    oracle = SyntheticCaseOracle(_case())
    data = oracle(OracleRequest(OracleKind.SAMPLE_INTENT, {
        "features": ["color scheme"],
        "requirements": [{"feature": "color scheme", "value": "mauve"}],
        "count": 4}))
    assert all(s["color scheme"] == "mauve" for s in data["samples"])


def test_synthetic_oracle_simulated_answer_finds_truth_option():
    oracle = SyntheticCaseOracle(_case())
    data = oracle(OracleRequest(OracleKind.SIMULATE_ANSWER, {
        "feature": "color scheme",
        "options": ["earth tones", "dark blue", "pastel green"],
        "has_residual": True}))
    assert data["option_index"] == 1
    assert data["reasoning"]  # free-form deliberation rides along in the oracle reply


def test_synthetic_oracle_simulated_answer_uses_residual_when_truth_absent():
    oracle = SyntheticCaseOracle(_case())
    data = oracle(OracleRequest(OracleKind.SIMULATE_ANSWER, {
        "feature": "color scheme",
        "options": ["earth tones", "pastel green"],
        "has_residual": True}))
    assert data["option_index"] is None
    assert data["other_text"] == "dark blue"


# ---------------------------------------------------------------------------
# SimulatedUser
# ---------------------------------------------------------------------------

def _query(feature, labels):
    return CandidateQuery(feature=feature, options=[QueryOption(lab) for lab in labels])


def test_scripted_user_answers_from_truth():
    user = SimulatedUser(kind="scripted", case=_case())
    assert user.answer(_query("color scheme", ["earth tones", "dark blue"])).option_index == 1
    answer = user.answer(_query("color scheme", ["earth tones", "pastel green"]))
    assert answer.option_index is None and answer.other_text == "dark blue"
    # features outside the truth (decoys) get the first option
    assert user.answer(_query("canvas shape", ["square", "round"])).option_index == 0


def test_scripted_user_requires_synthetic_intent():
    with pytest.raises(ConfigError):
        SimulatedUser(kind="scripted", case=_brief_case())


def test_unknown_user_kind_rejected():
    with pytest.raises(ConfigError):
        SimulatedUser(kind="telepathic", case=_case())


def test_oracle_backed_user_needs_backend_bound():
    user = SimulatedUser(kind="intent_based", case=_brief_case())
    with pytest.raises(ConfigError, match="oracle backend"):
        user.answer(_query("mood", ["serene", "tense"]))


def test_oracle_backed_user_strips_reasoning():
    case = _brief_case()
    journal = Journal()
    oracle = ScriptedBackend(default_provider=SyntheticCaseOracle(_case()),
                             journal=journal)
    user = SimulatedUser(kind="intent_based", case=case, oracle=oracle)
    answer = user.answer(_query("color scheme", ["dark blue", "earth tones"]))
    assert answer.option_index == 0
    assert answer.other_text is None
    assert not hasattr(answer, "reasoning")
    recorded = journal.exchanges("oracle")[-1][1]["data"]
    assert "reasoning" in recorded  # stays in the journal, never in the Answer


def test_simulate_answer_rejects_optionless_query():
    user = SimulatedUser(kind="scripted", case=_case())
    with pytest.raises(ValueError):
        simulate_answer(user, CandidateQuery(feature="f", options=[]))


# ---------------------------------------------------------------------------
# run_elicitation
# ---------------------------------------------------------------------------

def test_derive_run_seed_matches_frozen_reference():
    # frozen from an independent sha256 computation
    assert derive_run_seed("hiking-icon", "ape", 0, base_seed=42) == 14050328373428183473
    assert derive_run_seed("hiking-icon", "ape", 1, base_seed=42) != \
        derive_run_seed("hiking-icon", "ape", 0, base_seed=42)


def test_unknown_strategy_rejected():
    case = _case()
    user = SimulatedUser(kind="scripted", case=case)
    with pytest.raises(ConfigError, match="unknown strategy"):
        run_elicitation(case, user, "greedy", Budget())


def test_ape_asks_informative_features_first_and_converges():
    case = _case()
    trace = run_elicitation(case, SimulatedUser(kind="scripted", case=case),
                            "ape", Budget(max_iterations=6), run_seed=5)
    features = [r.query_feature for r in trace.iterations]
    assert features == ["color scheme", "mood", "canvas shape"]
    first = trace.iterations[0]
    assert first.entropy == pytest.approx(LN_4, abs=1e-9)
    assert first.eaug == pytest.approx(0.9 * LN_4, abs=1e-9)
    # zero-entropy decoy goes last and scores zero utility
    assert trace.iterations[2].eaug == pytest.approx(0.0, abs=1e-12)
    coverage = [r.scores["feature_coverage"] for r in trace.iterations]
    assert coverage[1] == 1.0  # both truth features specified after 2 answers
    assert trace.final_specification is not None
    spec_features = [r["feature"] for r in trace.final_specification["requirements"]]
    assert spec_features == ["theme", "color scheme", "mood", "canvas shape"]


def test_in_context_follows_proposal_order_and_skips_scoring():
    case = _case()
    trace = run_elicitation(case, SimulatedUser(kind="scripted", case=case),
                            "in_context", Budget(max_iterations=6), run_seed=5)
    features = [r.query_feature for r in trace.iterations]
    assert features == ["canvas shape", "color scheme", "mood"]
    assert all(r.entropy is None and r.eaug is None for r in trace.iterations)
    coverage = [r.scores["feature_coverage"] for r in trace.iterations]
    assert coverage[0] == 0.0  # first iteration burned on the decoy
    assert coverage[2] == 1.0


def test_unoptimized_renders_initial_prompt_verbatim():
    case = _case()
    trace = run_elicitation(case, SimulatedUser(kind="scripted", case=case),
                            "unoptimized", Budget(), run_seed=5)
    assert len(trace.iterations) == 1
    assert trace.iterations[0].prompt == "an app icon for hiking"
    assert trace.iterations[0].image_handle
    assert trace.final_specification == {"requirements": [], "revision": 0}


def test_apo_rewrites_once():
    case = _case()
    trace = run_elicitation(case, SimulatedUser(kind="scripted", case=case),
                            "apo", Budget(), run_seed=5)
    assert len(trace.iterations) == 1
    assert trace.iterations[0].prompt == \
        "an app icon for hiking, sharply detailed, balanced composition"


def test_every_iteration_scores_coverage_and_similarity():
    case = _case()
    trace = run_elicitation(case, SimulatedUser(kind="scripted", case=case),
                            "ape", Budget(max_iterations=6), run_seed=5)
    for record in trace.iterations:
        assert set(record.scores) == {"feature_coverage", "text_similarity"}
        assert 0.0 <= record.scores["text_similarity"] <= 1.0


def test_run_is_deterministic_for_fixed_seed():
    case = _case()
    t1 = run_elicitation(case, SimulatedUser(kind="scripted", case=case),
                         "ape", Budget(max_iterations=6), run_seed=9)
    t2 = run_elicitation(case, SimulatedUser(kind="scripted", case=case),
                         "ape", Budget(max_iterations=6), run_seed=9)
    assert t1.to_record() == t2.to_record()


# ---------------------------------------------------------------------------
# run_benchmark
# ---------------------------------------------------------------------------

def test_benchmark_cardinality_and_row_padding():
    budget = Budget(max_iterations=4)
    result = run_benchmark([_case()], ["ape", "unoptimized"], runs_per_case=2,
                           budget=budget, base_seed=1)
    assert len(result.traces) == 4
    assert result.completed == 4 and result.failed == 0
    coverage = [r for r in result.rows if r["metric"] == "feature_coverage"]
    # every (strategy, run) carries a value at every iteration index
    for strategy in ("ape", "unoptimized"):
        for run in (1, 2):
            points = [r for r in coverage
                      if r["strategy"] == strategy and r["run"] == run]
            assert sorted(p["iteration"] for p in points) == [1, 2, 3, 4]


def test_benchmark_rows_are_deterministic_and_parallel_safe():
    budget = Budget(max_iterations=3)
    kwargs = dict(cases=[_case()], strategies=["ape", "in_context"],
                  runs_per_case=2, budget=budget, base_seed=7)
    serial = run_benchmark(parallel=1, **kwargs)
    again = run_benchmark(parallel=1, **kwargs)
    threaded = run_benchmark(parallel=3, **kwargs)
    assert serial.rows == again.rows
    assert serial.rows == threaded.rows


def test_benchmark_single_shot_curves_are_flat():
    budget = Budget(max_iterations=4)
    result = run_benchmark([_case()], ["unoptimized", "apo"], runs_per_case=1,
                           budget=budget, base_seed=1)
    for strategy in ("unoptimized", "apo"):
        values = {r["value"] for r in result.rows
                  if r["strategy"] == strategy and r["metric"] == "feature_coverage"}
        assert len(values) == 1


def test_benchmark_setup_fault_isolated_to_failed_trace():
    def broken_stack(case, seed, journal):
        return (ScriptedBackend(strict=True, journal=journal),
                ScriptedRenderer(journal=journal))

    result = run_benchmark([_case()], ["ape"], runs_per_case=2, budget=Budget(),
                           base_seed=1, stack_factory=broken_stack)
    assert result.failed == 2 and result.completed == 0
    assert all(t.iterations[0].failed for t in result.traces)
    assert all(t.iterations[0].error for t in result.traces)


def test_benchmark_rejects_bad_config():
    with pytest.raises(ConfigError):
        run_benchmark([_case()], ["ape"], runs_per_case=0, budget=Budget())
    with pytest.raises(ConfigError):
        run_benchmark([_case()], ["greedy"], runs_per_case=1, budget=Budget())


def test_strategies_tuple_is_the_published_four():
    assert STRATEGIES == ("ape", "in_context", "apo", "unoptimized")


# ---------------------------------------------------------------------------
# leakage scanning
# ---------------------------------------------------------------------------

def _demo_stack(case, seed, journal):
    return (ScriptedBackend(default_provider=DemoOracle(seed=seed),
                            journal=journal, seed=seed),
            ScriptedRenderer(journal=journal))


def test_leakage_scan_clean_on_oracle_backed_runs():
    result = run_benchmark([_brief_case()], ["ape"], runs_per_case=2,
                           budget=Budget(max_iterations=3), base_seed=3,
                           stack_factory=_demo_stack)
    simulate_calls = sum(
        1 for trace in result.traces
        for req, _ in trace.journal.exchanges("oracle")
        if req["kind"] == "simulate_answer")
    assert simulate_calls >= 4  # the scan had material to inspect
    assert scan_leakage(result) == []


def test_leakage_scan_detects_planted_reasoning():
    result = run_benchmark([_brief_case()], ["ape"], runs_per_case=1,
                           budget=Budget(max_iterations=2), base_seed=3,
                           stack_factory=_demo_stack)
    assert scan_leakage(result) == []
    reasoning = next(
        resp["data"]["reasoning"]
        for trace in result.traces
        for req, resp in trace.journal.exchanges("oracle")
        if req["kind"] == "simulate_answer")
    tampered = result.traces[0].iterations[-1]
    tampered.answer = {"option_index": None, "other_text": reasoning}
    leaks = scan_leakage(result)
    assert leaks
    assert all("briefed/ape/run1" in leak for leak in leaks)
