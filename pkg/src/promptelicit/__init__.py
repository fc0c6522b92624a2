"""Adaptive prompt elicitation for text-to-image generation.

The package keeps a growing specification of a user's visual intent,
picks the next question by how much uncertainty its answer removes,
and compiles the result into a model-ready prompt. It ships with fully
scripted backends, a simulated-user benchmark, a session HTTP service,
and deterministic replay tooling.
"""

from .engine import Budget, ElicitationEngine
from .errors import (ConfigError, DuplicateFeatureConflict, EmptyCandidates,
                     EmptyOtherText, EmptyPrompt, InvalidDistribution,
                     InvalidOptionIndex, MatcherError, NoUnspecifiedFeatures,
                     OracleError, PromptElicitError, RenderError,
                     ReplayMismatch, RevisionConflict, SchemaError, WrongState)
from .intent import (FeatureRequirement, FeatureSpace, IntentSample, Origin,
                     Specification, delete_requirement,
                     initialize_specification, propose_feature_space,
                     sample_intents, update_specification)
from .matching import RESIDUAL, match_option, normalize_label, normalize_value
from .metrics import (get_scorer, register_scorer, score_feature_coverage,
                      score_text_similarity)
from .oracles import (DemoOracle, JournalReplayBackend, LiveOracleBackend,
                      LiveRenderer, LiveSettings, OracleKind, OracleRequest,
                      RenderRequest, ScriptedBackend, ScriptedRenderer)
from .queries import (Answer, CandidateQuery, PreparedQuery, QueryOption,
                      ScoredQuery, compute_eaug, estimate_option_distribution,
                      estimate_weight, generate_candidates, handle_answer,
                      render_query_exemplars, select_query, shannon_entropy)
from .session import (EventType, ReplayReport, RequirementEdit, Session,
                      SessionStatus, SessionStore, replay_session)
from .simulation import (STRATEGIES, BenchmarkCase, BenchmarkResult, RunTrace,
                         SimulatedUser, SyntheticCaseOracle, derive_run_seed,
                         load_cases, run_benchmark, run_elicitation,
                         scan_leakage, simulate_answer)
from .synthesis import (SynthesisContext, SynthesizedPrompt, elicit_guidelines,
                        rewrite_prompt, synthesize_prompt, template_fallback)

__version__ = "0.1.0"
