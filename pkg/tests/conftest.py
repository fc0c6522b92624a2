from __future__ import annotations

from promptelicit.intent import FeatureRequirement, Origin, Specification
from promptelicit.oracles import OracleKind, ScriptedBackend


def oracle_with(handlers: dict, **kwargs) -> ScriptedBackend:
    """ScriptedBackend whose per-kind responses come from a handler map.

    A handler may be a static dict or a callable taking the request payload;
    kinds without a handler fall through to the generic defaults.
    """

    def provide(req):
        handler = handlers.get(req.kind)
        if handler is None:
            return None
        return handler(req.payload) if callable(handler) else handler

    return ScriptedBackend(default_provider=provide, **kwargs)


def spec_of(*pairs: tuple[str, str], origin: Origin = Origin.INITIAL_PROMPT) -> Specification:
    """Specification literal for tests: ordered (feature, value) pairs."""
    reqs = tuple(FeatureRequirement(feature, value, origin, i + 1)
                 for i, (feature, value) in enumerate(pairs))
    return Specification(requirements=reqs, revision=1)


KINDS = OracleKind
