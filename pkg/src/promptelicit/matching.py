"""Label normalization and the deterministic option matcher.

The matcher classifies a free-text value onto one of a query's options in
three tiers: exact normalized match, then substring containment (either
direction), then the residual bucket. It is intentionally oracle-free so
that vote counting, simulated answers, and coverage scoring stay
deterministic at desk scale. An embedding-based matcher can be swapped in
anywhere a ``matcher`` callable is accepted.
"""

from __future__ import annotations

import re
from typing import Sequence

from .errors import MatcherError

_WHITESPACE = re.compile(r"\s+")

#: Sentinel index used for votes that land in the residual ("Other") bucket.
RESIDUAL = -1


def normalize_label(label: str) -> str:
    """Lowercase, trim, and collapse internal whitespace in a feature label."""
    return _WHITESPACE.sub(" ", label.strip()).lower()


def normalize_value(value: str) -> str:
    """Trim and collapse internal whitespace in a value; case is preserved."""
    return _WHITESPACE.sub(" ", value.strip())


def values_match(a: str, b: str) -> bool:
    """True when two values agree exactly or one contains the other (normalized)."""
    na, nb = normalize_label(a), normalize_label(b)
    if not na or not nb:
        return False
    return na == nb or na in nb or nb in na


def match_option(value: str, option_labels: Sequence[str], has_residual: bool = True) -> int:
    """Classify ``value`` onto an option index, or ``RESIDUAL`` for the Other bucket.

    Tier 1: exact normalized equality. Tier 2: substring containment in
    either direction. Tier 3: residual. The first matching option in list
    order wins within each tier, so classification is deterministic.

    Raises MatcherError when nothing matches and the query has no residual
    bucket.
    """
    norm = normalize_label(value)
    labels = [normalize_label(lab) for lab in option_labels]
    for idx, lab in enumerate(labels):
        if norm and norm == lab:
            return idx
    for idx, lab in enumerate(labels):
        if norm and lab and (lab in norm or norm in lab):
            return idx
    if has_residual:
        return RESIDUAL
    raise MatcherError(f"value {value!r} matches no option and the query has no residual bucket")
