"""Closed-form bounds on local computations, rounds and overhead bits.

All functions take plain integers.  ``stragglers`` is the number of silent
honest workers tolerated per group; it enters every formula by replacing
``u`` with ``u - stragglers``.  Exact quantities are returned as ``int`` or
``Fraction``; only the information-theoretic lower bound is a float.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import BoundViolation, ConfigurationError


def c_bar(c: int) -> int:
    return max(1, c)


def tree_height(samples_per_group: int) -> int:
    """``ceil(log2 q)``: bisection steps needed to isolate one of ``q`` samples."""
    if samples_per_group < 1:
        raise ConfigurationError(f"need at least one sample per group, got {samples_per_group}")
    return (samples_per_group - 1).bit_length()


def _effective_u(u: int, stragglers: int) -> int:
    if not 0 <= stragglers < u:
        raise ConfigurationError(f"need 0 <= stragglers < u, got stragglers={stragglers}, u={u}")
    return u - stragglers


def _per_group(p: int, m: int) -> int:
    if m < 1 or p < m or p % m:
        raise ConfigurationError(f"m = {m} must divide p = {p}")
    return p // m


def c_min(s: int, u: int, stragglers: int = 0) -> int:
    """Fewest local computations any scheme with replication ``s+u`` can get away with."""
    if s < 0:
        raise ConfigurationError(f"s must be >= 0, got {s}")
    return s // _effective_u(u, stragglers)


# the scheme meets the converse exactly
c_max = c_min


def kappa_lower(p: int, m: int, s: int, u: int, stragglers: int = 0) -> float:
    """``log2 C(p/m, floor(s/u))`` bits, the overhead floor at minimal ``c``."""
    q = _per_group(p, m)
    c = c_min(s, u, stragglers)
    if c > q:
        raise ConfigurationError(f"binomial C({q}, {c}) is undefined")
    # math.comb is exact, and math.log2 accepts arbitrarily large integers
    return math.log2(math.comb(q, c))


def _match_budget(s: int, u: int, c: int) -> int:
    return s - c_bar(c) * (u - 1)


def _check_c(s: int, u: int, c: int) -> None:
    if c < 0:
        raise ConfigurationError(f"c must be >= 0, got {c}")
    if u <= s + 1 and c > s // u:
        raise ConfigurationError(f"c = {c} exceeds floor(s/u) = {s // u}")


def kappa_upper(p: int, m: int, s: int, u: int, c: int, k: int, stragglers: int = 0) -> Fraction:
    """Worst-case overhead bits of the match/tournament scheme.

    For ``u > s+1`` an honest class always outnumbers the adversary, so the
    scheme never interacts and the bound is 0.
    """
    u = _effective_u(u, stragglers)
    _check_c(s, u, c)
    if u > s + 1:
        return Fraction(0)
    height = tree_height(_per_group(p, m))
    cb = c_bar(c)
    per_match = (1 + k) * height + Fraction(s + (cb + 2) * u - 3, 2)
    return _match_budget(s, u, c) * per_match - cb * Fraction(s - u + 1, 2)


def r_max(p: int, m: int, s: int, u: int, c: int, stragglers: int = 0) -> int:
    """Worst-case number of interactive rounds."""
    u = _effective_u(u, stragglers)
    _check_c(s, u, c)
    if u > s + 1:
        return 0
    return _match_budget(s, u, c) * (2 * tree_height(_per_group(p, m)) + 1)


def kappa_asymptotic(p: int, m: int, s: int, u: int, c: int, k: int, stragglers: int = 0) -> int:
    """Leading term of ``kappa_upper`` for large ``p/m``."""
    if not 0 <= stragglers < u:
        raise ConfigurationError(f"need 0 <= stragglers < u, got stragglers={stragglers}, u={u}")
    if u - stragglers > s + 1:
        return 0
    return (s - c_bar(c) * (u - stragglers - 1)) * (1 + k) * tree_height(_per_group(p, m))


def ratio_limit(s: int, u: int, k: int) -> Fraction:
    """Limit of ``kappa_upper / kappa_lower`` as ``p`` grows, with ``c = floor(s/u)``."""
    if u < 1:
        raise ConfigurationError(f"u must be >= 1, got {u}")
    if s // u == 0:
        raise ConfigurationError(f"the limit needs s >= u (got s={s}, u={u})")
    return (1 + k) * (1 + Fraction(s % u, s // u))


def convergence_ratio(p: int, m: int, s: int, u: int, k: int) -> float:
    """``kappa_upper / kappa_lower`` at the minimal number of local computations."""
    c = c_min(s, u)
    low = kappa_lower(p, m, s, u)
    if low == 0:
        raise ConfigurationError(f"lower bound is 0 bits for s={s}, u={u}; the ratio is undefined")
    return float(kappa_upper(p, m, s, u, c, k)) / low


@dataclass(frozen=True)
class BoundSet:
    c_min: int
    kappa_lower: float
    c_max: int
    r_max: int
    kappa_upper: Fraction
    kappa_asymptotic: int
    ratio_limit: Fraction | None

    def __post_init__(self):
        if self.kappa_lower > self.kappa_upper and self.c_max > 0:
            raise BoundViolation(f"lower bound {self.kappa_lower} exceeds upper bound {self.kappa_upper}")


def bound_set(p: int, m: int, s: int, u: int, k: int, c: int | None = None, stragglers: int = 0) -> BoundSet:
    """All bounds for one configuration; ``c`` defaults to the minimal number."""
    cm = c_min(s, u, stragglers)
    c = cm if c is None else c
    u_eff = u - stragglers
    return BoundSet(
        c_min=cm,
        kappa_lower=kappa_lower(p, m, s, u, stragglers),
        c_max=cm,
        r_max=r_max(p, m, s, u, c, stragglers),
        kappa_upper=kappa_upper(p, m, s, u, c, k, stragglers),
        kappa_asymptotic=kappa_asymptotic(p, m, s, u, c, k, stragglers),
        ratio_limit=ratio_limit(s, u_eff, k) if s >= u_eff else None,
    )


def check_run(cfg, metrics, stragglers: int = 0) -> list[str]:
    """Compare one run's metrics against the bounds for its measured ``c``.

    Returns the list of violations (empty when everything holds).
    """
    s, u, m, p = cfg.n_malicious, cfg.honest_per_group, cfg.n_groups, cfg.n_samples
    k = cfg.alphabet.size_log2
    c = metrics.local_computations
    problems = []
    cap = c_max(s, u, stragglers)
    if c > cap:
        problems.append(f"local computations {c} > {cap}")
        return problems
    r_cap = r_max(p, m, s, u, c, stragglers)
    if metrics.rounds > r_cap:
        problems.append(f"rounds {metrics.rounds} > {r_cap}")
    kappa_cap = kappa_upper(p, m, s, u, c, k, stragglers)
    if metrics.kappa_bits > kappa_cap:
        problems.append(f"overhead {metrics.kappa_bits} bits > {float(kappa_cap):g}")
    match_cap = max(0, _match_budget(s, u - stragglers, c)) if u - stragglers <= s + 1 else 0
    if metrics.matches > match_cap:
        problems.append(f"matches {metrics.matches} > {match_cap}")
    return problems


def assert_run(cfg, metrics, stragglers: int = 0) -> None:
    problems = check_run(cfg, metrics, stragglers)
    if problems:
        raise BoundViolation("; ".join(problems))
