"""Exact classification of exponent regions and dyadic summation probes.

Classifiers work purely in :class:`fractions.Fraction`; the dyadic sums are
floating point and compare brute-force enumeration against closed-form
bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from enum import Enum
from fractions import Fraction
from typing import Iterable

import numpy as np

from .exponents import ExponentTuple, positive_part, to_fraction
from .lattice import InvalidInputError


class Status(str, Enum):
    SUFFICIENT_INTERIOR = "SUFFICIENT_INTERIOR"
    NECESSARY_VIOLATED = "NECESSARY_VIOLATED"
    BOUNDARY = "BOUNDARY"
    # only the mixed wave checker uses this: it has no necessity catalog
    INCONCLUSIVE = "INCONCLUSIVE"


@dataclass(frozen=True)
class Condition:
    """``lhs - rhs`` compared against zero, strictly or not."""

    id: str
    margin: Fraction
    strict: bool

    @property
    def holds(self) -> bool:
        return self.margin > 0 if self.strict else self.margin >= 0

    @property
    def holds_weakly(self) -> bool:
        return self.margin >= 0


@dataclass(frozen=True)
class RegionVerdict:
    status: Status
    witnesses: tuple = field(default_factory=tuple)

    @property
    def violated(self) -> list[str]:
        return [c.id for c in self.witnesses if not c.holds]

    def to_dict(self) -> dict:
        return {
            "status": self.status.value,
            "violated": self.violated,
            "margins": {c.id: str(c.margin) for c in self.witnesses},
        }


def _sorted3(b):
    lo, med, hi = sorted(b)
    return lo, med, hi


HALF = Fraction(1, 2)


def _product_conditions(e: ExponentTuple, strict: bool) -> list[Condition]:
    """The sufficiency list with relations made strict (or all weak)."""
    b1, b2, b3 = e.b
    s1, s2, s3 = e.s
    bmin, bmed, bmax = _sorted3(e.b)
    sb = b1 + b2 + b3
    ss = s1 + s2 + s3
    tail = positive_part(HALF - bmax) + positive_part(HALF - bmed) - bmin
    conds = [
        Condition("b1+b2+b3>1/2", sb - HALF, strict),
        Condition("b1+b2>0", b1 + b2, strict),
        Condition("b1+b3>0", b1 + b3, strict),
        Condition("b2+b3>0", b2 + b3, strict),
        # weak even in the sufficiency list
        Condition("s1+s2>=0", s1 + s2, False),
    ]
    for k, sk in ((1, s1), (2, s2)):
        conds.append(Condition(f"s{k}+s3>-b_min", sk + s3 + bmin, strict))
        conds.append(Condition(f"s{k}+s3>1/2-b1-b2-b3", sk + s3 - (HALF - sb), strict))
    conds.append(Condition("s1+s2+s3>1/2-b3", ss - (HALF - b3), strict))
    conds.append(Condition("s1+s2+s3>(1/2-b_max)_+ + (1/2-b_med)_+ - b_min", ss - tail, strict))
    return conds


def thm11_check(e: ExponentTuple) -> RegionVerdict:
    """Classify ``e`` against the product estimate's sufficient and necessary lists."""
    conds = _product_conditions(e, strict=True)
    if all(c.holds for c in conds):
        return RegionVerdict(Status.SUFFICIENT_INTERIOR, tuple(conds))
    if any(not c.holds_weakly for c in conds):
        return RegionVerdict(Status.NECESSARY_VIOLATED, tuple(conds))
    return RegionVerdict(Status.BOUNDARY, tuple(conds))


def cor12_check(s1, s2, r, b1, b2, b3) -> RegionVerdict:
    """Sufficiency check for the ``X_+ x X_- x H^{r,b}`` variant.

    Fails of the list are reported as BOUNDARY (weakly satisfied) or
    INCONCLUSIVE; no necessity claim is made.
    """
    s1, s2, r, b1, b2, b3 = (to_fraction(v) for v in (s1, s2, r, b1, b2, b3))
    bmin, bmed, bmax = _sorted3((b1, b2, b3))
    sb = b1 + b2 + b3
    tail = positive_part(HALF - bmax) + positive_part(HALF - bmed) - bmin
    conds = [
        Condition("b1+b2+b3>1/2", sb - HALF, True),
        Condition("b1+b2>0", b1 + b2, True),
        Condition("b1+b3>0", b1 + b3, True),
        Condition("b2+b3>0", b2 + b3, True),
    ]
    for k, sk in ((1, s1), (2, s2)):
        conds.append(Condition(f"s{k}+r>=0", sk + r, False))
        conds.append(Condition(f"s{k}+r>-b_min", sk + r + bmin, True))
    conds.append(Condition("s1+s2>-b_min", s1 + s2 + bmin, True))
    conds.append(Condition("s1+s2>1/2-b1-b2-b3", s1 + s2 - (HALF - sb), True))
    for k, bk in ((1, b1), (2, b2)):
        conds.append(Condition(f"s1+s2+r>1/2-b{k}", s1 + s2 + r - (HALF - bk), True))
    conds.append(Condition("s1+s2+r>(1/2-b_max)_+ + (1/2-b_med)_+ - b_min", s1 + s2 + r - tail, True))
    if all(c.holds for c in conds):
        status = Status.SUFFICIENT_INTERIOR
    elif all(c.holds_weakly for c in conds):
        status = Status.BOUNDARY
    else:
        status = Status.INCONCLUSIVE
    return RegionVerdict(status, tuple(conds))


def necessary_margins(e: ExponentTuple) -> dict[str, Fraction]:
    """Margins of the weak necessary list; negative entries are violations."""
    return {c.id: c.margin for c in _product_conditions(e, strict=False)}


# ---------------------------------------------------------------------------
# global well-posedness region


def exact_sqrt(q: Fraction) -> Fraction | None:
    """Square root of a nonnegative rational when it is rational, else None."""
    if q < 0:
        return None
    n, d = q.numerator, q.denominator
    rn, rd = math.isqrt(n), math.isqrt(d)
    if rn * rn == n and rd * rd == d:
        return Fraction(rn, rd)
    return None


@dataclass(frozen=True)
class GWPResult:
    inside: bool
    s: Fraction
    r: Fraction
    lower_bound: float
    lower_bound_exact: Fraction | None
    upper_bound: Fraction
    working_curve: Fraction
    quadratic_margin: Fraction
    margins: dict

    @property
    def empty_at_s(self) -> bool:
        """True when the lower bound meets or exceeds the working curve ``1/2 + 2s``."""
        if self.lower_bound_exact is not None:
            return self.lower_bound_exact >= self.working_curve
        return self.lower_bound >= float(self.working_curve)

    def to_dict(self) -> dict:
        return {
            "inside": self.inside,
            "s": str(self.s),
            "r": str(self.r),
            "lower_bound": self.lower_bound,
            "lower_bound_exact": None if self.lower_bound_exact is None else str(self.lower_bound_exact),
            "upper_bound": str(self.upper_bound),
            "working_curve": str(self.working_curve),
            "empty_at_s": self.empty_at_s,
            "margins": {k: str(v) for k, v in self.margins.items()},
        }


def gwp_lower_bound(s) -> tuple[float, Fraction | None]:
    s = to_fraction(s)
    a = s - Fraction(1, 4)
    disc = a * a - s
    root = exact_sqrt(disc)
    if root is not None:
        exact = a + root
        return float(exact), exact
    if disc < 0:
        return math.nan, None
    # 50 digits is plenty for reporting; the inside test never uses it
    with localcontext() as ctx:
        ctx.prec = 50
        val = Decimal(a.numerator) / Decimal(a.denominator) + (
            Decimal(disc.numerator) / Decimal(disc.denominator)).sqrt()
    return float(val), None


def gwp_region_check(s, r) -> GWPResult:
    """Membership in ``-1/6 < s < 0``, ``L(s) < r <= s + 1``.

    ``r > L(s)`` is decided without square roots: it holds iff
    ``r > s - 1/4`` and ``2r^2 + (1 - 4s) r + 2s > 0``.
    """
    s, r = to_fraction(s), to_fraction(r)
    quad = 2 * r * r + (1 - 4 * s) * r + 2 * s
    above_lower = (r - s + Fraction(1, 4) > 0) and quad > 0
    upper = s + 1
    margins = {
        "s+1/6": s + Fraction(1, 6),
        "-s": -s,
        "s+1-r": upper - r,
        "r-s+1/4": r - s + Fraction(1, 4),
        "2r^2+(1-4s)r+2s": quad,
    }
    inside = margins["s+1/6"] > 0 and margins["-s"] > 0 and above_lower and margins["s+1-r"] >= 0
    low, low_exact = gwp_lower_bound(s)
    return GWPResult(inside, s, r, low, low_exact, upper, HALF + 2 * s, quad, margins)


# ---------------------------------------------------------------------------
# dyadic sums


def _check_dyadic(*vals):
    for v in vals:
        v = int(v)
        if v < 1 or v & (v - 1):
            raise InvalidInputError(f"{v} is not a power of two >= 1")


@dataclass(frozen=True)
class DyadicIndex:
    N1: int
    N2: int
    N3: int
    L1: int
    L2: int
    L3: int

    def __post_init__(self):
        _check_dyadic(self.N1, self.N2, self.N3, self.L1, self.L2, self.L3)


def multiplier_bound(d: DyadicIndex) -> float:
    nmin = min(d.N1, d.N2, d.N3)
    lmin = min(d.L1, d.L2, d.L3)
    return min(math.sqrt(nmin * lmin), math.sqrt(d.L1 * d.L3), math.sqrt(d.L2 * d.L3))


def _log2_int(v) -> int:
    return int(v).bit_length() - 1


def _admissible_log_terms(n_min_log, n3_log, b, cap_log):
    """log2 of every admissible weighted term plus its multiplicity weight.

    Enumerates sorted exponent triples ``p <= q <= r`` with ``r`` within one
    step of ``max(q, n3_log)``, then all orderings onto ``(L1, L2, L3)``.
    Work is quadratic in the number of levels instead of cubic.
    """
    idx = np.arange(cap_log + 1)
    P, Q = np.meshgrid(idx, idx, indexing="ij")
    keep = P <= Q
    P, Q = P[keep], Q[keep]
    ref = np.maximum(Q, n3_log)
    Ps, Qs, Rs = [], [], []
    for off in (-1, 0, 1):
        R = ref + off
        ok = (R >= Q) & (R <= cap_log)
        Ps.append(P[ok]), Qs.append(Q[ok]), Rs.append(R[ok])
    P, Q, R = np.concatenate(Ps), np.concatenate(Qs), np.concatenate(Rs)
    # orderings that land on the same (L1, L2, L3) are counted once
    mult = np.where((P == Q) & (Q == R), 6.0, np.where((P == Q) | (Q == R), 2.0, 1.0))
    b1, b2, b3 = (float(x) for x in b)
    logs, weights = [], []
    for i1, i2, i3 in ((P, Q, R), (P, R, Q), (Q, P, R), (Q, R, P), (R, P, Q), (R, Q, P)):
        mb = np.minimum((n_min_log + P) / 2.0, np.minimum((i1 + i3) / 2.0, (i2 + i3) / 2.0))
        logs.append(mb - b1 * i1 - b2 * i2 - b3 * i3)
        weights.append(1.0 / mult)
    return np.concatenate(logs), np.concatenate(weights)


def inner_sum_bruteforce(N1, N2, N3, b1, b2, b3, L_cap) -> float:
    """Sum over dyadic ``L_j <= L_cap`` with ``L_max`` within a factor 2 of ``max(L_med, N3)``.

    Each term is ``L1^-b1 L2^-b2 L3^-b3`` times :func:`multiplier_bound`.
    """
    _check_dyadic(N1, N2, N3, L_cap)
    if L_cap < N3:
        raise InvalidInputError("L_cap must be at least N3")
    logs, w = _admissible_log_terms(_log2_int(min(N1, N2, N3)), _log2_int(N3),
                                    (b1, b2, b3), _log2_int(L_cap))
    top = logs.max()
    return float(2.0**top * np.sum(w * 2.0 ** (logs - top)))


def inner_sum_bound(N1, N2, N3, b1, b2, b3, eps: float = 0.01) -> float:
    b = [float(b1), float(b2), float(b3)]
    bmin, bmed, bmax = sorted(b)
    nmin = float(min(N1, N2, N3))
    n3 = float(N3)
    sb = sum(b)
    tail = max(0.5 - bmax, 0.0) + max(0.5 - bmed, 0.0)
    terms = (n3 ** (0.5 - sb) * math.sqrt(nmin)
             + n3 ** (-b[2]) * math.sqrt(nmin)
             + n3 ** (-bmin) * nmin**tail)
    return n3**eps * terms


def dyadic_triples(N: int) -> Iterable[tuple[int, int, int]]:
    """All dyadic ``(N1, N2, N3)`` with ``N_max = N`` and ``N_med`` within a factor 2 of it."""
    out = set()
    levels = [2**k for k in range(int(math.log2(N)) + 1)]
    for n1 in levels:
        for n2 in levels:
            for n3 in levels:
                lo, med, hi = sorted((n1, n2, n3))
                if hi == N and 2 * med >= hi:
                    out.add((n1, n2, n3))
    return sorted(out)


@dataclass(frozen=True)
class OuterSumReport:
    levels: tuple
    level_sups: tuple
    level_sums: tuple
    sup: float
    argsup: int
    tail_slope: float
    trend: str

    def rows(self):
        return zip(self.levels, self.level_sups, self.level_sums)


def outer_sum_probe(e: ExponentTuple, eps: float = 0.01, N_cap: int = 2**10,
                    flat_tol: float = 0.02) -> OuterSumReport:
    """Partial-sup table of ``N1^-s1 N2^-s2 N3^-s3 * inner_sum_bound`` per level ``N``.

    Level ``N`` collects every triple with ``N_max = N`` and ``N_med`` within
    a factor 2.  The trend is the log2-slope of the per-level sup over the
    upper half of the levels: above ``flat_tol`` is "growing", below
    ``-flat_tol`` "decaying", otherwise "flat".
    """
    _check_dyadic(N_cap)
    f = e.as_floats()
    s = (f["s1"], f["s2"], f["s3"])
    b = (f["b1"], f["b2"], f["b3"])
    levels, sups, sums = [], [], []
    N = 1
    while N <= N_cap:
        vals = [n1 ** (-s[0]) * n2 ** (-s[1]) * n3 ** (-s[2]) * inner_sum_bound(n1, n2, n3, *b, eps=eps)
                for n1, n2, n3 in dyadic_triples(N)]
        levels.append(N)
        sups.append(max(vals))
        sums.append(sum(vals))
        N *= 2
    arr = np.array(sups)
    k = int(np.argmax(arr))
    half = max(2, len(levels) // 2)
    x = np.log2(levels[-half:])
    y = np.log2(arr[-half:])
    slope = float(np.polyfit(x, y, 1)[0]) if len(x) >= 2 else 0.0
    trend = "growing" if slope > flat_tol else "decaying" if slope < -flat_tol else "flat"
    return OuterSumReport(tuple(levels), tuple(sups), tuple(sums), float(arr[k]), levels[k], slope, trend)


# ---------------------------------------------------------------------------
# domination experiment


@dataclass(frozen=True)
class DominationReport:
    samples: tuple
    ratios: tuple
    max_ratio: float
    envelope_log2: tuple
    envelope: tuple
    trend_slope: float


def sample_inner_hypotheses(rng: np.random.Generator, margin: float = 0.05,
                            b_range=(-0.5, 1.5)) -> tuple[float, float, float]:
    """Rejection-sample ``b`` with pair sums and ``sum - 1/2`` both at least ``margin``."""
    while True:
        b = rng.uniform(*b_range, size=3)
        pairs = (b[0] + b[1], b[0] + b[2], b[1] + b[2])
        if min(pairs) >= margin and b.sum() - 0.5 >= margin:
            return tuple(float(x) for x in b)


def sample_frequencies(rng: np.random.Generator, max_log2: int = 12) -> tuple[int, int, int]:
    """Dyadic ``(N1, N2, N3)`` with ``N_max`` and ``N_med`` within a factor 2."""
    while True:
        k = sorted(int(v) for v in rng.integers(0, max_log2 + 1, size=3))
        if k[2] <= k[1] + 1:
            perm = rng.permutation(3)
            return tuple(2 ** k[i] for i in perm)


def domination_experiment(n_samples: int = 200, seed: int = 0, margin: float = 0.05,
                          eps: float = 0.01, cap_factor_log2: int = 256,
                          max_log2: int = 256, bins: int = 16) -> DominationReport:
    """Brute-force over closed-form ratios on seeded indices.

    ``L_cap = N3 * 2^cap_factor_log2`` so truncation is uniform in ``N3``.
    Samples are grouped into ``bins`` equal bins of ``log2 N3``; the trend
    is the log-log slope of the per-bin maximum ratio.
    """
    rng = np.random.default_rng(seed)
    samples, ratios = [], []
    for _ in range(n_samples):
        N = sample_frequencies(rng, max_log2)
        b = sample_inner_hypotheses(rng, margin)
        cap = N[2] * 2**cap_factor_log2
        ratio = inner_sum_bruteforce(*N, *b, cap) / inner_sum_bound(*N, *b, eps=eps)
        samples.append((N, b))
        ratios.append(ratio)
    width = (max_log2 + 1) / bins
    best: dict[int, tuple[float, int]] = {}
    for (N, _), rt in zip(samples, ratios):
        k3 = _log2_int(N[2])
        key = int(k3 // width)
        if key not in best or rt > best[key][0]:
            best[key] = (rt, k3)
    keys = sorted(best)
    env = [best[k][0] for k in keys]
    lx = [best[k][1] for k in keys]
    slope = (float(np.polyfit(np.array(lx) * math.log(2), np.log(env), 1)[0])
             if len(keys) >= 2 else 0.0)
    return DominationReport(tuple(samples), tuple(ratios), float(max(ratios)), tuple(lx), tuple(env), slope)
