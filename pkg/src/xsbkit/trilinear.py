"""Trilinear forms on grid fields and on sheared boxes, plus counterexample sweeps.

Two evaluation paths exist for the form ``int psi_1 psi_2 psi_3 dx dt``:

* on the physical lattice (rectangle rule), and
* as the frequency-side convolution sum
  ``(2 pi)^-1 sum_{j,k} g1(-j-k) g2(j) g3(k) dA^2`` over the periodic lattice.

For indicator data the form reduces to ``(1_A * 1_B * 1_C)(0)``, which is
evaluated exactly when all three boxes share their linear forms and by
composite Gauss-Legendre quadrature over the spatial frequencies otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .exponents import ExponentTuple
from .lattice import (
    FrequencyField,
    Grid,
    InvalidInputError,
    SpaceTimeField,
    dft_spacetime,
    idft,
)
from .norms import japanese_bracket, wave_sobolev_norm, xsb_norm


# ---------------------------------------------------------------------------
# boxes


@dataclass(frozen=True)
class ShearedBox:
    """``{(tau, xi) : |a_tau*tau + a_xi*xi - center| <= halfwidth}`` for two rows."""

    rows: tuple

    def __post_init__(self):
        rows = tuple(tuple(float(v) for v in r) for r in self.rows)
        if len(rows) != 2 or any(len(r) != 4 for r in rows):
            raise InvalidInputError("a box needs two rows (a_tau, a_xi, center, halfwidth)")
        if any(r[3] <= 0 for r in rows):
            raise InvalidInputError("halfwidths must be positive")
        object.__setattr__(self, "rows", rows)
        if abs(self.det) < 1e-14:
            raise InvalidInputError("degenerate box: linear forms are dependent")

    @classmethod
    def axis(cls, tau_center, tau_half, xi_center, xi_half) -> ShearedBox:
        return cls(((1, 0, tau_center, tau_half), (0, 1, xi_center, xi_half)))

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[r[0], r[1]] for r in self.rows])

    @property
    def centers(self) -> np.ndarray:
        return np.array([r[2] for r in self.rows])

    @property
    def halfwidths(self) -> np.ndarray:
        return np.array([r[3] for r in self.rows])

    @property
    def det(self) -> float:
        (a, b, _, _), (c, d, _, _) = self.rows
        return a * d - b * c

    @property
    def measure(self) -> float:
        h = self.halfwidths
        return float(4 * h[0] * h[1] / abs(self.det))

    @property
    def center(self) -> np.ndarray:
        """The ``(tau, xi)`` point where both forms sit at their centers."""
        return np.linalg.solve(self.matrix, self.centers)

    def vertices(self) -> np.ndarray:
        """Corners in counter-clockwise order."""
        c, h = self.centers, self.halfwidths
        corners = [(-1, -1), (1, -1), (1, 1), (-1, 1)]
        inv = np.linalg.inv(self.matrix)
        pts = np.array([inv @ (c + h * np.array(e)) for e in corners])
        if _signed_area(pts) < 0:
            pts = pts[::-1]
        return pts

    def contains(self, pts: np.ndarray, slack: float = 1e-9) -> np.ndarray:
        pts = np.atleast_2d(pts)
        vals = pts @ self.matrix.T - self.centers
        return np.all(np.abs(vals) <= self.halfwidths + slack, axis=-1)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Uniform samples, shape ``(n, 2)`` with columns ``(tau, xi)``."""
        u = rng.uniform(-1.0, 1.0, size=(n, 2))
        targets = self.centers + u * self.halfwidths
        return np.linalg.solve(self.matrix, targets.T).T

    def translated(self, shift) -> ShearedBox:
        shift = np.asarray(shift, dtype=float)
        return ShearedBox(tuple((a, b, c + a * shift[0] + b * shift[1], h)
                                for a, b, c, h in self.rows))

    def negated(self) -> ShearedBox:
        """The box ``-self``."""
        return ShearedBox(tuple((a, b, -c, h) for a, b, c, h in self.rows))

    def reflect_tau(self) -> ShearedBox:
        return ShearedBox(tuple((-a, b, c, h) for a, b, c, h in self.rows))

    def xi_range(self) -> tuple[float, float]:
        v = self.vertices()
        return float(v[:, 1].min()), float(v[:, 1].max())

    def tau_section(self, xi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Interval ``[lo, hi]`` of ``tau`` with ``(tau, xi)`` in the box; empty where lo > hi."""
        xi = np.asarray(xi, dtype=float)
        lo = np.full(xi.shape, -np.inf)
        hi = np.full(xi.shape, np.inf)
        for a, b, c, h in self.rows:
            if a == 0:
                bad = np.abs(b * xi - c) > h
                lo = np.where(bad, np.inf, lo)
                hi = np.where(bad, -np.inf, hi)
                continue
            e1 = (c - h - b * xi) / a
            e2 = (c + h - b * xi) / a
            lo = np.maximum(lo, np.minimum(e1, e2))
            hi = np.minimum(hi, np.maximum(e1, e2))
        return lo, hi

    def halfplanes(self) -> list[tuple[float, float, float]]:
        """Constraints ``n . p <= c`` describing the box."""
        out = []
        for a, b, c, h in self.rows:
            out.append((a, b, c + h))
            out.append((-a, -b, -(c - h)))
        return out


def _signed_area(pts: np.ndarray) -> float:
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _clip(poly: list, nx: float, ny: float, c: float) -> list:
    out = []
    m = len(poly)
    for i in range(m):
        p, q = poly[i], poly[(i + 1) % m]
        fp = nx * p[0] + ny * p[1] - c
        fq = nx * q[0] + ny * q[1] - c
        if fp <= 0:
            out.append(p)
        if (fp < 0 < fq) or (fq < 0 < fp):
            t = fp / (fp - fq)
            out.append((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
    return out


def intersection_area(A: ShearedBox, B: ShearedBox) -> float:
    poly = [tuple(v) for v in A.vertices()]
    for nx, ny, c in B.halfplanes():
        poly = _clip(poly, nx, ny, c)
        if len(poly) < 3:
            return 0.0
    return abs(_signed_area(np.array(poly)))


def overlap_halfmeasure(A: ShearedBox, B: ShearedBox, shift) -> float:
    """``|{p in A : shift - p in B}|^(1/2)``."""
    reflected = B.negated().translated(shift)
    return math.sqrt(intersection_area(A, reflected))


# ---------------------------------------------------------------------------
# box trilinear integral


def triple_interval_convolution(lo1, hi1, lo2, hi2, lo3, hi3):
    """``(1_I1 * 1_I2 * 1_I3)(0)`` for intervals, vectorized.

    Writes each indicator as a difference of Heavisides; the triple
    convolution of Heavisides is ``z_+^2 / 2``.
    """
    ends = [(np.asarray(lo1, float), np.asarray(hi1, float)),
            (np.asarray(lo2, float), np.asarray(hi2, float)),
            (np.asarray(lo3, float), np.asarray(hi3, float))]
    empty = np.zeros(np.broadcast(*[e for pair in ends for e in pair]).shape, dtype=bool)
    for lo, hi in ends:
        empty = empty | ~(lo < hi)
    # clamp empty intervals so the corner sum stays finite
    safe = [(np.where(empty, 0.0, lo), np.where(empty, 0.0, hi)) for lo, hi in ends]
    total = np.zeros(empty.shape)
    for c1 in (0, 1):
        for c2 in (0, 1):
            for c3 in (0, 1):
                e = safe[0][c1] + safe[1][c2] + safe[2][c3]
                sign = -1.0 if (c1 + c2 + c3) % 2 else 1.0
                total = total + sign * 0.5 * np.maximum(-e, 0.0) ** 2
    return np.where(empty, 0.0, np.maximum(total, 0.0))


def _normalized_rows(box: ShearedBox):
    out = []
    for a, b, c, h in box.rows:
        n = math.hypot(a, b)
        a, b, c, h = a / n, b / n, c / n, h / n
        if a < 0 or (a == 0 and b < 0):
            a, b, c = -a, -b, -c
        out.append((a, b, c, h))
    return out


def _shared_forms(boxes: Sequence[ShearedBox], tol=1e-12):
    """Rows of every box reordered against a common 2x2 form, or None."""
    ref = _normalized_rows(boxes[0])
    aligned = [ref]
    for box in boxes[1:]:
        rows = _normalized_rows(box)
        matched = []
        for ra in ref:
            hit = [r for r in rows if abs(r[0] - ra[0]) < tol and abs(r[1] - ra[1]) < tol]
            if not hit:
                return None
            matched.append(hit[0])
        aligned.append(matched)
    return aligned


def _gauss_panels(lo: float, hi: float, panels: int, order: int = 5):
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _box_integral_quadrature(A, B, C, panels: int) -> float:
    bl, bh = B.xi_range()
    cl, ch = C.xi_range()
    xb, wb = _gauss_panels(bl, bh, panels)
    xc, wc = _gauss_panels(cl, ch, panels)
    XB, XC = np.meshgrid(xb, xc, indexing="ij")
    loA, hiA = A.tau_section(-XB - XC)
    loB, hiB = B.tau_section(XB)
    loC, hiC = C.tau_section(XC)
    vals = triple_interval_convolution(loA, hiA, loB, hiB, loC, hiC)
    return float(wb @ vals @ wc)


def trilinear_integral_boxes(A: ShearedBox, B: ShearedBox, C: ShearedBox,
                             rtol: float = 1e-10, max_panels: int = 1024) -> float:
    """``int int 1_B(p) 1_C(q) 1_A(-p-q) dp dq``."""
    aligned = _shared_forms([A, B, C])
    if aligned is not None:
        forms = np.array([[r[0], r[1]] for r in aligned[0]])
        det = abs(np.linalg.det(forms))
        value = 1.0
        for axis in range(2):
            ivs = [(r[axis][2] - r[axis][3], r[axis][2] + r[axis][3]) for r in aligned]
            (la, ha), (lb, hb), (lc, hc) = ivs
            # -p-q in A  <=>  the A-interval reflected; keep the convolution at 0
            value *= float(triple_interval_convolution(la, ha, lb, hb, lc, hc))
        return value / det**2
    panels = 32
    prev = _box_integral_quadrature(A, B, C, panels)
    while panels < max_panels:
        panels *= 2
        cur = _box_integral_quadrature(A, B, C, panels)
        if abs(cur - prev) <= rtol * max(abs(cur), 1e-300):
            return cur
        prev = cur
    return prev


# ---------------------------------------------------------------------------
# multiplier and counterexample families


def multiplier_weight(tau, xi, e: ExponentTuple, tol: float = 1e-9) -> float:
    """The symbol ``prod <xi_j>^{-s_j} / prod <tau_j +- xi_j>^{b_j}`` on the surface."""
    tau = np.asarray(tau, dtype=float)
    xi = np.asarray(xi, dtype=float)
    scale = max(1.0, float(np.abs(tau).max()), float(np.abs(xi).max()))
    if abs(tau.sum()) > tol * scale or abs(xi.sum()) > tol * scale:
        raise InvalidInputError("point is off the surface tau1+tau2+tau3 = xi1+xi2+xi3 = 0")
    f = e.as_floats()
    sgn = e.sign_values
    s = (f["s1"], f["s2"], f["s3"])
    b = (f["b1"], f["b2"], f["b3"])
    val = 1.0
    for j in range(3):
        val *= japanese_bracket(xi[j]) ** (-s[j])
        val /= japanese_bracket(tau[j] + sgn[j] * xi[j]) ** b[j]
    return float(val)


def _multiplier_on_samples(p2: np.ndarray, p3: np.ndarray, e: ExponentTuple) -> np.ndarray:
    p1 = -(p2 + p3)
    f = e.as_floats()
    sgn = e.sign_values
    s = (f["s1"], f["s2"], f["s3"])
    b = (f["b1"], f["b2"], f["b3"])
    logm = np.zeros(len(p2))
    for j, p in enumerate((p1, p2, p3)):
        logm -= s[j] * np.log(japanese_bracket(p[:, 1]))
        logm -= b[j] * np.log(japanese_bracket(p[:, 0] + sgn[j] * p[:, 1]))
    return np.exp(logm)


@dataclass(frozen=True)
class CounterexampleFamily:
    """A lambda-indexed triple of boxes witnessing one necessary condition.

    ``generator`` returns ``(A, B, C)`` for the sign pattern ``(+,+,-)``; the
    other pattern is obtained by reflecting ``tau``.  The necessary condition
    reads ``delta + (d1 - d2 - d3)/2 >= 0``.
    """

    id: str
    condition: str
    generator: Callable = field(repr=False)
    d: tuple
    delta_formula: Callable = field(repr=False)

    def boxes(self, lam: float, signs=("+", "+", "-")):
        A, B, C = self.generator(float(lam))
        if tuple(signs) == ("-", "-", "+"):
            A, B, C = A.reflect_tau(), B.reflect_tau(), C.reflect_tau()
        return A, B, C

    def delta(self, e: ExponentTuple) -> Fraction:
        return self.delta_formula(e)

    def margin(self, e: ExponentTuple) -> Fraction:
        """Left side of the necessary condition; negative means violated."""
        d1, d2, d3 = self.d
        return self.delta(e) + Fraction(d1 - d2 - d3, 2)

    def predicted_slope(self, e: ExponentTuple) -> float:
        return float(-self.margin(e))


_ax = ShearedBox.axis


def _sheared(first, second) -> ShearedBox:
    return ShearedBox((first, second))


def _families() -> dict:
    F = CounterexampleFamily
    fams = [
        F("b1b2", "b1+b2 >= 0",
          lambda L: (_ax(L, 2, 0, 2), _ax(-L, 1, 0, 1), _ax(0, 1, 0, 1)),
          (0, 0, 0), lambda e: e.b1 + e.b2),
        F("b1b3", "b1+b3 >= 0",
          lambda L: (_ax(L, 2, 0, 2), _ax(0, 1, 0, 1), _ax(-L, 1, 0, 1)),
          (0, 0, 0), lambda e: e.b1 + e.b3),
        F("bsum", "b1+b2+b3 >= 1/2",
          lambda L: (_ax(-4 * L, 2 * L, 0, 2), _ax(2 * L, L, 0, 1), _ax(2 * L, L, 0, 1)),
          (1, 1, 1), lambda e: e.b1 + e.b2 + e.b3),
        F("s1s2", "s1+s2 >= 0",
          lambda L: (_ax(-L, 2, L, 2), _ax(L, 1, -L, 1), _ax(0, 1, 0, 1)),
          (0, 0, 0), lambda e: e.s1 + e.s2),
        F("s1s3_bmin1", "s1+s3 >= -b_min (b_min = b1)",
          lambda L: (_ax(-L, 2, -L, 2), _ax(0, 1, 0, 1), _ax(L, 1, L, 1)),
          (0, 0, 0), lambda e: e.s1 + e.s3 + e.b1),
        F("s1s3_bmin2", "s1+s3 >= -b_min (b_min = b2)",
          lambda L: (_ax(L, 2, -L, 2), _ax(-2 * L, 1, 0, 1), _ax(L, 1, L, 1)),
          (0, 0, 0), lambda e: e.s1 + e.s3 + e.b2),
        F("s1s3_bmin3", "s1+s3 >= -b_min (b_min = b3)",
          lambda L: (_ax(-L, 2, L, 2), _ax(0, 1, 0, 1), _ax(L, 1, -L, 1)),
          (0, 0, 0), lambda e: e.s1 + e.s3 + e.b3),
        F("s1s3_bsum", "s1+s3 >= 1/2 - b1 - b2 - b3",
          lambda L: (_ax(-L, L / 2, -L, L / 2), _ax(L, L / 4, 0, 1), _ax(0, L / 4, L, L / 4)),
          (2, 1, 2), lambda e: e.s1 + e.s3 + e.b1 + e.b2 + e.b3),
        F("ssum_b3", "s1+s2+s3 >= 1/2 - b3",
          lambda L: (_sheared((1, 1, 0, 2), (0, 1, -2 * L, L / 2)),
                     _sheared((1, 1, 0, 1), (0, 1, L, L / 4)),
                     _sheared((1, 1, 0, 1), (0, 1, L, L / 4))),
          (1, 1, 1), lambda e: e.s1 + e.s2 + e.s3 + e.b3),
        F("ssum_bsum", "s1+s2+s3 >= 1 - b1 - b2 - b3",
          lambda L: (_ax(0, L / 2, -2 * L, L / 2), _ax(0, L / 4, L, L / 4), _ax(0, L / 4, L, L / 4)),
          (2, 2, 2), lambda e: e.s1 + e.s2 + e.s3 + e.b1 + e.b2 + e.b3),
        F("ssum_b1b2", "s1+s2+s3 >= 1/2 - b1 - b2",
          lambda L: (_sheared((1, 1, -3 * L, L), (0, 1, -2 * L, L / 2)),
                     _sheared((1, 1, L, L / 4), (0, 1, L, L / 4)),
                     _sheared((1, -1, 0, 1), (0, 1, L, L / 4))),
          (2, 2, 1), lambda e: e.s1 + e.s2 + e.s3 + e.b1 + e.b2),
        F("ssum_b1b3", "s1+s2+s3 >= 1/2 - b1 - b3",
          lambda L: (_sheared((1, 1, -L, 3 * L / 4), (0, 1, -2 * L, L / 2)),
                     _sheared((1, 1, 0, 1), (0, 1, L, L / 4)),
                     _ax(0, L / 4, L, L / 4)),
          (2, 1, 2), lambda e: e.s1 + e.s2 + e.s3 + e.b1 + e.b3),
    ]
    return {f.id: f for f in fams}


FAMILIES = _families()


def select_bmin_family(e: ExponentTuple) -> tuple[CounterexampleFamily, str | None]:
    """Pick the ``s1+s3 >= -b_min`` construction for ``e``.

    Ties go to the lowest index; the returned note records the tie.
    """
    b = e.b
    lowest = min(b)
    idx = [i for i in range(3) if b[i] == lowest]
    note = None
    if len(idx) > 1:
        note = "b_min tie between " + ", ".join(f"b{i + 1}" for i in idx) + f"; used b{idx[0] + 1}"
    return FAMILIES[f"s1s3_bmin{idx[0] + 1}"], note


def check_sum_containment(fam: CounterexampleFamily, lam: float, n: int = 10_000,
                          seed: int = 0, signs=("+", "+", "-")) -> int:
    """Monte Carlo count of pairs ``(p, q) in B x C`` with ``-(p+q)`` outside ``A``."""
    A, B, C = fam.boxes(lam, signs)
    rng = np.random.default_rng(seed)
    p = B.sample(rng, n)
    q = C.sample(rng, n)
    return int(np.count_nonzero(~A.contains(-(p + q))))


def multiplier_spread(fam: CounterexampleFamily, lam: float, e: ExponentTuple,
                      n: int = 4000, seed: int = 0) -> tuple[float, float]:
    """Min and max of ``m * lam^delta`` over sampled ``(p, q) in B x C``."""
    A, B, C = fam.boxes(lam, e.signs)
    rng = np.random.default_rng(seed)
    m = _multiplier_on_samples(B.sample(rng, n), C.sample(rng, n), e)
    scaled = m * lam ** float(fam.delta(e))
    return float(scaled.min()), float(scaled.max())


@dataclass(frozen=True)
class SlopeReport:
    family: str
    lambdas: tuple
    ratios: tuple
    fitted_slope: float
    predicted_slope: float
    note: str | None = None

    def rows(self):
        for lam, r in zip(self.lambdas, self.ratios):
            yield lam, r, math.log(r)


def geometric_lambdas(lo: float, hi: float, factor: float = 2.0) -> list[float]:
    out = []
    lam = float(lo)
    while lam <= hi * (1 + 1e-12):
        out.append(lam)
        lam *= factor
    return out


def _check_lambdas(lams: Sequence[float]):
    lams = [float(x) for x in lams]
    if len(lams) < 6:
        raise InvalidInputError("need at least 6 lambda values")
    if min(lams) < 8:
        raise InvalidInputError("lambda values must be >= 8")
    q = [b / a for a, b in zip(lams, lams[1:])]
    if any(r <= 1 for r in q) or max(q) - min(q) > 1e-9 * max(q):
        raise InvalidInputError("lambda list must be increasing and geometrically spaced")
    return lams


def center_multiplier(fam: CounterexampleFamily, lam: float, e: ExponentTuple) -> float:
    A, B, C = fam.boxes(lam, e.signs)
    p2, p3 = B.center, C.center
    p1 = -(p2 + p3)
    return multiplier_weight([p1[0], p2[0], p3[0]], [p1[1], p2[1], p3[1]], e)


def counterexample_sweep(fam: CounterexampleFamily, e: ExponentTuple,
                         lambdas: Sequence[float], note: str | None = None) -> SlopeReport:
    """Scaling of ``m * T(A,B,C) / sqrt(|A||B||C|)`` in ``lambda``.

    ``m`` is the symbol at the box centers and ``T`` the box trilinear
    integral.  The first point is dropped from the fit.
    """
    lams = _check_lambdas(lambdas)
    ratios = []
    for lam in lams:
        A, B, C = fam.boxes(lam, e.signs)
        overlap = trilinear_integral_boxes(A, B, C)
        vol = math.sqrt(A.measure * B.measure * C.measure)
        ratios.append(center_multiplier(fam, lam, e) * overlap / vol)
    slope = float(np.polyfit(np.log(lams[1:]), np.log(ratios[1:]), 1)[0])
    return SlopeReport(fam.id, tuple(lams), tuple(ratios), slope, fam.predicted_slope(e), note)


# ---------------------------------------------------------------------------
# grid fields


def trilinear_integral_fields(f1: SpaceTimeField, f2: SpaceTimeField, f3: SpaceTimeField) -> complex:
    if not (f1.grid == f2.grid == f3.grid):
        raise InvalidInputError("fields live on different grids")
    g = f1.grid
    return complex(np.sum(f1.values * f2.values * f3.values) * g.dx * g.dt)


def trilinear_integral_fourier(g1: FrequencyField, g2: FrequencyField, g3: FrequencyField) -> complex:
    """Frequency-side double sum ``(2 pi)^-1 sum_{j,k} g1(-j-k) g2(j) g3(k) dA^2``.

    Indices wrap periodically, matching the aliasing of the lattice product.
    """
    if not (g1.grid == g2.grid == g3.grid):
        raise InvalidInputError("fields live on different grids")
    grid = g1.grid
    c1 = np.fft.ifftshift(g1.coefficients)
    c2 = np.fft.ifftshift(g2.coefficients)
    c3 = np.fft.ifftshift(g3.coefficients)
    nt, nx = grid.shape
    # reflected[k] = c1[-k]
    reflected = c1[(-np.arange(nt)) % nt][:, (-np.arange(nx)) % nx]
    total = 0j
    for jt in range(nt):
        rolled_t = np.roll(reflected, -jt, axis=0)
        for jx in range(nx):
            if c2[jt, jx] == 0:
                continue
            total += c2[jt, jx] * np.sum(np.roll(rolled_t, -jx, axis=1) * c3)
    return complex(total * grid.cell_area**2 / (2 * np.pi))


def _norm_triple(fs, e: ExponentTuple):
    f = e.as_floats()
    s = (f["s1"], f["s2"], f["s3"])
    b = (f["b1"], f["b2"], f["b3"])
    return [xsb_norm(dft_spacetime(fs[j]), s[j], b[j], e.signs[j]) for j in range(3)]


def _safe_ratio(integral: complex, norms) -> float:
    denom = float(np.prod(norms))
    if denom == 0:
        if abs(integral) == 0:
            return 0.0
        raise InvalidInputError("a norm vanishes while the trilinear integral does not")
    return abs(integral) / denom


def estimate_ratio(f1, f2, f3, e: ExponentTuple) -> float:
    """``|int f1 f2 f3| / (||f1|| ||f2|| ||f3||)`` in the three Bourgain norms of ``e``."""
    return _safe_ratio(trilinear_integral_fields(f1, f2, f3), _norm_triple((f1, f2, f3), e))


def mixed_ratio(f1, f2, f3, s1, s2, r, b1, b2, b3) -> float:
    """As :func:`estimate_ratio` with ``X_+ x X_- x H^{r,b3}`` on the right."""
    norms = [
        xsb_norm(dft_spacetime(f1), float(s1), float(b1), "+"),
        xsb_norm(dft_spacetime(f2), float(s2), float(b2), "-"),
        wave_sobolev_norm(dft_spacetime(f3), float(r), float(b3)),
    ]
    return _safe_ratio(trilinear_integral_fields(f1, f2, f3), norms)


def box_field(box: ShearedBox, grid: Grid) -> SpaceTimeField:
    """Field whose lattice spectrum is the box indicator smoothed over one cell."""
    tau, xi = grid.frequency_mesh()
    pts = np.stack([tau.ravel(), xi.ravel()], axis=1)
    ind = box.contains(pts, slack=0.0).reshape(grid.shape).astype(float)
    kernel = np.array([0.25, 0.5, 0.25])
    sm = ind
    for axis in (0, 1):
        sm = (kernel[0] * np.roll(sm, 1, axis=axis) + kernel[1] * sm
              + kernel[2] * np.roll(sm, -1, axis=axis))
    return idft(FrequencyField(grid, sm.astype(complex)))
