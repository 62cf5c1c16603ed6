"""Canned acceptance checks shared by the ``reproduce`` subcommand and the test suite.

Each check runs a fixed configuration, compares against its tolerance and
returns a :class:`CriterionResult`; nothing here raises on failure.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .dkg_solver import SolverConfig, charge, charge_observer, convergence_order, evolve, initial_data
from .dyadic_region import Status, domination_experiment, gwp_region_check, thm11_check
from .exponents import ExponentTuple
from .imethod import (
    Mollifier,
    almost_conservation_experiment,
    commutator,
    commutator_kernel_sum,
    sandwich_probe,
)
from .lattice import Grid, dft_spacetime, random_field, random_spatial
from .trilinear import FAMILIES, counterexample_sweep, geometric_lambdas, trilinear_integral_fields, trilinear_integral_fourier


@dataclass
class CriterionResult:
    id: str
    passed: bool
    summary: str
    runtime: float = 0.0
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.id}: {self.summary} ({self.runtime:.3g} s)"


F = Fraction


def _timed(fn: Callable[[], tuple]) -> tuple:
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def gwp_corner() -> CriterionResult:
    res, dt = _timed(lambda: gwp_region_check(F(-1, 6), F(1, 6)))
    ok = (res.lower_bound_exact == F(1, 6) and res.working_curve == F(1, 6)
          and res.empty_at_s and not res.inside and dt < 1e-3)
    return CriterionResult("gwp-corner", ok,
                           f"lower bound {res.lower_bound_exact}, working curve {res.working_curve}",
                           dt, res.to_dict())


def region_boundary() -> CriterionResult:
    e = ExponentTuple(0, 0, 0, 0, F(11, 20), F(11, 20))
    res, dt = _timed(lambda: thm11_check(e))
    ok = res.status is Status.BOUNDARY and dt < 1e-3
    return CriterionResult("region-boundary", ok, f"status {res.status.value}", dt, res.to_dict())


# One tuple per family, each violating the family's condition by exactly 3/10.
VIOLATING_TUPLES = {
    "b1b2": ((0, 0, 0), (F(-3, 20), F(-3, 20), 1)),
    "b1b3": ((0, 0, 0), (F(-3, 20), 1, F(-3, 20))),
    "bsum": ((0, 0, 0), (F(1, 10), F(1, 20), F(1, 20))),
    "s1s2": ((F(-3, 20), F(-3, 20), 0), (F(1, 2), F(1, 2), F(1, 2))),
    "s1s3_bmin1": ((F(-1, 5), 0, F(-1, 5)), (F(1, 10), F(3, 5), F(3, 5))),
    "s1s3_bmin2": ((F(-1, 5), 0, F(-1, 5)), (F(3, 5), F(1, 10), F(3, 5))),
    "s1s3_bmin3": ((F(-1, 5), 0, F(-1, 5)), (F(3, 5), F(3, 5), F(1, 10))),
    "s1s3_bsum": ((F(-1, 5), 0, F(-1, 5)), (F(1, 5), F(1, 5), F(1, 5))),
    "ssum_b3": ((F(-1, 10), F(-1, 10), F(-1, 10)), (F(1, 2), F(1, 2), F(1, 2))),
    "ssum_bsum": ((F(-1, 10), F(-1, 10), 0), (F(3, 10), F(3, 10), F(3, 10))),
    "ssum_b1b2": ((F(-1, 5), F(-1, 5), 0), (F(3, 10), F(3, 10), F(3, 5))),
    "ssum_b1b3": ((F(-1, 5), F(-1, 5), 0), (F(3, 10), F(3, 5), F(3, 10))),
}


def counterexamples() -> CriterionResult:
    lams = geometric_lambdas(2**4, 2**12)
    t0 = time.perf_counter()
    rows = {}
    ok = True
    for fid, (s, b) in VIOLATING_TUPLES.items():
        fam = FAMILIES[fid]
        e = ExponentTuple.from_lists(s, b)
        if fam.margin(e) != F(-3, 10):
            ok = False
        rep = counterexample_sweep(fam, e, lams)
        good = abs(rep.fitted_slope - rep.predicted_slope) <= 0.1
        ok &= good
        rows[fid] = {"fitted": rep.fitted_slope, "predicted": rep.predicted_slope, "ok": good}
    dt = time.perf_counter() - t0
    ok &= dt < 10
    worst = max(abs(r["fitted"] - r["predicted"]) for r in rows.values())
    return CriterionResult("counterexamples", ok,
                           f"{len(rows)} families, worst slope error {worst:.2e}", dt, rows)


def dyadic_domination() -> CriterionResult:
    rep, dt = _timed(lambda: domination_experiment(200, seed=0, margin=0.05))
    ok = math.isfinite(rep.max_ratio) and abs(rep.trend_slope) <= 0.1 and dt < 60
    return CriterionResult("dyadic-domination", ok,
                           f"max ratio {rep.max_ratio:.4g}, envelope slope {rep.trend_slope:+.4f}",
                           dt, {"max_ratio": rep.max_ratio, "trend_slope": rep.trend_slope,
                                "envelope_log2": list(rep.envelope_log2), "envelope": list(rep.envelope)})


def charge_conservation() -> CriterionResult:
    grid = Grid(512, 1, 2 * math.pi)
    st = initial_data(11, 0.0, 0.5, 0.2, 0.2, grid)
    cfg = SolverConfig(1.0, 1.0, grid, 1e-3)
    tr, dt = _timed(lambda: evolve(st, cfg, 10.0, [charge_observer(grid)], stride=100, keep_states=False))
    c = np.array(tr.column("charge"))
    drift = float(np.max(np.abs(c / c[0] - 1)))
    ok = drift < 1e-6 and dt < 60
    return CriterionResult("charge", ok, f"max relative drift {drift:.3e}", dt,
                           {"drift": drift, "charge0": float(c[0])})


def parseval() -> CriterionResult:
    grid = Grid(64, 64)
    t0 = time.perf_counter()
    worst = 0.0
    for k in range(50):
        fs = [random_field(1000 * k + j, 0.0, grid, 1.0) for j in range(3)]
        phys = trilinear_integral_fields(*fs)
        four = trilinear_integral_fourier(*[dft_spacetime(f) for f in fs])
        worst = max(worst, abs(phys - four) / max(abs(four), 1e-300))
    dt = time.perf_counter() - t0
    ok = worst < 1e-9 and dt < 30
    return CriterionResult("parseval", ok, f"worst relative gap {worst:.2e} over 50 triples", dt,
                           {"worst": worst})


SANDWICH_NS = (8, 16, 32, 64, 128, 256)


def sandwich_ensemble(n_fields=100, sigma=0.0, s=-0.3, spread=1.5, x_points=4096, seed=0):
    rng = np.random.default_rng(seed)
    regs = sigma + rng.uniform(-spread, spread, size=n_fields)
    fields = [random_spatial(seed * 10_000 + i, float(regs[i]), x_points, 2 * math.pi, 1.0)
              for i in range(n_fields)]
    lows, highs = [], []
    for N in SANDWICH_NS:
        mol = Mollifier(N, s)
        r = np.array([sandwich_probe(f, mol, sigma) for f in fields])
        lows.append(r[:, 0].max())
        highs.append(r[:, 1].max())
    logN = np.log(SANDWICH_NS)
    return (np.array(lows), np.array(highs),
            float(np.polyfit(logN, np.log(lows), 1)[0]), float(np.polyfit(logN, np.log(highs), 1)[0]))


def sandwich() -> CriterionResult:
    (lows, highs, sl, sh), dt = _timed(sandwich_ensemble)
    ok = abs(sl) <= 0.05 and abs(sh) <= 0.05 and dt < 30
    return CriterionResult("sandwich", ok, f"max-ratio slopes {sl:+.4f} (lower), {sh:+.4f} (upper)", dt,
                           {"low_max": lows.tolist(), "high_max": highs.tolist(),
                            "low_slope": sl, "high_slope": sh})


def commutator_equivalence() -> CriterionResult:
    n = 64
    mol = Mollifier(8, -0.3)
    t0 = time.perf_counter()
    worst = 0.0
    for k in range(20):
        rng = np.random.default_rng(500 + k)
        phi = rng.standard_normal(n)
        u = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        a = commutator(phi, u, mol)
        b = commutator_kernel_sum(phi, u, mol)
        worst = max(worst, float(np.max(np.abs(a - b)) / np.max(np.abs(b))))
    # both factors below N/2, so every interaction stays below N
    rng = np.random.default_rng(99)
    kk = np.fft.fftfreq(n, d=1.0 / n)
    low = np.abs(kk) < mol.N / 2
    lowlow = 0.0
    for _ in range(20):
        P = np.where(low, rng.standard_normal(n) + 1j * rng.standard_normal(n), 0)
        U = np.where(low, rng.standard_normal(n) + 1j * rng.standard_normal(n), 0)
        phi, u = np.fft.ifft(P), np.fft.ifft(U)
        q = commutator(phi, u, mol)
        lowlow = max(lowlow, float(np.max(np.abs(q)) / (np.max(np.abs(phi)) * np.max(np.abs(u)))))
    dt = time.perf_counter() - t0
    ok = worst < 1e-9 and lowlow <= 1e-14 and dt < 30
    return CriterionResult("commutator", ok,
                           f"kernel gap {worst:.2e}, low-low residue {lowlow:.2e}", dt,
                           {"kernel_gap": worst, "low_low_residue": lowlow})


def almost_conservation() -> CriterionResult:
    rep, dt = _timed(lambda: almost_conservation_experiment(0, -0.1, 0.5, 0.01, [16, 32, 64, 128], n_seeds=8))
    slope = rep.fitted_slope
    ok = (rep.strictly_decreasing and slope is not None
          and slope <= rep.reference_slope + 0.3 and dt < 300)
    per_seed = rep.per_seed_decreasing()
    return CriterionResult(
        "almost-conservation", ok,
        f"mean growth {'strictly decreasing' if rep.strictly_decreasing else 'NOT decreasing'}, "
        f"slope {slope if slope is None else round(slope, 4)} vs reference {rep.reference_slope:.4f}; "
        f"{sum(per_seed)}/{len(per_seed)} single seeds monotone",
        dt,
        {"rows": [row.__dict__ for row in rep.rows], "fitted_slope": slope,
         "reference_slope": rep.reference_slope, "per_seed_decreasing": per_seed})


def solver_convergence() -> CriterionResult:
    grid = Grid(128, 1, 2 * math.pi)
    st = initial_data(3, 2.0, 2.0, 0.1, 0.1, grid)
    cfg = SolverConfig(1.0, 1.0, grid, 0.02)
    (p, diffs), dt = _timed(lambda: convergence_order(st, cfg, 1.0))
    ok = abs(p - 2) <= 0.3 and dt < 60
    return CriterionResult("convergence", ok, f"Strang order {p:.3f}", dt, {"order": p, "diffs": diffs})


CRITERIA: dict[str, Callable[[], CriterionResult]] = {
    "gwp-corner": gwp_corner,
    "region-boundary": region_boundary,
    "counterexamples": counterexamples,
    "dyadic-domination": dyadic_domination,
    "charge": charge_conservation,
    "parseval": parseval,
    "sandwich": sandwich,
    "commutator": commutator_equivalence,
    "almost-conservation": almost_conservation,
    "convergence": solver_convergence,
}


def run(criterion_id: str) -> CriterionResult:
    return CRITERIA[criterion_id]()
