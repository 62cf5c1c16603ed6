"""Fourier-truncation operator ``I``, its product commutator and mollified-charge growth.

``I`` multiplies the spatial Fourier transform by ``rho(xi) = rho0(|xi|/N)``
where ``rho0 = 1`` below 1 and ``|xi|^s`` above 2 (``s < 0``).  On the band
``1 <= u <= 2`` we interpolate ``log rho0`` as ``s*log(2)*q(log2 u)`` with
``q(v) = 6v^3 - 8v^4 + 3v^5``, which matches value, slope and curvature of
both sides and is monotone because ``q' = v^2 (18 - 32v + 15v^2) > 0``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dkg_solver import SolverConfig, Trajectory, evolve, initial_data
from .lattice import Grid, InvalidInputError, SpaceTimeField
from .norms import DomainError

NOISE_FLOOR = 1e-12


def _transition(v):
    return v**3 * (6.0 - 8.0 * v + 3.0 * v**2)


@dataclass(frozen=True)
class Mollifier:
    N: float
    s: float

    def __post_init__(self):
        if not self.N > 0:
            raise InvalidInputError("N must be positive")
        if not self.s < 0:
            raise DomainError("the mollifier needs s < 0")

    def rho0(self, u) -> np.ndarray:
        u = np.abs(np.asarray(u, dtype=float))
        out = np.ones_like(u)
        band = (u >= 1) & (u <= 2)
        v = np.log2(u[band])
        out[band] = np.exp(self.s * math.log(2.0) * _transition(v))
        tail = u > 2
        out[tail] = u[tail] ** self.s
        return out

    def rho(self, xi) -> np.ndarray:
        return self.rho0(np.abs(np.asarray(xi, dtype=float)) / self.N)


def _fft_freqs(n: int, x_length: float) -> np.ndarray:
    """Angular frequencies in raw FFT order."""
    return 2 * np.pi * np.fft.fftfreq(n, d=x_length / n)


def _apply_multiplier(values: np.ndarray, mult: np.ndarray) -> np.ndarray:
    out = np.fft.ifft(np.fft.fft(values, axis=-1) * mult, axis=-1)
    return out.real if not np.iscomplexobj(values) else out


def apply_I(f, mol: Mollifier, k: int = 1, x_length: float = 2 * np.pi):
    """``I^k f`` on the spatial variable; arrays use the trailing axis."""
    if int(k) != k or k < 1:
        raise InvalidInputError("power k must be a positive integer")
    if isinstance(f, SpaceTimeField):
        g = f.grid
        mult = mol.rho(_fft_freqs(g.x_points, g.x_length)) ** k
        return SpaceTimeField(g, _apply_multiplier(f.values, mult))
    f = np.asarray(f)
    mult = mol.rho(_fft_freqs(f.shape[-1], x_length)) ** k
    return _apply_multiplier(f, mult)


def _hs_norm(f: np.ndarray, sigma: float, x_length: float) -> float:
    """Sobolev norm under the unitary convention (``dx/sqrt(2 pi)`` scaling)."""
    n = f.shape[-1]
    dx = x_length / n
    c = np.fft.fft(f, axis=-1) * (dx / math.sqrt(2 * math.pi))
    xi = _fft_freqs(n, x_length)
    return float(math.sqrt(np.sum((1 + xi**2) ** sigma * np.abs(c) ** 2) * (2 * math.pi / x_length)))


def sandwich_probe(f: np.ndarray, mol: Mollifier, sigma: float,
                   x_length: float = 2 * np.pi) -> tuple[float, float]:
    """``(|f|_{H^sigma} / |If|_{H^{sigma-s}}, |If|_{H^{sigma-s}} / (N^-s |f|_{H^sigma}))``."""
    f = np.asarray(f)
    nf = _hs_norm(f, sigma, x_length)
    nIf = _hs_norm(apply_I(f, mol, 1, x_length), sigma - mol.s, x_length)
    if nf == 0:
        raise InvalidInputError("probe needs a nonzero field")
    return nf / nIf, nIf / (mol.N ** (-mol.s) * nf)


def trade_probe(g: np.ndarray, mol: Mollifier, s1: float, s2: float,
                x_length: float = 2 * np.pi, support_factor: float = 0.5) -> float:
    """``|g|_{H^s1} / (N^{s1-s2+s} |Ig|_{H^{s2-s}})`` for high-frequency ``g``.

    Every coefficient above roundoff must sit at ``|xi| >= support_factor * N``.
    """
    if not s1 < s2:
        raise InvalidInputError("need s1 < s2")
    g = np.asarray(g)
    coeffs = np.abs(np.fft.fft(g, axis=-1))
    xi = _fft_freqs(g.shape[-1], x_length)
    low = np.abs(xi) < support_factor * mol.N
    scale = float(coeffs.max()) if coeffs.size else 0.0
    if scale == 0:
        raise InvalidInputError("probe needs a nonzero field")
    if np.any(coeffs[..., low] > 1e-12 * scale):
        raise DomainError(f"g has Fourier support below {support_factor}*N")
    top = _hs_norm(g, s1, x_length)
    bottom = mol.N ** (s1 - s2 + mol.s) * _hs_norm(apply_I(g, mol, 1, x_length), s2 - mol.s, x_length)
    return top / bottom


def _unwrap_pair(phi, u):
    if isinstance(phi, SpaceTimeField) or isinstance(u, SpaceTimeField):
        if not (isinstance(phi, SpaceTimeField) and isinstance(u, SpaceTimeField)):
            raise InvalidInputError("mixing fields and arrays")
        if phi.grid != u.grid:
            raise InvalidInputError("fields live on different grids")
        return phi.values, u.values, phi.grid.x_length, phi.grid
    phi, u = np.asarray(phi), np.asarray(u)
    if phi.shape != u.shape:
        raise InvalidInputError("arrays differ in shape")
    return phi, u, None, None


def commutator(phi, u, mol: Mollifier, x_length: float = 2 * np.pi):
    """``Q(phi, u) = I(phi u) - I^2 phi * I u``, pointwise in time.

    Written as ``(I-1)(phi u) - (I^2-1)phi * Iu - phi * (I-1)u`` so every
    term carries a factor that is exactly zero below frequency ``N``.
    """
    pv, uv, L, grid = _unwrap_pair(phi, u)
    L = x_length if L is None else L
    rho = mol.rho(_fft_freqs(pv.shape[-1], L))
    m1 = rho - 1.0
    m2 = rho**2 - 1.0
    fu = np.fft.fft(uv, axis=-1)
    Iu = np.fft.ifft(fu * rho, axis=-1)
    term1 = np.fft.ifft(np.fft.fft(pv * uv, axis=-1) * m1, axis=-1)
    term2 = np.fft.ifft(np.fft.fft(pv, axis=-1) * m2, axis=-1) * Iu
    term3 = pv * np.fft.ifft(fu * m1, axis=-1)
    q = term1 - term2 - term3
    if grid is not None:
        return SpaceTimeField(grid, q)
    return q


def commutator_kernel_sum(phi: np.ndarray, u: np.ndarray, mol: Mollifier,
                          x_length: float = 2 * np.pi) -> np.ndarray:
    """Frequency-side double sum with kernel ``rho(xi) - rho(xi-eta)^2 rho(eta)``.

    Index differences wrap modulo ``n``, matching the lattice product.
    """
    phi, u = np.asarray(phi), np.asarray(u)
    n = phi.shape[-1]
    xi = _fft_freqs(n, x_length)
    rho = mol.rho(xi)
    P, U = np.fft.fft(phi), np.fft.fft(u)
    k = np.arange(n)
    diff = (k[:, None] - k[None, :]) % n
    kernel = rho[:, None] - rho[diff] ** 2 * rho[None, :]
    Q = (kernel * P[diff] * U[None, :]).sum(axis=1) / n
    return np.fft.ifft(Q)


# ---------------------------------------------------------------------------
# trajectories


def mollified_charge(psi_plus, psi_minus, mol: Mollifier, grid: Grid) -> float:
    a = apply_I(psi_plus, mol, 1, grid.x_length)
    b = apply_I(psi_minus, mol, 1, grid.x_length)
    return float((np.sum(np.abs(a) ** 2) + np.sum(np.abs(b) ** 2)) * grid.dx)


def gamma(traj: Trajectory, mol: Mollifier, z: float) -> float:
    """``sup_{t <= z}`` of the mollified charge over stored states."""
    grid = traj.config.grid
    vals = [mollified_charge(st.psi_plus, st.psi_minus, mol, grid)
            for t, st in zip(traj.times, traj.states) if t <= z + 1e-12]
    if not vals:
        raise InvalidInputError("no stored state at or before z")
    return max(vals)


def growth_term(traj: Trajectory, mol: Mollifier, t_prime: float) -> float:
    """``2 sum_+- sup_{t <= t'} |int_0^t int Q(phi, psi_+-) conj(I psi_-+) dx dt|``.

    Time integrals use the trapezoid rule on the stored states.
    """
    grid = traj.config.grid
    L = grid.x_length
    pairs = []
    times = []
    for t, st in zip(traj.times, traj.states):
        if t > t_prime + 1e-12:
            break
        Ip = apply_I(st.psi_plus, mol, 1, L)
        Im = apply_I(st.psi_minus, mol, 1, L)
        a = np.sum(commutator(st.phi, st.psi_plus, mol, L) * np.conj(Im)) * grid.dx
        b = np.sum(commutator(st.phi, st.psi_minus, mol, L) * np.conj(Ip)) * grid.dx
        pairs.append((a, b))
        times.append(t)
    if len(times) < 2:
        return 0.0
    arr = np.array(pairs)
    dt = np.diff(times)
    inc = 0.5 * (arr[1:] + arr[:-1]) * dt[:, None]
    running = np.vstack([np.zeros((1, 2)), np.cumsum(inc, axis=0)])
    return float(2 * (np.abs(running[:, 0]).max() + np.abs(running[:, 1]).max()))


def schedule_exponent(s: float, r: float, eps: float) -> float:
    if not s < 0:
        raise DomainError("the schedule needs s < 0")
    den = 1 + 2 * r - 4 * s - 6 * eps
    if den <= 0:
        raise DomainError("schedule denominator must be positive")
    return (4 * s - 2 * eps) / den


def delta_t_schedule(N: float, s: float, r: float, eps: float) -> float:
    """``N^((4s - 2 eps)/(1 + 2r - 4s - 6 eps))``."""
    return float(N) ** schedule_exponent(s, r, eps)


def reference_slope(s: float, r: float, eps: float) -> float:
    """log-N slope of ``dT^(1/2 - 2 eps) N^(-r + 2 eps)`` under the schedule."""
    return (0.5 - 2 * eps) * schedule_exponent(s, r, eps) + (-r + 2 * eps)


# ---------------------------------------------------------------------------
# experiment


@dataclass(frozen=True)
class ExperimentSetup:
    """Physical parameters of the almost-conservation runs."""

    M: float = 1.0
    m: float = 1.0
    x_points: int = 4096
    x_length: float = 2 * math.pi
    amp_spinor: float = 1.0
    amp_scalar: float = 1.0
    dt_fraction: float = 0.5
    scheme: str = "strang"
    linear: bool = False

    def grid(self) -> Grid:
        return Grid(self.x_points, 1, self.x_length)

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class ExperimentRow:
    """One ``N``; scalar columns are means over the seed ensemble."""

    N: float
    delta_t: float
    gamma0: float
    gammaT: float
    dgamma: float
    noise_floor: bool
    per_seed_dgamma: tuple = ()


@dataclass(frozen=True)
class ExperimentReport:
    rows: tuple
    fitted_slope: float | None
    reference_slope: float
    strictly_decreasing: bool
    seeds: tuple = ()
    note: str | None = None

    def per_seed_decreasing(self) -> list[bool]:
        out = []
        for i in range(len(self.seeds)):
            d = [row.per_seed_dgamma[i] for row in self.rows]
            out.append(all(b < a for a, b in zip(d, d[1:])))
        return out


def _thread_cap() -> int:
    try:
        return max(1, int(os.environ.get("XSB_THREADS", "4")))
    except ValueError:
        return 1


def _single_run(N, s, r, eps, state, setup: ExperimentSetup) -> tuple[float, float, float]:
    grid = setup.grid()
    mol = Mollifier(float(N), s)
    dT = delta_t_schedule(N, s, r, eps)
    cfg = SolverConfig(setup.M, setup.m, grid, setup.dt_fraction * grid.dx,
                       scheme=setup.scheme, linear=setup.linear)
    obs = lambda st: {"mcharge": mollified_charge(st.psi_plus, st.psi_minus, mol, grid)}
    tr = evolve(state, cfg, dT, [obs], stride=1, keep_states=False)
    m = np.maximum.accumulate(np.array(tr.observations["mcharge"]))
    return dT, float(m[0]), float(m[-1])


def almost_conservation_experiment(base_seed: int, s: float, r: float, eps: float,
                                   N_list: Sequence[float],
                                   setup: ExperimentSetup | None = None,
                                   n_seeds: int = 1) -> ExperimentReport:
    """Growth of the mollified charge over one scheduled step ``dT(N)`` per ``N``.

    Seeds ``base_seed .. base_seed + n_seeds - 1`` each give one data set,
    shared by every ``N``; only the mollifier and the run length change.
    Rows report ensemble means; a mean growth at the noise floor is
    excluded from the fit.
    """
    if not (-0.25 < s < 0):
        raise DomainError("need -1/4 < s < 0")
    if not (-s < r <= 1 + 2 * s):
        raise DomainError("need -s < r <= 1 + 2s")
    if n_seeds < 1:
        raise InvalidInputError("n_seeds must be positive")
    setup = setup or ExperimentSetup()
    seeds = tuple(base_seed + i for i in range(n_seeds))
    states = {sd: initial_data(sd, s, r, setup.amp_spinor, setup.amp_scalar, setup.grid()) for sd in seeds}
    jobs = [(sd, N) for N in N_list for sd in seeds]
    with ThreadPoolExecutor(max_workers=min(_thread_cap(), len(jobs))) as pool:
        results = list(pool.map(lambda job: _single_run(job[1], s, r, eps, states[job[0]], setup), jobs))
    table = dict(zip(jobs, results))
    rows = []
    for N in N_list:
        runs = [table[(sd, N)] for sd in seeds]
        g0 = float(np.mean([x[1] for x in runs]))
        gT = float(np.mean([x[2] for x in runs]))
        dg = tuple(x[2] - x[1] for x in runs)
        mean_dg = float(np.mean(dg))
        rows.append(ExperimentRow(float(N), runs[0][0], g0, gT, mean_dg,
                                  mean_dg <= NOISE_FLOOR * g0, dg))
    usable = [row for row in rows if not row.noise_floor]
    slope = None
    note = None
    if len(usable) >= 2:
        x = np.log([row.N for row in usable])
        y = np.log([row.dgamma / row.gamma0 for row in usable])
        slope = float(np.polyfit(x, y, 1)[0])
    else:
        note = "fewer than two runs above the noise floor; slope undefined"
    d = [row.dgamma for row in rows]
    decreasing = all(b < a for a, b in zip(d, d[1:]))
    return ExperimentReport(tuple(rows), slope, reference_slope(s, r, eps), decreasing, seeds, note)
