"""Bourgain-type and wave-Sobolev norms on the frequency lattice.

All norms are rectangle-rule sums over the centered lattice, weighted by
the cell area, which is exact for lattice trigonometric polynomials.
Localized norms ``X^{s,b}(S_T)`` are infima over extensions and are never
computed; the probes here report the smooth-window extension value, which
is an upper bound.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .lattice import (
    FrequencyField,
    Grid,
    InvalidInputError,
    SpaceTimeField,
    WindowKind,
    dft_spacetime,
    spatial_dft,
    spatial_frequencies,
    time_window,
)


class DomainError(ValueError):
    """An input violates a hypothesis of the estimate being probed."""


class NormKind(str, Enum):
    XSB_PLUS = "xsb+"
    XSB_MINUS = "xsb-"
    WAVE_SOBOLEV = "wave"
    SOBOLEV_SPATIAL = "hs"
    CALH_PAIR = "calh"


@dataclass(frozen=True)
class NormSpec:
    kind: NormKind
    s: float
    b: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", NormKind(self.kind))
        if not (np.isfinite(self.s) and np.isfinite(self.b)):
            raise InvalidInputError("norm exponents must be finite")


def japanese_bracket(x):
    """``<x> = sqrt(1 + x^2)``."""
    return np.sqrt(1.0 + np.square(x))


def _sign_value(sign) -> int:
    if sign in (1, "+", "plus"):
        return 1
    if sign in (-1, "-", "minus"):
        return -1
    raise InvalidInputError(f"sign must be '+' or '-', got {sign!r}")


def _weighted_sum(g: FrequencyField, weight_sq: np.ndarray) -> float:
    return float(np.sqrt(np.sum(weight_sq * np.abs(g.coefficients) ** 2) * g.grid.cell_area))


def xsb_norm(g: FrequencyField, s: float, b: float, sign="+") -> float:
    """``|| <tau +- xi>^b <xi>^s g ||_{L^2}`` on the lattice."""
    sgn = _sign_value(sign)
    tau, xi = g.grid.frequency_mesh()
    w = (1.0 + (tau + sgn * xi) ** 2) ** b * (1.0 + xi**2) ** s
    return _weighted_sum(g, w)


def wave_sobolev_norm(g: FrequencyField, r: float, b: float) -> float:
    """``|| <|tau| - |xi|>^b <xi>^r g ||_{L^2}``."""
    tau, xi = g.grid.frequency_mesh()
    w = (1.0 + (np.abs(tau) - np.abs(xi)) ** 2) ** b * (1.0 + xi**2) ** r
    return _weighted_sum(g, w)


def sobolev_norm(slice_values: np.ndarray, s: float, grid: Grid) -> float:
    values = np.asarray(slice_values)
    if values.shape != (grid.x_points,):
        raise InvalidInputError(f"expected a spatial array of length {grid.x_points}")
    coeffs = spatial_dft(values, grid.dx)
    xi = spatial_frequencies(grid.x_points, grid.x_length)
    return float(np.sqrt(np.sum((1.0 + xi**2) ** s * np.abs(coeffs) ** 2) * grid.dxi))


def calH_pair_norm(phi: FrequencyField, phi_t: FrequencyField, r: float, b: float) -> float:
    return wave_sobolev_norm(phi, r, b) + wave_sobolev_norm(phi_t, r - 1, b)


def evaluate(spec: NormSpec, g: FrequencyField) -> float:
    """Dispatch a :class:`NormSpec` on a single frequency field."""
    if spec.kind is NormKind.XSB_PLUS:
        return xsb_norm(g, spec.s, spec.b, "+")
    if spec.kind is NormKind.XSB_MINUS:
        return xsb_norm(g, spec.s, spec.b, "-")
    if spec.kind is NormKind.WAVE_SOBOLEV:
        return wave_sobolev_norm(g, spec.s, spec.b)
    if spec.kind is NormKind.SOBOLEV_SPATIAL:
        # L^2_t H^s_x, the b = 0 member of either Bourgain family
        return xsb_norm(g, spec.s, 0.0, "+")
    raise InvalidInputError("the calH pair norm needs two fields; call calH_pair_norm")


def reflect_tau(g: FrequencyField) -> FrequencyField:
    """Flip ``tau -> -tau``; the Nyquist row maps to itself."""
    n = g.grid.t_points
    idx = (n - np.arange(n)) % n
    return FrequencyField(g.grid, g.coefficients[idx, :])


def _check_open_half(*bs):
    for b in bs:
        if not (-0.5 < b < 0.5):
            raise DomainError(f"modulation exponent {b} outside (-1/2, 1/2)")


def cutoff_boundedness_probe(u: SpaceTimeField, s: float, b: float, sign, delta_ts) -> list[tuple[float, float]]:
    """Ratios ``||1_[0,T) u|| / ||u||`` in ``X^{s,b}`` for each ``T``."""
    _check_open_half(b)
    base = xsb_norm(dft_spacetime(u), s, b, sign)
    if base == 0:
        raise InvalidInputError("probe field has zero norm")
    out = []
    for dT in delta_ts:
        cut = time_window(u, dT, WindowKind.SHARP)
        out.append((float(dT), xsb_norm(dft_spacetime(cut), s, b, sign) / base))
    return out


@dataclass(frozen=True)
class DilationReport:
    delta_ts: tuple
    ratios: tuple
    slope: float
    predicted: float


def dilation_gain_probe(u: SpaceTimeField, s: float, b1: float, b2: float, sign, delta_ts) -> DilationReport:
    """Least-squares slope of ``log(||nu(t/T) u||_{b1} / ||u||_{b2})`` against ``log T``.

    The time-dilation bound predicts a slope of at least ``b2 - b1``.
    """
    _check_open_half(b1, b2)
    if b1 > b2:
        raise DomainError("need b1 <= b2")
    delta_ts = [float(t) for t in delta_ts]
    if len(delta_ts) < 2:
        raise InvalidInputError("need at least two window lengths")
    if min(delta_ts) < 2 * u.grid.dt:
        raise InvalidInputError("window shorter than two time cells")
    base = xsb_norm(dft_spacetime(u), s, b2, sign)
    ratios = []
    for dT in delta_ts:
        w = time_window(u, dT, WindowKind.SMOOTH)
        ratios.append(xsb_norm(dft_spacetime(w), s, b1, sign) / base)
    slope = float(np.polyfit(np.log(delta_ts), np.log(ratios), 1)[0])
    return DilationReport(tuple(delta_ts), tuple(ratios), slope, b2 - b1)
