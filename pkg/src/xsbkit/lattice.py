"""Periodic space-time lattice, discrete Fourier transforms and random data.

Conventions
-----------
Physical samples live on ``t_i = i*dt``, ``x_j = j*dx`` and are stored as
arrays indexed ``[time][space]``.  The Fourier side uses the centered
(``fftshift``) ordering with dual frequencies ``tau = 2*pi*j/t_length`` and
``xi = 2*pi*k/x_length``.

The space-time transform is unitary in L^2::

    g(tau, xi) = dx*dt/(2*pi) * sum_{t,x} f(t, x) exp(-i(tau*t + xi*x))

so that ``sum |f|^2 dx dt == sum |g|^2 dtau dxi`` exactly.  The spatial
transform used for Sobolev norms follows the same rule with ``dx/sqrt(2*pi)``.
Every norm in the package is written against these two conventions only.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

NORMALIZATION = "unitary"


class InvalidInputError(ValueError):
    """Raised when an operation receives data violating its contract."""


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Uniform periodic lattice on ``[0, t_length) x [0, x_length)``."""

    x_points: int
    t_points: int = 1
    x_length: float = 2 * math.pi
    t_length: float = 2 * math.pi

    def __post_init__(self):
        for name in ("x_points", "t_points"):
            n = getattr(self, name)
            if not isinstance(n, (int, np.integer)) or not _is_power_of_two(int(n)):
                raise InvalidInputError(f"{name} must be a power of two, got {n!r}")
        if not (self.x_length > 0 and self.t_length > 0):
            raise InvalidInputError("period lengths must be positive")

    @property
    def dx(self) -> float:
        return self.x_length / self.x_points

    @property
    def dt(self) -> float:
        return self.t_length / self.t_points

    @property
    def shape(self) -> tuple[int, int]:
        return (self.t_points, self.x_points)

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.x_points) * self.dx

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.t_points) * self.dt

    @property
    def xi(self) -> np.ndarray:
        """Centered spatial frequencies."""
        return 2 * np.pi / self.x_length * centered_indices(self.x_points)

    @property
    def tau(self) -> np.ndarray:
        """Centered temporal frequencies."""
        return 2 * np.pi / self.t_length * centered_indices(self.t_points)

    @property
    def dxi(self) -> float:
        return 2 * np.pi / self.x_length

    @property
    def dtau(self) -> float:
        return 2 * np.pi / self.t_length

    @property
    def cell_area(self) -> float:
        return self.dxi * self.dtau

    def frequency_mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """``(tau, xi)`` arrays broadcast to the coefficient shape."""
        tau, xi = np.meshgrid(self.tau, self.xi, indexing="ij")
        return tau, xi

    def to_dict(self) -> dict:
        return {
            "x_points": int(self.x_points),
            "t_points": int(self.t_points),
            "x_length": float(self.x_length),
            "t_length": float(self.t_length),
            "normalization": NORMALIZATION,
        }


def centered_indices(n: int) -> np.ndarray:
    """Integer frequency labels in centered order, ``-n/2 .. n/2-1``."""
    return np.fft.fftshift(np.fft.fftfreq(n, d=1.0 / n)).astype(int)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SpaceTimeField:
    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.shape != self.grid.shape:
            raise InvalidInputError(
                f"values shape {values.shape} does not match grid {self.grid.shape}"
            )
        object.__setattr__(self, "values", _frozen(values))

    def __mul__(self, c):
        return SpaceTimeField(self.grid, self.values * c)

    __rmul__ = __mul__

    def __add__(self, other: SpaceTimeField):
        _check_same_grid(self, other)
        return SpaceTimeField(self.grid, self.values + other.values)

    def l2_norm(self) -> float:
        g = self.grid
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * g.dx * g.dt))


@dataclass(frozen=True)
class FrequencyField:
    grid: Grid
    coefficients: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coefficients)
        if c.shape != self.grid.shape:
            raise InvalidInputError(
                f"coefficient shape {c.shape} does not match grid {self.grid.shape}"
            )
        object.__setattr__(self, "coefficients", _frozen(c))

    def __mul__(self, c):
        return FrequencyField(self.grid, self.coefficients * c)

    __rmul__ = __mul__

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.coefficients) ** 2) * self.grid.cell_area))


def _check_same_grid(*fields):
    g0 = fields[0].grid
    for f in fields[1:]:
        if f.grid != g0:
            raise InvalidInputError("fields live on different grids")


def dft_spacetime(f: SpaceTimeField) -> FrequencyField:
    g = f.grid
    if f.values.shape != g.shape:
        raise InvalidInputError("dimension mismatch")
    coeffs = np.fft.fftshift(np.fft.fft2(f.values)) * (g.dx * g.dt / (2 * np.pi))
    return FrequencyField(g, coeffs)


def idft(g: FrequencyField) -> SpaceTimeField:
    grid = g.grid
    raw = np.fft.ifftshift(g.coefficients) * (2 * np.pi / (grid.dx * grid.dt))
    return SpaceTimeField(grid, np.fft.ifft2(raw))


def spatial_dft(values: np.ndarray, dx: float) -> np.ndarray:
    """Unitary spatial transform along the last axis, centered order."""
    return np.fft.fftshift(np.fft.fft(values, axis=-1), axes=-1) * (dx / np.sqrt(2 * np.pi))


def spatial_idft(coeffs: np.ndarray, dx: float) -> np.ndarray:
    raw = np.fft.ifftshift(coeffs, axes=-1) * (np.sqrt(2 * np.pi) / dx)
    return np.fft.ifft(raw, axis=-1)


def spatial_frequencies(x_points: int, x_length: float) -> np.ndarray:
    return 2 * np.pi / x_length * centered_indices(x_points)


class WindowKind(str, Enum):
    SMOOTH = "smooth-bump"
    SHARP = "sharp-indicator"


def smooth_bump(u: np.ndarray) -> np.ndarray:
    """C-infinity bump supported on (0, 1) with peak value 1 at u = 1/2."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = (u > 0) & (u < 1)
    w = 1.0 - (2 * u[inside] - 1) ** 2
    out[inside] = np.exp(1.0 - 1.0 / w)
    return out


def time_window(f: SpaceTimeField, delta_t: float, profile=WindowKind.SMOOTH) -> SpaceTimeField:
    """Multiply by ``nu(t/delta_t)`` or by the indicator of ``[0, delta_t)``."""
    g = f.grid
    if not (0 < delta_t <= g.t_length):
        raise InvalidInputError(f"delta_t={delta_t} outside (0, t_length]")
    profile = WindowKind(profile)
    t = g.t
    if profile is WindowKind.SHARP:
        w = (t < delta_t).astype(float)
    else:
        w = smooth_bump(t / delta_t)
    return SpaceTimeField(g, f.values * w[:, None])


def _hs_weighted_norm(coeffs: np.ndarray, xi: np.ndarray, s: float, dxi: float) -> float:
    w = (1.0 + xi**2) ** s
    return float(np.sqrt(np.sum(w * np.abs(coeffs) ** 2) * dxi))


def random_spatial(seed: int, s: float, x_points: int, x_length: float, amplitude: float,
                   band: float | None = None) -> np.ndarray:
    """Random complex profile with ``||f||_{H^s} == amplitude``.

    Fourier coefficients are i.i.d. complex Gaussians times
    ``<xi>^(-s-1/2-0.01)``.  ``band`` (a fraction of the Nyquist index)
    zeroes every mode above it.
    """
    rng = np.random.default_rng(seed)
    xi = spatial_frequencies(x_points, x_length)
    z = rng.standard_normal(x_points) + 1j * rng.standard_normal(x_points)
    coeffs = z * (1.0 + xi**2) ** (-(s + 0.5 + 0.01) / 2)
    if band is not None:
        k = np.abs(centered_indices(x_points))
        coeffs[k > band * (x_points // 2)] = 0.0
    dx = x_length / x_points
    norm = _hs_weighted_norm(coeffs, xi, s, 2 * np.pi / x_length)
    if amplitude == 0 or norm == 0:
        return np.zeros(x_points, dtype=complex)
    coeffs *= amplitude / norm
    return spatial_idft(coeffs, dx)


def random_field(seed: int, s: float, grid: Grid, amplitude: float,
                 t_decay: float = 1.0) -> SpaceTimeField:
    """Seeded space-time field with ``||<xi>^s g||_{L^2} == amplitude``.

    The spatial decay follows :func:`random_spatial`; the temporal spectrum
    decays like ``<tau>^-t_decay`` so the field is smooth in time.
    """
    rng = np.random.default_rng(seed)
    tau, xi = grid.frequency_mesh()
    z = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    coeffs = z * (1.0 + xi**2) ** (-(s + 0.5 + 0.01) / 2) * (1.0 + tau**2) ** (-t_decay / 2)
    norm = float(np.sqrt(np.sum((1.0 + xi**2) ** s * np.abs(coeffs) ** 2) * grid.cell_area))
    if amplitude == 0 or norm == 0:
        return SpaceTimeField(grid, np.zeros(grid.shape, dtype=complex))
    return idft(FrequencyField(grid, coeffs * (amplitude / norm)))


def write_field_csv(f: SpaceTimeField, path) -> tuple[Path, Path]:
    """Dump ``(t_index, x_index, re, im)`` rows plus a JSON sidecar."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t_index", "x_index", "re", "im"])
        for i, j in np.ndindex(f.values.shape):
            v = f.values[i, j]
            w.writerow([i, j, repr(float(v.real)), repr(float(v.imag))])
    sidecar = path.with_suffix(path.suffix + ".json")
    sidecar.write_text(json.dumps(f.grid.to_dict(), indent=2, sort_keys=True) + "\n")
    return path, sidecar


def read_field_csv(path) -> SpaceTimeField:
    path = Path(path)
    sidecar = path.with_suffix(path.suffix + ".json")
    meta = json.loads(sidecar.read_text())
    if meta.get("normalization", NORMALIZATION) != NORMALIZATION:
        raise InvalidInputError(f"unsupported normalization {meta['normalization']!r}")
    grid = Grid(int(meta["x_points"]), int(meta["t_points"]),
                float(meta["x_length"]), float(meta["t_length"]))
    values = np.zeros(grid.shape, dtype=complex)
    seen = np.zeros(grid.shape, dtype=bool)
    with path.open(newline="") as fh:
        for row in csv.DictReader(fh):
            i, j = int(row["t_index"]), int(row["x_index"])
            values[i, j] = float(row["re"]) + 1j * float(row["im"])
            seen[i, j] = True
    if not seen.all():
        raise InvalidInputError(f"{path} does not cover the full grid")
    return SpaceTimeField(grid, values)
