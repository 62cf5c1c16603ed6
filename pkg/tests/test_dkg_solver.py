import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from xsbkit.dkg_solver import (
    DivergenceError,
    Scheme,
    SolverConfig,
    SolverState,
    charge,
    charge_observer,
    convergence_order,
    evolve,
    final_state,
    initial_data,
    norm_observer,
    step,
)
from xsbkit.lattice import Grid, InvalidInputError
from xsbkit.norms import sobolev_norm

G64 = Grid(64)


def cfg(grid=G64, dt=0.01, **kw):
    kw.setdefault("M", 1.0)
    kw.setdefault("m", 1.0)
    return SolverConfig(grid=grid, dt=dt, **kw)


class TestState:
    def test_zero_state_stays_zero(self):
        tr = evolve(SolverState.zeros(64), cfg(), 0.5)
        last = tr.states[-1]
        for a in (last.psi_plus, last.psi_minus, last.phi, last.phi_t):
            assert not np.any(a)
        assert last.time == pytest.approx(0.5)

    def test_state_is_immutable(self):
        s = SolverState.zeros(8)
        with pytest.raises(ValueError):
            s.psi_plus[0] = 1

    def test_complex_scalar_rejected(self):
        z = np.zeros(8)
        with pytest.raises(InvalidInputError):
            SolverState(z, z, z + 1j, z)

    def test_lengths_checked(self):
        with pytest.raises(InvalidInputError):
            SolverState(np.zeros(8), np.zeros(4), np.zeros(8), np.zeros(8))


class TestConfig:
    def test_cfl(self):
        with pytest.raises(InvalidInputError):
            cfg(Grid(64), dt=0.2)

    @pytest.mark.parametrize("kw", [{"dt": 0.0}, {"M": float("nan")}, {"m": float("inf")}])
    def test_bad_values(self, kw):
        with pytest.raises(InvalidInputError):
            cfg(**kw)

    def test_unknown_scheme(self):
        with pytest.raises(ValueError):
            cfg(scheme="euler")

    def test_grid_mismatch(self):
        with pytest.raises(InvalidInputError):
            step(SolverState.zeros(32), cfg())


class TestInitialData:
    @pytest.mark.parametrize("s, r", [(0.0, 0.0), (-0.2, 0.3), (0.5, 1.0)])
    def test_amplitudes(self, s, r):
        st0 = initial_data(4, s, r, 0.7, 0.3, G64)
        assert sobolev_norm(st0.psi_plus, s, G64) == pytest.approx(0.7, rel=1e-10)
        assert sobolev_norm(st0.psi_minus, s, G64) == pytest.approx(0.7, rel=1e-10)
        assert sobolev_norm(st0.phi, r, G64) == pytest.approx(0.3, rel=1e-10)
        assert sobolev_norm(st0.phi_t, r - 1, G64) == pytest.approx(0.3, rel=1e-10)

    def test_deterministic(self):
        a, b = initial_data(9, 0, 0, 1, 1, G64), initial_data(9, 0, 0, 1, 1, G64)
        assert a.psi_plus.tobytes() == b.psi_plus.tobytes()
        assert a.phi_t.tobytes() == b.phi_t.tobytes()

    def test_inside_dealiased_band(self):
        st0 = initial_data(1, 0, 0, 1, 1, G64)
        k = np.abs(np.fft.fftfreq(64, 1 / 64))
        assert np.abs(np.fft.fft(st0.psi_plus))[k > 64 // 3].max() < 1e-12


class TestLinearFlows:
    def test_free_transport_is_a_shift(self):
        # with M = 0 and phi = 0 the spinor halves move at unit speed in opposite directions
        g = Grid(64)
        x = g.x
        f = np.exp(np.cos(x)) + 1j * np.sin(2 * x)
        s0 = SolverState(f, f, np.zeros(64), np.zeros(64))
        shift = 5
        T = shift * g.dx
        out = final_state(s0, cfg(g, dt=g.dx / 4, M=0.0, linear=True), T)
        np.testing.assert_allclose(out.psi_plus, np.roll(f, shift), atol=1e-12)
        np.testing.assert_allclose(out.psi_minus, np.roll(f, -shift), atol=1e-12)

    def test_klein_gordon_single_mode(self):
        g = Grid(32)
        m, k, T = 0.5, 3, 0.8
        phi0 = np.cos(k * g.x)
        s0 = SolverState(np.zeros(32), np.zeros(32), phi0, np.zeros(32))
        out = final_state(s0, cfg(g, dt=0.1, M=0.0, m=m), T)
        w = math.sqrt(k * k + m * m)
        np.testing.assert_allclose(out.phi, math.cos(w * T) * phi0, atol=1e-12)

    @pytest.mark.parametrize("scheme", list(Scheme))
    def test_linear_unitary_per_step(self, scheme):
        s0 = initial_data(2, 0, 0, 1.0, 0.0, G64)
        c = cfg(linear=True, M=2.0, scheme=scheme)
        q0 = charge(s0, G64)
        tr = evolve(s0, c, 0.2, observers=[charge_observer(G64)])
        drift = np.abs(np.diff(tr.column("charge")))
        assert drift.max() < 1e-12 * q0


class TestNonlinear:
    @pytest.mark.parametrize("scheme", list(Scheme))
    def test_charge_conserved(self, scheme):
        g = Grid(128)
        s0 = initial_data(11, 0, 0.5, 0.2, 0.2, g)
        tr = evolve(s0, cfg(g, dt=1e-3, scheme=scheme), 1.0, observers=[charge_observer(g)], stride=100)
        q = np.array(tr.column("charge"))
        assert np.abs(q - q[0]).max() <= 1e-6 * q[0]

    @pytest.mark.parametrize("seed", range(3))
    def test_time_reversal(self, seed):
        g = Grid(64)
        s0 = initial_data(seed, 0, 0.5, 0.3, 0.3, g)
        n = 200
        fwd = final_state(s0, cfg(g, dt=1e-3), n * 1e-3)
        back = final_state(fwd, cfg(g, dt=-1e-3), n * 1e-3)
        err = max(np.abs(back.psi_plus - s0.psi_plus).max(), np.abs(back.phi - s0.phi).max())
        assert err <= n * 1e-10
        assert back.time == pytest.approx(0.0, abs=1e-12)

    def test_scalar_stays_real(self):
        s0 = initial_data(5, 0, 0, 0.5, 0.5, G64)
        out = final_state(s0, cfg(), 0.5)
        assert out.phi.dtype == np.float64

    @pytest.mark.parametrize("scheme, order", [(Scheme.STRANG, 2), (Scheme.RK4_IF, 4)])
    def test_convergence_order(self, scheme, order):
        g = Grid(64)
        s0 = initial_data(3, 2, 2, 0.1, 0.1, g)
        p, diffs = convergence_order(s0, cfg(g, dt=0.04, scheme=scheme), 0.4)
        assert abs(p - order) < 0.3, diffs

    def test_linear_mass_rotation(self):
        # a spatially constant spinor just rotates between its halves at frequency M
        g = Grid(16)
        one = np.ones(16, complex)
        s0 = SolverState(one, np.zeros(16), np.zeros(16), np.zeros(16))
        out = final_state(s0, cfg(g, dt=0.1, M=2.0, linear=True), 0.7)
        np.testing.assert_allclose(out.psi_plus, math.cos(1.4) * one, atol=1e-13)
        np.testing.assert_allclose(out.psi_minus, -1j * math.sin(1.4) * one, atol=1e-13)

    def test_zero_spinor_free_scalar(self):
        # no spinor means no source, so phi follows the linear Klein-Gordon flow
        g = Grid(32)
        s0 = SolverState(np.zeros(32), np.zeros(32), np.cos(2 * g.x), np.zeros(32))
        a = final_state(s0, cfg(g, dt=0.05), 0.5)
        w = math.sqrt(5)
        np.testing.assert_allclose(a.phi, math.cos(w * 0.5) * np.cos(2 * g.x), atol=1e-12)
        assert not np.any(a.psi_plus)

    def test_divergence_raises(self):
        g = Grid(32)
        s0 = initial_data(0, 0, 0, 1e150, 1e150, g, band=1.0)
        with np.errstate(over="ignore", invalid="ignore"), pytest.raises(DivergenceError) as ei:
            evolve(s0, cfg(g, dt=0.1, dealias=False), 5.0)
        assert ei.value.step is not None


class TestEvolve:
    def test_zero_duration(self):
        s0 = initial_data(0, 0, 0, 1, 1, G64)
        tr = evolve(s0, cfg(), 0.0)
        assert len(tr.states) == 1 and tr.times == [0.0]

    def test_stride_records_end(self):
        s0 = initial_data(0, 0, 0, 0.1, 0.1, G64)
        tr = evolve(s0, cfg(dt=0.01), 0.1, stride=3, observers=[norm_observer(G64, 0, 0)])
        assert tr.times[0] == 0.0 and tr.times[-1] == pytest.approx(0.1)
        assert len(tr.times) == 5
        assert len(tr.column("Hs_norm_psi")) == 5

    def test_step_matches_evolve(self):
        s0 = initial_data(1, 0, 0, 0.2, 0.2, G64)
        a = step(s0, cfg(dt=0.01))
        b = evolve(s0, cfg(dt=0.01), 0.01).states[-1]
        np.testing.assert_array_equal(a.psi_plus, b.psi_plus)

    def test_negative_duration_rejected(self):
        with pytest.raises(InvalidInputError):
            evolve(SolverState.zeros(64), cfg(), -1.0)

    @settings(max_examples=10, deadline=None)
    @given(st.integers(0, 10**6))
    def test_reproducible(self, seed):
        s0 = initial_data(seed, 0, 0, 0.3, 0.3, G64)
        a = final_state(s0, cfg(), 0.1)
        b = final_state(s0, cfg(), 0.1)
        assert a.psi_minus.tobytes() == b.psi_minus.tobytes()
