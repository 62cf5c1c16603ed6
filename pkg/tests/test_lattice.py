import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import direct_dft2, direct_idft2
from xsbkit.lattice import (
    FrequencyField,
    Grid,
    InvalidInputError,
    SpaceTimeField,
    WindowKind,
    dft_spacetime,
    idft,
    random_field,
    random_spatial,
    read_field_csv,
    smooth_bump,
    spatial_dft,
    spatial_frequencies,
    time_window,
    write_field_csv,
)
from xsbkit.norms import sobolev_norm


def _random_values(grid, seed):
    rng = np.random.default_rng(seed)
    return rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)


class TestGrid:
    def test_spacings(self):
        g = Grid(16, 8, 4.0, 2.0)
        assert g.dx == 0.25 and g.dt == 0.25
        assert g.shape == (8, 16)

    def test_frequencies_centered(self):
        g = Grid(8, 4, 2 * math.pi, 4 * math.pi)
        np.testing.assert_array_equal(g.xi, np.arange(-4, 4))
        np.testing.assert_allclose(g.tau, np.arange(-2, 2) / 2)

    @pytest.mark.parametrize("bad", [0, 3, 12, -4])
    def test_rejects_non_power_of_two(self, bad):
        with pytest.raises(InvalidInputError):
            Grid(bad)

    def test_rejects_nonpositive_length(self):
        with pytest.raises(InvalidInputError):
            Grid(8, 8, 0.0)

    def test_field_shape_checked(self):
        with pytest.raises(InvalidInputError):
            SpaceTimeField(Grid(8, 4), np.zeros((8, 4)))


class TestTransforms:
    def test_zero_field(self):
        g = Grid(8, 8)
        c = dft_spacetime(SpaceTimeField(g, np.zeros(g.shape))).coefficients
        assert not c.any()

    def test_single_exponential_is_single_coefficient(self):
        g = Grid(16, 8)
        t, x = np.meshgrid(g.t, g.x, indexing="ij")
        c = dft_spacetime(SpaceTimeField(g, np.exp(1j * (2 * t - 3 * x)))).coefficients
        j = list(g.tau).index(2.0)
        k = list(g.xi).index(-3.0)
        mask = np.zeros(g.shape, bool)
        mask[j, k] = True
        assert abs(c[j, k]) > 1
        assert np.abs(c[~mask]).max() < 1e-12

    def test_unit_coefficient_at_origin_is_constant(self):
        g = Grid(8, 8)
        c = np.zeros(g.shape, complex)
        c[4, 4] = 1.0
        v = idft(FrequencyField(g, c)).values
        np.testing.assert_allclose(v, v[0, 0])

    def test_matches_direct_sum_8x8(self):
        g = Grid(8, 8, 3.0, 5.0)
        vals = _random_values(g, 1)
        got = dft_spacetime(SpaceTimeField(g, vals)).coefficients
        np.testing.assert_allclose(got, direct_dft2(vals, g), rtol=0, atol=1e-12 * np.abs(got).max())

    def test_inverse_matches_direct_sum(self):
        g = Grid(8, 4, 1.0, 2.0)
        c = _random_values(g, 2)
        got = idft(FrequencyField(g, c)).values
        np.testing.assert_allclose(got, direct_idft2(c, g), atol=1e-12 * np.abs(got).max())

    @pytest.mark.parametrize("seed", range(5))
    def test_round_trip(self, seed):
        g = Grid(8, 8)
        vals = _random_values(g, seed)
        back = idft(dft_spacetime(SpaceTimeField(g, vals))).values
        assert np.abs(back - vals).max() <= 1e-12 * np.abs(vals).max()
        c = _random_values(g, seed + 100)
        again = dft_spacetime(idft(FrequencyField(g, c))).coefficients
        assert np.abs(again - c).max() <= 1e-12 * np.abs(c).max()

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**31), st.sampled_from([4, 8, 16]), st.sampled_from([2, 8]),
           st.floats(0.5, 20), st.floats(0.5, 20))
    def test_parseval(self, seed, nx, nt, lx, lt):
        g = Grid(nx, nt, lx, lt)
        f = SpaceTimeField(g, _random_values(g, seed))
        assert math.isclose(f.l2_norm(), dft_spacetime(f).l2_norm(), rel_tol=1e-10)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**31))
    def test_real_fields_have_hermitian_coefficients(self, seed):
        g = Grid(8, 8)
        vals = np.random.default_rng(seed).standard_normal(g.shape)
        c = dft_spacetime(SpaceTimeField(g, vals)).coefficients
        # label l sits at l + n/2; skip the unpaired Nyquist row and column
        inner = c[1:, 1:]
        np.testing.assert_allclose(inner, np.conj(inner[::-1, ::-1]), atol=1e-12)

    def test_linearity(self):
        g = Grid(8, 8)
        a, b = _random_values(g, 3), _random_values(g, 4)
        lhs = dft_spacetime(SpaceTimeField(g, 2 * a - 1j * b)).coefficients
        rhs = 2 * dft_spacetime(SpaceTimeField(g, a)).coefficients - 1j * dft_spacetime(SpaceTimeField(g, b)).coefficients
        np.testing.assert_allclose(lhs, rhs, atol=1e-13)

    def test_spatial_dft_matches_sum(self):
        n, L = 16, 3.0
        f = _random_values(Grid(n, 1), 5)[0]
        x = np.arange(n) * L / n
        xi = spatial_frequencies(n, L)
        ref = np.exp(-1j * np.outer(xi, x)) @ f * (L / n) / math.sqrt(2 * math.pi)
        np.testing.assert_allclose(spatial_dft(f, L / n), ref, atol=1e-12)


class TestWindows:
    def test_sharp_full_length_is_identity(self):
        g = Grid(8, 8)
        f = SpaceTimeField(g, _random_values(g, 0))
        np.testing.assert_array_equal(time_window(f, g.t_length, WindowKind.SHARP).values, f.values)

    def test_sharp_half_zeroes_half(self):
        g = Grid(4, 16)
        f = SpaceTimeField(g, np.ones(g.shape))
        w = time_window(f, g.t_length / 2, WindowKind.SHARP).values
        assert np.count_nonzero(w == 0) == w.size // 2

    def test_sharp_idempotent(self):
        g = Grid(8, 16)
        f = SpaceTimeField(g, _random_values(g, 1))
        once = time_window(f, 2.5, "sharp-indicator")
        np.testing.assert_array_equal(time_window(once, 2.5, "sharp-indicator").values, once.values)

    @pytest.mark.parametrize("seed", range(4))
    def test_smooth_window_contracts(self, seed):
        g = Grid(16, 32)
        f = random_field(seed, 0.0, g, 1.0)
        assert time_window(f, 3.0).l2_norm() <= f.l2_norm()

    def test_bump_profile(self):
        u = np.array([-0.1, 0.0, 0.25, 0.5, 0.75, 1.0, 1.3])
        v = smooth_bump(u)
        assert v[3] == 1.0
        assert v[0] == v[1] == v[5] == v[6] == 0.0
        assert v[2] == v[4] > 0

    @pytest.mark.parametrize("dT", [0.0, -1.0, 100.0])
    def test_bad_length(self, dT):
        g = Grid(4, 4)
        with pytest.raises(InvalidInputError):
            time_window(SpaceTimeField(g, np.ones(g.shape)), dT)


class TestRandomData:
    def test_zero_amplitude(self):
        assert not random_field(3, 0.5, Grid(8, 8), 0.0).values.any()

    def test_deterministic(self):
        g = Grid(16, 8)
        a = random_field(9, -0.2, g, 1.5).values
        b = random_field(9, -0.2, g, 1.5).values
        assert a.tobytes() == b.tobytes()

    def test_sobolev_amplitude_256(self):
        g = Grid(256, 1)
        f = random_spatial(1, -0.1, 256, g.x_length, 0.7)
        assert abs(sobolev_norm(f, -0.1, g) - 0.7) < 1e-10

    def test_field_amplitude(self):
        g = Grid(32, 16)
        f = random_field(4, 0.3, g, 2.0)
        c = dft_spacetime(f).coefficients
        _, xi = g.frequency_mesh()
        val = math.sqrt(np.sum((1 + xi**2) ** 0.3 * np.abs(c) ** 2) * g.cell_area)
        assert abs(val - 2.0) < 1e-10

    def test_band_limit(self):
        f = random_spatial(2, 0.0, 64, 2 * math.pi, 1.0, band=0.5)
        c = np.abs(np.fft.fft(f))
        k = np.abs(np.fft.fftfreq(64, 1 / 64))
        assert c[k > 16].max() < 1e-12 * c.max()


def test_csv_round_trip(tmp_path):
    g = Grid(8, 4, 3.0, 1.5)
    f = random_field(11, 0.0, g, 1.0)
    path, sidecar = write_field_csv(f, tmp_path / "f.csv")
    meta = json.loads(sidecar.read_text())
    assert meta["normalization"] == "unitary"
    assert meta["x_points"] == 8 and meta["t_points"] == 4
    back = read_field_csv(path)
    assert back.grid == g
    np.testing.assert_array_equal(back.values, f.values)


def test_csv_incomplete_rejected(tmp_path):
    g = Grid(4, 2)
    path, _ = write_field_csv(SpaceTimeField(g, np.ones(g.shape)), tmp_path / "f.csv")
    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(InvalidInputError):
        read_field_csv(path)
