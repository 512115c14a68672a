import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from luwaves.noise import (
    SEED_MULTIPLIER,
    NoiseModel,
    PresetIncrements,
    RecordingStream,
    RngStream,
    WienerIncrement,
    derive_seed,
    ito_stokes_drift,
    noise_field,
    sample_increment,
    split_additive,
    taper,
    taper_slope,
    variance_tensor,
)
from luwaves.spectral import make_grid

# frozen oracle values, computed by hand from the closed-form taper
TAPER_AT_HALF = 0.9966722160545233  # exp(-1/300)
VARIANCE_AT_HALF = 9.933555062550345e-05  # 1e-4 exp(-2/300), A = 0.01
ISD_AT_HALF = -8.829826722266972e-09  # A = 0.005; central-difference check gives -8.8298268e-09


class TestSeeds:
    def test_path_zero_keeps_base(self):
        assert derive_seed(1234, 0) == 1234

    def test_formula(self):
        assert derive_seed(7, 3) == (7 ^ (3 * SEED_MULTIPLIER)) % 2**64

    def test_seeds_distinct(self):
        seeds = {derive_seed(42, i) for i in range(1000)}
        assert len(seeds) == 1000

    def test_negative_index_rejected(self):
        with pytest.raises(ValueError):
            derive_seed(1, -1)

    def test_stream_reproducible(self):
        a, b = RngStream(99), RngStream(99)
        for _ in range(5):
            assert a.increment(0.01) == b.increment(0.01)
        assert a.count == 5

    def test_for_path(self):
        assert RngStream.for_path(5, 2).seed == derive_seed(5, 2)

    def test_increment_variance(self):
        rng = RngStream(2024)
        dt = 0.005
        draws = np.array([[i.d_beta1, i.d_beta2] for i in (rng.increment(dt) for _ in range(20000))])
        # 20000 samples: relative sd of the variance estimate ~ 1%
        np.testing.assert_allclose(draws.var(axis=0) / dt, 1.0, atol=0.05)
        assert abs(np.corrcoef(draws.T)[0, 1]) < 0.05

    def test_sample_increment_uses_stream(self):
        rng = RngStream(1)
        inc = sample_increment(rng, 0.1)
        assert isinstance(inc, WienerIncrement) and inc.dt == 0.1
        assert rng.count == 1

    def test_nonpositive_dt(self):
        with pytest.raises(ValueError):
            RngStream(0).increment(0.0)

    def test_preset_replays_and_exhausts(self):
        p = PresetIncrements([(0.1, -0.2)])
        assert p.increment(0.5) == WienerIncrement(0.1, -0.2, 0.5)
        with pytest.raises(IndexError):
            p.increment(0.5)

    def test_recording_stream_accumulates(self):
        r = RecordingStream(PresetIncrements([(1.0, 2.0), (0.5, -1.0)]))
        r.increment(1.0)
        r.increment(1.0)
        assert r.b1 == [0.0, 1.0, 1.5] and r.b2 == [0.0, 2.0, 1.0]
        assert r.count == 2


class TestTaper:
    def test_centre_and_wall(self):
        assert taper(0.0, 10.0, 50.0) == 1.0
        assert taper(50.0, 10.0, 50.0) == 0.0
        assert taper(-50.0, 10.0, 50.0) == 0.0

    def test_frozen_value(self):
        assert taper(25.0, 10.0, 50.0) == pytest.approx(TAPER_AT_HALF, rel=1e-14)

    def test_infinite_alpha_disables(self):
        np.testing.assert_array_equal(taper(np.array([-50.0, 0.0, 49.0]), math.inf, 50.0), 1.0)

    def test_outside_tank_rejected(self):
        with pytest.raises(ValueError):
            taper(51.0, 10.0, 50.0)

    def test_slope_matches_central_difference(self):
        x = np.linspace(-45, 45, 19)
        h = 1e-5
        fd = (taper(x + h, 10.0, 50.0) - taper(x - h, 10.0, 50.0)) / (2 * h)
        np.testing.assert_allclose(taper_slope(x, 10.0, 50.0), fd, atol=1e-9)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(-49.99, 49.99), st.floats(0.5, 100.0))
    def test_bounded_and_even(self, x, alpha):
        s = taper(x, alpha, 50.0)
        assert 0.0 <= s <= 1.0
        assert s == taper(-x, alpha, 50.0)


class TestNoiseModel:
    @pytest.mark.parametrize(
        "kw", [dict(amplitude=-1.0), dict(taper_alpha=0.0), dict(upsilon=-0.1), dict(wavenumber=math.inf)]
    )
    def test_validation(self, kw):
        with pytest.raises(ValueError):
            NoiseModel(**kw)

    def test_defaults(self):
        nm = NoiseModel()
        assert nm.wavenumber == pytest.approx(2 * math.pi / 100)
        assert nm.taper_alpha == 10.0 and nm.filter_additive

    def test_field_vanishes_at_wall(self, tank):
        nm = NoiseModel(amplitude=0.01)
        f = noise_field(nm, WienerIncrement(0.3, -0.7, 0.005), tank)
        assert f[0] == 0.0  # x = -L is the only wall node of the periodic grid

    def test_field_formula(self, tank):
        nm = NoiseModel(amplitude=0.01)
        inc = WienerIncrement(0.3, -0.7, 0.005)
        s = taper(tank.x, 10.0, 50.0)
        expect = 0.01 * s * (0.3 * np.cos(nm.wavenumber * tank.x) - 0.7 * np.sin(nm.wavenumber * tank.x))
        np.testing.assert_allclose(noise_field(nm, inc, tank), expect, atol=1e-17)

    def test_zero_amplitude_field(self, small_tank):
        assert not np.any(noise_field(NoiseModel(0.0), WienerIncrement(1, 1, 1), small_tank))

    def test_periodicity_flag(self, tank):
        assert NoiseModel().periodic_on(tank)
        assert not NoiseModel(wavenumber=0.123).periodic_on(tank)

    def test_variance_tensor(self, tank):
        a = variance_tensor(NoiseModel(amplitude=0.01), tank)
        j = int(np.argmin(np.abs(tank.x - 25.0)))
        assert a[j] == pytest.approx(VARIANCE_AT_HALF, rel=1e-13)
        assert np.all(a >= 0)
        assert a[tank.n_points // 2] == pytest.approx(1e-4)

    def test_variance_matches_sampled_second_moment(self, tank):
        nm = NoiseModel(amplitude=0.01)
        rng = RngStream(5)
        dt = 0.01
        acc = np.zeros(tank.n_points)
        n = 4000
        for _ in range(n):
            acc += noise_field(nm, rng.increment(dt), tank) ** 2
        emp = acc / (n * dt)
        a = variance_tensor(nm, tank)
        inner = np.abs(tank.x) < 40
        np.testing.assert_allclose(emp[inner], a[inner], rtol=0.1)

    def test_ito_stokes_drift_value(self, tank):
        us = ito_stokes_drift(NoiseModel(), tank)
        j = int(np.argmin(np.abs(tank.x - 25.0)))
        assert us[j] == pytest.approx(ISD_AT_HALF, rel=1e-12)

    def test_ito_stokes_drift_is_half_gradient_of_variance(self, tank):
        nm = NoiseModel()
        h = 1e-5  # central-difference error ~ h^2, largest next to the walls

        def a(x):
            return nm.amplitude**2 * taper(x, nm.taper_alpha, 50.0) ** 2

        fd = 0.5 * (a(tank.x[1:] + h) - a(tank.x[1:] - h)) / (2 * h)
        np.testing.assert_allclose(ito_stokes_drift(nm, tank)[1:], fd, rtol=1e-5, atol=1e-15)

    def test_ito_stokes_drift_integrates_to_zero(self, tank):
        assert abs(tank.integrate(ito_stokes_drift(NoiseModel(), tank))) < 1e-12

    def test_untapered_drift_vanishes(self, tank):
        assert not np.any(ito_stokes_drift(NoiseModel(taper_alpha=math.inf), tank))

    def test_untapered_mean_in_law(self, tank):
        nm = NoiseModel(amplitude=1.0, taper_alpha=math.inf)
        rng = RngStream(11)
        n = 400
        means = np.array([tank.integrate(noise_field(nm, rng.increment(1.0), tank)) / tank.length
                          for _ in range(n)])
        assert abs(means.mean()) < 3 * means.std(ddof=1) / math.sqrt(n) + 1e-12


class TestSplitAdditive:
    def setup_method(self):
        self.g = make_grid(128, 50.0)
        self.div = np.cos(2 * math.pi * self.g.x / 100)

    def test_filter_on_flat_is_zero(self):
        out = split_additive(self.div, np.zeros(128), NoiseModel(filter_additive=True), 0.1)
        assert not np.any(out)

    def test_filter_off_flat_is_divergence(self):
        out = split_additive(self.div, np.zeros(128), NoiseModel(filter_additive=False), 0.1)
        np.testing.assert_array_equal(out, self.div)

    def test_difference_is_additive_part(self):
        eta = np.exp(-self.g.x**2)
        on = split_additive(self.div, eta, NoiseModel(filter_additive=True), 0.1)
        off = split_additive(self.div, eta, NoiseModel(filter_additive=False), 0.1)
        np.testing.assert_allclose(on - off, -self.div, atol=1e-15)
