"""Linear flow: torus propagation identities, oscillatory quadrature, decay fits."""

import numpy as np
import pytest

from eulerriesz import linflow
from eulerriesz.dispersion import DispersionParams, p_prime
from eulerriesz.spectral import (
    GridSpec,
    SpectralField,
    l2_norm_coefficients,
)

SIGMA_ONE = DispersionParams(sigma=1.0)
SIGMA_DEG = DispersionParams(sigma=1.5)

# frozen oracles (20-digit mpmath)
P_PRIME_HALF = 1.154700538379251529
P_PRIME_TWO = 1.0206207261596576
P_PRIME_06 = 1.122682798775623295


def random_real_field(grid: GridSpec, seed: int) -> SpectralField:
    rng = np.random.default_rng(seed)
    return SpectralField.from_physical(grid, rng.standard_normal(grid.shape))


def band_limited_field(grid: GridSpec, r_lo: float, r_hi: float, seed: int) -> SpectralField:
    base = random_real_field(grid, seed)
    mask = (grid.xi_norm >= r_lo) & (grid.xi_norm <= r_hi)
    return SpectralField(grid, base.coefficients * mask, real_valued=True)


# ---------------------------------------------------------------------------
# propagation identities


def test_propagate_zero_time_is_identity():
    grid = GridSpec(n_per_axis=16, box_length=2 * np.pi)
    f = random_real_field(grid, seed=1)
    g = linflow.propagate(f, SIGMA_ONE, 0.0)
    assert np.allclose(g.coefficients, f.coefficients, rtol=0, atol=1e-14)


@pytest.mark.parametrize("t", [1.0, 10.0, 100.0])
def test_propagate_conserves_l2(t):
    grid = GridSpec(n_per_axis=32, box_length=2 * np.pi)
    f = random_real_field(grid, seed=2)
    before = l2_norm_coefficients(f)
    after = l2_norm_coefficients(linflow.propagate(f, SIGMA_ONE, t))
    assert abs(after - before) <= 1e-12 * before


def test_propagate_semigroup_composition():
    grid = GridSpec(n_per_axis=32, box_length=2 * np.pi)
    f = random_real_field(grid, seed=3)
    two_step = linflow.propagate(linflow.propagate(f, SIGMA_DEG, 0.7), SIGMA_DEG, 2.4)
    one_step = linflow.propagate(f, SIGMA_DEG, 3.1)
    scale = np.max(np.abs(one_step.coefficients))
    assert np.max(np.abs(two_step.coefficients - one_step.coefficients)) <= 1e-12 * scale


def test_propagate_inverse():
    grid = GridSpec(n_per_axis=16, box_length=4 * np.pi)
    f = random_real_field(grid, seed=4)
    back = linflow.propagate(linflow.propagate(f, SIGMA_ONE, 5.0), SIGMA_ONE, -5.0)
    scale = np.max(np.abs(f.coefficients))
    assert np.max(np.abs(back.coefficients - f.coefficients)) <= 1e-12 * scale


def test_propagate_keeps_zero_mode():
    grid = GridSpec(n_per_axis=16, box_length=2 * np.pi)
    f = random_real_field(grid, seed=5)
    g = linflow.propagate(f, SIGMA_ONE, 7.0)
    assert g.zero_mode == pytest.approx(f.zero_mode, abs=1e-15)


# ---------------------------------------------------------------------------
# fundamental solution quadrature


def test_fundamental_zero_time_matches_lattice_sum():
    # independent oracle: truncated Fourier lattice sum on a large box
    window = linflow.window_lp(1.0)
    box = 48 * np.pi
    dxi = 2 * np.pi / box
    k = np.arange(-48, 49)
    k1, k2, k3 = np.meshgrid(k, k, k, indexing="ij")
    radius = dxi * np.sqrt(k1**2 + k2**2 + k3**2)
    weights = window(radius)
    marginal = weights.sum(axis=(1, 2))
    # the lattice oracle has a periodization floor from box images, so compare
    # against the profile scale rather than per-point tail values
    errs, scale = [], 0.0
    for x_mag in (0.0, 1.0, 3.7, 10.0):
        oracle = np.sum(marginal * np.exp(1j * dxi * k * x_mag)) / box**3
        got = linflow.fundamental_value(SIGMA_ONE, window, 0.0, (x_mag, 0.0, 0.0))
        errs.append(abs(got - oracle))
        scale = max(scale, abs(oracle))
    assert max(errs) <= 1e-6 * scale


def test_fundamental_self_convergence_on_panel_doubling():
    window = linflow.window_lp(1.0)
    x = (1.06 * 50.0, 0.0, 0.0)
    coarse = linflow.fundamental_value(SIGMA_ONE, window, 50.0, x, panels_per_oscillation=8)
    fine = linflow.fundamental_value(SIGMA_ONE, window, 50.0, x, panels_per_oscillation=16)
    assert abs(coarse - fine) <= 1e-8 * abs(fine)


def test_fundamental_budget_guard():
    window = linflow.window_lp(1.0)
    with pytest.raises(ValueError, match="quadrature budget exceeded"):
        linflow.fundamental_value(SIGMA_ONE, window, 1e12, (1e12, 0.0, 0.0))


def test_run_oscillatory_takes_sup_over_speeds():
    window = linflow.window_lp(1.0)
    spec = linflow.OscillatorySpec(
        window=window, t_samples=(30.0, 60.0), speeds=(1.0, 1.06)
    )
    samples = linflow.run_oscillatory(SIGMA_ONE, spec)
    assert [t for t, _ in samples] == [30.0, 60.0]
    for t, amp in samples:
        singles = [
            abs(linflow.fundamental_value(SIGMA_ONE, window, t, (c * t, 0, 0)))
            for c in (1.0, 1.06)
        ]
        assert amp == pytest.approx(max(singles), rel=1e-12)


# ---------------------------------------------------------------------------
# windows and probe speeds


def test_window_lp_profile_shape():
    window = linflow.window_lp(2.0)
    assert window.support == (1.0, 4.0)
    assert window(2.0) == 1.0
    assert window(1.0) == 0.0
    assert window(4.0) == 0.0
    assert "2" in window.label


def test_window_shell_requires_degeneracy():
    with pytest.raises(ValueError, match="no degenerate point"):
        linflow.window_shell(SIGMA_ONE)


def test_window_shell_eps_validation():
    with pytest.raises(ValueError, match=r"need 0 < 2\*eps < r0"):
        linflow.window_shell(SIGMA_DEG, eps=1.0)


def test_window_support_validation():
    with pytest.raises(ValueError, match="window support"):
        linflow.RadialWindow(profile=lambda r: r, support=(2.0, 1.0), label="bad")


def test_nondegenerate_speed_probe_spans_group_velocities():
    speeds = linflow.nondegenerate_speed_probe(SIGMA_ONE, 0.5, 2.0, count=9)
    assert len(speeds) == 9
    assert list(speeds) == sorted(speeds)
    # p' is monotone decreasing for sigma = 1, so the range ends are the band ends
    assert speeds[0] == pytest.approx(P_PRIME_TWO, rel=1e-12)
    assert speeds[-1] == pytest.approx(P_PRIME_HALF, rel=1e-12)


def test_oscillatory_spec_validation():
    window = linflow.window_lp(1.0)
    with pytest.raises(ValueError, match="strictly increasing"):
        linflow.OscillatorySpec(window, (2.0, 1.0), (1.0,))
    with pytest.raises(ValueError, match="strictly increasing"):
        linflow.OscillatorySpec(window, (-1.0, 1.0), (1.0,))
    with pytest.raises(ValueError, match="at least 8"):
        linflow.OscillatorySpec(window, (1.0, 2.0), (1.0,), panels_per_oscillation=4)
    with pytest.raises(ValueError, match="speed"):
        linflow.OscillatorySpec(window, (1.0, 2.0), ())


# ---------------------------------------------------------------------------
# fitting


def _times():
    return np.logspace(0.0, 2.0, 20)


def test_fit_decay_recovers_exact_power_law():
    t = _times()
    fit = linflow.fit_decay(list(zip(t, 7.0 * t**-1.5)))
    assert fit.exponent == pytest.approx(-1.5, abs=1e-10)
    assert fit.intercept == pytest.approx(np.log10(7.0), abs=1e-10)
    assert fit.r_squared >= 1.0 - 1e-12
    assert fit.clean


def test_fit_decay_tolerates_modulation():
    t = _times()
    values = t ** (-4.0 / 3.0) * (1.0 + 0.05 * np.sin(np.log(t)))
    fit = linflow.fit_decay(list(zip(t, values)))
    assert fit.exponent == pytest.approx(-4.0 / 3.0, abs=0.02)
    assert fit.clean


def test_fit_decay_constant_series():
    t = _times()
    fit = linflow.fit_decay([(ti, 3.0) for ti in t])
    assert fit.exponent == pytest.approx(0.0, abs=1e-12)
    assert fit.r_squared == 1.0


def test_fit_decay_rejects_bad_input():
    with pytest.raises(ValueError, match="insufficient samples"):
        linflow.fit_decay([(1.0, 1.0)] * 7)
    t = _times()
    with pytest.raises(ValueError, match="nonpositive value"):
        linflow.fit_decay([(ti, -1.0) for ti in t])
    with pytest.raises(ValueError, match="must be positive"):
        linflow.fit_decay([(ti - 1.0, 1.0) for ti in t])
    with pytest.raises(ValueError, match="at least one decade"):
        linflow.fit_decay([(ti, 1.0) for ti in np.linspace(1.0, 5.0, 10)])


def test_fit_to_json_round_trip():
    import json

    t = _times()
    fit = linflow.fit_decay(list(zip(t, 2.0 * t**-1.0)))
    blob = json.loads(fit.to_json())
    assert blob["exponent"] == pytest.approx(-1.0, abs=1e-10)
    assert blob["clean"] is True
    assert len(blob["samples"]) == len(t)


# ---------------------------------------------------------------------------
# decay experiments (session fixtures: ~90 s total, shared with acceptance)


def test_degenerate_critical_ray_exponent(degenerate_decay):
    assert degenerate_decay.critical.exponent == pytest.approx(-4.0 / 3.0, abs=0.05)
    assert degenerate_decay.critical.clean


def test_degenerate_fan_matches_critical_law(degenerate_decay):
    # the sup over the ray fan is attained on the critical ray
    assert degenerate_decay.fan.exponent == pytest.approx(-4.0 / 3.0, abs=0.05)
    assert degenerate_decay.ray_speed == pytest.approx(np.sqrt(3) / 2, rel=1e-12)


def test_nondegenerate_exponent(nondegenerate_decay):
    assert nondegenerate_decay.exponent == pytest.approx(-1.5, abs=0.05)
    assert nondegenerate_decay.clean


def test_decay_exponent_separation(degenerate_decay, nondegenerate_decay):
    gap = abs(nondegenerate_decay.exponent - degenerate_decay.critical.exponent)
    assert gap >= 0.1


def test_frequency_growth_octave_scaling():
    out = linflow.frequency_growth_experiment(SIGMA_ONE)
    for pair, ratio in out["octave_ratio_over_expected"].items():
        assert 0.5 <= ratio <= 2.0, (pair, ratio)


# ---------------------------------------------------------------------------
# torus L^p decay


def test_band_wrap_time_value():
    grid = GridSpec(n_per_axis=64, box_length=32 * np.pi)
    wrap = linflow.band_wrap_time(grid, SIGMA_ONE, 0.6, 1.8)
    assert wrap == pytest.approx(32 * np.pi / (2.0 * P_PRIME_06), rel=1e-12)
    with pytest.raises(ValueError, match="band"):
        linflow.band_wrap_time(grid, SIGMA_ONE, 1.8, 0.6)


def test_lp_decay_experiment_smoke():
    grid = GridSpec(n_per_axis=16, box_length=8 * np.pi)
    data = band_limited_field(grid, 0.5, 1.0, seed=6)
    t = np.linspace(1.0, 10.5, 10)
    result = linflow.lp_decay_experiment(SIGMA_ONE, 8.0, data, t)
    assert result.sigma == 1.0
    assert result.lebesgue_p == 8.0
    assert result.beta_target == pytest.approx(-1.125, rel=1e-12)
    assert result.wrap_time == pytest.approx(8 * np.pi / (2.0 * P_PRIME_HALF), rel=1e-12)
    assert len(result.fit.samples) == 10


def test_lp_decay_experiment_rejects_zero_field():
    grid = GridSpec(n_per_axis=16, box_length=8 * np.pi)
    data = SpectralField(grid, np.zeros(grid.shape, dtype=complex))
    with pytest.raises(ValueError, match="identically zero"):
        linflow.lp_decay_experiment(SIGMA_ONE, 8.0, data, np.linspace(1, 10.5, 10))


def test_lp_decay_experiment_rejects_zero_mode():
    grid = GridSpec(n_per_axis=16, box_length=8 * np.pi)
    data = random_real_field(grid, seed=7)
    with pytest.raises(ValueError, match="away from zero frequency"):
        linflow.lp_decay_experiment(SIGMA_ONE, 8.0, data, np.linspace(1, 10.5, 10))


def test_lp_decay_experiment_rejects_wrapped_times():
    grid = GridSpec(n_per_axis=16, box_length=8 * np.pi)
    data = band_limited_field(grid, 0.5, 1.0, seed=8)
    with pytest.raises(ValueError, match="periodic wrap: decay invalid"):
        linflow.lp_decay_experiment(SIGMA_ONE, 8.0, data, np.linspace(1.0, 40.0, 12))


def test_decay_csv_format():
    text = linflow.decay_csv([(1.0, 0.5), (2.0, 0.25)], 1.0, 8, "lp_shell_N=1")
    lines = text.strip().split("\n")
    assert lines[0] == "sigma,p,t,norm_or_amplitude,window_id"
    assert len(lines) == 3
    assert lines[1].startswith("1,8,1,")
    assert lines[1].endswith("lp_shell_N=1")
    blank_p = linflow.decay_csv([(1.0, 0.5)], 1.5, None, "shell")
    assert blank_p.strip().split("\n")[1].startswith("1.5,,")
