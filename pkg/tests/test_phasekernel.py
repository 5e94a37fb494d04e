"""Phase geometry, symbols, bound verifiers, and shell norms."""

import json
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from eulerriesz import phasekernel as pk
from eulerriesz.dispersion import DispersionParams, p_eval, p_prime

SIGMA1 = DispersionParams(sigma=1.0)
SP11 = pk.SignPair(1, 1)
SP12 = pk.SignPair(1, 2)
SP21 = pk.SignPair(2, 1)
SP22 = pk.SignPair(2, 2)

# frozen with 50-digit arithmetic
PHI11_ORACLE = -0.31783724519578224473  # sigma=1, xi=(1,0,0), eta=(0.5,0,0)
KERNEL_ORACLE = -0.00039736946613720932123  # sigma=1, lam=3.25, xi=(2,0,0), eta=(0,1,0)

coord = st.floats(min_value=-8.0, max_value=8.0, allow_nan=False)


def random_triples(rng, count, scales=(0.3, 1.0, 3.0, 10.0), min_mag=0.05):
    out = []
    while len(out) < count:
        xi = rng.standard_normal(3) * rng.choice(scales)
        eta = rng.standard_normal(3) * rng.choice(scales)
        t = pk.FreqTriple.from_vectors(xi, eta)
        if min(t.xi_mag, t.eta_mag, t.diff_mag) >= min_mag:
            out.append(t)
    return out


# ---------------------------------------------------------------------------
# parameter and triple types


def test_sign_pair_validation():
    with pytest.raises(ValueError, match="sign indices"):
        pk.SignPair(0, 1)
    with pytest.raises(ValueError, match="sign indices"):
        pk.SignPair(1, 3)
    assert SP11.sign_diff == -1.0 and SP11.sign_eta == -1.0
    assert SP22.sign_diff == 1.0 and SP22.sign_eta == 1.0


def test_kernel_params_validation():
    with pytest.raises(ValueError):
        pk.KernelParams(sigma=2.5, lam=3.0, k=1.0)
    with pytest.raises(ValueError, match="lam must be positive"):
        pk.KernelParams(sigma=1.0, lam=0.0, k=1.0)
    with pytest.raises(ValueError, match="shell regularity"):
        pk.KernelParams(sigma=1.0, lam=3.0, k=1.6)


def test_kernel_params_summable_boundary():
    # the canonical verification point sits exactly on the boundary
    assert pk.KernelParams(sigma=1.0, lam=3.25, k=1.5).summable
    assert not pk.KernelParams(sigma=1.0, lam=3.2499, k=1.5).summable
    assert pk.KernelParams(sigma=1.0, lam=1.75, k=0.0).summable


def test_freq_triple_requires_3d():
    with pytest.raises(ValueError, match="3-dimensional"):
        pk.FreqTriple((1.0, 0.0), (0.0, 1.0))


def test_law_of_sines_right_triangle():
    t = pk.FreqTriple.from_vectors((3.0, 0.0, 0.0), (0.0, 4.0, 0.0))
    assert t.diff_mag == 5.0
    assert t.law_of_sines_residual() < 1e-14


@given(
    x0=coord, x1=coord, x2=coord, e0=coord, e1=coord, e2=coord
)
@settings(max_examples=150, deadline=None)
def test_law_of_sines_property(x0, x1, x2, e0, e1, e2):
    t = pk.FreqTriple((x0, x1, x2), (e0, e1, e2))
    mags = (t.xi_mag, t.eta_mag, t.diff_mag)
    assume(min(mags) > 0.05 and max(mags) < 30.0)
    sines = (
        math.sin(t.angle_xi_eta),
        math.sin(t.angle_xi_diff),
        math.sin(t.angle_beta),
    )
    assume(min(sines) > 1e-2)
    assert t.law_of_sines_residual() <= 1e-10


# ---------------------------------------------------------------------------
# phase values


def test_phase_11_vanishes_at_eta_equals_xi():
    t = pk.FreqTriple.from_vectors((0.7, -0.2, 1.1), (0.7, -0.2, 1.1))
    assert pk.phase(SP11, SIGMA1, t) == 0.0


def test_phase_11_frozen_oracle():
    t = pk.FreqTriple.from_vectors((1.0, 0.0, 0.0), (0.5, 0.0, 0.0))
    assert abs(pk.phase(SP11, SIGMA1, t) - PHI11_ORACLE) < 5e-16


def test_phase_22_dominates_dispersion():
    rng = np.random.default_rng(0)
    for t in random_triples(rng, 100):
        ph = pk.phase(SP22, SIGMA1, t)
        assert ph >= p_eval(SIGMA1, t.xi_mag) > 0.0


def test_phase_definition_unwinds():
    rng = np.random.default_rng(1)
    for t in random_triples(rng, 50):
        direct = (
            p_eval(SIGMA1, t.xi_mag)
            - p_eval(SIGMA1, t.diff_mag)
            - p_eval(SIGMA1, t.eta_mag)
        )
        assert pk.phase(SP11, SIGMA1, t) == direct


def test_phase_pair_swap_symmetry():
    # Phi_{r,l}(xi, eta) = Phi_{l,r}(xi, xi - eta)
    rng = np.random.default_rng(2)
    for t in random_triples(rng, 50):
        swapped = pk.FreqTriple.from_vectors(t.xi_vec, t.diff_vec)
        for a, b in ((SP12, SP21), (SP11, SP11), (SP22, SP22)):
            lhs = pk.phase(a, SIGMA1, t)
            rhs = pk.phase(b, SIGMA1, swapped)
            assert abs(lhs - rhs) <= 1e-14 * (1.0 + abs(lhs))


def test_only_11_changes_sign():
    rng = np.random.default_rng(3)
    for t in random_triples(rng, 100):
        assert pk.phase(SP22, SIGMA1, t) > 0.0
        assert pk.phase(SP12, SIGMA1, t) > 0.0
        assert pk.phase(SP21, SIGMA1, t) > 0.0
        assert pk.phase(SP11, SIGMA1, t) < 0.0


# ---------------------------------------------------------------------------
# phase derivatives


def test_phase_gradient_matches_finite_differences():
    rng = np.random.default_rng(4)
    pairs = [SP11, SP12, SP21, SP22]
    for i, t in enumerate(random_triples(rng, 500)):
        sp = pairs[i % 4]
        for wrt in ("xi", "eta"):
            grad = pk.phase_gradient(sp, SIGMA1, t, wrt=wrt)
            base_xi, base_eta = t.xi_vec, t.eta_vec
            scale = max(t.xi_mag if wrt == "xi" else t.eta_mag, 1.0)
            h = 1e-6 * scale
            fd = np.zeros(3)
            for j in range(3):
                step = np.zeros(3)
                step[j] = h
                if wrt == "xi":
                    hi = pk.FreqTriple.from_vectors(base_xi + step, base_eta)
                    lo = pk.FreqTriple.from_vectors(base_xi - step, base_eta)
                else:
                    hi = pk.FreqTriple.from_vectors(base_xi, base_eta + step)
                    lo = pk.FreqTriple.from_vectors(base_xi, base_eta - step)
                fd[j] = (pk.phase(sp, SIGMA1, hi) - pk.phase(sp, SIGMA1, lo)) / (2 * h)
            denom = max(np.linalg.norm(grad), 1e-8)
            assert np.linalg.norm(fd - grad) / denom <= 1e-6


def test_phase_gradient_collinear_double():
    xi = np.array([0.8, -0.3, 0.5])
    t = pk.FreqTriple.from_vectors(xi, 2.0 * xi)
    r = t.xi_mag
    expected = 2.0 * p_prime(SIGMA1, r) * xi / r
    grad = pk.phase_gradient(SP11, SIGMA1, t, wrt="xi")
    assert np.allclose(grad, expected, rtol=1e-12, atol=0.0)


def test_phase_gradient_vanishes_linearly_in_eta():
    xi = np.array([1.1, -0.4, 0.7])
    eta0 = np.array([0.3, 0.9, -0.5])
    slopes = []
    for t_small in (1e-2, 1e-3, 1e-4):
        trip = pk.FreqTriple.from_vectors(xi, t_small * eta0)
        slopes.append(
            np.linalg.norm(pk.phase_gradient(SP11, SIGMA1, trip, wrt="xi")) / t_small
        )
    assert abs(slopes[1] / slopes[2] - 1.0) <= 2e-2
    assert abs(slopes[0] / slopes[2] - 1.0) <= 2e-1


def test_phase_derivative_singular_errors():
    z = (0.0, 0.0, 0.0)
    x = (1.0, 0.0, 0.0)
    for trip in (
        pk.FreqTriple(x, z),
        pk.FreqTriple(z, x),
        pk.FreqTriple(x, x),  # xi - eta = 0
    ):
        with pytest.raises(ValueError, match="phase derivative singular"):
            pk.phase_gradient(SP11, SIGMA1, trip)
        with pytest.raises(ValueError, match="phase derivative singular"):
            pk.phase_laplacian(SP11, SIGMA1, trip)
    with pytest.raises(ValueError, match="wrt must be"):
        pk.phase_gradient(SP11, SIGMA1, pk.FreqTriple(x, (0.0, 1.0, 0.0)), wrt="z")


def test_phase_laplacian_matches_stencil():
    rng = np.random.default_rng(5)
    for i, t in enumerate(random_triples(rng, 40, min_mag=0.2)):
        sp = (SP11, SP22)[i % 2]
        for wrt in ("xi", "eta"):
            lap = pk.phase_laplacian(sp, SIGMA1, t, wrt=wrt)
            base_xi, base_eta = t.xi_vec, t.eta_vec
            scale = max(t.xi_mag if wrt == "xi" else t.eta_mag, 1.0)
            h = 1e-3 * scale
            center = pk.phase(sp, SIGMA1, t)
            acc = 0.0
            for j in range(3):
                step = np.zeros(3)
                step[j] = h
                if wrt == "xi":
                    hi = pk.FreqTriple.from_vectors(base_xi + step, base_eta)
                    lo = pk.FreqTriple.from_vectors(base_xi - step, base_eta)
                else:
                    hi = pk.FreqTriple.from_vectors(base_xi, base_eta + step)
                    lo = pk.FreqTriple.from_vectors(base_xi, base_eta - step)
                acc += pk.phase(sp, SIGMA1, hi) + pk.phase(sp, SIGMA1, lo) - 2 * center
            stencil = acc / h**2
            assert abs(stencil - lap) <= 1e-4 * max(abs(lap), 1e-6)


# ---------------------------------------------------------------------------
# symbols and kernel


def test_symbol_diagonal_symmetry():
    rng = np.random.default_rng(6)
    for t in random_triples(rng, 60):
        swapped = pk.FreqTriple.from_vectors(t.xi_vec, t.diff_vec)
        for sp in (SP11, SP22):
            a = pk.symbol_m(sp, SIGMA1, t)
            b = pk.symbol_m(sp, SIGMA1, swapped)
            assert abs(a - b) <= 1e-14 * (1.0 + abs(a))


def test_symbol_cross_pair_swap():
    rng = np.random.default_rng(7)
    for t in random_triples(rng, 60):
        swapped = pk.FreqTriple.from_vectors(t.xi_vec, t.diff_vec)
        a = pk.symbol_m(SP12, SIGMA1, swapped)
        b = pk.symbol_m(SP21, SIGMA1, t)
        assert abs(a - b) <= 1e-14 * (1.0 + abs(a))


def test_symbol_perpendicular_isolates_first_piece():
    # xi . eta = 0 kills m1, so mt_11 - mt_22 reduces to m1_swap / 4
    xi = np.array([1.3, 0.0, 0.0])
    eta = np.array([0.0, 0.8, 0.0])
    t = pk.FreqTriple.from_vectors(xi, eta)
    r, w, s = t.xi_mag, t.diff_mag, t.eta_mag
    m1_swap = (
        p_eval(SIGMA1, r)
        * (s / p_eval(SIGMA1, s))
        * (np.dot(xi, xi - eta) / (r * w))
    )
    diff = pk.symbol_m(SP11, SIGMA1, t) - pk.symbol_m(SP22, SIGMA1, t)
    assert abs(diff - m1_swap / 4.0) <= 1e-14


def test_symbol_growth_bound():
    # |mt| <= (p(|xi|) + |xi|) / 4 with the constant fitted over samples
    rng = np.random.default_rng(8)
    worst = 0.0
    for t in random_triples(rng, 20_000, scales=(0.05, 0.5, 2.0, 20.0, 200.0)):
        cap = p_eval(SIGMA1, t.xi_mag) + t.xi_mag
        for sp in (SP11, SP12, SP21, SP22):
            worst = max(worst, abs(pk.symbol_m(sp, SIGMA1, t)) / cap)
    assert worst <= 0.25 * (1.0 + 1e-10)


def test_symbol_degenerate_error():
    with pytest.raises(ValueError, match="symbol degenerate"):
        pk.symbol_m(SP11, SIGMA1, pk.FreqTriple((1.0, 0.0, 0.0), (1.0, 0.0, 0.0)))


def test_kernel_frozen_oracle():
    kp = pk.KernelParams(sigma=1.0, lam=3.25, k=1.5)
    t = pk.FreqTriple.from_vectors((2.0, 0.0, 0.0), (0.0, 1.0, 0.0))
    assert abs(pk.kernel_M(SP11, kp, t) - KERNEL_ORACLE) < 1e-15


def test_kernel_bounded_along_near_resonant_ray():
    kp = pk.KernelParams(sigma=1.0, lam=3.25, k=1.5)
    xi = np.array([1.0, 0.0, 0.0])
    vals = []
    for frac in (0.9, 0.99, 0.999):
        t = pk.FreqTriple.from_vectors(xi, frac * xi)
        vals.append(abs(pk.kernel_M(SP11, kp, t)))
    assert all(np.isfinite(v) and v <= 0.25 for v in vals)
    # approaching the resonance does not inflate the regularized kernel
    assert vals[2] <= vals[0]


def test_kernel_22_pointwise_bound():
    kp = pk.KernelParams(sigma=1.0, lam=3.25, k=1.5)
    a = (2.0 - kp.sigma) / 2.0
    rng = np.random.default_rng(9)
    for t in random_triples(rng, 200):
        cap = (t.xi_mag * t.eta_mag * t.diff_mag) ** a / p_eval(SIGMA1, t.xi_mag)
        assert abs(pk.kernel_M(SP22, kp, t)) <= cap * (1.0 + 1e-12)


def test_kernel_degenerate_and_resonant_errors():
    kp = pk.KernelParams(sigma=1.0, lam=3.25, k=1.5)
    with pytest.raises(ValueError, match="kernel degenerate"):
        pk.kernel_M(SP11, kp, pk.FreqTriple((1.0, 0.0, 0.0), (0.0, 0.0, 0.0)))
    # collinear pair whose rounded magnitudes cancel the phase below the guard
    near = pk.FreqTriple.from_vectors((1.0, 0.0, 0.0), (1e-28, 0.0, 0.0))
    with pytest.raises(ValueError, match="on resonance set"):
        pk.kernel_M(SP11, kp, near)


# ---------------------------------------------------------------------------
# sampled bound verifiers


def test_phase_lower_bound_smoke():
    params = DispersionParams(sigma=0.5)
    for regime in ("b_large", "c_small"):
        rep = pk.verify_phase_lower_bound(params, regime, n_samples=2 * 10**4, seed=0)
        assert rep.kind == "min"
        assert rep.extremal_ratio > 0.0
        assert rep.passed
        payload = json.loads(rep.to_json())
        assert payload["bound_id"] == f"phase_lower_{regime}"
        assert payload["passed"] is True
        assert set(payload["argext"]) == {"a_mag", "b_mag", "c_mag", "cos_ac", "cos_ab"}


def test_phase_lower_bound_regime_validation():
    with pytest.raises(ValueError, match="regime must be"):
        pk.verify_phase_lower_bound(SIGMA1, "mid", n_samples=10)


def test_phase_lower_bound_collinear_double_is_admissible():
    # a = 2c with b = c sits on the constraint boundary |c| = min(|a|, |b|)
    # and has a strictly positive ratio by strict subadditivity; the sampled
    # minimum approaches this corner from above
    params = DispersionParams(sigma=0.5)
    lhs = abs(p_eval(params, 2.0) - 2.0 * p_eval(params, 1.0))
    rhs = 1.0 / (1.0 + 2.0**params.sigma)
    corner = lhs / rhs
    assert corner > 0.0
    rep = pk.verify_phase_lower_bound(params, "b_large", n_samples=2 * 10**4, seed=1)
    assert rep.extremal_ratio >= corner * (1.0 - 1e-12)
    assert rep.extremal_ratio <= 2.0 * corner


def test_derivative_bounds_all_pass_at_module_scale():
    reps = pk.verify_derivative_bounds(SIGMA1, n_samples=3 * 10**4, seed=0)
    assert [r.bound_id for r in reps] == list(pk._DERIV_BOUND_IDS)
    for rep in reps:
        assert rep.passed, rep.to_json()
    ident = {r.bound_id: r for r in reps}["diag_angle_identity"]
    assert ident.kind == "identity"
    assert ident.extremal_ratio < 1e-10


def test_derivative_bounds_subset_and_validation():
    reps = pk.verify_derivative_bounds(SIGMA1, n_samples=10**4, bounds=["lap_eta_low"])
    assert len(reps) == 1 and reps[0].bound_id == "lap_eta_low"
    with pytest.raises(ValueError, match="unknown bound ids"):
        pk.verify_derivative_bounds(SIGMA1, n_samples=10, bounds=["lap_eta_lo"])


def test_bound_reports_are_seed_reproducible():
    kwargs = dict(n_samples=2 * 10**4, seed=5, bounds=["grad_xi_high", "lap_eta_high"])
    first = pk.verify_derivative_bounds(SIGMA1, **kwargs)
    second = pk.verify_derivative_bounds(SIGMA1, **kwargs)
    for a, b in zip(first, second):
        assert a.extremal_ratio == b.extremal_ratio
        assert a.checkpoint_ratio == b.checkpoint_ratio
        assert a.argext == b.argext


def test_ratio_scan_unsatisfiable_sampler():
    def never(rng, count):
        return np.array([]), {}

    with pytest.raises(ValueError, match="sampler unable to satisfy constraints"):
        pk._ratio_scan(never, 100, seed=0, reduce_min=True)


def test_bound_report_pass_semantics():
    base = dict(n_samples=1, seed=0, checkpoint_ratio=1.0, argext={})
    good = pk.BoundReport("x", "max", extremal_ratio=1.0, stability_delta=0.01, **base)
    assert good.passed
    drifty = pk.BoundReport("x", "max", extremal_ratio=1.0, stability_delta=0.2, **base)
    assert not drifty.passed
    negative = pk.BoundReport("x", "min", extremal_ratio=-0.1, stability_delta=0.0, **base)
    assert not negative.passed
    infinite = pk.BoundReport("x", "max", extremal_ratio=np.inf, stability_delta=0.0, **base)
    assert not infinite.passed


# ---------------------------------------------------------------------------
# dyadic shell norms


KP_CANON = pk.KernelParams(sigma=1.0, lam=3.25, k=1.5)


def test_dyadic_norm_input_validation():
    with pytest.raises(ValueError, match="power of two"):
        pk.dyadic_kernel_norm(SP11, KP_CANON, 3)
    lean = pk.KernelParams(sigma=1.0, lam=2.0, k=1.5)
    with pytest.raises(ValueError, match="octave summability"):
        pk.dyadic_kernel_norm(SP11, lean, 4)
    with pytest.raises(ValueError, match="direction"):
        pk.dyadic_kernel_norm(SP11, KP_CANON, 4, direction="diagonal")


def test_dyadic_norm_k_zero_is_plain_shell_l2():
    kp0 = pk.KernelParams(sigma=1.0, lam=2.0, k=0.0)
    res = pk.dyadic_kernel_norm(SP11, kp0, 4)
    assert res.value == res.l2_part


def test_dyadic_norm_smoke_and_determinism():
    res = pk.dyadic_kernel_norm(SP11, KP_CANON, 4, direction="eta_shells")
    assert res.value > 0.0
    assert res.converged and res.quad_delta <= 0.05
    again = pk.dyadic_kernel_norm(SP11, KP_CANON, 4, direction="eta_shells")
    assert again.value == res.value


def test_dyadic_norm_explicit_probes():
    res = pk.dyadic_kernel_norm(
        SP11, KP_CANON, 4, xi_probe_set=[2.0, 3.0, 4.0, 6.0], refine_rounds=1
    )
    assert np.isfinite(res.value) and res.value > 0.0
    assert res.probes_evaluated >= 4


def test_kernel_norm_summary_decays_per_octave():
    summ = pk.kernel_norm_summary(SP11, KP_CANON, octaves=(1, 2, 4, 8))
    for direction in ("eta_shells", "xi_shells"):
        ratios = summ.octave_ratios(direction)
        assert all(r <= 0.9 for _, r in ratios)
        assert summ.tail_fraction(direction) < 0.05
    assert summ.all_converged
    csv = summ.to_csv()
    header = csv.splitlines()[0]
    assert header == "r,l,direction,N,k,lambda,value,argmax_magnitude,quad_delta"
    assert len(csv.splitlines()) == 1 + 2 * 4
    payload = json.loads(summ.to_json())
    assert set(payload["directions"]) == {"eta_shells", "xi_shells"}
