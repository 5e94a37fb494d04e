"""Time integration of the fluid system and of its profile form.

Two fourth-order exponential integrators advance the same dynamics.  The
profile scheme runs ETDRK4 on the diagonalized complex variable, with the
stiff linear rotation handled exactly per mode and the phi-function
coefficients averaged over a complex contour.  The primitive scheme runs an
integrating-factor RK4 on the (density, longitudinal velocity) pair, whose
linear block has a closed-form matrix exponential.  Agreement of the two at
finite time is the standing cross-check that the profile equation really is
the transformed fluid system.

The velocity tendency is a single spectral gradient, so irrotational data
stays irrotational to rounding and the monitored curl sits at machine
level.  Density disturbances are taken mean-free throughout: the fractional
force carries no zero-mode value on the torus, and every density tendency
is a divergence, so the zero mode is conserved exactly.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .config import Defaults, Tolerances
from .dispersion import DispersionParams, p_eval, p_prime
from .linflow import fit_decay
from .normalform import AlphaProfile, AlphaTrajectory, alpha_from_state
from .normalform import quadratic_Q
from .spectral import (
    GridSpec,
    NormReport,
    SpectralField,
    forward_transform,
    fractional_power,
    inverse_transform,
    l2_norm_coefficients,
    mollifier_b,
    norm_suite,
)


# ---------------------------------------------------------------------------
# domain types


def _require_mean_zero(f: SpectralField, what: str) -> None:
    scale = float(np.max(np.abs(f.coefficients)))
    if scale > 0.0 and abs(f.zero_mode) > Tolerances.hermitian * scale:
        raise ValueError(f"{what} must be mean-zero")


def curl_norm(u) -> float:
    """L^2 norm of the spectral curl of a velocity triple."""
    xi = u[0].grid.xi_grids
    total = 0.0
    for j, k in ((1, 2), (2, 0), (0, 1)):
        comp = xi[j] * u[k].coefficients - xi[k] * u[j].coefficients
        total += float(np.sum(np.abs(comp) ** 2))
    return float(np.sqrt(u[0].grid.volume * total))


@dataclass(frozen=True)
class FluidState:
    """Mean-free density disturbance and real velocity, guarded from vacuum.

    Construction rejects densities whose sup reaches the hard vacuum
    threshold and warns when the norm-equivalence regime (sup below one
    half) is left.
    """

    grid: GridSpec
    n: SpectralField
    u: tuple
    density_sup: float = field(init=False, compare=False, default=0.0)

    def __post_init__(self):
        object.__setattr__(self, "u", tuple(self.u))
        if len(self.u) != 3:
            raise ValueError("velocity must have three components")
        for f in (self.n, *self.u):
            if f.grid != self.grid:
                raise ValueError("state fields live on a different grid")
            if not f.real_valued:
                raise ValueError("state fields must be real-valued")
        _require_mean_zero(self.n, "the density disturbance")
        for j, comp in enumerate(self.u):
            _require_mean_zero(comp, f"velocity component {j}")
        sup = float(np.max(np.abs(self.n.to_physical())))
        object.__setattr__(self, "density_sup", sup)
        if sup >= Tolerances.vacuum_hard:
            raise ValueError(
                f"vacuum crossing: density disturbance reaches {sup:.3f}"
            )
        if sup >= Tolerances.vacuum_soft:
            warnings.warn(
                f"density disturbance at {sup:.3f} leaves the norm-equivalence "
                "regime",
                RuntimeWarning,
                stacklevel=2,
            )

    def component_fields(self) -> list:
        return [self.n, *self.u]

    def velocity_l2(self) -> float:
        return float(np.sqrt(sum(l2_norm_coefficients(c) ** 2 for c in self.u)))


@dataclass(frozen=True)
class StateTendency:
    """State-shaped time derivative; carries none of the state invariants."""

    grid: GridSpec
    n: SpectralField
    u: tuple


_SCHEMES = ("etdrk4_alpha", "ifrk4_primitive")


@dataclass(frozen=True)
class SolverConfig:
    scheme: str
    sigma: float
    dt: float
    t_end: float
    monitor_stride: int = 1
    sobolev_s: int = Defaults.sobolev_s
    lebesgue_p: float | None = None
    store_trajectory: bool = False

    def __post_init__(self):
        if self.scheme not in _SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; pick from {_SCHEMES}")
        DispersionParams(self.sigma)
        if self.dt <= 0.0 or self.t_end <= 0.0:
            raise ValueError("dt and t_end must be positive")
        if self.monitor_stride < 1:
            raise ValueError("monitor_stride must be at least 1")
        steps = round(self.t_end / self.dt)
        if steps < 1 or abs(steps * self.dt - self.t_end) > 1e-9 * self.t_end:
            raise ValueError("t_end must be a whole number of time steps")

    @property
    def steps(self) -> int:
        return round(self.t_end / self.dt)

    def oscillation_resolution(self, grid: GridSpec) -> float:
        """dt times the fastest kept linear frequency; accuracy thins above 1."""
        params = DispersionParams(self.sigma)
        r = grid.xi_norm[grid.dealias_mask]
        return self.dt * float(np.max(p_eval(params, r)))


# ---------------------------------------------------------------------------
# initial data


def _check_band(grid: GridSpec, sigma: float, eps: float, band: tuple):
    r_min, r_max = float(band[0]), float(band[1])
    if not 0.0 < r_min < r_max:
        raise ValueError("band must satisfy 0 < r_min < r_max")
    if r_max >= grid.nyquist_radius:
        raise ValueError("band must stay below the Nyquist radius")
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    DispersionParams(sigma)
    return r_min, r_max


def _normalized_state(grid, sigma, n_hat, phi_hat, eps, s, lebesgue_p) -> FluidState:
    """Assemble (n, grad phi) and rescale both so the Y-norm equals eps."""
    # shrink before the first construction so the vacuum guard cannot trip on
    # the unnormalized draw
    pre = 1e-3 / max(float(np.max(np.abs(inverse_transform(grid, n_hat).real))), 1e-30)
    n = SpectralField(grid, pre * n_hat, real_valued=True)
    u = tuple(
        SpectralField(grid, 1j * grid.xi_grids[j] * pre * phi_hat, real_valued=True)
        for j in range(3)
    )
    state = FluidState(grid=grid, n=n, u=u)
    y = norm_suite(state, sigma, s=s, lebesgue_p=lebesgue_p).values["Y"]
    factor = eps / y
    return FluidState(
        grid=grid,
        n=n.scaled(factor),
        u=tuple(c.scaled(factor) for c in u),
    )


def init_irrotational(
    grid: GridSpec,
    sigma: float,
    eps: float,
    band: tuple,
    seed: int,
    s: int = Defaults.sobolev_s,
    lebesgue_p: float | None = None,
) -> FluidState:
    """Band-limited random state with an exact-gradient velocity.

    Both fields draw white noise, keep only the frequency shell, and are
    rescaled together so the energy-space norm of the bundle equals eps.
    """
    r_min, r_max = _check_band(grid, sigma, eps, band)
    shell = grid.dealias_mask & (grid.xi_norm >= r_min) & (grid.xi_norm <= r_max)
    if not np.any(shell):
        raise ValueError("empty band: no lattice modes between r_min and r_max")
    rng = np.random.default_rng(seed)
    n_hat = np.where(shell, forward_transform(grid, rng.standard_normal(grid.shape)), 0.0)
    phi_hat = np.where(shell, forward_transform(grid, rng.standard_normal(grid.shape)), 0.0)
    return _normalized_state(grid, sigma, n_hat, phi_hat, eps, s, lebesgue_p)


def init_packet(
    grid: GridSpec,
    sigma: float,
    eps: float,
    band: tuple,
    s: int = Defaults.sobolev_s,
    lebesgue_p: float | None = None,
) -> FluidState:
    """Coherent wave packet: a smooth radial spectral bump, centered in the box.

    Every kept mode carries the same phase reference at the box center, so
    the fields concentrate there and the linear flow spreads them outward.
    This is the configuration whose Lebesgue norms genuinely decay on the
    torus; random-phase data is statistically invariant under the half-wave
    flow, so its W^{s,p} norms stay flat and no envelope can be measured.
    """
    r_min, r_max = _check_band(grid, sigma, eps, band)
    arg = (2.0 * grid.xi_norm - (r_min + r_max)) / (r_max - r_min)
    amp = np.where(grid.dealias_mask, mollifier_b(arg), 0.0)
    if not np.any(amp > 0.0):
        raise ValueError("empty band: no lattice modes between r_min and r_max")
    center = 0.5 * grid.box_length
    shift = np.exp(-1j * center * sum(grid.xi_grids))
    n_hat = amp * shift
    r_safe = np.where(grid.xi_norm > 0.0, grid.xi_norm, 1.0)
    phi_hat = (amp / r_safe) * shift
    return _normalized_state(grid, sigma, n_hat, phi_hat, eps, s, lebesgue_p)


# ---------------------------------------------------------------------------
# primitive right-hand side


def rhs_primitive(state, sigma: float) -> StateTendency:
    """Full pseudospectral tendency of the symmetrized system.

    The velocity tendency is the gradient of one combined potential
    (density head, fractional force antiderivative, and kinetic/pressure
    quadratic), so its curl vanishes identically.
    """
    grid = state.grid
    params = DispersionParams(sigma)
    n_phys = state.n.to_physical()
    if float(np.max(np.abs(n_phys))) >= 1.0:
        raise ValueError("vacuum crossing")
    u_phys = [c.to_physical() for c in state.u]
    xi = grid.xi_grids
    mask = grid.dealias_mask
    flux = [
        np.where(mask, forward_transform(grid, n_phys * u_phys[j]), 0.0)
        for j in range(3)
    ]
    q_hat = np.where(
        mask,
        forward_transform(grid, 0.5 * (n_phys * n_phys + sum(c * c for c in u_phys))),
        0.0,
    )
    n_dot = -sum(1j * xi[j] * (state.u[j].coefficients + flux[j]) for j in range(3))
    riesz = fractional_power(-sigma).build(grid)
    potential = (1.0 + riesz) * state.n.coefficients + q_hat
    u_dot = tuple(
        SpectralField(grid, -1j * xi[j] * potential, real_valued=True)
        for j in range(3)
    )
    return StateTendency(
        grid=grid, n=SpectralField(grid, n_dot, real_valued=True), u=u_dot
    )


def rhs_linear(state, sigma: float) -> StateTendency:
    """Linearized tendency, for quadratic-remainder measurements."""
    grid = state.grid
    xi = grid.xi_grids
    riesz = fractional_power(-sigma).build(grid)
    n_dot = -sum(1j * xi[j] * state.u[j].coefficients for j in range(3))
    head = (1.0 + riesz) * state.n.coefficients
    u_dot = tuple(
        SpectralField(grid, -1j * xi[j] * head, real_valued=True) for j in range(3)
    )
    return StateTendency(
        grid=grid, n=SpectralField(grid, n_dot, real_valued=True), u=u_dot
    )


# ---------------------------------------------------------------------------
# ETDRK4 on the profile


@dataclass(frozen=True)
class _EtdPlan:
    e_full: np.ndarray
    e_half: np.ndarray
    q_half: np.ndarray
    f1: np.ndarray
    f2: np.ndarray
    f3: np.ndarray


@lru_cache(maxsize=4)
def _etd_plan(grid: GridSpec, sigma: float, dt: float) -> _EtdPlan:
    """Exponential coefficients with contour-averaged phi functions.

    Direct formulas for the phi functions cancel catastrophically as
    dt*p -> 0; averaging the same expressions over a unit circle around
    each lattice eigenvalue keeps every coefficient accurate.
    """
    params = DispersionParams(sigma)
    z = 1j * dt * p_eval(params, grid.xi_norm)
    count = Defaults.etd_contour_points
    q = np.zeros(grid.shape, dtype=complex)
    f1 = np.zeros_like(q)
    f2 = np.zeros_like(q)
    f3 = np.zeros_like(q)
    for j in range(count):
        zeta = z + np.exp(2j * np.pi * (j + 0.5) / count)
        ez = np.exp(zeta)
        zeta3 = zeta**3
        q += (np.exp(0.5 * zeta) - 1.0) / zeta
        f1 += (-4.0 - zeta + ez * (4.0 - 3.0 * zeta + zeta * zeta)) / zeta3
        f2 += (2.0 + zeta + ez * (zeta - 2.0)) / zeta3
        f3 += (-4.0 - 3.0 * zeta - zeta * zeta + ez * (4.0 - zeta)) / zeta3
    scale = dt / count
    plan = _EtdPlan(
        e_full=np.exp(z),
        e_half=np.exp(0.5 * z),
        q_half=q * scale,
        f1=f1 * scale,
        f2=f2 * scale,
        f3=f3 * scale,
    )
    for arr in (plan.e_full, plan.e_half, plan.q_half, plan.f1, plan.f2, plan.f3):
        arr.setflags(write=False)
    return plan


def _etdrk4_step(coef: np.ndarray, plan: _EtdPlan, nonlinear) -> np.ndarray:
    nv = nonlinear(coef)
    a = plan.e_half * coef + plan.q_half * nv
    na = nonlinear(a)
    b = plan.e_half * coef + plan.q_half * na
    nb = nonlinear(b)
    c = plan.e_half * a + plan.q_half * (2.0 * nb - nv)
    nc = nonlinear(c)
    return plan.e_full * coef + plan.f1 * nv + 2.0 * plan.f2 * (na + nb) + plan.f3 * nc


def _profile_nonlinear(grid: GridSpec, sigma: float):
    def nonlinear(coef: np.ndarray) -> np.ndarray:
        prof = AlphaProfile(grid=grid, alpha=SpectralField(grid, coef), sigma=sigma)
        return quadratic_Q(prof).coefficients

    return nonlinear


# ---------------------------------------------------------------------------
# integrating-factor RK4 on the primitive pair


@dataclass(frozen=True)
class _RotationPlan:
    """Closed-form exp of the linear block for a full and a half step.

    The pair (density, longitudinal velocity amplitude) rotates with
    frequency p per mode; the generator squares to -p^2 times the identity,
    so the exponential is cosine plus a scaled generator.
    """

    cos_full: np.ndarray
    rs_full: np.ndarray  # (r/p) sin(p dt): density pickup from the velocity
    ps_full: np.ndarray  # (p/r) sin(p dt): velocity pickup from the density
    cos_half: np.ndarray
    rs_half: np.ndarray
    ps_half: np.ndarray


def _rotation_pieces(params, r, tau):
    p = p_eval(params, r)
    safe_p = np.where(p > 0.0, p, 1.0)
    safe_r = np.where(r > 0.0, r, 1.0)
    c = np.cos(p * tau)
    rs = np.where(p > 0.0, (r / safe_p) * np.sin(p * tau), 0.0)
    ps = np.where(r > 0.0, (p / safe_r) * np.sin(p * tau), 0.0)
    return c, rs, ps


@lru_cache(maxsize=4)
def _rotation_plan(grid: GridSpec, sigma: float, dt: float) -> _RotationPlan:
    params = DispersionParams(sigma)
    r = grid.xi_norm
    cf, rsf, psf = _rotation_pieces(params, r, dt)
    ch, rsh, psh = _rotation_pieces(params, r, 0.5 * dt)
    plan = _RotationPlan(cf, rsf, psf, ch, rsh, psh)
    for arr in (cf, rsf, psf, ch, rsh, psh):
        arr.setflags(write=False)
    return plan


def _rotate(n, w, c, rs, ps):
    return c * n - 1j * rs * w, -1j * ps * n + c * w


def _direction_arrays(grid: GridSpec) -> list:
    r = grid.xi_norm
    safe = np.where(r > 0.0, r, 1.0)
    return [np.where(r > 0.0, grid.xi_grids[j] / safe, 0.0) for j in range(3)]


def _primitive_nonlinear(grid: GridSpec, sigma: float, forcing=None):
    """Quadratic tendency in the (density, longitudinal amplitude) pair."""
    xi = grid.xi_grids
    mask = grid.dealias_mask
    r = grid.xi_norm
    dirs = _direction_arrays(grid)

    def nonlinear(t, n_hat, w_hat):
        n_phys = inverse_transform(grid, n_hat).real
        u_phys = [inverse_transform(grid, d * w_hat).real for d in dirs]
        dn = -sum(
            1j * xi[j] * np.where(mask, forward_transform(grid, n_phys * u_phys[j]), 0.0)
            for j in range(3)
        )
        q_hat = np.where(
            mask,
            forward_transform(
                grid, 0.5 * (n_phys * n_phys + sum(c * c for c in u_phys))
            ),
            0.0,
        )
        dw = -1j * r * q_hat
        if forcing is not None:
            fn, fw = forcing(t)
            dn = dn + fn
            dw = dw + fw
        return dn, dw

    return nonlinear


def _ifrk4_step(n, w, t, dt, plan: _RotationPlan, nonlinear):
    half = (plan.cos_half, plan.rs_half, plan.ps_half)
    full = (plan.cos_full, plan.rs_full, plan.ps_full)
    k1n, k1w = nonlinear(t, n, w)
    nh, wh = _rotate(n, w, *half)
    r1n, r1w = _rotate(k1n, k1w, *half)
    k2n, k2w = nonlinear(t + 0.5 * dt, nh + 0.5 * dt * r1n, wh + 0.5 * dt * r1w)
    k3n, k3w = nonlinear(t + 0.5 * dt, nh + 0.5 * dt * k2n, wh + 0.5 * dt * k2w)
    nf, wf = _rotate(n, w, *full)
    r3n, r3w = _rotate(k3n, k3w, *half)
    k4n, k4w = nonlinear(t + dt, nf + dt * r3n, wf + dt * r3w)
    g1n, g1w = _rotate(k1n, k1w, *full)
    g2n, g2w = _rotate(k2n, k2w, *half)
    g3n, g3w = _rotate(k3n, k3w, *half)
    n_next = nf + (dt / 6.0) * (g1n + 2.0 * (g2n + g3n) + k4n)
    w_next = wf + (dt / 6.0) * (g1w + 2.0 * (g2w + g3w) + k4w)
    return n_next, w_next


def _longitudinal_amplitude(state) -> np.ndarray:
    dirs = _direction_arrays(state.grid)
    return sum(dirs[j] * state.u[j].coefficients for j in range(3))


def _state_from_pair(grid: GridSpec, n_hat, w_hat) -> FluidState:
    dirs = _direction_arrays(grid)
    n = SpectralField(grid, n_hat.copy(), real_valued=True)
    u = tuple(
        SpectralField(grid, dirs[j] * w_hat, real_valued=True) for j in range(3)
    )
    return FluidState(grid=grid, n=n, u=u)


# ---------------------------------------------------------------------------
# single public step


def step(obj, config: SolverConfig):
    """One time step of the configured scheme; returns the input's kind."""
    if isinstance(obj, AlphaProfile):
        if obj.sigma != config.sigma:
            raise ValueError("profile and configuration disagree on sigma")
        if config.scheme == "etdrk4_alpha":
            return _step_profile(obj, config)
        from .normalform import state_from_alpha

        stepped = _step_state(state_from_alpha(obj), config)
        return alpha_from_state(stepped, config.sigma)
    if config.scheme == "ifrk4_primitive":
        return _step_state(obj, config)
    from .normalform import state_from_alpha

    profile = alpha_from_state(obj, config.sigma)
    return state_from_alpha(_step_profile(profile, config))


def _step_profile(profile: AlphaProfile, config: SolverConfig) -> AlphaProfile:
    grid = profile.grid
    plan = _etd_plan(grid, config.sigma, config.dt)
    coef = _etdrk4_step(
        profile.alpha.coefficients, plan, _profile_nonlinear(grid, config.sigma)
    )
    if not np.all(np.isfinite(coef)):
        raise ValueError("non-finite profile after one step")
    return AlphaProfile(grid=grid, alpha=SpectralField(grid, coef), sigma=config.sigma)


def _step_state(state, config: SolverConfig) -> FluidState:
    grid = state.grid
    _require_irrotational(state)
    plan = _rotation_plan(grid, config.sigma, config.dt)
    n_hat = state.n.coefficients
    w_hat = _longitudinal_amplitude(state)
    n_hat, w_hat = _ifrk4_step(
        n_hat, w_hat, 0.0, config.dt, plan, _primitive_nonlinear(grid, config.sigma)
    )
    if not (np.all(np.isfinite(n_hat)) and np.all(np.isfinite(w_hat))):
        raise ValueError("non-finite state after one step")
    return _state_from_pair(grid, n_hat, w_hat)


def _require_irrotational(state) -> None:
    u_norm = state.velocity_l2() if isinstance(state, FluidState) else float(
        np.sqrt(sum(l2_norm_coefficients(c) ** 2 for c in state.u))
    )
    if u_norm > 0.0 and curl_norm(state.u) > Tolerances.curl_input_rel * u_norm:
        raise ValueError("rotational component would be discarded")


# ---------------------------------------------------------------------------
# wrap time


def wrap_time(grid: GridSpec, sigma: float, band: tuple) -> float:
    """Box length over twice the fastest group speed on the band.

    The group speed has at most one interior critical point and it is a
    minimum (its derivative changes sign only at the degenerate radius), so
    the maximum over a closed band sits at an endpoint.
    """
    r_min, r_max = float(band[0]), float(band[1])
    if r_min <= 0.0:
        raise ValueError("unbounded group velocity: the band touches r = 0")
    if r_max < r_min:
        raise ValueError("band must satisfy r_min <= r_max")
    params = DispersionParams(sigma)
    speed = max(float(p_prime(params, r_min)), float(p_prime(params, r_max)))
    return float(grid.box_length / (2.0 * speed))


def _active_band(state) -> tuple | None:
    grid = state.grid
    stack = sum(np.abs(f.coefficients) for f in (state.n, *state.u))
    live = stack > 1e-14 * float(np.max(stack)) if np.max(stack) > 0 else stack > 0
    live &= grid.xi_norm > 0.0
    if not np.any(live):
        return None
    r = grid.xi_norm[live]
    return float(np.min(r)), float(np.max(r))


# ---------------------------------------------------------------------------
# run record


@dataclass(frozen=True)
class RunRecord:
    """Monitored time series of one simulation plus its validity window."""

    reports: tuple
    mass: np.ndarray
    curl: np.ndarray
    velocity_l2: np.ndarray
    wrap_time: float
    wrap_window_exceeded: bool
    oscillation_resolution: float
    scheme: str
    sigma: float
    dt: float
    final_state: FluidState
    trajectory: AlphaTrajectory | None = None

    def __post_init__(self):
        for name in ("mass", "curl", "velocity_l2"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        object.__setattr__(self, "reports", tuple(self.reports))
        lengths = {len(self.reports), len(self.mass), len(self.curl), len(self.velocity_l2)}
        if len(lengths) != 1:
            raise ValueError("monitor series have mismatched lengths")
        if not self.reports:
            raise ValueError("a run records at least its initial state")

    @property
    def times(self) -> np.ndarray:
        return np.array([rep.time for rep in self.reports])

    def series(self, key: str) -> np.ndarray:
        return np.array([rep.values[key] for rep in self.reports])

    def verdicts(self) -> dict:
        mass_drift = float(np.max(np.abs(self.mass - self.mass[0])))
        vel_floor = np.where(self.velocity_l2 > 0.0, self.velocity_l2, 1.0)
        curl_rel = float(np.max(self.curl / vel_floor))
        x = self.series("X")
        x_ratio = float(np.max(x) / x[0]) if x[0] > 0.0 else 0.0
        return {
            "mass_drift": mass_drift,
            "mass_conserved": mass_drift <= Tolerances.mass_drift,
            "curl_rel_max": curl_rel,
            "curl_preserved": curl_rel <= Tolerances.curl_rel,
            "x_ratio_max": x_ratio,
            "x_bounded": x_ratio <= Tolerances.x_surrogate_factor,
            "oscillation_resolution": self.oscillation_resolution,
            "wrap_window_exceeded": self.wrap_window_exceeded,
        }

    def decay_fit(self, key: str = "Wsp") -> dict:
        """Power-law fit of one monitored norm on the post-transient window."""
        t = self.times
        window = (t >= Tolerances.fit_t_start) & (t <= self.wrap_time)
        samples = list(zip(t[window], self.series(key)[window]))
        try:
            fitted = fit_decay(samples)
        except ValueError as err:
            return {"key": key, "error": str(err)}
        return {
            "key": key,
            "exponent": fitted.exponent,
            "r_squared": fitted.r_squared,
            "window": [float(t[window][0]), float(t[window][-1])],
        }

    def to_csv(self) -> str:
        keys = sorted(self.reports[0].values)
        lines = [",".join(["t", "mass", "curl", "velocity_l2"] + keys)]
        for rep, m, c, v in zip(self.reports, self.mass, self.curl, self.velocity_l2):
            row = [f"{rep.time:.12g}", f"{m:.12e}", f"{c:.12e}", f"{v:.12e}"]
            row += [f"{rep.values[k]:.12e}" for k in keys]
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"

    def summary_json(self) -> str:
        rep = self.reports[0]
        payload = {
            "scheme": self.scheme,
            "sigma": self.sigma,
            "dt": self.dt,
            "t_end": float(self.times[-1]),
            "grid": rep.grid.n_per_axis,
            "box_length": rep.grid.box_length,
            "s": rep.s,
            "lebesgue_p": rep.lebesgue_p,
            "beta": rep.beta,
            "wrap_time": self.wrap_time,
            "verdicts": self.verdicts(),
            "decay_fit": self.decay_fit(),
        }
        return json.dumps(payload, indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# run loop


def run(config: SolverConfig, initial: FluidState) -> RunRecord:
    """Advance the initial state to t_end, recording monitors on a stride.

    Monitors always include the initial and final instants.  The wrap time
    comes from the initial state's own spectral support; runs past it are
    allowed but flagged, because wave wrap-around contaminates decay
    measurements beyond that point.
    """
    grid = initial.grid
    osc = config.oscillation_resolution(grid)
    if osc > Tolerances.oscillation_warn:
        warnings.warn(
            f"oscillation resolution dt*max|p| = {osc:.2f} exceeds 1; "
            "accuracy degrades",
            RuntimeWarning,
            stacklevel=2,
        )
    band = _active_band(initial)
    wrap = wrap_time(grid, config.sigma, band) if band else float("inf")
    reports, mass, curl, vel = [], [], [], []

    def monitor(t: float, state: FluidState) -> None:
        reports.append(
            norm_suite(
                state,
                config.sigma,
                s=config.sobolev_s,
                lebesgue_p=config.lebesgue_p,
                weight_n=state.n,
                time=t,
            )
        )
        mass.append(grid.volume * state.n.zero_mode.real)
        curl.append(curl_norm(state.u))
        vel.append(state.velocity_l2())

    monitor(0.0, initial)
    steps = config.steps
    times = []
    profiles = []
    final = initial

    if config.scheme == "etdrk4_alpha":
        prof = alpha_from_state(initial, config.sigma)
        from .normalform import state_from_alpha

        plan = _etd_plan(grid, config.sigma, config.dt)
        nonlinear = _profile_nonlinear(grid, config.sigma)
        if config.store_trajectory:
            times.append(0.0)
            profiles.append(prof)
        coef = prof.alpha.coefficients.copy()
        for i in range(1, steps + 1):
            coef = _etdrk4_step(coef, plan, nonlinear)
            if not np.all(np.isfinite(coef)):
                raise ValueError(f"non-finite state at step {i}")
            if config.store_trajectory or i % config.monitor_stride == 0 or i == steps:
                current = AlphaProfile(
                    grid=grid, alpha=SpectralField(grid, coef.copy()), sigma=config.sigma
                )
                if config.store_trajectory:
                    times.append(i * config.dt)
                    profiles.append(current)
                if i % config.monitor_stride == 0 or i == steps:
                    snapshot = state_from_alpha(current)
                    monitor(i * config.dt, snapshot)
                    final = snapshot
    else:
        if config.store_trajectory:
            raise ValueError("trajectory storage requires the profile scheme")
        _require_irrotational(initial)
        plan = _rotation_plan(grid, config.sigma, config.dt)
        nonlinear = _primitive_nonlinear(grid, config.sigma)
        n_hat = initial.n.coefficients.copy()
        w_hat = _longitudinal_amplitude(initial)
        for i in range(1, steps + 1):
            n_hat, w_hat = _ifrk4_step(
                n_hat, w_hat, (i - 1) * config.dt, config.dt, plan, nonlinear
            )
            if not (np.all(np.isfinite(n_hat)) and np.all(np.isfinite(w_hat))):
                raise ValueError(f"non-finite state at step {i}")
            if i % config.monitor_stride == 0 or i == steps:
                snapshot = _state_from_pair(grid, n_hat, w_hat)
                monitor(i * config.dt, snapshot)
                final = snapshot

    trajectory = None
    if config.store_trajectory:
        trajectory = AlphaTrajectory(times=tuple(times), profiles=tuple(profiles))
    return RunRecord(
        reports=tuple(reports),
        mass=np.array(mass),
        curl=np.array(curl),
        velocity_l2=np.array(vel),
        wrap_time=wrap,
        wrap_window_exceeded=config.t_end > wrap,
        oscillation_resolution=osc,
        scheme=config.scheme,
        sigma=config.sigma,
        dt=config.dt,
        final_state=final,
        trajectory=trajectory,
    )


# ---------------------------------------------------------------------------
# manufactured-solution refinement


def mms_convergence(
    grid: GridSpec,
    sigma: float,
    dts: tuple = (8e-3, 4e-3, 2e-3),
    t_end: float = 1.0,
) -> dict:
    """Global-order measurement against a closed-form forced solution.

    The target density and potential live on one wave vector, so their
    quadratic products live on the zero mode and the doubled vector and the
    forcing that makes them solve the forced system is exact.  The forced
    primitive integrator must recover the target at its design order.
    """
    params = DispersionParams(sigma)
    fund = grid.fundamental
    k_int = (1, 1, 0)
    two_k = tuple(2 * c for c in k_int)
    if not (grid.dealias_mask[k_int] and grid.dealias_mask[two_k]):
        raise ValueError("manufactured modes fall outside the kept ball")
    k_vec = np.array(k_int, dtype=float) * fund
    k_mag = float(np.linalg.norm(k_vec))
    a_amp, b_amp = 0.2, 0.15

    # brisk time dependence keeps the truncation error of the coarsest and
    # finest steps both far above the rounding floor, so the fitted slope
    # reflects the scheme order rather than noise
    def f(t):
        return 1.0 + 0.4 * np.sin(2.3 * t)

    def fp(t):
        return 0.92 * np.cos(2.3 * t)

    def g(t):
        return np.cos(1.7 * t)

    def gp(t):
        return -1.7 * np.sin(1.7 * t)

    def mode_pattern(index, value):
        pat = np.zeros(grid.shape, dtype=complex)
        pat[index] = value
        pat[tuple(-c for c in index)] = np.conj(value)
        return pat

    cos_k = mode_pattern(k_int, 0.5 + 0.0j)
    sin_k = mode_pattern(k_int, -0.5j)
    sin_2k = mode_pattern(two_k, -0.5j)
    dirs = _direction_arrays(grid)

    def exact(t):
        n_hat = a_amp * f(t) * cos_k
        w_hat = sum(
            dirs[j] * (b_amp * g(t) * k_vec[j] * cos_k) for j in range(3)
        )
        return n_hat, w_hat

    riesz_k = k_mag ** (-sigma)

    def forcing(t):
        ft, gt = f(t), g(t)
        f_n = (
            a_amp * fp(t) * cos_k
            - b_amp * gt * k_mag**2 * sin_k
            - a_amp * b_amp * ft * gt * k_mag**2 * sin_2k
        )
        quad = 0.5 * ((a_amp * ft) ** 2 + (b_amp * gt * k_mag) ** 2)
        scal = (
            b_amp * gp(t) * cos_k
            - a_amp * ft * (1.0 + riesz_k) * sin_k
            - quad * sin_2k
        )
        f_w = sum(dirs[j] * (k_vec[j] * scal) for j in range(3))
        return f_n, f_w

    errors = []
    for dt in dts:
        steps = round(t_end / dt)
        if abs(steps * dt - t_end) > 1e-9 * t_end:
            raise ValueError("each dt must divide t_end evenly")
        plan = _rotation_plan(grid, sigma, float(dt))
        nonlinear = _primitive_nonlinear(grid, sigma, forcing=forcing)
        n_hat, w_hat = exact(0.0)
        for i in range(steps):
            n_hat, w_hat = _ifrk4_step(
                n_hat, w_hat, i * float(dt), float(dt), plan, nonlinear
            )
        n_ref, w_ref = exact(t_end)
        err = np.sqrt(
            grid.volume
            * (np.sum(np.abs(n_hat - n_ref) ** 2) + np.sum(np.abs(w_hat - w_ref) ** 2))
        )
        errors.append(float(err))
    slope = np.polyfit(np.log(np.asarray(dts, dtype=float)), np.log(errors), 1)[0]
    return {"dts": [float(d) for d in dts], "errors": errors, "order": float(slope)}
