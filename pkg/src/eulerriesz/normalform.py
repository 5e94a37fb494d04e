"""Complex-profile transformation, quadratic interaction, and the
time-integrated identity check.

A mean-zero density disturbance and an irrotational velocity combine into a
single complex profile whose linear evolution is diagonal in Fourier space.
This module owns that change of variables in both directions, the quadratic
interaction Q(alpha) evaluated pseudospectrally, dense lattice realizations
of frequency-pair kernels, and the boundary/cubic corrections whose
combination must reproduce alpha(t) from alpha(0) up to integrator error.
The relative mismatch (``shatah_residual``) is the end-to-end oracle for the
interaction-symbol table in the phase-kernel module.

Dense pair sums are quadratic in the kept mode count; they exist for the
small grids the identity check runs on, and the budget guard refuses grids
where the pair count exceeds ``Defaults.dense_pair_budget``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .config import Defaults, Tolerances
from .dispersion import DispersionParams, p_eval
from .phasekernel import SignPair, phase_values, symbol_values
from .spectral import (
    GridSpec,
    SpectralField,
    conjugate_field,
    direction_component,
    dispersion_over_radius,
    forward_transform,
    l2_norm_coefficients,
    radius_over_dispersion,
    reflected_conjugate,
)


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class AlphaProfile:
    """Complex interaction profile with an exactly vanishing zero mode."""

    grid: GridSpec
    alpha: SpectralField
    sigma: float

    def __post_init__(self):
        if self.grid.dim != 3:
            raise ValueError("profiles are three-dimensional")
        if self.alpha.grid != self.grid:
            raise ValueError("profile field lives on a different grid")
        DispersionParams(self.sigma)  # validates the exponent range
        if self.alpha.zero_mode != 0.0:
            raise ValueError("profile zero mode must vanish exactly")

    @property
    def dispersion(self) -> DispersionParams:
        return DispersionParams(self.sigma)

    def slot_field(self, slot: int) -> SpectralField:
        """The profile for slot 1, the transform of its conjugate for slot 2."""
        if slot == 1:
            return self.alpha
        if slot == 2:
            return conjugate_field(self.alpha)
        raise ValueError(f"slot must be 1 or 2, got {slot}")


@dataclass(frozen=True)
class BilinearKernel:
    """Frequency-pair kernel for dense lattice sums.

    ``evaluator(xi, eta)`` receives stacked frequency arrays of shape
    (..., 3) and returns kernel values; ``singular_set_guard(xi, eta)``
    flags pairs the sum must skip, and skipped pairs contribute exactly
    zero.
    """

    evaluator: Callable
    label: str
    singular_set_guard: Callable = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.singular_set_guard is None:
            object.__setattr__(self, "singular_set_guard", no_exclusions)


def no_exclusions(xi: np.ndarray, eta: np.ndarray) -> np.ndarray:
    shape = np.broadcast_shapes(np.shape(xi)[:-1], np.shape(eta)[:-1])
    return np.zeros(shape, dtype=bool)


def zero_leg_guard(xi: np.ndarray, eta: np.ndarray) -> np.ndarray:
    """Exclude pairs where any of xi, eta, xi - eta vanishes."""
    r = np.linalg.norm(xi, axis=-1)
    s = np.linalg.norm(eta, axis=-1)
    w = np.linalg.norm(xi - eta, axis=-1)
    return (r == 0.0) | (s == 0.0) | (w == 0.0)


# ---------------------------------------------------------------------------
# profile transformation


def _check_mean_zero(field: SpectralField, what: str) -> None:
    scale = float(np.max(np.abs(field.coefficients)))
    if scale > 0.0 and abs(field.zero_mode) > Tolerances.hermitian * scale:
        raise ValueError(f"{what} must be mean-zero")


def _curl_norm(u) -> float:
    xi = u[0].grid.xi_grids
    total = 0.0
    for j, k in ((1, 2), (2, 0), (0, 1)):
        comp = xi[j] * u[k].coefficients - xi[k] * u[j].coefficients
        total += float(np.sum(np.abs(comp) ** 2))
    return float(np.sqrt(u[0].grid.volume * total))


def alpha_from_state(state, sigma: float) -> AlphaProfile:
    """Combine (n, u) into the complex profile diagonalizing the linear flow.

    ``state`` provides ``grid``, a real scalar field ``n``, and a 3-tuple
    ``u`` of real fields.  The velocity must be irrotational up to the
    pinned relative tolerance: the profile keeps only the potential part,
    so rotational content would be silently lost.
    """
    grid = state.grid
    params = DispersionParams(sigma)
    n = state.n
    u = tuple(state.u)
    if len(u) != 3:
        raise ValueError("velocity must have three components")
    _check_mean_zero(n, "the density disturbance")
    for j, comp in enumerate(u):
        _check_mean_zero(comp, f"velocity component {j}")
    u_norm = float(np.sqrt(sum(l2_norm_coefficients(c) ** 2 for c in u)))
    if u_norm > 0.0 and _curl_norm(u) > Tolerances.curl_input_rel * u_norm:
        raise ValueError("rotational component would be discarded")
    coef = dispersion_over_radius(params).build(grid) * n.coefficients
    for j, comp in enumerate(u):
        coef = coef + 1j * direction_component(j).build(grid) * comp.coefficients
    return AlphaProfile(grid=grid, alpha=SpectralField(grid, coef), sigma=float(sigma))


def _reconstruct_fields(profile: AlphaProfile):
    """Real density and velocity fields encoded by the profile."""
    grid, params = profile.grid, profile.dispersion
    a = profile.alpha.coefficients
    a_star = reflected_conjugate(a)
    even = 0.5 * (a + a_star)  # Hermitian part: carries the density
    odd = 0.5 * (a - a_star)  # anti-Hermitian part: carries the potential flow
    n = SpectralField(
        grid, radius_over_dispersion(params).build(grid) * even, real_valued=True
    )
    u = tuple(
        SpectralField(
            grid, 1j * direction_component(j).build(grid) * odd, real_valued=True
        )
        for j in range(3)
    )
    return n, u


def state_from_alpha(profile: AlphaProfile):
    """Inverse transformation; returns a solver state."""
    from .solver import FluidState  # runtime import: solver builds on this module

    n, u = _reconstruct_fields(profile)
    return FluidState(grid=profile.grid, n=n, u=u)


# ---------------------------------------------------------------------------
# quadratic interaction


def quadratic_Q(profile: AlphaProfile) -> SpectralField:
    """Quadratic interaction of the profile equation, pseudospectrally.

    The profile is split back into density and velocity, the real products
    n*u, n^2 and |u|^2 are formed on the physical grid, and the outer
    Fourier multipliers are applied to their transforms.  The result is
    dealiased and exactly mean-zero.
    """
    grid, params = profile.grid, profile.dispersion
    n, u = _reconstruct_fields(profile)
    n_phys = n.to_physical()
    u_phys = [comp.to_physical() for comp in u]
    div_flux = sum(
        1j * grid.xi_grids[j] * forward_transform(grid, n_phys * u_phys[j])
        for j in range(3)
    )
    n_sq_hat = forward_transform(grid, n_phys * n_phys)
    speed_sq_hat = forward_transform(grid, sum(c * c for c in u_phys))
    r = grid.xi_norm
    coef = (
        -dispersion_over_radius(params).build(grid) * div_flux
        + 0.5j * r * n_sq_hat
        + 0.5j * r * speed_sq_hat
    )
    coef = np.where(grid.dealias_mask, coef, 0.0)
    coef[(0,) * grid.dim] = 0.0
    return SpectralField(grid, coef)


# ---------------------------------------------------------------------------
# dense lattice pair sums


@dataclass(frozen=True)
class _ModeGeometry:
    flat_index: np.ndarray  # positions of kept modes in the raveled grid
    coords: np.ndarray  # integer mode vectors, shape (M, dim)
    cube_pos: np.ndarray  # position of each mode in the gather cube
    cut: int
    side: int
    xi_phys: np.ndarray  # physical frequencies, shape (M, dim)


@lru_cache(maxsize=8)
def _mode_geometry(grid: GridSpec) -> _ModeGeometry:
    flat_index = np.flatnonzero(grid.dealias_mask.ravel())
    mesh = np.meshgrid(*([grid.k_axis] * grid.dim), indexing="ij")
    coords = np.stack([m.ravel()[flat_index] for m in mesh], axis=1)
    cut = int(np.abs(coords).max())
    side = 2 * cut + 1
    cube_pos = np.zeros(len(flat_index), dtype=np.int64)
    for axis in range(grid.dim):
        cube_pos = cube_pos * side + (coords[:, axis] + cut)
    xi_phys = coords.astype(float) * grid.fundamental
    for arr in (flat_index, coords, cube_pos, xi_phys):
        arr.setflags(write=False)
    return _ModeGeometry(flat_index, coords, cube_pos, cut, side, xi_phys)


def _chunk_ranges(m_count: int) -> list:
    rows = max(1, Defaults.dense_chunk_entries // max(1, m_count))
    return [(a, min(a + rows, m_count)) for a in range(0, m_count, rows)]


def _chunk_lin(geo: _ModeGeometry, start: int, stop: int) -> np.ndarray:
    """Gather indices for fhat(xi - eta); out-of-ball pairs hit a zero slot."""
    d = geo.coords[start:stop, None, :] - geo.coords[None, :, :]
    inside = np.all(np.abs(d) <= geo.cut, axis=-1)
    lin = np.zeros(d.shape[:2], dtype=np.int64)
    for axis in range(d.shape[-1]):
        lin = lin * geo.side + np.clip(d[..., axis] + geo.cut, 0, geo.side - 1)
    sentinel = geo.side ** d.shape[-1]
    return np.where(inside, lin, sentinel).astype(np.int32)


@lru_cache(maxsize=2)
def _pair_index_tables(grid: GridSpec):
    geo = _mode_geometry(grid)
    m_count = geo.coords.shape[0]
    if m_count * m_count > Defaults.dense_table_pairs:
        return None
    tables = tuple(_chunk_lin(geo, a, b) for a, b in _chunk_ranges(m_count))
    for table in tables:
        table.setflags(write=False)
    return tables


def _chunk_kernel_values(
    kernel: BilinearKernel, geo: _ModeGeometry, start: int, stop: int, lin: np.ndarray
) -> np.ndarray:
    dim = geo.coords.shape[1]
    inside = lin != geo.side**dim
    shape = (stop - start, geo.coords.shape[0], dim)
    xi = np.broadcast_to(geo.xi_phys[start:stop, None, :], shape)
    eta = np.broadcast_to(geo.xi_phys[None, :, :], shape)
    excluded = np.broadcast_to(
        np.asarray(
            kernel.singular_set_guard(
                geo.xi_phys[start:stop, None, :], geo.xi_phys[None, :, :]
            ),
            dtype=bool,
        ),
        inside.shape,
    )
    live = inside & ~excluded
    kv = np.zeros(inside.shape, dtype=complex)
    if np.any(live):
        kv[live] = kernel.evaluator(xi[live], eta[live])
    return kv


class _DensePairSum:
    """One kernel realized as a chunked lattice pair sum on one grid.

    ``cache_kernel=True`` freezes the kernel values per chunk so repeated
    applications (the cubic time integral) pay the evaluator cost once.
    """

    def __init__(self, kernel: BilinearKernel, grid: GridSpec, cache_kernel=False):
        geo = _mode_geometry(grid)
        m_count = geo.coords.shape[0]
        if m_count * m_count > Defaults.dense_pair_budget:
            raise ValueError("grid too large for dense bilinear")
        self.kernel = kernel
        self.grid = grid
        self.geo = geo
        self.ranges = _chunk_ranges(m_count)
        self.lin_tables = _pair_index_tables(grid)
        self.kv_tables = None
        if cache_kernel and self.lin_tables is not None:
            self.kv_tables = [
                _chunk_kernel_values(kernel, geo, a, b, lin)
                for (a, b), lin in zip(self.ranges, self.lin_tables)
            ]

    def masked_vector(self, field: SpectralField) -> np.ndarray:
        return field.coefficients.ravel()[self.geo.flat_index]

    def apply_masked(self, f_masked: np.ndarray, g_masked: np.ndarray) -> np.ndarray:
        geo = self.geo
        dim = geo.coords.shape[1]
        cube = np.zeros(geo.side**dim + 1, dtype=complex)
        cube[geo.cube_pos] = f_masked
        out = np.empty(geo.coords.shape[0], dtype=complex)
        for idx, (a, b) in enumerate(self.ranges):
            lin = (
                self.lin_tables[idx]
                if self.lin_tables is not None
                else _chunk_lin(geo, a, b)
            )
            kv = (
                self.kv_tables[idx]
                if self.kv_tables is not None
                else _chunk_kernel_values(self.kernel, geo, a, b, lin)
            )
            out[a:b] = np.einsum("cm,cm,m->c", kv, cube[lin], g_masked)
        return out

    def unmask(self, masked: np.ndarray) -> SpectralField:
        coef = np.zeros(self.grid.shape, dtype=complex).ravel()
        coef[self.geo.flat_index] = masked
        return SpectralField(self.grid, coef.reshape(self.grid.shape))

    def apply(self, f: SpectralField, g: SpectralField) -> SpectralField:
        return self.unmask(
            self.apply_masked(self.masked_vector(f), self.masked_vector(g))
        )


def bilinear_apply(
    kernel: BilinearKernel, f: SpectralField, g: SpectralField
) -> SpectralField:
    """Dense pair sum out(xi) = sum_eta k(xi,eta) fhat(xi-eta) ghat(eta).

    Both eta and xi - eta range over the kept (dealiased) mode ball; pairs
    the kernel guard excludes contribute zero.  With k = 1 this is exactly
    the dealiased pointwise product.
    """
    if f.grid != g.grid:
        raise ValueError("fields live on different grids")
    return _DensePairSum(kernel, f.grid).apply(f, g)


# ---------------------------------------------------------------------------
# interaction kernels


def interaction_kernel(sp: SignPair, sigma: float) -> BilinearKernel:
    """i times the symmetrized interaction symbol for one sign pair.

    Summing the four sign pairs over (profile, conjugate-profile) slots
    reproduces the quadratic interaction; the equivalence with
    ``quadratic_Q`` is the regression oracle for the symbol table.
    """
    params = DispersionParams(sigma)

    def evaluate(xi, eta):
        return 1j * symbol_values(sp, params, xi, eta)

    return BilinearKernel(evaluate, f"interaction[{sp.r}{sp.l}]", zero_leg_guard)


def phase_divided_kernel(sp: SignPair, sigma: float) -> BilinearKernel:
    """Symmetrized interaction symbol divided by its resonance phase.

    A lattice pair where the phase vanishes but the symbol does not cannot
    be divided; generic box sizes never produce one, and hitting one raises
    instead of regularizing.
    """
    params = DispersionParams(sigma)

    def evaluate(xi, eta):
        m = symbol_values(sp, params, xi, eta)
        ph = phase_values(sp, params, xi, eta)
        tiny = np.abs(ph) < Tolerances.resonance_guard
        if np.any(tiny & (m != 0.0)):
            raise ValueError("exact resonance on lattice")
        return np.where(tiny, 0.0, m / np.where(tiny, 1.0, ph))

    return BilinearKernel(evaluate, f"interaction[{sp.r}{sp.l}]/phase", zero_leg_guard)


def _sign_pairs() -> tuple:
    return tuple(SignPair(r, l) for r in (1, 2) for l in (1, 2))


# ---------------------------------------------------------------------------
# boundary and cubic corrections


def boundary_g(profile: AlphaProfile) -> SpectralField:
    """Quadratic boundary correction of the time-integrated identity.

    Sums the phase-divided interaction over the four sign pairs, feeding
    slot r the profile image at the difference frequency and slot l the
    image at the inner frequency.  Integrating the evolution by parts puts
    the factor i of the interaction against the 1/(i Phi) of the oscillation
    antiderivative, so the real phase-divided table enters with factor -1.
    """
    out = None
    for sp in _sign_pairs():
        kernel = phase_divided_kernel(sp, profile.sigma)
        term = bilinear_apply(kernel, profile.slot_field(sp.r), profile.slot_field(sp.l))
        out = term if out is None else out + term
    return out.scaled(-1.0)


@dataclass(frozen=True)
class AlphaTrajectory:
    """Profiles stored at every step of a uniform time grid starting at 0."""

    times: np.ndarray
    profiles: tuple

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        profiles = tuple(self.profiles)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "profiles", profiles)
        if times.ndim != 1 or len(times) != len(profiles):
            raise ValueError("one profile per stored time is required")
        if len(times) == 0:
            raise ValueError("trajectory is empty")
        if times[0] != 0.0:
            raise ValueError("trajectories must start at time zero")
        if len(times) > 1:
            steps = np.diff(times)
            if np.any(steps <= 0.0):
                raise ValueError("times must increase strictly")
            if np.max(np.abs(steps - steps[0])) > 1e-12 * max(steps[0], 1.0):
                raise ValueError("stored times must be uniformly spaced")
        if len({prof.grid for prof in profiles}) != 1:
            raise ValueError("profiles must share one grid")
        if len({prof.sigma for prof in profiles}) != 1:
            raise ValueError("profiles must share one dispersion exponent")

    @property
    def step(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0

    def index_at(self, t: float) -> int:
        pos = int(np.argmin(np.abs(self.times - t)))
        slack = 1e-9 * max(self.step, 1.0)
        if abs(float(self.times[pos]) - t) > slack:
            raise ValueError(f"time {t} is not on the stored grid")
        return pos


def _quadrature_weights(panels: int, dt: float) -> np.ndarray:
    """Composite Simpson weights; a 3/8 patch absorbs an odd panel count.

    A single stored panel falls back to the trapezoid rule, which caps the
    observable refinement order for that degenerate case only.
    """
    if panels == 1:
        return np.array([0.5, 0.5]) * dt
    w = np.zeros(panels + 1)
    head = panels if panels % 2 == 0 else panels - 3
    if head > 0:
        w[0] += 1.0 / 3.0
        w[head] += 1.0 / 3.0
        w[1:head:2] += 4.0 / 3.0
        w[2:head:2] += 2.0 / 3.0
    if panels % 2 != 0:
        w[panels - 3] += 3.0 / 8.0
        w[panels - 2] += 9.0 / 8.0
        w[panels - 1] += 9.0 / 8.0
        w[panels] += 3.0 / 8.0
    return w * dt


def cubic_h(trajectory: AlphaTrajectory, t: float) -> SpectralField:
    """Cubic correction of the time-integrated identity.

    For each sign pair the integrand feeds slot r the stored profile image
    and slot l the image of its quadratic interaction through the
    phase-divided kernel, propagates the result from the sample time to t,
    and integrates over the stored history with composite Simpson weights.
    The two time-derivative terms of the parts integration merge through the
    eta <-> xi - eta symmetry of the table, doubling the real-table
    integrand: the overall factor is +2.
    """
    j_end = trajectory.index_at(t)
    first = trajectory.profiles[0]
    grid, sigma = first.grid, first.sigma
    if j_end == 0:
        return SpectralField(grid, np.zeros(grid.shape, dtype=complex))
    ops = {
        sp: _DensePairSum(phase_divided_kernel(sp, sigma), grid, cache_kernel=True)
        for sp in _sign_pairs()
    }
    geo = _mode_geometry(grid)
    p_masked = p_eval(first.dispersion, np.linalg.norm(geo.xi_phys, axis=1))
    weights = _quadrature_weights(j_end, trajectory.step)
    anchor = next(iter(ops.values()))
    acc = np.zeros(geo.coords.shape[0], dtype=complex)
    for j in range(j_end + 1):
        prof = trajectory.profiles[j]
        q = quadratic_Q(prof)
        slot_f = {slot: anchor.masked_vector(prof.slot_field(slot)) for slot in (1, 2)}
        slot_q = {
            1: anchor.masked_vector(q),
            2: anchor.masked_vector(conjugate_field(q)),
        }
        y = np.zeros_like(acc)
        for sp, op in ops.items():
            y += op.apply_masked(slot_f[sp.r], slot_q[sp.l])
        tau = float(trajectory.times[j])
        acc += weights[j] * np.exp(1j * (t - tau) * p_masked) * y
    return anchor.unmask(2.0 * acc)


def shatah_residual(trajectory: AlphaTrajectory, t: float) -> float:
    """Relative mismatch of the time-integrated identity at time t.

    Compares the stored profile against the propagated initial profile plus
    the boundary and cubic corrections, in relative L^2.  At t = 0 the
    combination cancels exactly.
    """
    pos = trajectory.index_at(t)
    prof_t = trajectory.profiles[pos]
    prof_0 = trajectory.profiles[0]
    denom = l2_norm_coefficients(prof_t.alpha)
    if denom == 0.0:
        raise ValueError("cannot measure a residual against a zero profile")
    prop = np.exp(1j * t * p_eval(prof_0.dispersion, prof_0.grid.xi_norm))
    g_t = boundary_g(prof_t)
    g_0 = boundary_g(prof_0)
    h = cubic_h(trajectory, t)
    # the boundary pair is differenced before anything else is added so the
    # t = 0 cancellation is exact in floating point, not merely tiny
    boundary = g_t.coefficients - prop * g_0.coefficients
    predicted = prop * prof_0.alpha.coefficients + boundary + h.coefficients
    defect = prof_t.alpha.coefficients - predicted
    num = float(np.sqrt(prof_t.grid.volume * np.sum(np.abs(defect) ** 2)))
    return num / denom


def residual_report(
    grid: GridSpec,
    sigma: float,
    eps: float,
    dt: float,
    t: float,
    residual: float,
    refinement_order: float | None = None,
) -> str:
    """JSON record of one identity-residual measurement."""
    payload = {
        "grid": grid.n_per_axis,
        "sigma": float(sigma),
        "eps": float(eps),
        "dt": float(dt),
        "t": float(t),
        "residual": float(residual),
        "refinement_order": None
        if refinement_order is None
        else float(refinement_order),
    }
    return json.dumps(payload, indent=2, sort_keys=True)
