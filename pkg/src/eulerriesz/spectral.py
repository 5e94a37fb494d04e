"""Periodic-grid spectral infrastructure.

Transforms use the coefficient normalization f(x) = sum_k fhat_k e^{i xi_k x},
so a pointwise product of fields corresponds to a plain convolution of
coefficient arrays.  Fields are immutable after construction and every
operation returns a new field.

The module also owns the smooth radial cutoffs: a C-infinity bump profile
built from exp(-1/(1-t^2)), the dyadic projector family it generates, and
the three-piece window around the curvature-degenerate radius.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dc_field
from functools import cached_property, lru_cache
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import scipy.fft as sfft
from scipy.integrate import quad
from scipy.special import roots_legendre

from .config import Defaults, Tolerances
from .dispersion import DispersionParams, beta_exponent, degenerate_point, p_eval


# ---------------------------------------------------------------------------
# grid


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic lattice on [0, L)^dim with power-of-two resolution."""

    n_per_axis: int
    box_length: float
    dim: int = 3
    dealias_fraction: float = Defaults.dealias_fraction

    def __post_init__(self):
        n = self.n_per_axis
        if n < 8 or (n & (n - 1)) != 0:
            raise ValueError(f"n_per_axis must be a power of two >= 8, got {n}")
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2, or 3, got {self.dim}")
        if not self.box_length > 0:
            raise ValueError("box_length must be positive")
        if not (0.0 < self.dealias_fraction <= 1.0):
            raise ValueError("dealias_fraction must lie in (0, 1]")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n_per_axis,) * self.dim

    @property
    def spacing(self) -> float:
        return self.box_length / self.n_per_axis

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    @property
    def volume(self) -> float:
        return self.box_length**self.dim

    @property
    def fundamental(self) -> float:
        """Smallest nonzero frequency magnitude, 2*pi/L."""
        return 2.0 * np.pi / self.box_length

    @property
    def nyquist_radius(self) -> float:
        """Largest per-axis frequency magnitude, pi*n/L."""
        return np.pi * self.n_per_axis / self.box_length

    @cached_property
    def k_axis(self) -> np.ndarray:
        """Integer mode indices in FFT storage order."""
        return np.rint(sfft.fftfreq(self.n_per_axis) * self.n_per_axis).astype(int)

    @cached_property
    def xi_axis(self) -> np.ndarray:
        return self.fundamental * self.k_axis

    @cached_property
    def xi_grids(self) -> tuple[np.ndarray, ...]:
        """Frequency component arrays, broadcast to the full lattice shape."""
        axes = np.meshgrid(*([self.xi_axis] * self.dim), indexing="ij")
        return tuple(a.astype(float) for a in axes)

    @cached_property
    def xi_norm(self) -> np.ndarray:
        return np.sqrt(sum(a * a for a in self.xi_grids))

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """True on modes kept by the per-axis 2/3-style rule."""
        cut = self.dealias_fraction * self.n_per_axis / 2.0
        keep = np.ones(self.shape, dtype=bool)
        k = np.abs(self.k_axis)
        for axis in range(self.dim):
            shape = [1] * self.dim
            shape[axis] = self.n_per_axis
            keep &= k.reshape(shape) <= cut
        return keep

    def axis_points(self) -> np.ndarray:
        return np.arange(self.n_per_axis) * self.spacing

    def meshes(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.axis_points()] * self.dim), indexing="ij"))


def _workers() -> int:
    return Defaults.worker_count()


def forward_transform(grid: GridSpec, values: np.ndarray) -> np.ndarray:
    return sfft.fftn(values, workers=_workers()) / values.size


def inverse_transform(grid: GridSpec, coefficients: np.ndarray) -> np.ndarray:
    return sfft.ifftn(coefficients, workers=_workers()) * coefficients.size


# ---------------------------------------------------------------------------
# fields


@dataclass(frozen=True)
class SpectralField:
    """Immutable coefficient array on a grid.

    ``real_valued`` tags fields whose physical-space values are real, which
    is equivalent to Hermitian coefficient symmetry.
    """

    grid: GridSpec
    coefficients: np.ndarray
    real_valued: bool = False

    def __post_init__(self):
        coef = np.ascontiguousarray(self.coefficients, dtype=complex)
        if coef.shape != self.grid.shape:
            raise ValueError(
                f"coefficient shape {coef.shape} does not match grid {self.grid.shape}"
            )
        coef.setflags(write=False)
        object.__setattr__(self, "coefficients", coef)
        if self.real_valued:
            defect = hermitian_defect(self)
            if defect > Tolerances.hermitian:
                raise ValueError(
                    f"field tagged real-valued but Hermitian defect is {defect:.3e}"
                )

    @classmethod
    def from_physical(cls, grid: GridSpec, values: np.ndarray) -> "SpectralField":
        values = np.asarray(values)
        real = not np.iscomplexobj(values)
        return cls(grid, forward_transform(grid, values), real_valued=real)

    def to_physical(self) -> np.ndarray:
        phys = inverse_transform(self.grid, self.coefficients)
        return phys.real if self.real_valued else phys

    @property
    def zero_mode(self) -> complex:
        return complex(self.coefficients[(0,) * self.grid.dim])

    def dealiased(self) -> "SpectralField":
        return SpectralField(
            self.grid, self.coefficients * self.grid.dealias_mask, self.real_valued
        )

    def __add__(self, other: "SpectralField") -> "SpectralField":
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")
        return SpectralField(
            self.grid,
            self.coefficients + other.coefficients,
            self.real_valued and other.real_valued,
        )

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")
        return SpectralField(
            self.grid,
            self.coefficients - other.coefficients,
            self.real_valued and other.real_valued,
        )

    def scaled(self, factor: complex) -> "SpectralField":
        real = self.real_valued and float(np.imag(factor)) == 0.0
        return SpectralField(self.grid, factor * self.coefficients, real)


def reflected_conjugate(coef: np.ndarray) -> np.ndarray:
    """coef(-k) conjugated, respecting FFT index wrapping."""
    out = np.conj(coef)
    for axis in range(out.ndim):
        out = np.roll(np.flip(out, axis=axis), 1, axis=axis)
    return out


def hermitian_defect(field: SpectralField) -> float:
    """Relative departure from coeff(-k) = conj(coeff(k))."""
    coef = field.coefficients
    scale = float(np.max(np.abs(coef)))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(coef - reflected_conjugate(coef)))) / scale


def conjugate_field(field: SpectralField) -> SpectralField:
    """Coefficients of the complex conjugate of the physical field."""
    return SpectralField(
        field.grid, reflected_conjugate(field.coefficients), field.real_valued
    )


# ---------------------------------------------------------------------------
# multipliers


@dataclass
class MultiplierSpec:
    """Fourier multiplier with an explicitly chosen zero-mode action.

    ``symbol`` takes the radial argument |xi| when ``kind == "radial"`` and
    the tuple of frequency component arrays when ``kind == "vector"``.  The
    zero mode is never computed from the symbol; ``zero_mode_value``
    multiplies the input's zero-mode coefficient directly.
    """

    symbol: Callable
    zero_mode_value: complex
    kind: str = "radial"
    name: str = ""
    _cache: dict = dc_field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in ("radial", "vector"):
            raise ValueError(f"kind must be 'radial' or 'vector', got {self.kind!r}")

    def build(self, grid: GridSpec) -> np.ndarray:
        return self._built(grid)[0]

    def preserves_real(self, grid: GridSpec) -> bool:
        """Whether the symbol is Hermitian-symmetric on this lattice."""
        return self._built(grid)[1]

    def _built(self, grid: GridSpec) -> tuple[np.ndarray, bool]:
        if grid in self._cache:
            return self._cache[grid]
        origin = (0,) * grid.dim
        r_safe = grid.xi_norm.copy()
        r_safe[origin] = 1.0
        if self.kind == "radial":
            vals = np.asarray(self.symbol(r_safe), dtype=complex)
        else:
            vals = np.asarray(self.symbol(grid.xi_grids, r_safe), dtype=complex)
        vals = np.array(np.broadcast_to(vals, grid.shape))
        vals[origin] = self.zero_mode_value
        bad = ~np.isfinite(vals)
        if np.any(bad):
            idx = tuple(int(i) for i in np.argwhere(bad)[0])
            xi = tuple(float(grid.xi_axis[i]) for i in idx)
            raise ValueError(
                f"multiplier {self.name or '<unnamed>'} is not finite at frequency xi={xi}"
            )
        scale = max(1.0, float(np.max(np.abs(vals))))
        hermitian = bool(
            np.max(np.abs(vals - reflected_conjugate(vals))) <= 1e-13 * scale
        )
        vals.setflags(write=False)
        self._cache[grid] = (vals, hermitian)
        return vals, hermitian


def apply_multiplier(field: SpectralField, m: MultiplierSpec) -> SpectralField:
    vals = m.build(field.grid)
    real = field.real_valued and m.preserves_real(field.grid)
    return SpectralField(field.grid, field.coefficients * vals, real_valued=real)


def identity_multiplier() -> MultiplierSpec:
    return MultiplierSpec(lambda r: np.ones_like(r), 1.0, name="identity")


def fractional_power(order: float) -> MultiplierSpec:
    """|xi|^order with the zero mode mapped to 0 (mean-zero convention)."""
    return MultiplierSpec(lambda r, a=order: r**a, 0.0, name=f"|xi|^{order}")


def bessel_power(order: float) -> MultiplierSpec:
    """<xi>^order = (1+|xi|^2)^(order/2); acts as 1 on the zero mode."""
    return MultiplierSpec(
        lambda r, a=order: (1.0 + r * r) ** (a / 2.0), 1.0, name=f"<xi>^{order}"
    )


def dispersion_multiplier(params: DispersionParams) -> MultiplierSpec:
    return MultiplierSpec(
        lambda r, p=params: p_eval(p, r), 0.0, name=f"p(|xi|), sigma={params.sigma}"
    )


def half_wave(params: DispersionParams, t: float) -> MultiplierSpec:
    """e^{i t p(|xi|)}; the zero mode is carried unchanged (p(0) = 0)."""
    return MultiplierSpec(
        lambda r, p=params, tt=t: np.exp(1j * tt * p_eval(p, r)),
        1.0,
        name=f"exp(i t p), t={t}",
    )


def dispersion_over_radius(params: DispersionParams) -> MultiplierSpec:
    """p(|xi|)/|xi|; unbounded at the origin, zero mode set to 0."""
    return MultiplierSpec(
        lambda r, p=params: p_eval(p, r) / r, 0.0, name="p(|xi|)/|xi|"
    )


def radius_over_dispersion(params: DispersionParams) -> MultiplierSpec:
    return MultiplierSpec(
        lambda r, p=params: r / p_eval(p, r), 0.0, name="|xi|/p(|xi|)"
    )


def direction_component(axis: int) -> MultiplierSpec:
    """i xi_j / |xi|, the j-th component of the vector symbol of grad/|grad|."""
    return MultiplierSpec(
        lambda xi, r, j=axis: 1j * xi[j] / r, 0.0, kind="vector", name=f"i xi_{axis}/|xi|"
    )


def riesz_gradient_component(axis: int, sigma: float) -> MultiplierSpec:
    """i xi_j |xi|^{-sigma}, one component of the forcing operator symbol."""
    return MultiplierSpec(
        lambda xi, r, j=axis, s=sigma: 1j * xi[j] * r ** (-s),
        0.0,
        kind="vector",
        name=f"i xi_{axis} |xi|^-{sigma}",
    )


def gradient_component(axis: int) -> MultiplierSpec:
    return MultiplierSpec(
        lambda xi, r, j=axis: 1j * xi[j], 0.0, kind="vector", name=f"i xi_{axis}"
    )


# ---------------------------------------------------------------------------
# smooth cutoffs


def mollifier_b(t) -> np.ndarray:
    """exp(-1/(1-t^2)) on (-1,1), zero outside; C-infinity on the line."""
    t0 = np.asarray(t, dtype=float)
    t1 = np.atleast_1d(t0)
    inside = np.abs(t1) < 1.0
    out = np.zeros_like(t1)
    with np.errstate(divide="ignore", over="ignore"):
        out[inside] = np.exp(-1.0 / (1.0 - t1[inside] ** 2))
    return out.reshape(t0.shape) if t0.ndim else float(out[0])


def mollifier_b_prime(t) -> np.ndarray:
    t0 = np.asarray(t, dtype=float)
    t1 = np.atleast_1d(t0)
    inside = np.abs(t1) < 1.0
    out = np.zeros_like(t1)
    ti = t1[inside]
    out[inside] = mollifier_b(ti) * (-2.0 * ti / (1.0 - ti * ti) ** 2)
    return out.reshape(t0.shape) if t0.ndim else float(out[0])


@lru_cache(maxsize=1)
def bump_normalization() -> float:
    """Integral of the mollifier over (-1, 1)."""
    val, _ = quad(lambda t: math.exp(-1.0 / (1.0 - t * t)) if abs(t) < 1 else 0.0, -1, 1)
    return val


@lru_cache(maxsize=1)
def _gl_rule() -> tuple[np.ndarray, np.ndarray]:
    return roots_legendre(64)


def smoothstep(u) -> np.ndarray:
    """S(u) = int_u^1 b / Z: decreases smoothly from 1 at u<=-1 to 0 at u>=1."""
    u0 = np.asarray(u, dtype=float)
    u1 = np.atleast_1d(u0).ravel()
    out = np.where(u1 <= -1.0, 1.0, 0.0)
    mid = (u1 > -1.0) & (u1 < 1.0)
    if np.any(mid):
        um = u1[mid]
        nodes, weights = _gl_rule()
        half = (1.0 - um) / 2.0
        t = um[:, None] + half[:, None] * (nodes[None, :] + 1.0)
        vals = half * np.sum(weights[None, :] * mollifier_b(t), axis=1)
        out[mid] = vals / bump_normalization()
    return out.reshape(u0.shape) if u0.ndim else float(out[0])


def smoothstep_prime(u) -> np.ndarray:
    return -mollifier_b(u) / bump_normalization()


def psi_eval(r) -> np.ndarray:
    """Radial cutoff: 1 on r<=1, 0 on r>=2, smooth monotone in between."""
    r0 = np.asarray(r, dtype=float)
    r1 = np.atleast_1d(r0)
    out = np.ones_like(r1)
    out[r1 >= 2.0] = 0.0
    mid = (r1 > 1.0) & (r1 < 2.0)
    out[mid] = smoothstep(2.0 * r1[mid] - 3.0)
    return out.reshape(r0.shape) if r0.ndim else float(out[0])


def psi_prime(r) -> np.ndarray:
    r0 = np.asarray(r, dtype=float)
    r1 = np.atleast_1d(r0)
    out = np.zeros_like(r1)
    mid = (r1 > 1.0) & (r1 < 2.0)
    out[mid] = -2.0 * mollifier_b(2.0 * r1[mid] - 3.0) / bump_normalization()
    return out.reshape(r0.shape) if r0.ndim else float(out[0])


def psi_second(r) -> np.ndarray:
    r0 = np.asarray(r, dtype=float)
    r1 = np.atleast_1d(r0)
    out = np.zeros_like(r1)
    mid = (r1 > 1.0) & (r1 < 2.0)
    out[mid] = -4.0 * mollifier_b_prime(2.0 * r1[mid] - 3.0) / bump_normalization()
    return out.reshape(r0.shape) if r0.ndim else float(out[0])


def phi_eval(scale: float, r) -> np.ndarray:
    """Dyadic shell profile psi(r/N) - psi(2r/N), supported on N/2 <= r <= 2N."""
    return psi_eval(np.asarray(r, dtype=float) / scale) - psi_eval(
        2.0 * np.asarray(r, dtype=float) / scale
    )


def phi_prime(scale: float, r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    return (psi_prime(r / scale) - 2.0 * psi_prime(2.0 * r / scale)) / scale


def phi_second(scale: float, r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    return (psi_second(r / scale) - 4.0 * psi_second(2.0 * r / scale)) / scale**2


def shell_window(r, center: float, eps: float) -> np.ndarray:
    """1 within eps of the center, 0 beyond 2*eps, smooth in between."""
    q = (np.abs(np.asarray(r, dtype=float) - center) - eps) / eps
    return smoothstep(2.0 * q - 1.0)


# ---------------------------------------------------------------------------
# projectors


def _is_dyadic(scale: float) -> bool:
    if scale <= 0:
        return False
    mantissa, _ = math.frexp(scale)
    return mantissa == 0.5


def lp_project(field: SpectralField, scale: float) -> SpectralField:
    """Dyadic frequency-shell projector at the power-of-two scale N."""
    if not _is_dyadic(scale):
        raise ValueError(f"projector scale must be a power of two, got {scale}")
    m = MultiplierSpec(
        lambda r, n=scale: phi_eval(n, r), 0.0, name=f"shell projector N={scale}"
    )
    return apply_multiplier(field, m)


def lp_project_below(field: SpectralField, scale: float) -> SpectralField:
    """Low-pass companion; passes the zero mode (psi(0) = 1)."""
    if not _is_dyadic(scale):
        raise ValueError(f"projector scale must be a power of two, got {scale}")
    m = MultiplierSpec(
        lambda r, n=scale: psi_eval(r / n), 1.0, name=f"low-pass N={scale}"
    )
    return apply_multiplier(field, m)


def lp_project_above(field: SpectralField, scale: float) -> SpectralField:
    if not _is_dyadic(scale):
        raise ValueError(f"projector scale must be a power of two, got {scale}")
    m = MultiplierSpec(
        lambda r, n=scale: 1.0 - psi_eval(r / n), 0.0, name=f"high-pass N={scale}"
    )
    return apply_multiplier(field, m)


def dyadic_range(grid: GridSpec) -> list[float]:
    """Power-of-two scales from half the fundamental to twice the Nyquist radius."""
    j_lo = math.floor(math.log2(grid.fundamental / 2.0) + 1e-9)
    j_hi = math.floor(math.log2(2.0 * grid.nyquist_radius) + 1e-9)
    return [2.0**j for j in range(j_lo, j_hi + 1)]


def degenerate_shell_project(
    field: SpectralField, params: DispersionParams, eps: float
) -> tuple[SpectralField, SpectralField, SpectralField]:
    """Split a field into below / on / above the curvature-degenerate shell.

    The three pieces sum to the input exactly; the middle piece is supported
    in | |xi| - r0 | <= 2*eps and equals the input on | |xi| - r0 | <= eps.
    """
    if params.sigma <= 1.0:
        raise ValueError("no degeneracy: p'' keeps one sign for sigma <= 1")
    r0 = degenerate_point(params)
    if not (0.0 < 2.0 * eps < r0):
        raise ValueError(f"need 0 < 2*eps < r0; got eps={eps}, r0={r0:.6g}")
    r = field.grid.xi_norm
    shell = shell_window(r, r0, eps)
    below = np.where(r < r0, 1.0 - shell, 0.0)
    above = np.where(r > r0, 1.0 - shell, 0.0)
    coef = field.coefficients
    mk = lambda w: SpectralField(field.grid, coef * w, field.real_valued)
    return mk(below), mk(shell), mk(above)


# ---------------------------------------------------------------------------
# norms


def lp_norm(field: SpectralField, p: float) -> float:
    """Rectangle-rule Lebesgue norm on the physical grid; p = inf is the max."""
    vals = np.abs(field.to_physical())
    if np.isinf(p):
        return float(np.max(vals))
    if p <= 0:
        raise ValueError("Lebesgue exponent must be positive or inf")
    return float((np.sum(vals**p) * field.grid.cell_volume) ** (1.0 / p))


def l2_norm_coefficients(field: SpectralField) -> float:
    """Plancherel form of the L^2 norm."""
    return float(
        np.sqrt(field.grid.volume * np.sum(np.abs(field.coefficients) ** 2))
    )


def sobolev_norm(field: SpectralField, order: float) -> float:
    """Inhomogeneous H^order via the <xi> weight."""
    w = (1.0 + field.grid.xi_norm**2) ** (order / 2.0)
    return float(
        np.sqrt(field.grid.volume * np.sum((w * np.abs(field.coefficients)) ** 2))
    )


def _require_mean_zero(field: SpectralField, what: str) -> None:
    scale = float(np.max(np.abs(field.coefficients)))
    if scale == 0.0:
        return
    if abs(field.zero_mode) > Tolerances.hermitian * scale:
        raise ValueError(f"mean (zero-mode coefficient) must vanish for {what}")


def homogeneous_norm(field: SpectralField, order: float) -> float:
    """|grad|^order L^2 norm; negative orders require a mean-zero field."""
    if order < 0:
        _require_mean_zero(field, f"the homogeneous norm of order {order}")
    r = field.grid.xi_norm.copy()
    r[(0,) * field.grid.dim] = 1.0
    w = r**order
    w[(0,) * field.grid.dim] = 0.0
    return float(
        np.sqrt(field.grid.volume * np.sum((w * np.abs(field.coefficients)) ** 2))
    )


def wsp_norm(field: SpectralField, s: int, p: float) -> float:
    """Sum over alpha = 0..s of the L^p norms of |grad|^alpha f."""
    if s < 0 or s != int(s):
        raise ValueError("regularity index s must be a nonnegative integer")
    total = lp_norm(field, p)
    for alpha in range(1, int(s) + 1):
        total += lp_norm(apply_multiplier(field, fractional_power(float(alpha))), p)
    return float(total)


def riesz_sobolev_norm(field: SpectralField, sigma: float, s: int) -> float:
    """H^{2s} norm of |grad|^{-(2-sigma)/2} f (mean-zero required)."""
    a = (2.0 - sigma) / 2.0
    _require_mean_zero(field, "the smoothing-weighted energy norm")
    smoothed = apply_multiplier(field, fractional_power(-a))
    return sobolev_norm(smoothed, 2.0 * s)


def weighted_energy_norm(
    field: SpectralField, s: int, weight_n: SpectralField
) -> float:
    """L^2 norm of (n+1)^{-1/2} |grad|^s f; rejects densities touching vacuum."""
    if weight_n.grid != field.grid:
        raise ValueError("weight field lives on a different grid")
    n_phys = np.real(weight_n.to_physical())
    if np.min(n_phys) <= -1.0:
        raise ValueError("vacuum crossing: density weight n+1 must stay positive")
    g = apply_multiplier(field, fractional_power(float(s))).to_physical()
    integrand = np.abs(g) ** 2 / (1.0 + n_phys)
    return float(np.sqrt(np.sum(integrand) * field.grid.cell_volume))


@dataclass
class NormReport:
    """Named nonnegative norms plus the parameters that produced them."""

    values: dict
    grid: GridSpec
    sigma: float
    s: int
    lebesgue_p: float
    time: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        for key, val in self.values.items():
            if not (np.isfinite(val) and val >= 0.0):
                raise ValueError(f"norm {key!r} is not finite and nonnegative: {val}")

    def to_json(self) -> str:
        payload = {
            "values": {k: float(v) for k, v in self.values.items()},
            "grid": {
                "n_per_axis": self.grid.n_per_axis,
                "box_length": self.grid.box_length,
                "dim": self.grid.dim,
            },
            "sigma": self.sigma,
            "s": self.s,
            "lebesgue_p": self.lebesgue_p,
            "time": self.time,
            "beta": self.beta,
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    def csv_header(self) -> str:
        keys = sorted(self.values)
        return ",".join(["time", "sigma", "s", "lebesgue_p"] + keys)

    def to_csv_row(self) -> str:
        keys = sorted(self.values)
        head = [f"{self.time:.12g}", f"{self.sigma:.12g}", str(self.s), f"{self.lebesgue_p:.12g}"]
        return ",".join(head + [f"{self.values[k]:.12e}" for k in keys])


def _component_fields(obj) -> list[SpectralField]:
    if isinstance(obj, SpectralField):
        return [obj]
    if hasattr(obj, "component_fields"):
        return list(obj.component_fields())
    if isinstance(obj, (list, tuple)):
        return list(obj)
    raise TypeError(f"cannot extract spectral components from {type(obj).__name__}")


def norm_suite(
    obj,
    sigma: float,
    s: int = Defaults.sobolev_s,
    lebesgue_p: float | None = None,
    weight_n: SpectralField | None = None,
    time: float = 0.0,
) -> NormReport:
    """Every norm the decay analysis tracks, for a field or a field bundle.

    Vector inputs combine componentwise norms in quadrature.  The report
    carries both the raw dispersive norm and its (1+t)^beta weighting, since
    the time factor is external to a single snapshot.
    """
    comps = _component_fields(obj)
    if not comps:
        raise ValueError("no components to measure")
    grid = comps[0].grid
    params = DispersionParams(sigma)
    if lebesgue_p is None:
        lebesgue_p = 8.0 if sigma <= 1.0 else 12.0
    beta = beta_exponent(params, lebesgue_p).beta

    def combine(fn) -> float:
        return float(np.sqrt(sum(fn(f) ** 2 for f in comps)))

    a = (2.0 - sigma) / 2.0
    values = {
        "L2": combine(lambda f: lp_norm(f, 2.0)),
        f"L{lebesgue_p:g}": combine(lambda f: lp_norm(f, lebesgue_p)),
        "Linf": float(max(lp_norm(f, np.inf) for f in comps)),
        f"H{2*s}": combine(lambda f: sobolev_norm(f, 2.0 * s)),
        "Hdot_neg": combine(lambda f: homogeneous_norm(f, -a)),
        "Y": combine(lambda f: riesz_sobolev_norm(f, sigma, s)),
        "Wsp": combine(lambda f: wsp_norm(f, s, lebesgue_p)),
    }
    values["Wsp_weighted"] = (1.0 + time) ** beta * values["Wsp"]
    values["X"] = values["Y"] + values["Wsp_weighted"]
    if weight_n is not None:
        values[f"Hcal{s}"] = combine(lambda f: weighted_energy_norm(f, s, weight_n))
    return NormReport(
        values=values,
        grid=grid,
        sigma=sigma,
        s=s,
        lebesgue_p=lebesgue_p,
        time=time,
        beta=beta,
    )


# ---------------------------------------------------------------------------
# serialization


def save_field(field: SpectralField, path: str | Path) -> None:
    """Flat binary of coefficients next to a JSON sidecar with the metadata."""
    path = Path(path)
    path.write_bytes(np.ascontiguousarray(field.coefficients).tobytes())
    sidecar = {
        "n_per_axis": field.grid.n_per_axis,
        "box_length": field.grid.box_length,
        "dim": field.grid.dim,
        "dealias_fraction": field.grid.dealias_fraction,
        "real_valued": field.real_valued,
        "dtype": "complex128",
        "order": "C",
    }
    Path(str(path) + ".json").write_text(json.dumps(sidecar, indent=2))


def load_field(path: str | Path) -> SpectralField:
    path = Path(path)
    meta = json.loads(Path(str(path) + ".json").read_text())
    grid = GridSpec(
        n_per_axis=meta["n_per_axis"],
        box_length=meta["box_length"],
        dim=meta["dim"],
        dealias_fraction=meta["dealias_fraction"],
    )
    coef = np.frombuffer(path.read_bytes(), dtype=complex).reshape(grid.shape)
    return SpectralField(grid, coef, real_valued=meta["real_valued"])
