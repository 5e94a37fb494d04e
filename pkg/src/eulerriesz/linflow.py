"""Linear half-wave flow e^{i t p(|grad|)}.

Torus propagation is an exact unimodular multiplier.  Long-time decay cannot
be seen on a torus (wave packets wrap), so pointwise decay experiments
evaluate the whole-space fundamental solution instead: for a radial window
w(|xi|) the inverse transform at radius |x| reduces to the 1D integral

    (1/(2 pi^2)) * int_0^inf r^2 sinc(r|x|) e^{i t p(r)} w(r) dr,

evaluated with composite Gauss-Legendre panels sized by the fastest local
phase rate |t| p'(r) + |x|.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import roots_legendre

from .config import Defaults, Tolerances
from .dispersion import (
    DispersionParams,
    beta_exponent,
    degenerate_point,
    p_eval,
    p_prime,
)
from .spectral import (
    GridSpec,
    SpectralField,
    apply_multiplier,
    half_wave,
    lp_norm,
    phi_eval,
    shell_window,
)


# ---------------------------------------------------------------------------
# windows


@dataclass(frozen=True)
class RadialWindow:
    """Compactly supported radial profile used as quadrature weight.

    ``min_panels`` encodes the smallest feature the profile carries, so the
    panel builder never under-resolves a transition region even at t = 0.
    """

    profile: Callable
    support: tuple[float, float]
    label: str
    min_panels: int = 8

    def __post_init__(self):
        lo, hi = self.support
        if not (0.0 <= lo < hi):
            raise ValueError("window support must satisfy 0 <= lo < hi")

    def __call__(self, r):
        return self.profile(np.asarray(r, dtype=float))


def window_lp(scale: float) -> RadialWindow:
    """Dyadic-shell bump at scale N, supported on [N/2, 2N]."""
    return RadialWindow(
        profile=lambda r, n=scale: phi_eval(n, r),
        support=(scale / 2.0, 2.0 * scale),
        label=f"lp_shell_N={scale:g}",
        min_panels=12,
    )


def window_shell(params: DispersionParams, eps: float | None = None) -> RadialWindow:
    """Window pinned to the curvature-degenerate radius (sigma > 1 only)."""
    r0 = degenerate_point(params)
    if eps is None:
        eps = Defaults.shell_eps_fraction * r0
    if not (0.0 < 2.0 * eps < r0):
        raise ValueError(f"need 0 < 2*eps < r0; got eps={eps}, r0={r0:.6g}")
    return RadialWindow(
        profile=lambda r, c=r0, e=eps: shell_window(r, c, e),
        support=(r0 - 2.0 * eps, r0 + 2.0 * eps),
        label=f"degenerate_shell_eps={eps:g}",
        min_panels=24,
    )


# ---------------------------------------------------------------------------
# experiment configuration


@dataclass(frozen=True)
class OscillatorySpec:
    """One pointwise decay experiment: a window probed along rays in time."""

    window: RadialWindow
    t_samples: tuple[float, ...]
    speeds: tuple[float, ...]
    panels_per_oscillation: int = Tolerances.panels_per_oscillation
    max_radius: float = 32.0

    def __post_init__(self):
        t = np.asarray(self.t_samples, dtype=float)
        if t.size == 0 or np.any(t <= 0.0) or np.any(np.diff(t) <= 0.0):
            raise ValueError("t_samples must be strictly increasing and positive")
        if self.panels_per_oscillation < 8:
            raise ValueError("panels_per_oscillation must be at least 8")
        if not self.speeds:
            raise ValueError("at least one probe speed is required")


@dataclass
class DecayFit:
    """Log-log least-squares line through (t, amplitude) samples."""

    exponent: float
    intercept: float
    r_squared: float
    window: tuple[float, float]
    samples: list

    @property
    def clean(self) -> bool:
        return self.r_squared >= Tolerances.min_r_squared

    def to_json(self) -> str:
        return json.dumps(
            {
                "exponent": self.exponent,
                "intercept": self.intercept,
                "r_squared": self.r_squared,
                "clean": self.clean,
                "window": list(self.window),
                "samples": [[float(t), float(v)] for t, v in self.samples],
            },
            indent=2,
        )


# ---------------------------------------------------------------------------
# propagation and the fundamental solution


def propagate(field: SpectralField, params: DispersionParams, t: float) -> SpectralField:
    """Exact linear evolution on the grid; the zero mode rides along (p(0)=0)."""
    return apply_multiplier(field, half_wave(params, t))


def _panel_count(
    params: DispersionParams,
    window: RadialWindow,
    t: float,
    x_mag: float,
    ppo: int,
    nodes_per_panel: int,
) -> tuple[int, float, float]:
    lo, hi = window.support
    probe = np.linspace(max(lo, 1e-12), hi, 512)
    rate = np.max(np.abs(t) * p_prime(params, probe) + x_mag)
    total_phase = rate * (hi - lo)
    by_phase = int(np.ceil(total_phase * ppo / (2.0 * np.pi * nodes_per_panel)))
    return max(window.min_panels, by_phase), lo, hi


def fundamental_value(
    params: DispersionParams,
    window: RadialWindow,
    t: float,
    x,
    panels_per_oscillation: int = Tolerances.panels_per_oscillation,
) -> complex:
    """Whole-space solution value at time t and point x for radial window data."""
    x_mag = float(np.linalg.norm(np.atleast_1d(np.asarray(x, dtype=float))))
    nodes_per_panel = Defaults.gl_nodes_per_panel
    n_panels, lo, hi = _panel_count(
        params, window, t, x_mag, panels_per_oscillation, nodes_per_panel
    )
    est_nodes = n_panels * nodes_per_panel
    if est_nodes > Tolerances.quad_node_budget:
        raise ValueError(
            f"quadrature budget exceeded: {est_nodes:.3g} nodes needed at "
            f"(t={t:g}, |x|={x_mag:g})"
        )
    nodes, weights = roots_legendre(nodes_per_panel)
    edges = np.linspace(lo, hi, n_panels + 1)
    half = np.diff(edges) / 2.0
    mid = (edges[:-1] + edges[1:]) / 2.0
    r = mid[:, None] + half[:, None] * nodes[None, :]
    w = half[:, None] * weights[None, :]
    vals = (
        r**2
        * np.sinc(r * x_mag / np.pi)
        * np.exp(1j * t * p_eval(params, r))
        * window(r)
    )
    return complex(np.sum(w * vals) / (2.0 * np.pi**2))


# ---------------------------------------------------------------------------
# fitting


def fit_decay(samples: Sequence) -> DecayFit:
    """Least-squares power-law fit; rejects inputs a log-log line cannot see."""
    pts = [(float(t), float(v)) for t, v in samples]
    if len(pts) < 8:
        raise ValueError(f"insufficient samples: need at least 8, got {len(pts)}")
    t = np.array([p[0] for p in pts])
    v = np.array([p[1] for p in pts])
    if np.any(t <= 0.0):
        raise ValueError("sample times must be positive")
    if np.any(v <= 0.0):
        raise ValueError("nonpositive value: log-log fit undefined")
    if np.max(t) / np.min(t) < 10.0:
        raise ValueError("samples must span at least one decade in t")
    x = np.log10(t)
    y = np.log10(v)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum(resid**2))
    r2 = 1.0 if ss_tot <= 1e-30 else max(0.0, 1.0 - ss_res / ss_tot)
    return DecayFit(
        exponent=float(slope),
        intercept=float(intercept),
        r_squared=float(r2),
        window=(float(np.min(t)), float(np.max(t))),
        samples=pts,
    )


def run_oscillatory(params: DispersionParams, spec: OscillatorySpec) -> list:
    """(t, sup over the speed probe of |value|) samples, in t order."""
    out = []
    for t in spec.t_samples:
        amp = max(
            abs(
                fundamental_value(
                    params, spec.window, t, c * t, spec.panels_per_oscillation
                )
            )
            for c in spec.speeds
        )
        out.append((float(t), float(amp)))
    return out


# ---------------------------------------------------------------------------
# decay experiments


def nondegenerate_speed_probe(
    params: DispersionParams, r_lo: float, r_hi: float, count: int = 9
) -> tuple[float, ...]:
    """Group-velocity range over a band, sampled for the ray sup."""
    probe = np.linspace(max(r_lo, 1e-9), r_hi, 512)
    v = p_prime(params, probe)
    return tuple(np.linspace(float(np.min(v)), float(np.max(v)), count))


def decay_experiment_nondegenerate(
    params: DispersionParams,
    scale: float = 1.0,
    t_samples: Sequence[float] | None = None,
    panels_per_oscillation: int = Tolerances.panels_per_oscillation,
) -> DecayFit:
    """Pointwise decay of a dyadic-shell wave packet, sup over group-velocity rays.

    The default fit window starts at t = 1e3 so the stationary-phase
    asymptotics have settled; earlier times mix in O(1/t) corrections that
    bias the fitted slope.
    """
    if t_samples is None:
        t_samples = np.logspace(3, 5, 25)
    window = window_lp(scale)
    speeds = nondegenerate_speed_probe(params, *window.support, count=17)
    spec = OscillatorySpec(
        window=window,
        t_samples=tuple(float(t) for t in t_samples),
        speeds=speeds,
        panels_per_oscillation=panels_per_oscillation,
        max_radius=4.0 * scale,
    )
    return fit_decay(run_oscillatory(params, spec))


@dataclass
class DegenerateDecayResult:
    critical: DecayFit
    fan: DecayFit
    ray_speed: float
    fan_factors: tuple[float, ...]


def decay_experiment_degenerate(
    params: DispersionParams,
    t_samples: Sequence[float] | None = None,
    eps: float | None = None,
    fan: tuple[float, ...] = Defaults.ray_fan,
    panels_per_oscillation: int = Tolerances.panels_per_oscillation,
) -> DegenerateDecayResult:
    """Decay of the degenerate-shell packet on and around the critical ray.

    The critical ray moves at the group velocity of the degenerate radius,
    where the quadratic phase term vanishes and only the cubic one remains.

    The cubic stationary region has width (6/(t p'''(r0)))^(1/3), which must
    fit inside the window plateau before the t^(-4/3) law can appear; the
    defaults (eps = r0/4 and a fit window starting at 6e3) put the whole fit
    past that crossover.  Earlier windows measure the pre-asymptotic 1/|x|
    regime instead, whatever the quadrature accuracy.
    """
    r0 = degenerate_point(params)
    v0 = p_prime(params, r0)
    if eps is None:
        eps = r0 / 4.0
    if t_samples is None:
        t_samples = np.logspace(np.log10(6e3), np.log10(6e5), 25)
    window = window_shell(params, eps)
    tt = tuple(float(t) for t in t_samples)
    critical = fit_decay(
        run_oscillatory(
            params,
            OscillatorySpec(window, tt, (v0,), panels_per_oscillation),
        )
    )
    fan_spec = OscillatorySpec(
        window, tt, tuple(c * v0 for c in fan), panels_per_oscillation
    )
    fan_fit = fit_decay(run_oscillatory(params, fan_spec))
    return DegenerateDecayResult(
        critical=critical, fan=fan_fit, ray_speed=v0, fan_factors=tuple(fan)
    )


def frequency_growth_experiment(
    params: DispersionParams,
    scales: tuple[float, ...] = (1.0, 2.0, 4.0, 8.0),
    t: float = 300.0,
    panels_per_oscillation: int = Tolerances.panels_per_oscillation,
) -> dict:
    """Octave scaling of sup_x amplitude at fixed time across shell scales."""
    amps = {}
    for scale in scales:
        window = window_lp(scale)
        speeds = nondegenerate_speed_probe(params, *window.support)
        amps[scale] = max(
            abs(fundamental_value(params, window, t, c * t, panels_per_oscillation))
            for c in speeds
        )
    ratios = {}
    for lo, hi in zip(scales[:-1], scales[1:]):
        ratios[(lo, hi)] = amps[hi] / amps[lo] / (hi / lo) ** 2.5
    return {"t": t, "amplitudes": amps, "octave_ratio_over_expected": ratios}


# ---------------------------------------------------------------------------
# torus L^p decay


def band_wrap_time(grid: GridSpec, params: DispersionParams, r_lo: float, r_hi: float) -> float:
    """Time for the fastest packet in the band to cross half the box."""
    if not (0.0 < r_lo < r_hi):
        raise ValueError("band must satisfy 0 < r_lo < r_hi")
    probe = np.linspace(r_lo, r_hi, 1024)
    vmax = float(np.max(p_prime(params, probe)))
    return grid.box_length / (2.0 * vmax)


@dataclass
class LpDecayResult:
    fit: DecayFit
    beta_target: float
    sigma: float
    lebesgue_p: float
    wrap_time: float

    @property
    def envelope_ok(self) -> bool:
        """Estimates are upper bounds: measured decay may be faster, not slower."""
        return self.fit.exponent <= self.beta_target + Tolerances.torus_envelope_slack


def lp_decay_experiment(
    params: DispersionParams,
    lebesgue_p: float,
    data: SpectralField,
    t_samples: Sequence[float],
) -> LpDecayResult:
    """Propagate band-limited data on the torus and fit the L^p norm decay."""
    coef = np.abs(data.coefficients)
    scale = float(np.max(coef))
    if scale == 0.0:
        raise ValueError("data field is identically zero")
    active = coef > 1e-13 * scale
    grid = data.grid
    if active[(0,) * grid.dim]:
        raise ValueError("data must be band-limited away from zero frequency")
    radii = grid.xi_norm[active]
    r_lo, r_hi = float(np.min(radii)), float(np.max(radii))
    wrap = band_wrap_time(grid, params, r_lo, r_hi)
    t_arr = [float(t) for t in t_samples]
    for t in t_arr:
        if t > wrap:
            raise ValueError(
                f"periodic wrap: decay invalid (t={t:g} beyond wrap time {wrap:.4g})"
            )
    samples = [(t, lp_norm(propagate(data, params, t), lebesgue_p)) for t in t_arr]
    fit = fit_decay(samples)
    target = -beta_exponent(params, lebesgue_p).beta
    return LpDecayResult(
        fit=fit,
        beta_target=target,
        sigma=params.sigma,
        lebesgue_p=lebesgue_p,
        wrap_time=wrap,
    )


# ---------------------------------------------------------------------------
# reporting


def decay_csv(samples: Sequence, sigma: float, lebesgue_p, window_id: str) -> str:
    """CSV block with one row per (t, value) sample."""
    lines = ["sigma,p,t,norm_or_amplitude,window_id"]
    p_txt = "" if lebesgue_p is None else f"{lebesgue_p:g}"
    for t, v in samples:
        lines.append(f"{sigma:g},{p_txt},{t:.12g},{v:.12e},{window_id}")
    return "\n".join(lines) + "\n"
