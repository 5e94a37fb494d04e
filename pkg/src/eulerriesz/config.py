"""Central configuration record.

Every tolerance, fit window, sampling range, and quadrature knob used by the
package lives here, so experiments and tests share one set of pinned
constants instead of scattered literals.
"""

from __future__ import annotations

import os
from dataclasses import dataclass


class Tolerances:
    """Pinned numerical tolerances (class attributes, not instances)."""

    # -- exact-identity checks ------------------------------------------------
    root = 1e-12                 # degenerate-point and closed-form root residuals
    psecond_zero = 1e-10         # |p''(r0)| after the root is substituted back
    roundtrip = 1e-12            # FFT/multiplier/partition round trips (relative)
    roundtrip_loose = 1e-10      # round trips composing several multipliers
    hermitian = 1e-12            # Hermitian-symmetry residual for real fields
    law_of_sines = 1e-10         # triangle identity on frequency triples

    # -- fitted exponents -----------------------------------------------------
    slope = 0.05                 # asymptotic |p''| slopes and decay exponents
    decay_separation = 0.1       # degenerate vs nondegenerate exponent gap
    torus_envelope_slack = 0.2   # measured torus L^p exponent <= -beta + slack
    min_r_squared = 0.95         # below this a power-law fit is flagged unclean
    fit_t_start = 5.0            # decay fits skip the transient t < 5

    # -- Monte Carlo bound verification ----------------------------------------
    stability_rel = 0.10         # extremal ratio change allowed when samples double
    sample_mag_low = 1e-6        # log-uniform magnitude floor
    sample_mag_high = 1e6        # log-uniform magnitude ceiling

    # -- kernel shell norms -----------------------------------------------------
    octave_ratio_max = 0.9       # per-octave decay needed for summability evidence
    quad_self_consistency = 0.05 # two quadrature refinements must agree to 5%
    shell_w_cutoff = 1e-6        # inner cutoff of the |xi-eta| cusp (see phasekernel)

    # -- oscillatory quadrature --------------------------------------------------
    panels_per_oscillation = 8   # panels per 2*pi of accumulated phase (minimum)
    quad_node_budget = 10**8     # error out above this estimated node count
    quad_self_convergence = 1e-8 # doubling panel density moves values less than this

    # -- normal form / solver ------------------------------------------------------
    shatah_residual_max = 1e-3   # relative identity residual at t=1, eps=1e-3
    refinement_order_min = 3.5   # observed order under (dt, tau) halving
    mass_drift = 1e-12           # absolute drift of the density integral
    curl_rel = 1e-10             # relative curl norm kept by gradient-form tendencies
    scheme_agreement = 1e-6      # L2 gap between the two time integrators at t=1
    x_surrogate_factor = 2.0     # finite-window stability bound relative to t=0
    vacuum_hard = 0.9            # hard error when ||n||_inf reaches this
    vacuum_soft = 0.5            # warning threshold (norm-equivalence regime ends)
    curl_input_rel = 1e-8        # rotational content allowed in profile conversions
    resonance_guard = 1e-13      # |Phi| below this with a live kernel is an error
    oscillation_warn = 1.0       # dt * max|p| above this degrades integrator accuracy


class Defaults:
    """Default experiment parameters (grids, bands, probe counts)."""

    sobolev_s = 3                # experimental Sobolev index (small on purpose)
    dealias_fraction = 2.0 / 3.0
    shell_eps_fraction = 1.0 / 8.0   # eps = r0/8 for the degenerate shell window
    samples_per_decade = 50      # log-spaced samples for slope fits
    probe_magnitudes = 64        # |xi| probes for kernel-norm suprema
    probe_directions = 16        # nominal directions (radial kernels dedupe to 1)
    probe_refine_rounds = 2      # adaptive refinement passes near the argmax
    ray_fan = (0.8, 0.9, 1.0, 1.1, 1.2)  # speeds relative to the critical ray
    gl_nodes_per_panel = 8       # Gauss-Legendre nodes per quadrature panel
    dense_pair_budget = 10**9    # refuse dense bilinear sums above M^2 pairs
    dense_chunk_entries = 2**20  # frequency pairs processed per vectorized chunk
    dense_table_pairs = 4 * 10**6  # cache the pair-index table when M^2 fits
    etd_contour_points = 32      # unit-circle samples averaging the phi functions

    @staticmethod
    def worker_count() -> int:
        """Worker cap for embarrassingly parallel sweeps (ERZ_THREADS)."""
        raw = os.environ.get("ERZ_THREADS", "")
        try:
            n = int(raw)
        except ValueError:
            n = 0
        if n <= 0:
            n = os.cpu_count() or 1
        return max(1, n)


@dataclass(frozen=True)
class AcceptanceBudget:
    """Runtime budget (seconds) for one acceptance criterion."""

    name: str
    seconds: float
