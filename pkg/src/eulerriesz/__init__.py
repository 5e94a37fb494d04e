"""Pseudospectral simulator and estimate-verification toolkit for the 3D
irrotational Euler-Riesz system.

The package is organized around the dispersion relation
p(r) = (r^2 + r^(2-sigma))^(1/2), 0 < sigma < 2:

- ``dispersion``:  scalar mathematics of p (derivatives, degenerate point,
  decay exponents, asymptotic slope validators).
- ``spectral``:    periodic-grid transforms, radial multipliers,
  Littlewood-Paley and degenerate-shell projectors, norm suite.
- ``linflow``:     the linear semigroup, whole-space oscillatory quadrature,
  and decay-rate measurements.
- ``phasekernel``: resonance phases, bilinear symbols, regularized kernels,
  and sampling verifiers for the phase estimates.
- ``normalform``:  quadratic nonlinearity, dense bilinear operators, the
  normal-form boundary/cubic terms, and the end-to-end identity residual.
- ``solver``:      exponential time integration of the nonlinear system with
  invariant and norm monitors.
- ``cli``:         the ``erz`` command.
"""

__version__ = "0.1.0"
