"""Observables over trajectories: damping norms, depletion traces, energy,
space-time accumulation, and exponent fits.

All functions here are pure folds over snapshot lists; nothing mutates a
state, so series from independent runs never interact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import FitUnstable, GridMismatch
from .evolution import SpectralState, ToyState, apply_generator, primitive_fields
from .grid import l2_norm, sobolev_norm, trig_interpolate
from .profiles import ShearProfile


@dataclass(frozen=True)
class NormSeries:
    """A scalar observable sampled along a trajectory."""

    times: np.ndarray
    values: np.ndarray
    label: str
    metadata: str = ""

    def __post_init__(self):
        times = np.asarray(self.times, dtype=np.float64)
        values = np.asarray(self.values, dtype=np.float64)
        if times.shape != values.shape or times.ndim != 1:
            raise ValueError("times and values must be 1-d and aligned")
        if times.size > 1 and not np.all(np.diff(times) > 0.0):
            raise ValueError("times must be strictly increasing")
        if not (np.all(np.isfinite(times)) and np.all(np.isfinite(values))):
            raise ValueError("non-finite series entries")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)


def _primitive(state) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(U1, U2, H1, H2) for either the full or the toy state.

    The toy model carries only the horizontal fields; its U2, H2 are zero.
    """
    if isinstance(state, ToyState):
        u1 = 0.5 * (state.z1_plus + state.z1_minus)
        h1 = 0.5 * (state.z1_plus - state.z1_minus)
        zero = np.zeros_like(u1)
        return u1, zero, h1, zero
    return primitive_fields(state)


def _check_coherent(snapshots) -> None:
    if not snapshots:
        raise ValueError("empty trajectory")
    n, a = snapshots[0].grid.n, snapshots[0].alpha
    for s in snapshots:
        if s.grid.n != n or s.alpha != a:
            raise GridMismatch("snapshots mix grids or wavenumbers")


def vertical_norms(snapshots, metadata: str = "") -> NormSeries:
    """||(U2, H2)(t)||_{L2}: the vertical components whose decay is the
    damping statement for sheared profiles (constant profiles only rotate)."""
    _check_coherent(snapshots)
    grid = snapshots[0].grid
    times, values = [], []
    for s in snapshots:
        _, u2, _, h2 = _primitive(s)
        times.append(s.t)
        values.append(np.hypot(l2_norm(u2, grid), l2_norm(h2, grid)))
    return NormSeries(np.array(times), np.array(values), "vertical_l2", metadata)


def mixing_norms(snapshots, metadata: str = "") -> NormSeries:
    """||(d_x U1, d_x H1)(t)|| measured in H^{-1} of y.

    The horizontal fields only phase-mix, so they decay in this negative
    norm while staying order one pointwise; per snapshot the value is
    |alpha| * sqrt(||U1||_{H^-1}^2 + ||H1||_{H^-1}^2).
    """
    _check_coherent(snapshots)
    grid = snapshots[0].grid
    a = abs(snapshots[0].alpha)
    times, values = [], []
    for s in snapshots:
        u1, _, h1, _ = _primitive(s)
        times.append(s.t)
        values.append(a * np.hypot(sobolev_norm(u1, grid, -1.0),
                                   sobolev_norm(h1, grid, -1.0)))
    return NormSeries(np.array(times), np.array(values), "mixing_h-1", metadata)


def spacetime_accumulator(snapshots, profile: ShearProfile,
                          metadata: str = "") -> tuple[NormSeries, float]:
    """Running integral of ||(psi, phi)||^2 + ||d_t(psi, phi)||^2.

    The time derivative is evaluated exactly by applying the generator at
    each snapshot, not by differencing.  Returns the accumulator series and
    its final value divided by ||(psi, phi)(0)||_{H^3}^2, the constant whose
    boundedness is the content of the space-time estimate.
    """
    _check_coherent(snapshots)
    grid = snapshots[0].grid
    times, density = [], []
    for s in snapshots:
        dpsi, dphi = apply_generator(s, profile)
        val = (l2_norm(s.psi_hat, grid) ** 2 + l2_norm(s.phi_hat, grid) ** 2
               + l2_norm(dpsi, grid) ** 2 + l2_norm(dphi, grid) ** 2)
        times.append(s.t)
        density.append(val)
    times = np.array(times)
    density = np.array(density)
    running = np.concatenate([[0.0], np.cumsum(
        0.5 * (density[1:] + density[:-1]) * np.diff(times))])
    s0 = snapshots[0]
    h3 = (sobolev_norm(s0.psi_hat, grid, 3.0) ** 2
          + sobolev_norm(s0.phi_hat, grid, 3.0) ** 2)
    ratio = float(running[-1] / h3) if h3 > 0.0 else 0.0
    series = NormSeries(times, running, "spacetime_accumulator", metadata)
    return series, ratio


def depletion_trace(snapshots, points, metadata: str = "") -> list[NormSeries]:
    """|U1| + |H1| at each probe point, per snapshot, via trigonometric
    interpolation.  Probes should mix critical points and control points."""
    _check_coherent(snapshots)
    grid = snapshots[0].grid
    points = [float(p) for p in points]
    times = np.array([s.t for s in snapshots])
    rows = np.empty((len(snapshots), len(points)))
    for i, s in enumerate(snapshots):
        u1, _, h1, _ = _primitive(s)
        yq = np.mod(np.array(points), 2.0 * np.pi)
        rows[i] = (np.abs(trig_interpolate(u1, grid, yq))
                   + np.abs(trig_interpolate(h1, grid, yq)))
    return [NormSeries(times, rows[:, j], f"depletion@y={points[j]:.6g}", metadata)
            for j in range(len(points))]


def energy_functional(state: SpectralState, profile: ShearProfile, k: int) -> float:
    """Quadratic energy of one mode, conserved when u is constant.

    E_k = a^{2k} ( ||U1||^2 + ||U2||^2 + ||H2||^2
                   + ||H1 - i (a b)^{-1} b' H2||^2 ),  a = alpha.
    The b'-corrected term is what makes the magnetic part exactly conserved
    for nonconstant b; it reduces to ||H1||^2 when b is constant.
    """
    if k < 0 or int(k) != k:
        raise ValueError("k must be a nonnegative integer")
    grid = state.grid
    a = state.alpha
    u1, u2, h1, h2 = primitive_fields(state)
    corrected = h1 - 1j * profile.b_p / (a * profile.b) * h2
    total = (l2_norm(u1, grid) ** 2 + l2_norm(u2, grid) ** 2
             + l2_norm(h2, grid) ** 2 + l2_norm(corrected, grid) ** 2)
    return float(abs(a) ** (2 * k) * total)


def _windowed_max(values: np.ndarray, window: int) -> np.ndarray:
    """Trailing running max over ``window`` samples, taming oscillation."""
    out = np.empty_like(values)
    for i in range(len(values)):
        out[i] = np.max(values[max(0, i - window + 1):i + 1])
    return out


def growth_fit(series: NormSeries, model: str, window: int = 10) -> tuple[float, float]:
    """Fit the envelope of a series; returns (exponent or slope, residual).

    model='power' fits log(value) against log(t) and returns the exponent;
    model='linear-envelope' fits value against t and returns the slope.
    Both fit the trailing windowed max of the series.  The residual is the
    rms misfit relative to the ordinate span; FitUnstable above 0.1.
    """
    t, v = series.times, series.values
    if len(t) < 10:
        raise ValueError("need at least 10 samples")
    if model == "power":
        mask = (t > 0.0) & (v > 0.0)
        t, v = t[mask], v[mask]
        if len(t) < 10 or t[-1] < 10.0 * t[0]:
            raise ValueError("power fit needs >= 10 samples spanning a decade")
        x, y = np.log(t), np.log(_windowed_max(v, window))
    elif model == "linear-envelope":
        x, y = t, _windowed_max(v, window)
    else:
        raise ValueError(f"unknown model {model!r}")
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    span = float(np.max(y) - np.min(y))
    rel = float(np.sqrt(np.mean(resid ** 2)) / span) if span > 0.0 else 0.0
    if rel > 0.1:
        raise FitUnstable(f"relative fit residual {rel:.3f} exceeds 0.1")
    return float(slope), rel
