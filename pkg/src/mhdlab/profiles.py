"""Equilibrium shear profiles u(y), b(y) and their Elsasser combinations.

Profiles come from small analytic families so that u'', b'' are exact; the
stability condition b > |u| is enforced at construction.  Critical points of
Z_pm = u +/- b are bracketed on the sample grid and polished by Newton on the
analytic derivative.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DegenerateCritical, DegenerateField, RangeOverlap, StabilityViolation
from .grid import PeriodicGrid

_STERN_MARGIN = 0.0          # strict inequality b > |u|
_NEWTON_TOL = 1e-12          # polish |Z'| below this
_FLATNESS_TOL = 1e-6         # non-degeneracy floor for |Z''(y0)|


@dataclass(frozen=True)
class AnalyticFunction:
    """A scalar 2*pi-periodic function with two exact derivatives."""

    f: Callable[[np.ndarray], np.ndarray]
    df: Callable[[np.ndarray], np.ndarray]
    d2f: Callable[[np.ndarray], np.ndarray]
    label: str


def _constant(value: float) -> AnalyticFunction:
    return AnalyticFunction(
        f=lambda y: value * np.ones_like(np.asarray(y)),
        df=lambda y: np.zeros_like(np.asarray(y)),
        d2f=lambda y: np.zeros_like(np.asarray(y)),
        label=f"constant({value})",
    )


def _sine(amplitude: float, wavenumber: int, offset: float) -> AnalyticFunction:
    a, m = amplitude, wavenumber
    return AnalyticFunction(
        f=lambda y: offset + a * np.sin(m * y),
        df=lambda y: a * m * np.cos(m * y),
        d2f=lambda y: -a * m**2 * np.sin(m * y),
        label=f"sine(a={a}, m={m}, offset={offset})",
    )


def _cosine_sum(amplitudes: Sequence[float], wavenumbers: Sequence[int], offset: float) -> AnalyticFunction:
    amps = np.asarray(amplitudes, dtype=float)
    ms = np.asarray(wavenumbers, dtype=int)
    if amps.shape != ms.shape:
        raise ValueError("amplitudes and wavenumbers must have equal length")

    def mk(order: int) -> Callable[[np.ndarray], np.ndarray]:
        def g(y: np.ndarray) -> np.ndarray:
            y = np.asarray(y, dtype=float)
            acc = np.full_like(y, offset if order == 0 else 0.0)
            for a, m in zip(amps, ms):
                phase = m * y + order * np.pi / 2.0
                acc = acc + a * m**order * np.cos(phase)
            return acc

        return g

    return AnalyticFunction(mk(0), mk(1), mk(2), label=f"cosine_sum(a={list(amps)}, m={list(ms)}, offset={offset})")


def _tanh_jet(amplitude: float, sharpness: float, center: float, offset: float) -> AnalyticFunction:
    """Smooth periodic jet offset + a * tanh(s * sin(y - y_c))."""
    a, s, yc = amplitude, sharpness, center

    def f(y):
        return offset + a * np.tanh(s * np.sin(y - yc))

    def df(y):
        t = np.tanh(s * np.sin(y - yc))
        return a * s * np.cos(y - yc) * (1 - t**2)

    def d2f(y):
        w = y - yc
        t = np.tanh(s * np.sin(w))
        sech2 = 1 - t**2
        return a * s * sech2 * (-np.sin(w) - 2 * s * np.cos(w) ** 2 * t)

    return AnalyticFunction(f, df, d2f, label=f"tanh_jet(a={a}, s={s}, center={yc}, offset={offset})")


def make_family(spec: dict) -> AnalyticFunction:
    """Build an analytic family member from a plain-dict spec.

    Recognized families: constant, sine, cosine-sum, tanh-jet.
    """
    family = spec.get("family")
    if family == "constant":
        return _constant(float(spec.get("value", spec.get("offset", 0.0))))
    if family == "sine":
        return _sine(float(spec.get("amplitude", 0.0)), int(spec.get("wavenumber", 1)), float(spec.get("offset", 0.0)))
    if family == "cosine-sum":
        return _cosine_sum(spec.get("amplitudes", []), spec.get("wavenumbers", []), float(spec.get("offset", 0.0)))
    if family == "tanh-jet":
        return _tanh_jet(
            float(spec.get("amplitude", 0.0)), float(spec.get("sharpness", 1.0)),
            float(spec.get("center", 0.0)), float(spec.get("offset", 0.0)),
        )
    raise ValueError(f"unknown profile family: {family!r}")


@dataclass(frozen=True)
class ShearProfile:
    """Sampled equilibrium (u, b) with exact first and second derivatives."""

    grid: PeriodicGrid
    u: np.ndarray
    u_p: np.ndarray
    u_pp: np.ndarray
    b: np.ndarray
    b_p: np.ndarray
    b_pp: np.ndarray
    u_fn: AnalyticFunction
    b_fn: AnalyticFunction

    @property
    def is_constant(self) -> bool:
        return bool(np.all(self.u_p == 0.0) and np.all(self.b_p == 0.0))


@dataclass(frozen=True)
class ElsasserPair:
    """Z_pm = u +/- b sampled with derivatives; Z+ > 0 > Z- under stability."""

    grid: PeriodicGrid
    z_plus: np.ndarray
    z_plus_p: np.ndarray
    z_plus_pp: np.ndarray
    z_minus: np.ndarray
    z_minus_p: np.ndarray
    z_minus_pp: np.ndarray
    profile: ShearProfile

    def z(self, side: str) -> AnalyticFunction:
        """Analytic Z_side with derivatives, side in {'+', '-'}."""
        sgn = 1.0 if side == "+" else -1.0
        uf, bf = self.profile.u_fn, self.profile.b_fn
        return AnalyticFunction(
            f=lambda y: uf.f(y) + sgn * bf.f(y),
            df=lambda y: uf.df(y) + sgn * bf.df(y),
            d2f=lambda y: uf.d2f(y) + sgn * bf.d2f(y),
            label=f"Z{side}",
        )


@dataclass(frozen=True)
class CriticalPoint:
    """Polished critical point of Z_side with curvature value."""

    y0: float
    side: str          # '+' or '-'
    z_value: float     # Z_side(y0)
    z_pp: float        # Z_side''(y0)


def build_profile(u_spec: dict, b_spec: dict, grid: PeriodicGrid) -> ShearProfile:
    """Sample an analytic (u, b) pair on the grid and enforce stability."""
    u_fn, b_fn = make_family(u_spec), make_family(b_spec)
    y = grid.nodes
    u, b = u_fn.f(y), b_fn.f(y)
    if np.min(b) <= 0.0:
        raise DegenerateField(f"min b = {np.min(b):.3g} <= 0")
    if np.min(b - np.abs(u)) <= _STERN_MARGIN:
        raise StabilityViolation(
            f"stability requires b > |u| everywhere; min(b - |u|) = {np.min(b - np.abs(u)):.3g}"
        )
    return ShearProfile(
        grid=grid,
        u=u, u_p=u_fn.df(y), u_pp=u_fn.d2f(y),
        b=b, b_p=b_fn.df(y), b_pp=b_fn.d2f(y),
        u_fn=u_fn, b_fn=b_fn,
    )


def elsasser(profile: ShearProfile) -> ElsasserPair:
    """Form Z_pm = u +/- b and verify the sign separation Z+ > 0 > Z-."""
    zp = profile.u + profile.b
    zm = profile.u - profile.b
    if np.min(zp) <= 0.0 or np.max(zm) >= 0.0:
        raise RangeOverlap("Z+ > 0 > Z- violated; profile data corrupted")
    return ElsasserPair(
        grid=profile.grid,
        z_plus=zp, z_plus_p=profile.u_p + profile.b_p, z_plus_pp=profile.u_pp + profile.b_pp,
        z_minus=zm, z_minus_p=profile.u_p - profile.b_p, z_minus_pp=profile.u_pp - profile.b_pp,
        profile=profile,
    )


def strip_half_width(pair: ElsasserPair) -> float:
    """Validity strip half-width (min b - max |u|) / 3 for resolvent scans."""
    prof = pair.profile
    return float((np.min(prof.b) - np.max(np.abs(prof.u))) / 3.0)


def find_critical_points(pair: ElsasserPair, newton_iterations: int = 60) -> list[CriticalPoint]:
    """Bracket sign changes of Z' on the grid and polish each root by Newton.

    Constant profiles (Z' identically ~0) carry no isolated critical points
    and are rejected with a dedicated flag.
    """
    if pair.grid.n < 64:
        raise ValueError("need at least 64 sample points")
    if pair.profile.is_constant:
        raise DegenerateCritical("constant profile: Z' vanishes identically, no isolated critical points")

    out: list[CriticalPoint] = []
    y = pair.grid.nodes
    for side in ("+", "-"):
        zfun = pair.z(side)
        dz = zfun.df(y)
        nxt = np.roll(dz, -1)
        brackets = np.nonzero((dz == 0.0) | (np.sign(dz) != np.sign(nxt)))[0]
        for j in brackets:
            root = y[j]
            for _ in range(newton_iterations):
                g, gp = zfun.df(root), zfun.d2f(root)
                if abs(gp) < 1e-14:
                    break
                step = g / gp
                root = root - step
                if abs(step) < 1e-15:
                    break
            if abs(zfun.df(root)) > 1e-10:
                continue  # bracket did not polish (flat stretch); skip
            root = float(np.mod(root, 2.0 * np.pi))
            if any(cp.side == side and abs(cp.y0 - root) < 1e-8 for cp in out):
                continue
            zpp = float(zfun.d2f(root))
            if abs(zpp) < _FLATNESS_TOL:
                raise DegenerateCritical(f"|Z{side}''({root:.6f})| = {abs(zpp):.2e} < {_FLATNESS_TOL}")
            out.append(CriticalPoint(y0=root, side=side, z_value=float(zfun.f(root)), z_pp=zpp))
    out.sort(key=lambda cp: (cp.y0, cp.side))
    return out
