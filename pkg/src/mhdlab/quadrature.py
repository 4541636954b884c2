"""Composite Gauss-Legendre panel quadrature with dyadic refinement.

The Sturmian integrals develop sharp features at turning points where the
coefficient (Z- - c)(Z+ - c) nearly vanishes; panels are bisected dyadically
toward those points until the smallest panel resolves the feature scale.
Cumulative (antiderivative) values at all panel nodes are available so that
iterated integrals anchor exactly at panel breakpoints.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_GL_POINTS = 16


def _gl_rule(npts: int = _GL_POINTS) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(npts)


def _cumulative_weight_matrix(npts: int = _GL_POINTS) -> np.ndarray:
    """C[i, j]: integral over [-1, x_i] of the j-th Lagrange basis polynomial."""
    x, _ = _gl_rule(npts)
    # Lagrange basis in monomial form via Vandermonde inversion (well enough
    # conditioned at 16 Gauss nodes for double precision here).
    V = np.vander(x, npts, increasing=True)
    coeffs = np.linalg.inv(V)  # row k of coeffs.T: coefficients of basis_k
    C = np.zeros((npts, npts))
    for j in range(npts):
        poly = coeffs[:, j]
        anti = np.concatenate([[0.0], poly / np.arange(1, npts + 1)])
        for i in range(npts):
            C[i, j] = np.polyval(anti[::-1], x[i]) - np.polyval(anti[::-1], -1.0)
    return C


_GL_X, _GL_W = _gl_rule()
_GL_CUM = _cumulative_weight_matrix()


def dyadic_breakpoints(a: float, b: float, special: list[float], min_width: float,
                       base_panels: int = 8) -> np.ndarray:
    """Panel breakpoints on [a, b], bisected toward each special point.

    Starting from a uniform partition, any panel adjacent to (or containing)
    a special point is bisected until its width falls below min_width.
    """
    if b <= a:
        raise ValueError("empty interval")
    pts = set(np.linspace(a, b, base_panels + 1))
    for s in special:
        if a < s < b:
            pts.add(s)
    brk = np.array(sorted(pts))
    # refine panels touching special points
    for s in special:
        if not (a <= s <= b):
            continue
        changed = True
        while changed:
            changed = False
            new = []
            for lo, hi in zip(brk[:-1], brk[1:]):
                near = (lo - min_width <= s <= hi + min_width) or (lo <= s <= hi)
                touches = abs(lo - s) < 2 * (hi - lo) or abs(hi - s) < 2 * (hi - lo) or (lo <= s <= hi)
                if touches and (hi - lo) > min_width:
                    new.extend([lo, 0.5 * (lo + hi)])
                    changed = True
                else:
                    new.append(lo)
            new.append(brk[-1])
            brk = np.array(new)
    # merge breakpoints closer than the grading floor (a special point can
    # coincide with a uniform breakpoint up to rounding, leaving a sliver)
    tol = 0.1 * min_width
    merged = [brk[0]]
    for x in brk[1:]:
        if x - merged[-1] > tol:
            merged.append(x)
    merged[-1] = brk[-1]
    return np.array(merged)


@dataclass
class PanelMesh:
    """Gauss-Legendre nodes/weights over a fixed panel decomposition."""

    breakpoints: np.ndarray
    nodes: np.ndarray = field(init=False)
    weights: np.ndarray = field(init=False)

    def __post_init__(self):
        brk = np.asarray(self.breakpoints, dtype=float)
        if brk.ndim != 1 or len(brk) < 2 or np.any(np.diff(brk) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        self.breakpoints = brk
        mids = 0.5 * (brk[:-1] + brk[1:])
        half = 0.5 * np.diff(brk)
        self.nodes = (mids[:, None] + half[:, None] * _GL_X[None, :]).ravel()
        self.weights = (half[:, None] * _GL_W[None, :]).ravel()

    @property
    def npanels(self) -> int:
        return len(self.breakpoints) - 1

    def integrate(self, values: np.ndarray) -> complex:
        return complex(np.sum(self.weights * values))

    def antiderivative(self, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Cumulative integral from the left mesh end.

        Returns (node_values, breakpoint_values): the antiderivative sampled
        at every Gauss node and at every panel breakpoint.
        """
        vals = values.reshape(self.npanels, _GL_POINTS)
        half = 0.5 * np.diff(self.breakpoints)
        panel_totals = (vals * _GL_W[None, :]).sum(axis=1) * half
        prefix = np.concatenate([[0.0], np.cumsum(panel_totals)])
        inner = (vals[:, None, :] * _GL_CUM[None, :, :]).sum(axis=2) * half[:, None]
        node_vals = (prefix[:-1, None] + inner).ravel()
        return node_vals, prefix

    def cumulative_from(self, values: np.ndarray, anchor: float) -> np.ndarray:
        """Antiderivative anchored at a breakpoint (integral from anchor to y)."""
        node_vals, prefix = self.antiderivative(values)
        idx = int(np.argmin(np.abs(self.breakpoints - anchor)))
        if abs(self.breakpoints[idx] - anchor) > 1e-12 * max(1.0, abs(anchor)):
            raise ValueError("anchor must coincide with a mesh breakpoint")
        return node_vals - prefix[idx]

    def interpolate(self, values: np.ndarray, y: np.ndarray | float) -> np.ndarray:
        """Barycentric interpolation within the containing panel."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        vals = values.reshape(self.npanels, _GL_POINTS)
        out = np.empty(len(y), dtype=values.dtype)
        # barycentric weights for Gauss nodes on [-1, 1]
        wbary = np.empty(_GL_POINTS)
        for i in range(_GL_POINTS):
            wbary[i] = 1.0 / np.prod(_GL_X[i] - np.delete(_GL_X, i))
        for m, yy in enumerate(y):
            p = int(np.clip(np.searchsorted(self.breakpoints, yy) - 1, 0, self.npanels - 1))
            lo, hi = self.breakpoints[p], self.breakpoints[p + 1]
            x = 2.0 * (yy - lo) / (hi - lo) - 1.0
            diffs = x - _GL_X
            hit = np.nonzero(np.abs(diffs) < 1e-14)[0]
            if len(hit):
                out[m] = vals[p, hit[0]]
            else:
                t = wbary / diffs
                out[m] = np.sum(t * vals[p]) / np.sum(t)
        return out
