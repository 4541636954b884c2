"""Time evolution from the resolvent: contour and jump reconstructions.

The generator has real spectrum Ran Z+ u Ran Z-, so e^{-i*alpha*t*M} can be
assembled by functional calculus in two equivalent ways:

* a counterclockwise contour integral of e^{-i*alpha*t*c} (cI - M)^{-1} over
  two rectangles of half-height epsilon hugging the two ranges, and
* its epsilon -> 0+ limit, a real-line integral of the resolvent jump
  Phi~ = Phi(c - i0) - Phi(c + i0) against e^{-i*alpha*t*c}.

Both routes solve the scalar Sturmian equation for Phi and assemble the pair
through Psi1 = (u - c) Phi + phi0 / b, Phi1 = b Phi.  The contour route needs
t * epsilon small (the exponential grows like e^{alpha*t*eps} on the far side
of the contour); the jump route pays a one-time cost to tabulate Phi~ on a
graded real grid and is then valid at every t.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DensityTooCoarse, EpsilonTooLarge, RangeOverlap
from .grid import ComplexField, PeriodicGrid, _check_alpha, l2_norm
from .evolution import SpectralState
from .profiles import ElsasserPair, ShearProfile, elsasser, find_critical_points, strip_half_width
from .quadrature import PanelMesh, dyadic_breakpoints
from .sturmian import rhs_F, solve_resolvent_direct

# Largest imaginary offset used to sample the boundary values Phi(c -+ i*d)
# when tabulating the jump density.  The sampled difference converges to the
# jump linearly in d, so the limit is taken by Richardson extrapolation over
# d, d/2, d/4; keeping d moderate keeps the critical layers of the solve
# (width ~ d / |Z'|) resolved on the y-grid.
_JUMP_DELTA = 2e-2
_RICHARDSON = ((1.0, 1.0 / 3.0), (0.5, -2.0), (0.25, 8.0 / 3.0))

# Contour budget: beyond t * epsilon <= _T_EPS_BUDGET the quadrature error of
# the oscillatory-exponential weight is no longer uniform.
_T_EPS_BUDGET = 5.0


def _parallel_map(fn, items, jobs: int):
    """Order-preserving map; the reduction downstream stays deterministic."""
    if jobs <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# contour
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ContourSpec:
    """Quadrature nodes and complex weights tracing two rectangles.

    The rectangles have half-height epsilon, extend epsilon beyond each
    range's endpoints, and are traversed counterclockwise; summing
    weights * f(nodes) approximates the contour integral of f.
    """

    epsilon: float
    nodes: np.ndarray
    weights: np.ndarray
    rectangles: tuple[tuple[float, float], tuple[float, float]]
    orientation: str = "counterclockwise"


def _edge_nodes(z0: complex, z1: complex, epsilon: float,
                min_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes/weights along the segment z0 -> z1.

    Panel width <= 2*epsilon keeps the node spacing below epsilon / 4
    (the widest interior gap of a 16-point rule is about 0.1 of the panel).
    """
    length = abs(z1 - z0)
    panels = max(int(math.ceil(length / (2.0 * epsilon))),
                 int(math.ceil(min_nodes / 16)), 1)
    x, w = np.polynomial.legendre.leggauss(16)
    edges = np.linspace(0.0, 1.0, panels + 1)
    ss = np.concatenate([(e0 + e1) / 2 + (e1 - e0) / 2 * x
                         for e0, e1 in zip(edges[:-1], edges[1:])])
    ww = np.concatenate([(e1 - e0) / 2 * w for e0, e1 in zip(edges[:-1], edges[1:])])
    direction = z1 - z0
    return z0 + ss * direction, ww * direction


def build_contour(pair: ElsasserPair, epsilon: float,
                  nodes_per_edge: int = 0) -> ContourSpec:
    """Counterclockwise rectangles of half-height epsilon around both ranges.

    ``nodes_per_edge`` sets a floor on the node count of each edge; the
    spacing rule node gap <= epsilon / 4 always applies on top of it.
    """
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    eps0 = strip_half_width(pair)
    if epsilon >= eps0:
        raise EpsilonTooLarge(
            f"epsilon={epsilon:.3g} reaches the validity strip half-width {eps0:.3g}"
        )
    lo_p, hi_p = float(np.min(pair.z_plus)), float(np.max(pair.z_plus))
    lo_m, hi_m = float(np.min(pair.z_minus)), float(np.max(pair.z_minus))
    gap = lo_p - hi_m
    if gap <= 2.0 * epsilon:
        raise EpsilonTooLarge(
            f"extended rectangles overlap: range gap {gap:.3g} <= 2*epsilon"
        )

    nodes, weights = [], []
    for lo, hi in ((lo_m, hi_m), (lo_p, hi_p)):
        a, b = lo - epsilon, hi + epsilon
        corners = [a - 1j * epsilon, b - 1j * epsilon,
                   b + 1j * epsilon, a + 1j * epsilon]
        for z0, z1 in zip(corners, corners[1:] + corners[:1]):
            zz, ww = _edge_nodes(z0, z1, epsilon, nodes_per_edge)
            nodes.append(zz)
            weights.append(ww)
    return ContourSpec(
        epsilon=float(epsilon),
        nodes=np.concatenate(nodes),
        weights=np.concatenate(weights),
        rectangles=((lo_m, hi_m), (lo_p, hi_p)),
    )


def _assembled_pair(phi: np.ndarray, phi0: np.ndarray, profile: ShearProfile,
                    c: complex) -> tuple[np.ndarray, np.ndarray]:
    """(Psi1, Phi1) = ((u - c) Phi + phi0 / b, b Phi)."""
    return (profile.u - c) * phi + phi0 / profile.b, profile.b * phi


def reconstruct_contour(psi0: ComplexField, phi0: ComplexField,
                        profile: ShearProfile, alpha: int, t: float,
                        contour: ContourSpec, symbol=None,
                        jobs: int = 1) -> SpectralState:
    """Contour reconstruction (1/2pi i) * sum_k w_k f(c_k) (Psi1, Phi1)(c_k).

    ``symbol`` defaults to c -> e^{-i*alpha*t*c}; passing ``lambda c: 1.0``
    turns the integral into the spectral projector, which must reproduce the
    initial data (used as an internal consistency check).
    """
    _check_alpha(alpha)
    if symbol is None:
        if t * contour.epsilon > _T_EPS_BUDGET * (1 + 1e-12):
            raise EpsilonTooLarge(
                f"t*epsilon = {t * contour.epsilon:.3g} exceeds the contour "
                f"budget {_T_EPS_BUDGET}; use the jump reconstruction"
            )
        symbol = lambda c: np.exp(-1j * alpha * t * c)

    def solve(c: complex) -> np.ndarray:
        F = rhs_F(psi0, phi0, profile, alpha, c)
        return solve_resolvent_direct(F, profile, alpha, c).phi.values

    phis = _parallel_map(solve, [complex(c) for c in contour.nodes], jobs)
    grid = psi0.grid
    psi_t = np.zeros(grid.n, dtype=np.complex128)
    phi_t = np.zeros(grid.n, dtype=np.complex128)
    for c, w, phi in zip(contour.nodes, contour.weights, phis):
        p1, f1 = _assembled_pair(phi, phi0.values, profile, c)
        fac = w * symbol(c)
        psi_t += fac * p1
        phi_t += fac * f1
    scale = 1.0 / (2j * np.pi)
    return SpectralState(grid=grid, alpha=alpha,
                         psi_hat=scale * psi_t, phi_hat=scale * phi_t, t=float(t))


# ---------------------------------------------------------------------------
# jump density on the real line
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class JumpDensity:
    """Resolvent jump Phi~ = Phi(c - i*delta) - Phi(c + i*delta) tabulated
    on graded real-c meshes covering both ranges (one mesh per range),
    together with a once-coarsened tabulation for the refinement check."""

    grid: PeriodicGrid
    alpha: int
    delta: float
    meshes: tuple[PanelMesh, ...]
    jumps: tuple[np.ndarray, ...]           # (n_nodes, n_grid) per mesh
    coarse_meshes: tuple[PanelMesh, ...]
    coarse_jumps: tuple[np.ndarray, ...]
    psi0: ComplexField = field(repr=False, default=None)
    phi0: ComplexField = field(repr=False, default=None)

    @property
    def c_samples(self) -> np.ndarray:
        return np.concatenate([m.nodes for m in self.meshes])

    @property
    def jump(self) -> np.ndarray:
        return np.concatenate(self.jumps, axis=0)


def _range_meshes(pair: ElsasserPair, margin: float,
                  min_width: float) -> list[tuple[PanelMesh, PanelMesh]]:
    """(fine, coarse) graded meshes over each extended range.

    Panels cluster dyadically toward the range endpoints and every interior
    critical value of Z_s, where the boundary values vary fastest.
    """
    crit = find_critical_points(pair)
    out = []
    for side, z in (("-", pair.z_minus), ("+", pair.z_plus)):
        lo, hi = float(np.min(z)), float(np.max(z))
        special = sorted({lo, hi} | {cp.z_value for cp in crit
                                     if cp.side == side and lo < cp.z_value < hi})
        a, b = lo - margin, hi + margin
        coarse_bp = dyadic_breakpoints(a, b, special, 2.0 * min_width)
        fine_bp = np.sort(np.concatenate(
            [coarse_bp, 0.5 * (coarse_bp[:-1] + coarse_bp[1:])]))
        out.append((PanelMesh(np.asarray(fine_bp)), PanelMesh(np.asarray(coarse_bp))))
    return out


def build_jump_density(psi0: ComplexField, phi0: ComplexField,
                       profile: ShearProfile, alpha: int,
                       delta: float = _JUMP_DELTA, min_width: float = 1e-3,
                       margin: float | None = None,
                       jobs: int = 1) -> JumpDensity:
    """Tabulate the resolvent jump on graded real-c grids over both ranges.

    The jump Phi(c - i0) - Phi(c + i0) is obtained by Richardson
    extrapolation of Phi(c - i*d) - Phi(c + i*d) over d in {delta, delta/2,
    delta/4}; the meshes extend ``margin`` beyond each range so the dropped
    tails sit where the resolvent is analytic and the jump vanishes with d.
    """
    _check_alpha(alpha)
    pair = elsasser(profile)
    eps0 = strip_half_width(pair)
    lo_p = float(np.min(pair.z_plus))
    hi_m = float(np.max(pair.z_minus))
    if margin is None:
        margin = min(eps0, (lo_p - hi_m) / 3.0)
    if margin <= 0.0 or lo_p - hi_m <= 2.0 * margin:
        raise RangeOverlap("extended ranges overlap; reduce margin")

    def phi_at(c: complex) -> np.ndarray:
        F = rhs_F(psi0, phi0, profile, alpha, c)
        return solve_resolvent_direct(F, profile, alpha, c).phi.values

    def jump_at(c: float) -> np.ndarray:
        out = np.zeros(psi0.grid.n, dtype=np.complex128)
        for scale, coeff in _RICHARDSON:
            d = scale * delta
            out += coeff * (phi_at(c - 1j * d) - phi_at(c + 1j * d))
        return out

    meshes, jumps, cmeshes, cjumps = [], [], [], []
    for fine, coarse in _range_meshes(pair, margin, min_width):
        jumps.append(np.array(_parallel_map(jump_at, list(fine.nodes), jobs)))
        cjumps.append(np.array(_parallel_map(jump_at, list(coarse.nodes), jobs)))
        meshes.append(fine)
        cmeshes.append(coarse)
    return JumpDensity(grid=psi0.grid, alpha=alpha, delta=float(delta),
                       meshes=tuple(meshes), jumps=tuple(jumps),
                       coarse_meshes=tuple(cmeshes), coarse_jumps=tuple(cjumps),
                       psi0=psi0, phi0=phi0)


def _jump_quadrature(density: JumpDensity, profile: ShearProfile, alpha: int,
                     t: float, meshes, jumps) -> tuple[np.ndarray, np.ndarray]:
    grid = density.grid
    psi_t = np.zeros(grid.n, dtype=np.complex128)
    phi_t = np.zeros(grid.n, dtype=np.complex128)
    phi0 = density.phi0.values
    for mesh, jump in zip(meshes, jumps):
        for k, c in enumerate(mesh.nodes):
            # phi0 / b belongs to both boundary limits and cancels in the
            # jump; only the (u - c) Phi~ and b Phi~ rows survive.
            p1 = (profile.u - c) * jump[k]
            f1 = profile.b * jump[k]
            fac = mesh.weights[k] * np.exp(-1j * alpha * t * c)
            psi_t += fac * p1
            phi_t += fac * f1
    scale = 1.0 / (2j * np.pi)
    return scale * psi_t, scale * phi_t


def reconstruct_jump(psi0: ComplexField, phi0: ComplexField,
                     profile: ShearProfile, alpha: int, t: float,
                     density: JumpDensity) -> SpectralState:
    """Real-line jump reconstruction, valid at every t.

    (psi, phi)(t) = (1/2pi i) int e^{-i*alpha*t*c} ((u-c) Phi~, b Phi~) dc
    over Ran Z+ u Ran Z-.  Raises DensityTooCoarse when coarsening the c-mesh
    by panel halving moves the answer by more than 1e-3 relative.
    """
    _check_alpha(alpha)
    grid = density.grid
    psi_t, phi_t = _jump_quadrature(density, profile, alpha, t,
                                    density.meshes, density.jumps)
    psi_c, phi_c = _jump_quadrature(density, profile, alpha, t,
                                    density.coarse_meshes, density.coarse_jumps)
    norm = math.hypot(l2_norm(psi_t, grid), l2_norm(phi_t, grid))
    diff = math.hypot(l2_norm(psi_t - psi_c, grid), l2_norm(phi_t - phi_c, grid))
    if norm > 0.0 and diff / norm > 1e-3:
        raise DensityTooCoarse(
            f"halving the c-mesh changes the reconstruction by {diff / norm:.2e} "
            "relative; rebuild the density with smaller min_width"
        )
    return SpectralState(grid=grid, alpha=alpha,
                         psi_hat=psi_t, phi_hat=phi_t, t=float(t))
