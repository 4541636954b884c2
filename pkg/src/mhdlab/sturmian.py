"""Degenerate Sturm-type resolvent equation for the sheared MHD generator.

Solves ``d/dy((Z- - c)(Z+ - c) dPhi/dy) - alpha^2 (Z- - c)(Z+ - c) Phi = F``
for complex spectral parameter c, by two independent routes:

* a global dense pseudospectral solve on the periodic grid (robust away from
  the real spectrum, used as the Dunford-integral workhorse), and
* a local explicit construction near a critical point of Z_side, built from
  Neumann-series homogeneous solutions anchored at the turning points.

The local route stays accurate as c approaches the spectrum, where the dense
solve degrades; the two are cross-validated on their overlap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack
from scipy.optimize import brentq

from .errors import (
    BranchCutViolation,
    FitUnstable,
    NearSingular,
    NotConverging,
    SeriesDiverging,
    SingularDeterminant,
    WindowInvalid,
)
from .grid import (
    ComplexField,
    PeriodicGrid,
    _check_alpha,
    dense_derivative_matrix,
    derivative,
    l2_norm,
    laplacian_alpha,
    trig_interpolate,
)
from .profiles import CriticalPoint, ElsasserPair, ShearProfile, find_critical_points
from .quadrature import PanelMesh, dyadic_breakpoints

_COND_LIMIT = 1.0e12
_SERIES_TOL = 1.0e-12
_SERIES_MAX_TERMS = 50
_DET_FLOOR = 1.0e-8

# imaginary offset for derivatives of analytic coefficient combinations;
# kept moderate so sqrt(Z - Z0) is evaluated away from its double zero,
# where the real-axis cancellation would otherwise dominate
_CSTEP = 1.0e-2


# ---------------------------------------------------------------------------
# global dense route
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ResolventSample:
    """One resolvent solve: Phi(.,c) and its flux q = (Z- - c)(Z+ - c) dPhi."""

    c: complex
    alpha: int
    phi: ComplexField
    q: ComplexField
    f_rhs: ComplexField
    cond_estimate: float


def rhs_F(psi0: ComplexField, phi0: ComplexField, profile: ShearProfile,
          alpha: int, c: complex) -> ComplexField:
    """Right-hand side F(alpha, y, c) driving the resolvent equation.

    F = -Lap_a psi0 - (u - c) Lap_a (phi0 / b) + u'' phi0 / b,
    with Lap_a = d^2/dy^2 - alpha^2.  The sign of the psi0 term makes the
    Dunford reconstruction from the assembled resolvent reproduce the
    constant-coefficient dynamics exactly (see tests).
    """
    _check_alpha(alpha)
    grid = psi0.grid
    if np.min(profile.b) <= 0.0:
        raise ValueError("b must be positive")
    phib = phi0.values / profile.b
    out = (
        -laplacian_alpha(psi0.values, grid, alpha)
        - (profile.u - c) * laplacian_alpha(phib, grid, alpha)
        + profile.u_pp * phib
    )
    return ComplexField(grid, out)


_DENSE_D1: dict[int, np.ndarray] = {}


def _d1_matrix(grid: PeriodicGrid) -> np.ndarray:
    if grid.n not in _DENSE_D1:
        _DENSE_D1[grid.n] = dense_derivative_matrix(grid, 1)
    return _DENSE_D1[grid.n]


def solve_resolvent_direct(F: ComplexField, profile: ShearProfile, alpha: int,
                           c: complex) -> ResolventSample:
    """Dense pivoted-LU solve of the resolvent equation on the periodic grid."""
    _check_alpha(alpha)
    grid = F.grid
    w = (profile.u - profile.b - c) * (profile.u + profile.b - c)
    D = _d1_matrix(grid)
    A = D @ (w[:, None] * D) - alpha**2 * np.diag(w)
    A = A.astype(np.complex128)
    anorm = np.linalg.norm(A, 1)
    lu, piv, info = lapack.zgetrf(A)
    rcond = lapack.zgecon(lu, anorm)[0] if info == 0 else 0.0
    cond = np.inf if rcond == 0.0 else 1.0 / rcond
    if info != 0 or cond > _COND_LIMIT:
        raise NearSingular(
            f"resolvent system condition estimate {cond:.2e} exceeds {_COND_LIMIT:.0e} "
            f"at c={c}; refine the grid or use the local explicit route"
        )
    phi = lapack.zgetrs(lu, piv, F.values)[0]
    q = w * derivative(phi, grid, 1)
    return ResolventSample(c=complex(c), alpha=alpha, phi=ComplexField(grid, phi),
                           q=ComplexField(grid, q), f_rhs=F, cond_estimate=float(cond))


def resolvent_uniform_scan(F_list, profile: ShearProfile, alpha: int,
                           c_grid) -> tuple[list[dict], float]:
    """Tabulate ||Phi||_L2 and ||q||_H1 against ||F||_H1 over a set of c.

    Returns the table rows and the largest observed ratio
    (||Phi||_L2 + ||q||_H1) / ||F||_H1, an empirical stand-in for the
    uniform resolvent constant.
    """
    if isinstance(F_list, ComplexField):
        F_list = [F_list]
    rows: list[dict] = []
    worst = 0.0
    for F in F_list:
        grid = F.grid
        f_h1 = l2_norm(F.values, grid) + l2_norm(derivative(F.values, grid, 1), grid)
        for c in c_grid:
            sample = solve_resolvent_direct(F, profile, alpha, c)
            phi_l2 = l2_norm(sample.phi.values, grid)
            q_h1 = (l2_norm(sample.q.values, grid)
                    + l2_norm(derivative(sample.q.values, grid, 1), grid))
            ratio = (phi_l2 + q_h1) / f_h1 if f_h1 > 0 else 0.0
            worst = max(worst, ratio)
            rows.append({
                "re_c": float(np.real(c)), "im_c": float(np.imag(c)),
                "phi_l2": phi_l2, "q_h1": q_h1, "f_h1": f_h1,
                "ratio": ratio, "cond": sample.cond_estimate,
            })
    return rows, worst


# ---------------------------------------------------------------------------
# homogeneous solutions by iterated quadrature
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HomogeneousSolution:
    """Neumann-series solution of the homogeneous equation on one interval.

    Normalized to varphi(turning_point) = 1, d/dy varphi(turning_point) = 0;
    samples live on the Gauss panel mesh used for all later quadratures.
    """

    interval: tuple[float, float]
    turning_point: float
    mesh: PanelMesh
    varphi: np.ndarray
    dvarphi: np.ndarray
    neumann_terms: int

    def eval(self, y) -> np.ndarray:
        return self.mesh.interpolate(self.varphi, y)

    def eval_deriv(self, y) -> np.ndarray:
        return self.mesh.interpolate(self.dvarphi, y)


def _coefficient_w(pair: ElsasserPair, c: complex, y: np.ndarray) -> np.ndarray:
    zp, zm = pair.z("+"), pair.z("-")
    return (zm.f(y) - c) * (zp.f(y) - c)


def homogeneous_neumann(pair: ElsasserPair, alpha: int, c: complex,
                        interval: tuple[float, float], turning_point: float,
                        mesh: PanelMesh | None = None) -> HomogeneousSolution:
    """Build varphi = sum_k alpha^{2k} S^k 1 by iterated quadrature.

    S f(y) = int_{y*}^{y} [int_{y*}^{y'} w f] / w(y') dy' with
    w = (Z- - c)(Z+ - c); the series contracts in a cosh-weighted norm once
    the weight rate A satisfies C0 alpha^2 / A^2 <= 1/2.  alpha = 0 is
    accepted here (the series truncates at varphi = 1).
    """
    a, b = float(interval[0]), float(interval[1])
    ystar = float(turning_point)
    if not (a <= ystar <= b):
        raise ValueError("turning point outside interval")
    if mesh is None:
        brk = dyadic_breakpoints(a, b, [ystar], min_width=(b - a) / 512.0)
        mesh = PanelMesh(brk)
    y = mesh.nodes
    w = _coefficient_w(pair, c, y)

    # contraction-rate weight from the smooth-coefficient spread
    zm = pair.z("-").f(y) - c
    c0 = float(np.max(np.abs(zm)) / np.min(np.abs(zm)))
    A = max(2.0 * abs(alpha) * np.sqrt(c0), 8.0)
    cosh_w = np.cosh(A * (y - ystar))

    def apply_s(f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        inner = mesh.cumulative_from(w * f, ystar)
        s1 = inner / w
        return mesh.cumulative_from(s1, ystar), s1

    term = np.ones_like(y, dtype=np.complex128)
    phi = term.copy()
    dphi = np.zeros_like(term)
    norms: list[float] = []
    nterms = 1
    for _ in range(_SERIES_MAX_TERMS):
        s_term, s1_term = apply_s(term)
        term = alpha**2 * s_term
        dterm = alpha**2 * s1_term
        phi = phi + term
        dphi = dphi + dterm
        nterms += 1
        wn = max(np.max(np.abs(term) / cosh_w), np.max(np.abs(dterm) / cosh_w) / A)
        norms.append(wn)
        if wn < _SERIES_TOL:
            break
    else:
        tail = norms[-5:]
        if any(b >= a for a, b in zip(tail[:-1], tail[1:])):
            raise SeriesDiverging(
                f"series increments not contracting after {_SERIES_MAX_TERMS} terms "
                f"(last weighted norms {tail}); split the interval"
            )
        raise SeriesDiverging(
            f"series still above tolerance after {_SERIES_MAX_TERMS} terms")
    return HomogeneousSolution(interval=(a, b), turning_point=ystar, mesh=mesh,
                               varphi=phi, dvarphi=dphi, neumann_terms=nterms)


# ---------------------------------------------------------------------------
# local explicit solution near a critical point
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SturmianLocal:
    """Coefficient data of the local explicit solution near a critical point."""

    c_star: complex
    sigma: complex
    y0: float
    side: str
    y_turning_l: float
    y_turning_r: float
    I_r: complex
    I_l: complex
    I1_r: complex
    I1_l: complex
    I2_r: complex
    I2_l: complex
    mu_r: complex
    mu_l: complex
    nu_r: complex
    nu_l: complex
    det_D: complex


@dataclass(frozen=True)
class WindowSolution:
    """Piecewise local solution Phi* on the window, with C^1 diagnostics."""

    left: HomogeneousSolution
    right: HomogeneousSolution
    phi_left: np.ndarray
    phi_right: np.ndarray
    dphi_left: np.ndarray
    dphi_right: np.ndarray
    y0: float
    c1_value_gap: float
    c1_flux_gap: float
    bc_gap: float

    def eval(self, y) -> np.ndarray:
        y = np.atleast_1d(np.asarray(y, dtype=float))
        out = np.empty(len(y), dtype=np.complex128)
        on_left = y <= self.y0
        if np.any(on_left):
            out[on_left] = self.left.mesh.interpolate(self.phi_left, y[on_left])
        if np.any(~on_left):
            out[~on_left] = self.right.mesh.interpolate(self.phi_right, y[~on_left])
        return out

    def eval_deriv(self, y) -> np.ndarray:
        y = np.atleast_1d(np.asarray(y, dtype=float))
        out = np.empty(len(y), dtype=np.complex128)
        on_left = y <= self.y0
        if np.any(on_left):
            out[on_left] = self.left.mesh.interpolate(self.dphi_left, y[on_left])
        if np.any(~on_left):
            out[~on_left] = self.right.mesh.interpolate(self.dphi_right, y[~on_left])
        return out


class _LocalContext:
    """Shared geometry for the local solve: critical point, turning points,
    graded meshes, homogeneous solutions and coefficient samples."""

    def __init__(self, pair: ElsasserPair, alpha: int, c_star: complex,
                 window: tuple[float, float]):
        _check_alpha(alpha)
        self.pair = pair
        self.alpha = alpha
        self.c_star = complex(c_star)
        y1, y2 = float(window[0]), float(window[1])
        if not y1 < y2:
            raise WindowInvalid("window must be nondegenerate")
        self.window = (y1, y2)

        rc = self.c_star.real
        inside = []
        for cp in find_critical_points(pair):
            for shift_y in (cp.y0, cp.y0 - 2 * np.pi, cp.y0 + 2 * np.pi):
                if y1 < shift_y < y2:
                    inside.append((cp, shift_y))
        # keep the branch whose half-strip Re c* actually touches: zero set of
        # Z_side - Re c* must enter the window through both endpoints
        def touches(cp, yy0):
            zf = pair.z(cp.side).f
            return (cp.z_pp > 0.0
                    and cp.z_pp * (rc - cp.z_value) >= 0.0
                    and float(zf(np.asarray(y1))) > rc
                    and float(zf(np.asarray(y2))) > rc)
        matched = [(cp, yy0) for cp, yy0 in inside if touches(cp, yy0)]
        if len(matched) != 1:
            raise WindowInvalid(
                f"window must isolate one matching critical point, found {len(matched)}"
                f" of {len(inside)} inside")
        cp, y0 = matched[0]
        self.critical = cp
        self.y0 = float(y0)
        self.side = cp.side
        if abs(rc - cp.z_value) < abs(self.c_star.imag):
            raise WindowInvalid("|Re c* - Z(y0)| >= |Im c*| required for the local solve")

        self.z = pair.z(cp.side)
        self.z0 = float(cp.z_value)
        sigma = np.sqrt(self.c_star - self.z0)
        if sigma.imag < 0.0:
            sigma = -sigma
        self.sigma = complex(sigma)
        # singular coefficient sign: (Z- - c) smooth for a Z+ critical point
        self.sing_sign = -1.0 if cp.side == "+" else 1.0

        zf = self.z.f
        def shifted(y):
            return float(zf(np.asarray(y)) - rc)
        if shifted(y1) <= 0.0 or shifted(y2) <= 0.0:
            raise WindowInvalid("window endpoints must lie outside the turning interval")
        if rc == self.z0:
            ystar_l = ystar_r = self.y0
        else:
            ystar_l = brentq(shifted, y1, self.y0, xtol=1e-14)
            ystar_r = brentq(shifted, self.y0, y2, xtol=1e-14)
        self.ystar_l = float(ystar_l)
        self.ystar_r = float(ystar_r)

        # feature scale: distance from the turning point to the complex pole
        slope = max(abs(self.z.df(self.ystar_r)),
                    np.sqrt(2.0 * cp.z_pp * max(rc - self.z0, 0.0)), 1e-8)
        pole_dist = max(abs(self.c_star.imag) / slope, 1e-10)
        min_w = max(pole_dist / 8.0, 1e-10)
        brk_r = dyadic_breakpoints(self.y0, y2, [self.ystar_r], min_width=min_w)
        brk_l = dyadic_breakpoints(y1, self.y0, [self.ystar_l], min_width=min_w)
        self.mesh_r = PanelMesh(brk_r)
        self.mesh_l = PanelMesh(brk_l)
        self.hom_r = homogeneous_neumann(pair, alpha, self.c_star, (self.y0, y2),
                                         self.ystar_r, mesh=self.mesh_r)
        self.hom_l = homogeneous_neumann(pair, alpha, self.c_star, (y1, self.y0),
                                         self.ystar_l, mesh=self.mesh_l)
        self.w_r = _coefficient_w(pair, self.c_star, self.mesh_r.nodes)
        self.w_l = _coefficient_w(pair, self.c_star, self.mesh_l.nodes)
        self.w0 = complex(_coefficient_w(pair, self.c_star, np.array([self.y0]))[0])

    # -- V geometry -------------------------------------------------------
    def V(self, y):
        """Signed square root of Z(y) - Z(y0); accepts complex y off y0."""
        y = np.asarray(y)
        root = np.sqrt((self.z.f(y) - self.z0).astype(np.complex128))
        sgn = np.where(np.real(y) >= self.y0, 1.0, -1.0)
        return sgn * root

    def g_weight(self, y):
        """1/(2 b(y) V'(y)) with V' = Z'/(2V); analytic away from y0."""
        y = np.asarray(y)
        b = self.pair.profile.b_fn.f(y)
        vprime = self.z.df(y) / (2.0 * self.V(y))
        return 1.0 / (2.0 * b * vprime)

    def g_weight_at_y0(self) -> complex:
        b0 = float(self.pair.profile.b_fn.f(np.array([self.y0]))[0])
        vp0 = np.sqrt(2.0 * self.critical.z_pp) / 2.0
        return 1.0 / (2.0 * b0 * vp0)

    def dg_weight(self, y: np.ndarray) -> np.ndarray:
        """d/dy of g_weight via imaginary offsets with Richardson correction.

        g_weight is analytic across y0 and real on the real axis, so
        Im g(y + ih)/h = g'(y) + O(h^2) with even-order error terms; one
        Richardson step removes the h^2 term.
        """
        yc = y.astype(np.complex128)
        d1 = np.imag(self.g_weight(yc + 1j * _CSTEP)) / _CSTEP
        d2 = np.imag(self.g_weight(yc + 0.5j * _CSTEP)) / (0.5 * _CSTEP)
        return (4.0 * d2 - d1) / 3.0

    def log_jump(self, y) -> np.ndarray:
        """G(y) = Log(V - sigma) - Log(V + sigma), continuous on the window."""
        if self.sigma.imag <= 0.0:
            raise BranchCutViolation("Im sigma > 0 convention violated")
        v = self.V(np.asarray(y, dtype=float))
        lo, hi = v - self.sigma, v + self.sigma
        if np.any(lo.imag >= 0.0) or np.any(hi.imag <= 0.0):
            raise BranchCutViolation("Log arguments crossed the real axis")
        return np.log(lo) - np.log(hi)


def compute_I_integrals(pair: ElsasserPair, alpha: int, c_star: complex,
                        window: tuple[float, float],
                        context: _LocalContext | None = None):
    """The six coefficient integrals (I_r, I_l, I1_r, I1_l, I2_r, I2_l).

    I^k is the direct quadrature of 1/(w varphi_k^2) over its half-window;
    I1^k collects the regular parts and I2^k the boundary/log terms of the
    splitting 2 sigma I^k = -s i pi / (b(y0) sqrt(2 Z''(y0))) + 2 sigma I1^k
    + I2^k (s = +1 for a Z+ critical point, -1 for Z-), each evaluated by an
    independent route so the identity is a genuine consistency check.
    """
    ctx = context or _LocalContext(pair, alpha, c_star, window)
    y1, y2 = ctx.window
    out = {}
    for tag, mesh, hom in (("r", ctx.mesh_r, ctx.hom_r),
                           ("l", ctx.mesh_l, ctx.hom_l)):
        y = mesh.nodes
        w = ctx.w_r if tag == "r" else ctx.w_l
        phi = hom.varphi
        I_k = mesh.integrate(1.0 / (w * phi**2))

        smooth_side = "-" if ctx.side == "+" else "+"
        smooth = ctx.pair.z(smooth_side).f(y) - ctx.c_star
        b_here = ctx.pair.profile.b_fn.f(y)
        # regular parts: the 1/varphi^2 - 1 defect plus the partial-fraction
        # piece through the smooth Elsasser factor
        I1_k = (mesh.integrate((1.0 / w) * (1.0 / phi**2 - 1.0))
                - ctx.sing_sign * mesh.integrate(1.0 / (2.0 * b_here * smooth)))
        # boundary + log terms from integrating the singular piece by parts
        gp = ctx.dg_weight(y)
        G = ctx.log_jump(y)
        integral = mesh.integrate(gp * G)
        if tag == "r":
            ge = complex(ctx.g_weight(np.array([y2]))[0])
            Ge = complex(ctx.log_jump(np.array([y2]))[0])
            I2_k = ctx.sing_sign * (ge * Ge - integral)
        else:
            ge = complex(ctx.g_weight(np.array([y1]))[0])
            Ge = complex(ctx.log_jump(np.array([y1]))[0])
            g0 = ctx.g_weight_at_y0()
            I2_k = ctx.sing_sign * (-2j * np.pi * g0 - ge * Ge - integral)
        out[tag] = (complex(I_k), complex(I1_k), complex(I2_k))
    (I_r, I1_r, I2_r), (I_l, I1_l, I2_l) = out["r"], out["l"]
    return I_r, I_l, I1_r, I1_l, I2_r, I2_l


def splitting_constant(pair: ElsasserPair, alpha: int, c_star: complex,
                       window: tuple[float, float],
                       context: _LocalContext | None = None) -> complex:
    """The sigma -> 0 limit of 2 sigma I^k; -i pi/(b(y0) sqrt(2 Z''(y0)))
    for a Z+ critical point, the complex conjugate for Z-."""
    ctx = context or _LocalContext(pair, alpha, c_star, window)
    return ctx.sing_sign * 1j * np.pi * ctx.g_weight_at_y0()


def local_explicit_solve(F_star: ComplexField, pair: ElsasserPair, alpha: int,
                         c_star: complex, window: tuple[float, float],
                         boundary_values: tuple[complex, complex] = (0.0, 0.0)
                         ) -> tuple[SturmianLocal, WindowSolution]:
    """Assemble the local solution Phi* with prescribed boundary values.

    On each side of the critical point y0, Phi* = nu varphi + mu varphi J +
    varphi K with J, K the iterated flux integrals anchored at y0; the four
    coefficients solve the boundary conditions Phi*(y1), Phi*(y2) =
    boundary_values (zero by default) plus C^1 (value and flux) matching
    at y0.  Nonzero boundary values let the local solution be compared
    directly against a global solve restricted to the window.
    """
    ctx = _LocalContext(pair, alpha, c_star, window)
    y1, y2 = ctx.window
    grid = F_star.grid

    sides = {}
    for tag, mesh, hom, w in (("r", ctx.mesh_r, ctx.hom_r, ctx.w_r),
                              ("l", ctx.mesh_l, ctx.hom_l, ctx.w_l)):
        y = mesh.nodes
        phi = hom.varphi
        Fv = trig_interpolate(F_star.values, grid, np.mod(y, 2 * np.pi))
        ystar = ctx.ystar_r if tag == "r" else ctx.ystar_l
        inner = mesh.cumulative_from(Fv * phi, ystar)        # int_{y*}^{y} F varphi
        J = mesh.cumulative_from(1.0 / (w * phi**2), ctx.y0)
        K = mesh.cumulative_from(inner / (w * phi**2), ctx.y0)
        sides[tag] = dict(mesh=mesh, hom=hom, w=w, y=y, phi=phi, inner=inner,
                          J=J, K=K, Fv=Fv)

    # endpoint and matching data
    def at(tag, arr, yq):
        return complex(sides[tag]["mesh"].interpolate(arr, np.array([yq]))[0])

    phi_r0 = at("r", sides["r"]["phi"], ctx.y0)
    phi_l0 = at("l", sides["l"]["phi"], ctx.y0)
    dphi_r0 = at("r", ctx.hom_r.dvarphi, ctx.y0)
    dphi_l0 = at("l", ctx.hom_l.dvarphi, ctx.y0)
    inner_r0 = at("r", sides["r"]["inner"], ctx.y0)
    inner_l0 = at("l", sides["l"]["inner"], ctx.y0)
    phi_r2 = at("r", sides["r"]["phi"], y2)
    phi_l1 = at("l", sides["l"]["phi"], y1)
    J_r2 = at("r", sides["r"]["J"], y2)       # = I_r
    J_l1 = at("l", sides["l"]["J"], y1)       # = -I_l
    K_r2 = at("r", sides["r"]["K"], y2)
    K_l1 = at("l", sides["l"]["K"], y1)
    w0 = ctx.w0

    beta1, beta2 = boundary_values
    # unknowns x = (mu_r, mu_l, nu_r, nu_l)
    A = np.zeros((4, 4), dtype=np.complex128)
    rhs = np.zeros(4, dtype=np.complex128)
    # Phi_r(y2) = beta2 (varphi_r(y2) != 0 divided out)
    A[0] = [J_r2, 0.0, 1.0, 0.0]
    rhs[0] = beta2 / phi_r2 - K_r2
    # Phi_l(y1) = beta1
    A[1] = [0.0, J_l1, 0.0, 1.0]
    rhs[1] = beta1 / phi_l1 - K_l1
    # value matching at y0: nu_r varphi_r(y0) - nu_l varphi_l(y0) = 0
    A[2] = [0.0, 0.0, phi_r0, -phi_l0]
    rhs[2] = 0.0
    # flux matching at y0: q_r(y0) = q_l(y0)
    A[3] = [1.0 / phi_r0, -1.0 / phi_l0, w0 * dphi_r0, -w0 * dphi_l0]
    rhs[3] = inner_l0 / phi_l0 - inner_r0 / phi_r0

    det_D = (w0 * phi_r0 * phi_l0 * (phi_l0 * dphi_r0 - phi_r0 * dphi_l0)
             * J_r2 * (-J_l1)
             - phi_r0**2 * J_r2 - phi_l0**2 * (-J_l1))
    if abs(det_D) * abs(ctx.sigma) < _DET_FLOOR:
        raise SingularDeterminant(
            f"|D(c*)|*|sigma| = {abs(det_D) * abs(ctx.sigma):.2e} below {_DET_FLOOR:.0e}; "
            "quadrature failure or window too tight")
    mu_r, mu_l, nu_r, nu_l = np.linalg.solve(A, rhs)

    # assemble Phi* and its derivative on each side mesh
    fields = {}
    for tag, mu, nu in (("r", mu_r, nu_r), ("l", mu_l, nu_l)):
        s = sides[tag]
        phi, J, K, w, inner = s["phi"], s["J"], s["K"], s["w"], s["inner"]
        dphi = (ctx.hom_r if tag == "r" else ctx.hom_l).dvarphi
        vals = nu * phi + mu * phi * J + phi * K
        dvals = (nu * dphi + mu * (dphi * J + 1.0 / (w * phi))
                 + dphi * K + inner / (w * phi))
        fields[tag] = (vals, dvals)

    # diagnostics: value/flux continuity at y0 and boundary zeros
    val_r0 = nu_r * phi_r0
    val_l0 = nu_l * phi_l0
    q_r0 = nu_r * w0 * dphi_r0 + mu_r / phi_r0 + inner_r0 / phi_r0
    q_l0 = nu_l * w0 * dphi_l0 + mu_l / phi_l0 + inner_l0 / phi_l0
    scale = max(np.max(np.abs(fields["r"][0])), np.max(np.abs(fields["l"][0])), 1e-300)
    bc_gap = max(abs(nu_r * phi_r2 + mu_r * phi_r2 * J_r2 + phi_r2 * K_r2 - beta2),
                 abs(nu_l * phi_l1 + mu_l * phi_l1 * J_l1 + phi_l1 * K_l1 - beta1)) / scale

    I_r, I_l, I1_r, I1_l, I2_r, I2_l = compute_I_integrals(
        pair, alpha, c_star, window, context=ctx)

    local = SturmianLocal(
        c_star=ctx.c_star, sigma=ctx.sigma, y0=ctx.y0, side=ctx.side,
        y_turning_l=ctx.ystar_l, y_turning_r=ctx.ystar_r,
        I_r=I_r, I_l=I_l, I1_r=I1_r, I1_l=I1_l, I2_r=I2_r, I2_l=I2_l,
        mu_r=complex(mu_r), mu_l=complex(mu_l),
        nu_r=complex(nu_r), nu_l=complex(nu_l), det_D=complex(det_D))
    solution = WindowSolution(
        left=ctx.hom_l, right=ctx.hom_r,
        phi_left=fields["l"][0], phi_right=fields["r"][0],
        dphi_left=fields["l"][1], dphi_right=fields["r"][1],
        y0=ctx.y0,
        c1_value_gap=float(abs(val_r0 - val_l0) / scale),
        c1_flux_gap=float(abs(q_r0 - q_l0) / max(abs(q_r0), abs(q_l0), 1e-300)),
        bc_gap=float(bc_gap))
    return local, solution


# ---------------------------------------------------------------------------
# limiting-absorption scans
# ---------------------------------------------------------------------------

def depletion_exponents(pair: ElsasserPair, alpha: int, y0: CriticalPoint,
                        F: ComplexField, eps_list) -> tuple[float, float]:
    """Fit the blow-up exponents of |Phi(y0)| and |dPhi/dy(y0)| as c -> spectrum.

    Solves at c = Z(y0) + i*eps and fits log|Phi(y0)| against
    log|(Z+(y0) - c)(Z- (y0) - c)|; the expected slopes are bounded below by
    -1/4 and -3/4 respectively.
    """
    grid = F.grid
    logs_x, logs_phi, logs_dphi = [], [], []
    zp0 = float(pair.z("+").f(np.array([y0.y0]))[0])
    zm0 = float(pair.z("-").f(np.array([y0.y0]))[0])
    for eps in eps_list:
        c = y0.z_value + 1j * float(eps)
        sample = solve_resolvent_direct(F, pair.profile, alpha, c)
        phi_at = complex(np.ravel(trig_interpolate(sample.phi.values, grid, y0.y0))[0])
        dphi = derivative(sample.phi.values, grid, 1)
        dphi_at = complex(np.ravel(trig_interpolate(dphi, grid, y0.y0))[0])
        logs_x.append(np.log(abs((zp0 - c) * (zm0 - c))))
        logs_phi.append(np.log(abs(phi_at)))
        logs_dphi.append(np.log(abs(dphi_at)))
    p_phi, res_phi = _linear_fit(logs_x, logs_phi)
    p_dphi, res_dphi = _linear_fit(logs_x, logs_dphi)
    if max(res_phi, res_dphi) > 0.1:
        raise FitUnstable(
            f"log-log fits not linear (residuals {res_phi:.3f}, {res_dphi:.3f})")
    return float(p_phi), float(p_dphi)


def _linear_fit(x, y) -> tuple[float, float]:
    """Least-squares slope plus rms residual relative to the ordinate span.

    The relative measure keeps sub-power-law (logarithmic) trends, whose
    log-log graphs are gently curved but clearly monotone, inside the
    stability gate while still rejecting genuinely scattered data.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    coeffs = np.polyfit(x, y, 1)
    resid = y - np.polyval(coeffs, x)
    span = max(float(np.max(y) - np.min(y)), 1e-300)
    return float(coeffs[0]), float(np.sqrt(np.mean(resid**2)) / span)


def boundary_limits(F: ComplexField, profile: ShearProfile, alpha: int,
                    c: float, eps_list) -> tuple[ComplexField, ComplexField, dict]:
    """Limiting-absorption boundary values Phi(+-) at real c in the spectrum.

    Solves at c + i*eps_k down a decreasing eps schedule and reports the
    L^{3/2} Cauchy increments, which must be decreasing for convergence.
    """
    grid = F.grid
    eps_list = [float(e) for e in eps_list]
    if any(b >= a for a, b in zip(eps_list[:-1], eps_list[1:])):
        raise ValueError("eps_list must be strictly decreasing")
    iterates_p, iterates_m = [], []
    for eps in eps_list:
        iterates_p.append(solve_resolvent_direct(F, profile, alpha, c + 1j * eps).phi.values)
        iterates_m.append(solve_resolvent_direct(F, profile, alpha, c - 1j * eps).phi.values)

    def lp_norm(v: np.ndarray, p: float = 1.5) -> float:
        return float((grid.spacing * np.sum(np.abs(v) ** p)) ** (1.0 / p))

    d_plus = [lp_norm(b - a) for a, b in zip(iterates_p[:-1], iterates_p[1:])]
    d_minus = [lp_norm(b - a) for a, b in zip(iterates_m[:-1], iterates_m[1:])]
    for d in (d_plus, d_minus):
        tail = d[-4:]
        if len(tail) >= 2 and any(b >= a for a, b in zip(tail[:-1], tail[1:])):
            raise NotConverging(
                f"Cauchy increments not decreasing over the last levels: {tail}")
    report = {"eps": eps_list, "d_plus": d_plus, "d_minus": d_minus}
    return (ComplexField(grid, iterates_p[-1]),
            ComplexField(grid, iterates_m[-1]), report)
