"""Periodic pseudospectral kernels on the torus [0, 2*pi).

Differentiation and the modified Helmholtz solve (d_yy - alpha^2)^{-1} are
realized as Fourier multipliers.  Products with smooth profiles happen in
physical space; derivatives happen in Fourier space.  All operations accept
plain complex arrays whose last axis runs over the grid nodes, so batched
fields (shape (m, n)) work everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class PeriodicGrid:
    """Equispaced nodes y_j = 2*pi*j/n with integer Fourier wavenumbers."""

    n: int
    nodes: np.ndarray = field(init=False, repr=False, compare=False)
    wavenumbers: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 64 or (self.n & (self.n - 1)) != 0:
            raise ValueError(f"grid size must be a power of two >= 64, got {self.n}")
        object.__setattr__(self, "nodes", 2.0 * np.pi * np.arange(self.n) / self.n)
        object.__setattr__(self, "wavenumbers", np.fft.fftfreq(self.n, d=1.0 / self.n))

    @property
    def spacing(self) -> float:
        return 2.0 * np.pi / self.n


@dataclass(frozen=True)
class ComplexField:
    """Complex samples on a PeriodicGrid."""

    grid: PeriodicGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.complex128)
        if vals.shape[-1] != self.grid.n:
            raise ValueError("field length does not match grid")
        if not np.all(np.isfinite(vals.view(np.float64))):
            raise ValueError("non-finite field values")
        object.__setattr__(self, "values", vals)


def _check_alpha(alpha: int) -> None:
    from .errors import ZeroWavenumber

    if alpha == 0:
        raise ZeroWavenumber("alpha must be a nonzero integer")


def derivative(values: np.ndarray, grid: PeriodicGrid, order: int = 1) -> np.ndarray:
    """Spectral derivative of given order (1 or 2), Nyquist zeroed when odd."""
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    k = grid.wavenumbers
    mult = (1j * k) ** order
    if order % 2 == 1:
        mult = mult.copy()
        mult[grid.n // 2] = 0.0  # Nyquist mode carries no signed derivative
    return np.fft.ifft(mult * np.fft.fft(values, axis=-1), axis=-1)


def laplacian_alpha(values: np.ndarray, grid: PeriodicGrid, alpha: int) -> np.ndarray:
    """Apply d_yy - alpha^2."""
    _check_alpha(alpha)
    k = grid.wavenumbers
    return np.fft.ifft((-(k**2) - alpha**2) * np.fft.fft(values, axis=-1), axis=-1)


def invert_laplacian_alpha(values: np.ndarray, grid: PeriodicGrid, alpha: int) -> np.ndarray:
    """Unique periodic solution g of (d_yy - alpha^2) g = f."""
    _check_alpha(alpha)
    k = grid.wavenumbers
    return np.fft.ifft(np.fft.fft(values, axis=-1) / (-(k**2) - alpha**2), axis=-1)


def l2_norm(values: np.ndarray, grid: PeriodicGrid) -> float:
    """Trapezoid-exact L^2 norm over the torus (uniform grid quadrature)."""
    return float(np.sqrt(grid.spacing * np.sum(np.abs(values) ** 2, axis=-1)))


def sobolev_norm(values: np.ndarray, grid: PeriodicGrid, s: float) -> float:
    """H^s norm via the (1 - d_yy)^{s/2} Fourier multiplier."""
    k = grid.wavenumbers
    fhat = np.fft.fft(values, axis=-1) / grid.n
    weight = (1.0 + k**2) ** s
    return float(np.sqrt(2.0 * np.pi * np.sum(weight * np.abs(fhat) ** 2, axis=-1)))


def trig_interpolate(values: np.ndarray, grid: PeriodicGrid, y: np.ndarray | float) -> np.ndarray:
    """Evaluate the band-limited interpolant at arbitrary points y.

    Exact for fields whose spectrum fits the grid; the Nyquist coefficient is
    split evenly between +n/2 and -n/2 so real data interpolates to real values.
    """
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    fhat = np.fft.fft(values, axis=-1) / grid.n
    k = grid.wavenumbers.copy()
    # symmetrize the Nyquist mode
    coeffs = np.concatenate([fhat[..., : grid.n // 2], 0.5 * fhat[..., grid.n // 2 : grid.n // 2 + 1],
                             0.5 * fhat[..., grid.n // 2 : grid.n // 2 + 1], fhat[..., grid.n // 2 + 1 :]], axis=-1)
    ks = np.concatenate([k[: grid.n // 2], [grid.n / 2.0, -grid.n / 2.0], k[grid.n // 2 + 1 :]])
    phases = np.exp(1j * np.outer(y, ks))
    return phases @ np.moveaxis(coeffs, -1, 0)


def dense_derivative_matrix(grid: PeriodicGrid, order: int = 1) -> np.ndarray:
    """Dense matrix of the spectral derivative, for direct (LU) solvers."""
    eye = np.eye(grid.n, dtype=np.complex128)
    return derivative(eye, grid, order=order).T


def shift(values: np.ndarray, grid: PeriodicGrid, m: int) -> np.ndarray:
    """Translate a field by m grid nodes (used by equivariance tests)."""
    return np.roll(values, m, axis=-1)
