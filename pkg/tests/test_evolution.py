from __future__ import annotations

import numpy as np
import pytest

from mhdlab.errors import GridMismatch, StepTooLarge
from mhdlab.evolution import (
    SpectralState,
    ToyState,
    apply_generator,
    dense_generator,
    dt_max,
    evolve,
    primitive_fields,
    step_rk4,
    toy_evolve,
    toy_from_spectral,
    vorticity_current,
)
from mhdlab.grid import derivative, l2_norm, laplacian_alpha

from conftest import band_limited


def _state(grid, alpha, psi, phi):
    return SpectralState(grid=grid, alpha=alpha, psi_hat=psi, phi_hat=phi)


def test_constant_case_generator_swaps_components(grid128, constant_profile):
    # u = 0, b = 1: M(psi, phi) = -(phi, psi), so rhs = i*alpha*(-phi, -psi)... check directly
    f = band_limited(grid128, seed=3)
    g = band_limited(grid128, seed=4)
    rp, rf = apply_generator(_state(grid128, 1, f, g), constant_profile)
    np.testing.assert_allclose(rp, 1j * g, atol=1e-12)
    np.testing.assert_allclose(rf, 1j * f, atol=1e-12)


def test_dense_generator_matches_pseudospectral(grid128, shear_profile_128):
    gen = dense_generator(shear_profile_128, 1, grid128)
    f = band_limited(grid128, seed=5)
    g = band_limited(grid128, seed=6)
    rp, rf = apply_generator(_state(grid128, 1, f, g), shear_profile_128)
    out = gen @ np.concatenate([f, g])
    np.testing.assert_allclose(out[:128], rp, atol=1e-12)
    np.testing.assert_allclose(out[128:], rf, atol=1e-12)


def test_spectrum_of_generator_is_real(grid128, shear_profile_128):
    # eigenvalues of M are real, so dense -i*alpha*M has purely imaginary ones
    gen = dense_generator(shear_profile_128, 1, grid128)
    eig = np.linalg.eigvals(1j * gen)  # = alpha*M, should be real
    assert np.max(np.abs(eig.imag)) < 1e-8
    lo, hi = eig.real.min(), eig.real.max()
    # contained in Ran Z- u Ran Z+ = [-1.1, -0.9] u [0.9, 1.1]
    assert -1.1 - 1e-6 < lo and hi < 1.1 + 1e-6


def test_constant_case_rotation_solution(grid128, constant_profile):
    # u=0, b=1: psi(t) = cos(alpha t) f, phi(t) = i sin(alpha t) f for data (f, 0)
    f = band_limited(grid128, seed=9)
    zero = np.zeros_like(f)
    traj = evolve(_state(grid128, 1, f, zero), constant_profile, T=2.0, dt=1e-3, sample_every=2000)
    final = traj[-1]
    np.testing.assert_allclose(final.psi_hat, np.cos(2.0) * f, atol=1e-10)
    np.testing.assert_allclose(final.phi_hat, 1j * np.sin(2.0) * f, atol=1e-10)


def test_dense_and_fft_paths_agree(grid128, shear_profile_128):
    f = band_limited(grid128, seed=9)
    g = band_limited(grid128, seed=10)
    init = _state(grid128, 1, f, g)
    a = evolve(init, shear_profile_128, T=0.5, dt=1e-2, sample_every=50, use_dense=True)[-1]
    b = evolve(init, shear_profile_128, T=0.5, dt=1e-2, sample_every=50, use_dense=False)[-1]
    np.testing.assert_allclose(a.psi_hat, b.psi_hat, atol=1e-11)
    np.testing.assert_allclose(a.phi_hat, b.phi_hat, atol=1e-11)


def test_step_too_large_raises(grid128, constant_profile):
    f = band_limited(grid128, seed=1)
    state = _state(grid128, 1, f, f)
    with pytest.raises(StepTooLarge):
        step_rk4(state, constant_profile, dt=2 * dt_max(constant_profile, 1))


def test_grid_mismatch_raises(grid128, shear_profile):
    f = band_limited(grid128, seed=1)
    with pytest.raises(GridMismatch):
        apply_generator(_state(grid128, 1, f, f), shear_profile)


def test_energy_conserved_constant_case(grid128, constant_profile):
    f = band_limited(grid128, seed=21)
    g = band_limited(grid128, seed=22)
    traj = evolve(_state(grid128, 1, f, g), constant_profile, T=5.0, dt=1e-3, sample_every=1000)
    norms = [np.hypot(l2_norm(s.psi_hat, grid128), l2_norm(s.phi_hat, grid128)) for s in traj]
    assert max(norms) / min(norms) - 1.0 < 1e-10


def test_evolve_zero_horizon_returns_initial(grid128, constant_profile):
    f = band_limited(grid128, seed=1)
    init = _state(grid128, 1, f, f)
    traj = evolve(init, constant_profile, T=0.0, dt=1e-3)
    assert len(traj) == 1 and traj[0] is init


def test_primitive_fields_and_vorticity(grid128):
    y = grid128.nodes
    psi = np.exp(1j * 2 * y)
    phi = np.exp(-1j * y)
    state = _state(grid128, 3, psi, phi)
    u1, u2, h1, h2 = primitive_fields(state)
    np.testing.assert_allclose(u1, 2j * psi, atol=1e-12)
    np.testing.assert_allclose(u2, -3j * psi, atol=1e-12)
    np.testing.assert_allclose(h1, -1j * phi, atol=1e-12)
    np.testing.assert_allclose(h2, -3j * phi, atol=1e-12)
    w, j = vorticity_current(state)
    np.testing.assert_allclose(w, (4 + 9) * psi, atol=1e-11)
    np.testing.assert_allclose(j, (1 + 9) * phi, atol=1e-11)


def test_toy_evolution_is_exact_transport(grid128, shear_profile_128):
    f = band_limited(grid128, seed=30)
    g = band_limited(grid128, seed=31)
    init = ToyState(grid=grid128, alpha=2, z1_plus=f, z1_minus=g, t=0.0)
    out = toy_evolve(init, shear_profile_128, t=4.0)
    u, b = shear_profile_128.u, shear_profile_128.b
    np.testing.assert_allclose(out.z1_plus, f * np.exp(-1j * 2 * (u - b) * 4.0), atol=1e-12)
    np.testing.assert_allclose(out.z1_minus, g * np.exp(-1j * 2 * (u + b) * 4.0), atol=1e-12)
    assert out.t == 4.0
    # pointwise modulus is conserved exactly
    np.testing.assert_allclose(np.abs(out.z1_plus), np.abs(f), atol=1e-13)


def test_toy_projection_matches_characteristics(grid128):
    y = grid128.nodes
    psi, phi = np.exp(1j * y), np.exp(2j * y)
    state = _state(grid128, 1, psi, phi)
    toy = toy_from_spectral(state)
    dpsi = derivative(psi, grid128, order=1)
    dphi = derivative(phi, grid128, order=1)
    np.testing.assert_allclose(toy.z1_plus, dpsi + dphi, atol=1e-12)
    np.testing.assert_allclose(toy.z1_minus, dpsi - dphi, atol=1e-12)
