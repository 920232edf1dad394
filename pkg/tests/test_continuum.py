import math

import numpy as np
import pytest

from blochsim import continuum as ct
from blochsim import dnls
from blochsim.errors import ConfigError

CELL = ct.CELL


@pytest.fixture(scope="module")
def cfg7():
    return ct.ContinuumConfig.for_depth(10.0, N_wells=7, n_grid=2048)


@pytest.fixture(scope="module")
def basis7(cfg7, wannier10):
    return ct.site_basis(cfg7, wannier10)


def test_config_validation():
    with pytest.raises(ConfigError):
        ct.ContinuumConfig(epsilon=1.0, F=0.0, zeta=0.0, box_halfwidth=100.0,
                           n_grid=1000, N_wells=3, L_clip=20.0)  # not a power of two
    with pytest.raises(ConfigError):
        ct.ContinuumConfig(epsilon=1.0, F=0.0, zeta=0.0, box_halfwidth=100.0,
                           n_grid=1024, N_wells=5, L_clip=3 * CELL)  # clip too small
    with pytest.raises(ConfigError):
        ct.ContinuumConfig(epsilon=1.0, F=0.0, zeta=0.0, box_halfwidth=4 * CELL,
                           n_grid=1024, N_wells=5, L_clip=3.5 * CELL)  # box too small


def test_for_depth_matches_band_module(cfg7):
    assert cfg7.lattice_depth_recoil == pytest.approx(10.0, rel=1e-12)


def test_potentials_clip_and_minima(cfg7):
    v, w = ct.build_potentials(cfg7)
    x = cfg7.x
    np.testing.assert_array_equal(w[x < -cfg7.L_clip], -cfg7.L_clip)
    np.testing.assert_array_equal(w[x > cfg7.L_clip], cfg7.L_clip)
    np.testing.assert_array_equal(w[np.abs(x) <= cfg7.L_clip],
                                  x[np.abs(x) <= cfg7.L_clip])
    # exactly N_wells local minima, each within a grid spacing of its center
    interior = (v[1:-1] < v[:-2]) & (v[1:-1] < v[2:])
    minima_x = x[1:-1][interior]
    assert minima_x.size == cfg7.N_wells
    np.testing.assert_allclose(minima_x, cfg7.well_centers, atol=cfg7.dx)


def test_potential_even_for_odd_well_count(cfg7):
    v, _ = ct.build_potentials(cfg7)
    # x0 is the unpaired periodic point; all others pair as x_j <-> x_{n-j}
    np.testing.assert_allclose(v[1:], v[1:][::-1], atol=1e-12 * cfg7.depth)


def test_even_well_count_offsets_lattice():
    cfg = ct.ContinuumConfig.for_depth(10.0, N_wells=2, n_grid=512,
                                       box_halfwidth=6 * CELL, L_clip=3.5 * math.pi)
    v, _ = ct.build_potentials(cfg)
    interior = (v[1:-1] < v[:-2]) & (v[1:-1] < v[2:])
    np.testing.assert_allclose(cfg.x[1:-1][interior], [-math.pi, math.pi],
                               atol=cfg.dx)


def test_free_gaussian_dispersion():
    cfg = ct.ContinuumConfig(epsilon=1e6, F=0.0, zeta=0.0,
                             box_halfwidth=16 * math.pi, n_grid=2048,
                             dt=1e-4, N_wells=1, L_clip=3 * math.pi)
    sigma0 = 2.0
    amp = (2 * math.pi * sigma0**2) ** -0.25
    psi0 = amp * np.exp(-cfg.x**2 / (4 * sigma0**2)) + 0j
    traj, final = ct.split_step_evolve(ct.ContinuumState(psi0), cfg, 1.0,
                                       sample_every=2500)
    t = final.t
    denom = sigma0**2 + 1j * t
    exact = amp * np.sqrt(sigma0**2 / denom) * np.exp(-cfg.x**2 / (4 * denom))
    assert np.max(np.abs(final.psi - exact)) < 1e-6
    assert np.max(np.abs(traj.norms - 1.0)) < 1e-10


def test_conservation_with_lattice_and_tilt(cfg7, basis7):
    cfg = ct.ContinuumConfig.for_depth(10.0, N_wells=7, n_grid=2048,
                                       F=0.05, zeta=0.01, dt=1e-4)
    coeffs = np.exp(-(np.arange(1, 8) - 4.0) ** 2 / 2.0)
    psi0 = ct.state_from_coefficients(cfg, basis7, coeffs / np.linalg.norm(coeffs))
    t_bloch = 1.0 / cfg.F  # tilt F over a 2 pi cell
    traj, _ = ct.split_step_evolve(psi0, cfg, t_bloch, sample_every=2000)
    assert np.max(np.abs(traj.norms - 1.0)) < 1e-10
    drift = np.max(np.abs(traj.energies - traj.energies[0])) / abs(traj.energies[0])
    assert drift < 1e-7


def test_time_reversal(cfg7, basis7):
    cfg = ct.ContinuumConfig.for_depth(10.0, N_wells=7, n_grid=2048,
                                       F=0.03, zeta=0.02, dt=2e-4)
    coeffs = np.exp(-(np.arange(1, 8) - 4.0) ** 2 / 2.0)
    psi0 = ct.state_from_coefficients(cfg, basis7, coeffs / np.linalg.norm(coeffs))
    _, fwd = ct.split_step_evolve(psi0, cfg, 5.0, sample_every=5000)
    _, back = ct.split_step_evolve(fwd, cfg, -5.0, sample_every=5000)
    err = np.sqrt(np.sum(np.abs(back.psi - psi0.psi) ** 2) * cfg.dx)
    assert err < 1e-6


def test_even_symmetry_preserved(cfg7, basis7):
    cfg = ct.ContinuumConfig.for_depth(10.0, N_wells=7, n_grid=2048,
                                       F=0.0, zeta=0.02, dt=2e-4)
    coeffs = np.exp(-(np.arange(1, 8) - 4.0) ** 2 / 2.0)
    psi0 = ct.state_from_coefficients(cfg, basis7, coeffs / np.linalg.norm(coeffs))
    _, final = ct.split_step_evolve(psi0, cfg, 5.0, sample_every=5000)
    sym_err = np.max(np.abs(final.psi[1:] - final.psi[1:][::-1]))
    assert sym_err < 1e-8


def test_tilt_offset_is_pure_gauge(cfg7, basis7):
    # adding a constant to the clipped tilt changes only a global phase
    cfg = ct.ContinuumConfig.for_depth(10.0, N_wells=7, n_grid=2048,
                                       F=0.04, zeta=0.015, dt=2e-4)
    v, w = ct.build_potentials(cfg)
    half_kin = ct._kinetic_phase(cfg, cfg.dt)
    coeffs = np.exp(-(np.arange(1, 8) - 4.0) ** 2 / 2.0)
    psi0 = ct.state_from_coefficients(cfg, basis7, coeffs / np.linalg.norm(coeffs)).psi
    const = 1.7
    n_steps = 4000
    a = ct._advance(psi0.copy(), n_steps, cfg.dt, half_kin, v + cfg.F * w, cfg.zeta)
    b = ct._advance(psi0.copy(), n_steps, cfg.dt, half_kin,
                    v + cfg.F * (w + const), cfg.zeta)
    np.testing.assert_allclose(np.abs(b), np.abs(a), atol=1e-12)
    phase = np.exp(-1j * cfg.F * const * n_steps * cfg.dt)
    np.testing.assert_allclose(b, a * phase, atol=1e-10)


def test_projection_identity_and_orthogonality(cfg7, basis7):
    member = ct.ContinuumState(basis7[3].astype(complex))
    coeffs, rem = ct.project_onto_sites(member, basis7, cfg7.dx)
    expected = np.zeros(7)
    expected[3] = 1.0
    np.testing.assert_allclose(np.abs(coeffs), expected, atol=1e-4)
    assert rem < 1e-4

    # odd excitation of the central well is orthogonal to the even orbitals
    xc = cfg7.well_centers[3]
    odd = (cfg7.x - xc) * basis7[3]
    odd = odd / math.sqrt(np.sum(np.abs(odd) ** 2) * cfg7.dx)
    coeffs, rem = ct.project_onto_sites(ct.ContinuumState(odd.astype(complex)),
                                        basis7, cfg7.dx)
    assert np.max(np.abs(coeffs)) < 0.05
    assert rem > 0.99


def test_projection_rejects_bad_basis(cfg7, basis7):
    bad = np.vstack([basis7, basis7[0]])
    with pytest.raises(ValueError, match="Gram"):
        ct.project_onto_sites(ct.ContinuumState(basis7[0].astype(complex)),
                              bad, cfg7.dx)


def test_basis_gram_is_near_identity(cfg7, basis7):
    gram = basis7 @ basis7.T * cfg7.dx
    assert np.max(np.abs(gram - np.eye(cfg7.N_wells))) < 1e-3


def test_two_well_beating_matches_site_model(wannier10, bands10):
    cfg = ct.ContinuumConfig.for_depth(10.0, N_wells=2, n_grid=512,
                                       box_halfwidth=6 * CELL,
                                       L_clip=3.5 * math.pi, dt=1e-3)
    basis = ct.site_basis(cfg, wannier10)
    red = ct.reduction_params(cfg, wannier10, band1=bands10[0])
    p = red.dnls_params(cfg, 2)
    d0 = dnls.DnlsState(np.array([1.0, 0.0], complex))
    traj, _ = dnls.evolve(d0, p, math.pi, dtau=1e-3, sample_every=314,
                          record_amplitudes=True)
    taus, err, rem = ct.compare_with_dnls(cfg, traj, basis, red)
    assert err[0] < 1e-6  # matched initial condition
    # calibrated bound: hopping from the band width differs from the true
    # two-well splitting at exponentially small order; measured 0.017 here
    assert err.max() < 0.03
    assert rem.max() < 0.06
