import math

import numpy as np
import pytest

from blochsim import dnls, observables as obs
from blochsim.errors import AnalysisError
from blochsim.grids import Trajectory
from blochsim.states import builtin_initial_state


def synthetic_traj(fn, t_end=100.0, h=0.01):
    taus = np.arange(0.0, t_end, h)
    com = fn(taus)
    ones = np.ones_like(taus)
    return Trajectory(taus, com, ones, ones)


def test_com_single_site_centered():
    amps = np.zeros(41, dtype=complex)
    amps[20] = 1.0  # site 21 of 41 sits at the center
    assert obs.center_of_mass(dnls.DnlsState(amps)) == pytest.approx(0.0, abs=1e-14)


def test_com_uniform_distribution():
    amps = np.full(40, 1 / math.sqrt(40), dtype=complex)
    assert obs.center_of_mass(dnls.DnlsState(amps)) == pytest.approx(0.0, abs=1e-12)


def test_com_table1_direct_summation():
    # the tabulated packet is symmetric about site 20, half a site below the
    # lattice center (N+1)/2 = 20.5
    state = builtin_initial_state("table1")
    w = np.abs(state.amplitudes) ** 2
    oracle = float(np.dot(np.arange(1, 41) - 20.5, w))
    assert oracle == pytest.approx(-0.5, abs=1e-12)
    assert obs.center_of_mass(state) == pytest.approx(oracle, abs=1e-14)


def test_detect_extrema_pure_cosine():
    traj = synthetic_traj(np.cos, t_end=40.0)
    maxima = obs.detect_extrema(traj, "max")
    expected = 2 * math.pi * np.arange(1, maxima.size + 1)
    np.testing.assert_allclose(maxima, expected[: maxima.size], atol=1e-6)
    minima = obs.detect_extrema(traj, "min")
    expected_min = math.pi * (2 * np.arange(minima.size) + 1)
    np.testing.assert_allclose(minima, expected_min[: minima.size], atol=1e-6)


def test_detect_extrema_modulated_signal():
    traj = synthetic_traj(lambda t: np.cos(t) * (1 + 0.1 * np.cos(0.05 * t)),
                          t_end=120.0)
    maxima = obs.detect_extrema(traj, "max")
    gaps = np.diff(maxima)
    np.testing.assert_allclose(gaps, 2 * math.pi, atol=1e-3)


def test_detect_extrema_monotone_signal_is_empty():
    traj = synthetic_traj(lambda t: 0.3 * t, t_end=10.0)
    assert obs.detect_extrema(traj, "max").size == 0
    assert obs.detect_extrema(traj, "min").size == 0


def test_detect_extrema_shift_invariance():
    base = synthetic_traj(np.cos, t_end=40.0)
    shifted = Trajectory(base.taus, base.com + 5.5, base.norms, base.energies)
    np.testing.assert_array_equal(obs.detect_extrema(base, "max"),
                                  obs.detect_extrema(shifted, "max"))
    delayed = Trajectory(base.taus + 3.0, base.com, base.norms, base.energies)
    np.testing.assert_allclose(obs.detect_extrema(delayed, "max"),
                               obs.detect_extrema(base, "max") + 3.0, atol=1e-12)


def test_detect_extrema_validation():
    traj = synthetic_traj(np.cos, t_end=40.0)
    with pytest.raises(ValueError):
        obs.detect_extrema(traj, "peak")
    tiny = Trajectory(np.array([0.0, 1.0]), np.zeros(2), np.ones(2), np.ones(2))
    with pytest.raises(ValueError):
        obs.detect_extrema(tiny, "max")


def test_pseudo_period_synthetic():
    period = 3.7
    traj = synthetic_traj(lambda t: np.cos(2 * math.pi * t / period), t_end=80.0)
    est = obs.pseudo_period_stats(traj, 14, period)
    assert est.mean_period == pytest.approx(period, abs=1e-6)
    assert est.rel_dev < 1e-6
    assert est.pseudo_periods.size == 14
    assert np.all(est.pseudo_periods > 0)
    assert est.minima_taus.size >= 14


def test_pseudo_period_amplitude_invariance():
    period = 5.0
    base = synthetic_traj(lambda t: np.cos(2 * math.pi * t / period), t_end=90.0)
    scaled = Trajectory(base.taus, 7.3 * base.com, base.norms, base.energies)
    a = obs.pseudo_period_stats(base, 14, period)
    b = obs.pseudo_period_stats(scaled, 14, period)
    assert a.mean_period == pytest.approx(b.mean_period, rel=1e-14)


def test_pseudo_period_insufficient_extrema():
    traj = synthetic_traj(np.cos, t_end=20.0)
    with pytest.raises(AnalysisError, match="maxima"):
        obs.pseudo_period_stats(traj, 14, 2 * math.pi)


def test_linear_period_equals_bloch_period():
    p = dnls.DnlsParams(N=40, eta=0.0, delta=1.103)
    traj, _ = dnls.evolve(builtin_initial_state("table1"), p,
                          16 * p.tau_bloch, dtau=1e-3, sample_every=10)
    est = obs.pseudo_period_stats(traj, 14, p.tau_bloch)
    assert est.rel_dev <= 1e-4


def test_eta_sweep_zero_entry_is_state_independent():
    p = dnls.DnlsParams(N=40, eta=0.0, delta=1.103)
    res1 = obs.eta_sweep(p, builtin_initial_state("table1"), [0.0], n_osc=14)
    res2 = obs.eta_sweep(p, builtin_initial_state("table2"), [0.0], n_osc=14)
    t1 = res1[0][1].mean_period
    t2 = res2[0][1].mean_period
    assert t1 == pytest.approx(t2, rel=1e-6)


def test_eta_sweep_rejects_unstable_range():
    p = dnls.DnlsParams(N=40, eta=0.0, delta=1.103)
    with pytest.raises(ValueError):
        obs.eta_sweep(p, builtin_initial_state("table1"), [0.8])


def test_eta_sweep_collects_failures():
    # far too short a run: every entry fails analysis but the sweep finishes
    p = dnls.DnlsParams(N=40, eta=0.0, delta=1.103)
    res = obs.eta_sweep(p, builtin_initial_state("table1"), [0.0, 0.1],
                        n_osc=14, n_bloch_periods=2.0)
    assert all(isinstance(r, AnalysisError) for _, r in res)
    with pytest.raises(AnalysisError):
        obs.period_spread(res, p.tau_bloch)
