"""Center-of-mass analysis: extremum detection, pseudo-periods, eta sweeps.

The oscillation of the center of mass is amplitude-modulated, so the
"period" is operationalized as the gap between successive refined maxima;
minima are detected as well and kept separately.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dnls import DnlsParams, DnlsState, _com, evolve
from .errors import AnalysisError
from .grids import Trajectory

__all__ = [
    "PeriodEstimate",
    "Trajectory",
    "center_of_mass",
    "detect_extrema",
    "pseudo_period_stats",
    "eta_sweep",
]

DEFAULT_WINDOW = 5


def center_of_mass(state: DnlsState) -> float:
    """Sum over sites of (l - (N+1)/2) |d_l|^2, in lattice periods."""
    return _com(state.amplitudes)


def _refine_quadratic(taus: np.ndarray, values: np.ndarray, i: int) -> float:
    """Vertex of the parabola through samples i-1, i, i+1."""
    y0, y1, y2 = values[i - 1], values[i], values[i + 1]
    denom = y0 - 2.0 * y1 + y2
    if denom == 0.0:
        return float(taus[i])
    offset = 0.5 * (y0 - y2) / denom
    h = taus[i + 1] - taus[i]
    return float(taus[i] + offset * h)


def detect_extrema(traj: Trajectory, kind: str = "max",
                   window: int = DEFAULT_WINDOW) -> np.ndarray:
    """Times of strict local extrema of the center of mass.

    An interior sample qualifies when it strictly dominates every sample
    within +-window; each hit is then refined by quadratic interpolation
    through its three nearest samples.  Returns an empty array when nothing
    qualifies (monotone signals).
    """
    if kind not in ("max", "min"):
        raise ValueError("kind must be 'max' or 'min'")
    if traj.n_samples < 3:
        raise ValueError("need at least three samples")
    y = traj.com if kind == "max" else -traj.com
    n = y.size
    hits = []
    for i in range(1, n - 1):
        lo = max(0, i - window)
        hi = min(n, i + window + 1)
        seg = y[lo:hi]
        if y[i] > np.max(np.delete(seg, i - lo)):
            hits.append(i)
    return np.array([_refine_quadratic(traj.taus, y, i) for i in hits])


@dataclass
class PeriodEstimate:
    """Pseudo-period statistics from successive center-of-mass maxima."""

    extrema_taus: np.ndarray
    minima_taus: np.ndarray
    pseudo_periods: np.ndarray
    mean_period: float
    rel_dev: float
    n_osc: int = field(default=0)


def pseudo_period_stats(traj: Trajectory, n_osc: int, tau_B: float,
                        window: int = DEFAULT_WINDOW) -> PeriodEstimate:
    """Mean gap of the first n_osc maxima pairs and its deviation from tau_B."""
    maxima = detect_extrema(traj, "max", window=window)
    minima = detect_extrema(traj, "min", window=window)
    if maxima.size < n_osc + 1:
        raise AnalysisError(
            f"need {n_osc + 1} center-of-mass maxima, found {maxima.size}")
    gaps = np.diff(maxima)[:n_osc]
    mean_period = float(np.mean(gaps))
    return PeriodEstimate(
        extrema_taus=maxima,
        minima_taus=minima,
        pseudo_periods=gaps,
        mean_period=mean_period,
        rel_dev=abs(mean_period - tau_B) / tau_B,
        n_osc=n_osc,
    )


def _sweep_entry(args):
    eta, state_amps, n, delta, n_osc, tau_end, dtau, sample_every, window = args
    p = DnlsParams(N=n, eta=eta, delta=delta)
    traj, _ = evolve(DnlsState(np.asarray(state_amps, dtype=complex)), p,
                     tau_end, dtau=dtau, sample_every=sample_every)
    return pseudo_period_stats(traj, n_osc, p.tau_bloch, window=window)


def eta_sweep(p_base: DnlsParams, state0: DnlsState, etas, n_osc: int = 14,
              n_bloch_periods: float = 16.0, dtau: float = 1e-3,
              sample_every: int = 10, window: int = DEFAULT_WINDOW,
              jobs: int = 1) -> list[tuple[float, PeriodEstimate | AnalysisError]]:
    """One evolution + period extraction per nonlinearity value.

    Entries that fail analysis are collected as AnalysisError values while
    the sweep continues; output order follows the input etas regardless of
    scheduling.
    """
    etas = [float(e) for e in etas]
    if any(abs(e) > 0.5 for e in etas):
        raise ValueError("eta sweep limited to |eta| <= 0.5 (step stability)")
    tau_end = n_bloch_periods * p_base.tau_bloch
    arglist = [
        (eta, state0.amplitudes.copy(), p_base.N, p_base.delta, n_osc,
         tau_end, dtau, sample_every, window)
        for eta in etas
    ]
    results: list = [None] * len(etas)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for i, res in enumerate(pool.map(_try_sweep_entry, arglist)):
                results[i] = res
    else:
        for i, args in enumerate(arglist):
            results[i] = _try_sweep_entry(args)
    return list(zip(etas, results))


def _try_sweep_entry(args):
    try:
        return _sweep_entry(args)
    except AnalysisError as exc:
        return exc


def period_spread(results, tau_B: float) -> float:
    """(max - min) of mean periods across a sweep, relative to tau_B.

    Failed entries are ignored; needs at least two valid ones.
    """
    periods = [r.mean_period for _, r in results if isinstance(r, PeriodEstimate)]
    if len(periods) < 2:
        raise AnalysisError("need at least two valid sweep entries")
    return (max(periods) - min(periods)) / tau_B
