"""Direct continuum NLS solver used to cross-validate the lattice reduction.

Solves, on a periodic box with Strang split-step Fourier stepping,

    i psi_t = -psi_xx + V_N(x) psi + F W_N(x) psi + zeta |psi|^2 psi

where V_N is the sin^2 lattice (period 2 pi, depth 1/epsilon^2) restricted
to an N-well window and continued flat at the crest value, and W_N is the
tilt coordinate clipped to [-L_clip, L_clip].  Projecting the solution onto
translated Wannier orbitals gives the site amplitudes that the tight-binding
model (`dnls`) is supposed to reproduce; `compare_with_dnls` measures the
gap between the two.

`ContinuumConfig.for_depth(Lambda0)` picks epsilon so that the continuum
lattice has exactly the band structure of `MathieuProblem.from_depth(Lambda0)`
(energies here are a quarter of the recoil-unit values, the zone-edge
recoil energy being 1/4 in these units).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from . import mathieu_bands as mb
from .dnls import DnlsParams
from .errors import ConfigError, DivergenceError
from .grids import GridFunction, Trajectory

CELL = 2.0 * math.pi  # lattice period in scaled units
_ER_SCALED = 0.25  # recoil energy in scaled units


@dataclass(frozen=True)
class ContinuumConfig:
    """Box, lattice and stepping parameters of the continuum solve."""

    epsilon: float
    F: float
    zeta: float
    box_halfwidth: float
    n_grid: int
    dt: float = 1e-4
    N_wells: int = 11
    L_clip: float = 0.0

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ConfigError("epsilon must be positive")
        if self.n_grid < 4 or self.n_grid & (self.n_grid - 1):
            raise ConfigError("n_grid must be a power of two")
        if self.N_wells < 1:
            raise ConfigError("need at least one well")
        if self.L_clip <= 0.5 * (self.N_wells + 1) * CELL:
            raise ConfigError("L_clip must exceed (N_wells+1)*cell/2")
        if self.box_halfwidth < self.L_clip + CELL:
            raise ConfigError("box must cover the clip region plus one cell")

    @property
    def depth(self) -> float:
        return 1.0 / self.epsilon**2

    @property
    def lattice_depth_recoil(self) -> float:
        """Equivalent depth parameter of the band-structure module.

        The per-period cosine amplitude here is 2 pi^2 * depth, while
        MathieuProblem.from_depth(L) integrates with L * pi^2 / 4, so the
        matching depth parameter is 8 * depth.
        """
        return 8.0 * self.depth

    @property
    def dx(self) -> float:
        return 2.0 * self.box_halfwidth / self.n_grid

    @property
    def x(self) -> np.ndarray:
        return -self.box_halfwidth + self.dx * np.arange(self.n_grid)

    @property
    def well_centers(self) -> np.ndarray:
        return (np.arange(1, self.N_wells + 1) - 0.5 * (self.N_wells + 1)) * CELL

    @classmethod
    def for_depth(cls, Lambda0: float, *, N_wells: int = 11, n_grid: int = 4096,
                  F: float = 0.0, zeta: float = 0.0, dt: float = 1e-4,
                  box_halfwidth: float | None = None,
                  L_clip: float | None = None) -> "ContinuumConfig":
        """Config whose lattice matches MathieuProblem.from_depth(Lambda0)."""
        epsilon = math.sqrt(8.0 / Lambda0)
        if L_clip is None:
            L_clip = 0.5 * (N_wells + 1) * CELL + 0.5 * CELL
        if box_halfwidth is None:
            box_halfwidth = L_clip + 2.0 * CELL
        return cls(epsilon=epsilon, F=F, zeta=zeta, box_halfwidth=box_halfwidth,
                   n_grid=n_grid, dt=dt, N_wells=N_wells, L_clip=L_clip)


@dataclass
class ContinuumState:
    """Wavefunction samples on the box grid at time t."""

    psi: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.psi = np.asarray(self.psi, dtype=complex)

    def norm(self, dx: float) -> float:
        return float(np.sqrt(np.sum(np.abs(self.psi) ** 2) * dx))


def build_potentials(cfg: ContinuumConfig) -> tuple[np.ndarray, np.ndarray]:
    """Lattice window potential V and clipped tilt coordinate W on the grid."""
    x = cfg.x
    centers = cfg.well_centers
    offset = centers[0] % CELL  # aligns sin^2 minima with the well centers
    v = cfg.depth * np.sin(0.5 * (x - offset)) ** 2
    window_lo = centers[0] - 0.5 * CELL
    window_hi = centers[-1] + 0.5 * CELL
    outside = (x < window_lo) | (x > window_hi)
    v[outside] = cfg.depth  # crest value: the window edges sit on maxima
    w = np.clip(x, -cfg.L_clip, cfg.L_clip)
    return v, w


def _kinetic_phase(cfg: ContinuumConfig, dt: float) -> np.ndarray:
    k = 2.0 * math.pi * np.fft.fftfreq(cfg.n_grid, d=cfg.dx)
    return np.exp(-1j * k**2 * (0.5 * dt))


def energy(state: ContinuumState, cfg: ContinuumConfig,
           potentials: tuple[np.ndarray, np.ndarray] | None = None) -> float:
    """Conserved energy <psi|H|psi> + (zeta/2)||psi||_4^4 + F <psi|W|psi>."""
    if potentials is None:
        potentials = build_potentials(cfg)
    v, w = potentials
    psi = state.psi
    dx = cfg.dx
    k = 2.0 * math.pi * np.fft.fftfreq(cfg.n_grid, d=dx)
    psi_k = np.fft.fft(psi)
    kinetic = float(np.sum(k**2 * np.abs(psi_k) ** 2)) * dx / cfg.n_grid
    dens = np.abs(psi) ** 2
    pot = float(np.sum((v + cfg.F * w) * dens)) * dx
    quart = 0.5 * cfg.zeta * float(np.sum(dens**2)) * dx
    return kinetic + pot + quart


def center_of_mass(state: ContinuumState, cfg: ContinuumConfig) -> float:
    """<x> in lattice periods."""
    dens = np.abs(state.psi) ** 2
    nrm = float(np.sum(dens)) * cfg.dx
    return float(np.sum(cfg.x * dens)) * cfg.dx / (nrm * CELL)


def _advance(psi: np.ndarray, n_steps: int, dt: float, half_kin: np.ndarray,
             static_phase_rate: np.ndarray, zeta: float) -> np.ndarray:
    """n Strang steps; half kinetic steps are merged between potentials."""
    if n_steps == 0:
        return psi
    full_kin = half_kin * half_kin
    psi_k = np.fft.fft(psi)
    psi_k *= half_kin
    for i in range(n_steps):
        psi = np.fft.ifft(psi_k)
        psi *= np.exp((-1j * dt) * (static_phase_rate + zeta * np.abs(psi) ** 2))
        psi_k = np.fft.fft(psi)
        psi_k *= full_kin if i < n_steps - 1 else half_kin
    return np.fft.ifft(psi_k)


def split_step_evolve(state: ContinuumState, cfg: ContinuumConfig, t_end: float,
                      sample_every: int = 200, record_states: bool = False):
    """Evolve from state.t by t_end (t_end may be negative).

    Returns (Trajectory, ContinuumState); the trajectory records norm,
    energy and center of mass every `sample_every` steps, and optionally
    the full wavefunction at each sample.  Raises DivergenceError when the
    norm drifts by more than 1e-6.
    """
    if t_end == 0:
        raise ValueError("t_end must be nonzero")
    dt = cfg.dt if t_end > 0 else -cfg.dt
    n_steps = max(1, int(round(abs(t_end) / cfg.dt)))
    n_blocks = max(1, int(math.ceil(n_steps / sample_every)))
    n_steps = n_blocks * sample_every

    v, w = build_potentials(cfg)
    static = v + cfg.F * w
    half_kin = _kinetic_phase(cfg, dt)

    psi = state.psi.astype(complex).copy()
    norm0 = ContinuumState(psi).norm(cfg.dx)
    taus = np.empty(n_blocks + 1)
    coms = np.empty(n_blocks + 1)
    norms = np.empty(n_blocks + 1)
    energies = np.empty(n_blocks + 1)
    snaps = np.empty((n_blocks + 1, cfg.n_grid), dtype=complex) if record_states else None

    def record(i, cur, t):
        st = ContinuumState(cur, t)
        taus[i] = t
        coms[i] = center_of_mass(st, cfg)
        norms[i] = st.norm(cfg.dx)
        energies[i] = energy(st, cfg, (v, w))
        if snaps is not None:
            snaps[i] = cur
        if abs(norms[i] - norm0) > 1e-6:
            raise DivergenceError(f"norm drift {norms[i] - norm0!r} at t={t!r}")

    record(0, psi, state.t)
    for block in range(1, n_blocks + 1):
        psi = _advance(psi, sample_every, dt, half_kin, static, cfg.zeta)
        if not np.all(np.isfinite(psi.view(float))):
            raise DivergenceError(f"non-finite wavefunction at block {block}")
        record(block, psi, state.t + block * sample_every * dt)

    if dt < 0:
        order = np.argsort(taus)  # Trajectory wants increasing times
        traj = Trajectory(taus[order], coms[order], norms[order], energies[order],
                          amplitudes=snaps[order] if snaps is not None else None)
    else:
        traj = Trajectory(taus, coms, norms, energies, amplitudes=snaps)
    return traj, ContinuumState(psi, state.t + n_steps * dt)


# ---------------------------------------------------------------------------
# reduction to the tight-binding model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ReductionParams:
    """Dictionary between the continuum problem and the site model."""

    beta: float  # hopping in scaled energy units
    l4: float  # quartic norm of the site orbital, scaled units
    eta_per_zeta: float
    delta_per_F: float

    def dnls_params(self, cfg: ContinuumConfig, n_sites: int | None = None) -> DnlsParams:
        return DnlsParams(
            N=n_sites if n_sites is not None else cfg.N_wells,
            eta=self.eta_per_zeta * cfg.zeta,
            delta=self.delta_per_F * cfg.F,
        )

    def tau_of_t(self, t) -> np.ndarray:
        return np.asarray(t) * self.beta

    def t_of_tau(self, tau) -> np.ndarray:
        return np.asarray(tau) / self.beta


def wannier_orbital(cfg: ContinuumConfig, **wannier_kwargs) -> GridFunction:
    """First-band Wannier function of the matching lattice, period units."""
    prob = mb.MathieuProblem.from_depth(cfg.lattice_depth_recoil)
    return mb.wannier_first_band(prob, **wannier_kwargs)


def reduction_params(cfg: ContinuumConfig,
                     wannier: GridFunction | None = None,
                     band1: mb.BandStructure | None = None) -> ReductionParams:
    """Hopping, orbital quartic norm, and the (eta, delta) dictionary.

    The hopping is a quarter of the first band width; recoil-unit energies
    convert to scaled units with the factor 1/4, lengths with one period
    = 2 pi.
    """
    lam = cfg.lattice_depth_recoil
    prob = mb.MathieuProblem.from_depth(lam)
    if band1 is None:
        band1 = mb.band_edges(prob, 1)[0]
    beta = band1.width * _ER_SCALED / 4.0
    if wannier is None:
        wannier = mb.wannier_first_band(prob)
    l4 = float(np.trapezoid(wannier.values**4, dx=wannier.dx)) / CELL
    return ReductionParams(
        beta=beta,
        l4=l4,
        eta_per_zeta=l4 / beta,
        delta_per_F=CELL / beta,
    )


def site_basis(cfg: ContinuumConfig, wannier: GridFunction | None = None) -> np.ndarray:
    """Translated Wannier orbitals sampled on the box grid, shape (N, n_grid)."""
    if wannier is None:
        wannier = wannier_orbital(cfg)
    spline = CubicSpline(wannier.x, wannier.values, extrapolate=False)
    half = wannier.x[-1]
    basis = np.zeros((cfg.N_wells, cfg.n_grid))
    for i, xc in enumerate(cfg.well_centers):
        rel = (cfg.x - xc) / CELL  # orbital argument in period units
        inside = np.abs(rel) <= half
        vals = np.zeros(cfg.n_grid)
        vals[inside] = spline(rel[inside])
        basis[i] = vals / math.sqrt(CELL)
    return basis


def project_onto_sites(state: ContinuumState, basis: np.ndarray,
                       dx: float) -> tuple[np.ndarray, float]:
    """Site coefficients <u_l, psi> and the L2 norm of the orthogonal rest."""
    basis = np.atleast_2d(np.asarray(basis))
    gram = basis @ basis.T.conj() * dx
    dev = float(np.max(np.abs(gram - np.eye(basis.shape[0]))))
    if dev > 1e-3:
        raise ValueError(f"site basis is not orthonormal enough (Gram deviation {dev:.2e})")
    coeffs = (basis.conj() @ state.psi) * dx
    remainder = state.psi - basis.T @ coeffs
    return coeffs, float(np.sqrt(np.sum(np.abs(remainder) ** 2) * dx))


def state_from_coefficients(cfg: ContinuumConfig, basis: np.ndarray,
                            coeffs: np.ndarray) -> ContinuumState:
    """Normalized superposition of site orbitals."""
    psi = basis.T @ np.asarray(coeffs, dtype=complex)
    nrm = math.sqrt(float(np.sum(np.abs(psi) ** 2)) * cfg.dx)
    return ContinuumState(psi / nrm, 0.0)


def compare_with_dnls(cfg: ContinuumConfig, dnls_traj: Trajectory,
                      basis: np.ndarray, red: ReductionParams | None = None):
    """Max site-coefficient gap between the continuum and the site model.

    The continuum run starts from the superposition matching the trajectory's
    initial amplitudes and is sampled at the trajectory times (rescaled by
    the hopping).  At each sample the global phase is aligned with the
    L2-optimal factor before taking the max over sites; the projection
    remainder norm is recorded alongside.  Returns (taus, max_errors,
    remainders).
    """
    if dnls_traj.amplitudes is None:
        raise ValueError("dnls trajectory must carry amplitudes")
    if red is None:
        red = reduction_params(cfg)
    taus = dnls_traj.taus
    times = np.asarray(red.t_of_tau(taus - taus[0]))
    state = state_from_coefficients(cfg, basis, dnls_traj.amplitudes[0])

    v, w = build_potentials(cfg)
    static = v + cfg.F * w
    half_kin = _kinetic_phase(cfg, cfg.dt)

    max_err = np.empty(taus.size)
    remainders = np.empty(taus.size)
    psi = state.psi.copy()
    t_done = 0.0
    for j, t_target in enumerate(times):
        gap = float(t_target) - t_done
        n_full = int(gap / cfg.dt)
        psi = _advance(psi, n_full, cfg.dt, half_kin, static, cfg.zeta)
        rest = gap - n_full * cfg.dt
        if rest > 1e-12 * max(1.0, abs(t_target)):
            psi = _advance(psi, 1, rest, _kinetic_phase(cfg, rest), static, cfg.zeta)
        t_done = float(t_target)
        coeffs, rem = project_onto_sites(ContinuumState(psi, t_target), basis, cfg.dx)
        d_vec = dnls_traj.amplitudes[j]
        overlap = np.vdot(d_vec, coeffs)
        phase = overlap / abs(overlap) if abs(overlap) > 0 else 1.0
        max_err[j] = float(np.max(np.abs(coeffs - phase * d_vec)))
        remainders[j] = rem
    return taus, max_err, remainders
