"""Physical constants, derived scales and dimensionless model parameters.

Everything downstream works in recoil energies and lattice periods; this is
the only module that touches SI values.  Constants are pinned (CODATA 2018)
rather than imported from scipy.constants so results cannot drift with
library updates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

HBAR = 1.054571817e-34  # J s
ATOMIC_MASS_KG = 1.66053906660e-27  # kg per unified atomic mass unit
BOHR_RADIUS = 5.29177210903e-11  # m
G_EARTH = 9.807  # m / s^2

SR88_MASS_AU = 87.91
LAMBDA_L_SR = 532e-9  # m, lattice laser wavelength used throughout


def _require_positive(**kwargs: float) -> None:
    for name, value in kwargs.items():
        if not (value > 0):
            raise ValueError(f"{name} must be positive, got {value!r}")


@dataclass(frozen=True)
class PhysicalParams:
    """Physical lattice / tilt / nonlinearity inputs.

    `b` is always half the laser wavelength; it is derived, not free.
    `gamma` is the effective 1D nonlinearity strength in J*m (may be zero
    or negative for attractive interactions).
    """

    m: float  # kg
    g: float  # m/s^2
    lambda_L: float  # m
    Lambda0: float  # dimensionless lattice depth
    gamma: float = 0.0  # J m
    hbar: float = HBAR  # J s

    def __post_init__(self):
        _require_positive(m=self.m, lambda_L=self.lambda_L, Lambda0=self.Lambda0, hbar=self.hbar)

    @property
    def b(self) -> float:
        return self.lambda_L / 2.0

    @classmethod
    def strontium88(cls, Lambda0: float = 10.0, gamma: float = 0.0,
                    g: float = G_EARTH) -> "PhysicalParams":
        return cls(m=SR88_MASS_AU * ATOMIC_MASS_KG, g=g, lambda_L=LAMBDA_L_SR,
                   Lambda0=Lambda0, gamma=gamma)


def recoil_energy(p: PhysicalParams) -> float:
    """Photon recoil energy 2 pi^2 hbar^2 / (m lambda_L^2) in joules."""
    _require_positive(m=p.m, lambda_L=p.lambda_L)
    return 2.0 * math.pi**2 * p.hbar**2 / (p.m * p.lambda_L**2)


def bloch_period(p: PhysicalParams) -> float:
    """Bloch period 2 pi hbar / (m g b) in seconds."""
    _require_positive(m=p.m, g=p.g, b=p.b)
    return 2.0 * math.pi * p.hbar / (p.m * p.g * p.b)


def oscillation_range(B1: float, f: float) -> float:
    """Spatial width B1/|f| explored by the Bloch oscillator."""
    if f == 0:
        raise ValueError("tilt force f must be nonzero")
    return B1 / abs(f)


def gamma_1d(n_atoms: float, a_s: float, d_perp: float, m: float,
             hbar: float = HBAR) -> float:
    """Effective 1D nonlinearity from condensate data.

    Transverse reduction of the 3D coupling 4 pi N a_s hbar^2 / m by the
    oscillator cross-section 2 pi d_perp^2.
    """
    _require_positive(d_perp=d_perp, m=m)
    gamma_3d = 4.0 * n_atoms * math.pi * a_s * hbar**2 / m
    return gamma_3d / (2.0 * math.pi * d_perp**2)


@dataclass(frozen=True)
class DerivedScales:
    """SI scales computed once from PhysicalParams."""

    E_R: float  # J
    k_L: float  # 1/m
    V0: float  # J
    f: float  # N
    T_bloch: float  # s
    epsilon: float  # dimensionless, 1/sqrt(Lambda0)

    @classmethod
    def from_physical(cls, p: PhysicalParams) -> "DerivedScales":
        E_R = recoil_energy(p)
        return cls(
            E_R=E_R,
            k_L=2.0 * math.pi / p.lambda_L,
            V0=p.Lambda0 * E_R,
            f=p.m * p.g,
            T_bloch=bloch_period(p),
            epsilon=p.Lambda0 ** -0.5,
        )


@dataclass(frozen=True)
class DimensionlessParams:
    """Inputs of the tight-binding model plus the scaled continuum constants."""

    N: int
    eta: float  # nonlinearity per hopping
    delta: float  # tilt energy per site per hopping
    beta: float  # hopping energy, J
    F: float  # scaled tilt of the continuum rescaling
    zeta: float  # scaled nonlinearity of the continuum rescaling


def dimensionless_params(p: PhysicalParams, beta: float, l4norm: float,
                         N: int) -> DimensionlessParams:
    """Tight-binding parameters from physical inputs.

    `beta` is the hopping energy (J), typically a quarter of the first band
    width; `l4norm` is the quartic norm of the on-site orbital (1/m).
    """
    if not (beta > 0):
        raise ValueError(f"hopping beta must be positive, got {beta!r}")
    E_R = recoil_energy(p)
    k_L = 2.0 * math.pi / p.lambda_L
    f = p.m * p.g  # zero tilt is a legitimate degenerate case
    return DimensionlessParams(
        N=N,
        eta=p.gamma * l4norm / beta,
        delta=f * p.b / beta,
        beta=beta,
        F=f / (2.0 * E_R * k_L),
        zeta=p.gamma / (2.0 * E_R * k_L),
    )
