"""Sampling containers: functions on a uniform spatial grid and time series.

CSV files written here use 17 significant digits so that reading them back
reproduces the doubles exactly and repeated runs are byte-stable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_FMT = "%.17g"


def _format_row(values) -> str:
    return ",".join(_FMT % v for v in values)


@dataclass
class GridFunction:
    """Real- or complex-valued function sampled on a uniform grid.

    `x0` is the coordinate of the first sample and `dx` the spacing; the
    length unit is whatever the producer used (lattice periods unless a
    caller explicitly works in SI).
    """

    x0: float
    dx: float
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.ndim != 1:
            raise ValueError("GridFunction values must be one-dimensional")
        if not (self.dx > 0):
            raise ValueError("grid spacing must be positive")

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.n)

    def same_grid(self, other: "GridFunction", tol: float = 1e-12) -> bool:
        return (
            self.n == other.n
            and abs(self.x0 - other.x0) <= tol * max(1.0, abs(self.x0))
            and abs(self.dx - other.dx) <= tol * self.dx
        )

    def l2_norm(self) -> float:
        """Trapezoidal L2 norm."""
        return float(np.sqrt(np.trapezoid(np.abs(self.values) ** 2, dx=self.dx)))

    def normalized(self) -> "GridFunction":
        nrm = self.l2_norm()
        if nrm == 0.0:
            raise ValueError("cannot normalize the zero function")
        return GridFunction(self.x0, self.dx, self.values / nrm)

    def inner(self, other: "GridFunction") -> complex:
        """Trapezoidal <self, other> with the left factor conjugated."""
        if not self.same_grid(other):
            raise ValueError("grid mismatch in inner product")
        return complex(np.trapezoid(np.conj(self.values) * other.values, dx=self.dx))

    def to_csv(self, path) -> None:
        if np.iscomplexobj(self.values):
            raise ValueError("CSV serialization is defined for real samples only")
        with open(path, "w") as fh:
            fh.write("x,value\n")
            for xi, vi in zip(self.x, self.values):
                fh.write(_format_row((xi, vi)) + "\n")

    @classmethod
    def from_csv(cls, path) -> "GridFunction":
        data = np.loadtxt(path, delimiter=",", skiprows=1)
        x = data[:, 0]
        if x.size < 2:
            raise ValueError("grid CSV needs at least two samples")
        dx = x[1] - x[0]
        if not np.allclose(np.diff(x), dx, rtol=0, atol=1e-9 * abs(dx)):
            raise ValueError("grid CSV is not uniformly spaced")
        return cls(float(x[0]), float(dx), data[:, 1])


@dataclass
class Trajectory:
    """Time series of scalar diagnostics along one evolution.

    `com` is the center of mass in lattice periods.  `amplitudes` optionally
    keeps the complex state at every sample (needed by the continuum
    comparison); it is never serialized to the trajectory CSV.
    """

    taus: np.ndarray
    com: np.ndarray
    norms: np.ndarray
    energies: np.ndarray
    amplitudes: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.taus = np.asarray(self.taus, dtype=float)
        self.com = np.asarray(self.com, dtype=float)
        self.norms = np.asarray(self.norms, dtype=float)
        self.energies = np.asarray(self.energies, dtype=float)
        n = self.taus.size
        if not (self.com.size == self.norms.size == self.energies.size == n):
            raise ValueError("trajectory columns must have equal length")
        if n >= 2:
            dt = np.diff(self.taus)
            if np.any(dt <= 0):
                raise ValueError("trajectory times must be strictly increasing")
            if not np.allclose(dt, dt[0], rtol=1e-9, atol=1e-12 * abs(dt[0])):
                raise ValueError("trajectory times must be uniformly spaced")

    @property
    def n_samples(self) -> int:
        return self.taus.size

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("tau,com_in_b,norm,energy\n")
            for row in zip(self.taus, self.com, self.norms, self.energies):
                fh.write(_format_row(row) + "\n")

    @classmethod
    def from_csv(cls, path) -> "Trajectory":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(data[:, 0], data[:, 1], data[:, 2], data[:, 3])
