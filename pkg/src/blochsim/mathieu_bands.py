"""Band structure and Wannier functions of the cosine lattice.

The lattice Schrödinger problem is reduced, per period, to the Mathieu-type
equation

    psi'' = -(ehat + vhat * cos(2 pi xhat)) * psi,   xhat = x / b,

where ehat is the shifted/scaled energy and vhat = Lambda0 * pi^2 / 2 the
scaled depth.  Fundamental solutions psi1 (cosine-like) and psi2 (sine-like)
are produced by direct numerical integration together with the parameter
sensitivity d(psi1)/d(ehat), which supplies the discriminant derivative
needed by the Wannier quadrature.  The discriminant mu(ehat) = psi1(b) obeys
mu = cos(k b) on the bands, which is what every search below inverts.

Public energies are in recoil units E_R; lengths are in lattice periods b
unless a problem is built with an explicit SI period.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson

from .errors import IntegrationError, SearchError
from .grids import GridFunction

DEFAULT_GRID_HALFWIDTH = 4.0  # lattice periods
DEFAULT_GRID_POINTS = 1025
DEFAULT_K_SAMPLES = 257
DEFAULT_SCAN_POINTS = 2000

_GAP_CLOSED_TOL = 1e-8  # |mu| - 1 at a discriminant extremum counts as closed
_WRONSKIAN_TOL = 1e-6


@dataclass(frozen=True)
class MathieuProblem:
    """Scaled cosine-lattice problem.

    Vtilde0 is the cosine amplitude in 1/length^2, q the cosine wavenumber
    (one period per lattice cell: q*b = 2*pi) and b the lattice period.
    """

    Vtilde0: float
    q: float
    b: float

    def __post_init__(self):
        if self.b <= 0:
            raise ValueError("lattice period b must be positive")
        if self.Vtilde0 < 0:
            raise ValueError("scaled depth must be nonnegative")
        if abs(self.q * self.b - 2.0 * math.pi) > 1e-9 * 2.0 * math.pi:
            raise ValueError("q*b must equal 2*pi (one cosine period per cell)")

    @classmethod
    def from_depth(cls, Lambda0: float, b: float = 1.0) -> "MathieuProblem":
        """Problem for lattice depth Lambda0 (in recoil units)."""
        k_L = math.pi / b
        return cls(Vtilde0=0.5 * Lambda0 * k_L**2, q=2.0 * k_L, b=b)

    @property
    def vhat(self) -> float:
        """Dimensionless cosine amplitude of the per-period equation.

        The fundamental-solution parameterization this package follows puts
        half the scaled depth in front of the cosine: vhat = Vtilde0*b^2/2
        (= Lambda0*pi^2/4).  Every band edge, hopping element and Wannier
        profile downstream is tied to this convention.
        """
        return 0.5 * self.Vtilde0 * self.b**2

    @property
    def lambda0(self) -> float:
        """Lattice depth in recoil units (inverse of Vtilde0 = Lambda0*k_L^2/2)."""
        return 2.0 * self.Vtilde0 * self.b**2 / math.pi**2

    def energy_to_floquet(self, E: float):
        """Recoil-unit energy -> scaled Floquet energy ehat."""
        return (np.asarray(E) - 0.5 * self.lambda0) * math.pi**2

    def floquet_to_energy(self, ehat: float):
        """Scaled Floquet energy ehat -> recoil-unit energy."""
        return np.asarray(ehat) / math.pi**2 + 0.5 * self.lambda0


@dataclass(frozen=True)
class FundamentalPair:
    """Fundamental solutions at one endpoint, in lattice-period units.

    psi1/psi2 carry the initial data psi1(0)=1, psi1'(0)=0, psi2(0)=0,
    psi2'(0)=1; dmu_dE is the energy derivative of psi1 at x_end per recoil
    unit (the discriminant derivative when x_end = b).
    """

    x_end: float
    psi1: float
    dpsi1: float
    psi2: float
    dpsi2: float
    dmu_dE: float

    @property
    def wronskian(self) -> float:
        return self.psi1 * self.dpsi2 - self.dpsi1 * self.psi2


@dataclass
class BandStructure:
    """One band: edges in recoil units plus optional (k*b, E) samples."""

    n: int
    E_bottom: float
    E_top: float
    gap_above: float = math.nan
    kb: np.ndarray | None = field(default=None, repr=False)
    energies: np.ndarray | None = field(default=None, repr=False)

    @property
    def width(self) -> float:
        return self.E_top - self.E_bottom


# ---------------------------------------------------------------------------
# integration kernel
# ---------------------------------------------------------------------------

def _steps_per_unit(vhat: float, ehat_max: float) -> int:
    # resolve the fastest local oscillation/growth rate sqrt(|ehat| + vhat)
    omega = math.sqrt(max(abs(ehat_max) + abs(vhat), 1.0))
    return max(2048, 256 * int(math.ceil(omega)))


def _propagate(vhat: float, ehat: np.ndarray, x_end: float = 1.0, *,
               record_x: np.ndarray | None = None,
               record_rows: tuple[int, ...] = (0,),
               steps_per_unit: int | None = None):
    """March the 6-component system (psi1, psi1', psi2, psi2', w, w').

    w is the energy sensitivity of psi1 (zero initial data, forced by -psi1).
    Returns the end state with shape (6, M) and, when `record_x` (a uniform
    grid starting at 0 and ending at x_end) is given, the requested rows at
    those points with shape (n_rec, len(record_rows), M).
    """
    ehat = np.atleast_1d(np.asarray(ehat, dtype=float))
    m = ehat.size
    if steps_per_unit is None:
        steps_per_unit = _steps_per_unit(vhat, float(np.max(np.abs(ehat))))

    if record_x is None:
        seg_edges = np.array([0.0, x_end])
    else:
        record_x = np.asarray(record_x, dtype=float)
        if record_x[0] != 0.0 or abs(record_x[-1] - x_end) > 1e-12:
            raise ValueError("record grid must run from 0 to x_end")
        seg_edges = record_x

    y = np.zeros((6, m))
    y[0] = 1.0  # psi1(0) = 1
    y[3] = 1.0  # psi2'(0) = 1

    records = None
    if record_x is not None:
        records = np.empty((seg_edges.size, len(record_rows), m))
        records[0] = y[list(record_rows)]

    two_pi = 2.0 * math.pi
    k1 = np.empty_like(y)
    k2 = np.empty_like(y)
    k3 = np.empty_like(y)
    k4 = np.empty_like(y)
    yt = np.empty_like(y)

    def rhs(out, state, a):
        out[0] = state[1]
        np.multiply(a, state[0], out=out[1])
        out[2] = state[3]
        np.multiply(a, state[2], out=out[3])
        out[4] = state[5]
        np.multiply(a, state[4], out=out[5])
        out[5] -= state[0]

    for i_seg in range(seg_edges.size - 1):
        x0, x1 = seg_edges[i_seg], seg_edges[i_seg + 1]
        n_sub = max(1, int(math.ceil((x1 - x0) * steps_per_unit)))
        h = (x1 - x0) / n_sub
        xs = x0 + h * np.arange(n_sub + 1)
        a_nodes = -(ehat[None, :] + vhat * np.cos(two_pi * xs)[:, None])
        a_mids = -(ehat[None, :] + vhat * np.cos(two_pi * (xs[:-1] + 0.5 * h))[:, None])
        for j in range(n_sub):
            a0, am, a1 = a_nodes[j], a_mids[j], a_nodes[j + 1]
            rhs(k1, y, a0)
            np.multiply(k1, 0.5 * h, out=yt)
            yt += y
            rhs(k2, yt, am)
            np.multiply(k2, 0.5 * h, out=yt)
            yt += y
            rhs(k3, yt, am)
            np.multiply(k3, h, out=yt)
            yt += y
            rhs(k4, yt, a1)
            k2 += k3
            k2 *= 2.0
            k1 += k2
            k1 += k4
            k1 *= h / 6.0
            y += k1
        if records is not None:
            records[i_seg + 1] = y[list(record_rows)]

    return y, records


def integrate_fundamental(prob: MathieuProblem, E: float, x_end: float,
                          steps_per_unit: int | None = None) -> FundamentalPair:
    """Fundamental solutions and the energy sensitivity at x_end.

    E is in recoil units, x_end in the same length unit as prob.b.  Raises
    IntegrationError if the integration loses the unit Wronskian.
    """
    if not (x_end > 0):
        raise ValueError("x_end must be positive")
    ehat = float(prob.energy_to_floquet(E))
    xhat_end = x_end / prob.b
    y, _ = _propagate(prob.vhat, np.array([ehat]), xhat_end,
                      steps_per_unit=steps_per_unit)
    psi1, dpsi1, psi2, dpsi2, w, _ = (float(v) for v in y[:, 0])
    if not np.all(np.isfinite(y)):
        raise IntegrationError(
            f"non-finite fundamental solution at E={E!r} E_R, x_end={x_end!r}")
    wr = psi1 * dpsi2 - dpsi1 * psi2
    if abs(wr - 1.0) > _WRONSKIAN_TOL:
        raise IntegrationError(
            f"Wronskian {wr!r} deviates from 1 at E={E!r} E_R "
            f"(ehat={ehat!r}, vhat={prob.vhat!r})")
    # convert derivatives back to the caller's length unit; dmu/dE per E_R
    return FundamentalPair(
        x_end=x_end,
        psi1=psi1,
        dpsi1=dpsi1 / prob.b,
        psi2=psi2 * prob.b,
        dpsi2=dpsi2,
        dmu_dE=w * math.pi**2,
    )


def discriminant(prob: MathieuProblem, E: float) -> float:
    """Floquet discriminant mu(E) = psi1(b, E); |mu| <= 1 on the bands."""
    return integrate_fundamental(prob, E, prob.b).psi1


# ---------------------------------------------------------------------------
# band edges
# ---------------------------------------------------------------------------

def _mu_batch(vhat, ehat, rows=(0, 4), steps_per_unit=None):
    y, _ = _propagate(vhat, ehat, 1.0, steps_per_unit=steps_per_unit)
    return tuple(y[r] for r in rows)


def _refine_crossings(vhat, lo, hi, g_lo, target, steps_per_unit,
                      n_bisect=14, n_newton=5):
    """Vectorized bracketed root refinement of mu(ehat) = target.

    Bisection localizes, then bracket-clipped Newton steps (using the exact
    derivative from the sensitivity row) polish to machine precision.
    """
    lo = lo.copy()
    hi = hi.copy()
    for _ in range(n_bisect):
        mid = 0.5 * (lo + hi)
        mu_mid, _ = _mu_batch(vhat, mid, steps_per_unit=steps_per_unit)
        g_mid = mu_mid - target
        take_lo = np.sign(g_mid) == np.sign(g_lo)
        lo = np.where(take_lo, mid, lo)
        g_lo = np.where(take_lo, g_mid, g_lo)
        hi = np.where(take_lo, hi, mid)
    x = 0.5 * (lo + hi)
    for _ in range(n_newton):
        mu, dmu = _mu_batch(vhat, x, steps_per_unit=steps_per_unit)
        g = mu - target
        take_lo = np.sign(g) == np.sign(g_lo)
        lo = np.where(take_lo, x, lo)
        g_lo = np.where(take_lo, g, g_lo)
        hi = np.where(take_lo, hi, x)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(dmu != 0.0, g / dmu, 0.0)
        x = np.clip(x - step, lo, hi)
    return x


def _refine_extrema(vhat, lo, hi, d_lo, steps_per_unit, n_bisect=40):
    """Bisection on the discriminant derivative (extrema of mu)."""
    lo = lo.copy()
    hi = hi.copy()
    for _ in range(n_bisect):
        mid = 0.5 * (lo + hi)
        _, dmu_mid = _mu_batch(vhat, mid, steps_per_unit=steps_per_unit)
        take_lo = np.sign(dmu_mid) == np.sign(d_lo)
        lo = np.where(take_lo, mid, lo)
        d_lo = np.where(take_lo, dmu_mid, d_lo)
        hi = np.where(take_lo, hi, mid)
    return 0.5 * (lo + hi)


def _subcell_brackets(grid, mu, cell, e_star, m_star, target):
    """Brackets for the two crossings around a barely-open gap extremum."""
    g_star = m_star - target
    out = []
    i = cell
    while i >= 0 and (mu[i] - target) * g_star > 0:
        i -= 1
    if i >= 0:
        out.append((grid[i], e_star, mu[i] - target))
    j = cell + 1
    while j < mu.size and (mu[j] - target) * g_star > 0:
        j += 1
    if j < mu.size:
        out.append((e_star, grid[j], g_star))
    return out


def _edge_pattern_ok(crossings, needed) -> bool:
    """Edges must alternate as bottom/top pairs: +1,-1,-1,+1,+1,-1,..."""
    if len(crossings) < needed:
        return False
    ordered = sorted(crossings)
    for j, (_, target, _) in enumerate(ordered):
        expected = 1.0 if j % 4 in (0, 3) else -1.0
        if target != expected:
            return False
    return True


def _tangential_edges(vhat, grid, mu, dmu, cell_width, steps):
    """Classify near-tangential extrema of mu.

    Returns (doubles, extra_crossings, blocked): closed-gap locations, the
    recovered crossings of sub-cell gaps as (ehat, target, cell) tuples, and
    the (target, cell) keys whose scan-pass results they supersede.
    """
    doubles: list[float] = []
    extra: list[tuple[float, float, int]] = []
    blocked: set[tuple[float, int]] = set()
    sign_change = np.sign(dmu[:-1]) * np.sign(dmu[1:]) < 0
    ext_cells = np.nonzero(sign_change)[0]
    ext_cells = ext_cells[np.abs(np.abs(mu[ext_cells]) - 1.0) < 0.05]
    if not ext_cells.size:
        return doubles, extra, blocked
    ext = _refine_extrema(vhat, grid[ext_cells], grid[ext_cells + 1],
                          dmu[ext_cells], steps, n_bisect=14)
    mu_ext, _ = _mu_batch(vhat, ext, steps_per_unit=steps)
    brackets: list[tuple[float, float, float, float, int]] = []
    for cell, e_star, m_star in zip(ext_cells, ext, mu_ext):
        target = 1.0 if m_star > 0 else -1.0
        excess = abs(m_star) - 1.0
        if abs(excess) <= _GAP_CLOSED_TOL:
            doubles.append(float(e_star))
        elif excess > 0:
            # gap is open; recover both crossings only if they can hide
            # inside the blocked cells (otherwise the scan pass saw them)
            curv = abs(dmu[cell + 1] - dmu[cell]) / cell_width
            half_width = math.sqrt(2.0 * excess / max(curv, 1e-300))
            if half_width > 1.5 * cell_width:
                continue
            for lo_pt, hi_pt, g_lo in _subcell_brackets(
                    grid, mu, cell, e_star, m_star, target):
                brackets.append((lo_pt, hi_pt, g_lo, target, int(cell)))
        else:
            continue  # extremum strictly inside a band
        for c in range(cell - 1, cell + 2):
            blocked.add((target, c))
    if brackets:
        roots = _refine_crossings(
            vhat,
            np.array([b[0] for b in brackets]),
            np.array([b[1] for b in brackets]),
            np.array([b[2] for b in brackets]),
            np.array([b[3] for b in brackets]),
            steps)
        extra.extend((float(r), b[3], b[4]) for r, b in zip(roots, brackets))
    return doubles, extra, blocked


def _scan_window(prob: MathieuProblem, n_max: int) -> tuple[float, float]:
    lam = prob.lambda0
    # cover band n_max+1 bottom for both the free-like and deep (harmonic
    # ladder) regimes, with margin
    e_max = 0.5 * lam + max((n_max + 1.0) ** 2, 2.0 * (n_max + 1.0) * math.sqrt(max(lam, 1.0))) + 2.0
    ehat_lo = -prob.vhat - 1.0
    ehat_hi = float(prob.energy_to_floquet(e_max))
    return ehat_lo, ehat_hi


def band_edges(prob: MathieuProblem, n_max: int, *,
               scan_points: int = DEFAULT_SCAN_POINTS) -> list[BandStructure]:
    """Locate the first n_max bands by scanning the discriminant.

    Transversal crossings of mu = +-1 are bracketed and refined.  Extrema of
    mu close to +-1 are refined separately: an extremum on the line (to
    1e-8) is a closed gap and counts as a double edge (free lattice), while
    an extremum just beyond the line marks a gap narrower than one scan
    cell, whose two crossings are recovered by local bisection.  Raises
    SearchError when the window does not contain enough edges.
    """
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    ehat_lo, ehat_hi = _scan_window(prob, n_max)
    grid = np.linspace(ehat_lo, ehat_hi, scan_points)
    steps = _steps_per_unit(prob.vhat, max(abs(ehat_lo), abs(ehat_hi)))
    mu, dmu = _mu_batch(prob.vhat, grid, steps_per_unit=steps)
    cell_width = grid[1] - grid[0]
    needed = 2 * n_max + 1  # n_max full bands plus the next bottom for the gap

    # cheap pass: transversal sign changes of mu -+ 1
    crossings = []  # (ehat, target, cell)
    for target in (1.0, -1.0):
        g = mu - target
        change = np.sign(g[:-1]) * np.sign(g[1:]) < 0
        cells = np.nonzero(change)[0]
        if cells.size:
            roots = _refine_crossings(prob.vhat, grid[cells], grid[cells + 1],
                                      g[cells], target, steps)
            crossings.extend(
                (float(r), target, int(c)) for r, c in zip(roots, cells))

    if not _edge_pattern_ok(crossings, needed):
        # some gap closed or narrower than a scan cell: classify the
        # near-tangential extrema of mu and patch the edge list
        doubles, extra, blocked = _tangential_edges(prob.vhat, grid, mu, dmu,
                                                    cell_width, steps)
        crossings = [c for c in crossings if (c[1], c[2]) not in blocked]
        crossings.extend(extra)
    else:
        doubles = []

    flat = sorted([e for e, _, _ in crossings] + [e for d in doubles for e in (d, d)])
    if len(flat) < 2 * n_max:
        raise SearchError(
            f"found {len(flat)} band edges in ehat window "
            f"[{ehat_lo:.3f}, {ehat_hi:.3f}] but need {needed}; "
            f"increase scan_points or the window")

    bands = []
    for n in range(1, n_max + 1):
        e_b = float(prob.floquet_to_energy(flat[2 * n - 2]))
        e_t = float(prob.floquet_to_energy(flat[2 * n - 1]))
        gap = math.nan
        if len(flat) > 2 * n:
            gap = float(prob.floquet_to_energy(flat[2 * n])) - e_t
        bands.append(BandStructure(n=n, E_bottom=e_b, E_top=e_t, gap_above=gap))
    return bands


# ---------------------------------------------------------------------------
# band functions
# ---------------------------------------------------------------------------

def _band_energies_hat(prob: MathieuProblem, band: BandStructure,
                       khat: np.ndarray) -> np.ndarray:
    """Invert mu(ehat) = cos(k b) inside one band (mu is monotone there)."""
    e_lo = float(prob.energy_to_floquet(band.E_bottom))
    e_hi = float(prob.energy_to_floquet(band.E_top))
    targets = np.cos(khat)
    steps = _steps_per_unit(prob.vhat, max(abs(e_lo), abs(e_hi)))

    interior = (khat > 0.0) & (khat < math.pi)
    out = np.empty_like(khat)
    # odd bands run from mu=+1 at the bottom to mu=-1 at the top
    bottom_is_plus_one = band.n % 2 == 1
    out[khat <= 0.0] = e_lo if bottom_is_plus_one else e_hi
    out[khat >= math.pi] = e_hi if bottom_is_plus_one else e_lo
    if np.any(interior):
        lo = np.full(interior.sum(), e_lo)
        hi = np.full(interior.sum(), e_hi)
        g_lo = np.full(interior.sum(), 1.0 if bottom_is_plus_one else -1.0)
        t = targets[interior]
        g_lo = g_lo - t
        out[interior] = _refine_crossings(prob.vhat, lo, hi, g_lo, t, steps)
    return out


def band_function(prob: MathieuProblem, n: int, k_samples: int = DEFAULT_K_SAMPLES,
                  edges: list[BandStructure] | None = None) -> BandStructure:
    """Sample E_n(k) on a uniform k*b grid over [0, pi]."""
    if edges is None:
        edges = band_edges(prob, n)
    band = edges[n - 1]
    khat = np.linspace(0.0, math.pi, k_samples)
    ehat = _band_energies_hat(prob, band, khat)
    return BandStructure(
        n=band.n,
        E_bottom=band.E_bottom,
        E_top=band.E_top,
        gap_above=band.gap_above,
        kb=khat,
        energies=np.asarray(prob.floquet_to_energy(ehat), dtype=float),
    )


# ---------------------------------------------------------------------------
# Wannier function
# ---------------------------------------------------------------------------

def wannier_first_band(prob: MathieuProblem, *,
                       x_halfwidth: float = DEFAULT_GRID_HALFWIDTH,
                       n_points: int = DEFAULT_GRID_POINTS,
                       k_samples: int = DEFAULT_K_SAMPLES,
                       edges: list[BandStructure] | None = None) -> GridFunction:
    """First-band Wannier function on a symmetric grid, in period units.

    Evaluates the quasimomentum-domain quadrature

        w(x) ~ int_0^pi sqrt(psi2(b)) psi1(x) / sqrt(-dmu/dE) dk

    band-sampled by composite Simpson (smooth integrand; the endpoint where
    psi2(b) vanishes enters with weight zero), then normalizes to unit L2
    norm and fixes the sign so w(0) > 0.
    """
    if n_points % 2 == 0:
        raise ValueError("n_points must be odd (symmetric grid through 0)")
    if k_samples % 2 == 0 or k_samples < 3:
        raise ValueError("k_samples must be odd and >= 3 for Simpson weights")

    if edges is None:
        edges = band_edges(prob, 1)
    khat = np.linspace(0.0, math.pi, k_samples)
    ehat = _band_energies_hat(prob, edges[0], khat)
    steps = _steps_per_unit(prob.vhat, float(np.max(np.abs(ehat))))

    end_state, _ = _propagate(prob.vhat, ehat, 1.0, steps_per_unit=steps)
    psi2_b = end_state[2]
    dmu = end_state[4]
    interior = slice(1, -1)
    if np.any(psi2_b[interior] <= 0.0):
        raise ValueError("psi2(b) must be positive inside the first band")
    if np.any(dmu[interior] >= 0.0):
        raise ValueError("dmu/dE must be negative inside the first band")
    weight = np.sqrt(np.clip(psi2_b, 0.0, None) / np.abs(dmu))

    n_half = (n_points + 1) // 2
    xs = np.linspace(0.0, x_halfwidth, n_half)
    _, rec = _propagate(prob.vhat, ehat, x_halfwidth, record_x=xs,
                        record_rows=(0,), steps_per_unit=steps)
    psi1_x = rec[:, 0, :]  # (n_half, k_samples)

    half = simpson(psi1_x * weight[None, :], x=khat, axis=1) / (math.sqrt(2.0) * math.pi)
    values = np.concatenate([half[:0:-1], half])
    dx = x_halfwidth / (n_half - 1)
    fn = GridFunction(x0=-x_halfwidth, dx=dx, values=values).normalized()
    if fn.values[n_half - 1] < 0:
        fn = GridFunction(fn.x0, fn.dx, -fn.values)
    return fn
