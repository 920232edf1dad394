"""Experiment runner: config-file driven, deterministic CSV artifacts.

Config files are flat `key = value` text with dotted section names and `#`
comments, one experiment per file::

    experiment = bands
    lattice.depth = 10.0
    output_dir = out/bands

Exit codes: 0 ok, 2 config error, 3 numeric divergence, 4 analysis error.
"""

from __future__ import annotations

import argparse
import math
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, dnls, mathieu_bands as mb, observables as obs
from . import continuum as ct
from . import semiclassical as sc
from . import units
from .errors import AnalysisError, ConfigError, DivergenceError
from .states import builtin_initial_state

_FMT = "%.17g"

EXPERIMENTS = (
    "bands",
    "wannier-overlap",
    "breathing",
    "symmetric",
    "asymmetric",
    "eta-sweep",
    "oracle-compare",
)


# ---------------------------------------------------------------------------
# config handling
# ---------------------------------------------------------------------------

_INT_RE = re.compile(r"[-+]?\d+")


def _parse_value(raw: str):
    raw = raw.strip()
    low = raw.lower()
    if low in ("true", "false"):
        return low == "true"
    if _INT_RE.fullmatch(raw):
        return int(raw)
    try:
        return float(raw)
    except ValueError:
        return raw


def parse_config(path) -> dict:
    """Flat key=value file with dotted keys; '#' starts a comment."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, raw = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError(f"{path}:{lineno}: empty key")
        if key in values:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        values[key] = _parse_value(raw)
    if not values:
        raise ConfigError(f"config {path} is empty")
    if "experiment" not in values:
        raise ConfigError("config is missing the 'experiment' field")
    if values["experiment"] not in EXPERIMENTS:
        raise ConfigError(
            f"unknown experiment {values['experiment']!r}; choose from {', '.join(EXPERIMENTS)}")
    return values


class _Config:
    """Typed access with defaults; tracks effective values and unknown keys."""

    def __init__(self, values: dict):
        self.values = dict(values)
        self.used: dict = {}
        self.used["experiment"] = values["experiment"]

    def get(self, key: str, default, kind=None):
        val = self.values.get(key, default)
        if kind is float and isinstance(val, (int, bool)):
            val = float(val)
        if kind is int:
            if not isinstance(val, int) or isinstance(val, bool):
                raise ConfigError(f"field {key!r} must be an integer, got {val!r}")
        elif kind is float and not isinstance(val, float):
            raise ConfigError(f"field {key!r} must be a number, got {val!r}")
        elif kind is str and not isinstance(val, str):
            raise ConfigError(f"field {key!r} must be a string, got {val!r}")
        self.used[key] = val
        return val

    def positive(self, key: str, default, kind=float):
        val = self.get(key, default, kind)
        if not (val > 0):
            raise ConfigError(f"field {key!r} must be positive, got {val!r}")
        return val

    def check_no_unknown(self, extra_allowed=()):
        allowed = set(self.used) | {"experiment", "output_dir"} | set(extra_allowed)
        unknown = [k for k in self.values if k not in allowed]
        if unknown:
            raise ConfigError(f"unknown config field(s): {', '.join(sorted(unknown))}")


# ---------------------------------------------------------------------------
# run summary
# ---------------------------------------------------------------------------

@dataclass
class RunSummary:
    experiment: str
    params: dict
    headline: dict
    artifacts: list = field(default_factory=list)
    version: str = __version__

    def to_kv(self) -> str:
        lines = [f"experiment={self.experiment}", f"version={self.version}"]
        for key in sorted(self.params):
            lines.append(f"param.{key}={_kv_value(self.params[key])}")
        for key in sorted(self.headline):
            lines.append(f"result.{key}={_kv_value(self.headline[key])}")
        for name in sorted(self.artifacts):
            lines.append(f"artifact={name}")
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        width = max((len(k) for k in list(self.params) + list(self.headline)), default=10)
        out = [f"experiment: {self.experiment} (blochsim {self.version})", "", "parameters:"]
        for key in sorted(self.params):
            out.append(f"  {key:<{width}}  {_kv_value(self.params[key])}")
        out.append("")
        out.append("results:")
        for key in sorted(self.headline):
            out.append(f"  {key:<{width}}  {_kv_value(self.headline[key])}")
        if self.artifacts:
            out.append("")
            out.append("artifacts: " + ", ".join(sorted(self.artifacts)))
        return "\n".join(out) + "\n"


def _kv_value(val) -> str:
    if isinstance(val, bool):
        return "true" if val else "false"
    if isinstance(val, float):
        return _FMT % val
    return str(val)


def _write_rows(path: Path, header: str, rows) -> None:
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(_FMT % v for v in row) + "\n")


def _write_state_csv(path: Path, amplitudes: np.ndarray) -> None:
    rows = [(ell, amp.real, amp.imag)
            for ell, amp in enumerate(amplitudes, start=1)]
    _write_rows(path, "ell,re,im", rows)


def _write_psi_csv(path: Path, x: np.ndarray, psi: np.ndarray) -> None:
    rows = zip(x, psi.real, psi.imag, np.abs(psi) ** 2)
    _write_rows(path, "x,re,im,abs2", rows)


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------

def _dnls_setup(cfg: _Config):
    """DnlsParams from direct (eta, delta) fields or physical inputs."""
    scales: dict = {}
    n_sites = cfg.positive("dnls.n_sites", 40, int)
    if "physical.depth" in cfg.values or "physical.mass_au" in cfg.values:
        mass_au = cfg.positive("physical.mass_au", units.SR88_MASS_AU)
        lambda_nm = cfg.positive("physical.lambda_nm", units.LAMBDA_L_SR * 1e9)
        g = cfg.positive("physical.g", units.G_EARTH)
        depth = cfg.positive("physical.depth", 10.0)
        atoms = cfg.positive("physical.atoms", 1e6)
        a_s_a0 = cfg.get("physical.scattering_length_a0", 13.0, float)
        d_perp_um = cfg.positive("physical.transverse_length_um", 180.0)
        m = mass_au * units.ATOMIC_MASS_KG
        gamma = units.gamma_1d(atoms, a_s_a0 * units.BOHR_RADIUS, d_perp_um * 1e-6, m)
        phys = units.PhysicalParams(m=m, g=g, lambda_L=lambda_nm * 1e-9,
                                    Lambda0=depth, gamma=gamma)
        der = units.DerivedScales.from_physical(phys)
        beta_over_er = cfg.values.get("physical.beta_over_ER")
        if beta_over_er is None:
            band1 = mb.band_edges(mb.MathieuProblem.from_depth(depth), 1)[0]
            beta_over_er = band1.width / 4.0
        cfg.used["physical.beta_over_ER"] = beta_over_er
        beta = beta_over_er * der.E_R
        l4 = sc.l4_norm_pow4(sc.semiclassical_ground(depth, phys.b))
        dim = units.dimensionless_params(phys, beta, l4, n_sites)
        eta = cfg.get("dnls.eta", dim.eta, float)
        delta = cfg.get("dnls.delta", dim.delta, float)
        scales = {
            "derived.E_R_over_hbar": der.E_R / phys.hbar,
            "derived.T_bloch_s": der.T_bloch,
            "derived.beta_over_ER": beta_over_er,
            "derived.eta": dim.eta,
            "derived.delta": dim.delta,
            "derived.F": dim.F,
            "derived.gamma_J_m": gamma,
        }
    else:
        eta = cfg.get("dnls.eta", 0.0, float)
        delta = cfg.get("dnls.delta", 1.103, float)
    return dnls.DnlsParams(N=n_sites, eta=eta, delta=delta), scales


def _run_trajectory_experiment(cfg: _Config, outdir: Path, state_name: str):
    params, scales = _dnls_setup(cfg)
    dtau = cfg.positive("numerics.dtau", 1e-3)
    n_periods = cfg.positive("numerics.n_bloch_periods", 16.0)
    sample_every = cfg.positive("numerics.sample_every", 10, int)
    n_osc = cfg.positive("analysis.n_osc", 14, int)
    window = cfg.positive("analysis.window", 5, int)
    cfg.check_no_unknown()

    state0 = builtin_initial_state(state_name)
    if state0.N != params.N:
        raise ConfigError(f"built-in states require dnls.n_sites = {state0.N}")
    traj, final = dnls.evolve(state0, params, n_periods * params.tau_bloch,
                              dtau=dtau, sample_every=sample_every)

    traj.to_csv(outdir / "trajectory.csv")
    _write_state_csv(outdir / "state_initial.csv", state0.amplitudes)
    _write_state_csv(outdir / "state_final.csv", final.amplitudes)

    headline = {
        "com_initial_b": traj.com[0],
        "com_range_b": float(traj.com.max() - traj.com.min()),
        "max_com_deviation_b": float(np.max(np.abs(traj.com - traj.com[0]))),
        "norm_drift": float(np.max(np.abs(traj.norms - 1.0))),
        "energy_drift_rel": float(np.max(np.abs(traj.energies - traj.energies[0]))
                                  / max(abs(traj.energies[0]), 1e-300)),
        "tau_bloch": params.tau_bloch,
    }
    if state_name != "single-site":
        est = obs.pseudo_period_stats(traj, n_osc, params.tau_bloch, window=window)
        headline.update(
            mean_period=est.mean_period,
            mean_period_over_tauB=est.mean_period / params.tau_bloch,
            rel_dev=est.rel_dev,
            n_maxima=int(est.extrema_taus.size),
        )
        _write_rows(outdir / "maxima.csv", "tau_max", [(t,) for t in est.extrema_taus])
        artifacts = ["trajectory.csv", "state_initial.csv", "state_final.csv", "maxima.csv"]
    else:
        artifacts = ["trajectory.csv", "state_initial.csv", "state_final.csv"]
    cfg.used.update(scales)
    return headline, artifacts


def _experiment_bands(cfg: _Config, outdir: Path):
    depth = cfg.positive("lattice.depth", 10.0)
    n_bands = cfg.positive("lattice.n_bands", 3, int)
    k_samples = cfg.positive("numerics.k_samples", mb.DEFAULT_K_SAMPLES, int)
    scan_points = cfg.positive("numerics.scan_points", mb.DEFAULT_SCAN_POINTS, int)
    cfg.check_no_unknown()

    prob = mb.MathieuProblem.from_depth(depth)
    edges = mb.band_edges(prob, n_bands, scan_points=scan_points)
    _write_rows(outdir / "band_edges.csv",
                "n,E_bottom_over_ER,E_top_over_ER,width_over_ER,gap_above_over_ER",
                [(b.n, b.E_bottom, b.E_top, b.width, b.gap_above) for b in edges])
    rows = []
    for band in edges:
        bf = mb.band_function(prob, band.n, k_samples, edges=edges)
        rows.extend((band.n, kb, e) for kb, e in zip(bf.kb, bf.energies))
    _write_rows(outdir / "bands.csv", "n,k_times_b,E_over_ER", rows)

    headline = {}
    for band in edges:
        headline[f"E{band.n}_bottom_over_ER"] = band.E_bottom
        headline[f"E{band.n}_top_over_ER"] = band.E_top
    headline["B1_over_ER"] = edges[0].width
    headline["g1_over_ER"] = edges[0].gap_above
    return RunSummary("bands", cfg.used, headline,
                      ["band_edges.csv", "bands.csv"])


def _experiment_wannier(cfg: _Config, outdir: Path):
    depth = cfg.positive("lattice.depth", 10.0)
    k_samples = cfg.positive("numerics.k_samples", mb.DEFAULT_K_SAMPLES, int)
    halfwidth = cfg.positive("grid.halfwidth_b", mb.DEFAULT_GRID_HALFWIDTH)
    n_points = cfg.positive("grid.points", mb.DEFAULT_GRID_POINTS, int)
    cfg.check_no_unknown()

    prob = mb.MathieuProblem.from_depth(depth)
    wann = mb.wannier_first_band(prob, x_halfwidth=halfwidth, n_points=n_points,
                                 k_samples=k_samples)
    gauss = sc.semiclassical_ground(depth)
    gf = gauss.on_grid(wann.x0, wann.dx, wann.n)
    wann.to_csv(outdir / "wannier.csv")
    gf.to_csv(outdir / "semiclassical.csv")
    headline = {
        "overlap_dist_sq": sc.overlap_distance(wann, gf),
        "l4_scale_b": sc.l4_norm_pow4(gauss),
        "l4_gaussian_quartic_b": gauss.quartic_integral_closed_form(),
        "l4_wannier_quartic_b": float(np.trapezoid(wann.values**4, dx=wann.dx)),
        "wannier_peak": float(wann.values.max()),
    }
    return RunSummary("wannier-overlap", cfg.used, headline,
                      ["wannier.csv", "semiclassical.csv"])


def _experiment_trajectory(cfg: _Config, outdir: Path, name: str):
    state_name = {"breathing": "single-site", "symmetric": "table1",
                  "asymmetric": "table2"}[name]
    if name == "breathing":
        cfg.values.setdefault("dnls.eta", 0.2)
        cfg.values.setdefault("numerics.n_bloch_periods", 14.0)
    headline, artifacts = _run_trajectory_experiment(cfg, outdir, state_name)
    return RunSummary(name, cfg.used, headline, artifacts)


def _experiment_eta_sweep(cfg: _Config, outdir: Path, jobs: int):
    params, scales = _dnls_setup(cfg)
    state_name = cfg.get("sweep.initial_state", "table1", str)
    eta_min = cfg.get("sweep.eta_min", -0.1, float)
    eta_max = cfg.get("sweep.eta_max", 0.2, float)
    points = cfg.positive("sweep.points", 31, int)
    dtau = cfg.positive("numerics.dtau", 1e-3)
    n_periods = cfg.positive("numerics.n_bloch_periods", 16.0)
    sample_every = cfg.positive("numerics.sample_every", 10, int)
    n_osc = cfg.positive("analysis.n_osc", 14, int)
    window = cfg.positive("analysis.window", 5, int)
    cfg.check_no_unknown()

    state0 = builtin_initial_state(state_name)
    if state0.N != params.N:
        raise ConfigError(f"built-in states require dnls.n_sites = {state0.N}")
    etas = np.linspace(eta_min, eta_max, points)
    results = obs.eta_sweep(params, state0, etas, n_osc=n_osc,
                            n_bloch_periods=n_periods, dtau=dtau,
                            sample_every=sample_every, window=window, jobs=jobs)
    rows = []
    failures = 0
    for eta, res in results:
        if isinstance(res, obs.PeriodEstimate):
            rows.append((eta, res.mean_period / params.tau_bloch, res.rel_dev,
                         res.extrema_taus.size))
        else:
            failures += 1
    _write_rows(outdir / "sweep.csv",
                "eta,mean_period_over_tauB,rel_dev,n_extrema", rows)
    headline = {
        "period_spread_rel": obs.period_spread(results, params.tau_bloch),
        "max_rel_dev": max(r.rel_dev for _, r in results
                           if isinstance(r, obs.PeriodEstimate)),
        "n_failures": failures,
        "tau_bloch": params.tau_bloch,
    }
    cfg.used.update(scales)
    return RunSummary("eta-sweep", cfg.used, headline, ["sweep.csv"])


def _experiment_oracle(cfg: _Config, outdir: Path):
    depth = cfg.positive("oracle.depth", 10.0)
    n_wells = cfg.positive("oracle.n_wells", 7, int)
    n_grid = cfg.positive("oracle.n_grid", 4096, int)
    dt = cfg.positive("oracle.dt", 1e-3)
    eta = cfg.get("oracle.eta", 0.1, float)
    delta = cfg.get("oracle.delta", 1.0, float)
    n_periods = cfg.positive("oracle.n_bloch_periods", 1.0)
    n_samples = cfg.positive("oracle.samples", 32, int)
    width = cfg.positive("oracle.state_width_sites", 1.0)
    cfg.check_no_unknown()

    base = ct.ContinuumConfig.for_depth(depth, N_wells=n_wells, n_grid=n_grid, dt=dt)
    wann = ct.wannier_orbital(base)
    red = ct.reduction_params(base, wann)
    run_cfg = ct.ContinuumConfig.for_depth(
        depth, N_wells=n_wells, n_grid=n_grid, dt=dt,
        F=delta / red.delta_per_F, zeta=eta / red.eta_per_zeta)
    basis = ct.site_basis(run_cfg, wann)

    sites = np.arange(1, n_wells + 1)
    c0 = np.exp(-(sites - 0.5 * (n_wells + 1)) ** 2 / (2.0 * width**2))
    c0 = c0 / np.linalg.norm(c0)
    psi0 = ct.state_from_coefficients(run_cfg, basis, c0)
    c_init, _ = ct.project_onto_sites(psi0, basis, run_cfg.dx)

    p = red.dnls_params(run_cfg, n_wells)
    tau_end = n_periods * 2.0 * math.pi / abs(delta)
    n_steps = max(n_samples, int(round(tau_end / 1e-3)))
    sample_every = max(1, n_steps // n_samples)
    traj, _ = dnls.evolve(dnls.DnlsState(c_init), p, tau_end, dtau=1e-3,
                          sample_every=sample_every, record_amplitudes=True)
    taus, err, rem = ct.compare_with_dnls(run_cfg, traj, basis, red)

    _write_rows(outdir / "comparison.csv", "tau,max_coeff_error,remainder_norm",
                zip(taus, err, rem))
    _write_psi_csv(outdir / "psi_initial.csv", run_cfg.x, psi0.psi)
    headline = {
        "max_coeff_error": float(err.max()),
        "max_remainder": float(rem.max()),
        "beta_scaled": red.beta,
        "eta": p.eta,
        "delta": p.delta,
        "F": run_cfg.F,
        "zeta": run_cfg.zeta,
    }
    return RunSummary("oracle-compare", cfg.used, headline,
                      ["comparison.csv", "psi_initial.csv"])


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------

def run(config_path, output_dir=None, jobs: int = 1) -> RunSummary:
    """Execute the configured experiment; returns the summary after writing
    all artifacts plus summary.txt / summary.kv into the output directory."""
    values = parse_config(config_path)
    cfg = _Config(values)
    outdir = Path(output_dir) if output_dir is not None else None
    if outdir is None:
        configured = values.get("output_dir")
        if not isinstance(configured, str) or not configured:
            raise ConfigError("output_dir missing (set it in the config or pass --output)")
        outdir = Path(configured)
    cfg.used["output_dir"] = str(outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    name = values["experiment"]
    if name == "bands":
        summary = _experiment_bands(cfg, outdir)
    elif name == "wannier-overlap":
        summary = _experiment_wannier(cfg, outdir)
    elif name in ("breathing", "symmetric", "asymmetric"):
        summary = _experiment_trajectory(cfg, outdir, name)
    elif name == "eta-sweep":
        summary = _experiment_eta_sweep(cfg, outdir, jobs)
    else:
        summary = _experiment_oracle(cfg, outdir)

    (outdir / "summary.txt").write_text(summary.to_text())
    (outdir / "summary.kv").write_text(summary.to_kv())
    summary.artifacts.extend(["summary.txt", "summary.kv"])
    return summary


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="blochsim",
        description="Run a lattice Bloch-oscillation experiment from a config file.")
    parser.add_argument("config", help="path to a key=value config file")
    parser.add_argument("--output", help="output directory (overrides output_dir)")
    parser.add_argument("--jobs", type=int, default=1,
                        help="worker processes for sweep experiments")
    args = parser.parse_args(argv)
    try:
        summary = run(args.config, output_dir=args.output, jobs=args.jobs)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DivergenceError as exc:
        print(f"numeric divergence: {exc}", file=sys.stderr)
        return 3
    except AnalysisError as exc:
        print(f"analysis error: {exc}", file=sys.stderr)
        return 4
    sys.stdout.write(summary.to_text())
    return 0


if __name__ == "__main__":
    sys.exit(main())
