import math

import numpy as np
import pytest

from blochsim import cli, observables as obs
from blochsim.errors import ConfigError
from blochsim.states import (N_SITES, TABLE1_SYMMETRIC, TABLE2_ASYMMETRIC,
                             builtin_initial_state)


def write_cfg(tmp_path, name, body):
    path = tmp_path / name
    path.write_text(body)
    return path


# ---------------------------------------------------------------------------
# built-in states
# ---------------------------------------------------------------------------

def test_table_values_before_renormalization():
    assert TABLE1_SYMMETRIC[0] == 0.0
    assert TABLE1_SYMMETRIC[20] == pytest.approx(0.460)
    assert TABLE1_SYMMETRIC[19] == TABLE1_SYMMETRIC[21] == pytest.approx(0.429)
    assert TABLE2_ASYMMETRIC[17] == pytest.approx(0.496)
    assert TABLE1_SYMMETRIC.size == TABLE2_ASYMMETRIC.size == N_SITES + 1


def test_table1_is_symmetric_about_site_20():
    c = TABLE1_SYMMETRIC[1:]
    for offset in range(1, 14):
        assert c[19 - offset] == c[19 + offset]


def test_builtin_states_are_normalized():
    for name in ("table1", "table2", "single-site"):
        state = builtin_initial_state(name)
        assert state.N == 40
        assert state.norm_sq() == pytest.approx(1.0, rel=1e-12)


def test_single_site_sits_on_site_20():
    state = builtin_initial_state("single-site")
    assert abs(state.amplitudes[19]) == 1.0
    assert obs.center_of_mass(state) == pytest.approx(-0.5)


def test_custom_state_validation():
    with pytest.raises(ValueError):
        builtin_initial_state("custom", custom=np.ones(17))
    bad = np.zeros(41)
    bad[0] = 0.3
    with pytest.raises(ValueError):
        builtin_initial_state("custom", custom=bad)
    ok = np.zeros(41)
    ok[5] = 1.0
    assert builtin_initial_state("custom", custom=ok).norm_sq() == pytest.approx(1.0)
    with pytest.raises(ValueError):
        builtin_initial_state("no-such-state")


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------

def test_parse_config(tmp_path):
    path = write_cfg(tmp_path, "ok.cfg", """
        # comment
        experiment = bands
        lattice.depth = 10.0   # inline comment
        lattice.n_bands = 2
        output_dir = out
    """)
    values = cli.parse_config(path)
    assert values["experiment"] == "bands"
    assert values["lattice.depth"] == 10.0
    assert values["lattice.n_bands"] == 2
    assert values["output_dir"] == "out"


def test_parse_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        cli.parse_config(write_cfg(tmp_path, "empty.cfg", "\n# nothing\n"))
    with pytest.raises(ConfigError):
        cli.parse_config(write_cfg(tmp_path, "noexp.cfg", "lattice.depth = 3\n"))
    with pytest.raises(ConfigError):
        cli.parse_config(write_cfg(tmp_path, "badexp.cfg", "experiment = warp\n"))
    with pytest.raises(ConfigError):
        cli.parse_config(write_cfg(tmp_path, "dup.cfg",
                                   "experiment = bands\nexperiment = bands\n"))
    with pytest.raises(ConfigError):
        cli.parse_config(write_cfg(tmp_path, "noeq.cfg", "experiment bands\n"))
    with pytest.raises(ConfigError):
        cli.parse_config(tmp_path / "missing.cfg")


def test_unknown_field_is_rejected(tmp_path):
    cfg = write_cfg(tmp_path, "unknown.cfg", """
        experiment = bands
        lattice.depth = 3.0
        lattice.depht = 3.0
    """)
    with pytest.raises(ConfigError, match="lattice.depht"):
        cli.run(cfg, output_dir=tmp_path / "out")


# ---------------------------------------------------------------------------
# experiments through the CLI
# ---------------------------------------------------------------------------

def test_bands_experiment_and_exit_code(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "bands.cfg", """
        experiment = bands
        lattice.depth = 10.0
        lattice.n_bands = 1
        numerics.k_samples = 9
        numerics.scan_points = 800
    """)
    code = cli.main([str(cfg), "--output", str(tmp_path / "out")])
    assert code == 0
    out = capsys.readouterr().out
    assert "E1_bottom_over_ER" in out
    kv = (tmp_path / "out" / "summary.kv").read_text()
    e1b = float(next(l.split("=")[1] for l in kv.splitlines()
                     if l.startswith("result.E1_bottom_over_ER")))
    assert e1b == pytest.approx(4.32, abs=0.01)
    edges = (tmp_path / "out" / "band_edges.csv").read_text().splitlines()
    assert edges[0] == "n,E_bottom_over_ER,E_top_over_ER,width_over_ER,gap_above_over_ER"
    assert len(edges) == 2


def test_byte_identical_reruns(tmp_path):
    body = """
        experiment = bands
        lattice.depth = 10.0
        lattice.n_bands = 1
        numerics.k_samples = 9
        numerics.scan_points = 800
    """
    cfg = write_cfg(tmp_path, "det.cfg", body)
    s1 = cli.run(cfg, output_dir=tmp_path / "a")
    s2 = cli.run(cfg, output_dir=tmp_path / "b")
    for name in s1.artifacts:
        if name.startswith("summary"):
            continue  # echoes the differing output_dir paths
        a = (tmp_path / "a" / name).read_bytes()
        b = (tmp_path / "b" / name).read_bytes()
        assert a == b, f"artifact {name} differs between reruns"
    assert s1.headline == s2.headline


def test_breathing_experiment(tmp_path):
    cfg = write_cfg(tmp_path, "breath.cfg", """
        experiment = breathing
        dnls.delta = 1.103
        numerics.n_bloch_periods = 2
    """)
    summary = cli.run(cfg, output_dir=tmp_path / "out")
    assert summary.params["dnls.eta"] == pytest.approx(0.2)
    assert summary.headline["norm_drift"] < 1e-9
    assert (tmp_path / "out" / "trajectory.csv").exists()
    assert (tmp_path / "out" / "state_final.csv").exists()


def test_symmetric_experiment_with_physical_inputs(tmp_path):
    cfg = write_cfg(tmp_path, "phys.cfg", """
        experiment = symmetric
        physical.depth = 10.0
        physical.atoms = 1e6
        physical.scattering_length_a0 = 13
        numerics.n_bloch_periods = 16
    """)
    summary = cli.run(cfg, output_dir=tmp_path / "out")
    assert summary.params["derived.delta"] == pytest.approx(1.103, abs=0.01)
    assert summary.params["derived.eta"] == pytest.approx(0.197, rel=0.05)
    assert summary.params["derived.T_bloch_s"] == pytest.approx(1.740e-3, abs=2e-6)
    assert summary.headline["rel_dev"] < 1e-3
    assert summary.headline["com_range_b"] < 3.96


def test_eta_sweep_experiment_and_jobs_determinism(tmp_path):
    body = """
        experiment = eta-sweep
        dnls.delta = 1.103
        sweep.initial_state = table1
        sweep.eta_min = 0.0
        sweep.eta_max = 0.2
        sweep.points = 2
        numerics.n_bloch_periods = 16
    """
    cfg = write_cfg(tmp_path, "sweep.cfg", body)
    s1 = cli.run(cfg, output_dir=tmp_path / "seq", jobs=1)
    s2 = cli.run(cfg, output_dir=tmp_path / "par", jobs=2)
    assert (tmp_path / "seq" / "sweep.csv").read_bytes() == \
        (tmp_path / "par" / "sweep.csv").read_bytes()
    assert s1.headline["period_spread_rel"] == s2.headline["period_spread_rel"]
    assert s1.headline["n_failures"] == 0


def test_oracle_compare_experiment(tmp_path):
    cfg = write_cfg(tmp_path, "oracle.cfg", """
        experiment = oracle-compare
        oracle.depth = 6.0
        oracle.n_wells = 3
        oracle.n_grid = 512
        oracle.dt = 1e-3
        oracle.eta = 0.05
        oracle.delta = 1.0
        oracle.n_bloch_periods = 0.25
        oracle.samples = 8
    """)
    summary = cli.run(cfg, output_dir=tmp_path / "out")
    assert summary.headline["max_remainder"] < 0.2
    assert summary.headline["max_coeff_error"] < 0.2
    lines = (tmp_path / "out" / "comparison.csv").read_text().splitlines()
    assert lines[0] == "tau,max_coeff_error,remainder_norm"


def test_exit_code_2_on_config_error(tmp_path, capsys):
    bad = write_cfg(tmp_path, "bad.cfg", "")
    assert cli.main([str(bad)]) == 2
    assert "config error" in capsys.readouterr().err
    assert not (tmp_path / "out").exists()


def test_exit_code_3_on_divergence(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "div.cfg", """
        experiment = symmetric
        dnls.delta = 50.0
        numerics.dtau = 0.01
        numerics.n_bloch_periods = 40
    """)
    assert cli.main([str(cfg), "--output", str(tmp_path / "out")]) == 3
    assert "divergence" in capsys.readouterr().err


def test_exit_code_4_on_analysis_error(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "short.cfg", """
        experiment = symmetric
        dnls.delta = 1.103
        numerics.n_bloch_periods = 2
    """)
    assert cli.main([str(cfg), "--output", str(tmp_path / "out")]) == 4
    assert "analysis" in capsys.readouterr().err


def test_wannier_overlap_experiment(tmp_path):
    cfg = write_cfg(tmp_path, "wann.cfg", """
        experiment = wannier-overlap
        lattice.depth = 10.0
        numerics.k_samples = 33
        grid.points = 257
    """)
    summary = cli.run(cfg, output_dir=tmp_path / "out")
    assert summary.headline["overlap_dist_sq"] == pytest.approx(0.055, abs=0.005)
    assert summary.headline["l4_scale_b"] == pytest.approx(math.pi * 10**0.25, rel=1e-9)
    assert (tmp_path / "out" / "wannier.csv").exists()
    assert (tmp_path / "out" / "semiclassical.csv").exists()
