import json
from fractions import Fraction

import pytest

from mtlab import cli
from mtlab.graphs_core import cycle_graph, path_graph
from mtlab.mass_transport import Atom, RootedDistribution, uniform_root_measure
from mtlab.poisson_rooting import WeightedSpace


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def write_json(path, payload):
    path.write_text(json.dumps(payload))
    return str(path)


@pytest.fixture
def uniform_p3(tmp_path):
    return write_json(tmp_path / "p3_uniform.json",
                      uniform_root_measure(path_graph(3)).to_json())


@pytest.fixture
def center_atom(tmp_path):
    mu = RootedDistribution([Atom(path_graph(3, root=1), Fraction(1))])
    return write_json(tmp_path / "p3_center_atom.json", mu.to_json())


def test_mtp_check_passes_uniform_measure(capsys, uniform_p3):
    code, out, err = run(capsys, "mtp-check", "--measure", uniform_p3,
                         "--radius", "2", "--tol", "0")
    assert code == 0
    rep = json.loads(out)
    assert rep["verdict"] == "PASS"
    assert rep["checks"][0]["kernels_checked"] > 0
    assert "finished" in err


def test_mtp_check_fails_center_atom_with_witness(capsys, center_atom):
    code, out, _ = run(capsys, "mtp-check", "--measure", center_atom,
                       "--radius", "1", "--tol", "0")
    assert code == 1
    rep = json.loads(out)
    assert rep["verdict"] == "FAIL"
    cert = rep["checks"][0]["certificate"]
    assert cert["witness_gap"] == "2"
    assert cert["witness_ball_code"]


def test_malformed_json_exits_2(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    code, out, err = run(capsys, "mtp-check", "--measure", str(bad))
    assert code == 2
    assert out == ""
    assert "malformed" in err


def test_wrong_shape_json_exits_2(capsys, tmp_path):
    path = write_json(tmp_path / "shape.json", {"atoms": "not-a-list"})
    code, out, _ = run(capsys, "mtp-check", "--measure", path)
    assert code == 2
    assert out == ""


def test_radius_zero_is_a_precondition_failure(capsys, uniform_p3):
    code, out, err = run(capsys, "mtp-check", "--measure", uniform_p3,
                         "--radius", "0")
    assert code == 3
    assert out == ""
    assert "precondition" in err


def test_stochastic_path_requires_seed(capsys):
    code, out, err = run(capsys, "bs-distance", "--a", "integer_line",
                         "--b", "grid2d", "--samples", "500")
    assert code == 3
    assert "--seed" in err


def test_bs_distance_exact_cycle_vs_line(capsys, tmp_path):
    g = write_json(tmp_path / "c8.json", cycle_graph(8).to_json())
    code, out, _ = run(capsys, "bs-distance", "--a", g,
                       "--b", "integer_line", "--rmax", "3")
    assert code == 0
    rep = json.loads(out)
    check = rep["checks"][0]
    assert check["exact"] is True
    assert check["distance"] == "0"
    assert len(check["rows"]) == 3


def test_bs_distance_mc_repeats_byte_identical(capsys):
    args = ("bs-distance", "--a", "integer_line", "--b", "grid2d",
            "--rmax", "2", "--samples", "2000", "--seed", "5")
    _, out1, _ = run(capsys, *args)
    _, out2, _ = run(capsys, *args)
    assert out1 == out2


def test_schreier_small_group_all_classes_pass(capsys):
    code, out, _ = run(capsys, "schreier", "--group", "s3")
    assert code == 0
    rep = json.loads(out)
    assert rep["verdict"] == "PASS"
    assert len(rep["checks"]) == 4
    assert all(c["verdict"] == "PASS" for c in rep["checks"])


def test_poisson_audit_runs_and_passes(capsys, tmp_path):
    space = write_json(tmp_path / "space.json",
                       WeightedSpace(["a", "b", "c"],
                                     [0.3, 0.5, 0.2]).to_json())
    code, out, _ = run(capsys, "poisson-audit", "--space", space,
                       "--samples", "5000", "--seed", "11")
    assert code == 0
    rep = json.loads(out)
    names = [c["name"] for c in rep["checks"]]
    assert "count-law" in names and "desingularization-identity" in names
    assert rep["verdict"] == "PASS"


def test_poisson_audit_bad_region_precondition(capsys, tmp_path):
    space = write_json(tmp_path / "space.json",
                       WeightedSpace(["a"], [0.4]).to_json())
    code, out, _ = run(capsys, "poisson-audit", "--space", space,
                       "--region", "0,7", "--samples", "2000",
                       "--seed", "1")
    assert code == 3
    assert out == ""


def test_chabauty_audit_clean(capsys):
    code, out, _ = run(capsys, "chabauty-audit", "--trials", "100",
                       "--seed", "9")
    assert code == 0
    rep = json.loads(out)
    assert all(c["verdict"] == "PASS" for c in rep["checks"])


def test_thinthick_writes_csv_and_plot(capsys, tmp_path):
    csv_path = tmp_path / "rows.csv"
    png_path = tmp_path / "sweep.png"
    code, out, _ = run(capsys, "thinthick", "--genus", "0", "--cusps", "3",
                       "--csv", str(csv_path), "--plot", str(png_path))
    assert code == 0
    rep = json.loads(out)
    assert rep["verdict"] == "PASS"
    header = csv_path.read_text().splitlines()[0]
    assert header == "eps,thin_area,fraction,bound"
    assert png_path.stat().st_size > 1000


def test_thinthick_rejects_non_hyperbolic_surface(capsys):
    code, out, _ = run(capsys, "thinthick", "--genus", "1", "--cusps", "0")
    assert code == 3
    assert out == ""


def test_comparisons_all_modes(capsys):
    code, out, _ = run(capsys, "comparisons")
    assert code == 0
    rep = json.loads(out)
    assert len(rep["checks"]) == 3
    assert all(c["violations"] == 0 for c in rep["checks"])


def test_flow_invariance_uniform_passes(capsys):
    code, out, _ = run(capsys, "flow-invariance", "--density", "1",
                       "--t", "0.4", "--samples", "100000", "--seed", "3")
    assert code == 0
    rep = json.loads(out)
    assert rep["verdict"] == "PASS"
    assert rep["checks"][0]["defect"] < rep["checks"][0]["threshold"]


def test_flow_invariance_detects_moving_density(capsys):
    code, out, _ = run(capsys, "flow-invariance", "--density",
                       "1+0.5*cos(2*pi*x)", "--t", "0.37", "--samples",
                       "100000", "--seed", "3")
    # a violated hypothesis is a finding, not a software failure
    assert code == 0
    rep = json.loads(out)
    assert rep["verdict"] == "HYPOTHESIS-VIOLATED"
    cert = rep["checks"][0]["certificate"]
    assert cert["quadrature_lower_bound"] > 0.1


def test_flow_invariance_bad_expression_exits_2(capsys):
    code, out, err = run(capsys, "flow-invariance", "--density", "exp(x)",
                         "--t", "0.4", "--seed", "3")
    assert code == 2
    assert out == ""
    assert "density" in err


def test_sasaki_default_battery(capsys):
    code, out, _ = run(capsys, "sasaki-check", "--seed", "5",
                       "--samples", "32")
    assert code == 0
    rep = json.loads(out)
    names = [c["name"] for c in rep["checks"]]
    assert "flat-lift-identity" in names
    assert rep["verdict"] == "PASS"


def test_sasaki_metric_file_and_bad_spec(capsys, tmp_path):
    good = write_json(tmp_path / "hyp.json",
                      {"dim": 2,
                       "entries": ["1/(y*y)", "0", "0", "1/(y*y)"],
                       "patch": [[-1, 1], [0.5, 2]]})
    code, out, _ = run(capsys, "sasaki-check", "--metric", good,
                       "--seed", "4", "--samples", "32")
    assert code == 0
    assert json.loads(out)["verdict"] == "PASS"
    bad = write_json(tmp_path / "bad.json",
                     {"dim": 2, "entries": ["1", "0", "1"],
                      "patch": [[-1, 1], [0.5, 2]]})
    code, out, _ = run(capsys, "sasaki-check", "--metric", bad,
                       "--seed", "4")
    assert code == 2
    assert out == ""


def test_compact_json_flag(capsys, uniform_p3):
    code, out, _ = run(capsys, "--json-indent", "0", "mtp-check",
                       "--measure", uniform_p3)
    assert code == 0
    assert len(out.strip().splitlines()) == 1
    assert json.loads(out)["verdict"] == "PASS"


def test_unknown_subcommand_exits_2(capsys):
    assert cli.main(["no-such-command"]) == 2
    capsys.readouterr()
