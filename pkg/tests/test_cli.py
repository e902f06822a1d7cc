from pathlib import Path

import pytest
from click.testing import CliRunner

from ctcsim.cli import fmt, main

DATA = Path(__file__).parent / "data"


def run(*args, env=None):
    return CliRunner().invoke(main, [str(a) for a in args], env=env)


def table(output):
    """``{key: value}`` for two-column rows, skipping comments."""
    rows = {}
    for line in output.splitlines():
        if line.startswith("#") or not line:
            continue
        cells = line.split("\t")
        if len(cells) == 2:
            rows[cells[0]] = cells[1]
    return rows


def matrix(output, name):
    out = {}
    for line in output.splitlines():
        cells = line.split("\t")
        if cells[0] == name and len(cells) == 5:
            out[(int(cells[1]), int(cells[2]))] = complex(float(cells[3]), float(cells[4]))
    return out


@pytest.mark.parametrize(
    "x, s",
    [(0.1, "0.1"), (1e-15, "0"), (-1e-16, "0"), (1 / 3, "0.333333333333"), (-0.0, "0"), (2.5e-10, "2.5e-10")],
)
def test_fmt(x, s):
    assert fmt(x) == s


def test_examples_all_pass():
    res = run("examples")
    assert res.exit_code == 0, res.output
    lines = [l for l in res.output.splitlines() if not l.startswith("#")]
    assert len(lines) == 17
    assert all(l.endswith("PASS") for l in lines)
    assert res.output.splitlines()[0].startswith("#example\tnx")


def test_examples_writes_file(tmp_path):
    target = tmp_path / "ex.tsv"
    res = run("examples", "--out", target)
    assert res.exit_code == 0
    assert res.output == ""
    assert "CPHASE_SWAP" in target.read_text()


def test_evolve_cphase_swap():
    res = run("evolve", "--circuit", DATA / "cphase_swap.ctc", "--rho-in", "bloch 0.3 0.4 0.5")
    assert res.exit_code == 0, res.output
    rows = table(res.output)
    assert rows["multiplicity"] == "0"
    assert rows["output_ambiguous"] == "false"
    out = matrix(res.output, "rho_out")
    # Bloch (0.075, 0.1, 0.5)
    assert out[(0, 0)] == pytest.approx(0.75)
    assert out[(0, 1)] == pytest.approx(0.0375 - 0.05j)


def test_evolve_explicit_crot():
    res = run("evolve", "--circuit", DATA / "crot.ctc", "--rho-in", "bloch 1 0 0", "--policy", "EXPLICIT",
              "--coords", "0.7")
    assert res.exit_code == 0, res.output
    rows = table(res.output)
    assert rows["multiplicity"] == "1"
    assert rows["output_ambiguous"] == "true"
    out = matrix(res.output, "rho_out")
    # Bloch (0.85, 0.15, 0)
    assert out[(0, 1)] == pytest.approx(0.425 - 0.075j)


def test_evolve_explicit_needs_coords():
    res = run("evolve", "--circuit", DATA / "crot.ctc", "--rho-in", "bloch 1 0 0", "--policy", "explicit")
    assert res.exit_code == 2
    assert "--coords" in res.output


def test_evolve_explicit_non_psd_is_engine_error():
    res = run("evolve", "--circuit", DATA / "crot.ctc", "--rho-in", "bloch 1 0 0", "--policy", "EXPLICIT",
              "--coords", "3")
    assert res.exit_code == 1
    assert "PSD" in res.output


def test_evolve_state_from_file():
    res = run("evolve", "--circuit", DATA / "cphase_swap.ctc", "--rho-in", f"file {DATA / 'plus_state.txt'}")
    assert res.exit_code == 0, res.output
    assert matrix(res.output, "rho_out")[(0, 1)] == pytest.approx(0)


def test_fixedpoint_lists_directions():
    res = run("fixedpoint", "--circuit", DATA / "crot.ctc", "--rho-in", "basis 0")
    assert res.exit_code == 0, res.output
    assert table(res.output)["multiplicity"] == "3"
    assert "#direction\tlower\tupper" in res.output
    assert sum(1 for l in res.output.splitlines() if l.startswith("direction\t")) == 12


@pytest.mark.parametrize(
    "spec, fragment",
    [("bloch 1 1 0", "--rho-in"), ("bloch 1 0", "three"), ("basis 2", "--rho-in"), ("ket 0", "unknown"),
     ("basis 01", "dimension")],
)
def test_evolve_bad_state_is_usage_error(spec, fragment):
    res = run("evolve", "--circuit", DATA / "cphase_swap.ctc", "--rho-in", spec)
    assert res.exit_code == 2
    assert fragment in res.output


def test_evolve_bad_circuit_reports_line():
    res = run("evolve", "--circuit", DATA / "bad_gate.ctc", "--rho-in", "basis 0")
    assert res.exit_code == 2
    assert "line 3" in res.output
    assert "TOFFOLI" in res.output


def test_missing_circuit_file():
    res = run("evolve", "--circuit", DATA / "nope.ctc", "--rho-in", "basis 0")
    assert res.exit_code == 2


def test_sat_exact():
    res = run("sat", "--cnf", DATA / "three_sat.cnf", "--p", 3, "--q", 4)
    assert res.exit_code == 0, res.output
    rows = table(res.output)
    assert rows["s"] == "1"
    assert float(rows["gamma_0"]) == 0.75
    assert float(rows["gamma_3"]) == pytest.approx(0.75**8)
    assert float(rows["p_fail_exact"]) == pytest.approx(((1 + 0.75**8) / 2) ** 4, rel=1e-11)
    assert rows["decision"] == "SAT"
    assert rows["oracle_queries"] == "4"


def test_sat_unsat_has_no_p_fail():
    res = run("sat", "--cnf", DATA / "unsat.cnf", "--p", 2, "--q", 2)
    rows = table(res.output)
    assert rows["p_fail_exact"] == "n/a (s=0)"
    assert rows["decision"] == "UNSAT"


def test_sat_tautology_prepass():
    rows = table(run("sat", "--cnf", DATA / "tautology.cnf", "--p", 2, "--q", 2).output)
    assert rows["p_fail_exact"] == "n/a (s=2^n)"
    assert rows["prepass_hit"] == "true"
    assert rows["decision"] == "SAT"


def test_sat_monte_carlo_within_three_sigma():
    res = run("sat", "--cnf", DATA / "three_sat.cnf", "--p", 2, "--q", 2, "--mode", "mc", "--trials", 2000)
    assert res.exit_code == 0, res.output
    assert table(res.output)["within_3sigma"] == "true"


def test_sat_seed_from_environment():
    a = run("sat", "--cnf", DATA / "three_sat.cnf", "--p", 2, "--q", 2, "--mode", "mc", "--trials", 5,
            env={"CTC_SIM_SEED": "11"})
    assert table(a.output)["seed"] == "11"


@pytest.mark.parametrize("flag", ["--p", "--q"])
def test_sat_rejects_zero(flag):
    args = {"--p": "2", "--q": "2"}
    args[flag] = "0"
    res = run("sat", "--cnf", DATA / "three_sat.cnf", *[x for kv in args.items() for x in kv])
    assert res.exit_code == 2


def test_noise_mu():
    res = run("noise", "--mu", 0.001, "--p", 4)
    assert res.exit_code == 0, res.output
    lines = [l for l in res.output.splitlines() if not l.startswith("#")]
    cells = lines[0].split("\t")
    assert float(cells[2]) == pytest.approx(0.999 ** 16)


def test_noise_bound_reports_failures():
    # the first inequality fails for every sample with b >= 1
    res = run("noise", "--bound", "1,2", "--n", 10)
    assert res.exit_code == 1
    assert "# 0 of 100 samples pass" in res.output


def test_noise_bound_requires_c_above_one():
    res = run("noise", "--bound", "1,1", "--n", 10)
    assert res.exit_code == 2
    assert "bound check requires c > 1" in res.output


def test_noise_needs_something_to_do():
    assert run("noise").exit_code == 2


def test_noise_bound_prints_tiny_margins_unclipped():
    res = run("noise", "--bound", "0.5,2", "--n", 10)
    row = [l for l in res.output.splitlines() if l.startswith("10\t0.5")][0].split("\t")
    assert row[3] == "99"
    assert float(row[5]) == pytest.approx(-1.5 * 2.0**-100, rel=1e-9)
    assert float(row[6]) > 0
