"""Small hand-checkable values across the modules."""

from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from ctcsim.circuits import CtcCircuit, QubitRegister, circuit_unitary, paper_example, parse_circuit
from ctcsim.cli import main
from ctcsim.engine import Policy, ctc_evolve, induced_map, select_fixed_point, temporal_origin_check
from ctcsim.qstate import SIGMA_X, basis_state, bloch_to_density, density_to_bloch, maximally_mixed
from ctcsim.sat import (
    CnfFormula,
    build_oracle_unitary,
    count_satisfying,
    eval_cnf,
    gamma_after,
    oracle_reduced_state,
    p_fail,
    parse_dimacs,
)

from conftest import random_density, random_unitary

DATA = Path(__file__).parent / "data"


def ketbra(i, j, dim=4):
    m = np.zeros((dim, dim))
    m[i, j] = 1
    return m


# |00>=0, |01>=1, |10>=2, |11>=3
CPHASE_SWAP_U = ketbra(0, 0) + ketbra(1, 2) + ketbra(2, 1) - ketbra(3, 3)
S_GATE_U = ketbra(0, 0) + ketbra(2, 1) + ketbra(3, 2) + ketbra(1, 3)


@pytest.mark.parametrize("name, expected", [("CPHASE_SWAP", CPHASE_SWAP_U), ("S_GATE", S_GATE_U),
                                            ("CROT", np.diag([1, 1, 1, 1j]))])
def test_example_unitaries(name, expected):
    np.testing.assert_allclose(circuit_unitary(paper_example(name)), expected, atol=1e-15)


def test_parse_cnot_swap_circuit():
    c = parse_circuit("qubits 2 ctc 1\ngate CNOT 0 1\ngate SWAP 0 1")
    assert (c.register.n_total, c.register.n_ctc, len(c.gates)) == (2, 1, 2)


def test_header_with_too_many_ctc_qubits():
    with pytest.raises(ValueError):
        parse_circuit("qubits 1 ctc 2")


def test_empty_circuit_is_identity():
    np.testing.assert_array_equal(circuit_unitary(CtcCircuit(QubitRegister(3, 1), [])), np.eye(8))


def test_identity_unitary_gives_identity_channel(rng):
    sop = induced_map(np.eye(4), random_density(2, rng), QubitRegister(2, 1))
    np.testing.assert_allclose(sop.matrix, np.eye(4), atol=1e-15)


def test_local_unitary_gives_conjugation(rng):
    v = random_unitary(2, rng)
    sop = induced_map(np.kron(np.eye(2), v), random_density(2, rng), QubitRegister(2, 1))
    rho = random_density(2, rng)
    np.testing.assert_allclose(sop.apply(rho), v @ rho @ v.conj().T, atol=1e-14)


@pytest.mark.parametrize("n, base", [((0, 0, 1), (0, 0, 1)), ((1, 0, 0), (0, 0, 0))])
def test_cphase_swap_unique_base(n, base):
    fps = ctc_evolve(paper_example("CPHASE_SWAP"), bloch_to_density(n)).fixed_points
    assert fps.multiplicity == 0
    np.testing.assert_allclose(density_to_bloch(fps.base), base, atol=1e-12)
    for policy in (Policy.MAX_ENTROPY, Policy.CESARO):
        np.testing.assert_allclose(select_fixed_point(fps, policy), fps.base, atol=1e-12)


def test_crot_at_centre():
    res = ctc_evolve(paper_example("CROT"), maximally_mixed(2))
    assert res.multiplicity == 1
    np.testing.assert_allclose(density_to_bloch(res.rho_ctc), (0, 0, 0), atol=1e-9)
    d = res.fixed_points.directions[0]
    np.testing.assert_allclose(np.abs(np.diag(d)), [0.5, 0.5], atol=1e-12)
    sign = np.sign(d[0, 0].real)
    explicit = ctc_evolve(paper_example("CROT"), maximally_mixed(2), Policy.EXPLICIT, coords=[0.7 * sign])
    np.testing.assert_allclose(explicit.rho_ctc, bloch_to_density((0, 0, 0.7)), atol=1e-12)


def test_s_gate_output_squares():
    res = ctc_evolve(paper_example("S_GATE"), bloch_to_density((0, 0, 0.9)))
    np.testing.assert_allclose(density_to_bloch(res.rho_out), (0, 0, 0.81), atol=1e-12)


def test_temporal_origin_trivial_and_cphase(rng):
    u0 = circuit_unitary(paper_example("CPHASE_SWAP"))
    reg = QubitRegister(2, 1)
    assert temporal_origin_check(u0, np.eye(2), np.eye(2), random_density(2, rng), reg).deviation == 0
    for _ in range(20):
        chk = temporal_origin_check(u0, random_unitary(2, rng), random_unitary(2, rng), random_density(2, rng), reg)
        assert chk.deviation <= 1e-10


def test_dimacs_examples():
    assert parse_dimacs("p cnf 2 1\n1 2 0") == CnfFormula(2, ((1, 2),))
    f = parse_dimacs("p cnf 1 2\n1 0\n-1 0")
    assert count_satisfying(f) == 0
    with pytest.raises(ValueError, match="out of range"):
        parse_dimacs("p cnf 2 1\n3 0")


@pytest.mark.parametrize("bits, value", [((0, 0), 0), ((1, 0), 1), ((0, 1), 1), ((1, 1), 1)])
def test_eval_or_clause(bits, value):
    assert eval_cnf(CnfFormula(2, ((1, 2),)), bits) == value


def test_empty_formula():
    f = CnfFormula(3, ())
    assert eval_cnf(f, (0, 1, 0)) == 1
    assert count_satisfying(f) == 8


def test_oracle_constant_functions():
    never = CnfFormula(2, ((1,), (-1,)))
    always = CnfFormula(2, ())
    np.testing.assert_array_equal(build_oracle_unitary(never), np.eye(8))
    np.testing.assert_array_equal(build_oracle_unitary(always), np.kron(np.eye(4), SIGMA_X))
    np.testing.assert_allclose(oracle_reduced_state(never), basis_state("0"), atol=1e-15)


def test_oracle_state_half_satisfying():
    f = CnfFormula(3, ((1,),))
    np.testing.assert_allclose(oracle_reduced_state(f), maximally_mixed(2), atol=1e-15)
    np.testing.assert_allclose(oracle_reduced_state(CnfFormula(2, ((1, 2),))), bloch_to_density((0, 0, -0.5)))


@pytest.mark.parametrize("p", [1, 2, 7])
def test_gamma_edge_cases(p):
    assert gamma_after(p, 0, 5) == 1
    assert gamma_after(p, 16, 5) == 0
    assert p_fail(p, 3, 16, 5) == 1 / 8


def test_p_fail_substitution_and_limit():
    assert p_fail(0, 1, 1, 2) == 0.75
    assert p_fail(60, 7, 3, 4) == pytest.approx(2**-7, rel=1e-15)


def _cli(*args):
    return CliRunner().invoke(main, [str(a) for a in args])


def test_cli_evolve_pure_input():
    res = _cli("evolve", "--circuit", DATA / "cphase_swap.ctc", "--rho-in", "bloch 0 0 1")
    rows = [l.split("\t") for l in res.stdout.splitlines() if l.startswith("rho_out")]
    vals = {(r[1], r[2]): (float(r[3]), float(r[4])) for r in rows}
    assert vals == {("0", "0"): (1, 0), ("0", "1"): (0, 0), ("1", "0"): (0, 0), ("1", "1"): (0, 0)}


def test_cli_missing_file_goes_to_stderr():
    res = _cli("evolve", "--circuit", DATA / "absent.ctc", "--rho-in", "bloch 0 0 1")
    assert res.exit_code == 2
    assert res.stdout == ""
    assert "absent.ctc" in res.stderr


def test_cli_noise_gamma():
    res = _cli("noise", "--mu", 0.5, "--p", 1)
    row = [l for l in res.stdout.splitlines() if not l.startswith("#")][0].split("\t")
    assert float(row[2]) == 0.25


def test_cli_examples_s_gate_row():
    res = _cli("examples")
    row = [l.split("\t") for l in res.stdout.splitlines() if l.startswith("S_GATE\t0\t0\t0.9")][0]
    assert float(row[9]) == pytest.approx(0.81)
    assert row[-1] == "PASS"
