"""Command-line front end. Every command writes tab-separated tables."""

import math
import sys
from pathlib import Path

import click
import numpy as np

from . import noise as noise_mod
from .circuits import PaperExample, paper_example, parse_circuit, parse_complex
from .config import Tolerances
from .engine import Policy, ctc_evolve
from .errors import CircuitParseError, CtcError
from .qstate import basis_state, bloch_to_density, check_density, density_to_bloch
from .sat import Mode, binomial_sigma, parse_dimacs, run_protocol, run_trials

EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2


def fmt(x) -> str:
    """12 significant digits, no negative zero, roundoff below 1e-14 shown as 0."""
    x = float(x)
    if math.isfinite(x) and abs(x) < 1e-14:
        x = 0.0
    return f"{x:.12g}"


def _row(*cells) -> str:
    return "\t".join(c if isinstance(c, str) else fmt(c) for c in cells)


class Table:
    def __init__(self):
        self.lines = []

    def header(self, *names):
        self.lines.append("#" + "\t".join(names))

    def row(self, *cells):
        self.lines.append(_row(*cells))

    def comment(self, text):
        self.lines.append("# " + text)

    def emit(self, out):
        text = "\n".join(self.lines) + "\n"
        if out:
            Path(out).write_text(text, encoding="utf-8")
        else:
            click.echo(text, nl=False)


def _fail(message: str, code: int):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def parse_rho_spec(spec: str) -> np.ndarray:
    """``bloch nx ny nz`` | ``basis <bits>`` | ``file <path>``."""
    parts = spec.split()
    if not parts:
        raise click.BadParameter("empty state spec", param_hint="--rho-in")
    kind, args = parts[0], parts[1:]
    if kind == "bloch":
        if len(args) != 3:
            raise click.BadParameter("bloch needs three components", param_hint="--rho-in")
        try:
            return bloch_to_density([float(a) for a in args])
        except ValueError as exc:
            raise click.BadParameter(str(exc), param_hint="--rho-in") from None
    if kind == "basis":
        if len(args) != 1:
            raise click.BadParameter("basis needs one bitstring", param_hint="--rho-in")
        try:
            return basis_state(args[0])
        except ValueError as exc:
            raise click.BadParameter(str(exc), param_hint="--rho-in") from None
    if kind == "file":
        if len(args) != 1:
            raise click.BadParameter("file needs one path", param_hint="--rho-in")
        path = Path(args[0])
        if not path.is_file():
            raise click.BadParameter(f"no such file {path}", param_hint="--rho-in")
        lines = path.read_text(encoding="utf-8").splitlines()
        tokens = [t for line in lines for t in line.split("#", 1)[0].split()]
        try:
            entries = [parse_complex(t) for t in tokens]
        except ValueError as exc:
            raise click.BadParameter(str(exc), param_hint="--rho-in") from None
        d = int(round(math.sqrt(len(entries))))
        if d * d != len(entries) or d < 2:
            raise click.BadParameter(f"{len(entries)} entries do not form a square matrix", param_hint="--rho-in")
        try:
            return check_density(np.array(entries).reshape(d, d))
        except ValueError as exc:
            raise click.BadParameter(str(exc), param_hint="--rho-in") from None
    raise click.BadParameter(f"unknown state spec kind {kind!r}", param_hint="--rho-in")


def _tolerances(tol_fixed_point, tol_psd) -> Tolerances:
    return Tolerances(fixed_point=tol_fixed_point, psd=tol_psd)


tolerance_options = [
    click.option("--tol-fixed-point", type=click.FloatRange(min=0, min_open=True), default=1e-9, show_default=True,
                 help="Eigenvalue-1 window and fixed-point residual."),
    click.option("--tol-psd", type=click.FloatRange(min=0, min_open=True), default=1e-9, show_default=True,
                 help="Most negative eigenvalue still counted as PSD."),
]
out_option = click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write the table here instead of stdout.")
seed_option = click.option("--seed", type=int, default=0, envvar="CTC_SIM_SEED", show_default=True,
                           help="RNG seed (also read from CTC_SIM_SEED).")


def _apply(options):
    def deco(f):
        for opt in reversed(options):
            f = opt(f)
        return f
    return deco


@click.group()
def main():
    """Simulate quantum circuits with Deutsch closed-timelike-curve qubits."""


# -- examples -----------------------------------------------------------------

CPHASE_GRID = [(0.3, 0.4, 0.5), (0, 0, 1), (0, 0, -1), (1, 0, 0), (0, 0, 0), (0.6, -0.2, 0.7), (-0.5, 0.5, -0.5)]
CROT_GRID = [(1, 0, 0), (0.3, -0.4, 0.2), (0, 0, 0.5), (0, 0, 1)]
S_GRID = [0.9, 0.5, -0.5, 0.0, 1.0, -1.0]
CHECK_TOL = 1e-9


def _close(a, b) -> bool:
    return bool(np.max(np.abs(np.asarray(a, float) - np.asarray(b, float))) <= CHECK_TOL)


def example_rows():
    """Yield ``(name, n, m, out, multiplicity, ambiguous, ok)`` for every documented input."""
    c = paper_example(PaperExample.CPHASE_SWAP)
    for n in CPHASE_GRID:
        nx, ny, nz = n
        r = ctc_evolve(c, bloch_to_density(n))
        m, o = density_to_bloch(r.rho_ctc), density_to_bloch(r.rho_out)
        ok = r.multiplicity == 0 and _close(m, (nx * nz, ny * nz, nz)) and _close(o, (nz * nz * nx, nz * nz * ny, nz))
        yield "CPHASE_SWAP", n, m, o, r.multiplicity, r.output_ambiguous, ok
    c = paper_example(PaperExample.CROT)
    for n in CROT_GRID:
        nx, ny, nz = n
        r = ctc_evolve(c, bloch_to_density(n))
        m, o = density_to_bloch(r.rho_ctc), density_to_bloch(r.rho_out)
        mz = m[2]
        want = (nx * (1 + mz) / 2 + ny * (mz - 1) / 2, nx * (1 - mz) / 2 + ny * (1 + mz) / 2, nz)
        mult_ok = r.multiplicity == (3 if nz == 1 else 1)
        # for n_z = 1 the output does not involve the CTC state at all
        amb_ok = r.output_ambiguous == (nz != 1 and (nx, ny) != (0, 0))
        ok = mult_ok and amb_ok and _close(o, want) and (nz == 1 or _close(m[:2], (0, 0)))
        yield "CROT", n, m, o, r.multiplicity, r.output_ambiguous, ok
    c = paper_example(PaperExample.S_GATE)
    for g in S_GRID:
        n = (0.0, 0.0, g)
        r = ctc_evolve(c, bloch_to_density(n))
        m, o = density_to_bloch(r.rho_ctc), density_to_bloch(r.rho_out)
        ok = r.multiplicity == 0 and _close(o, (0, 0, g * g))
        yield "S_GATE", n, m, o, r.multiplicity, r.output_ambiguous, ok


@main.command()
@out_option
def examples(out):
    """Run the three two-qubit examples against their closed forms."""
    t = Table()
    t.header("example", "nx", "ny", "nz", "mx", "my", "mz", "out_x", "out_y", "out_z",
             "multiplicity", "output_ambiguous", "status")
    failed = 0
    for name, n, m, o, mult, amb, ok in example_rows():
        failed += not ok
        t.row(name, *n, *m, *o, str(mult), "true" if amb else "false", "PASS" if ok else "FAIL")
    t.emit(out)
    sys.exit(EXIT_CHECK_FAILED if failed else 0)


# -- evolve / fixedpoint ------------------------------------------------------

def _matrix_rows(t: Table, name: str, m, prefix=()):
    m = np.asarray(m)
    for i in range(m.shape[0]):
        for j in range(m.shape[1]):
            t.row(name, *[str(p) for p in prefix], str(i), str(j), m[i, j].real, m[i, j].imag)


def _parse_coords(coords):
    if coords is None:
        return None
    try:
        return [float(x) for x in coords.replace(",", " ").split()]
    except ValueError:
        raise click.BadParameter(f"bad coordinates {coords!r}", param_hint="--coords") from None


def _run_evolve(circuit, rho_in, policy, coords, tol_fixed_point, tol_psd, out, full):
    policy = Policy(policy.upper())
    coords = _parse_coords(coords)
    if policy is Policy.EXPLICIT and coords is None:
        raise click.UsageError("policy EXPLICIT needs --coords")
    try:
        circ = parse_circuit(Path(circuit).read_text(encoding="utf-8"))
    except CircuitParseError as exc:
        _fail(f"{circuit}: {exc}", EXIT_USAGE)
    rho = parse_rho_spec(rho_in)
    if rho.shape[0] != 2**circ.register.n_cr:
        raise click.BadParameter(
            f"state has dimension {rho.shape[0]}, circuit has {circ.register.n_cr} chronology-respecting qubit(s)",
            param_hint="--rho-in",
        )
    try:
        res = ctc_evolve(circ, rho, policy, coords, _tolerances(tol_fixed_point, tol_psd))
    except (CtcError, ValueError) as exc:
        _fail(str(exc), EXIT_CHECK_FAILED)
    t = Table()
    t.header("key", "value")
    t.row("policy", res.policy_used.value)
    t.row("multiplicity", str(res.multiplicity))
    t.row("output_ambiguous", "true" if res.output_ambiguous else "false")
    if full:
        fps = res.fixed_points
        t.header("direction", "lower", "upper")
        for k, (lo, hi) in enumerate(fps.box_bounds):
            t.row(str(k), lo, hi)
        t.header("matrix", "k", "i", "j", "re", "im")
        _matrix_rows(t, "base", fps.base, ("-",))
        for k, d in enumerate(fps.directions):
            _matrix_rows(t, "direction", d, (k,))
    t.header("matrix", "i", "j", "re", "im")
    _matrix_rows(t, "rho_out", res.rho_out)
    _matrix_rows(t, "rho_ctc", res.rho_ctc)
    t.emit(out)


def _evolve_options(f):
    f = _apply(tolerance_options)(f)
    f = out_option(f)
    f = click.option("--coords", default=None, help="EXPLICIT coordinates along the fixed-point directions.")(f)
    f = click.option("--policy", type=click.Choice([p.value for p in Policy], case_sensitive=False),
                     default="MAX_ENTROPY", show_default=True)(f)
    f = click.option("--rho-in", required=True, help="'bloch nx ny nz', 'basis <bits>' or 'file <path>'.")(f)
    f = click.option("--circuit", required=True, type=click.Path(exists=True, dir_okay=False))(f)
    return f


@main.command()
@_evolve_options
def evolve(circuit, rho_in, policy, coords, tol_fixed_point, tol_psd, out):
    """Solve the consistency condition for a circuit file and print the output state."""
    _run_evolve(circuit, rho_in, policy, coords, tol_fixed_point, tol_psd, out, full=False)


@main.command()
@_evolve_options
def fixedpoint(circuit, rho_in, policy, coords, tol_fixed_point, tol_psd, out):
    """Like ``evolve`` but also print the whole fixed-point set."""
    _run_evolve(circuit, rho_in, policy, coords, tol_fixed_point, tol_psd, out, full=True)


# -- sat ----------------------------------------------------------------------

@main.command()
@click.option("--cnf", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--p", "p", type=click.IntRange(min=1), required=True, help="S applications per run.")
@click.option("--q", "q", type=click.IntRange(min=1), required=True, help="Measured runs.")
@seed_option
@click.option("--mode", type=click.Choice(["exact", "mc"]), default="exact", show_default=True)
@click.option("--trials", type=click.IntRange(min=1), default=1000, show_default=True,
              help="Monte Carlo repetitions (seeds seed, seed+1, ...).")
@out_option
def sat(cnf, p, q, seed, mode, trials, out):
    """Run the CTC-assisted SAT protocol on a DIMACS file."""
    try:
        f = parse_dimacs(Path(cnf).read_text(encoding="utf-8"))
    except CircuitParseError as exc:
        _fail(f"{cnf}: {exc}", EXIT_USAGE)
    try:
        res = run_protocol(f, p, q, seed, Mode.EXACT if mode == "exact" else Mode.MONTE_CARLO)
        summary = run_trials(f, p, q, trials, seed) if mode == "mc" else None
    except (CtcError, ValueError) as exc:
        _fail(str(exc), EXIT_CHECK_FAILED)
    t = Table()
    t.header("key", "value")
    t.row("n_vars", str(res.n_vars))
    t.row("s", str(res.s_true))
    t.row("p", str(p))
    t.row("q", str(q))
    t.row("seed", str(seed))
    t.row("mode", mode)
    for k, g in enumerate(res.gamma_trace):
        t.row(f"gamma_{k}", g)
    if res.s_true == 0:
        t.row("p_fail_exact", "n/a (s=0)")
    elif res.s_true == 2**res.n_vars:
        t.row("p_fail_exact", "n/a (s=2^n)")
    else:
        t.row("p_fail_exact", res.p_fail_exact)
    t.row("p_unsat", res.p_unsat)
    t.row("oracle_queries", str(res.oracle_queries))
    t.row("prepass_hit", "true" if res.prepass_hit else "false")
    t.row("decision", res.decision)
    ok = True
    if summary is not None:
        expected = res.p_unsat
        sigma = binomial_sigma(expected, trials)
        rate = summary.unsat_rate
        ok = abs(rate - expected) <= 3 * sigma
        t.row("trials", str(trials))
        t.row("empirical_unsat_rate", rate)
        t.row("expected_unsat_rate", expected)
        t.row("sigma", sigma)
        t.row("ci3_low", max(0.0, expected - 3 * sigma))
        t.row("ci3_high", min(1.0, expected + 3 * sigma))
        t.row("within_3sigma", "true" if ok else "false")
    t.emit(out)
    sys.exit(0 if ok else EXIT_CHECK_FAILED)


# -- noise --------------------------------------------------------------------

def _parse_bound(value):
    if value is None:
        return None
    try:
        b, c = (float(x) for x in value.split(","))
    except ValueError:
        raise click.BadParameter("expected 'b,c'", param_hint="--bound") from None
    if b <= 0:
        raise click.BadParameter("b must be positive", param_hint="--bound")
    if c <= 1:
        raise click.BadParameter(f"bound check requires c > 1 (got c={value.split(',')[1]})", param_hint="--bound")
    return b, c


@main.command()
@click.option("--mu", type=click.FloatRange(0, 1), default=None, help="Preparation perturbation.")
@click.option("--n", "n", type=click.IntRange(min=1), default=None, help="Number of variables.")
@click.option("--p", "p", type=click.IntRange(min=0), default=None, help="S applications (defaults to n).")
@click.option("--bound", default=None, help="'b,c' for the inequality-chain check (needs --n >= 2).")
@click.option("--samples", type=click.IntRange(min=1), default=100, show_default=True)
@out_option
def noise(mu, n, p, bound, samples, out):
    """Perturbed amplification, accuracy requirement and the large-n bound check."""
    bc = _parse_bound(bound)
    if p is None:
        p = n
    if mu is not None and p is None:
        raise click.UsageError("--mu needs --p or --n")
    if bc is not None and (n is None or n < 2):
        raise click.UsageError("--bound needs --n >= 2")
    if mu is None and n is None:
        raise click.UsageError("nothing to do: give --mu/--p, --n or --bound")
    t = Table()
    ok = True
    if mu is not None:
        t.header("mu", "p", "gamma", "log_gamma", "one_minus_gamma")
        t.row(mu, str(p), noise_mod.perturbed_gamma(mu, p), noise_mod.log_perturbed_gamma(mu, p),
              noise_mod.perturbed_gamma_deficit(mu, p))
    if n is not None:
        t.header("n", "required_accuracy")
        t.row(str(n), noise_mod.required_accuracy(n))
    if bc is not None:
        rep = noise_mod.bound_check(n, bc[0], bc[1], samples)
        ok = rep.all_passed
        t.header("n", "b", "c", "passed", "samples", "worst_first_margin", "worst_second_margin")
        # margins are genuine tiny numbers, not roundoff: print them unclipped
        t.row(str(n), bc[0], bc[1], str(rep.n_passed), str(samples),
              f"{rep.worst_first_margin:.12g}", f"{rep.worst_second_margin:.12g}")
        if ok:
            t.comment(f"all {samples} samples pass")
        else:
            t.comment(f"{rep.n_passed} of {samples} samples pass")
    for note in noise_mod.FAULT_TOLERANCE_NOTES:
        t.comment(note)
    t.emit(out)
    sys.exit(0 if ok else EXIT_CHECK_FAILED)


if __name__ == "__main__":
    main()
