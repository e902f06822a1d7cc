"""CTC-assisted SAT: oracle construction, amplification by S, and the q-run protocol.

Variable ``x_v`` (1-based) of an assignment index ``i`` is bit ``n - v`` of
``i``, so ``x_1`` is the most significant bit, matching qubit 0 of the index
register.
"""

import enum
import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .engine import SBackend, apply_s
from .errors import CapacityError, DimacsError
from .qstate import bloch_to_density, check_density, density_to_bloch, partial_trace

MAX_BRUTE_FORCE_VARS = 24
MAX_ORACLE_VARS = 6


@dataclass(frozen=True)
class CnfFormula:
    n_vars: int
    clauses: Tuple[Tuple[int, ...], ...] = ()

    def __post_init__(self):
        clauses = tuple(tuple(int(l) for l in c) for c in self.clauses)
        object.__setattr__(self, "clauses", clauses)
        if self.n_vars < 0:
            raise ValueError("n_vars must be non-negative")
        for c in clauses:
            if not c:
                raise ValueError("empty clause")
            for lit in c:
                if lit == 0 or abs(lit) > self.n_vars:
                    raise ValueError(f"literal {lit} out of range for {self.n_vars} variables")

    def to_dimacs(self) -> str:
        lines = [f"p cnf {self.n_vars} {len(self.clauses)}"]
        lines += [" ".join(map(str, c)) + " 0" for c in self.clauses]
        return "\n".join(lines) + "\n"


def parse_dimacs(text: str, strict: bool = False) -> CnfFormula:
    """Parse DIMACS CNF. A clause-count mismatch warns, or raises when ``strict``."""
    n_vars = n_clauses = None
    clauses: List[Tuple[int, ...]] = []
    current: List[int] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("%"):
            break
        if line.startswith("p"):
            parts = line.split()
            if n_vars is not None:
                raise DimacsError("duplicate problem line", lineno)
            if len(parts) != 4 or parts[1] != "cnf":
                raise DimacsError(f"bad problem line {line!r}", lineno)
            try:
                n_vars, n_clauses = int(parts[2]), int(parts[3])
            except ValueError:
                raise DimacsError(f"bad problem line {line!r}", lineno) from None
            continue
        if n_vars is None:
            raise DimacsError("clause before 'p cnf' header", lineno)
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError:
                raise DimacsError(f"bad literal {tok!r}", lineno) from None
            if lit == 0:
                if not current:
                    raise DimacsError("empty clause", lineno)
                clauses.append(tuple(current))
                current = []
            elif abs(lit) > n_vars:
                raise DimacsError(f"literal {lit} out of range for {n_vars} variables", lineno)
            else:
                current.append(lit)
    if n_vars is None:
        raise DimacsError("missing 'p cnf' header")
    if current:
        clauses.append(tuple(current))
    if len(clauses) != n_clauses:
        msg = f"header declares {n_clauses} clauses, found {len(clauses)}"
        if strict:
            raise DimacsError(msg)
        warnings.warn(msg, stacklevel=2)
    return CnfFormula(n_vars, tuple(clauses))


def eval_cnf(f: CnfFormula, assignment: Sequence[int]) -> int:
    if len(assignment) != f.n_vars:
        raise ValueError(f"assignment has {len(assignment)} bits, formula has {f.n_vars} variables")
    for clause in f.clauses:
        if not any((assignment[abs(l) - 1] == 1) == (l > 0) for l in clause):
            return 0
    return 1


def satisfying_mask(f: CnfFormula) -> np.ndarray:
    """Boolean array over all ``2**n`` assignment indices."""
    n = f.n_vars
    if n > MAX_BRUTE_FORCE_VARS:
        raise CapacityError(f"{n} variables exceeds the brute-force cap of {MAX_BRUTE_FORCE_VARS}")
    idx = np.arange(2**n, dtype=np.uint32)
    sat = np.ones(2**n, dtype=bool)
    for clause in f.clauses:
        hit = np.zeros(2**n, dtype=bool)
        for lit in clause:
            bit = ((idx >> (n - abs(lit))) & 1).astype(bool)
            hit |= bit if lit > 0 else ~bit
        sat &= hit
    return sat


def count_satisfying(f: CnfFormula) -> int:
    return int(np.count_nonzero(satisfying_mask(f)))


def build_oracle_unitary(f: CnfFormula) -> np.ndarray:
    """``U_f = sum_i |i><i| (x) X^f(i)`` on ``n + 1`` qubits, ancilla last."""
    if f.n_vars > MAX_ORACLE_VARS:
        raise CapacityError(f"{f.n_vars} variables exceeds the oracle cap of {MAX_ORACLE_VARS}")
    mask = satisfying_mask(f)
    dim = 2 ** (f.n_vars + 1)
    u = np.zeros((dim, dim), dtype=complex)
    for i, flip in enumerate(mask):
        a, b = 2 * i, 2 * i + 1
        if flip:
            u[a, b] = u[b, a] = 1
        else:
            u[a, a] = u[b, b] = 1
    return u


class OracleBackend(enum.Enum):
    CLOSED_FORM = "CLOSED_FORM"
    FULL_SIM = "FULL_SIM"


def gamma_zero(s: int, n: int) -> float:
    return 1.0 - s / 2 ** (n - 1)


def oracle_reduced_state(f: CnfFormula, backend=OracleBackend.CLOSED_FORM) -> np.ndarray:
    """Reduced state of the ancilla after ``U_f`` acts on ``uniform (x) |0>``."""
    backend = OracleBackend(backend)
    if f.n_vars < 1:
        raise ValueError("the protocol needs at least one variable")
    if backend is OracleBackend.CLOSED_FORM:
        return bloch_to_density((0.0, 0.0, gamma_zero(count_satisfying(f), f.n_vars)))
    u = build_oracle_unitary(f)
    n = f.n_vars
    psi = np.zeros(2 ** (n + 1), dtype=complex)
    psi[0::2] = 1 / np.sqrt(2**n)
    psi = u @ psi
    return check_density(partial_trace(np.outer(psi, psi.conj()), [n]))


def gamma_after(p: int, s: int, n: int) -> float:
    """sigma_z component after ``p`` applications of S: ``(1 - s/2^(n-1))^(2^p)``."""
    if p < 0 or not 0 <= s <= 2**n:
        raise ValueError(f"need p >= 0 and 0 <= s <= 2^n, got p={p}, s={s}, n={n}")
    g = gamma_zero(s, n)
    if p == 0:
        return g
    if g == 0:
        return 0.0
    # |g| < 1 underflows to 0 long before 2^p is large
    return float(abs(g) ** (2**p)) if p < 64 else (1.0 if abs(g) == 1 else 0.0)


def p_fail(p: int, q: int, s: int, n: int) -> float:
    """Probability that no run of ``q`` observes sigma_z = -1 on a satisfiable instance."""
    if s == 0:
        raise ValueError("p_fail is undefined for s = 0: unsatisfiable instances are always answered correctly")
    if s == 2**n:
        raise ValueError("p_fail is undefined for s = 2^n: that case is settled by one classical query")
    if q < 1:
        raise ValueError("q must be at least 1")
    return ((1 + gamma_after(p, s, n)) / 2) ** q


class Mode(enum.Enum):
    MONTE_CARLO = "MONTE_CARLO"
    EXACT = "EXACT"


def run_stream(seed: int, run_index: int) -> np.random.Generator:
    """Independent generator for one protocol run, keyed by ``(seed, run_index)``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(run_index,)))


def prepass_stream(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(2**32,)))


@dataclass(frozen=True)
class SatRunResult:
    decision: str
    s_true: int
    n_vars: int
    gamma_trace: Tuple[float, ...]
    p_fail_exact: Optional[float]
    p_unsat: float
    minus_one_seen: Tuple[bool, ...]
    seed: int
    p: int
    q: int
    mode: Mode
    oracle_queries: int
    prepass_hit: bool = False
    mu: float = 0.0


def amplify(gamma0: float, p: int, n_vars: int = None, cross_check: bool = True) -> Tuple[float, ...]:
    """``(gamma_0, ..., gamma_p)`` from ``p`` applications of S on ``(I + gamma_0 sigma_z)/2``.

    Every state on this path has ``n_x = 0``; that is asserted rather than
    assumed because S is undefined at ``n_x = 1``. When ``cross_check`` is set
    (and the instance is small enough to simulate) each step is repeated with
    the full fixed-point solve.
    """
    rho = bloch_to_density((0.0, 0.0, gamma0))
    trace = [float(gamma0)]
    full = cross_check and (n_vars is None or n_vars <= MAX_ORACLE_VARS)
    for _ in range(p):
        nx = density_to_bloch(rho)[0]
        assert abs(nx) < 1e-12, f"S input left the z axis (n_x={nx})"
        nxt = apply_s(rho, SBackend.CLOSED_FORM)
        if full:
            alt = apply_s(rho, SBackend.FULL_SOLVE)
            if np.max(np.abs(alt - nxt)) > 1e-9:
                raise AssertionError("closed-form and full-solve S disagree")
        rho = nxt
        trace.append(float(density_to_bloch(rho)[2]))
    return tuple(trace)


def _validate(f: CnfFormula, p: int, q: int):
    if p < 1 or q < 1:
        raise ValueError(f"need p >= 1 and q >= 1, got p={p}, q={q}")
    if f.n_vars < 1:
        raise ValueError("the protocol needs at least one variable")
    if f.n_vars > MAX_BRUTE_FORCE_VARS:
        raise CapacityError(f"{f.n_vars} variables exceeds the cap of {MAX_BRUTE_FORCE_VARS}")


def _random_assignment_satisfies(f: CnfFormula, seed: int) -> bool:
    bits = prepass_stream(seed).integers(0, 2, size=f.n_vars)
    return bool(eval_cnf(f, [int(b) for b in bits]))


def run_protocol(
    f: CnfFormula,
    p: int,
    q: int,
    seed: int = 0,
    mode=Mode.MONTE_CARLO,
    mu: float = 0.0,
    cross_check: bool = True,
    gamma_trace: Tuple[float, ...] = None,
    s_true: int = None,
) -> SatRunResult:
    """Shared body of :func:`run_sat` and the noisy variant.

    ``mu`` scales the prepared sigma_z component by ``1 - mu`` before
    amplification. ``gamma_trace``/``s_true`` may be passed in to reuse a
    deterministic precomputation across many seeds.
    """
    _validate(f, p, q)
    if not 0.0 <= mu <= 1.0:
        raise ValueError(f"mu must lie in [0, 1], got {mu}")
    mode = Mode(mode)
    n = f.n_vars
    s = count_satisfying(f) if s_true is None else s_true
    if gamma_trace is None:
        gamma0 = density_to_bloch(oracle_reduced_state(f))[2]
        gamma_trace = amplify((1.0 - mu) * gamma0, p, n, cross_check)
    gp = gamma_trace[-1]
    exact = p_fail(p, q, s, n) if 0 < s < 2**n and mu == 0 else None
    p_minus = (1.0 - gp) / 2

    # all-satisfying formulas make S useless (gamma_0 = -1 squares to 1);
    # one classical query settles them
    prepass = False
    if gamma_trace[0] == -1.0:
        prepass = _random_assignment_satisfies(f, seed)

    p_unsat = 0.0 if prepass else (1 - p_minus) ** q
    if mode is Mode.EXACT:
        seen: Tuple[bool, ...] = ()
        decision = "UNSAT" if p_unsat >= 0.5 else "SAT"
    else:
        seen = tuple(bool(run_stream(seed, r).random() < p_minus) for r in range(q))
        decision = "SAT" if prepass or any(seen) else "UNSAT"
    return SatRunResult(
        decision=decision,
        s_true=s,
        n_vars=n,
        gamma_trace=tuple(gamma_trace),
        p_fail_exact=exact,
        p_unsat=p_unsat,
        minus_one_seen=seen,
        seed=seed,
        p=p,
        q=q,
        mode=mode,
        oracle_queries=q,
        prepass_hit=prepass,
        mu=mu,
    )


def run_sat(f: CnfFormula, p: int, q: int, seed: int = 0, mode=Mode.MONTE_CARLO, cross_check: bool = True) -> SatRunResult:
    return run_protocol(f, p, q, seed, mode, cross_check=cross_check)


@dataclass(frozen=True)
class TrialSummary:
    trials: int
    unsat_count: int
    seed: int
    first: SatRunResult = field(repr=False)

    @property
    def unsat_rate(self) -> float:
        return self.unsat_count / self.trials


def run_trials(f: CnfFormula, p: int, q: int, trials: int, seed: int = 0, mu: float = 0.0) -> TrialSummary:
    """Monte Carlo over seeds ``seed, seed+1, ...``; each trial is exactly one ``run_protocol`` call."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    first = run_protocol(f, p, q, seed, mu=mu)
    unsat = first.decision == "UNSAT"
    for t in range(1, trials):
        r = run_protocol(f, p, q, seed + t, mu=mu, gamma_trace=first.gamma_trace, s_true=first.s_true)
        unsat += r.decision == "UNSAT"
    return TrialSummary(trials, int(unsat), seed, first)


def binomial_sigma(prob: float, trials: int) -> float:
    return float(np.sqrt(prob * (1 - prob) / trials))
