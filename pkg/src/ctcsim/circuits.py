"""Circuit model over a register split into chronology-respecting and CTC qubits.

Text format, one statement per line, ``#`` comments::

    qubits <n_total> ctc <n_ctc>
    gate <NAME> <label>...
    gate PHASE(<theta>) <label>
    raw <k> <label>... <4**k complex entries, row-major, re+imj>

The CTC qubits are always the last ``n_ctc`` labels. Gates are listed in
temporal order.
"""

import enum
import re
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from .config import MAX_TOTAL_QUBITS
from .errors import CapacityError, CircuitParseError
from .qstate import check_unitary

_S2 = 1 / np.sqrt(2)

FIXED_GATES = {
    "I": np.eye(2),
    "X": np.array([[0, 1], [1, 0]]),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.diag([1, -1]),
    "H": np.array([[_S2, _S2], [_S2, -_S2]]),
    "S": np.diag([1, 1j]),
    "T": np.diag([1, np.exp(1j * np.pi / 4)]),
    # first label is the control
    "CNOT": np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]]),
    "CPHASE": np.diag([1, 1, 1, -1]),
    "SWAP": np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]]),
    "CROT": np.diag([1, 1, 1, 1j]),
}


def phase_matrix(theta: float) -> np.ndarray:
    return np.diag([1, np.exp(1j * theta)])


@dataclass(frozen=True)
class QubitRegister:
    n_total: int
    n_ctc: int

    def __post_init__(self):
        if self.n_total < 1:
            raise ValueError("a register needs at least one qubit")
        if not 0 <= self.n_ctc <= self.n_total:
            raise ValueError(f"n_ctc={self.n_ctc} must lie in [0, n_total={self.n_total}]")

    @property
    def n_cr(self) -> int:
        """Number of chronology-respecting qubits."""
        return self.n_total - self.n_ctc

    @property
    def ctc_labels(self) -> Tuple[int, ...]:
        return tuple(range(self.n_cr, self.n_total))

    @property
    def cr_labels(self) -> Tuple[int, ...]:
        return tuple(range(self.n_cr))


@dataclass(frozen=True, eq=False)
class Gate:
    name: str
    targets: Tuple[int, ...]
    matrix: np.ndarray = field(repr=False)
    theta: float = None

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        k = len(self.targets)
        if k not in (1, 2, 3):
            raise ValueError(f"gate {self.name} acts on {k} qubits; only 1-3 are supported")
        if len(set(self.targets)) != k:
            raise ValueError(f"gate {self.name} has repeated target labels {self.targets}")
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (2**k, 2**k):
            raise ValueError(f"gate {self.name} matrix shape {m.shape} does not fit {k} targets")
        object.__setattr__(self, "matrix", check_unitary(m, tol=1e-10))

    def __eq__(self, other):
        if not isinstance(other, Gate):
            return NotImplemented
        return (
            self.name == other.name
            and self.targets == other.targets
            and self.theta == other.theta
            and np.array_equal(self.matrix, other.matrix)
        )

    def __hash__(self):
        return hash((self.name, self.targets, self.theta))


def make_gate(name: str, *targets: int, theta: float = None, matrix=None) -> Gate:
    """Build a library gate (or a RAW gate when ``matrix`` is given)."""
    name = name.upper()
    if name == "RAW":
        if matrix is None:
            raise ValueError("RAW gates need an explicit matrix")
        return Gate("RAW", targets, matrix)
    if name == "PHASE":
        if theta is None:
            raise ValueError("PHASE needs an angle")
        return Gate("PHASE", targets, phase_matrix(theta), theta=float(theta))
    if name not in FIXED_GATES:
        raise ValueError(f"unknown gate {name!r}")
    m = FIXED_GATES[name]
    if m.shape[0] != 2 ** len(targets):
        raise ValueError(f"gate {name} takes {num_targets(name)} label(s), got {len(targets)}")
    return Gate(name, targets, m)


def num_targets(name: str) -> int:
    if name == "PHASE":
        return 1
    return FIXED_GATES[name].shape[0].bit_length() - 1


@dataclass(frozen=True)
class CtcCircuit:
    register: QubitRegister
    gates: Tuple[Gate, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        n = self.register.n_total
        for g in self.gates:
            bad = [t for t in g.targets if not 0 <= t < n]
            if bad:
                raise ValueError(f"gate {g.name} targets {bad} outside a {n}-qubit register")


def apply_gate(state: np.ndarray, gate: Gate, n_qubits: int) -> np.ndarray:
    """Left-multiply ``state`` (rows indexed by the register) by the embedded gate."""
    k = len(gate.targets)
    cols = state.shape[1]
    t = state.reshape((2,) * n_qubits + (cols,))
    g = gate.matrix.reshape((2,) * (2 * k))
    t = np.tensordot(g, t, axes=(list(range(k, 2 * k)), list(gate.targets)))
    t = np.moveaxis(t, list(range(k)), list(gate.targets))
    return t.reshape(2**n_qubits, cols)


def circuit_unitary(circuit: CtcCircuit, cap: int = MAX_TOTAL_QUBITS) -> np.ndarray:
    """Dense unitary of the whole circuit, earliest gate applied first."""
    n = circuit.register.n_total
    if n > cap:
        raise CapacityError(f"{n} qubits exceeds the dense cap of {cap}")
    u = np.eye(2**n, dtype=complex)
    for g in circuit.gates:
        u = apply_gate(u, g, n)
    u.flags.writeable = False
    return u


class PaperExample(enum.Enum):
    CPHASE_SWAP = "CPHASE_SWAP"
    CROT = "CROT"
    S_GATE = "S_GATE"


def paper_example(name) -> CtcCircuit:
    """The three two-qubit circuits: qubit 0 chronology-respecting, qubit 1 on the CTC."""
    name = PaperExample(name)
    gates = {
        PaperExample.CPHASE_SWAP: [make_gate("CPHASE", 0, 1), make_gate("SWAP", 0, 1)],
        PaperExample.CROT: [make_gate("CROT", 0, 1)],
        PaperExample.S_GATE: [make_gate("CNOT", 0, 1), make_gate("SWAP", 0, 1)],
    }[name]
    return CtcCircuit(QubitRegister(2, 1), gates)


_HEADER = re.compile(r"^qubits\s+(\S+)\s+ctc\s+(\S+)$")
_PHASE = re.compile(r"^PHASE\((.+)\)$", re.IGNORECASE)


def parse_complex(token: str) -> complex:
    try:
        return complex(token)
    except ValueError:
        raise ValueError(f"bad complex literal {token!r}") from None


def format_complex(z: complex) -> str:
    """``re+imj`` with shortest round-trip floats."""
    re_, im = float(z.real), float(z.imag)
    sign = "-" if np.signbit(im) else "+"
    return f"{re_!r}{sign}{abs(im)!r}j"


def _int(token: str, what: str, lineno: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise CircuitParseError(f"{what} must be an integer, got {token!r}", lineno) from None


def parse_circuit(text: str) -> CtcCircuit:
    register = None
    gates = []
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if register is None:
            m = _HEADER.match(line)
            if not m:
                raise CircuitParseError("missing header 'qubits <n> ctc <l>'", lineno)
            n_total = _int(m.group(1), "qubit count", lineno)
            n_ctc = _int(m.group(2), "ctc count", lineno)
            try:
                register = QubitRegister(n_total, n_ctc)
            except ValueError as exc:
                raise CircuitParseError(str(exc), lineno) from None
            continue
        tokens = line.split()
        kind = tokens[0]
        try:
            if kind == "gate":
                gate = _parse_gate(tokens[1:], lineno)
            elif kind == "raw":
                gate = _parse_raw(tokens[1:], lineno)
            else:
                raise CircuitParseError(f"unknown statement {kind!r}", lineno)
        except CircuitParseError:
            raise
        except ValueError as exc:
            raise CircuitParseError(str(exc), lineno) from None
        bad = [t for t in gate.targets if not 0 <= t < register.n_total]
        if bad:
            raise CircuitParseError(
                f"qubit label(s) {bad} out of range for a {register.n_total}-qubit register", lineno
            )
        gates.append(gate)
    if register is None:
        raise CircuitParseError("missing header 'qubits <n> ctc <l>'", 1)
    return CtcCircuit(register, gates)


def _parse_gate(tokens, lineno):
    if not tokens:
        raise CircuitParseError("gate statement needs a name", lineno)
    name, labels = tokens[0], tokens[1:]
    targets = [_int(t, "qubit label", lineno) for t in labels]
    m = _PHASE.match(name)
    if m:
        try:
            theta = float(m.group(1))
        except ValueError:
            raise CircuitParseError(f"bad PHASE angle {m.group(1)!r}", lineno) from None
        if len(targets) != 1:
            raise CircuitParseError(f"PHASE takes 1 label, got {len(targets)}", lineno)
        return make_gate("PHASE", *targets, theta=theta)
    name = name.upper()
    if name == "PHASE":
        raise CircuitParseError("PHASE needs an angle, e.g. PHASE(0.5)", lineno)
    if name not in FIXED_GATES:
        raise CircuitParseError(f"unknown gate name {tokens[0]!r}", lineno)
    if len(targets) != num_targets(name):
        raise CircuitParseError(f"{name} takes {num_targets(name)} label(s), got {len(targets)}", lineno)
    return make_gate(name, *targets)


def _parse_raw(tokens, lineno):
    if not tokens:
        raise CircuitParseError("raw statement needs an arity", lineno)
    k = _int(tokens[0], "raw arity", lineno)
    if k not in (1, 2, 3):
        raise CircuitParseError(f"raw arity must be 1, 2 or 3, got {k}", lineno)
    rest = tokens[1:]
    if len(rest) != k + 4**k:
        raise CircuitParseError(f"raw {k} needs {k} labels and {4**k} entries, got {len(rest)} tokens", lineno)
    targets = [_int(t, "qubit label", lineno) for t in rest[:k]]
    entries = [parse_complex(t) for t in rest[k:]]
    matrix = np.array(entries, dtype=complex).reshape(2**k, 2**k)
    return make_gate("RAW", *targets, matrix=matrix)


def serialize_circuit(circuit: CtcCircuit) -> str:
    reg = circuit.register
    lines = [f"qubits {reg.n_total} ctc {reg.n_ctc}"]
    for g in circuit.gates:
        labels = " ".join(str(t) for t in g.targets)
        if g.name == "RAW":
            entries = " ".join(format_complex(z) for z in g.matrix.ravel())
            lines.append(f"raw {len(g.targets)} {labels} {entries}")
        elif g.name == "PHASE":
            lines.append(f"gate PHASE({g.theta!r}) {labels}")
        else:
            lines.append(f"gate {g.name} {labels}")
    return "\n".join(lines) + "\n"
