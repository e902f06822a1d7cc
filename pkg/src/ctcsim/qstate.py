"""Density matrices, Bloch vectors and the linear algebra around them.

States are plain complex ``numpy`` arrays. Functions that build or return a
state hand back a read-only array so values can be shared freely. Qubit 0 is
the most significant tensor factor everywhere: in ``|ab>`` the label-0 qubit
is ``a``.
"""

from typing import Iterable, Sequence, Tuple

import numpy as np

from .config import EIG_CLAMP, HERMITIAN_TOL, MAX_TOTAL_QUBITS, SYMMETRIZE_TOL, TRACE_TOL
from .errors import CapacityError, NonPhysicalStateError

I2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.flags.writeable = False
    return a


def num_qubits(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim < 1 or 2**n != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    return n


def hermitize(m: np.ndarray, tol: float = SYMMETRIZE_TOL) -> np.ndarray:
    """Return ``(m + m^dagger)/2``, refusing if ``m`` is far from Hermitian.

    Asymmetry below ``tol`` is treated as roundoff; anything larger points at a
    logic error upstream and raises.
    """
    m = np.asarray(m, dtype=complex)
    asym = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
    if asym > tol:
        raise NonPhysicalStateError(f"matrix is not Hermitian (asymmetry {asym:.3e})")
    return (m + m.conj().T) / 2


def check_density(rho, psd_tol: float = EIG_CLAMP) -> np.ndarray:
    """Validate ``rho`` as a density matrix and return a frozen Hermitian copy."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise NonPhysicalStateError(f"density matrix must be square, got shape {rho.shape}")
    num_qubits(rho.shape[0])
    rho = hermitize(rho)
    tr = np.trace(rho).real
    if abs(tr - 1) > TRACE_TOL * max(1, rho.shape[0]):
        raise NonPhysicalStateError(f"trace is {tr!r}, expected 1")
    lmin = np.linalg.eigvalsh(rho)[0]
    if lmin < -psd_tol:
        raise NonPhysicalStateError(f"matrix is not positive semidefinite (min eigenvalue {lmin:.3e})")
    return _frozen(rho)


def is_density(rho, psd_tol: float = EIG_CLAMP) -> bool:
    try:
        check_density(rho, psd_tol)
    except NonPhysicalStateError:
        return False
    return True


def check_unitary(u, tol: float = HERMITIAN_TOL) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ValueError(f"unitary must be square, got shape {u.shape}")
    err = np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])))
    if err > tol:
        raise ValueError(f"matrix is not unitary (max |U^dag U - I| = {err:.3e})")
    return _frozen(u)


def bloch_to_density(n: Sequence[float]) -> np.ndarray:
    """Single-qubit state ``(I + n.sigma)/2``.

    >>> bloch_to_density((0, 0, 1)).real
    array([[1., 0.],
           [0., 0.]])
    """
    nx, ny, nz = (float(v) for v in n)
    norm = np.sqrt(nx * nx + ny * ny + nz * nz)
    if norm > 1 + 1e-12:
        raise NonPhysicalStateError(f"Bloch vector has norm {norm!r} > 1")
    return _frozen(0.5 * (I2 + nx * SIGMA_X + ny * SIGMA_Y + nz * SIGMA_Z))


def density_to_bloch(rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise ValueError(f"Bloch vectors exist only for single qubits, got shape {rho.shape}")
    comps = [np.trace(rho @ s) for s in PAULIS]
    for c in comps:
        if abs(c.imag) > 1e-12:
            raise NonPhysicalStateError("Bloch component has a non-negligible imaginary part")
    return np.array([c.real for c in comps])


def basis_state(bits: str) -> np.ndarray:
    """Computational basis projector ``|bits><bits|``; ``bits[0]`` is qubit 0."""
    if not bits or any(b not in "01" for b in bits):
        raise ValueError(f"invalid bitstring {bits!r}")
    dim = 2 ** len(bits)
    rho = np.zeros((dim, dim), dtype=complex)
    idx = int(bits, 2)
    rho[idx, idx] = 1
    return _frozen(rho)


def maximally_mixed(dim: int) -> np.ndarray:
    return _frozen(np.eye(dim, dtype=complex) / dim)


def tensor(*states) -> np.ndarray:
    """Kronecker product; earlier arguments are the more significant qubits."""
    out = np.ones((1, 1), dtype=complex)
    for s in states:
        out = np.kron(out, np.asarray(s, dtype=complex))
    return _frozen(out)


def partial_trace(rho, keep: Iterable[int], n_qubits: int = None) -> np.ndarray:
    """Reduced state on the qubit labels in ``keep`` (returned in ascending label order)."""
    rho = np.asarray(rho, dtype=complex)
    n = num_qubits(rho.shape[0]) if n_qubits is None else n_qubits
    if rho.shape != (2**n, 2**n):
        raise ValueError(f"matrix of shape {rho.shape} does not match a {n}-qubit register")
    keep = sorted(set(int(k) for k in keep))
    bad = [k for k in keep if not 0 <= k < n]
    if bad:
        raise ValueError(f"unknown qubit labels {bad} for a {n}-qubit register")
    drop = [q for q in range(n) if q not in keep]
    t = rho.reshape((2,) * (2 * n))
    # trace pairs from the highest label down so earlier axis numbers stay valid
    for q in reversed(drop):
        m = t.ndim // 2
        t = np.trace(t, axis1=q, axis2=q + m)
    d = 2 ** len(keep)
    return _frozen(t.reshape(d, d))


def trace_distance(a, b) -> float:
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    evals = np.linalg.eigvalsh(hermitize(a - b))
    return float(0.5 * np.sum(np.abs(evals)))


def von_neumann_entropy(rho) -> float:
    """Entropy ``-Tr rho ln rho`` in nats."""
    evals = np.linalg.eigvalsh(hermitize(rho))
    evals = np.where((evals < 0) & (evals >= -EIG_CLAMP), 0.0, evals)
    evals = evals[evals > 0]
    return float(-np.sum(evals * np.log(evals)))


def measure_z_probability(rho, qubit: int) -> Tuple[float, float]:
    """Outcome probabilities ``(p(+1), p(-1))`` of a sigma_z measurement on ``qubit``."""
    rho = np.asarray(rho, dtype=complex)
    n = num_qubits(rho.shape[0])
    if not 0 <= qubit < n:
        raise ValueError(f"unknown qubit label {qubit} for a {n}-qubit register")
    diag = np.real(np.diag(rho)).reshape((2,) * n)
    p_plus = float(np.take(diag, 0, axis=qubit).sum())
    p_plus = min(max(p_plus, 0.0), 1.0)
    return p_plus, 1.0 - p_plus


def check_register_size(n_qubits: int, cap: int = MAX_TOTAL_QUBITS) -> None:
    if n_qubits > cap:
        raise CapacityError(f"{n_qubits} qubits exceeds the dense cap of {cap}")
