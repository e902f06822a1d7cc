"""Self-consistent evolution of chronology-respecting qubits coupled to CTC qubits.

For a register split into A (chronology respecting, labels ``0..n-l-1``) and
B (CTC, the last ``l`` labels), the CTC state must be a fixed point of

    F(rho) = Tr_A[U (rho_in (x) rho) U^dag]

and the observable output is ``Tr_B[U (rho_in (x) rho) U^dag]`` at that fixed
point. ``F`` is stored as a Liouville matrix acting on row-major vectorised
operators: ``vec(X)[i*d + j] = X[i, j]``.
"""

import enum
import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .circuits import CtcCircuit, QubitRegister, circuit_unitary, paper_example
from .config import DEFAULT_TOLERANCES, MAX_CTC_QUBITS, MAX_TOTAL_QUBITS, Tolerances
from .errors import (
    AmbiguousEvolutionError,
    CapacityError,
    ConvergenceError,
    FixedPointError,
    NonPhysicalStateError,
)
from .qstate import (
    SIGMA_Z,
    bloch_to_density,
    check_density,
    density_to_bloch,
    hermitize,
    von_neumann_entropy,
)

log = logging.getLogger(__name__)


def _vec(m: np.ndarray) -> np.ndarray:
    return np.asarray(m).reshape(-1)


def _unvec(v: np.ndarray, d: int) -> np.ndarray:
    return np.asarray(v).reshape(d, d)


def _frozen(m):
    m = np.array(m, dtype=complex)
    m.flags.writeable = False
    return m


@dataclass(frozen=True, eq=False)
class Superoperator:
    """A linear map on ``dim_b x dim_b`` operators in Liouville form."""

    dim_b: int
    matrix: np.ndarray

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return _unvec(self.matrix @ _vec(rho), self.dim_b)

    def choi(self) -> np.ndarray:
        """Choi matrix ``sum_ij |i><j| (x) F(|i><j|)``."""
        d = self.dim_b
        t = self.matrix.reshape(d, d, d, d)  # [i', j', i, j]
        return t.transpose(2, 0, 3, 1).reshape(d * d, d * d)

    def trace_preservation_error(self) -> float:
        # Tr F(E_ij) must equal delta_ij for every matrix unit
        d = self.dim_b
        traces = np.einsum("aaij->ij", self.matrix.reshape(d, d, d, d))
        return float(np.max(np.abs(traces - np.eye(d))))

    def min_choi_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(hermitize(self.choi(), tol=1e-8))[0])

    def is_cptp(self, tol: Tolerances = DEFAULT_TOLERANCES) -> bool:
        return self.trace_preservation_error() <= 1e-10 and self.min_choi_eigenvalue() >= -tol.psd

    @classmethod
    def from_kraus(cls, kraus: Sequence[np.ndarray]) -> "Superoperator":
        kraus = [np.asarray(k, dtype=complex) for k in kraus]
        d = kraus[0].shape[0]
        # row-major vec(K X K^dag) = (K (x) conj K) vec(X)
        mat = sum(np.kron(k, k.conj()) for k in kraus)
        return cls(d, _frozen(mat))


def _split_unitary(u: np.ndarray, reg: QubitRegister) -> np.ndarray:
    da, db = 2**reg.n_cr, 2**reg.n_ctc
    return np.asarray(u, dtype=complex).reshape(da, db, da, db)


def _check_dims(u, rho_in, reg: QubitRegister):
    if reg.n_ctc < 1:
        raise ValueError("the register has no CTC qubits")
    if reg.n_ctc > MAX_CTC_QUBITS:
        raise CapacityError(f"{reg.n_ctc} CTC qubits exceeds the cap of {MAX_CTC_QUBITS}")
    if reg.n_total > MAX_TOTAL_QUBITS:
        raise CapacityError(f"{reg.n_total} qubits exceeds the dense cap of {MAX_TOTAL_QUBITS}")
    dim = 2**reg.n_total
    if np.shape(u) != (dim, dim):
        raise ValueError(f"unitary shape {np.shape(u)} does not match a {reg.n_total}-qubit register")
    da = 2**reg.n_cr
    if np.shape(rho_in) != (da, da):
        raise ValueError(f"rho_in shape {np.shape(rho_in)} does not match {reg.n_cr} chronology-respecting qubits")


def induced_map(u: np.ndarray, rho_in: np.ndarray, reg: QubitRegister) -> Superoperator:
    """The CTC channel ``rho -> Tr_A[U (rho_in (x) rho) U^dag]`` for fixed ``rho_in``."""
    _check_dims(u, rho_in, reg)
    t = _split_unitary(u, reg)  # [a', b', a, b]
    rho_in = np.asarray(rho_in, dtype=complex)
    m = np.einsum("pqab,ac->pqbc", t, rho_in)
    lv = np.einsum("pqbc,prcs->qrbs", m, t.conj())  # [b1', b2', b1, b2]
    db = 2**reg.n_ctc
    return Superoperator(db, _frozen(lv.reshape(db * db, db * db)))


def output_map(u: np.ndarray, rho_in: np.ndarray, reg: QubitRegister) -> np.ndarray:
    """Liouville matrix of the affine-free map ``rho_ctc -> rho_out`` (A-operators from B-operators)."""
    _check_dims(u, rho_in, reg)
    t = _split_unitary(u, reg)
    m = np.einsum("pqab,ac->pqbc", t, np.asarray(rho_in, dtype=complex))
    g = np.einsum("pqbc,rqcs->prbs", m, t.conj())  # [a1', a2', b1, b2]
    da, db = 2**reg.n_cr, 2**reg.n_ctc
    return g.reshape(da * da, db * db)


def output_state(u, rho_in, rho_ctc, reg: QubitRegister) -> np.ndarray:
    g = output_map(u, rho_in, reg)
    da = 2**reg.n_cr
    return _unvec(g @ _vec(rho_ctc), da)


@dataclass(frozen=True, eq=False)
class FixedPointSet:
    """All density-matrix fixed points: ``base + sum_i x_i directions[i]``, PSD.

    Directions are traceless Hermitian and orthogonal with ``Tr(D_i D_j) =
    delta_ij / 2`` so a single-qubit coordinate equals a Bloch component.
    ``box_bounds[i]`` is the interval of ``x_i`` (others zero) that keeps the
    matrix PSD.
    """

    base: np.ndarray
    directions: Tuple[np.ndarray, ...]
    box_bounds: Tuple[Tuple[float, float], ...]
    superop: Superoperator
    # spectral projector onto the eigenvalue-1 eigenspace, acting on vec(rho)
    projector: Optional[np.ndarray] = None

    @property
    def multiplicity(self) -> int:
        return len(self.directions)

    def point(self, x: Sequence[float]) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.multiplicity,):
            raise ValueError(f"expected {self.multiplicity} coordinates, got {x.shape}")
        rho = np.array(self.base)
        for xi, d in zip(x, self.directions):
            rho = rho + xi * d
        return rho


def _hermitian_real(m: np.ndarray) -> np.ndarray:
    return np.concatenate([m.real.ravel(), m.imag.ravel()])


def _real_hermitian(v: np.ndarray, d: int) -> np.ndarray:
    return (v[: d * d] + 1j * v[d * d :]).reshape(d, d)


def _orthonormal_span(vectors, rank: int) -> np.ndarray:
    """Columns: an orthonormal basis for the top-``rank`` span of ``vectors``."""
    if rank == 0:
        return np.zeros((len(vectors[0]) if vectors else 0, 0))
    m = np.stack(vectors, axis=1)
    u, _, _ = np.linalg.svd(m, full_matrices=False)
    return u[:, :rank]


def _canonical_sign(d: np.ndarray) -> np.ndarray:
    flat = _hermitian_real(d)
    idx = np.flatnonzero(np.abs(flat) > 1e-9)
    return -d if idx.size and flat[idx[0]] < 0 else d


def _min_eig(m: np.ndarray) -> float:
    return float(np.linalg.eigvalsh((m + m.conj().T) / 2)[0])


# roundoff floor for eigenvalues of matrices that sit on a face of the PSD cone
_EIG_FLOOR = -1e-13


def _psd_bound(base, direction, sign, tol) -> float:
    """Largest ``t >= 0`` (to ~1e-12) with ``base + sign*t*direction`` PSD."""
    if _min_eig(base + sign * 1e-12 * direction) < -tol:
        return 0.0
    hi = 1.0
    while _min_eig(base + sign * hi * direction) >= _EIG_FLOOR:
        hi *= 2
        if hi > 1e6:
            raise FixedPointError("fixed-point set appears unbounded; map is not trace preserving")
    lo = 0.0
    while hi - lo > 1e-12:
        mid = 0.5 * (lo + hi)
        if _min_eig(base + sign * mid * direction) >= _EIG_FLOOR:
            lo = mid
        else:
            hi = mid
    return lo


def fixed_point_set(superop: Superoperator, tol: Tolerances = DEFAULT_TOLERANCES) -> FixedPointSet:
    """Parameterise every density-matrix solution of ``F(rho) = rho``.

    The eigenvalue-1 multiplicity comes from the spectrum of the Liouville
    matrix; a numerically stable basis of that eigenspace comes from the
    smallest singular vectors of ``L - I``. The base point is the spectral
    projection of the maximally mixed state onto the eigenspace, which is the
    limit of Cesaro averages of its orbit and hence a density matrix.
    """
    d = superop.dim_b
    lmat = np.asarray(superop.matrix)
    n2 = d * d
    evals = np.linalg.eigvals(lmat)
    k = int(np.sum(np.abs(evals - 1) <= tol.fixed_point))
    if k == 0:
        raise FixedPointError(
            f"no eigenvalue within {tol.fixed_point:g} of 1 (closest is {evals[np.argmin(np.abs(evals - 1))]!r})"
        )
    u, s, vh = np.linalg.svd(lmat - np.eye(n2))
    right = vh[n2 - k :].conj().T
    left = u[:, n2 - k :]
    overlap = left.conj().T @ right
    proj = right @ np.linalg.solve(overlap, left.conj().T)

    base = _unvec(proj @ _vec(np.eye(d) / d), d)
    base = hermitize(base, tol=1e-8)
    base = base / np.trace(base).real
    residual = np.max(np.abs(superop.apply(base) - base))
    if residual > tol.fixed_point:
        raise FixedPointError(f"base point residual {residual:.3e} exceeds {tol.fixed_point:g}")
    if _min_eig(base) < -tol.psd:
        raise FixedPointError(f"base point is not PSD (min eigenvalue {_min_eig(base):.3e})")

    herm = []
    for j in range(k):
        x = _unvec(right[:, j], d)
        herm.append(_hermitian_real((x + x.conj().T) / 2))
        herm.append(_hermitian_real((x - x.conj().T) / 2j))
    herm_basis = _orthonormal_span(herm, k)
    traceless = []
    for j in range(k):
        h = _real_hermitian(herm_basis[:, j], d)
        traceless.append(_hermitian_real(h - np.trace(h).real * base))
    dir_basis = _orthonormal_span(traceless, k - 1)

    directions = []
    for j in range(k - 1):
        dmat = _real_hermitian(dir_basis[:, j], d) / np.sqrt(2)
        dmat = _canonical_sign((dmat + dmat.conj().T) / 2)
        res = np.max(np.abs(superop.apply(dmat) - dmat))
        if res > tol.fixed_point:
            raise FixedPointError(f"direction {j} residual {res:.3e} exceeds {tol.fixed_point:g}")
        directions.append(_frozen(dmat))

    bounds = tuple(
        (-_psd_bound(base, dm, -1, tol.psd), _psd_bound(base, dm, +1, tol.psd)) for dm in directions
    )
    return FixedPointSet(_frozen(base), tuple(directions), bounds, superop, _frozen(proj))


class Policy(enum.Enum):
    MAX_ENTROPY = "MAX_ENTROPY"
    CESARO = "CESARO"
    EXPLICIT = "EXPLICIT"


def _log_on_support(rho: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(rho)
    logw = np.where(w > 1e-13, np.log(np.clip(w, 1e-300, None)), 0.0)
    return (v * logw) @ v.conj().T


def max_entropy_point(fps: FixedPointSet, max_iter: int = 100_000) -> np.ndarray:
    """Entropy maximiser over the fixed-point set by projected gradient ascent.

    Coordinates are taken along the orthogonal directions, so the Euclidean
    gradient in ``x`` is the projection of ``-(ln rho + I)`` onto the set's
    tangent space. Steps that leave the PSD cone or fail to increase the
    entropy are halved; successful ones double.
    """
    if fps.multiplicity == 0:
        return np.array(fps.base)
    dirs = np.stack(fps.directions)
    x = np.zeros(fps.multiplicity)
    rho = fps.point(x)
    ent = von_neumann_entropy(rho)
    step = 1.0
    for _ in range(max_iter):
        logm = _log_on_support(rho)
        grad = -np.real(np.einsum("ij,kji->k", logm, dirs))
        if np.linalg.norm(grad) < 1e-14:
            break
        while step > 1e-18:
            x_new = x + step * grad
            rho_new = fps.point(x_new)
            if _min_eig(rho_new) < _EIG_FLOOR:
                step /= 2
                continue
            ent_new = von_neumann_entropy(rho_new)
            if ent_new <= ent:
                step /= 2
                continue
            break
        else:
            break
        gain = ent_new - ent
        x, rho, ent = x_new, rho_new, ent_new
        step = min(step * 2, 1e3)
        if gain < 1e-12:
            break
    else:
        log.warning("max-entropy ascent hit max_iter=%d", max_iter)
    return rho


def cesaro_point(fps: FixedPointSet, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """Running average of ``F^k(I/d)`` until successive averages agree to ``tol.cesaro_step``.

    The average approaches its limit like ``1/N`` while the increments shrink
    like ``1/N^2``, so the stopped average can sit well outside
    ``tol.fixed_point``. Since ``P F = P`` for the spectral projector ``P``,
    applying ``P`` to any running average gives the limit itself; that is done
    whenever the residual is too large.
    """
    sop = fps.superop
    d = sop.dim_b
    lmat = np.asarray(sop.matrix)
    x = _vec(np.eye(d, dtype=complex) / d)
    avg = x.copy()
    for n in range(1, tol.cesaro_max_iter + 1):
        x = lmat @ x
        new_avg = avg + (x - avg) / (n + 1)
        if np.max(np.abs(new_avg - avg)) < tol.cesaro_step:
            avg = new_avg
            break
        avg = new_avg
    else:
        raise ConvergenceError(f"Cesaro average did not settle within {tol.cesaro_max_iter} iterations")
    rho = hermitize(_unvec(avg, d), tol=1e-8)
    if np.max(np.abs(sop.apply(rho) - rho)) > tol.fixed_point:
        if fps.projector is not None:
            rho = hermitize(_unvec(np.asarray(fps.projector) @ avg, d), tol=1e-8)
        else:
            delta = rho - fps.base
            rho = fps.point([2 * np.real(np.trace(delta @ dm)) for dm in fps.directions])
    return rho


def select_fixed_point(
    fps: FixedPointSet,
    policy=Policy.MAX_ENTROPY,
    coords: Optional[Sequence[float]] = None,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> np.ndarray:
    policy = Policy(policy)
    if policy is Policy.EXPLICIT:
        if coords is None:
            raise ValueError("EXPLICIT policy needs coordinates")
        rho = fps.point(coords)
        lmin = _min_eig(rho)
        if lmin < -tol.psd:
            raise NonPhysicalStateError(f"explicit fixed point is not PSD (min eigenvalue {lmin:.3e})")
    elif fps.multiplicity == 0:
        rho = np.array(fps.base)
    elif policy is Policy.MAX_ENTROPY:
        rho = max_entropy_point(fps)
    else:
        rho = cesaro_point(fps, tol)
    return _frozen(hermitize(rho, tol=1e-8))


@dataclass(frozen=True, eq=False)
class CtcResult:
    rho_out: np.ndarray
    rho_ctc: np.ndarray
    multiplicity: int
    policy_used: Policy
    output_ambiguous: bool
    fixed_points: FixedPointSet


def evolve_unitary(
    u: np.ndarray,
    rho_in: np.ndarray,
    reg: QubitRegister,
    policy=Policy.MAX_ENTROPY,
    coords=None,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> CtcResult:
    rho_in = check_density(rho_in)
    sop = induced_map(u, rho_in, reg)
    fps = fixed_point_set(sop, tol)
    rho_ctc = select_fixed_point(fps, policy, coords, tol)
    g = output_map(u, rho_in, reg)
    da = 2**reg.n_cr

    def out(r):
        return _unvec(g @ _vec(r), da)

    rho_out = hermitize(out(rho_ctc), tol=1e-8)
    ambiguous = False
    if fps.multiplicity:
        ref = out(fps.base)
        for dm, (lo, hi) in zip(fps.directions, fps.box_bounds):
            for t in (lo, hi):
                if np.max(np.abs(out(fps.base + t * dm) - ref)) > tol.fixed_point:
                    ambiguous = True
    return CtcResult(
        rho_out=_frozen(rho_out),
        rho_ctc=rho_ctc,
        multiplicity=fps.multiplicity,
        policy_used=Policy(policy),
        output_ambiguous=ambiguous,
        fixed_points=fps,
    )


def ctc_evolve(
    circuit: CtcCircuit,
    rho_in: np.ndarray,
    policy=Policy.MAX_ENTROPY,
    coords=None,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> CtcResult:
    """Run a circuit: solve the consistency condition, then read off the output."""
    u = circuit_unitary(circuit)
    return evolve_unitary(u, rho_in, circuit.register, policy, coords, tol)


class SBackend(enum.Enum):
    CLOSED_FORM = "CLOSED_FORM"
    FULL_SOLVE = "FULL_SOLVE"


_S_CIRCUIT = paper_example("S_GATE")
_S_UNITARY = circuit_unitary(_S_CIRCUIT)


def apply_s(rho: np.ndarray, backend=SBackend.CLOSED_FORM, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """The squaring map ``(I + n.sigma)/2 -> (I + n_z^2 sigma_z)/2``.

    Undefined when ``n_x = 1``: there the CTC qubit is unconstrained and an
    :class:`AmbiguousEvolutionError` is raised.
    """
    backend = SBackend(backend)
    nx, _, nz = density_to_bloch(rho)
    if abs(nx - 1) <= tol.fixed_point:
        fps = fixed_point_set(induced_map(_S_UNITARY, rho, _S_CIRCUIT.register), tol)
        raise AmbiguousEvolutionError("S is undefined for n_x = 1", fps.multiplicity)
    if backend is SBackend.CLOSED_FORM:
        return bloch_to_density((0.0, 0.0, nz * nz))
    return evolve_unitary(_S_UNITARY, rho, _S_CIRCUIT.register, tol=tol).rho_out


def _on_ctc(v: np.ndarray, reg: QubitRegister) -> np.ndarray:
    return np.kron(np.eye(2**reg.n_cr), v)


@dataclass(frozen=True)
class OriginCheck:
    deviation: float
    basis_change_residual: Optional[float]
    multiplicity_first: int
    multiplicity_second: int
    selections_agree: bool


def temporal_origin_check(u0, v1, v2, rho_in, reg: QubitRegister, tol: Tolerances = DEFAULT_TOLERANCES) -> OriginCheck:
    """Compare outputs when the consistency condition is imposed before and after ``V1``.

    First placement: ``U = (I (x) V2 V1) U0``. Shifted placement:
    ``U' = (I (x) V1) U0 (I (x) V2)``. When both fixed points are unique the
    second must equal ``V2^dag rho_1 V2``; with multiplicity the max-entropy
    selections are compared and any disagreement is reported, not raised.
    """
    v1 = np.asarray(v1, dtype=complex)
    v2 = np.asarray(v2, dtype=complex)
    u0 = np.asarray(u0, dtype=complex)
    first = _on_ctc(v2 @ v1, reg) @ u0
    second = _on_ctc(v1, reg) @ u0 @ _on_ctc(v2, reg)
    r1 = evolve_unitary(first, rho_in, reg, tol=tol)
    r2 = evolve_unitary(second, rho_in, reg, tol=tol)
    deviation = float(np.max(np.abs(r1.rho_out - r2.rho_out)))
    rotated = v2.conj().T @ r1.rho_ctc @ v2
    basis_res = float(np.max(np.abs(rotated - r2.rho_ctc)))
    unique = r1.multiplicity == 0 and r2.multiplicity == 0
    agree = deviation <= 1e-10 and basis_res <= tol.fixed_point
    if not unique and not agree:
        log.info("max-entropy selections disagree across temporal origins (deviation %.3e)", deviation)
    return OriginCheck(
        deviation=deviation,
        basis_change_residual=basis_res if unique else None,
        multiplicity_first=r1.multiplicity,
        multiplicity_second=r2.multiplicity,
        selections_agree=agree,
    )


def sigma_z_direction_overlap(direction: np.ndarray) -> float:
    """``|<D, sigma_z/2>| / (|D| |sigma_z/2|)`` for a single-qubit direction."""
    ref = SIGMA_Z / 2
    num = abs(np.trace(direction @ ref))
    return float(num / (np.linalg.norm(direction) * np.linalg.norm(ref)))
