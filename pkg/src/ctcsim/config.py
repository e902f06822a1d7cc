"""Numerical tolerances shared by the engine and the CLI."""

from dataclasses import dataclass

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
SYMMETRIZE_TOL = 1e-10
EIG_CLAMP = 1e-10
MAX_TOTAL_QUBITS = 12
MAX_CTC_QUBITS = 3


@dataclass(frozen=True)
class Tolerances:
    """Knobs for the fixed-point solver.

    ``fixed_point`` is both the eigenvalue-1 window of the Liouville matrix and
    the residual allowed for ``F(rho) = rho``; ``psd`` is how negative an
    eigenvalue may be before a matrix stops counting as positive semidefinite.
    """

    fixed_point: float = 1e-9
    psd: float = 1e-9
    cesaro_step: float = 1e-10
    cesaro_max_iter: int = 1_000_000

    def __post_init__(self):
        for name in ("fixed_point", "psd", "cesaro_step"):
            if not getattr(self, name) > 0:
                raise ValueError(f"tolerance {name} must be positive")
        if self.cesaro_max_iter < 1:
            raise ValueError("cesaro_max_iter must be at least 1")


DEFAULT_TOLERANCES = Tolerances()
