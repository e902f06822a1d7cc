"""Robustness of the S-amplification against a perturbed state preparation.

The noiseless ``s = 0`` state ``(I + sigma_z)/2`` is replaced by
``(I + (1 - mu) sigma_z)/2``. Everything that lives near 0 or 1 is handled as
a logarithm: ``(1 - 2^-100)^(2^10)`` is exactly 1.0 in naive floating point.
"""

import math
from dataclasses import dataclass
from typing import List, Tuple

from .sat import CnfFormula, SatRunResult, run_protocol


@dataclass(frozen=True)
class NoiseParams:
    mu: float
    b: float = 1.0
    c: float = 2.0

    def __post_init__(self):
        if not 0 <= self.mu <= 1:
            raise ValueError(f"mu must lie in [0, 1], got {self.mu}")
        if self.b <= 0 or self.c <= 0:
            raise ValueError("b and c must be positive")


def log_perturbed_gamma(mu: float, p: int) -> float:
    """``ln((1 - mu)^(2^p))``; ``-inf`` at ``mu = 1``."""
    if not 0 <= mu <= 1:
        raise ValueError(f"mu must lie in [0, 1], got {mu}")
    if mu == 1:
        return -math.inf
    return math.ldexp(math.log1p(-mu), p)


def perturbed_gamma(mu: float, p: int) -> float:
    return math.exp(log_perturbed_gamma(mu, p))


def perturbed_gamma_deficit(mu: float, p: int) -> float:
    """``1 - (1 - mu)^(2^p)`` without cancellation."""
    return -math.expm1(log_perturbed_gamma(mu, p))


def required_accuracy(n: int) -> float:
    """Probability gap ``2^-n`` that must survive error correction.

    It equals the trace distance between ``(I + sigma_z)/2`` and
    ``(I + (1 - 2^(1-n)) sigma_z)/2`` (see ``qstate.trace_distance``).
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    return math.ldexp(1.0, -n)


def _log_two_pow(x: float) -> float:
    return x * math.log(2)


@dataclass(frozen=True)
class BoundSample:
    """One mu sample of the chain ``(1-mu)^(2^n) >= exp(-r) >= 1 - r``, ``r = 2^n/(2^(n^c)+1)``.

    ``first_margin`` is ``ln r - ln(-ln (1-mu)^(2^n))``; ``second_margin`` is
    ``-r - ln(1 - r)``. Both are non-negative exactly when the inequality holds.
    The first test is strict: at ``mu = 2^-(n^c)`` the true margin is about
    ``-1.5 mu`` and can underflow to ``-0.0``; no grid sample sits on equality.
    """

    log_mu: float
    first_margin: float
    second_margin: float

    @property
    def mu(self) -> float:
        return math.exp(self.log_mu)

    @property
    def first_ok(self) -> bool:
        return self.first_margin > 0

    @property
    def second_ok(self) -> bool:
        return self.second_margin >= 0

    @property
    def passed(self) -> bool:
        return self.first_ok and self.second_ok


@dataclass(frozen=True)
class BoundReport:
    n: int
    b: float
    c: float
    samples: Tuple[BoundSample, ...]

    @property
    def n_passed(self) -> int:
        return sum(s.passed for s in self.samples)

    @property
    def all_passed(self) -> bool:
        return self.n_passed == len(self.samples)

    @property
    def worst_first_margin(self) -> float:
        return min(s.first_margin for s in self.samples)

    @property
    def worst_second_margin(self) -> float:
        return min(s.second_margin for s in self.samples)


def _sample_offsets(b: float, samples: int) -> List[float]:
    # ln(mu * 2^(n^c)) for a log-uniform grid on (b, 2b], lower end excluded
    return [math.log(b) + math.log(2) * k / samples for k in range(1, samples + 1)]


def log_mu_samples(n: int, b: float, c: float, samples: int) -> List[float]:
    """Natural logs of a log-uniform grid on ``(b/2^(n^c), 2b/2^(n^c)]``, lower end excluded."""
    return [off - _log_two_pow(n**c) for off in _sample_offsets(b, samples)]


def _log_h(log_mu: float) -> float:
    """``ln(-ln(1 - mu)/mu)``, which is ``mu/2 + 5 mu^2/24 + ...`` for small mu."""
    mu = math.exp(log_mu)
    if mu < 1e-5:
        return mu / 2 + 5 * mu * mu / 24
    if mu >= 1.0:
        return math.inf
    return math.log(-math.log1p(-mu) / mu)


def _exp_minus_linear_gap(r: float) -> float:
    """``-r - ln(1 - r)`` for ``0 <= r < 1`` without cancellation."""
    if r >= 1:
        return math.inf
    if r > 1e-4:
        return -r - math.log1p(-r)
    return r * r * (0.5 + r / 3 + r * r / 4)


def bound_check(n: int, b: float, c: float, samples: int = 100) -> BoundReport:
    """Test ``(1-mu)^(2^n) >= exp(-2^n/(2^(n^c)+1)) >= 1 - 2^n/(2^(n^c)+1)`` per mu sample.

    Writing ``mu = e^t / 2^(n^c)``, the first inequality is
    ``t + ln(-ln(1-mu)/mu) + log1p(2^-(n^c)) <= 0``; the ``2^n`` and
    ``2^(n^c)`` factors cancel exactly, so the test stays sharp even when
    ``mu`` is far below the smallest double.
    """
    if c <= 1:
        raise ValueError(f"bound_check requires c > 1, got c={c}")
    if n < 2:
        raise ValueError("bound_check requires n >= 2")
    if b <= 0 or samples < 1:
        raise ValueError("b and samples must be positive")
    nc = n**c
    tail = math.log1p(math.exp(-_log_two_pow(nc)))
    ratio = math.exp(_log_two_pow(n - nc) - tail)
    second = _exp_minus_linear_gap(ratio)
    out = []
    for off in _sample_offsets(b, samples):
        log_mu = off - _log_two_pow(nc)
        first = -(off + _log_h(log_mu) + tail)
        out.append(BoundSample(log_mu, first, second))
    return BoundReport(n, b, c, tuple(out))


def threshold_dichotomy(n: int) -> Tuple[bool, bool]:
    """With ``p = n``: large noise wipes out gamma, tiny noise leaves it near 1.

    Returns ``(gamma <= exp(-2^(n/2)) at mu = 2^(-n/2),
    gamma >= 1 - 2^-n at mu = 2^(-2n))`` checked in logs.
    """
    big = 2.0 ** (-n / 2)
    small = math.ldexp(1.0, -2 * n)
    high_ok = log_perturbed_gamma(big, n) <= -(2 ** (n / 2))
    low_ok = perturbed_gamma_deficit(small, n) <= math.ldexp(1.0, -n)
    return high_ok, low_ok


def perturbed_run(f: CnfFormula, mu: float, p: int, q: int, seed: int = 0, cross_check: bool = True) -> SatRunResult:
    """``run_sat`` with the prepared sigma_z component scaled by ``1 - mu``."""
    return run_protocol(f, p, q, seed, mu=mu, cross_check=cross_check)


def false_sat_probability(mu: float, p: int, q: int) -> float:
    """Chance an unsatisfiable instance is reported SAT under perturbation ``mu``."""
    stay = -0.5 * perturbed_gamma_deficit(mu, p)  # ln((1 + gamma)/2) = log1p(-(1 - gamma)/2)
    return -math.expm1(q * math.log1p(stay))


FAULT_TOLERANCE_NOTES = (
    "gate overhead to hold accuracy 2^-n: O(log(p(n) 2^n) p(n))",
    "gate overhead to hold accuracy 2^-(n^c): O(log(p(n)) n^c p(n))",
)
