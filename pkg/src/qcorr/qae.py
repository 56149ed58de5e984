"""Amplitude-estimation pieces shared by the cross-correlation and EMML circuits."""

import math
from collections.abc import Iterable, Sequence

import numpy as np
from numpy.typing import ArrayLike

from .errors import PreconditionError
from .statevec import (
    Operator,
    Predicate,
    RegisterLayout,
    StateVector,
    apply_qft,
    controlled_power,
    predicate_mask,
    product_reflection,
)

MIN_READOUT_DIM = 4
EIGEN_TOL = 1e-12


def readout_dimension(scale: float, alpha: float) -> int:
    """Smallest power of 2 that is at least ``alpha * scale`` (and at least 4)."""
    target = alpha * scale
    m = MIN_READOUT_DIM
    while m < target:
        m <<= 1
    return m


def estimate_from_m(m: int, big_m: int) -> float:
    if not 0 <= m < big_m:
        raise PreconditionError(f"Outcome {m} out of range for readout dimension {big_m}")
    return math.sin(math.pi * m / big_m) ** 2


def theoretical_peak(c: float, big_m: int) -> tuple[float, float]:
    """Readout positions M*theta/pi and M*(1 - theta/pi) for sin^2(theta) = c."""
    if not 0.0 <= c <= 1.0:
        raise PreconditionError(f"Amplitude {c!r} outside [0, 1]")
    theta = math.asin(math.sqrt(c))
    return big_m * theta / math.pi, big_m * (1.0 - theta / math.pi)


def error_bound(estimate: float, big_m: int) -> float:
    """2 pi sqrt(c(1-c))/M + pi^2/M^2, the usual amplitude-estimation accuracy."""
    c = min(max(estimate, 0.0), 1.0)
    return 2.0 * math.pi * math.sqrt(c * (1.0 - c)) / big_m + math.pi**2 / big_m**2


def argmax_outcome(probabilities: ArrayLike) -> int:
    # ties resolve to the lower index, i.e. the m <= M/2 member of each mirror pair
    return int(np.argmax(np.asarray(probabilities)))


def empirical_distribution(outcomes: Iterable[int], big_m: int) -> tuple[np.ndarray, int]:
    counts = np.bincount(np.fromiter(outcomes, dtype=np.int64), minlength=big_m)
    total = int(counts.sum())
    if total == 0:
        return np.zeros(big_m), 0
    return counts / total, total


def grover_operator(
    layout: RegisterLayout,
    predicate: Predicate,
    predicate_registers: Sequence[str],
    factors: Sequence[tuple[str, ArrayLike]],
    name: str,
) -> Operator:
    """-(I - 2|psi><psi|)(I - 2P): marked-subspace flip, then reflection about psi.

    The global -1 puts the eigenphases at +-2 theta with sin^2(theta) the marked weight of
    psi; without it every controlled power picks up an extra (-1)^m.
    """
    signs = np.where(predicate_mask(layout, predicate, predicate_registers), -1.0, 1.0)
    reflect = product_reflection(layout, factors)

    def action(tensor: np.ndarray) -> np.ndarray:
        return -reflect(tensor * signs)

    registers = set(predicate_registers) | {register for register, _ in factors}
    return Operator(name, registers, action)


def phase_estimation(state: StateVector, op: Operator, readout: str) -> StateVector:
    """Controlled powers of ``op`` over ``readout`` followed by the inverse QFT."""
    state = controlled_power(state, op, readout)
    return apply_qft(state, readout, inverse=True)


def grover_eigenpair(
    prepared: StateVector, marked: np.ndarray, sign: int = 1
) -> tuple[StateVector, complex, float]:
    """Eigenvector (P psi/sqrt(a) + sign*i (1-P) psi/sqrt(1-a))/sqrt(2) and its eigenvalue.

    ``marked`` must broadcast against the state tensor. Undefined when a is 0 or 1.
    """
    if sign not in (1, -1):
        raise PreconditionError(f"sign must be +1 or -1, got {sign}")
    layout = prepared.layout
    mask = np.broadcast_to(np.asarray(marked, dtype=bool), layout.shape).reshape(-1)
    psi = prepared.amplitudes
    good = np.where(mask, psi, 0.0)
    bad = psi - good
    a = float(np.vdot(good, good).real)
    if a <= EIGEN_TOL or a >= 1.0 - EIGEN_TOL:
        raise PreconditionError(f"Eigenpair undefined for marked weight {a!r}")
    vector = (good / math.sqrt(a) + sign * 1j * bad / math.sqrt(1.0 - a)) / math.sqrt(2.0)
    eigenvalue = complex(np.exp(sign * 2j * math.asin(math.sqrt(a))))
    return StateVector(layout, vector), eigenvalue, a
