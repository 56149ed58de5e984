"""Parallel cross-correlation by amplitude estimation.

Four registers: ``var`` holds the shift j̄ in uniform superposition, ``A`` and ``B`` hold the
square-root encodings of the two arrays, and ``cor`` is the phase-estimation readout. The
Grover operator marks A - B = var (mod N), so for every j̄ the marked weight is
C_j̄ = sum_j x^A_{j̄+j} x^B_j, read out as sin^2(pi m / M).
"""

import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .encoding import ProbArray, amplitudes_from, index_reversed, log2, require_power_of_two
from .errors import ConfigError, LayoutError, PreconditionError
from .qae import (
    argmax_outcome,
    empirical_distribution,
    error_bound,
    estimate_from_m,
    grover_eigenpair,
    grover_operator as build_grover,
    phase_estimation,
    readout_dimension,
    theoretical_peak,
)
from .statevec import (
    ConditionalDistribution,
    Operator,
    RegisterLayout,
    StateVector,
    alloc_state,
    apply_hadamard_all,
    apply_qft,
    conditional_distribution,
    inject_amplitudes,
    marginal,
    predicate_mask,
    sample_measurement,
)

__all__ = [
    "COR",
    "DEFAULT_ALPHA",
    "MIN_SAMPLES_PER_BIN",
    "REG_A",
    "REG_B",
    "VAR",
    "CrossCorrConfig",
    "QAEOutcome",
    "build_layout",
    "crosscorr_eigenpair",
    "estimate_from_m",
    "estimated_correlation",
    "estimated_shift",
    "grover_Q",
    "grover_operator",
    "initialize",
    "run_convolution",
    "run_crosscorr",
    "theoretical_peak",
    "var_marginal",
]

logger = logging.getLogger(__name__)

VAR = "var"
REG_A = "A"
REG_B = "B"
COR = "cor"

DEFAULT_ALPHA = 16.0
MIN_SAMPLES_PER_BIN = 30

Mode = Literal["exact", "sampling"]


@dataclass(frozen=True)
class CrossCorrConfig:
    n: int
    m: int | None = None
    alpha: float = DEFAULT_ALPHA
    mode: Mode = "exact"
    shots: int = 1024
    seed: int = 0

    def __post_init__(self):
        try:
            require_power_of_two(self.n, "N")
            if self.m is not None:
                require_power_of_two(self.m, "M", minimum=4)
        except PreconditionError as e:
            raise ConfigError(str(e)) from e
        if not self.alpha > 0:
            raise ConfigError(f"alpha must be positive, got {self.alpha!r}")
        if self.mode not in ("exact", "sampling"):
            raise ConfigError(f"mode must be 'exact' or 'sampling', got {self.mode!r}")
        if self.shots < 1:
            raise ConfigError(f"shots must be at least 1, got {self.shots}")

    @property
    def readout_dim(self) -> int:
        if self.m is not None:
            return self.m
        return readout_dimension(math.sqrt(self.n), self.alpha)


@dataclass(frozen=True)
class QAEOutcome:
    j_bar: int
    distribution: ConditionalDistribution
    m_hat: int
    estimate: float
    theta_hat: float
    error_bound: float
    oracle_calls: int
    samples: int | None = None
    low_coverage: bool = False

    def peak_theory(self, c: float) -> tuple[float, float]:
        return theoretical_peak(c, self.distribution.probabilities.shape[0])


def build_layout(n: int, m: int) -> RegisterLayout:
    require_power_of_two(n, "N")
    require_power_of_two(m, "M", minimum=4)
    q = log2(n)
    return RegisterLayout.of((VAR, q), (REG_A, q), (REG_B, q), (COR, log2(m)))


def _check_arrays(a: ProbArray, b: ProbArray, layout: RegisterLayout) -> None:
    n = layout.dim(REG_A)
    if a.n != n or b.n != n:
        raise LayoutError(f"Arrays of length {a.n} and {b.n} do not fit registers of dimension {n}")


def initialize(a: ProbArray, b: ProbArray, layout: RegisterLayout) -> StateVector:
    """Load A and B, spread var uniformly and put cor in uniform superposition."""
    _check_arrays(a, b, layout)
    state = alloc_state(layout)
    state = inject_amplitudes(state, REG_A, amplitudes_from(a))
    state = inject_amplitudes(state, REG_B, amplitudes_from(b))
    state = apply_hadamard_all(state, VAR)
    return apply_qft(state, COR)


def correlation_predicate(n: int):
    def marked(values):
        return (values[REG_A] - values[REG_B]) % n == values[VAR]

    return marked


def grover_operator(layout: RegisterLayout, a: ProbArray, b: ProbArray) -> Operator:
    _check_arrays(a, b, layout)
    return build_grover(
        layout,
        correlation_predicate(layout.dim(VAR)),
        (VAR, REG_A, REG_B),
        ((REG_A, amplitudes_from(a)), (REG_B, amplitudes_from(b))),
        name="Q",
    )


def grover_Q(state: StateVector, a: ProbArray, b: ProbArray) -> StateVector:
    return grover_operator(state.layout, a, b).apply(state)


def crosscorr_eigenpair(
    a: ProbArray, b: ProbArray, j_bar: int, layout: RegisterLayout, sign: int = 1
) -> tuple[StateVector, complex, float]:
    """|j̄>|Psi±> with cor in |0>; raises PreconditionError when C_j̄ is 0 or 1."""
    _check_arrays(a, b, layout)
    n = layout.dim(VAR)
    if not 0 <= j_bar < n:
        raise PreconditionError(f"j_bar {j_bar} out of range for N={n}")
    shift = np.zeros(n, dtype=np.complex128)
    shift[j_bar] = 1.0
    state = alloc_state(layout)
    state = inject_amplitudes(state, VAR, shift)
    state = inject_amplitudes(state, REG_A, amplitudes_from(a))
    state = inject_amplitudes(state, REG_B, amplitudes_from(b))
    marked = predicate_mask(layout, correlation_predicate(n), (VAR, REG_A, REG_B))
    return grover_eigenpair(state, marked, sign)


def run_crosscorr(a: ProbArray, b: ProbArray, config: CrossCorrConfig) -> list[QAEOutcome]:
    """Run the full circuit and read one outcome per shift j̄."""
    if a.n != config.n or b.n != config.n:
        raise ConfigError(f"Config is for N={config.n}, arrays have lengths {a.n} and {b.n}")
    big_m = config.readout_dim
    layout = build_layout(config.n, big_m)
    logger.info(
        "Cross-correlation circuit: N=%d M=%d, %d qubits, %s mode",
        config.n,
        big_m,
        layout.total_qubits,
        config.mode,
    )

    state = initialize(a, b, layout)
    op = grover_operator(layout, a, b)
    state = phase_estimation(state, op, COR)
    logger.info("Applied Q %d times", op.invocations)

    if config.mode == "exact":
        return _exact_outcomes(state, big_m, op.invocations)
    return _sampled_outcomes(state, config, big_m, op.invocations)


def _outcome(j_bar, distribution, m_hat, big_m, calls, samples=None, low_coverage=False):
    estimate = estimate_from_m(m_hat, big_m)
    return QAEOutcome(
        j_bar=j_bar,
        distribution=distribution,
        m_hat=m_hat,
        estimate=estimate,
        theta_hat=math.pi * m_hat / big_m,
        error_bound=error_bound(estimate, big_m),
        oracle_calls=calls,
        samples=samples,
        low_coverage=low_coverage,
    )


def _exact_outcomes(state: StateVector, big_m: int, calls: int) -> list[QAEOutcome]:
    outcomes = []
    for j_bar in range(state.layout.dim(VAR)):
        distribution = conditional_distribution(state, COR, {VAR: j_bar})
        m_hat = argmax_outcome(distribution.probabilities)
        outcomes.append(_outcome(j_bar, distribution, m_hat, big_m, calls))
    return outcomes


def _sampled_outcomes(
    state: StateVector, config: CrossCorrConfig, big_m: int, calls: int
) -> list[QAEOutcome]:
    shots = sample_measurement(state, (VAR, COR), config.seed, config.shots)
    by_shift: dict[int, list[int]] = defaultdict(list)
    for j_bar, m in shots:
        by_shift[j_bar].append(m)

    outcomes = []
    for j_bar in range(config.n):
        probabilities, count = empirical_distribution(by_shift[j_bar], big_m)
        low = count < MIN_SAMPLES_PER_BIN
        if low:
            logger.warning("Shift %d received only %d samples", j_bar, count)
        distribution = ConditionalDistribution(
            ((VAR, j_bar),), COR, probabilities, count / config.shots
        )
        m_hat = argmax_outcome(probabilities)
        outcomes.append(_outcome(j_bar, distribution, m_hat, big_m, calls, count, low))
    return outcomes


def run_convolution(a: ProbArray, b: ProbArray, config: CrossCorrConfig) -> list[QAEOutcome]:
    """Circular convolution sum_i A_i B_{j-i}: the same circuit with B index-reversed."""
    return run_crosscorr(a, ProbArray(index_reversed(b.values)), config)


def estimated_correlation(outcomes: list[QAEOutcome]) -> np.ndarray:
    return np.array([o.estimate for o in sorted(outcomes, key=lambda o: o.j_bar)])


def estimated_shift(outcomes: list[QAEOutcome]) -> int:
    """Shift with the largest estimated correlation."""
    return max(outcomes, key=lambda o: (o.estimate, -o.j_bar)).j_bar


def var_marginal(state: StateVector) -> np.ndarray:
    """Born distribution of the var register (uniform throughout the circuit)."""
    return marginal(state, (VAR,))
