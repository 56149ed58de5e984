"""EMML pixel updates by amplitude estimation, and the iteration loop around them.

Each pixel (j, k) of each data array gets its own circuit: ``templ`` holds the template,
``C1`` the data array, ``C2`` the data array cyclically shifted by (j, k), and ``new`` is the
readout. Registers hold 2D indices packed as row * N + col. The marked weight is the
translation-model update x^{t+1}_{j,k}.
"""

import logging
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .encoding import (
    ProbArray2D,
    amplitudes_from,
    cyclic_shift_2d,
    log2,
    require_power_of_two,
)
from .errors import ConfigError, LayoutError, PreconditionError
from .qae import (
    argmax_outcome,
    empirical_distribution,
    error_bound,
    estimate_from_m,
    grover_eigenpair,
    grover_operator,
    phase_estimation,
    readout_dimension,
)
from .statevec import (
    ConditionalDistribution,
    Operator,
    RegisterLayout,
    StateVector,
    alloc_state,
    apply_qft,
    conditional_distribution,
    inject_amplitudes,
    predicate_mask,
    sample_measurement,
)

logger = logging.getLogger(__name__)

TEMPL = "templ"
COPY1 = "C1"
COPY2 = "C2"
NEW = "new"

DEFAULT_ALPHA = 16.0


@dataclass(frozen=True)
class EmmlConfig:
    n: int
    m: int | None = None
    alpha: float = DEFAULT_ALPHA
    mode: Literal["exact", "sampling"] = "exact"
    shots: int = 1024
    seed: int = 0
    max_iterations: int = 10
    convergence_tol: float = 1e-6
    workers: int = 1

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
        if self.max_iterations < 1:
            raise ConfigError(f"max_iterations must be at least 1, got {self.max_iterations}")
        if not self.convergence_tol > 0:
            raise ConfigError(f"convergence_tol must be positive, got {self.convergence_tol!r}")
        if self.workers < 1:
            raise ConfigError(f"workers must be at least 1, got {self.workers}")

    @property
    def readout_dim(self) -> int:
        if self.m is not None:
            return self.m
        return readout_dimension(self.n, self.alpha)


def average_template(arrays: Sequence[ProbArray2D]) -> ProbArray2D:
    """Per-pixel mean of the data arrays, renormalized to unit sum."""
    mean = np.mean([x.values for x in arrays], axis=0)
    return ProbArray2D(mean / mean.sum())


@dataclass(frozen=True)
class EmmlState:
    template: ProbArray2D
    data: tuple[ProbArray2D, ...]
    t: int = 0

    def __post_init__(self):
        object.__setattr__(self, "data", tuple(self.data))
        if not self.data:
            raise PreconditionError("EMML needs at least one data array")
        shapes = {x.values.shape for x in self.data} | {self.template.values.shape}
        if len(shapes) != 1:
            raise LayoutError(f"Template and data arrays differ in shape: {sorted(shapes)}")

    @classmethod
    def from_arrays(cls, arrays: Sequence[ProbArray2D]) -> "EmmlState":
        if not arrays:
            raise PreconditionError("EMML needs at least one data array")
        return cls(average_template(arrays), tuple(arrays), 0)

    @property
    def n(self) -> int:
        return self.template.n


@dataclass(frozen=True)
class PixelEstimate:
    j: int
    k: int
    m_hat: int  # readout outcome Theta
    value: float
    error_bound: float
    oracle_calls: int
    distribution: ConditionalDistribution | None = None


@dataclass(frozen=True)
class ConvergenceRow:
    t: int
    array_id: int
    l_inf_change: float
    sum_before_renorm: float
    oracle_calls: int


@dataclass(frozen=True)
class IterationResult:
    source: EmmlState
    state: EmmlState
    rows: tuple[ConvergenceRow, ...]
    estimates: tuple[tuple[PixelEstimate, ...], ...]

    @property
    def max_change(self) -> float:
        return max(row.l_inf_change for row in self.rows)

    @property
    def oracle_calls(self) -> int:
        return sum(row.oracle_calls for row in self.rows)


@dataclass(frozen=True)
class EmmlRun:
    state: EmmlState
    iterations: tuple[IterationResult, ...]
    converged: bool
    convergence: tuple[ConvergenceRow, ...] = field(default=())

    @property
    def total_oracle_calls(self) -> int:
        return sum(it.oracle_calls for it in self.iterations)


def build_layout_2d(n: int, m: int) -> RegisterLayout:
    require_power_of_two(n, "N")
    require_power_of_two(m, "M", minimum=4)
    q = 2 * log2(n)
    return RegisterLayout.of((TEMPL, q), (COPY1, q), (COPY2, q), (NEW, log2(m)))


def _check_pixel(template: ProbArray2D, data: ProbArray2D, j: int, k: int, layout: RegisterLayout):
    dim = layout.dim(TEMPL)
    if template.values.size != dim or data.values.size != dim:
        raise LayoutError(
            f"Arrays of shape {template.values.shape} and {data.values.shape} "
            f"do not fit registers of dimension {dim}"
        )
    n = template.n
    if not (0 <= j < n and 0 <= k < n):
        raise PreconditionError(f"Pixel ({j}, {k}) out of range for N={n}")


def initialize_emml(
    template: ProbArray2D, data: ProbArray2D, j: int, k: int, layout: RegisterLayout
) -> StateVector:
    """Template on templ, data on C1, data shifted by (j, k) on C2; new stays |0>."""
    _check_pixel(template, data, j, k, layout)
    state = alloc_state(layout)
    state = inject_amplitudes(state, TEMPL, amplitudes_from(template))
    state = inject_amplitudes(state, COPY1, amplitudes_from(data))
    return inject_amplitudes(state, COPY2, amplitudes_from(cyclic_shift_2d(data, j, k)))


def emml_predicate(n: int):
    """C1 - templ = C2 (mod N), row-wise and column-wise."""

    def marked(values):
        t, c1, c2 = values[TEMPL], values[COPY1], values[COPY2]
        rows = (c1 // n - t // n) % n == c2 // n
        cols = (c1 % n - t % n) % n == c2 % n
        return rows & cols

    return marked


def grover_operator_2d(
    layout: RegisterLayout, template: ProbArray2D, data: ProbArray2D, j: int, k: int
) -> Operator:
    _check_pixel(template, data, j, k, layout)
    return grover_operator(
        layout,
        emml_predicate(template.n),
        (TEMPL, COPY1, COPY2),
        (
            (TEMPL, amplitudes_from(template)),
            (COPY1, amplitudes_from(data)),
            (COPY2, amplitudes_from(cyclic_shift_2d(data, j, k))),
        ),
        name="G",
    )


def grover_G(
    state: StateVector, template: ProbArray2D, data: ProbArray2D, j: int, k: int
) -> StateVector:
    return grover_operator_2d(state.layout, template, data, j, k).apply(state)


def emml_eigenpair(
    template: ProbArray2D,
    data: ProbArray2D,
    j: int,
    k: int,
    layout: RegisterLayout,
    sign: int = 1,
) -> tuple[StateVector, complex, float]:
    """Eigenvector of G with new in |0>; raises PreconditionError when the update is 0 or 1."""
    state = initialize_emml(template, data, j, k, layout)
    marked = predicate_mask(layout, emml_predicate(template.n), (TEMPL, COPY1, COPY2))
    return grover_eigenpair(state, marked, sign)


def pixel_seed(seed: int, t: int, array_id: int, j: int, k: int) -> list[int]:
    """Entropy for the sampling stream of one pixel estimation."""
    return [seed, t, array_id, j, k]


def estimate_pixel(
    template: ProbArray2D,
    data: ProbArray2D,
    j: int,
    k: int,
    config: EmmlConfig,
    *,
    t: int = 0,
    array_id: int = 0,
) -> PixelEstimate:
    """Run the pixel circuit and read x^{t+1}_{j,k} = sin^2(pi Theta / M)."""
    if template.n != config.n:
        raise ConfigError(f"Config is for N={config.n}, arrays have side {template.n}")
    big_m = config.readout_dim
    layout = build_layout_2d(config.n, big_m)

    state = initialize_emml(template, data, j, k, layout)
    state = apply_qft(state, NEW)
    op = grover_operator_2d(layout, template, data, j, k)
    state = phase_estimation(state, op, NEW)

    if config.mode == "exact":
        distribution = conditional_distribution(state, NEW)
        m_hat = argmax_outcome(distribution.probabilities)
    else:
        shots = sample_measurement(
            state, (NEW,), pixel_seed(config.seed, t, array_id, j, k), config.shots
        )
        probabilities, count = empirical_distribution((m for (m,) in shots), big_m)
        distribution = ConditionalDistribution((), NEW, probabilities, count / config.shots)
        m_hat = argmax_outcome(probabilities)

    value = estimate_from_m(m_hat, big_m)
    logger.debug("Pixel (%d, %d) of array %d: Theta=%d value=%.6g", j, k, array_id, m_hat, value)
    return PixelEstimate(
        j=j,
        k=k,
        m_hat=m_hat,
        value=value,
        error_bound=error_bound(value, big_m),
        oracle_calls=op.invocations,
        distribution=distribution,
    )


def _estimate_array(
    state: EmmlState, array_id: int, config: EmmlConfig
) -> tuple[PixelEstimate, ...]:
    data = state.data[array_id]
    pixels = [(j, k) for j in range(state.n) for k in range(state.n)]

    def run(pixel: tuple[int, int]) -> PixelEstimate:
        j, k = pixel
        return estimate_pixel(state.template, data, j, k, config, t=state.t, array_id=array_id)

    if config.workers == 1:
        return tuple(run(p) for p in pixels)
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        return tuple(pool.map(run, pixels))


def emml_iteration(state: EmmlState, config: EmmlConfig) -> IterationResult:
    """One EM round: re-estimate every pixel of every array, then rebuild the template."""
    n = state.n
    new_data = []
    rows = []
    estimates = []
    for array_id, old in enumerate(state.data):
        pixel_estimates = _estimate_array(state, array_id, config)
        raw = np.array([p.value for p in pixel_estimates]).reshape(n, n)
        total = float(raw.sum())
        if total > 0.0:
            updated = ProbArray2D(raw / total)
        else:
            logger.warning("All pixel estimates of array %d are zero; keeping it", array_id)
            updated = old
        logger.info(
            "t=%d array %d: sum before renormalization %.12g", state.t + 1, array_id, total
        )
        change = float(np.max(np.abs(updated.values - old.values)))
        rows.append(
            ConvergenceRow(
                t=state.t + 1,
                array_id=array_id,
                l_inf_change=change,
                sum_before_renorm=total,
                oracle_calls=sum(p.oracle_calls for p in pixel_estimates),
            )
        )
        new_data.append(updated)
        estimates.append(pixel_estimates)

    next_state = EmmlState(average_template(new_data), tuple(new_data), state.t + 1)
    return IterationResult(state, next_state, tuple(rows), tuple(estimates))


def run_emml(arrays: Sequence[ProbArray2D], config: EmmlConfig) -> EmmlRun:
    """Iterate until the largest per-pixel change drops below the tolerance."""
    state = EmmlState.from_arrays(arrays)
    if state.n != config.n:
        raise ConfigError(f"Config is for N={config.n}, arrays have side {state.n}")

    iterations = []
    converged = False
    for _ in range(config.max_iterations):
        result = emml_iteration(state, config)
        iterations.append(result)
        state = result.state
        logger.info("Iteration %d: max change %.3g", state.t, result.max_change)
        if result.max_change < config.convergence_tol:
            converged = True
            break

    convergence = tuple(row for it in iterations for row in it.rows)
    return EmmlRun(state, tuple(iterations), converged, convergence)
