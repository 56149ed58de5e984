"""Input constraints for the amplitude encodings.

Data loaded into a register must be non-negative and sum to one; arbitrary real data is
brought there by an affine map x = a * (x' + b), which is recorded so correlations can be
scaled back afterwards.
"""

import logging
from collections.abc import Callable, Mapping
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike

from .errors import LayoutError, PreconditionError

logger = logging.getLogger(__name__)

SUM_TOL = 1e-12


def is_power_of_two(value: int) -> bool:
    return value >= 1 and value & (value - 1) == 0


def require_power_of_two(value: int, what: str, minimum: int = 2) -> int:
    if not is_power_of_two(value) or value < minimum:
        raise PreconditionError(f"{what} must be a power of 2 and at least {minimum}, got {value}")
    return value


def log2(value: int) -> int:
    return value.bit_length() - 1


def validate_raw(values: ArrayLike, ndim: int = 1) -> np.ndarray:
    """Check a raw data array: finite, power-of-2 side length, square when 2D."""
    array = np.asarray(values, dtype=np.float64)
    if array.ndim != ndim:
        raise PreconditionError(f"Expected a {ndim}D array, got shape {array.shape}")
    if not np.all(np.isfinite(array)):
        raise PreconditionError("Array contains NaN or Inf")
    if ndim == 2 and array.shape[0] != array.shape[1]:
        raise PreconditionError(f"2D arrays must be square, got shape {array.shape}")
    require_power_of_two(array.shape[0], "Array length")
    return array


def _checked_probabilities(values: ArrayLike, ndim: int) -> np.ndarray:
    array = validate_raw(values, ndim).copy()
    if np.any(array < 0):
        raise PreconditionError(f"Probabilities must be non-negative, min is {array.min()!r}")
    total = float(array.sum())
    if abs(total - 1.0) > SUM_TOL:
        raise PreconditionError(f"Probabilities must sum to 1, got {total!r}")
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class ProbArray:
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _checked_probabilities(self.values, 1))

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class ProbArray2D:
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _checked_probabilities(self.values, 2))

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class AffineParams:
    """x = a * (x' + b), i.e. x = alpha * x' + beta with alpha = a, beta = a * b."""

    a: float
    b: float
    degenerate: bool = False

    def __post_init__(self):
        if not self.a > 0:
            raise PreconditionError(f"Affine scale must be positive, got {self.a!r}")

    @property
    def alpha(self) -> float:
        return self.a

    @property
    def beta(self) -> float:
        return self.a * self.b

    def apply(self, raw: ArrayLike) -> np.ndarray:
        return self.a * (np.asarray(raw, dtype=np.float64) + self.b)

    def invert(self, values: ArrayLike) -> np.ndarray:
        return np.asarray(values, dtype=np.float64) / self.a - self.b


def _min_shift(array: np.ndarray) -> tuple[np.ndarray, AffineParams]:
    low = float(array.min())
    shifted = array - low
    total = float(shifted.sum())
    if total <= 0.0:
        # constant input: any map to the uniform array carries no correlation structure
        size = array.size
        params = AffineParams(a=1.0, b=1.0 / size - low, degenerate=True)
        logger.warning("Constant array of %d values normalized to uniform", size)
        return np.full(array.shape, 1.0 / size), params
    return shifted / total, AffineParams(a=1.0 / total, b=-low)


def normalize(raw: ArrayLike) -> tuple[ProbArray, AffineParams]:
    """Min-shift and rescale a 1D raw array into a probability array."""
    values, params = _min_shift(validate_raw(raw, 1))
    return ProbArray(values), params


def normalize_2d(raw: ArrayLike) -> tuple[ProbArray2D, AffineParams]:
    values, params = _min_shift(validate_raw(raw, 2))
    return ProbArray2D(values), params


def denormalize_correlation(
    c_norm: ArrayLike,
    params_a: AffineParams,
    params_b: AffineParams,
    n: int | None = None,
) -> np.ndarray:
    """Scale a correlation of normalized arrays back to raw units.

    With x = alpha * x' + beta for each array and normalized sums of 1,
    C'_j = (C_j - beta_A - beta_B + N * beta_A * beta_B) / (alpha_A * alpha_B).
    """
    if params_a.degenerate or params_b.degenerate:
        raise PreconditionError("Cannot invert the normalization of a constant array")
    c = np.asarray(c_norm, dtype=np.float64)
    size = c.shape[0] if n is None else n
    beta_a, beta_b = params_a.beta, params_b.beta
    return (c - beta_a - beta_b + size * beta_a * beta_b) / (params_a.alpha * params_b.alpha)


def amplitudes_from(prob: ProbArray | ProbArray2D) -> np.ndarray:
    """Square-root amplitudes; 2D arrays are flattened row-major (index row * N + col)."""
    return np.sqrt(prob.values).reshape(-1).astype(np.complex128)


def cyclic_shift_2d(prob: ProbArray2D, j: int, k: int) -> ProbArray2D:
    """Output index (r, c) holds input[(j + r) mod N, (k + c) mod N]."""
    n = prob.n
    if not (0 <= j < n and 0 <= k < n):
        raise PreconditionError(f"Shift ({j}, {k}) out of range for N={n}")
    return ProbArray2D(np.roll(prob.values, shift=(-j, -k), axis=(0, 1)))


def index_reversed(values: ArrayLike) -> np.ndarray:
    """v'_j = v_{(-j) mod N}; turns a correlation against v' into a convolution with v."""
    array = np.asarray(values)
    return array[(-np.arange(array.shape[0])) % array.shape[0]]


@dataclass(frozen=True)
class ComplexDecomposition:
    """Four real correlation tasks whose combination is a complex correlation.

    The conjugated array is A: C_j = sum_i conj(A_{j+i}) B_i, so
    C = (C_re_re + C_im_im) + i (C_re_im - C_im_re).
    """

    tasks: Mapping[str, tuple[np.ndarray, np.ndarray]]

    @staticmethod
    def recombine(parts: Mapping[str, ArrayLike]) -> np.ndarray:
        rr, ri, ir, ii = (np.asarray(parts[key]) for key in ("re_re", "re_im", "im_re", "im_im"))
        return (rr + ii) + 1j * (ri - ir)

    def zero_tasks(self) -> list[str]:
        return [key for key, (a, b) in self.tasks.items() if not (np.any(a) and np.any(b))]

    def solve(self, correlate: Callable[[np.ndarray, np.ndarray], ArrayLike]) -> np.ndarray:
        return self.recombine({key: correlate(a, b) for key, (a, b) in self.tasks.items()})


def complex_decompose(a: ArrayLike, b: ArrayLike) -> ComplexDecomposition:
    av = np.asarray(a, dtype=np.complex128)
    bv = np.asarray(b, dtype=np.complex128)
    if av.shape != bv.shape or av.ndim != 1:
        raise LayoutError(f"Arrays must be 1D of equal length, got {av.shape} and {bv.shape}")
    require_power_of_two(av.shape[0], "Array length")
    return ComplexDecomposition(
        tasks={
            "re_re": (av.real.copy(), bv.real.copy()),
            "re_im": (av.real.copy(), bv.imag.copy()),
            "im_re": (av.imag.copy(), bv.real.copy()),
            "im_im": (av.imag.copy(), bv.imag.copy()),
        }
    )
