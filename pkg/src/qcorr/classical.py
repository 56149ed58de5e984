"""Classical reference implementations the simulated circuits are checked against.

Index convention: C_j = sum_i conj(A_{(j+i) mod N}) B_i, the form the circuit computes.
``shifted="b"`` selects the textbook form sum_i conj(A_i) B_{(j+i) mod N} instead; for real
inputs the two are index reflections of each other.
"""

from collections.abc import Sequence
from dataclasses import dataclass
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike

from .encoding import ProbArray2D, is_power_of_two
from .errors import LayoutError, PreconditionError

Shifted = Literal["a", "b"]


@dataclass(frozen=True)
class CorrelationResult:
    values: np.ndarray
    method: Literal["brute", "fft"]


def _pair(a: ArrayLike, b: ArrayLike) -> tuple[np.ndarray, np.ndarray]:
    av, bv = np.asarray(a), np.asarray(b)
    if av.ndim != 1 or av.shape != bv.shape:
        raise LayoutError(f"Arrays must be 1D of equal length, got {av.shape} and {bv.shape}")
    return av, bv


def _finish(values: np.ndarray, *inputs: np.ndarray) -> np.ndarray:
    if all(not np.iscomplexobj(x) for x in inputs):
        return np.real(values).astype(np.float64)
    return values.astype(np.complex128)


def crosscorr_brute(a: ArrayLike, b: ArrayLike, shifted: Shifted = "a") -> CorrelationResult:
    """Direct O(N^2) circular cross-correlation."""
    av, bv = _pair(a, b)
    n = av.shape[0]
    shift = (np.arange(n)[:, None] + np.arange(n)[None, :]) % n
    if shifted == "a":
        values = (np.conj(av)[shift] * bv[None, :]).sum(axis=1)
    elif shifted == "b":
        values = (np.conj(av)[None, :] * bv[shift]).sum(axis=1)
    else:
        raise PreconditionError(f"shifted must be 'a' or 'b', got {shifted!r}")
    return CorrelationResult(_finish(values, av, bv), "brute")


def _bit_reverse_indices(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    reversed_idx = np.zeros(n, dtype=np.int64)
    for bit in range(bits):
        reversed_idx |= ((idx >> bit) & 1) << (bits - 1 - bit)
    return reversed_idx


def fft(values: ArrayLike, inverse: bool = False) -> np.ndarray:
    """Iterative radix-2 decimation-in-time DFT (X_k = sum_n x_n e^{-2 pi i kn/N}).

    The inverse uses the conjugate kernel and divides by N.
    """
    x = np.asarray(values, dtype=np.complex128).reshape(-1)
    n = x.shape[0]
    if not is_power_of_two(n):
        raise PreconditionError(f"FFT length must be a power of 2, got {n}")
    x = x[_bit_reverse_indices(n)]
    sign = 1.0 if inverse else -1.0

    size = 2
    while size <= n:
        half = size // 2
        twiddle = np.exp(sign * 2j * np.pi * np.arange(half) / size)
        blocks = x.reshape(-1, size)
        even = blocks[:, :half].copy()
        odd = blocks[:, half:] * twiddle
        blocks[:, :half] = even + odd
        blocks[:, half:] = even - odd
        size *= 2

    if inverse:
        x /= n
    return x


def crosscorr_fft(a: ArrayLike, b: ArrayLike, shifted: Shifted = "a") -> CorrelationResult:
    """O(N log N) cross-correlation through the in-repo FFT."""
    av, bv = _pair(a, b)
    if not is_power_of_two(av.shape[0]):
        raise PreconditionError(f"FFT correlation needs a power-of-2 length, got {av.shape[0]}")
    fa, fb = fft(av), fft(bv)
    if shifted == "a":
        values = np.conj(fft(fa * np.conj(fb), inverse=True))
    elif shifted == "b":
        values = fft(np.conj(fa) * fb, inverse=True)
    else:
        raise PreconditionError(f"shifted must be 'a' or 'b', got {shifted!r}")
    return CorrelationResult(_finish(values, av, bv), "fft")


def convolution(a: ArrayLike, b: ArrayLike) -> np.ndarray:
    """conv_j = sum_i A_i B_{(j-i) mod N}; equals crosscorr_brute(A, index_reversed(B))."""
    av, bv = _pair(a, b)
    n = av.shape[0]
    if not is_power_of_two(n):
        raise PreconditionError(f"Convolution length must be a power of 2, got {n}")
    back = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    return _finish((av[None, :] * bv[back]).sum(axis=1), av, bv)


def _square(values: ArrayLike | ProbArray2D) -> np.ndarray:
    return values.values if isinstance(values, ProbArray2D) else np.asarray(values, dtype=np.float64)


def crosscorr2d_brute(big_x: ArrayLike | ProbArray2D, x: ArrayLike | ProbArray2D) -> CorrelationResult:
    """C_{r,c} = sum_{j,k} X_{j,k} x_{(j+r) mod N, (k+c) mod N}."""
    xt, xd = _square(big_x), _square(x)
    if xt.ndim != 2 or xt.shape != xd.shape or xt.shape[0] != xt.shape[1]:
        raise LayoutError(f"Arrays must be square and equal, got {xt.shape} and {xd.shape}")
    n = xt.shape[0]
    values = np.empty((n, n))
    for r in range(n):
        for c in range(n):
            values[r, c] = np.sum(xt * np.roll(xd, shift=(-r, -c), axis=(0, 1)))
    return CorrelationResult(values, "brute")


def emml_step(template: ArrayLike | ProbArray2D, data: ArrayLike | ProbArray2D) -> ProbArray2D:
    """Exact translation-model update x'_{j,k} = sum_{r,c} C_{r,c} x_{j+r, k+c}."""
    weights = crosscorr2d_brute(template, data).values
    return ProbArray2D(crosscorr2d_brute(weights, data).values)


def classical_emml(
    arrays: Sequence[ProbArray2D], iterations: int
) -> list[tuple[ProbArray2D, tuple[ProbArray2D, ...]]]:
    """Exact EMML trajectory: (template, data) after each of ``iterations`` rounds."""
    if not arrays:
        raise PreconditionError("EMML needs at least one data array")
    data = tuple(arrays)
    template = _mean(data)
    trajectory = []
    for _ in range(iterations):
        data = tuple(emml_step(template, x) for x in data)
        template = _mean(data)
        trajectory.append((template, data))
    return trajectory


def _mean(arrays: Sequence[ProbArray2D]) -> ProbArray2D:
    mean = np.mean([x.values for x in arrays], axis=0)
    return ProbArray2D(mean / mean.sum())


def best_shift(values: ArrayLike) -> tuple[int, ...]:
    """Index of the correlation maximum, i.e. the best-aligning shift."""
    array = np.asarray(values)
    return tuple(int(i) for i in np.unravel_index(int(np.argmax(np.real(array))), array.shape))
