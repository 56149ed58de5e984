"""Explicit unitary matrices for small layouts.

Built independently of the matrix-free kernels (Kronecker products in declared register
order, basis enumeration for diagonal operators), so comparing the two checks the engine.
"""

from collections.abc import Mapping, Sequence
from functools import reduce

import numpy as np
from numpy.typing import ArrayLike

from .errors import ResourceError
from .statevec import Predicate, RegisterLayout

MAX_DENSE_QUBITS = 10

_H = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=np.complex128) / np.sqrt(2.0)


def _check_size(layout: RegisterLayout) -> None:
    if layout.total_qubits > MAX_DENSE_QUBITS:
        raise ResourceError(
            f"Dense matrices are limited to {MAX_DENSE_QUBITS} qubits, layout has {layout.total_qubits}"
        )


def register_operator(layout: RegisterLayout, local: Mapping[str, np.ndarray]) -> np.ndarray:
    """Kronecker product of per-register matrices, identity where none is given."""
    _check_size(layout)
    factors = [
        np.asarray(local[name], dtype=np.complex128) if name in local else np.eye(layout.dim(name))
        for name in layout.names
    ]
    return reduce(np.kron, factors)


def hadamard_matrix(layout: RegisterLayout, register: str) -> np.ndarray:
    local = reduce(np.kron, [_H] * layout.qubits(register))
    return register_operator(layout, {register: local})


def dft_matrix(dim: int, inverse: bool = False) -> np.ndarray:
    sign = -1.0 if inverse else 1.0
    j, k = np.meshgrid(np.arange(dim), np.arange(dim), indexing="ij")
    return np.exp(sign * 2j * np.pi * j * k / dim) / np.sqrt(dim)


def qft_matrix(layout: RegisterLayout, register: str, inverse: bool = False) -> np.ndarray:
    return register_operator(layout, {register: dft_matrix(layout.dim(register), inverse)})


def _diagonal(layout: RegisterLayout, flip) -> np.ndarray:
    _check_size(layout)
    signs = np.array(
        [-1.0 if flip(layout.decompose(i)) else 1.0 for i in range(layout.dimension)]
    )
    return np.diag(signs).astype(np.complex128)


def reflect_zero_matrix(layout: RegisterLayout, registers: Sequence[str]) -> np.ndarray:
    return _diagonal(layout, lambda values: all(values[name] == 0 for name in registers))


def predicate_matrix(layout: RegisterLayout, predicate: Predicate) -> np.ndarray:
    """Predicates are evaluated on plain integer assignments, one basis state at a time."""
    return _diagonal(layout, lambda values: bool(predicate(values)))


def product_reflection_matrix(
    layout: RegisterLayout, factors: Sequence[tuple[str, ArrayLike]]
) -> np.ndarray:
    local = {}
    for name, amps in factors:
        v = np.asarray(amps, dtype=np.complex128).reshape(-1)
        local[name] = np.outer(v, v.conj())
    return np.eye(layout.dimension) - 2.0 * register_operator(layout, local)


def controlled_power_matrix(layout: RegisterLayout, op: np.ndarray, control: str) -> np.ndarray:
    """sum_m |m><m|_control (x) op^m, ``op`` given on the full space (identity on control)."""
    dim = layout.dim(control)
    total = np.zeros((layout.dimension, layout.dimension), dtype=np.complex128)
    power = np.eye(layout.dimension, dtype=np.complex128)
    for m in range(dim):
        projector = np.zeros((dim, dim))
        projector[m, m] = 1.0
        total += register_operator(layout, {control: projector}) @ power
        power = op @ power
    return total


def completion_unitary(amps: ArrayLike, seed: int = 0) -> np.ndarray:
    """A unitary whose first column is ``amps``: any completion reproduces A|0>."""
    v = np.asarray(amps, dtype=np.complex128).reshape(-1)
    rng = np.random.default_rng(seed)
    basis = rng.normal(size=(v.size, v.size)) + 1j * rng.normal(size=(v.size, v.size))
    basis[:, 0] = v
    q, r = np.linalg.qr(basis)
    q[:, 0] *= r[0, 0]
    return q
