"""Register-structured statevector engine.

Amplitudes are stored flat. The global basis index is a mixed-radix number whose digits are
the register values in declared order, the first declared register being the most
significant digit block. Reshaping the flat array to ``layout.shape`` (C order) therefore
gives one tensor axis per register, and every primitive below acts along those axes without
building a matrix.
"""

import logging
from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike

from .config import get_settings
from .errors import LayoutError, PreconditionError, ResourceError

logger = logging.getLogger(__name__)

NORM_TOL = 1e-12
AMPLITUDE_TOL = 1e-10

# A predicate receives one open index grid per register (broadcastable against the state
# tensor) and returns a boolean array, or a plain bool for constant predicates.
Predicate = Callable[[Mapping[str, np.ndarray]], "np.ndarray | bool"]

_HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=np.complex128) / np.sqrt(2.0)


@dataclass(frozen=True)
class RegisterLayout:
    registers: tuple[tuple[str, int], ...]

    def __post_init__(self):
        registers = tuple((str(name), int(qubits)) for name, qubits in self.registers)
        object.__setattr__(self, "registers", registers)
        if not registers:
            raise LayoutError("A layout needs at least one register")
        names = [name for name, _ in registers]
        duplicates = sorted({name for name in names if names.count(name) > 1})
        if duplicates:
            raise LayoutError(f"Duplicate register names: {', '.join(duplicates)}")
        for name, qubits in registers:
            if qubits < 1:
                raise LayoutError(f"Register '{name}' needs at least one qubit, got {qubits}")

    @classmethod
    def of(cls, *registers: tuple[str, int]) -> "RegisterLayout":
        return cls(tuple(registers))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.registers)

    @property
    def total_qubits(self) -> int:
        return sum(qubits for _, qubits in self.registers)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(1 << qubits for _, qubits in self.registers)

    @property
    def dimension(self) -> int:
        return 1 << self.total_qubits

    def axis(self, name: str) -> int:
        for axis, (register, _) in enumerate(self.registers):
            if register == name:
                return axis
        raise LayoutError(f"Unknown register '{name}' (layout has {', '.join(self.names)})")

    def qubits(self, name: str) -> int:
        return self.registers[self.axis(name)][1]

    def dim(self, name: str) -> int:
        return 1 << self.qubits(name)

    def index_of(self, values: Mapping[str, int]) -> int:
        """Global basis index of a full register assignment."""
        missing = [name for name in self.names if name not in values]
        if missing:
            raise LayoutError(f"Assignment is missing registers: {', '.join(missing)}")
        digits = tuple(int(values[name]) for name in self.names)
        return int(np.ravel_multi_index(digits, self.shape))

    def decompose(self, index: int) -> dict[str, int]:
        """Register values of a global basis index."""
        digits = np.unravel_index(int(index), self.shape)
        return {name: int(d) for name, d in zip(self.names, digits)}


@dataclass
class StateVector:
    layout: RegisterLayout
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128).reshape(-1)
        if self.amplitudes.size != self.layout.dimension:
            raise LayoutError(
                f"State has {self.amplitudes.size} amplitudes, layout needs {self.layout.dimension}"
            )

    @classmethod
    def from_tensor(cls, layout: RegisterLayout, tensor: np.ndarray) -> "StateVector":
        return cls(layout, np.ascontiguousarray(tensor).reshape(-1))

    def tensor(self) -> np.ndarray:
        """View of the amplitudes with one axis per register."""
        return self.amplitudes.reshape(self.layout.shape)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


@dataclass(frozen=True)
class ConditionalDistribution:
    given: tuple[tuple[str, int], ...]
    target: str
    probabilities: np.ndarray
    total_weight: float

    @property
    def empty(self) -> bool:
        return self.total_weight <= 0.0


class Operator:
    """A unitary acting on some registers of a state tensor.

    ``action`` maps a tensor with one axis per layout register to a new tensor of the same
    shape. Axes of registers outside ``registers`` may have any length, which is what lets
    :func:`controlled_power` feed it slices of the control register. Every call is counted.
    """

    def __init__(self, name: str, registers: Iterable[str], action: Callable[[np.ndarray], np.ndarray]):
        self.name = name
        self.registers = frozenset(registers)
        self.action = action
        self.invocations = 0

    def __call__(self, tensor: np.ndarray) -> np.ndarray:
        self.invocations += 1
        return self.action(tensor)

    def apply(self, state: StateVector) -> StateVector:
        for name in self.registers:
            state.layout.axis(name)
        result = StateVector.from_tensor(state.layout, self(state.tensor()))
        return _checked(result, self.name)

    def __repr__(self) -> str:
        return f"Operator({self.name!r}, registers={sorted(self.registers)}, invocations={self.invocations})"


def _checked(state: StateVector, operation: str) -> StateVector:
    if get_settings().debug:
        norm = state.norm()
        if abs(norm - 1.0) > NORM_TOL:
            raise PreconditionError(f"{operation} broke normalization: norm={norm!r}")
    return state


def _unit_vector(amps: ArrayLike, size: int, what: str) -> np.ndarray:
    vec = np.asarray(amps, dtype=np.complex128).reshape(-1)
    if vec.size != size:
        raise PreconditionError(f"{what} has length {vec.size}, register dimension is {size}")
    norm = float(np.linalg.norm(vec))
    if abs(norm - 1.0) > AMPLITUDE_TOL:
        raise PreconditionError(f"{what} must have unit L2 norm, got {norm!r}")
    return vec


def alloc_state(layout: RegisterLayout, max_qubits: int | None = None) -> StateVector:
    """Allocate |0...0> on ``layout``."""
    cap = get_settings().max_qubits if max_qubits is None else max_qubits
    if layout.total_qubits > cap:
        raise ResourceError(
            f"Layout needs {layout.total_qubits} qubits, the cap is {cap} "
            "(set QCORR_MAX_QUBITS to raise it)"
        )
    amplitudes = np.zeros(layout.dimension, dtype=np.complex128)
    amplitudes[0] = 1.0
    logger.debug("Allocated %d-qubit state for registers %s", layout.total_qubits, layout.names)
    return StateVector(layout, amplitudes)


def inject_amplitudes(state: StateVector, register: str, amps: ArrayLike) -> StateVector:
    """Load ``amps`` into a register currently in |0>, leaving the other registers alone."""
    layout = state.layout
    axis = layout.axis(register)
    vec = _unit_vector(amps, layout.dim(register), f"Amplitudes for '{register}'")

    moved = np.moveaxis(state.tensor(), axis, 0)
    leakage = float(np.sum(np.abs(moved[1:]) ** 2))
    if leakage > AMPLITUDE_TOL:
        raise PreconditionError(
            f"Register '{register}' is not in |0> (weight {leakage:.3g} outside |0>)"
        )

    loaded = np.moveaxis(np.multiply.outer(vec, moved[0]), 0, axis)
    return _checked(StateVector.from_tensor(layout, loaded), "inject_amplitudes")


def _apply_qubit_gate(tensor: np.ndarray, axis: int, qubit: int, gate: np.ndarray) -> np.ndarray:
    shape = tensor.shape
    stride = 1 << qubit
    split = shape[:axis] + (shape[axis] // (2 * stride), 2, stride) + shape[axis + 1 :]
    out = np.tensordot(gate, tensor.reshape(split), axes=([1], [axis + 1]))
    return np.moveaxis(out, 0, axis + 1).reshape(shape)


def hadamard_kernel(tensor: np.ndarray, axis: int, qubits: int) -> np.ndarray:
    for qubit in range(qubits):
        tensor = _apply_qubit_gate(tensor, axis, qubit, _HADAMARD)
    return tensor


def qft_kernel(tensor: np.ndarray, axis: int, inverse: bool = False) -> np.ndarray:
    # forward kernel e^{+2 pi i jk/D}/sqrt(D) is numpy's orthonormal inverse DFT
    if inverse:
        return np.fft.fft(tensor, axis=axis, norm="ortho")
    return np.fft.ifft(tensor, axis=axis, norm="ortho")


def apply_hadamard_all(state: StateVector, register: str) -> StateVector:
    layout = state.layout
    tensor = hadamard_kernel(state.tensor(), layout.axis(register), layout.qubits(register))
    return _checked(StateVector.from_tensor(layout, tensor), "apply_hadamard_all")


def apply_qft(state: StateVector, register: str, inverse: bool = False) -> StateVector:
    layout = state.layout
    tensor = qft_kernel(state.tensor(), layout.axis(register), inverse=inverse)
    return _checked(StateVector.from_tensor(layout, tensor), "apply_qft")


def _zero_index(layout: RegisterLayout, registers: Sequence[str]) -> tuple:
    index: list = [slice(None)] * len(layout.registers)
    for name in registers:
        index[layout.axis(name)] = 0
    return tuple(index)


def zero_reflection(layout: RegisterLayout, registers: Sequence[str]) -> Callable[[np.ndarray], np.ndarray]:
    index = _zero_index(layout, registers)

    def reflect(tensor: np.ndarray) -> np.ndarray:
        out = tensor.copy()
        out[index] *= -1.0
        return out

    return reflect


def reflect_zero(state: StateVector, registers: Sequence[str]) -> StateVector:
    """Flip the sign of basis states whose listed registers are all 0."""
    tensor = zero_reflection(state.layout, registers)(state.tensor())
    return _checked(StateVector.from_tensor(state.layout, tensor), "reflect_zero")


def basis_grids(layout: RegisterLayout, registers: Iterable[str] | None = None) -> dict[str, np.ndarray]:
    """Open index grids, one per register, broadcastable against the state tensor."""
    ndim = len(layout.registers)
    grids = {}
    for name in layout.names if registers is None else registers:
        axis = layout.axis(name)
        shape = [1] * ndim
        shape[axis] = layout.dim(name)
        grids[name] = np.arange(layout.dim(name)).reshape(shape)
    return grids


def predicate_mask(
    layout: RegisterLayout, predicate: Predicate, registers: Iterable[str] | None = None
) -> np.ndarray:
    """Evaluate ``predicate`` on the basis grids; size-1 axes stand for 'any value'."""
    ndim = len(layout.registers)
    mask = np.asarray(predicate(basis_grids(layout, registers)), dtype=bool)
    if mask.ndim == 0:
        return np.full((1,) * ndim, bool(mask))
    if mask.ndim != ndim:
        raise LayoutError(f"Predicate returned a {mask.ndim}-d mask for a {ndim}-register layout")
    return mask


def reflect_predicate(state: StateVector, predicate: Predicate) -> StateVector:
    """Flip the sign of every basis state on which ``predicate`` holds."""
    signs = np.where(predicate_mask(state.layout, predicate), -1.0, 1.0)
    tensor = state.tensor() * signs
    return _checked(StateVector.from_tensor(state.layout, tensor), "reflect_predicate")


def product_reflection(
    layout: RegisterLayout, factors: Sequence[tuple[str, ArrayLike]]
) -> Callable[[np.ndarray], np.ndarray]:
    """Build s -> s - 2<psi|s> psi, psi the product of ``factors`` on their registers."""
    axes: list[int] = []
    psi = np.ones((), dtype=np.complex128)
    for name, amps in factors:
        axis = layout.axis(name)
        if axis in axes:
            raise LayoutError(f"Register '{name}' listed twice in product state")
        axes.append(axis)
        psi = np.multiply.outer(psi, _unit_vector(amps, layout.dim(name), f"Factor for '{name}'"))
    psi_conj = psi.conj()
    count = len(axes)

    def reflect(tensor: np.ndarray) -> np.ndarray:
        overlap = np.tensordot(tensor, psi_conj, axes=(axes, list(range(count))))
        correction = np.multiply.outer(overlap, psi)
        correction = np.moveaxis(correction, list(range(tensor.ndim - count, tensor.ndim)), axes)
        return tensor - 2.0 * correction

    return reflect


def reflect_about_product_state(
    state: StateVector, factors: Sequence[tuple[str, ArrayLike]]
) -> StateVector:
    tensor = product_reflection(state.layout, factors)(state.tensor())
    return _checked(
        StateVector.from_tensor(state.layout, tensor), "reflect_about_product_state"
    )


def controlled_power(state: StateVector, op: Operator, control: str) -> StateVector:
    """Apply ``op`` m times to the slice where the control register holds m.

    Control qubit k (value bit k) gates ``op`` applied 2**k times, so a full cascade over a
    register of dimension M costs M - 1 applications, recorded on ``op.invocations``.
    """
    layout = state.layout
    if control in op.registers:
        raise LayoutError(f"Operator '{op.name}' acts on its control register '{control}'")
    for name in op.registers:
        layout.axis(name)
    axis = layout.axis(control)
    values = np.arange(layout.dim(control))
    tensor = state.tensor().copy()

    for qubit in range(layout.qubits(control)):
        selected = np.flatnonzero((values >> qubit) & 1)
        index: list = [slice(None)] * tensor.ndim
        index[axis] = selected
        block = tensor[tuple(index)]
        for _ in range(1 << qubit):
            block = op(block)
        tensor[tuple(index)] = block
        logger.debug("Control qubit %d of '%s': %d applications of %s", qubit, control, 1 << qubit, op.name)

    return _checked(StateVector.from_tensor(layout, tensor), "controlled_power")


def marginal(state: StateVector, registers: Sequence[str]) -> np.ndarray:
    """Joint Born distribution of ``registers``, axes in the order given."""
    layout = state.layout
    axes = [layout.axis(name) for name in registers]
    if len(set(axes)) != len(axes):
        raise LayoutError("Registers listed twice in marginal")
    probs = np.abs(state.tensor()) ** 2
    others = tuple(a for a in range(probs.ndim) if a not in axes)
    joint = probs.sum(axis=others)
    kept = sorted(axes)
    return joint.transpose([kept.index(a) for a in axes])


def conditional_distribution(
    state: StateVector, target: str, given: Mapping[str, int] | None = None
) -> ConditionalDistribution:
    """Distribution of ``target`` conditioned on fixed values of other registers."""
    layout = state.layout
    given = dict(given or {})
    if target in given:
        raise LayoutError(f"Target register '{target}' is also conditioned on")
    target_axis = layout.axis(target)

    index: list = [slice(None)] * len(layout.registers)
    for name, value in given.items():
        if not 0 <= value < layout.dim(name):
            raise PreconditionError(f"Value {value} out of range for register '{name}'")
        index[layout.axis(name)] = int(value)
    probs = (np.abs(state.tensor()) ** 2)[tuple(index)]

    remaining = [a for a in range(len(layout.registers)) if index[a] == slice(None)]
    dim = layout.dim(target)
    weights = np.moveaxis(probs, remaining.index(target_axis), 0).reshape(dim, -1).sum(axis=1)
    total = float(weights.sum())

    if total <= 0.0:
        return ConditionalDistribution(tuple(given.items()), target, np.zeros(dim), 0.0)
    return ConditionalDistribution(
        tuple(given.items()), target, weights / total, min(total, 1.0)
    )


def sample_measurement(
    state: StateVector,
    registers: Sequence[str],
    seed: int | Sequence[int],
    shots: int,
) -> list[tuple[int, ...]]:
    """Draw ``shots`` joint outcomes of ``registers`` from the Born distribution."""
    if shots < 1:
        raise PreconditionError(f"shots must be at least 1, got {shots}")
    joint = marginal(state, registers)
    p = joint.reshape(-1)
    p = p / p.sum()
    rng = np.random.default_rng(seed)
    flat = rng.choice(p.size, size=shots, p=p)
    coords = np.unravel_index(flat, joint.shape)
    return [tuple(int(c[i]) for c in coords) for i in range(shots)]
