"""Dense-matrix self check of the statevector primitives on small random layouts."""

import logging
from dataclasses import dataclass

import numpy as np

from . import dense
from .statevec import (
    Operator,
    RegisterLayout,
    StateVector,
    alloc_state,
    apply_hadamard_all,
    apply_qft,
    conditional_distribution,
    controlled_power,
    inject_amplitudes,
    predicate_mask,
    product_reflection,
    reflect_about_product_state,
    reflect_predicate,
    reflect_zero,
)

logger = logging.getLogger(__name__)

ORACLE_TOL = 1e-10
IDENTITY_TOL = 1e-12


@dataclass(frozen=True)
class CheckResult:
    name: str
    deviation: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.deviation <= self.tolerance


def random_state(layout: RegisterLayout, rng: np.random.Generator) -> StateVector:
    amps = rng.normal(size=layout.dimension) + 1j * rng.normal(size=layout.dimension)
    return StateVector(layout, amps / np.linalg.norm(amps))


def random_unit(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def _deviation(state: StateVector, expected: np.ndarray) -> float:
    return float(np.max(np.abs(state.amplitudes - expected)))


def _sum_predicate(values):
    return (values["x"] + values["y"]) % 2 == values["z"] % 2


def run_selftest(seed: int = 0) -> list[CheckResult]:
    """Compare every primitive with its explicit matrix on layouts of at most 6 qubits."""
    rng = np.random.default_rng(seed)
    layout = RegisterLayout.of(("x", 2), ("y", 1), ("z", 3))
    state = random_state(layout, rng)
    psi = state.amplitudes
    results: list[CheckResult] = []

    def check(name: str, got: StateVector, expected: np.ndarray, tol: float = ORACLE_TOL):
        results.append(CheckResult(name, _deviation(got, expected), tol))

    for register in layout.names:
        check(
            f"hadamard[{register}]",
            apply_hadamard_all(state, register),
            dense.hadamard_matrix(layout, register) @ psi,
        )
        check(
            f"qft[{register}]",
            apply_qft(state, register),
            dense.qft_matrix(layout, register) @ psi,
        )
        check(
            f"inverse_qft[{register}]",
            apply_qft(state, register, inverse=True),
            dense.qft_matrix(layout, register, inverse=True) @ psi,
        )
        check(
            f"qft_round_trip[{register}]",
            apply_qft(apply_qft(state, register), register, inverse=True),
            psi,
            IDENTITY_TOL,
        )

    check("reflect_zero[x,z]", reflect_zero(state, ["x", "z"]), dense.reflect_zero_matrix(layout, ["x", "z"]) @ psi)
    check("reflect_predicate", reflect_predicate(state, _sum_predicate), dense.predicate_matrix(layout, _sum_predicate) @ psi)

    factors = [("z", random_unit(8, rng)), ("x", random_unit(4, rng))]
    reflected = reflect_about_product_state(state, factors)
    check("reflect_about_product_state", reflected, dense.product_reflection_matrix(layout, factors) @ psi)
    check("product_reflection_involution", reflect_about_product_state(reflected, factors), psi, IDENTITY_TOL)

    amps = random_unit(4, rng)
    loaded_from = inject_amplitudes(alloc_state(layout), "z", random_unit(8, rng))
    expected = dense.register_operator(layout, {"x": dense.completion_unitary(amps)}) @ loaded_from.amplitudes
    check("inject_amplitudes[x]", inject_amplitudes(loaded_from, "x", amps), expected)

    results.append(_controlled_power_check(rng))
    results.append(_conditional_check(state))
    for result in results:
        logger.debug("%s: deviation %.3g (tol %.0e)", result.name, result.deviation, result.tolerance)
    return results


def _controlled_power_check(rng: np.random.Generator) -> CheckResult:
    layout = RegisterLayout.of(("a", 1), ("b", 2), ("c", 3))
    state = random_state(layout, rng)
    factors = [("a", random_unit(2, rng)), ("b", random_unit(4, rng))]

    def marked(values):
        return values["a"] == values["b"] % 2

    signs = np.where(predicate_mask(layout, marked, ("a", "b")), -1.0, 1.0)
    reflect = product_reflection(layout, factors)
    op = Operator("W", ("a", "b"), lambda tensor: reflect(tensor * signs))

    op_matrix = dense.product_reflection_matrix(layout, factors) @ dense.predicate_matrix(layout, marked)
    expected = dense.controlled_power_matrix(layout, op_matrix, "c") @ state.amplitudes
    got = controlled_power(state, op, "c")
    deviation = _deviation(got, expected)
    calls_ok = op.invocations == layout.dim("c") - 1
    return CheckResult("controlled_power[c]", deviation if calls_ok else float("inf"), ORACLE_TOL)


def _conditional_check(state: StateVector) -> CheckResult:
    layout = state.layout
    dist = conditional_distribution(state, "z", {"x": 2})
    weights = np.zeros(layout.dim("z"))
    for index, amp in enumerate(state.amplitudes):
        values = layout.decompose(index)
        if values["x"] == 2:
            weights[values["z"]] += abs(amp) ** 2
    deviation = float(np.max(np.abs(dist.probabilities - weights / weights.sum())))
    return CheckResult("conditional_distribution", deviation, ORACLE_TOL)
