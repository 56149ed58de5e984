"""Unit tests for probability encodings and their bookkeeping."""

import numpy as np
import pytest

from qcorr.classical import crosscorr_brute
from qcorr.encoding import (
    AffineParams,
    ProbArray,
    ProbArray2D,
    amplitudes_from,
    complex_decompose,
    cyclic_shift_2d,
    denormalize_correlation,
    index_reversed,
    normalize,
    normalize_2d,
    require_power_of_two,
    validate_raw,
)
from qcorr.errors import LayoutError, PreconditionError


class TestProbArrays:
    """Tests for the validated probability array types."""

    def test_valid_array_is_read_only(self):
        """Validated arrays are frozen after construction."""
        prob = ProbArray(np.array([0.25, 0.25, 0.5, 0.0]))
        assert prob.n == 4
        with pytest.raises(ValueError):
            prob.values[0] = 1.0

    @pytest.mark.parametrize(
        "values,message",
        [
            # Negative entry
            ([0.5, 0.75, -0.25, 0.0], "non-negative"),
            # Does not sum to one
            ([0.5, 0.5, 0.5, 0.0], "sum to 1"),
            # Length not a power of two
            ([0.5, 0.25, 0.25], "power of 2"),
            # Single element
            ([1.0], "power of 2"),
            # NaN
            ([np.nan, 0.5, 0.25, 0.25], "NaN"),
        ],
    )
    def test_invalid_arrays(self, values, message: str):
        """Arrays breaking a simplex rule should raise PreconditionError naming it."""
        with pytest.raises(PreconditionError, match=message):
            ProbArray(np.array(values))

    def test_2d_must_be_square(self):
        """2D arrays must be N x N."""
        with pytest.raises(PreconditionError, match="square"):
            ProbArray2D(np.full((2, 4), 1 / 8))

    def test_require_power_of_two_minimum(self):
        """require_power_of_two enforces its minimum."""
        assert require_power_of_two(8, "M", minimum=4) == 8
        with pytest.raises(PreconditionError, match="at least 4"):
            require_power_of_two(2, "M", minimum=4)


class TestNormalize:
    """Tests for the affine map onto the probability simplex."""

    def test_min_shift_and_rescale(self):
        """The minimum is shifted to zero and the sum scaled to one."""
        prob, params = normalize([3.0, 1.0, 2.0, 2.0])
        np.testing.assert_allclose(prob.values, [0.5, 0.0, 0.25, 0.25])
        np.testing.assert_allclose(params.apply([3.0, 1.0, 2.0, 2.0]), prob.values)
        np.testing.assert_allclose(params.invert(prob.values), [3.0, 1.0, 2.0, 2.0])

    def test_alpha_beta(self):
        """alpha and beta are the inverse map's coefficients."""
        params = AffineParams(a=0.5, b=-1.0)
        assert params.alpha == 0.5
        assert params.beta == -0.5

    def test_constant_input_becomes_uniform(self):
        """Constant input maps to the uniform array and is marked degenerate."""
        prob, params = normalize([2.0, 2.0, 2.0, 2.0])
        np.testing.assert_allclose(prob.values, np.full(4, 0.25))
        assert params.degenerate
        np.testing.assert_allclose(params.apply([2.0] * 4), prob.values)

    def test_normalize_2d(self, rng):
        """2D arrays normalize the same way as 1D ones."""
        raw = rng.normal(size=(4, 4))
        prob, params = normalize_2d(raw)
        assert prob.values.sum() == pytest.approx(1.0, abs=1e-12)
        assert prob.values.min() == 0.0
        np.testing.assert_allclose(params.apply(raw), prob.values, atol=1e-15)

    def test_validate_raw_rejects_inf(self):
        """Infinite values should be rejected."""
        with pytest.raises(PreconditionError, match="NaN or Inf"):
            validate_raw([1.0, np.inf])


class TestDenormalize:
    """Correlations of normalized arrays scale back to raw units."""

    @pytest.mark.parametrize("seed", range(5))
    def test_recovers_raw_correlation(self, seed: int):
        """Normalized correlations scale back to the raw correlation."""
        gen = np.random.default_rng(seed)
        raw_a, raw_b = gen.normal(size=8), gen.normal(size=8) + 3.0
        prob_a, params_a = normalize(raw_a)
        prob_b, params_b = normalize(raw_b)
        normalized = crosscorr_brute(prob_a.values, prob_b.values).values
        recovered = denormalize_correlation(normalized, params_a, params_b)
        np.testing.assert_allclose(recovered, crosscorr_brute(raw_a, raw_b).values, atol=1e-9)

    def test_constant_array_cannot_be_inverted(self):
        """A degenerate map has no inverse for correlations."""
        _, params_a = normalize([1.0, 1.0])
        _, params_b = normalize([0.0, 1.0])
        with pytest.raises(PreconditionError, match="constant"):
            denormalize_correlation([0.5, 0.5], params_a, params_b)


class TestIndexHelpers:
    """Tests for amplitude maps, shifts and reversals."""

    def test_amplitudes_are_square_roots(self):
        """Amplitudes are the complex square roots of the probabilities."""
        prob = ProbArray(np.array([0.25, 0.25, 0.5, 0.0]))
        amps = amplitudes_from(prob)
        assert amps.dtype == np.complex128
        np.testing.assert_allclose(amps, np.sqrt([0.25, 0.25, 0.5, 0.0]))
        assert np.linalg.norm(amps) == pytest.approx(1.0)

    def test_2d_amplitudes_are_row_major(self):
        """2D arrays flatten row by row."""
        values = np.arange(16, dtype=float).reshape(4, 4)
        prob = ProbArray2D(values / values.sum())
        amps = amplitudes_from(prob)
        assert abs(amps[1 * 4 + 3]) ** 2 == pytest.approx(prob.values[1, 3])

    def test_cyclic_shift_2d(self):
        """The shifted array reads the original at offset indices."""
        values = np.arange(16, dtype=float).reshape(4, 4)
        prob = ProbArray2D(values / values.sum())
        shifted = cyclic_shift_2d(prob, 1, 3)
        for r in range(4):
            for c in range(4):
                assert shifted.values[r, c] == prob.values[(1 + r) % 4, (3 + c) % 4]

    def test_cyclic_shift_out_of_range(self):
        """Shifts must lie inside the array."""
        prob = ProbArray2D(np.full((2, 2), 0.25))
        with pytest.raises(PreconditionError):
            cyclic_shift_2d(prob, 2, 0)

    def test_index_reversed(self):
        """Index 0 stays put and the rest reverse."""
        np.testing.assert_array_equal(index_reversed([0, 1, 2, 3]), [0, 3, 2, 1])


class TestComplexDecompose:
    """Four real correlations recombine into the complex one."""

    @pytest.mark.parametrize("n", [4, 8, 16, 32, 64])
    def test_recombination_matches_complex_brute_force(self, n: int):
        """Four real correlations recombine into the complex correlation."""
        for seed in range(20):
            gen = np.random.default_rng(seed)
            a = gen.normal(size=n) + 1j * gen.normal(size=n)
            b = gen.normal(size=n) + 1j * gen.normal(size=n)
            decomposition = complex_decompose(a, b)

            got = decomposition.solve(lambda x, y: crosscorr_brute(x, y).values)

            np.testing.assert_allclose(got, crosscorr_brute(a, b).values, atol=1e-12)

    def test_zero_tasks_are_reported(self):
        """Parts that are identically zero are listed."""
        decomposition = complex_decompose([1.0, 2.0], [3.0, 4.0])
        assert sorted(decomposition.zero_tasks()) == ["im_im", "im_re", "re_im"]

    def test_shape_mismatch(self):
        """Arrays of different shapes should raise LayoutError."""
        with pytest.raises(LayoutError):
            complex_decompose([1.0, 2.0], [1.0, 2.0, 3.0, 4.0])
