import math

import numpy as np
import pytest

from graphonctl.functions import (
    PiecewiseConstantFunction,
    TrigPolynomial,
    inner_product,
)
from graphonctl.graphons import (
    SampledGraphon,
    SinusoidalGraphon,
    StepGraphon,
    apply,
    l2_norm,
    subtract,
)
from graphonctl.spectral import (
    FiniteRankKernel,
    FourierEigenfunction,
    bound_for_exponential,
    bound_for_power,
    decompose,
    eigenvalue_convergence_experiment,
    fourier_project,
    fourier_truncate,
    l2_distance,
    measured_function_discrepancy,
    operator_function_error,
    to_finite_rank,
    truncate,
    truncation_error,
)

import oracles
from conftest import random_symmetric_graphon


class TestDecomposeStep:
    def test_eigenvalues_scale_as_matrix_over_blocks(self, rng):
        for _ in range(6):
            g = random_symmetric_graphon(rng)
            decomp = decompose(g)
            expected = np.linalg.eigvalsh(g.coeffs) / g.num_blocks
            np.testing.assert_allclose(np.sort(decomp.eigenvalues),
                                       np.sort(expected[np.abs(expected) > 1e-12]),
                                       atol=1e-12)

    def test_matches_quadrature_operator(self, rng):
        g = random_symmetric_graphon(rng)
        m = 16 * g.num_blocks
        quad = oracles.quad_eigenvalues(g, m)
        quad = quad[np.abs(quad) > 1e-9]
        decomp = decompose(g)
        np.testing.assert_allclose(np.sort(decomp.eigenvalues), np.sort(quad),
                                   atol=1e-9)

    def test_eigenpairs_satisfy_eigen_equation(self, rng):
        g = random_symmetric_graphon(rng)
        for lam, func in decompose(g).eigenpairs:
            image = apply(g, func)
            np.testing.assert_allclose(image.values, lam * func.values, atol=1e-12)

    def test_eigenfunctions_are_orthonormal(self, rng):
        g = random_symmetric_graphon(rng)
        funcs = decompose(g).eigenfunctions
        for i, f in enumerate(funcs):
            for j, h in enumerate(funcs):
                assert inner_product(f, h) == pytest.approx(
                    1.0 if i == j else 0.0, abs=1e-10)

    def test_ordering_and_sign_convention(self):
        decomp = decompose(StepGraphon([[0.0, 1.0], [1.0, 0.0]]))
        # magnitude tie 0.5 vs -0.5: positive first
        np.testing.assert_allclose(decomp.eigenvalues, [0.5, -0.5])
        for func in decomp.eigenfunctions:
            leading = func.values[np.abs(func.values) > 1e-12][0]
            assert leading > 0.0
        np.testing.assert_allclose(decomp.positive_eigenvalues, [0.5])
        np.testing.assert_allclose(decomp.negative_eigenvalues, [-0.5])

    def test_zero_modes_are_dropped(self):
        decomp = decompose(StepGraphon(np.full((3, 3), 0.6)))
        assert decomp.rank == 1
        assert decomp.eigenvalues[0] == pytest.approx(0.6)
        np.testing.assert_allclose(decomp.eigenfunctions[0].values, np.ones(3))

    def test_asymmetric_kernel_rejected(self):
        bad = StepGraphon([[0.0, 1.0], [0.0, 0.0]], validate=False)
        with pytest.raises(ValueError, match="asymmetric"):
            decompose(bad)


class TestDecomposeSinusoidal:
    def test_closed_form_spectrum(self):
        decomp = decompose(SinusoidalGraphon(0.5, [0.3]))
        np.testing.assert_allclose(decomp.eigenvalues, [0.5, 0.15, 0.15])
        kinds = [type(f) for f in decomp.eigenfunctions]
        assert kinds == [TrigPolynomial] * 3

    def test_agrees_with_quadrature(self):
        g = SinusoidalGraphon(0.4, [0.2, -0.3])
        decomp = decompose(g)
        quad = oracles.quad_eigenvalues(g, 2048)
        quad = quad[np.abs(quad) > 1e-6]
        np.testing.assert_allclose(np.sort(decomp.eigenvalues), np.sort(quad),
                                   atol=1e-4)

    def test_eigen_equation(self):
        g = SinusoidalGraphon(0.4, [0.0, 0.25])
        for lam, func in decompose(g).eigenpairs:
            image = apply(g, func)
            xs = np.linspace(0.0, 1.0, 64)
            np.testing.assert_allclose(image(xs), lam * func(xs), atol=1e-14)

    def test_zero_harmonics_dropped(self):
        decomp = decompose(SinusoidalGraphon(0.5, [0.0, 0.3]))
        # the k=1 couple carries weight zero and disappears
        np.testing.assert_allclose(decomp.eigenvalues, [0.5, 0.15, 0.15])
        assert decomp.eigenfunctions[1].order == 2


class TestTruncation:
    def test_error_identity_on_random_instances(self, rng):
        for _ in range(8):
            g = random_symmetric_graphon(rng)
            decomp = decompose(g)
            for m in range(decomp.rank + 1):
                closed = truncation_error(decomp, m)
                if m == 0:
                    direct = l2_norm(g)
                else:
                    direct = l2_norm(subtract(g, truncate(decomp, m)))
                # the tail-sum evaluation avoids the near-full-rank
                # cancellation of the subtraction form
                assert closed == pytest.approx(direct, abs=1e-12)

    def test_full_rank_truncation_recovers_kernel(self, rng):
        g = random_symmetric_graphon(rng)
        decomp = decompose(g)
        full = truncate(decomp, decomp.rank)
        np.testing.assert_allclose(full.coeffs, g.coeffs, atol=1e-10)

    def test_rank_bounds_enforced(self, rng):
        decomp = decompose(random_symmetric_graphon(rng))
        with pytest.raises(ValueError):
            truncate(decomp, 0)
        with pytest.raises(ValueError):
            truncate(decomp, decomp.rank + 1)
        with pytest.raises(ValueError):
            truncation_error(decomp, -1)

    def test_sinusoidal_truncation_keeps_family_when_pairs_close(self):
        g = SinusoidalGraphon(0.5, [0.3, 0.1])
        decomp = decompose(g)  # eigenvalues 0.5, 0.15, 0.15, 0.05, 0.05
        kept = truncate(decomp, 3)
        assert isinstance(kept, SinusoidalGraphon)
        assert kept.constant == pytest.approx(0.5)
        np.testing.assert_allclose(kept.cosine_coeffs, [0.3])

    def test_sinusoidal_truncation_falls_back_on_split_pair(self):
        g = SinusoidalGraphon(0.5, [0.3])
        decomp = decompose(g)
        split = truncate(decomp, 2)  # cuts through the cos/sin couple
        assert isinstance(split, FiniteRankKernel)
        assert split.rank == 2

    def test_truncation_error_of_full_rank_is_zero(self, rng):
        decomp = decompose(random_symmetric_graphon(rng))
        assert truncation_error(decomp, decomp.rank) == 0.0


class TestFiniteRankKernel:
    def test_value_and_norm_against_quadrature(self, rng):
        g = random_symmetric_graphon(rng)
        frk = to_finite_rank(g)
        assert frk.l2_norm() == pytest.approx(l2_norm(g), rel=1e-10)
        m = g.num_blocks * 8
        np.testing.assert_allclose(oracles.midpoint_grid(frk, m),
                                   oracles.midpoint_grid(g, m), atol=1e-10)

    def test_subtraction_concatenates_terms(self):
        f = FiniteRankKernel(((1.0, TrigPolynomial.constant_function(1.0)),))
        g = FiniteRankKernel(((0.4, TrigPolynomial.constant_function(1.0)),))
        diff = f - g
        assert diff.rank == 2
        assert diff.l2_norm() == pytest.approx(0.6, rel=1e-12)

    def test_empty_kernel_has_zero_norm(self):
        assert FiniteRankKernel(()).l2_norm() == 0.0

    def test_l2_distance_dispatch(self, rng):
        g = random_symmetric_graphon(rng)
        h = random_symmetric_graphon(rng)
        direct = l2_norm(subtract(g, h))
        assert l2_distance(g, h) == pytest.approx(direct, rel=1e-12)
        # cross-family distance through separable expansions
        s = SinusoidalGraphon(0.4, [0.2])
        cross = l2_distance(g, s)
        m = g.num_blocks * 256
        grid = oracles.midpoint_grid(g, m) - oracles.midpoint_grid(s, m)
        assert cross == pytest.approx(float(np.sqrt(np.mean(grid ** 2))), rel=1e-4)
        assert l2_distance(g, to_finite_rank(g)) == pytest.approx(0.0, abs=1e-8)


class TestFourier:
    def test_projection_coefficients_match_quadrature(self, rng):
        f = PiecewiseConstantFunction(rng.normal(size=5))
        proj = fourier_project(f, 3)
        const, cos_coeffs, sin_coeffs = proj.polynomial.orthonormal_coefficients()
        assert const == pytest.approx(oracles.fourier_coefficient(f, 0, "const"),
                                      abs=1e-9)
        for k in range(1, 4):
            assert cos_coeffs[k - 1] == pytest.approx(
                oracles.fourier_coefficient(f, k, "cos"), abs=1e-9)
            assert sin_coeffs[k - 1] == pytest.approx(
                oracles.fourier_coefficient(f, k, "sin"), abs=1e-9)

    def test_trig_input_projects_to_itself(self):
        p = TrigPolynomial(0.3, [0.2], [0.0, 0.4])
        proj = fourier_project(p, 2)
        xs = np.linspace(0.0, 1.0, 40)
        np.testing.assert_allclose(proj(xs), p(xs), atol=1e-14)

    def test_projection_is_l2_optimal(self, rng):
        # perturbing any kept coefficient increases the distance
        f = PiecewiseConstantFunction(rng.normal(size=4))
        proj = fourier_project(f, 2).polynomial
        err = _distance_to_pwc(f, proj)
        bumped = proj + 0.05 * TrigPolynomial.sine_mode(1)
        assert _distance_to_pwc(f, bumped) > err

    def test_complex_coefficients_reproduce_polynomial(self):
        poly = TrigPolynomial(0.2, [0.5, -0.1], [0.3, 0.0])
        fe = FourierEigenfunction(poly, 3)
        coeffs = fe.complex_coefficients()
        assert coeffs.shape == (7,)
        xs = np.linspace(0.0, 1.0, 17)
        h = np.arange(-3, 4)
        rebuilt = (coeffs[None, :] * np.exp(2j * np.pi * xs[:, None] * h)).sum(axis=1)
        np.testing.assert_allclose(rebuilt.imag, 0.0, atol=1e-12)
        np.testing.assert_allclose(rebuilt.real, poly(xs), atol=1e-12)

    def test_toeplitz_quadratic_form_reproduces_polynomial(self):
        poly = TrigPolynomial(0.4, [0.1], [0.0, 0.2])
        fe = FourierEigenfunction(poly, 2)
        mat = fe.toeplitz_matrix()
        assert mat.shape == (3, 3)
        np.testing.assert_allclose(mat, mat.conj().T, atol=1e-14)  # Hermitian
        # constant diagonals (Toeplitz structure)
        for d in (-2, -1, 0, 1, 2):
            diag = np.diagonal(mat, offset=d)
            np.testing.assert_allclose(diag, diag[0], atol=1e-14)
        for x in np.linspace(0.0, 1.0, 11):
            e = np.exp(2j * np.pi * x * np.arange(3))
            value = np.conj(e) @ mat @ e
            assert value.imag == pytest.approx(0.0, abs=1e-12)
            assert value.real == pytest.approx(float(poly(x)), abs=1e-12)

    def test_fourier_truncate_bound_dominates_measured_error(self, rng):
        for _ in range(5):
            g = random_symmetric_graphon(rng)
            decomp = decompose(g)
            rank = min(2, decomp.rank)
            approx, bound = fourier_truncate(decomp, rank, order=4)
            assert l2_distance(g, approx) <= bound + 1e-10

    def test_fourier_truncate_rank_zero(self, rng):
        g = random_symmetric_graphon(rng)
        approx, bound = fourier_truncate(decompose(g), 0, order=2)
        assert approx.rank == 0
        assert bound == pytest.approx(l2_norm(g), rel=1e-12)


def _distance_to_pwc(f, poly):
    diff_sq = (inner_product(f, f) - 2.0 * inner_product(f, poly)
               + inner_product(poly, poly))
    return math.sqrt(max(diff_sq, 0.0))


class TestOperatorFunctionBounds:
    def test_printed_constants_on_constant_kernels(self):
        # norms 0.5 and 0.4 give c = 0.5, delta = 0.1 exactly
        a = StepGraphon([[0.5]])
        b = StepGraphon([[0.4]])
        assert operator_function_error(a, b, "exponential") == pytest.approx(
            0.5 * math.exp(0.5) * 0.1, rel=1e-12)
        assert operator_function_error(a, b, "power", 2) == pytest.approx(
            2 * 0.5**2 * 0.1, rel=1e-12)
        with pytest.raises(ValueError):
            operator_function_error(a, b, "power")
        with pytest.raises(ValueError):
            operator_function_error(a, b, "log")

    def test_valid_bounds_reduce_to_printed_at_c_equal_one(self):
        assert bound_for_power(1.0, 0.2, 3) == pytest.approx(
            operator_function_error(StepGraphon([[1.0]]), StepGraphon([[0.8]]),
                                    "power", 3), rel=1e-12)

    def test_rank_one_counterexample_to_printed_exponential_constant(self):
        # constant kernels commute, so e^A - e^B has operator norm
        # |e^a - e^b| > c e^c (a - b) when c < 1; the derived bound still holds
        a = StepGraphon([[0.5]])
        b = StepGraphon([[0.4]])
        measured = measured_function_discrepancy(a, b, "exponential", resolution=64)
        assert measured == pytest.approx(math.exp(0.5) - math.exp(0.4), rel=1e-10)
        assert measured > operator_function_error(a, b, "exponential")
        assert measured <= bound_for_exponential(0.5, 0.1) + 1e-12

    def test_derived_bounds_hold_on_random_pairs(self, rng):
        for _ in range(6):
            g = random_symmetric_graphon(rng)
            decomp = decompose(g)
            approx, _ = fourier_truncate(decomp, min(2, decomp.rank), order=3)
            c = max(l2_norm(g), approx.l2_norm())
            delta = l2_distance(g, approx)
            for exponent in (2, 3):
                measured = measured_function_discrepancy(g, approx, "power",
                                                         exponent, resolution=128)
                assert measured <= bound_for_power(c, delta, exponent) + 1e-10
            measured = measured_function_discrepancy(g, approx, "exponential",
                                                     resolution=128)
            assert measured <= bound_for_exponential(c, delta) + 1e-10

    def test_measured_discrepancy_vanishes_for_identical_kernels(self, rng):
        g = random_symmetric_graphon(rng)
        assert measured_function_discrepancy(g, g, "power", 2,
                                             resolution=64) == pytest.approx(0.0)
        assert measured_function_discrepancy(g, g, "exponential",
                                             resolution=64) == pytest.approx(0.0)

    def test_measured_power_discrepancy_exact_for_aligned_steps(self):
        a = StepGraphon([[0.8, 0.1], [0.1, 0.3]])
        b = StepGraphon([[0.5, 0.2], [0.2, 0.1]])
        from graphonctl.graphons import power

        exact = l2_norm(subtract(power(a, 2), power(b, 2)))
        measured = measured_function_discrepancy(a, b, "power", 2, resolution=64)
        assert measured == pytest.approx(exact, rel=1e-12)


class TestConvergenceExperiment:
    def test_exact_sampler_converges(self):
        limit = StepGraphon([[0.8, 0.2], [0.2, 0.6]])

        def pixel_sampler(size):
            x = (np.arange(size) + 0.5) / size
            return limit.value(x[:, None], x[None, :])

        rows = eigenvalue_convergence_experiment(pixel_sampler, [4, 8, 64], limit)
        assert [row.size for row in rows] == [4, 8, 64]
        assert rows[-1].max_error < 1e-10  # aligned grids represent the limit exactly
        assert len(rows[0].scaled_eigenvalues) == 5

    def test_shape_mismatch_rejected(self):
        limit = StepGraphon([[0.5]])
        with pytest.raises(ValueError, match="shape"):
            eigenvalue_convergence_experiment(lambda size: np.zeros((2, 2)),
                                              [3], limit)
