# Tests for anchored and ANOVA decompositions
# Verifies term evaluation, the derivative oracle, term bounds and smallness counts

import numpy as np
import pytest

from src.core.decomposition import (
    TermBoundKind,
    TermVolumes,
    anchored_all_terms,
    anchored_term,
    anchored_term_via_derivative,
    anova_all_terms,
    anova_term,
    anova_term_norms,
    anova_term_stderr,
    compose_rotation,
    derivative_smallness_counts,
    minimal_term_norm,
    mixed_partial,
    superset_max_norm,
    term_bound,
    term_norm_report_rows,
)
from src.core.functions import SampledFunction
from src.errors import BudgetExceededError, InvalidInputError
from src.models import AnchorConfig, QuadratureSpec
from src.testgen import builtin_benchmark


def product_function() -> SampledFunction:
    """f(x) = x1 x2 on [-1, 1]^2 with analytic derivatives."""

    def grad(x):
        return np.stack([x[..., 1], x[..., 0]], axis=-1)

    def hess(x):
        out = np.zeros(x.shape[:-1] + (2, 2))
        out[..., 0, 1] = out[..., 1, 0] = 1.0
        return out

    return SampledFunction(
        d=2, radius=1.0, evaluate=lambda x: x[..., 0] * x[..., 1], grad=grad, hess=hess
    )


def linear_function(d: int = 3) -> SampledFunction:
    """f(x) = x1."""

    def grad(x):
        out = np.zeros(x.shape)
        out[..., 0] = 1.0
        return out

    return SampledFunction(
        d=d,
        radius=1.0,
        evaluate=lambda x: x[..., 0],
        grad=grad,
        hess=lambda x: np.zeros(x.shape[:-1] + (d, d)),
    )


ORIGIN = AnchorConfig(c=[0.0, 0.0])


class TestAnchoredTerm:
    """Tests for the inclusion-exclusion anchored terms."""

    def test_product_full_term(self):
        assert anchored_term(product_function(), (0, 1), ORIGIN, [0.3, 0.5]) == pytest.approx(0.15)

    def test_product_first_order_term_vanishes(self):
        assert anchored_term(product_function(), (0,), ORIGIN, [0.7, -0.2]) == pytest.approx(0.0)

    def test_exponential(self):
        f = SampledFunction(d=2, radius=1.0, evaluate=lambda x: np.exp(x.sum(axis=-1)))
        e = np.e
        assert anchored_term(f, (0, 1), ORIGIN, [1.0, 1.0]) == pytest.approx(e**2 - 2 * e + 1)

    def test_terms_sum_to_function(self):
        """Test that all anchored terms add up to f."""
        f = SampledFunction(
            d=3, radius=1.0, evaluate=lambda x: np.sin(x[..., 0] * x[..., 1]) + x[..., 2] ** 3
        )
        cfg = AnchorConfig(c=[0.1, -0.2, 0.3])
        points = np.array([[0.5, 0.4, -0.3], [-0.9, 0.2, 0.8]])
        terms = anchored_all_terms(f, cfg, points)
        assert len(terms) == 8
        np.testing.assert_allclose(sum(terms.values()), f.value(points), atol=1e-12)

    def test_all_terms_match_single_term(self):
        f = product_function()
        x = np.array([0.3, 0.5])
        terms = anchored_all_terms(f, ORIGIN, x[None, :])
        assert terms[(0, 1)][0] == pytest.approx(anchored_term(f, (0, 1), ORIGIN, x))

    def test_subset_too_large(self):
        f = SampledFunction(d=21, radius=1.0, evaluate=lambda x: x.sum(axis=-1))
        cfg = AnchorConfig(c=[0.0] * 21)
        with pytest.raises(BudgetExceededError, match="subset too large"):
            anchored_term(f, range(21), cfg, np.zeros(21))

    def test_wrong_anchor_shape(self):
        with pytest.raises(InvalidInputError):
            anchored_term(product_function(), (0,), AnchorConfig(c=[0.0]), [0.1, 0.2])


class TestAnovaTerm:
    """Tests for ANOVA terms under the normalized Lebesgue measure."""

    MC = QuadratureSpec(samples_or_nodes=20000, seed=4)

    def test_product_full_term(self):
        value = anova_term(product_function(), (0, 1), [0.3, 0.5], self.MC)
        stderr = anova_term_stderr(product_function(), (0, 1), [0.3, 0.5], self.MC)
        assert abs(value - 0.15) <= 4 * stderr + 1e-12

    def test_product_first_order_term(self):
        value = anova_term(product_function(), (0,), [0.3, 0.5], self.MC)
        stderr = anova_term_stderr(product_function(), (0,), [0.3, 0.5], self.MC)
        assert abs(value) <= 4 * stderr + 1e-12

    def test_mean_term(self):
        """Test that the constant term of x1^2 + x2 is 1/3."""
        f = SampledFunction(d=2, radius=1.0, evaluate=lambda x: x[..., 0] ** 2 + x[..., 1])
        assert anova_term(f, (), [0.0, 0.0], QuadratureSpec.gauss(6)) == pytest.approx(1 / 3)
        mc = anova_term(f, (), [0.0, 0.0], self.MC)
        assert mc == pytest.approx(1 / 3, abs=0.02)

    def test_gauss_terms_sum_to_function(self):
        f = SampledFunction(
            d=3, radius=1.0, evaluate=lambda x: x[..., 0] * x[..., 1] ** 2 + np.cos(x[..., 2])
        )
        points = np.array([[0.2, -0.4, 0.9]])
        terms = anova_all_terms(f, points, QuadratureSpec.gauss(6))
        np.testing.assert_allclose(sum(terms.values()), f.value(points), atol=1e-10)

    def test_anchor_average_matches_anova(self):
        """Test that averaging anchored terms over uniform anchors gives the ANOVA term."""
        f = SampledFunction(
            d=2, radius=1.0, evaluate=lambda x: x[..., 0] * x[..., 1] + x[..., 0] ** 2
        )
        x = np.array([0.6, -0.3])
        exact = anova_term(f, (0,), x, QuadratureSpec.gauss(4))
        assert exact == pytest.approx(0.36 - 1 / 3)
        anchors = f.domain.sample(4000, np.random.default_rng(8))
        values = np.array([anchored_term(f, (0,), AnchorConfig(c=c.tolist()), x) for c in anchors])
        stderr = values.std(ddof=1) / np.sqrt(len(values))
        assert abs(values.mean() - exact) <= 4 * stderr

    def test_gauss_dimension_limit(self):
        f = SampledFunction(d=6, radius=1.0, evaluate=lambda x: x.sum(axis=-1))
        with pytest.raises(BudgetExceededError):
            anova_term(f, (), np.zeros(6), QuadratureSpec.gauss(3))


class TestDerivativeOracle:
    """Tests for the integral representation of anchored terms."""

    def test_product(self):
        value = anchored_term_via_derivative(
            product_function(), (0, 1), ORIGIN, [0.3, 0.5], QuadratureSpec.gauss(4)
        )
        assert value == pytest.approx(0.15)

    def test_empty_subset_returns_anchor_value(self):
        cfg = AnchorConfig(c=[0.4, 0.5])
        value = anchored_term_via_derivative(
            product_function(), (), cfg, [0.0, 0.0], QuadratureSpec.gauss(4)
        )
        assert value == pytest.approx(0.2)

    def test_sine(self):
        f = SampledFunction(
            d=2,
            radius=1.0,
            evaluate=lambda x: np.sin(x[..., 0]),
            grad=lambda x: np.stack([np.cos(x[..., 0]), np.zeros(x.shape[:-1])], axis=-1),
        )
        value = anchored_term_via_derivative(f, (0,), ORIGIN, [1.0, 0.0], QuadratureSpec.gauss(8))
        assert value == pytest.approx(np.sin(1.0), abs=1e-10)

    def test_matches_inclusion_exclusion(self):
        f = builtin_benchmark("f1").base
        cfg = AnchorConfig(c=[0.1] * 7)
        x = np.array([0.3, -0.2, 0.1, 0.4, -0.5, 0.2, 0.3])
        direct = anchored_term(f, (0, 3), cfg, x)
        oracle = anchored_term_via_derivative(f, (0, 3), cfg, x, QuadratureSpec.gauss(10))
        assert oracle == pytest.approx(direct, abs=1e-8)

    def test_missing_derivatives(self):
        f = SampledFunction(d=2, radius=1.0, evaluate=lambda x: x[..., 0] * x[..., 1])
        with pytest.raises(InvalidInputError, match="missing derivative access"):
            mixed_partial(f, (0, 1), np.zeros((1, 2)), allow_finite_differences=False)


class TestTermBound:
    """Tests for the derivative term bounds."""

    def test_equal_subsets(self):
        assert term_bound((0,), (0,), 1.0, TermVolumes(), TermBoundKind.ANCHORED_INF) == 1.0

    def test_one_extra_index(self):
        assert term_bound((0, 1), (0,), 1.0, TermVolumes(), TermBoundKind.ANCHORED_INF) == 2.0

    def test_anova_one(self):
        value = term_bound((0, 1, 2), (0,), 0.5, TermVolumes(), TermBoundKind.ANOVA_ONE)
        assert value == 2.0

    def test_anova_inf_scales_with_domain(self):
        vols = TermVolumes(vol_v=2.0, vol_D=4.0)
        assert term_bound((0,), (0,), 1.0, vols, "anova_inf") == 8.0

    def test_not_a_subset(self):
        with pytest.raises(InvalidInputError):
            term_bound((0,), (1,), 1.0, TermVolumes(), TermBoundKind.ANCHORED_INF)

    def test_bound_holds_for_anchored_term(self):
        """Test |f_u| <= ||d_u f||_inf lambda_u on x1 x2."""
        f = product_function()
        rng = np.random.default_rng(0)
        bound = term_bound((0, 1), (0, 1), 1.0, TermVolumes(vol_v=4.0), "anchored_inf")
        for x in f.domain.sample(50, rng):
            assert abs(anchored_term(f, (0, 1), ORIGIN, x)) <= bound


class TestSmallnessCounts:
    """Tests for derivative smallness counts and term norms."""

    def test_linear_function(self):
        f = linear_function(3)
        points = f.sample_points(100, np.random.default_rng(0))
        assert derivative_smallness_counts(f, points, np.inf) == (2, 3)

    @pytest.mark.parametrize("which,p,expected", [("f1", np.inf, (2, 18)), ("f2", 1, (0, 16))])
    def test_benchmarks(self, which, p, expected):
        f = builtin_benchmark(which).function
        points = f.sample_points(2000, np.random.default_rng(0))
        assert derivative_smallness_counts(f, points, p, 1e-4) == expected

    def test_rotated_benchmark_recovered_by_truth(self):
        """Test that undoing the rotation restores the counts."""
        bench = builtin_benchmark("f1", rotate=True, seed=3)
        f = compose_rotation(bench.function, bench.R.T)
        points = f.sample_points(2000, np.random.default_rng(1))
        assert derivative_smallness_counts(f, points, np.inf, 1e-4) == (2, 18)
        rotated_points = bench.function.sample_points(2000, np.random.default_rng(1))
        G, H = derivative_smallness_counts(bench.function, rotated_points, np.inf, 1e-4)
        assert H < 18

    def test_empty_points(self):
        with pytest.raises(InvalidInputError):
            derivative_smallness_counts(linear_function(), np.zeros((0, 3)), 1)

    def test_term_norms(self):
        f = SampledFunction(
            d=3, radius=1.0, evaluate=lambda x: x[..., 0] * x[..., 1] + x[..., 2]
        )
        points = f.domain.sample(200, np.random.default_rng(2))
        norms = anova_term_norms(f, points, QuadratureSpec.gauss(3), orders=[1, 2])
        assert set(norms) == {(0,), (1,), (2,), (0, 1), (0, 2), (1, 2)}
        assert norms[(0, 2)].norm_inf == pytest.approx(0.0, abs=1e-12)
        assert norms[(0, 1)].norm(np.inf) > 0.5
        assert minimal_term_norm(norms, 2, 1) == pytest.approx(0.0, abs=1e-12)
        assert superset_max_norm(norms, (0,), 1) >= norms[(0, 1)].norm_1

    def test_report_rows(self):
        f = linear_function(3)
        points = f.domain.sample(50, np.random.default_rng(3))
        norms = anova_term_norms(f, points, QuadratureSpec.gauss(3), orders=[1, 2])
        rows = term_norm_report_rows(f, norms, points)
        assert {row["p"] for row in rows} == {"1", "inf"}
        assert rows[0]["subset"] == "{1}"
        second_order = [r for r in rows if r["subset"] == "{2,3}"]
        assert all(r["bound"] == 0.0 for r in second_order)
