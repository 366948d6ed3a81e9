# Tests for the sparsifying pipeline
# Covers composition, stage events, evaluation metrics and trial batches

import numpy as np
import pytest
import scipy.linalg

from src.core.functions import SampledFunction
from src.core.graphs import BlockStructure, SparsityPattern
from src.errors import InvalidInputError, StageError
from src.events import PipelineEventBus, StageCompletedEvent, StageStartedEvent, TrialCompletedEvent
from src.models import InitMethod, MatrixInstanceSpec, PipelineConfig
from src.sparsify import (
    BlockDiagResult,
    FunctionSamples,
    GroundTruth,
    block_loss_sum,
    chi_histogram,
    compose_transform,
    failure_ratio,
    optimality_gap,
    protocol_specs,
    run_pipeline,
    run_trials,
    sample_function,
    sparsity_gap,
    summarize_rows,
)
from src.testgen import gen_matrix_set, haar_rotation


def separable_sines() -> SampledFunction:
    """f(x) = sin(2 x1) + sin(2 x2)"""

    def evaluate(x):
        return np.sin(2 * x[..., 0]) + np.sin(2 * x[..., 1])

    def grad(x):
        return 2 * np.cos(2 * x)

    def hess(x):
        out = np.zeros(x.shape + (2,))
        out[..., 0, 0] = -4 * np.sin(2 * x[..., 0])
        out[..., 1, 1] = -4 * np.sin(2 * x[..., 1])
        return out

    return SampledFunction(d=2, radius=1.0, evaluate=evaluate, grad=grad, hess=hess)


def ridge_function() -> SampledFunction:
    """f(x) = sin(x1 + x2), constant along (1, -1)"""

    def evaluate(x):
        return np.sin(x[..., 0] + x[..., 1])

    def grad(x):
        c = np.cos(x[..., 0] + x[..., 1])
        return np.stack([c, c], axis=-1)

    def hess(x):
        s = -np.sin(x[..., 0] + x[..., 1])
        return s[..., None, None] * np.ones(x.shape + (2,))

    return SampledFunction(d=2, radius=1.0, evaluate=evaluate, grad=grad, hess=hess)


@pytest.fixture
def planar_instance():
    spec = MatrixInstanceSpec(d=2, off_diag=[(0, 1)], diag=[0], N=10, rotation_seed=3, entry_seed=4)
    return gen_matrix_set(spec)


class TestFunctionSamples:
    """Tests for the pipeline input container."""

    def test_mismatched_gradients_rejected(self):
        with pytest.raises(InvalidInputError, match="do not pair"):
            FunctionSamples(np.zeros((4, 2, 2)), np.zeros((3, 2)))

    def test_mismatched_points_rejected(self):
        with pytest.raises(InvalidInputError, match="differ in number"):
            FunctionSamples(np.zeros((4, 2, 2)), points=np.zeros((5, 2)))

    def test_from_mapping_requires_hessians(self):
        with pytest.raises(InvalidInputError, match="hessians"):
            FunctionSamples.from_mapping({"gradients": [[1.0, 0.0]]})

    def test_shape_properties(self):
        samples = FunctionSamples(np.zeros((4, 3, 3)))
        assert samples.d == 3
        assert samples.N == 4

    def test_sample_function_symmetric(self):
        samples = sample_function(separable_sines(), n_points=20, seed=1)
        assert samples.hessians.shape == (20, 2, 2)
        assert samples.gradients.shape == (20, 2)
        assert np.allclose(samples.hessians, np.swapaxes(samples.hessians, 1, 2))
        assert np.all(np.linalg.norm(samples.points, axis=1) <= 1.0 + 1e-12)

    def test_sample_function_default_count(self):
        samples = sample_function(separable_sines(), seed=1)
        assert samples.N == 200

    def test_sample_function_needs_points(self):
        with pytest.raises(InvalidInputError):
            sample_function(separable_sines(), n_points=0)


class TestComposeTransform:
    """Tests for U_V . diag(U_B . blockdiag(U_k), I)."""

    def test_matches_manual_composition(self):
        rng = np.random.default_rng(0)
        U_V = haar_rotation(4, rng)
        perm = np.eye(3)[:, [2, 0, 1]]
        blockdiag = BlockDiagResult(
            U=perm,
            structure=BlockStructure(3, ((0, 1), (2,))),
            off_block_residual=0.0,
            eigen_gaps=np.zeros(0),
            eigenvalues=np.zeros(0),
        )
        rot = haar_rotation(2, rng)
        U = compose_transform(U_V, 3, blockdiag, [rot, np.eye(1)])

        inner = perm @ scipy.linalg.block_diag(rot, np.eye(1))
        expected = U_V @ scipy.linalg.block_diag(inner, np.eye(1))
        assert np.allclose(U, expected)
        assert np.allclose(U.T @ U, np.eye(4))


class TestRunPipeline:
    """Tests for the full vertex / block / component pipeline."""

    def test_separable_function(self):
        samples = sample_function(separable_sines(), n_points=200, seed=2)
        result = run_pipeline(samples, PipelineConfig())

        assert result.d1 == 2
        assert result.profile == (1, 1)
        assert all(b.init == "trivial" for b in result.blocks)
        assert result.patterns[1e-9].off_diag == frozenset()
        assert result.patterns[1e-9].diag == frozenset({0, 1})
        assert np.allclose(result.U_total.T @ result.U_total, np.eye(2))

    def test_ridge_function_has_one_active_variable(self):
        samples = sample_function(ridge_function(), n_points=50, seed=2)
        result = run_pipeline(samples, PipelineConfig())

        assert result.d1 == 1
        assert result.profile == (1,)
        direction = result.U_total[:, 0]
        assert abs(abs(direction @ np.array([1.0, 1.0])) / np.sqrt(2) - 1.0) < 1e-10
        assert result.patterns[1e-9] == SparsityPattern(2, frozenset(), frozenset({0}))

    def test_constant_function_fails_in_vertex_stage(self):
        samples = FunctionSamples(np.zeros((5, 3, 3)), np.zeros((5, 3)))
        with pytest.raises(StageError) as info:
            run_pipeline(samples)
        assert info.value.stage == "vertex_min"

    def test_matrix_set_recovers_support(self, planar_instance):
        truth = GroundTruth(planar_instance.pattern, planar_instance.truth_transform)
        result = run_pipeline(FunctionSamples(planar_instance.mats), PipelineConfig(), truth=truth)

        assert result.vertex is None
        assert result.d1 == 2
        assert result.profile == (2,)
        assert result.chi == {1e-9: 0, 1e-4: 0}
        assert abs(result.optimality_gap) < 1e-6

    def test_accepts_mapping_input(self, planar_instance):
        cfg = PipelineConfig(init=InitMethod.IDENTITY, polish=False)
        result = run_pipeline({"hessians": planar_instance.mats.tolist()}, cfg)
        assert result.d == 2
        assert result.chi is None

    def test_stage_events_in_order(self, planar_instance):
        bus = PipelineEventBus()
        started, completed = [], []
        bus.subscribe(StageStartedEvent, lambda e: started.append(e.stage))
        bus.subscribe(StageCompletedEvent, lambda e: completed.append(e.stage))

        run_pipeline(FunctionSamples(planar_instance.mats), PipelineConfig(), bus=bus)

        stages = ["vertex_min", "block_diag", "sparse_components", "evaluate"]
        assert started == stages
        assert completed == stages

    def test_report_is_one_based(self):
        samples = sample_function(separable_sines(), n_points=100, seed=3)
        report = run_pipeline(samples, PipelineConfig()).to_report()

        assert report.d == 2
        assert report.profile == [1, 1]
        pattern = report.patterns_by_eta["1e-09"]
        assert pattern["diag"] == [1, 2]
        assert pattern["off_diag"] == []
        assert pattern["ordered_count"] == 2
        assert len(report.U_total) == 2

    def test_parallel_blocks_match_serial(self):
        spec = MatrixInstanceSpec(d=4, off_diag=[(0, 1), (2, 3)], diag=[0, 2], N=10, rotation_seed=1, entry_seed=2)
        instance = gen_matrix_set(spec)
        serial = run_pipeline(FunctionSamples(instance.mats), PipelineConfig(jobs=1))
        parallel = run_pipeline(FunctionSamples(instance.mats), PipelineConfig(jobs=2))
        assert np.array_equal(serial.U_total, parallel.U_total)


class TestMetrics:
    """Tests for chi, failure ratios and optimality gaps."""

    @pytest.fixture
    def instance(self):
        spec = MatrixInstanceSpec(d=3, off_diag=[(0, 1)], diag=[2], N=10, rotation_seed=5, entry_seed=6)
        return gen_matrix_set(spec)

    def test_truth_transform_has_zero_gap(self, instance):
        assert sparsity_gap(instance.truth_transform, instance.mats, instance.pattern, 1e-9) == 0

    def test_identity_leaves_rotated_set_dense(self, instance):
        assert sparsity_gap(np.eye(3), instance.mats, instance.pattern, 1e-9) > 0

    def test_huge_threshold_is_negative(self, instance):
        assert sparsity_gap(instance.truth_transform, instance.mats, instance.pattern, 1e6) == -3

    def test_dimension_mismatch(self, instance):
        with pytest.raises(InvalidInputError, match="dimension"):
            sparsity_gap(np.eye(3), instance.mats, SparsityPattern(2), 1e-9)

    def test_failure_ratio(self):
        assert failure_ratio([2] + [0] * 99) == pytest.approx(0.01)
        assert failure_ratio([0, 0, 0]) == 0.0
        assert failure_ratio([1, 3, 2]) == 1.0
        assert failure_ratio([-1, 0]) == 0.5

    def test_failure_ratio_empty(self):
        with pytest.raises(InvalidInputError):
            failure_ratio([])

    def test_histogram(self):
        counts = chi_histogram([0, 0, 1, 2, 3, 7, -2])
        assert counts == {"0": 2, "1": 1, "2": 1, ">=3": 2, "<0": 1}

    def test_optimality_gap_of_truth_is_zero(self, instance):
        U = instance.truth_transform
        assert optimality_gap(U, U, instance.mats) == 0.0
        assert optimality_gap(np.eye(3), U, instance.mats) > 0

    def test_block_loss_sum_single_group(self, instance):
        whole = BlockStructure(3, ((0, 1, 2),))
        U = instance.truth_transform
        gap = optimality_gap(np.eye(3), U, instance.mats, structure=whole)
        assert gap == pytest.approx(optimality_gap(np.eye(3), U, instance.mats))
        assert block_loss_sum(U, instance.mats, whole) > 0


class TestTrials:
    """Tests for generated trial batches."""

    def test_protocol_specs_sizes(self):
        specs = protocol_specs(2, 20, seed=5)
        assert len(specs) == 20
        assert all(1 <= len(s.off_diag) + len(s.diag) <= 3 for s in specs)

    def test_protocol_specs_deterministic(self):
        assert protocol_specs(3, 4, seed=9) == protocol_specs(3, 4, seed=9)

    def test_protocol_specs_needs_trials(self):
        with pytest.raises(InvalidInputError):
            protocol_specs(2, 0)

    def test_results_keep_spec_order(self):
        bus = PipelineEventBus()
        seen = []
        bus.subscribe(TrialCompletedEvent, lambda e: seen.append(e))

        specs = protocol_specs(2, 3, seed=5)
        results = run_trials(specs, PipelineConfig(), jobs=2, bus=bus)

        assert [r.index for r in results] == [0, 1, 2]
        assert [r.spec for r in results] == specs
        assert len(seen) == 3
        row = results[0].row()
        assert row["d"] == 2
        assert "chi@1e-09" in row and "chi@0.0001" in row

    def test_summarize_rows(self):
        rows = [
            {"d": 2, "init": "grid", "method": "rgd", "chi@1e-09": 0, "optimality_gap": 0.0},
            {"d": 2, "init": "grid", "method": "rgd", "chi@1e-09": 2, "optimality_gap": 1.0},
            {"d": 3, "init": "grid", "method": "rgd", "chi@1e-09": 0, "optimality_gap": 0.5},
        ]
        table = summarize_rows(rows, [1e-9])

        assert list(table["d"]) == [2, 3]
        first = table.iloc[0]
        assert first["trials"] == 2
        assert first["failure_ratio"] == pytest.approx(0.5)
        assert first["chi=2"] == 1
        assert first["mean_optimality_gap"] == pytest.approx(0.5)

    def test_summarize_empty(self):
        with pytest.raises(InvalidInputError):
            summarize_rows([], [1e-9])
