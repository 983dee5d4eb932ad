import math

import numpy as np
import pytest

from app.core.exceptions import ConfigError, DataError
from app.models import ExtensionMode, GamModel, LossKind, LossSpec, StepFunction
from app.models.dataset import tie_group_starts
from app.services.gam import GamService
from app.services.tv import TVService


class TestBuildDataset:
    """Tests for GamService.build_dataset."""

    def test_sort_order_of_unsorted_column(self):
        data = GamService.build_dataset([[3.0], [1.0], [2.0]], [0.0, 0.0, 0.0])

        order = data.feature_orders[0]
        assert order.order.tolist() == [1, 2, 0]
        assert order.n_groups == 3
        assert data.m == 3 and data.p == 1

    def test_ties_share_a_group_in_stable_order(self):
        data = GamService.build_dataset([[1.0], [1.0], [2.0]], [0.0, 0.0, 0.0])

        order = data.feature_orders[0]
        assert order.order.tolist() == [0, 1, 2]
        assert order.group_starts.tolist() == [0, 2]
        assert order.group_of.tolist() == [0, 0, 1]
        assert order.group_sizes.tolist() == [2, 1]
        assert order.values.tolist() == [1.0, 2.0]

    def test_tie_group_starts_needs_sorted_input(self):
        assert tie_group_starts([0.0, 0.0, 1.0, 2.0, 2.0]).tolist() == [0, 2, 3]

        with pytest.raises(DataError, match="sorted"):
            tie_group_starts([1.0, 0.0])

    def test_single_sample(self):
        data = GamService.build_dataset([[5.0]], [1.0])

        assert data.feature_orders[0].order.tolist() == [0]
        assert data.feature_orders[0].n_groups == 1

    def test_negative_zero_ties_with_zero(self):
        data = GamService.build_dataset([[-0.0], [0.0]], [0.0, 0.0])

        assert data.feature_orders[0].n_groups == 1

    def test_merge_sums_over_groups(self):
        data = GamService.build_dataset([[2.0], [1.0], [2.0], [0.0]], [0.0] * 4)

        merged = data.feature_orders[0].merge(np.array([1.0, 10.0, 100.0, 1000.0]))
        assert merged.tolist() == [1000.0, 10.0, 101.0]

    def test_rejects_non_finite_with_location(self):
        with pytest.raises(DataError, match="row 1, column 1"):
            GamService.build_dataset([[1.0, 2.0], [3.0, float("nan")]], [0.0, 0.0])

    def test_rejects_infinite_target(self):
        with pytest.raises(DataError, match="row 0"):
            GamService.build_dataset([[1.0]], [float("inf")])

    def test_rejects_empty(self):
        with pytest.raises(DataError, match="no samples"):
            GamService.build_dataset(np.empty((0, 2)), [])

    def test_rejects_length_mismatch(self):
        with pytest.raises(DataError):
            GamService.build_dataset([[1.0], [2.0]], [1.0])

    def test_arrays_are_read_only(self):
        data = GamService.build_dataset([[1.0], [2.0]], [1.0, 2.0])

        assert not data.features.flags.writeable
        assert not data.targets.flags.writeable
        assert not data.feature_orders[0].order.flags.writeable


class TestStepFunction:
    """Tests for StepFunction evaluation, TV and compression."""

    @pytest.fixture
    def zigzag(self):
        return StepFunction(knots=[0.0, 1.0, 2.0], values=[1.0, -1.0, 1.0])

    def test_right_continuous_at_knots(self, zigzag):
        assert zigzag(0.0) == 1.0
        assert zigzag(0.5) == 1.0
        assert zigzag(1.0) == -1.0
        assert zigzag(2.0) == 1.0

    def test_compact_mode_is_zero_outside(self, zigzag):
        assert zigzag(-0.5) == 0.0
        assert zigzag(2.5) == 0.0

    def test_clamp_mode_holds_end_values(self, zigzag):
        clamped = zigzag.with_mode(ExtensionMode.CLAMP)

        assert clamped(-10.0) == 1.0
        assert clamped(10.0) == 1.0

    def test_right_extent_is_closed(self):
        f = StepFunction(knots=[0.0, 2.0], values=[1.0, 3.0], right_extent=1.0)

        assert f(3.0) == 3.0
        assert f(3.0001) == 0.0

    def test_vectorized_evaluation(self, zigzag):
        out = zigzag(np.array([-1.0, 0.0, 1.5, 2.0, 3.0]))

        assert out.tolist() == [0.0, 1.0, -1.0, 1.0, 0.0]

    def test_empty_function_is_zero(self):
        f = StepFunction.zero()

        assert f(1.0) == 0.0
        assert f.total_variation() == 0.0

    def test_total_variation_modes(self, zigzag):
        assert zigzag.total_variation(ExtensionMode.COMPACT) == 6.0
        assert zigzag.total_variation(ExtensionMode.CLAMP) == 4.0

    def test_rejects_unsorted_knots(self):
        with pytest.raises(DataError, match="strictly increasing"):
            StepFunction(knots=[0.0, 0.0], values=[1.0, 2.0])

    def test_rejects_length_mismatch(self):
        with pytest.raises(DataError):
            StepFunction(knots=[0.0, 1.0], values=[1.0])

    @pytest.mark.parametrize("mode", [ExtensionMode.COMPACT, ExtensionMode.CLAMP])
    def test_compress_preserves_the_function(self, mode):
        f = StepFunction(knots=[0.0, 1.0, 2.0, 3.0], values=[1.0, 1.0, 2.0, 2.0], extension_mode=mode)
        compressed = f.compress()
        grid = np.linspace(-1.0, 4.0, 101)

        assert compressed.knots.tolist() == [0.0, 2.0, 3.0]
        assert np.array_equal(f(grid), compressed(grid))
        assert compressed.total_variation() == f.total_variation()

    def test_compress_all_zero_is_empty(self):
        f = StepFunction(knots=[0.0, 1.0], values=[0.0, 0.0])

        assert f.compress().is_empty

    def test_tv_invariant_under_monotone_reparametrization(self, zigzag):
        model = GamModel(weight_functions=(zigzag,))
        moved = GamModel(weight_functions=(zigzag.reparametrize(lambda k: np.exp(k) + k ** 3),))

        assert moved.budget_used == model.budget_used


class TestPredict:
    """Tests for GamService.predict."""

    def test_zero_model(self):
        model = GamModel.zero(p=3)

        assert GamService.predict(model, [1.0, -2.0, 3.0]) == 0.0

    def test_constant_extension(self):
        f = StepFunction(knots=[0.0], values=[2.0], extension_mode=ExtensionMode.CLAMP)
        model = GamModel(weight_functions=(f,))

        assert GamService.predict(model, [5.0]) == 2.0

    def test_additivity(self):
        f1 = StepFunction(knots=[0.0], values=[1.0], extension_mode=ExtensionMode.CLAMP)
        f2 = StepFunction(knots=[0.0], values=[-3.0], extension_mode=ExtensionMode.CLAMP)
        model = GamModel(weight_functions=(f1, f2))

        assert GamService.predict(model, [1.0, 1.0]) == -2.0

    def test_dropping_a_feature_removes_its_term(self):
        rng = np.random.default_rng(0)
        functions = tuple(
            StepFunction(knots=np.sort(rng.random(4)), values=rng.normal(size=4)) for _ in range(3)
        )
        model = GamModel(weight_functions=functions, intercept=0.25)
        x = rng.random(3)

        reduced = model.with_function(1, StepFunction.zero())
        difference = GamService.predict(model, x) - GamService.predict(reduced, x)
        assert difference == pytest.approx(float(functions[1](x[1])), abs=1e-12)

    def test_budget_used_sums_feature_tvs(self):
        functions = (
            StepFunction(knots=[0.0], values=[1.0]),
            StepFunction(knots=[0.0, 1.0, 2.0], values=[1.0, -1.0, 1.0]),
        )
        model = GamModel(weight_functions=functions)

        assert model.budget_used == sum(TVService.total_variation(f) for f in functions) == 8.0

    def test_length_mismatch(self):
        with pytest.raises(DataError):
            GamService.predict(GamModel.zero(p=2), [1.0])

    def test_predict_many_matches_predict(self):
        f = StepFunction(knots=[0.0, 1.0], values=[2.0, -1.0], extension_mode=ExtensionMode.CLAMP)
        model = GamModel(weight_functions=(f, f), intercept=1.0)
        X = np.array([[0.5, 1.5], [-1.0, 0.0], [2.0, 2.0]])

        batch = GamService.predict_many(model, X)
        assert batch.tolist() == [GamService.predict(model, row) for row in X]


class TestLossSpec:
    """Tests for loss values and the constants the certificates use."""

    def test_loss_values(self):
        assert GamService.loss_value(LossSpec(kind=LossKind.HINGE), 1.0, 1.0) == 0.0
        assert GamService.loss_value(LossSpec(kind=LossKind.SQUARED), 3.0, 1.0) == 4.0
        assert GamService.loss_value(LossSpec(kind=LossKind.LOGISTIC), 0.0, 1.0) == pytest.approx(math.log(2))
        assert GamService.loss_value(LossSpec(kind=LossKind.ABSOLUTE), -1.0, 2.0) == 3.0

    def test_classification_losses_reject_bad_labels(self):
        with pytest.raises(DataError, match="labels"):
            GamService.loss_value(LossSpec(kind=LossKind.LOGISTIC), 0.0, 0.5)

    def test_lipschitz_constants(self):
        assert LossSpec(kind=LossKind.LOGISTIC).lipschitz == 1.0
        assert LossSpec(kind=LossKind.HINGE).lipschitz == 1.0
        assert LossSpec(kind=LossKind.ABSOLUTE).lipschitz == 1.0
        assert LossSpec(kind=LossKind.SQUARED).lipschitz is None

    def test_squared_loss_over_a_box(self):
        spec = LossSpec(kind=LossKind.SQUARED, prediction_range=(-1.0, 1.0), target_range=(-2.0, 2.0))

        assert spec.lipschitz == 6.0
        assert spec.bound == 9.0

    def test_clipped_hinge(self):
        spec = LossSpec(kind=LossKind.HINGE, clip=2.0)

        assert spec.bound == 2.0
        assert not spec.is_convex
        assert float(spec.value(-5.0, 1.0)) == 2.0
        assert float(spec.gradient(-5.0, 1.0)) == 0.0

    def test_rejects_inverted_range(self):
        with pytest.raises(ConfigError):
            LossSpec(kind=LossKind.SQUARED, prediction_range=(1.0, -1.0))

    def test_hessian(self):
        logistic = LossSpec(kind=LossKind.LOGISTIC)

        assert float(logistic.hessian(0.0, 1.0)) == pytest.approx(0.25)
        assert float(logistic.hessian(3.0, -1.0)) == pytest.approx(float(logistic.hessian(-3.0, 1.0)))
        assert float(logistic.hessian(40.0, 1.0)) < 1e-16
        assert LossSpec(kind=LossKind.SQUARED).hessian(np.zeros(3), np.ones(3)).tolist() == [2.0, 2.0, 2.0]

    def test_hessian_needs_a_smooth_loss(self):
        with pytest.raises(ConfigError):
            LossSpec(kind=LossKind.HINGE).hessian(0.0, 1.0)

    def test_logistic_gradient(self):
        spec = LossSpec(kind=LossKind.LOGISTIC)

        assert float(spec.gradient(0.0, 1.0)) == pytest.approx(-0.5)

    def test_risk_is_mean_loss(self):
        data = GamService.build_dataset([[0.0], [1.0]], [1.0, -1.0])

        assert GamService.risk(GamModel.zero(p=1), data, LossSpec(kind=LossKind.SQUARED)) == 1.0
