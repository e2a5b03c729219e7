"""
Tests for SGD with momentum, the one-cycle schedule and model snapshots
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.model_layer import (
    ActivationKind,
    ArchitectureSpec,
    MlpModel,
    ModelGradients,
    OneCycleSchedule,
    SgdState,
    SnapshotFormatError,
    init_model,
    load_model,
    lr_at,
    save_model,
    sgd_step
)


def scalar_model(value: float = 1.0) -> MlpModel:
    return MlpModel([np.array([[value]])], [np.array([0.0])], ActivationKind.RELU)


def scalar_grads(value: float) -> ModelGradients:
    return ModelGradients([np.array([[value]])], [np.array([0.0])])


class TestSgdStep:
    def test_two_momentum_steps(self):
        model = scalar_model()
        state = SgdState(model, momentum=0.9, weight_decay=0.0)

        sgd_step(model, scalar_grads(0.5), state, lr=0.1)
        assert model.weights[0][0, 0] == pytest.approx(0.95)
        assert state.buffers[0][0, 0] == pytest.approx(0.5)

        sgd_step(model, scalar_grads(0.5), state, lr=0.1)
        assert state.buffers[0][0, 0] == pytest.approx(0.95)
        assert model.weights[0][0, 0] == pytest.approx(0.855)
        assert state.steps == 2
        assert state.learning_rate == 0.1

    def test_weight_decay_is_coupled(self):
        model = scalar_model(2.0)
        state = SgdState(model, momentum=0.0, weight_decay=0.1)
        sgd_step(model, scalar_grads(0.0), state, lr=0.5)
        assert model.weights[0][0, 0] == pytest.approx(2.0 - 0.5 * 0.2)

    def test_zero_lr_leaves_parameters(self):
        model = scalar_model()
        state = SgdState(model)
        sgd_step(model, scalar_grads(3.0), state, lr=0.0)
        assert model.weights[0][0, 0] == 1.0

    def test_shape_mismatch(self):
        model = scalar_model()
        state = SgdState(model)
        bad = ModelGradients([np.ones((2, 1))], [np.zeros(1)])
        with pytest.raises(ValueError):
            sgd_step(model, bad, state, lr=0.1)


class TestOneCycleSchedule:
    @pytest.fixture
    def schedule(self):
        return OneCycleSchedule(max_lr=1.0, total_steps=100, warmup_fraction=0.3,
                                start_div=25.0, final_div=1e4)

    def test_endpoints(self, schedule):
        assert lr_at(schedule, 0) == pytest.approx(0.04)
        assert lr_at(schedule, 30) == pytest.approx(1.0)
        assert lr_at(schedule, 100) == pytest.approx(1e-4)

    def test_warmup_midpoint(self, schedule):
        assert lr_at(schedule, 15) == pytest.approx(0.52)

    def test_monotone_phases(self, schedule):
        warmup = [lr_at(schedule, s) for s in range(0, 31)]
        decay = [lr_at(schedule, s) for s in range(30, 101)]
        assert all(b >= a for a, b in zip(warmup, warmup[1:]))
        assert all(b <= a for a, b in zip(decay, decay[1:]))

    @pytest.mark.parametrize("step", [-1, 101])
    def test_out_of_range(self, schedule, step):
        with pytest.raises(ValueError):
            lr_at(schedule, step)

    def test_empty_schedule(self):
        assert lr_at(OneCycleSchedule(max_lr=0.5, total_steps=0), 0) == pytest.approx(0.02)

    def test_divisor_below_one_rejected(self):
        with pytest.raises(ValueError):
            OneCycleSchedule(max_lr=1.0, total_steps=10, start_div=0.5)

    @settings(max_examples=200, deadline=None)
    @given(
        max_lr=st.floats(1e-4, 10.0),
        total=st.integers(1, 5000),
        fraction=st.floats(0.05, 0.95),
        data=st.data()
    )
    def test_bounded_by_peak_and_floor(self, max_lr, total, fraction, data):
        schedule = OneCycleSchedule(max_lr=max_lr, total_steps=total, warmup_fraction=fraction)
        step = data.draw(st.integers(0, total))
        lr = lr_at(schedule, step)
        assert max_lr / 1e4 * (1 - 1e-12) <= lr <= max_lr * (1 + 1e-12)


class TestSnapshot:
    @pytest.mark.parametrize("kind", list(ActivationKind))
    def test_round_trip(self, tmp_path, kind):
        spec = ArchitectureSpec(input_dim=5, hidden_dims=[4, 3], class_count=2,
                                activation=kind, leaky_slope=0.25)
        model = init_model(spec, seed=11)
        model.biases[1] += 0.5

        loaded = load_model(save_model(model, tmp_path / "model.ncmd"))

        assert loaded.activation == kind
        assert loaded.leaky_slope == 0.25
        for a, b in zip(model.parameters(), loaded.parameters()):
            np.testing.assert_array_equal(a, b)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "model.ncmd"
        save_model(scalar_model(), path)
        data = bytearray(path.read_bytes())
        data[:4] = b"XXXX"
        path.write_bytes(bytes(data))
        with pytest.raises(SnapshotFormatError, match="magic"):
            load_model(path)

    def test_truncated(self, tmp_path):
        path = tmp_path / "model.ncmd"
        save_model(scalar_model(), path)
        path.write_bytes(path.read_bytes()[:-3])
        with pytest.raises(SnapshotFormatError):
            load_model(path)


class TestSgdWorkedExamples:
    def test_zero_gradient_fixed_point(self):
        model = scalar_model(0.7)
        state = SgdState(model, weight_decay=0.0)
        sgd_step(model, scalar_grads(0.0), state, lr=0.1)
        assert model.weights[0][0, 0] == 0.7

    def test_single_step(self):
        model = scalar_model(1.0)
        sgd_step(model, scalar_grads(1.0), SgdState(model, weight_decay=0.0), lr=0.1)
        assert model.weights[0][0, 0] == pytest.approx(0.9)

    def test_second_update_unrolls_momentum(self):
        model = scalar_model(1.0)
        state = SgdState(model, momentum=0.9, weight_decay=0.0)
        sgd_step(model, scalar_grads(2.0), state, lr=0.1)
        before = model.weights[0][0, 0]
        sgd_step(model, scalar_grads(2.0), state, lr=0.1)
        assert before - model.weights[0][0, 0] == pytest.approx(0.1 * 1.9 * 2.0)
