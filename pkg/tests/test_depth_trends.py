"""
Desk-scale reproduction of the depth trends past zero training error

MLP depth 6, width 64, on a 4-class Gaussian mixture (dim 32, 500 per class,
separation 4, std 1). The one-cycle schedule covers 300 epochs; training then
continues until twice the first zero-error epoch.
"""

import pytest

from src.config import ExperimentConfig
from src.experiment_layer import ExperimentRunner

pytestmark = pytest.mark.slow

ACTIVATIONS = ["relu", "tanh", "leakyrelu"]


@pytest.fixture(scope="module", params=ACTIVATIONS)
def terminal_report(request):
    config = ExperimentConfig.model_validate({
        'name': f"depth-trend-{request.param}",
        'model': {'depth': 6, 'width': 64, 'activation': request.param},
        'data': {'synthetic': {'class_count': 4, 'input_dim': 32, 'per_class_n': 500,
                               'separation': 4.0, 'std': 1.0}},
        'training': {'epochs': 300, 'tpt_factor': 2.0, 'max_epochs': 1500,
                     'extension_lr': 0.01, 'show_progress': False},
        'seeds': {'model': 0, 'data': 0, 'subsample': 0}
    })
    return ExperimentRunner(config).run()


def test_trained_past_zero_error(terminal_report):
    assert terminal_report.tpt_epoch is not None
    assert terminal_report.final_checkpoint.epoch >= 2 * terminal_report.tpt_epoch


def test_within_class_variability_shrinks_with_depth(terminal_report):
    initial = terminal_report.checkpoints[0].metric_series("nc1")
    final = terminal_report.final_checkpoint.metric_series("nc1")
    assert all(f < i for f, i in zip(final, initial))
    assert final[-1] < 0.5 * final[0]


def test_angles_within_range(terminal_report):
    angles = terminal_report.final_checkpoint.metric_series("nc2_angles")
    assert all(0.0 <= a <= 1.0 + 1.0 / 3 for a in angles)


@pytest.mark.xfail(reason="at this scale the deepest layer stays above half the first layer; see DESIGN.md")
def test_angles_halve_from_first_to_deepest_layer(terminal_report):
    angles = terminal_report.final_checkpoint.metric_series("nc2_angles")
    assert angles[-1] < 0.5 * angles[0]


def test_ncc_mismatch_reaches_zero_at_depth(terminal_report):
    mismatch = terminal_report.final_checkpoint.metric_series("nc4")
    assert mismatch[-1] == 0.0
    assert all(b <= a + 0.02 for a, b in zip(mismatch, mismatch[1:]))
