"""
Tests for the command-line entry point and its exit-code contract
"""

import json

import pandas as pd
import pytest
import yaml

from src import main as cli
from src.experiment_layer import trend_summary, NcReport
from src.metrics_layer import analyze_layer, write_dump
from src.model_layer import load_model

from conftest import collapsed_activations, gaussian_activations


@pytest.fixture(autouse=True)
def log_dir(tmp_path, monkeypatch):
    monkeypatch.setattr(cli.settings, 'log_dir', str(tmp_path / "logs"))


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text(yaml.safe_dump({
        'name': 'cli-test',
        'model': {'depth': 2, 'width': 16},
        'data': {'synthetic': {'class_count': 3, 'input_dim': 6, 'per_class_n': 20, 'separation': 6.0, 'std': 0.5}},
        'optimizer': {'batch_size': 16},
        'training': {'epochs': 6, 'checkpoint_epochs': [0, 3, 6], 'show_progress': False}
    }))
    return path


def run_cli(*argv):
    return cli.main([str(a) for a in argv])


class TestTrain:
    def test_happy_path(self, tmp_path, config_file):
        out = tmp_path / "out"
        assert run_cli('--out-dir', out, 'train', '--config', config_file) == cli.EXIT_OK

        assert (out / "nc_report.json").exists()
        assert (out / "nc_report.csv").exists()
        model = load_model(out / "model.ncmd")
        assert model.hidden_dims == [16, 16]

        frame = pd.read_csv(out / "nc_report.csv")
        assert len(frame) == 3 * 2

    def test_overrides_win_and_are_echoed(self, tmp_path, config_file):
        out = tmp_path / "out"
        code = run_cli('--out-dir', out, 'train', '--config', config_file,
                       '--width', 8, '--activation', 'tanh', '--seed', 5, '--seed-model', 9)
        assert code == cli.EXIT_OK

        report = json.loads((out / "nc_report.json").read_text())
        assert report['config']['model']['width'] == 8
        assert report['config']['model']['activation'] == 'tanh'
        assert report['config']['seeds'] == {'model': 9, 'data': 5, 'subsample': 5}

    def test_zero_epochs_override(self, tmp_path, config_file):
        out = tmp_path / "out"
        assert run_cli('--out-dir', out, 'train', '--config', config_file, '--epochs', 0) == cli.EXIT_OK
        report = json.loads((out / "nc_report.json").read_text())
        assert [c['epoch'] for c in report['checkpoints']] == [0]

    def test_missing_config(self, tmp_path):
        assert run_cli('--out-dir', tmp_path, 'train', '--config', tmp_path / "nope.yaml") == cli.EXIT_USAGE

    def test_invalid_config_value(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("model:\n  depth: -1\n")
        assert run_cli('--out-dir', tmp_path, 'train', '--config', path) == cli.EXIT_USAGE

    def test_unparseable_yaml(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("model: [unclosed\n")
        assert run_cli('--out-dir', tmp_path, 'train', '--config', path) == cli.EXIT_USAGE

    def test_bad_activation_flag(self, tmp_path, config_file):
        assert run_cli('train', '--config', config_file, '--activation', 'gelu') == cli.EXIT_USAGE

    def test_runtime_failure_flushes_partial_report(self, tmp_path, config_file, mocker):
        from src.experiment_layer import runner as runner_module
        real = runner_module.analyze_layer
        calls = {'n': 0}

        def fail_late(*args, **kwargs):
            calls['n'] += 1
            if calls['n'] > 2:
                raise RuntimeError("injected failure")
            return real(*args, **kwargs)

        mocker.patch.object(runner_module, 'analyze_layer', side_effect=fail_late)
        out = tmp_path / "out"
        assert run_cli('--out-dir', out, 'train', '--config', config_file) == cli.EXIT_RUNTIME

        report = json.loads((out / "nc_report.json").read_text())
        assert [c['epoch'] for c in report['checkpoints']] == [0]
        assert not (out / "model.ncmd").exists()

    def test_out_dir_after_subcommand(self, tmp_path, config_file):
        out = tmp_path / "late"
        assert run_cli('train', '--config', config_file, '--out-dir', out) == cli.EXIT_OK
        assert (out / "nc_report.json").exists()
        assert (out / "model.ncmd").exists()

    def test_activation_dumps_match_final_checkpoint(self, tmp_path, config_file):
        out = tmp_path / "out"
        assert run_cli('train', '--config', config_file, '--out-dir', out, '--dump-activations') == cli.EXIT_OK
        dumps = [out / "activations" / f"layer_{j}.ncad" for j in (1, 2)]
        assert all(p.exists() for p in dumps)

        assert run_cli('analyze', *dumps, '--out-dir', out) == cli.EXIT_OK
        frame = pd.read_csv(out / "nc_analysis.csv", float_precision="round_trip")
        final = json.loads((out / "nc_report.json").read_text())['checkpoints'][-1]
        for (_, row), layer in zip(frame.iterrows(), final['layers']):
            for metric in ("nc1", "nc2_norms", "nc2_angles"):
                assert row[metric] == pytest.approx(layer[metric], rel=1e-9, abs=1e-12)
            assert row['nc4'] == layer['nc4']


class TestAnalyze:
    def test_collapsed_dump(self, tmp_path):
        acts, labels = collapsed_activations(4, dim=6, per_class=5)
        dump = write_dump(tmp_path / "collapsed.ncad", acts, labels, labels, 4)

        assert run_cli('--out-dir', tmp_path, 'analyze', dump) == cli.EXIT_OK
        row = pd.read_csv(tmp_path / "nc_analysis.csv").iloc[0]
        assert row['nc1'] == pytest.approx(0.0, abs=1e-10)
        assert row['nc2_norms'] == pytest.approx(0.0, abs=1e-10)
        assert row['nc2_angles'] == pytest.approx(0.0, abs=1e-10)
        assert row['nc4'] == 0.0

    def test_rows_in_argument_order(self, tmp_path, rng):
        paths, expected = [], []
        for name, dim in (("b.ncad", 5), ("a.ncad", 9)):
            acts, labels = gaussian_activations(rng, 3, dim, per_class=10)
            paths.append(write_dump(tmp_path / name, acts, labels, labels, 3))
            expected.append(analyze_layer(acts, labels, labels, class_count=3))

        assert run_cli('--out-dir', tmp_path, 'analyze', *paths) == cli.EXIT_OK
        frame = pd.read_csv(tmp_path / "nc_analysis.csv", float_precision="round_trip")
        assert frame['dump'].tolist() == [str(p) for p in paths]
        for (_, row), metrics in zip(frame.iterrows(), expected):
            for metric in ("nc1", "nc2_norms", "nc2_angles", "nc4"):
                assert row[metric] == pytest.approx(getattr(metrics, metric), abs=1e-12)

    def test_dump_flag(self, tmp_path, rng):
        acts, labels = gaussian_activations(rng, 2, 3, per_class=5)
        dump = write_dump(tmp_path / "x.ncad", acts, labels, labels, 2)
        assert run_cli('--out-dir', tmp_path, 'analyze', '--dump', dump) == cli.EXIT_OK

    def test_corrupt_header(self, tmp_path):
        path = tmp_path / "corrupt.ncad"
        path.write_bytes(b"JUNKJUNKJUNKJUNKJUNKJUNKJUNKJUNK")
        assert run_cli('--out-dir', tmp_path, 'analyze', path) == cli.EXIT_USAGE
        assert not (tmp_path / "nc_analysis.csv").exists()

    def test_missing_dump(self, tmp_path):
        assert run_cli('--out-dir', tmp_path, 'analyze', tmp_path / "none.ncad") == cli.EXIT_USAGE

    def test_no_dumps(self, tmp_path):
        assert run_cli('--out-dir', tmp_path, 'analyze') == cli.EXIT_USAGE


class TestReport:
    @pytest.fixture
    def report_json(self, tmp_path, config_file):
        out = tmp_path / "train"
        assert run_cli('--out-dir', out, 'train', '--config', config_file, '--epochs', 3) == cli.EXIT_OK
        return out / "nc_report.json"

    def test_plot_tables_and_summary(self, tmp_path, report_json):
        out = tmp_path / "plots"
        assert run_cli('--out-dir', out, 'report', report_json) == cli.EXIT_OK

        for metric in ("nc1", "nc2_norms", "nc2_angles", "nc4"):
            table = pd.read_csv(out / f"plot_{metric}.tsv", sep='\t', index_col='layer')
            assert list(table.columns) == ['epoch_0', 'epoch_3']
            assert list(table.index) == [1, 2]

        report = NcReport.model_validate(json.loads(report_json.read_text()))
        summary = json.loads((out / "trend_summary.json").read_text())
        assert summary == trend_summary(report).model_dump(mode="json")

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        assert run_cli('--out-dir', tmp_path, 'report', path) == cli.EXIT_USAGE

    def test_empty_checkpoints(self, tmp_path):
        path = tmp_path / "empty.json"
        path.write_text(json.dumps(NcReport().model_dump(mode="json")))
        assert run_cli('--out-dir', tmp_path, 'report', path) == cli.EXIT_USAGE


def test_missing_subcommand():
    assert cli.main([]) == cli.EXIT_USAGE
