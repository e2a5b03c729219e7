"""
Experiment Runner
Trains an MLP and pauses at scheduled epochs for a full-training-set NC analysis step
"""

from concurrent.futures import ThreadPoolExecutor
import math
from typing import Any, Dict, List, Optional

import numpy as np
from loguru import logger
from tqdm import tqdm

from .report import CheckpointRecord, NcReport
from ..config import ExperimentConfig, settings
from ..data_layer import DataIngestionManager, LabeledDataset
from ..metrics_layer import LayerMetrics, analyze_layer
from ..model_layer import (
    ActivationKind,
    ArchitectureSpec,
    MlpModel,
    ModelGradients,
    OneCycleSchedule,
    SgdState,
    backward,
    forward_sharded,
    init_model,
    lr_at,
    mse_loss,
    sgd_step,
    train_error
)
from ..utils import Timer, config_fingerprint


class ExperimentRunner:
    """Runs one experiment: one training thread plus per-layer analysis fan-out"""

    def __init__(self, config: ExperimentConfig, dataset: Optional[LabeledDataset] = None):
        """
        Initialize the runner

        Args:
            config: Validated experiment configuration
            dataset: Pre-built training set; built from config.data when None
        """
        self.config = config
        self.dataset = dataset
        self.dataset_metadata: Dict[str, Any] = {}
        self.model: Optional[MlpModel] = None
        self.report: Optional[NcReport] = None
        self.threads = config.analysis.threads or settings.analysis_threads

        logger.info(f"ExperimentRunner initialized: {config.name} (analysis threads: {self.threads})")

    def prepare_dataset(self) -> LabeledDataset:
        if self.dataset is None:
            manager = DataIngestionManager(self.config.data, seed=self.config.seeds.data)
            self.dataset, self.dataset_metadata = manager.ingest()
        else:
            self.dataset_metadata = {
                'source': 'in-memory',
                'size': self.dataset.size,
                'input_dim': self.dataset.input_dim,
                'class_count': self.dataset.class_count,
                'class_counts': self.dataset.class_counts.tolist()
            }
        return self.dataset

    def architecture(self, dataset: LabeledDataset) -> ArchitectureSpec:
        cfg = self.config.model
        return ArchitectureSpec.uniform(
            input_dim=dataset.input_dim,
            class_count=dataset.class_count,
            width=cfg.width,
            depth=cfg.depth,
            activation=ActivationKind(cfg.activation),
            leaky_slope=cfg.leaky_slope
        )

    def analyze(self, model: MlpModel, dataset: LabeledDataset, epoch: int) -> CheckpointRecord:
        """
        NC analysis step on the frozen model over the full training set

        Layers are analyzed in parallel; results are kept in layer order.
        """
        trace = forward_sharded(model, dataset.inputs, self.threads)
        predictions = trace.predictions
        cfg = self.config.analysis

        def analyze_one(j: int) -> LayerMetrics:
            return analyze_layer(
                trace.post_activations[j - 1],
                dataset.labels,
                predictions,
                cap=cfg.coord_cap,
                seed=self.config.seeds.subsample,
                rel_tol=cfg.rel_tol,
                layer=j,
                class_count=dataset.class_count
            )

        layers = range(1, model.depth + 1)
        if self.threads > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                metrics = list(pool.map(analyze_one, layers))
        else:
            metrics = [analyze_one(j) for j in layers]

        record = CheckpointRecord(
            epoch=epoch,
            train_error=float(np.mean(predictions != dataset.labels)),
            train_loss=mse_loss(trace.logits, dataset.labels),
            layers=metrics
        )
        logger.info(
            f"Checkpoint epoch {epoch}: train_error={record.train_error:.4f} "
            f"loss={record.train_loss:.6f} nc1[first,last]=({metrics[0].nc1:.4g}, {metrics[-1].nc1:.4g})"
        )
        return record

    def _new_report(self) -> NcReport:
        effective = self.config.model_dump(mode="json")
        return NcReport(
            name=self.config.name,
            config=effective,
            config_fingerprint=config_fingerprint(effective),
            dataset=self.dataset_metadata,
            coord_cap=self.config.analysis.coord_cap
        )

    def _checked_gradients(self, model: MlpModel, inputs, labels, epoch: int) -> ModelGradients:
        grads = backward(model, inputs, labels)
        if not np.isfinite(grads.norm()):
            raise FloatingPointError(f"Non-finite gradient in epoch {epoch}; lower schedule.max_lr")
        return grads

    def run(self) -> NcReport:
        """
        Train for the configured epochs, analyzing at every checkpoint epoch

        Checkpoint 0 records the initialization. Analysis never touches the
        parameters, optimizer state or shuffling RNG, so the checkpoint
        schedule does not influence training.

        With training.tpt_factor set, the train error is checked after every
        epoch and the first zero-error epoch t becomes a checkpoint. Training
        then runs until epoch max(epochs, ceil(tpt_factor * t)), or keeps going
        past the schedule until zero error is reached, never beyond
        training.epoch_limit. Epochs past the schedule use training.extension_lr
        (default: the schedule's starting rate). The last epoch is always a
        checkpoint in this mode.

        Returns:
            Complete NcReport; on failure self.report holds the partial report
        """
        dataset = self.prepare_dataset()
        cfg = self.config
        training = cfg.training
        model = init_model(self.architecture(dataset), cfg.seeds.model)
        self.model = model
        self.report = self._new_report()

        batch_size = min(cfg.optimizer.batch_size, dataset.size)
        batches_per_epoch = -(-dataset.size // batch_size)
        schedule = OneCycleSchedule(
            max_lr=cfg.schedule.max_lr,
            total_steps=training.epochs * batches_per_epoch,
            warmup_fraction=cfg.schedule.warmup_fraction,
            start_div=cfg.schedule.start_div,
            final_div=cfg.schedule.final_div
        )
        extension_lr = training.extension_lr or cfg.schedule.max_lr / cfg.schedule.start_div
        state = SgdState(model, momentum=cfg.optimizer.momentum, weight_decay=cfg.optimizer.weight_decay)
        shuffle_rng = np.random.default_rng([cfg.seeds.data, 1])
        checkpoints = set(training.checkpoint_epochs)
        track_tpt = training.tpt_factor is not None
        last_epoch = training.epochs
        tpt_seen: Optional[int] = None

        logger.info(
            f"Training {model} on {dataset} for {training.epochs} epochs "
            f"({batches_per_epoch} steps/epoch), checkpoints {sorted(checkpoints)}"
        )

        try:
            with Timer(f"Experiment {cfg.name}"):
                self.report.append_checkpoint(self.analyze(model, dataset, 0))

                progress = tqdm(total=last_epoch, desc="Epochs", leave=False, disable=not training.show_progress)
                epoch = 0
                while epoch < last_epoch:
                    epoch += 1
                    order = shuffle_rng.permutation(dataset.size)
                    for start in range(0, dataset.size, batch_size):
                        rows = order[start:start + batch_size]
                        grads = self._checked_gradients(model, dataset.inputs[rows], dataset.labels[rows], epoch)
                        if state.steps < schedule.total_steps:
                            lr = lr_at(schedule, state.steps)
                        else:
                            lr = extension_lr
                        sgd_step(model, grads, state, lr)
                    progress.update(1)

                    due = epoch in checkpoints
                    if track_tpt and tpt_seen is None:
                        if train_error(model, dataset) == 0.0:
                            tpt_seen = epoch
                            due = True
                            target = max(training.epochs, math.ceil(training.tpt_factor * epoch))
                            last_epoch = min(target, training.epoch_limit)
                            logger.info(f"Zero train error at epoch {epoch}; training until epoch {last_epoch}")
                        elif epoch == last_epoch and last_epoch < training.epoch_limit:
                            last_epoch += 1
                        progress.total = last_epoch
                    if track_tpt and epoch == last_epoch:
                        due = True

                    if due:
                        self.report.append_checkpoint(self.analyze(model, dataset, epoch))
                progress.close()
        except Exception as e:
            logger.error(f"Experiment {cfg.name} failed after {len(self.report.checkpoints)} checkpoints: {e}")
            raise

        if self.report.tpt_epoch is None:
            logger.warning("Training error never reached zero at a checkpoint; no TPT epoch")
        else:
            logger.info(f"TPT reached at epoch {self.report.tpt_epoch}")
        return self.report

    def final_parameters(self) -> List[np.ndarray]:
        """Copies of the trained parameters in layer order"""
        if self.model is None:
            raise RuntimeError("run() has not been called")
        return [p.copy() for p in self.model.parameters()]
