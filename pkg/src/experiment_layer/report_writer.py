"""
Report Writer
Persists NC reports as JSON, per-(checkpoint, layer) CSV and per-metric plot tables
"""

from pathlib import Path
from typing import List

import pandas as pd
from loguru import logger

from .report import METRIC_NAMES, NcReport, TrendSummary
from ..metrics_layer import LayerMetrics
from ..utils import ensure_dir, save_json


FLOAT_FORMAT = "%.17g"
CSV_COLUMNS = ['epoch', 'layer', 'nc1', 'nc2_norms', 'nc2_angles', 'nc4', 'train_error']


class ReportWriter:
    """Writes every report artifact of one experiment into an output directory"""

    def __init__(self, output_dir: Path):
        """
        Initialize report writer

        Args:
            output_dir: Directory receiving the report files
        """
        self.output_dir = ensure_dir(output_dir)
        logger.info(f"ReportWriter initialized: {self.output_dir}")

    def write_json(self, report: NcReport, filename: str = "nc_report.json") -> Path:
        """Full report structure including effective config and fingerprint"""
        filepath = self.output_dir / filename
        save_json(report.model_dump(mode="json"), filepath, indent=2)
        return filepath

    @staticmethod
    def to_frame(report: NcReport) -> pd.DataFrame:
        """One row per (checkpoint, layer), ordered by epoch then layer"""
        rows = [
            {
                'epoch': checkpoint.epoch,
                'layer': layer.layer,
                'nc1': layer.nc1,
                'nc2_norms': layer.nc2_norms,
                'nc2_angles': layer.nc2_angles,
                'nc4': layer.nc4,
                'train_error': checkpoint.train_error
            }
            for checkpoint in report.checkpoints
            for layer in checkpoint.layers
        ]
        return pd.DataFrame(rows, columns=CSV_COLUMNS)

    def write_csv(self, report: NcReport, filename: str = "nc_report.csv") -> Path:
        """Metric time series with 17-significant-digit reals"""
        filepath = self.output_dir / filename
        self.to_frame(report).to_csv(filepath, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
        logger.info(f"Saved CSV to {filepath}")
        return filepath

    def write_report(self, report: NcReport) -> List[Path]:
        """JSON and CSV together; used for both complete and partial reports"""
        return [self.write_json(report), self.write_csv(report)]

    def write_plot_tables(self, report: NcReport) -> List[Path]:
        """
        One TSV per metric: rows are layers, one column per checkpoint epoch

        Returns:
            Paths in METRIC_NAMES order
        """
        frame = self.to_frame(report)
        paths = []
        for metric in METRIC_NAMES:
            table = frame.pivot(index='layer', columns='epoch', values=metric)
            table.columns = [f"epoch_{epoch}" for epoch in table.columns]
            filepath = self.output_dir / f"plot_{metric}.tsv"
            table.to_csv(filepath, sep='\t', float_format=FLOAT_FORMAT, index_label='layer', lineterminator='\n')
            paths.append(filepath)

        logger.info(f"Saved {len(paths)} plot tables to {self.output_dir}")
        return paths

    def write_trend_summary(self, summary: TrendSummary, filename: str = "trend_summary.json") -> Path:
        filepath = self.output_dir / filename
        save_json(summary.model_dump(mode="json"), filepath, indent=2)
        return filepath

    def write_analysis_csv(
        self,
        rows: List[LayerMetrics],
        sources: List[str],
        filename: str = "nc_analysis.csv"
    ) -> Path:
        """One row per analyzed activation dump, in argument order"""
        frame = pd.DataFrame(
            [{'dump': source, **row.model_dump()} for source, row in zip(sources, rows)],
            columns=['dump', 'layer', 'nc1', 'nc2_norms', 'nc2_angles', 'nc4']
        )
        filepath = self.output_dir / filename
        frame.to_csv(filepath, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
        logger.info(f"Saved analysis CSV to {filepath}")
        return filepath
