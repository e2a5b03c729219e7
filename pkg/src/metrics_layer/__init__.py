"""
Metrics Layer Package
Neural Collapse metrics per hidden layer and the activation-dump file format
"""

from .nc_metrics import (
    CoordinateSubsample,
    DegenerateClassMeansError,
    LayerMetrics,
    analyze_layer,
    nc1,
    nc2_equal_norms,
    nc2_max_angles,
    nc4,
    ncc_predictions,
    subsample_coordinates
)
from .activation_dump import ActivationDump, DumpFormatError, dump_model_layers, read_dump, write_dump

__all__ = [
    'CoordinateSubsample',
    'DegenerateClassMeansError',
    'LayerMetrics',
    'analyze_layer',
    'nc1',
    'nc2_equal_norms',
    'nc2_max_angles',
    'nc4',
    'ncc_predictions',
    'subsample_coordinates',
    'ActivationDump',
    'DumpFormatError',
    'dump_model_layers',
    'read_dump',
    'write_dump'
]
