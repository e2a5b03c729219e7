"""
NC-Depth: Layer-wise Neural Collapse in small MLP classifiers
Trains MLPs into the terminal phase of training and measures collapse metrics in every hidden layer
"""

__version__ = "0.1.0"
