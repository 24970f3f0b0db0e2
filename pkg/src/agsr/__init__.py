"""Adversarial graph super-resolution for weighted brain graphs."""

from .estimator import AGSRNet, check_graph_batch
from .graph import EigenDecomposition, WeightedGraph
from .model import VARIANTS, Discriminator, Generator
from .training import TrainConfig, train

__all__ = [
    "AGSRNet", "check_graph_batch", "WeightedGraph", "EigenDecomposition",
    "Generator", "Discriminator", "VARIANTS", "TrainConfig", "train",
]
__version__ = "0.1.0"
