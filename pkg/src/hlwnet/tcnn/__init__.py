"""Target/condition neural assigner with adaptive user mapping.

Training and inference live in :mod:`hlwnet.tcnn.train`; it is not imported
here because it depends on :mod:`hlwnet.dataset`, which itself uses the
mapping.
"""

from .mapping import MappedInstance, MappingInfeasibleError, adaptive_map, split_counts
from .model import Adam, Tcnn, TcnnShape, mse_loss, softmax

__all__ = ["Adam", "MappedInstance", "MappingInfeasibleError", "Tcnn", "TcnnShape",
           "adaptive_map", "mse_loss", "softmax", "split_counts"]
