"""DualStream - Heterogeneous two-stream action recognition with fusion-head comparison."""

__version__ = "0.1.0"
__author__ = "DualStream Authors"

from dualstream.core.utils import DualStreamError
from dualstream.fusion import SUITE_KINDS, DualStreamModel, ModelKind, build_model

__all__ = [
    "DualStreamError",
    "DualStreamModel",
    "ModelKind",
    "SUITE_KINDS",
    "build_model",
    "__version__",
]
