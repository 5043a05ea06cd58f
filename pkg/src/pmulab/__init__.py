"""Software model of a low-power PMU and an M-class compliance test lab."""
from ._accel import backend_name

__version__ = "0.1.0"
__all__ = ["backend_name", "__version__"]
