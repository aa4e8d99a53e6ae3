"""Learning Lindblad dynamics and dissipation rates with physics-informed networks."""

from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
