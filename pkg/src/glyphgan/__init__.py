"""glyphgan: dense-layer GANs for handwritten glyphs, a classical
cleaning pipeline for their samples, and convolutional classifiers to
measure how much the cleaning helps.

Everything numeric is built on numpy in float32; training, sampling and
image processing are deterministic under a seed.
"""

from .rng import Rng
from .network import Network

__version__ = "0.1.0"

__all__ = ["Rng", "Network", "__version__"]
