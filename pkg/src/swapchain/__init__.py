"""Two-layer sqrt(SWAP) entangled chains: generation, detection, noise and gate physics."""

__version__ = "0.1.0"
