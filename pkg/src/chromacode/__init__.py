"""chromacode: learned low-bitrate colour codes for counterfactual recolouring,
dataset augmentation, and colour normalization of skin images."""

__version__ = "0.1.0"
