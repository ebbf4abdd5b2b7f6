"""NUFFT-based cone-beam CT toolkit: projectors, backprojectors, baselines."""

__version__ = "0.1.0"
