"""Simulation and verification toolkit for the reflected process 2K - B
of a Brownian motion against its concave majorant, its flat degeneration,
and the Bessel-process family."""

__version__ = "0.1.0"

from .rng import RngStream
from .distributions import IGParams, eval_gauss, sample_gamma_half, sample_ig, sample_sbig
from .bessel import BridgeSpec, PathGrid
from .chain import PsiState, VertexChain
from .zprocess import ZPath, ZSpec
from .stattests import TestReport

__all__ = [
    "__version__",
    "RngStream",
    "IGParams",
    "eval_gauss",
    "sample_gamma_half",
    "sample_ig",
    "sample_sbig",
    "BridgeSpec",
    "PathGrid",
    "PsiState",
    "VertexChain",
    "ZPath",
    "ZSpec",
    "TestReport",
]
