"""Tensor maps over symmetry-graded vector spaces.

Sectors, graded spaces, fusion-tree recoupling, block-diagonal tensor maps,
factorizations and a small benchmark harness.
"""
__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .sectors import (SU2, U1, ZN, FermionParity, Fibonacci, Ising, Product,
                      Trivial, get_sector)
from .spaces import GradedSpace, HomSpace, ProductSpace, fuse, parse_space
from .fusiontrees import FusionTree
from .tensor import (TensorMap, add, adjoint, compose, contract, homspace,
                     identity, inner, make_tensor, ncon, norm, outer_product,
                     partial_trace, permute, random_tensor, scale, transpose,
                     zeros)
from .factorizations import (SpectrumReport, TruncationScheme, eig, eigh, lq,
                             polar, qr, svd)
