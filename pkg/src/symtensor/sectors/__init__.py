"""Symmetry sectors: contract, validators and concrete kinds."""
from .base import (BraidingStyle, ConsistencyReport, FusionStyle, Sector,
                   derive_frobenius_schur, derive_qdim, derive_twist,
                   label_closure, run_all_checks, validate_dimensions,
                   validate_hexagon, validate_pentagon, validate_triangle,
                   validate_unitarity)
from .su2 import clebsch_gordan, su2_fsymbol, su2_rsymbol, wigner6j
from .zoo import (SU2, U1, ZN, FermionParity, Fibonacci, Ising, Product,
                  Trivial, get_sector)

__all__ = [
    "BraidingStyle", "ConsistencyReport", "FusionStyle", "Sector",
    "derive_frobenius_schur", "derive_qdim", "derive_twist", "label_closure",
    "run_all_checks", "validate_dimensions", "validate_hexagon",
    "validate_pentagon", "validate_triangle", "validate_unitarity",
    "clebsch_gordan", "su2_fsymbol", "su2_rsymbol", "wigner6j",
    "SU2", "U1", "ZN", "FermionParity", "Fibonacci", "Ising", "Product",
    "Trivial", "get_sector",
]
