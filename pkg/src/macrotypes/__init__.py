"""Coarse-grained type measurements on ensembles of identical molecules."""
from ._kernels import BACKEND
from .combinatorics import TypeVector, enumerate_types, multinomial_pmf, num_types, type_table
from .errors import BasisMismatchError, MacroTypesError, ResourceCapError, ValidationError, ZeroProbabilityError
from .smoothing import SmoothingKernel, comb_kernel, exact_kernel, gaussian_kernel, make_kernel
from .symmetric import (ObservableBasis, SymmetricDensity, SymmetricPureState, computational_basis, fidelity,
                        product_state, spin_basis)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "TypeVector", "enumerate_types", "multinomial_pmf", "num_types", "type_table",
    "BasisMismatchError", "MacroTypesError", "ResourceCapError", "ValidationError", "ZeroProbabilityError",
    "SmoothingKernel", "comb_kernel", "exact_kernel", "gaussian_kernel", "make_kernel",
    "ObservableBasis", "SymmetricDensity", "SymmetricPureState", "computational_basis", "fidelity",
    "product_state", "spin_basis",
]
