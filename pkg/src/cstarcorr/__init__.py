"""Numerical toolkit for C*-correspondences over finite-dimensional algebras."""
from .algebra import AlgElem, Algebra, Ideal, make_algebra
from .module import AdjOp, HilbertModule, ModVec, inner_product, standard_module
from .tensor import Correspondence, TensorProduct, balanced_tensor, find_unitary_iso, ksgns

__all__ = [
    "AlgElem", "Algebra", "Ideal", "make_algebra", "AdjOp", "HilbertModule", "ModVec", "inner_product",
    "standard_module", "Correspondence", "TensorProduct", "balanced_tensor", "find_unitary_iso", "ksgns",
]
