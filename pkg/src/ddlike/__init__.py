"""Strong-topology contractions of the unitary group and Dixmier-Douady-like families on l2."""

from .hilbert import FinVec, dist_to_filtration, gram_schmidt, inner_product, norm

__version__ = "0.1.0"

__all__ = ["FinVec", "dist_to_filtration", "gram_schmidt", "inner_product", "norm"]
