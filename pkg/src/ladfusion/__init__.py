"""Alternating diffusion and alpha-normalized landmark alternating diffusion
for fusing two aligned sensors."""

__version__ = "0.1.0"

from .diffusion import (AdModel, Embedding, LadModel, SpectralResult, ad_embed, ad_spectrum,
                        build_ad, build_lad, dense_spectrum, diffusion_map, lad_embed,
                        lad_from_affinities, lad_spectrum)
from .estimators import AlternatingDiffusion, DiffusionMap, LandmarkAlternatingDiffusion
from .exceptions import (ClampWarning, ImaginaryPartWarning, InvalidArgumentError,
                         ResidualWarning, ResolutionError, SolverError, TruncationWarning,
                         UndefinedRatioError)
from .kernels import KernelConfig, build_affinity, median_sq_distance
from .landmarks import LandmarkSet, density_sample, explicit, stratified_subset, uniform_subset
from .manifolds import ManifoldGenerator, PairedDataset, builtin_density, sample_pair
from .metrics import (ComparisonReport, compare, eigenvalue_diff_ratio, eigenvector_alignment,
                      embedding_similarity, procrustes_rotation, subspace_alignment)

__all__ = [
    "AdModel", "AlternatingDiffusion", "ClampWarning", "ComparisonReport", "DiffusionMap",
    "Embedding", "ImaginaryPartWarning", "InvalidArgumentError", "KernelConfig", "LadModel",
    "LandmarkAlternatingDiffusion", "LandmarkSet", "ManifoldGenerator", "PairedDataset",
    "ResidualWarning", "ResolutionError", "SolverError", "SpectralResult", "TruncationWarning",
    "UndefinedRatioError", "ad_embed", "ad_spectrum", "build_ad", "build_affinity", "build_lad",
    "builtin_density", "compare", "dense_spectrum", "density_sample", "diffusion_map",
    "eigenvalue_diff_ratio", "eigenvector_alignment", "embedding_similarity", "explicit",
    "lad_embed", "lad_from_affinities", "lad_spectrum", "median_sq_distance", "procrustes_rotation", "sample_pair",
    "stratified_subset", "subspace_alignment", "uniform_subset",
]
