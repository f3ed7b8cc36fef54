"""Signature-level rough paths over spectrally sampled fractional Brownian motion."""

from .permutations import (SignedForestSum, permutation_graph, sector_assignment,
                           sector_permutations, split_sectors)
from .roughpath import (KernelPlan, RealnessError, ResourceError, RoughPathTensor, build_tensor,
                        fno_kernel, fno_level, unregularized_area)
from .skeleton import (TRIVIAL, AtomicTreeMeasure, Mode, RegularizationConfig, ResonanceError,
                       TreeIntegralValue, in_plus_domain, in_reg_domain, reg_iterated_integral,
                       skeleton_integral)
from .spectral import (ANTISYMMETRIC, INDEPENDENT, FbmModel, FrequencyGrid, SpectralPath,
                       c_alpha, exact_covariance, load_spectrum, sample_antisym_fbm, sample_fbm,
                       save_spectrum)
from .trees import (EMPTY, Cut, DecoratedForest, TensorSplit, admissible_cuts, coproduct,
                    shuffles, split_at_cut, trunk_tree)
from .verify import (Divergence, Holder, Rate, SlopeReport, chen_residual, covariance_table,
                     exact_slope, fubini_residual, generic_atom_path, oracle_iterated_integral,
                     scaling_slope, shuffle_residual)

__version__ = "0.1.0"
