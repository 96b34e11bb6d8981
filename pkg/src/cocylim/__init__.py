"""Transfer-operator computations for matrix cocycles over subshifts of
finite type: Lyapunov exponents, CLT variances, and large-deviation
rates, cross-validated by Monte Carlo sampling and exact small-case
oracles."""

__version__ = "0.1.0"

from .cocycle import (MatrixCocycle, ProjectivePoint, TwoSidedMatrixCocycle,
                      adjoint_product, fiber_bunching_margin, product,
                      projective_action, projective_distance,
                      two_sided_to_one_sided)
from .gibbs import (GibbsModel, LocallyConstantPotential, build_gibbs_model,
                    gibbs_ratio_check, pf_eigendata, ruelle_matrix,
                    sample_path)
from .kernels import BACKEND, HAVE_COMPILED
from .limits import (clt_test, exponent_curve, ldp_empirical, ldp_norm_tail,
                     ldp_rate, lyapunov_furstenberg, lyapunov_mc,
                     lyapunov_spectral, variance_mc, variance_spectral)
from .perron import cyclic_normal_form, pf_decomposition, rotation_symmetry_check
from .sft import (AdjacencyMatrix, SymbolicSystem, check_irreducible,
                  enumerate_words, period_and_classes, splice, word_distance)
from .transfer import (DiscretizedOperator, ProjectiveGrid,
                       block_structure_check, build_grid, build_operator,
                       lasota_yorke_estimate, peripheral_spectrum,
                       spectral_radius)
from .typicality import is_one_typical

__all__ = [name for name in dir() if not name.startswith("_")]
