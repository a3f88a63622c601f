"""Distances between finite metric measure spaces via optimal transport:
Prohorov, box, Eurandom and observable, with certificates and oracles."""

from ._kernels import NUMBA_ENABLED
from .boxdist import (BoxCertificate, box_bruteforce, box_distance, box_is_zero,
                      compose_pairsets, coupling_distortion, maximal_cliques)
from .core import (DERIVED_ATOL, VALIDATION_ATOL, MetricSpace, MMSpace,
                   ProductMetricSpace, diagonal_distortion, distortion, dominates,
                   enlargement, ky_fan, mm_isomorphic, pairwise_distortion_matrix,
                   product_space, pushforward, support)
from .errors import (InstanceTooLargeError, MarginalMismatchError, MMDistError,
                     UncertifiedInstanceError, ValidationError)
from .eurandom import (EurBudget, EurCertificate, eurandom_distance,
                       eurandom_distortion, eurandom_is_zero)
from .observable import (ConcBounds, candidate_functions, dconc_bounds,
                         dconc_pi_bounds, inner_kf_min, is_lipschitz,
                         random_lipschitz)
from .prohorov import (coupling_diagonal_distortion, prohorov_bruteforce,
                       prohorov_strassen)
from .transport import (Coupling, TriCoupling, coupling_grid, diagonal_coupling,
                        glue, independent_coupling, local_search, max_mass_on,
                        product_measure, project_13, random_coupling,
                        total_variation)

__version__ = "0.1.0"
