"""Boundary weights and q-weight maps over finite-dimensional Hilbert spaces.

The package computes with positive boundary weights given by finite sums of
power-exponential vector functionals, the q-weight maps they generate
(range rank one and two, plus 2x2 assembled direct sums with corners), the
generalized boundary representations pi_t on a t-grid, q-purity
classification with explicit subordinate witnesses, q-corner construction
and verification, boundary expectations with their Choi-Effros algebras,
and a discretized half-line cross-check of the resolvent correspondence.
"""

__version__ = "0.1.0"

from .corners import (CornerData, assemble_theta, conjugacy_obstruction,
                      corner_candidate, determinant_inequality_check,
                      hypermaximal_falsify, verify_corner)
from .cp_core import (BlockStructure, CEAlgebra, CPMapFD, NoCorner,
                      block_component, build_ce_algebra, choi_effros_product,
                      cp_norm, extract_matrix_units, extractor_check,
                      hermitian_eigen, is_completely_positive,
                      is_cp_idempotent_contraction, is_hermitian, is_psd,
                      minimal_central_projections)
from .expectation import (ExpectationResult, boundary_expectation,
                          range_rank_trichotomy, standard_form_rank_two,
                          verify_axioms)
from .flowsim import DiscretizedH, gamma_disc, recover_omega, resolvent_from_weight
from .profiles import (GridSampledProfile, Kernel, Profile, PowerTerm,
                       pair_profiles, power_exp, powers_canonical)
from .purity import (PurityVerdict, build_subordinate_from_rho,
                     classify_rank_one, mu_qpure_test, rank_two_witnesses)
from .qweight import (AssembledQWeight, QWeightMap, RankOneQWeight,
                      RankTwoQWeight, TGrid, gbr_cp_norm, gbr_rank_one,
                      gbr_rank_two, gbr_sample, normal_spine_trivial,
                      omega_breve_matrix, reconstruct_truncated_weight,
                      subordination_check, validate_rank_one,
                      validate_rank_two)
from .weights import (BoundaryWeight, Observable, WeightAtom,
                      combination_in_H_exists, divergent_direction_rank,
                      h_membership, is_unbounded, obs_id,
                      obs_id_minus_lambda, obs_lambda, obs_op, pair_eval,
                      pair_integral, weight_eval)
