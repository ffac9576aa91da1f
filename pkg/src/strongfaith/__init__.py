"""How restrictive is lambda-strong-faithfulness for Gaussian DAG models?

Exact partial-correlation polynomials, d-separation triple classes, Monte
Carlo unfaithful-volume estimates and closed-form lower bounds.
"""

from .audit import AuditReport, audit, early_exit_membership
from .bounds import bound_table, exponent, lower_bound, upper_bound_degree_term
from .errors import (EnumerationTooLargeError, InvalidDensityError, InvalidFamilyError,
                     InvalidQueryError, InvalidRangeError, InvalidSizeError,
                     NumericalDegeneracyError, ParseError, StrongFaithError,
                     SymbolicTooLargeError, VerificationError)
from .graph import (Dag, Triple, d_separated, enumerate_triples, make_bipartite,
                    make_complete, make_cycle, make_random, make_tree, max_degree,
                    read_dag, write_dag)
from .montecarlo import (Cell, SweepConfig, estimate_family, estimate_fixed_dag,
                         estimate_random_ensemble, sample_weights)
from .numeric import (GaussianModel, Weights, build_model, min_abs_parcorr,
                      partial_correlation, read_weights, write_weights)
from .poly import SparsePoly
from .symbolic import (degree_sum, partial_cov_poly, ponstein_cofactor, ponstein_det,
                       sos_structure_check, symbolic_K, symbolic_sigma_trek)
from .verify import run_verification

__all__ = [name for name in dir() if not name.startswith("_")]
