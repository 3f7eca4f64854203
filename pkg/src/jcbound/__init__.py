"""Entanglement of excitation-number-conserving qubit-qudit states.

Closed-form criteria with dense oracles, the filtered normal form, range
criterion certificates for a bound entangled family, and Jaynes-Cummings
dynamics that generate it.
"""

from .criteria import (
    CriteriaReport,
    Verdict,
    ccnr_norm,
    cm_corollary,
    gerjuoy_bound,
    negativity,
    report,
)
from .dynamics import (
    EvolutionSpec,
    LindbladSpec,
    certify_generation,
    classify_region,
    evolve_resonant,
    evolve_unitary,
    lindblad_step,
    small_time,
    thermal_weights,
)
from .harness import SampleConfig, grid_scan_family, hull_construct, monte_carlo_study, sample_states
from .normal_form import NormalForm, TauState, decompose, normal_form, ppt_conditions, split_zero_b
from .range_cert import Certificate, CertVerdict, ProductVector, analytic_kernels, certify_n4, range_search
from .state import (
    SymmetricState,
    from_dense,
    gauge_fix,
    marginals,
    partial_transpose,
    symmetry_project,
    to_dense,
    validate,
)

__version__ = "0.1.0"
