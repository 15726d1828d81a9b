"""Universal coding toolkit for broadcast channels with confidential messages."""

__version__ = "0.1.0"

from .errors import BccError, BudgetError, DimensionError, ValidationError
from .prob import (Channel, Dist, JointDist, compose, cond_mutual_info, entropy,
                   mutual_info)
from .exponents import (ExponentQuery, ExponentReport, evaluate, f_i_minus, f_i_plus,
                        leakage_exponent, phi, phi_avg, psi)
from .hashing import HashFamily, LinearHash, sample_hash
from .region import RegionPoint, RegionQuery, region_boundary
from .codec import CodeSpec, Codebook, estimate_errors, make_code_spec, sample_codebook
from .leakage import (LeakageReport, check_uniform_identity, exact_leakage,
                      existence_search, leakage_decay_curve, verify_pa_bound)

__all__ = [
    "BccError", "BudgetError", "DimensionError", "ValidationError",
    "Channel", "Dist", "JointDist", "compose", "cond_mutual_info", "entropy", "mutual_info",
    "ExponentQuery", "ExponentReport", "evaluate", "f_i_minus", "f_i_plus",
    "leakage_exponent", "phi", "phi_avg", "psi",
    "HashFamily", "LinearHash", "sample_hash",
    "RegionPoint", "RegionQuery", "region_boundary",
    "CodeSpec", "Codebook", "estimate_errors", "make_code_spec", "sample_codebook",
    "LeakageReport", "check_uniform_identity", "exact_leakage", "existence_search",
    "leakage_decay_curve", "verify_pa_bound",
]
