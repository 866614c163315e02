"""Modular traces of weakly holomorphic functions on X0(p) and their weight 3/2 generating series."""
from .classnum import hurwitz, zagier_holomorphic_part, zagier_nonholo_value
from .errors import (CMTraceError, DomainError, InsufficientOrderError, PrecisionError, SpecError,
                     UnsupportedLevelError)
from .etafun import PrecisionPolicy, UpperHalfPoint, eta, eval_function, j_invariant
from .funcdsl import FunctionSpec, cusp_expansions, fricke_action, parse
from .qforms import ClassRep, GroupElement, QuadForm, class_reps, class_reps_p, reduce
from .traces import (beta_function, generating_series, nonholo_terms, regularized_average, trace_negative,
                     trace_positive, trace_zero)

__version__ = "0.1.0"

__all__ = [
    "CMTraceError", "ClassRep", "DomainError", "FunctionSpec", "GroupElement", "InsufficientOrderError",
    "PrecisionError", "PrecisionPolicy", "QuadForm", "SpecError", "UnsupportedLevelError", "UpperHalfPoint",
    "beta_function", "class_reps", "class_reps_p", "cusp_expansions", "eta", "eval_function", "fricke_action",
    "generating_series", "hurwitz", "j_invariant", "nonholo_terms", "parse", "reduce", "regularized_average",
    "trace_negative", "trace_positive", "trace_zero", "zagier_holomorphic_part", "zagier_nonholo_value",
]
