"""Injective norms of symmetric tensors over finite-dimensional Banach spaces."""
from .optimize import (
    CertificationError,
    CertifiedInterval,
    Linear,
    NormResult,
    Objective,
    PowerSum,
    SearchDomain,
    certified_grid,
    maximize,
)
from .spaces import (
    Field,
    LinearMap,
    Space,
    dual_norm,
    euclidean_iso_for_lp,
    norm,
    operator_norm,
    pair,
    space_from_json,
    space_to_json,
)
from .symtensor import SymTensor, add, eval_tensor, injective_norm, scale, sup_over_unimodular
from .construction import (
    Lemma1Result,
    check_eqinter2,
    lemma1_construct,
    theorem1_witness,
    theorem2_embedding,
)
from .verify import check_distortion, check_extreme_failure, run_suite

__version__ = "0.1.0"

__all__ = [
    "CertificationError", "CertifiedInterval", "Field", "Lemma1Result", "Linear", "LinearMap",
    "NormResult", "Objective", "PowerSum", "SearchDomain", "Space", "SymTensor", "add",
    "certified_grid", "check_distortion", "check_eqinter2", "check_extreme_failure", "dual_norm",
    "euclidean_iso_for_lp", "eval_tensor", "injective_norm", "lemma1_construct", "maximize",
    "norm", "operator_norm", "pair", "run_suite", "scale", "space_from_json", "space_to_json",
    "sup_over_unimodular", "theorem1_witness", "theorem2_embedding",
]
