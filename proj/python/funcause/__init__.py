"""Causal effect estimation for functional outcomes."""

from ._core import (
    Dataset,
    FuncauseError,
    align,
    effect_ci,
    estimate,
    estimators,
    fr_gram,
    frechet_mean,
    karcher_mean,
    register_curves,
    simulate,
    srsf,
    srsf_inverse,
    welch_t_test,
)

__all__ = [
    "Dataset",
    "FuncauseError",
    "align",
    "effect_ci",
    "estimate",
    "estimators",
    "fr_gram",
    "frechet_mean",
    "karcher_mean",
    "register_curves",
    "simulate",
    "srsf",
    "srsf_inverse",
    "welch_t_test",
]
