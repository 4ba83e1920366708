"""Bayesian optimization over point-cloud pools via persistence diagram kernels."""

from topobo._core import (
    alignment,
    center_gram,
    combine,
    compute_h0,
    compute_h1,
    enclosing_radius,
    expected_improvement,
    gen_orbit,
    gp_predict,
    gram,
    heuristics,
    mle_noise,
    mle_weights,
    pfk,
    pfk_fim,
    pwgk_gaussian,
    pwgk_inner,
    run_bo,
    run_random,
    solve_alignment_qp,
    subsample_maxmin,
)

__all__ = [
    "alignment",
    "center_gram",
    "combine",
    "compute_h0",
    "compute_h1",
    "enclosing_radius",
    "expected_improvement",
    "gen_orbit",
    "gp_predict",
    "gram",
    "heuristics",
    "mle_noise",
    "mle_weights",
    "pfk",
    "pfk_fim",
    "pwgk_gaussian",
    "pwgk_inner",
    "run_bo",
    "run_random",
    "solve_alignment_qp",
    "subsample_maxmin",
]
