"""Gaussian random sections and the Monte Carlo sampling experiments.

The ensemble draws iid complex Gaussian coefficients of variance ``1/N_k``
per orthonormal mode, so ``E ||s||_2^2 = 1``.  Each trial derives its own
generator from ``(master_seed, trial)``, which makes every experiment
reproducible trial-by-trial and independent of execution order.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InsufficientTrials, LevelMismatch, ModelMismatch, SpaceMismatch
from .reporting import ExperimentReport
from .sections import Section, bergman_norm_array, sup_norm

_MIN_TRIALS = 50


class GaussianEnsemble:
    """Seeded sampler of random sections over one section space."""

    __slots__ = ("space", "master_seed")

    def __init__(self, space, master_seed=0):
        self.space = space
        self.master_seed = int(master_seed)

    def coefficients(self, trial):
        """Coefficient draw of one trial; identical for identical (seed, trial)."""
        rng = np.random.default_rng(
            np.random.SeedSequence((self.master_seed, int(trial)))
        )
        g = rng.standard_normal((self.space.dim, 2))
        return (g[:, 0] + 1j * g[:, 1]) / math.sqrt(2.0 * self.space.dim)

    def section(self, trial):
        return Section(self.space, self.coefficients(trial))

    def coefficient_matrix(self, trials):
        """Columns are the first ``trials`` coefficient draws, in trial order."""
        return np.stack(
            [self.coefficients(t) for t in range(trials)], axis=1
        )


def sample_section(ensemble, trial):
    """The random section of one trial."""
    return ensemble.section(trial)


def moment_report(ensemble, trials=10_000):
    """Empirical first and second moments of the sampler, with 3-sigma bounds.

    Returns a dict holding the worst empirical deviations and the bounds
    they must stay below: coefficient means (expected 0), cross
    correlations (expected 0), per-mode variance (expected 1/N_k) and the
    total squared norm (expected 1).
    """
    space = ensemble.space
    N = space.dim
    C = ensemble.coefficient_matrix(trials)
    var = 1.0 / N
    means = np.mean(C, axis=1)
    # complex entries: each of re/im has variance 1/(2N); |mean| fluctuates
    # at scale sqrt(var/trials)
    mean_bound = 3.0 * math.sqrt(var / trials)
    gram = (C @ C.conj().T) / trials
    off = gram - np.diag(np.diag(gram))
    offdiag_bound = 3.0 * var / math.sqrt(trials)
    diag_err = np.abs(np.diag(gram).real - var)
    diag_bound = 3.0 * var / math.sqrt(trials)
    norms = np.sum(np.abs(C) ** 2, axis=0)
    norm_bound = 3.0 / math.sqrt(N * trials)
    return {
        "trials": trials,
        "max_abs_mean": float(np.max(np.abs(means))),
        "mean_bound": mean_bound,
        "max_abs_offdiag": float(np.max(np.abs(off))) if N > 1 else 0.0,
        "offdiag_bound": offdiag_bound,
        "max_diag_err": float(np.max(diag_err)),
        "diag_bound": diag_bound,
        "mean_sq_norm": float(np.mean(norms)),
        "sq_norm_bound": norm_bound,
    }


def _require_trials(trials, minimum):
    if trials < minimum:
        raise InsufficientTrials(
            f"need at least {minimum} trials, got {trials}"
        )


def _require_same_space(ensemble, config):
    if ensemble.space is not config.space:
        raise SpaceMismatch(
            "ensemble and configuration live in different section spaces"
        )


def _quantile_columns(prefix, values, qs):
    out = {}
    for q in qs:
        label = f"{prefix}_q{int(round(100 * q)):02d}"
        out[label] = float(np.quantile(values, q))
    return out


def sup_norm_experiment(ensemble, trials):
    """Distribution of the sup norm across trials.

    Reports quantiles of ``||s||_inf`` raw and divided by
    ``sqrt(log N_k)``, plus the fraction of trials falling outside
    symmetric bands of width 0.25, 0.5 and 1.0 around that scale.
    """
    _require_trials(trials, _MIN_TRIALS)
    space = ensemble.space
    sups = np.array(
        [sup_norm(ensemble.section(t))[0] for t in range(trials)]
    )
    center = math.sqrt(math.log(space.dim))
    row = {
        "k": space.k,
        "dim": space.dim,
        "trials": trials,
        "seed": ensemble.master_seed,
        "band_center": center,
        "sup_mean": float(np.mean(sups)),
        "sup_max": float(np.max(sups)),
        "normalized_median": float(np.median(sups)) / center,
    }
    row.update(_quantile_columns("sup", sups, (0.05, 0.25, 0.5, 0.75, 0.95)))
    for eps in (0.25, 0.5, 1.0):
        row[f"tail_frac_{eps}"] = float(np.mean(np.abs(sups - center) >= eps))
    return ExperimentReport(
        experiment="randsup",
        model=space.geometry.name,
        k=space.k,
        seed=ensemble.master_seed,
        params={"trials": trials},
        rows=[row],
    )


def _node_ratio_samples(ensemble, config, trials):
    """Per-trial sup over node-max ratios, in trial order."""
    space = ensemble.space
    E = space.eval_basis_array(config.points)
    ratios = np.empty(trials)
    for t in range(trials):
        coeffs = ensemble.coefficients(t)
        node_max = float(np.max(np.abs(E @ coeffs)))
        sup, _ = sup_norm(Section(space, coeffs))
        ratios[t] = sup / node_max
    return ratios


def _ratio_report(name, ensemble, config, ratios, trials, extra=None):
    space = ensemble.space
    row = {
        "k": space.k,
        "dim": space.dim,
        "nodes": config.size,
        "trials": trials,
        "seed": ensemble.master_seed,
        "ratio_min": float(np.min(ratios)),
        "ratio_max": float(np.max(ratios)),
        "ratio_mean": float(np.mean(ratios)),
    }
    row.update(
        _quantile_columns("ratio", ratios, (0.5, 0.75, 0.9, 0.95, 0.99))
    )
    for c in (2, 3, 4, 6):
        row[f"tail_frac_{c}"] = float(np.mean(ratios > c))
    if extra:
        row.update(extra)
    return ExperimentReport(
        experiment=name,
        model=space.geometry.name,
        k=space.k,
        seed=ensemble.master_seed,
        params={"trials": trials, "nodes": config.size,
                "node_level": config.space.k},
        rows=[row],
    )


def sampling_ratio_experiment(ensemble, config, trials):
    """Sup norm against the max over the node set, per random trial.

    The ratio is at least 1 whenever the nodes lie in the space; small
    quantiles mean the node values control the global sup.
    """
    _require_trials(trials, 1)
    _require_same_space(ensemble, config)
    ratios = _node_ratio_samples(ensemble, config, trials)
    return _ratio_report("randratio", ensemble, config, ratios, trials)


def oversampling_experiment(ensemble, config_m, trials, witness=None):
    """Node control of level-k sections by a configuration of level m >= k.

    Random trials as in :func:`sampling_ratio_experiment` but with the
    node set taken from the higher level; optionally a deterministic
    section (a witness built against the level-k nodes) joins the pool,
    and the report records its ratio and the overall worst case.
    """
    _require_trials(trials, 1)
    space = ensemble.space
    if config_m.space.geometry is not space.geometry:
        raise ModelMismatch("node configuration lives on a different model")
    if config_m.space.k < space.k:
        raise LevelMismatch(
            f"node level {config_m.space.k} is below the section level {space.k}"
        )
    E = space.eval_basis_array(config_m.points)
    ratios = np.empty(trials)
    for t in range(trials):
        coeffs = ensemble.coefficients(t)
        node_max = float(np.max(np.abs(E @ coeffs)))
        sup, _ = sup_norm(Section(space, coeffs))
        ratios[t] = sup / node_max
    extra = {}
    worst = float(np.max(ratios))
    if witness is not None:
        if witness.space is not space:
            raise SpaceMismatch("witness section lives in a different space")
        node_max = float(np.max(np.abs(E @ witness.coeffs)))
        wsup, _ = sup_norm(witness)
        wratio = wsup / node_max
        extra["witness_ratio"] = float(wratio)
        worst = max(worst, float(wratio))
    extra["worst_ratio"] = worst
    return _ratio_report(
        "oversample", ensemble, config_m, ratios, trials, extra=extra
    )


def l2_sampling_experiment(ensemble, config, trials):
    """Squared L2 mass against its discrete node average, per trial.

    The statistic is ``r = ||s||_2^2 / (N^-1 sum_nodes |s(node)|^2)``;
    each trial also cross-checks the coefficient-space norm against the
    quadrature norm and the report records the worst disagreement.
    """
    _require_trials(trials, 1)
    _require_same_space(ensemble, config)
    space = ensemble.space
    E = space.eval_basis_array(config.points)
    rule, qbasis = space.quadrature()
    rs = np.empty(trials)
    worst_diff = 0.0
    for t in range(trials):
        coeffs = ensemble.coefficients(t)
        parseval = float(np.sum(np.abs(coeffs) ** 2))
        qvals = qbasis @ coeffs
        quad = float(np.sum(rule.weights * np.abs(qvals) ** 2))
        worst_diff = max(worst_diff, abs(parseval - quad))
        node_mean = float(np.mean(np.abs(E @ coeffs) ** 2))
        rs[t] = parseval / node_mean
    row = {
        "k": space.k,
        "dim": space.dim,
        "trials": trials,
        "seed": ensemble.master_seed,
        "r_min": float(np.min(rs)),
        "r_max": float(np.max(rs)),
        "r_spread": float(np.max(rs) / np.min(rs)),
        "parseval_quadrature_max_diff": worst_diff,
    }
    row.update(_quantile_columns("r", rs, (0.05, 0.25, 0.5, 0.75, 0.95)))
    return ExperimentReport(
        experiment="randl2",
        model=space.geometry.name,
        k=space.k,
        seed=ensemble.master_seed,
        params={"trials": trials, "nodes": config.size},
        rows=[row],
    )


def fekete_max_experiment(ensemble, config, trials):
    """Distribution of the maximal node value across trials.

    Tracks the mean and quantiles of ``max_j |s(x_j)|``, the mean scaled
    by ``sqrt(log N_k)``, and the across-trial standard deviation (a
    concentration signal: it should not grow with the level).
    """
    _require_trials(trials, 1)
    _require_same_space(ensemble, config)
    space = ensemble.space
    E = space.eval_basis_array(config.points)
    C = ensemble.coefficient_matrix(trials)
    maxes = np.max(np.abs(E @ C), axis=0)
    center = math.sqrt(math.log(space.dim))
    row = {
        "k": space.k,
        "dim": space.dim,
        "trials": trials,
        "seed": ensemble.master_seed,
        "max_mean": float(np.mean(maxes)),
        "max_std": float(np.std(maxes)),
        "normalized_mean": float(np.mean(maxes)) / center,
        "band_center": center,
    }
    row.update(_quantile_columns("max", maxes, (0.25, 0.5, 0.75, 0.95)))
    return ExperimentReport(
        experiment="randmax",
        model=space.geometry.name,
        k=space.k,
        seed=ensemble.master_seed,
        params={"trials": trials, "nodes": config.size},
        rows=[row],
    )


def covariance_check(config, subset):
    """Pairwise decorrelation lower bounds over a node subset.

    For scaled node evaluations of a random section, the variance of any
    difference is bounded below by ``L_ij = 2 - 2 |K(x_i, x_j)| / N_k``;
    the report returns the worst pair (minimal bound) and the largest
    off-diagonal kernel ratio.
    """
    space = config.space
    idx = np.asarray(list(subset), dtype=int)
    if idx.size < 2:
        raise InsufficientTrials("need at least two indices to form pairs")
    if np.any(idx < 0) or np.any(idx >= config.size):
        raise IndexError("subset index out of range")
    pts = config.points[idx]
    K = bergman_norm_array(space, pts[:, None], pts[None, :])
    ratio = K / space.dim
    iu = np.triu_indices(idx.size, 1)
    off = ratio[iu]
    L = 2.0 - 2.0 * off
    return {
        "k": space.k,
        "n_pairs": int(off.size),
        "min_lower_bound": float(np.min(L)),
        "max_kernel_ratio": float(np.max(off)),
    }
