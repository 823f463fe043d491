"""Fekete configurations: solving, certifying and diagnosing node sets.

A configuration of ``N = dim`` points maximizes the log-modulus of the
Vandermonde-type determinant ``det(B_i(x_j))``.  The solver runs
multistart projected gradient ascent on the product of factor spheres
(the phase direction is flat and projected away), then a coordinate
exchange polish: moving node ``j`` to a maximizer of its cardinal-section
modulus multiplies |det| by exactly that modulus, so repeated sweeps
drive the one-point-exchange certificate ``max_j sup|l_j| <= 1 + tol``.
Optima are accepted by objective value plus that certificate; the point
sets themselves are only unique up to isometry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .errors import (
    DomainError,
    ModelMismatch,
    NonConvergence,
    SingularConfiguration,
)
from .geometry import canonicalize_array
from .reporting import ExperimentReport
from .sections import Section, _refine_log_modulus, sup_norm

_PIVOT_FLOOR = 1e-300
_CERT_SLACK = 1e-8  # polish drives exchange gains below this
_ARMIJO = 1e-4


@dataclass
class SolverOptions:
    """Knobs of :func:`solve_fekete`; defaults follow the pilot-tuned setup."""

    starts: int | None = None  # defaults to 8 + ceil(N / 4)
    max_iters: int = 400
    refine_iters: int = 150
    grad_tol: float = 1e-9
    seed: int = 0
    polish: bool = True
    max_polish_rounds: int = 8
    max_sweeps: int = 60
    allow_uncertified: bool = False

    def resolved_starts(self, dim):
        if self.starts is not None:
            if self.starts < 1:
                raise DomainError("starts must be >= 1")
            return self.starts
        return 8 + math.ceil(dim / 4)


@dataclass
class Certificate:
    """Exchange-optimality evidence for a configuration."""

    max_lagrange_sup: float
    grad_norm: float

    def passes(self, tol=1e-6):
        return self.max_lagrange_sup <= 1.0 + tol

    def to_json(self):
        return {
            "max_lagrange_sup": self.max_lagrange_sup,
            "grad_norm": self.grad_norm,
        }


@dataclass
class Configuration:
    """A solved (or loaded) node set with its objective value and evidence."""

    space: object
    points: np.ndarray  # packed (N, f, 2)
    log_vdm: float
    certificate: Certificate
    solver_meta: dict = field(default_factory=dict)

    @property
    def size(self):
        return self.points.shape[0]

    def point_objects(self):
        return self.space.geometry.unpack(self.points)

    def to_json(self):
        geom = self.space.geometry
        return {
            "schema_version": 1,
            "model": geom.name,
            "k": self.space.k,
            "points": [geom.point_to_json(p) for p in self.point_objects()],
            "log_vdm": self.log_vdm,
            "certificate": self.certificate.to_json(),
            "solver_meta": self.solver_meta,
        }

    @classmethod
    def from_json(cls, data):
        from .errors import SchemaError
        from .sections import get_space, vandermonde_lognorm

        try:
            if data["schema_version"] != 1:
                raise SchemaError(
                    f"unsupported configuration schema {data['schema_version']!r}"
                )
            space = get_space(data["model"], data["k"])
            geom = space.geometry
            points = geom.pack([geom.point_from_json(p) for p in data["points"]])
            if points.shape[0] != space.dim:
                raise SchemaError(
                    f"expected {space.dim} points, found {points.shape[0]}"
                )
            log_vdm = float(data["log_vdm"])
            cert = Certificate(
                max_lagrange_sup=float(data["certificate"]["max_lagrange_sup"]),
                grad_norm=float(data["certificate"]["grad_norm"]),
            )
            meta = dict(data.get("solver_meta", {}))
        except SchemaError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"malformed configuration payload: {exc}") from None
        recomputed = vandermonde_lognorm(space, points)
        if not math.isclose(
            recomputed, log_vdm, rel_tol=1e-9, abs_tol=1e-6
        ):
            raise SchemaError(
                "stored log_vdm disagrees with the stored points "
                f"({log_vdm} vs recomputed {recomputed})"
            )
        return cls(space, points, log_vdm, cert, meta)


# --- objective and gradient ----------------------------------------------------


def _log_vdm(space, packed):
    E = space.eval_basis_array(packed)
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        lu, _ = lu_factor(E.T, check_finite=False)
    diag = np.abs(np.diag(lu))
    if np.any(diag < _PIVOT_FLOOR):
        return float("-inf")
    return float(np.sum(np.log(diag)))


def log_vdm_and_grad(space, packed):
    """Objective and its tangent gradient at a packed point set.

    The gradient follows from the Jacobi determinant formula: the
    derivative against node ``j`` contracts row ``j`` of the inverse
    evaluation matrix with the basis coordinate derivatives, and the
    result is projected onto each factor's projective tangent space.
    Returns ``(-inf, None)`` for numerically singular sets.
    """
    E = space.eval_basis_array(packed)
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        lu, piv = lu_factor(E.T, check_finite=False)
    diag = np.abs(np.diag(lu))
    if np.any(diag < _PIVOT_FLOOR):
        return float("-inf"), None
    logv = float(np.sum(np.log(diag)))
    A = lu_solve((lu, piv), np.eye(packed.shape[0], dtype=np.complex128))
    dB = space.basis_gradient_array(packed)  # (N, f, 2, dim)
    S = np.einsum("ji,jfci->jfc", A, dB)
    G = np.conj(S)
    radial = np.sum(np.conj(packed) * G, axis=-1, keepdims=True)
    T = G - radial * packed
    return logv, T


def _renormalize(packed):
    return packed / np.sqrt(
        np.sum(np.abs(packed) ** 2, axis=-1, keepdims=True)
    )


def _ascent(space, X, max_iters, grad_tol):
    """Projected gradient ascent with Armijo backtracking.

    Returns ``(X, logv, gnorm, iters, moved)`` where ``moved`` counts
    accepted steps; zero accepted steps from a clean exchange optimum is
    the float64 stationarity signal (objective improvements fall below
    the representable resolution of log|det| well before gnorm does).
    """
    logv, T = log_vdm_and_grad(space, X)
    if not math.isfinite(logv):
        return X, logv, float("inf"), 0, 0
    step = 1.0 / max(space.k, 1)
    step_cap = 16.0 / max(space.k, 1)
    gnorm = float(np.sqrt(np.sum(np.abs(T) ** 2)))
    it = 0
    moved = 0
    while it < max_iters and gnorm > grad_tol:
        it += 1
        g2 = gnorm * gnorm
        t = step
        accepted = False
        for _ in range(60):
            cand = _renormalize(X + t * T)
            lv = _log_vdm(space, cand)
            if math.isfinite(lv) and lv >= logv + _ARMIJO * t * g2:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
        moved += 1
        X, logv = cand, lv
        step = min(t * 2.0, step_cap)
        logv, T = log_vdm_and_grad(space, X)
        gnorm = float(np.sqrt(np.sum(np.abs(T) ** 2)))
    return X, logv, gnorm, it, moved


def lagrange_coefficient_matrix(space, packed):
    """Coefficient matrix C with columns the cardinal sections of the nodes.

    C solves ``E C = I`` where ``E`` holds basis values along point rows,
    so ``l_j(x_i) = delta_ij`` exactly in the canonical frame.
    """
    E = space.eval_basis_array(packed)
    if not math.isfinite(_lognorm_guard(E)):
        raise SingularConfiguration("nodes do not determine a unique interpolant")
    return np.linalg.inv(E)


def _lognorm_guard(E):
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        lu, _ = lu_factor(E.T, check_finite=False)
    diag = np.abs(np.diag(lu))
    if np.any(diag < _PIVOT_FLOOR):
        return float("-inf")
    return float(np.sum(np.log(diag)))


def _polish(space, X, max_sweeps):
    """Exchange sweeps; returns (X, clean, last_sweep_max, total_moves).

    Each move relocates one node to a refined maximizer of its cardinal
    section, increasing log|det| by log of that modulus; the coefficient
    matrix is updated in place by a rank-one (Sherman-Morrison) step and
    recomputed fresh at sweep boundaries.
    """
    N = X.shape[0]
    grid_pts, grid_basis = space.scan_pair(space.default_scan_density())
    total_moves = 0
    clean = False
    sweep_max = float("nan")
    for _ in range(max_sweeps):
        E = space.eval_basis_array(X)
        try:
            C = np.linalg.inv(E)
        except np.linalg.LinAlgError:
            raise SingularConfiguration("polish hit a singular configuration")
        moves = 0
        sweep_max = 0.0
        for j in range(N):
            cj = C[:, j]
            vals = np.abs(grid_basis @ cj)
            i0 = int(np.argmax(vals))
            # short refine budget here; certify() re-verifies sups in full
            val, y = _refine_log_modulus(space, cj, grid_pts[i0].copy(), steps=15)
            if val < vals[i0]:
                val, y = float(vals[i0]), grid_pts[i0]
            sweep_max = max(sweep_max, val)
            if val > 1.0 + _CERT_SLACK:
                b_new = space.eval_basis_array(y[None])[0]
                delta = b_new - E[j]
                u = C[:, j].copy()
                w = delta @ C
                C -= np.outer(u, w) / (1.0 + w[j])
                X[j] = y
                E[j] = b_new
                moves += 1
        total_moves += moves
        if moves == 0:
            clean = True
            break
    return X, clean, sweep_max, total_moves


def certify(space, packed, grad_norm=None):
    """Full certificate: exact sup of every cardinal section plus gradient norm."""
    C = lagrange_coefficient_matrix(space, packed)
    worst = 0.0
    for j in range(packed.shape[0]):
        val, _ = sup_norm(Section(space, C[:, j]))
        worst = max(worst, val)
    if grad_norm is None:
        _, T = log_vdm_and_grad(space, packed)
        grad_norm = float(np.sqrt(np.sum(np.abs(T) ** 2)))
    return Certificate(max_lagrange_sup=worst, grad_norm=grad_norm)


def solve_fekete(space, options=None):
    """Search for a Fekete configuration of ``space.dim`` nodes.

    Multistart ascent with exchange polish; the best run by objective
    value is certified and returned.  Raises
    :class:`~feketelab.errors.NonConvergence` when no start satisfies both
    the gradient tolerance and a clean exchange sweep.
    """
    opts = options or SolverOptions()
    if space.k < 1:
        raise DomainError("configurations need level k >= 1")
    N = space.dim
    starts = opts.resolved_starts(N)
    geom = space.geometry
    best = None
    best_logv = float("-inf")
    best_gnorm = float("inf")
    best_fallback = None
    fallback_logv = float("-inf")
    fallback_gnorm = float("inf")
    converged_starts = 0
    total_iters = 0
    total_sweeps_moves = 0
    for s in range(starts):
        rng = np.random.default_rng(np.random.SeedSequence((opts.seed, s)))
        X = geom.uniform_points_array(rng, N)
        for _ in range(5):
            if math.isfinite(_log_vdm(space, X)):
                break
            X = geom.uniform_points_array(rng, N)
        X, logv, gnorm, it, _ = _ascent(space, X, opts.max_iters, opts.grad_tol)
        total_iters += it
        start_converged = False
        if not opts.polish:
            start_converged = gnorm <= opts.grad_tol
        elif math.isfinite(logv):
            # Converged once exchange sweeps come back clean twice, with a
            # bounded coordinated-refinement ascent in between; the flow
            # alone crawls on the near-isometry modes and never certifies.
            clean_seen = False
            for _ in range(opts.max_polish_rounds):
                X, clean, _, moves = _polish(space, X, opts.max_sweeps)
                total_sweeps_moves += moves
                if clean and clean_seen:
                    start_converged = True
                    break
                budget = opts.refine_iters if clean else opts.max_iters
                clean_seen = clean
                X, logv, gnorm, it, moved = _ascent(
                    space, X, budget, opts.grad_tol
                )
                total_iters += it
                if moved == 0:
                    start_converged = clean
                    break
            logv = _log_vdm(space, X)
        if start_converged:
            converged_starts += 1
            if logv > best_logv:
                best, best_logv, best_gnorm = X, logv, gnorm
        elif logv > fallback_logv:
            best_fallback, fallback_logv, fallback_gnorm = X, logv, gnorm
    if best is None:
        if not (opts.allow_uncertified and best_fallback is not None
                and math.isfinite(fallback_logv)):
            raise NonConvergence(
                f"none of the {starts} starts converged "
                "(no clean exchange sweeps, gradient tolerance unmet)"
            )
        best, best_logv, best_gnorm = best_fallback, fallback_logv, fallback_gnorm
    best = canonicalize_array(best)
    cert = certify(space, best, grad_norm=best_gnorm)
    if not cert.passes() and not opts.allow_uncertified:
        raise NonConvergence(
            "best configuration failed the exchange certificate "
            f"(max cardinal sup {cert.max_lagrange_sup:.3e})"
        )
    meta = {
        "seed": opts.seed,
        "starts": starts,
        "iterations": total_iters,
        "exchange_moves": total_sweeps_moves,
        "converged_starts": converged_starts,
    }
    return Configuration(space, best, best_logv, cert, meta)


# --- diagnostics ----------------------------------------------------------------


def pair_energy_oracle(geometry, points):
    """Independent objective oracle on the line: sum of log sin of distances.

    Valid because the full Vandermonde determinant factors as the product
    of the orthonormalizing constants times ``prod_(i<j) sin d_ij``.
    """
    if geometry.n_factors != 1:
        raise ModelMismatch("the pair-energy factorization is a line identity")
    packed = points if isinstance(points, np.ndarray) else geometry.pack(points)
    d = geometry.distance_array(packed[:, None], packed[None, :])
    iu = np.triu_indices(packed.shape[0], 1)
    vals = np.sin(d[iu])
    if np.any(vals <= 0.0):
        return float("-inf")
    return float(np.sum(np.log(vals)))


def min_separation(config):
    """Scaled minimal pairwise distance ``sqrt(k) * min d_ij``."""
    pts = config.points
    d = config.space.geometry.distance_array(pts[:, None], pts[None, :])
    iu = np.triu_indices(pts.shape[0], 1)
    return float(math.sqrt(config.space.k) * np.min(d[iu]))


def separated_subset(config, rho):
    """Indices of a maximal ``rho``-separated subset, farthest-first greedy.

    Starts from index 0 and repeatedly admits the node farthest from the
    kept set while that distance is at least ``rho``; the result is maximal
    (every rejected node sits within ``rho`` of a kept one) and
    deterministic under index ties.
    """
    if rho <= 0:
        raise DomainError("separation radius must be positive")
    pts = config.points
    geom = config.space.geometry
    d = geom.distance_array(pts[:, None], pts[None, :])
    kept = [0]
    mind = d[0].copy()
    mind[0] = 0.0
    while True:
        cand = int(np.argmax(mind))
        if mind[cand] < rho:
            break
        kept.append(cand)
        mind = np.minimum(mind, d[cand])
    return sorted(kept)


def cap_discrepancy(config, r_scale=1.0, n_centers=500):
    """Relative node-count error over metric balls at the comparison scale.

    Balls of radius ``r_scale * k^(1/4) / sqrt(k)`` are centered at a
    quasi-uniform family; each center compares the node fraction inside
    the closed ball against the ball's volume.
    """
    space = config.space
    geom = space.geometry
    k = space.k
    if r_scale <= 0:
        raise DomainError("r_scale must be positive")
    radius = r_scale * k**0.25 / math.sqrt(k)
    if radius > geom.diameter:
        raise DomainError(
            f"comparison radius {radius:.4f} exceeds the diameter {geom.diameter:.4f}"
        )
    if geom.n_factors == 1:
        centers = geom.scan_grid(n_centers)
    else:
        centers = geom.scan_grid(max(2, math.isqrt(n_centers)))
    d = geom.distance_array(centers[:, None], config.points[None, :])
    counts = np.sum(d <= radius, axis=1)
    frac = counts / config.size
    cap = geom.cap_measure(radius)
    rel = np.abs(frac - cap) / cap
    row = {
        "k": k,
        "n_nodes": config.size,
        "radius": radius,
        "cap_measure": cap,
        "max_rel_err": float(np.max(rel)),
        "mean_rel_err": float(np.mean(rel)),
        "min_count": int(np.min(counts)),
        "max_count": int(np.max(counts)),
        "n_centers": int(centers.shape[0]),
    }
    return ExperimentReport(
        experiment="equidist",
        model=geom.name,
        k=k,
        seed=0,
        params={"r_scale": r_scale, "n_centers": int(centers.shape[0])},
        rows=[row],
    )
