"""Interpolation through cardinal sections.

Given a nonsingular node configuration, the cardinal (Lagrange) sections
satisfy ``|l_j(x_i)| = delta_ij`` in the canonical frame; the induced
projection sends node values to the unique interpolating section.  This
module measures the projection's operator norm (the Lebesgue constant)
and builds localized witness sections: level-k sections that vanish on
every node inside a small ball yet stay large at its center, the
mechanism that drives Lebesgue-constant growth.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import (
    BudgetExceeded,
    CountMismatch,
    DomainError,
    ModelMismatch,
)
from .fekete import lagrange_coefficient_matrix
from .sections import (
    _LADDER,
    _project_tangent,
    Section,
    eval_norm,
    get_space,
    peak_section,
    sup_norm,
    tensor,
)

_LEBESGUE_RTOL = 1e-4
_MAX_LEBESGUE_ESCALATIONS = 2
_ZERO_GUARD = 1e-14


class LagrangeBasis:
    """The cardinal sections of a configuration, immutable once built.

    ``matrix`` has shape ``(dim, N)``; column ``j`` holds the coefficients
    of the section that is 1 at node ``j`` and 0 at the others.
    """

    __slots__ = ("config", "space", "matrix", "condition_number", "_sections")

    def __init__(self, config):
        space = config.space
        self.config = config
        self.space = space
        self.matrix = lagrange_coefficient_matrix(space, config.points)
        self.condition_number = float(
            np.linalg.cond(space.eval_basis_array(config.points))
        )
        self._sections = tuple(
            Section(space, self.matrix[:, j].copy())
            for j in range(config.size)
        )

    @property
    def sections(self):
        return self._sections

    def __len__(self):
        return len(self._sections)

    def section(self, j):
        return self._sections[j]


def lagrange_sections(config):
    """Cardinal sections of a configuration.

    Parameters
    ----------
    config : Configuration
        Node set with a nonsingular evaluation matrix.

    Returns
    -------
    LagrangeBasis

    Raises
    ------
    SingularConfiguration
        If the nodes do not determine a unique interpolant.
    """
    return LagrangeBasis(config)


def interpolate(basis, node_values):
    """The section taking the given values at the basis nodes.

    Parameters
    ----------
    basis : LagrangeBasis
    node_values : array_like of complex, length N
        Values in the canonical frame at each node's canonical
        representative.

    Returns
    -------
    Section
    """
    values = np.asarray(node_values, dtype=np.complex128)
    if values.shape != (len(basis),):
        raise CountMismatch(
            f"expected {len(basis)} node values, got {values.shape}"
        )
    return Section(basis.space, basis.matrix @ values)


# --- Lebesgue constant ----------------------------------------------------------


def _lebesgue_refine(space, C, start, steps=30, tol=1e-10):
    """Ascent on the cardinal-sum field from a packed start point.

    The field ``sum_j |l_j|`` is continuous but not smooth where a
    cardinal section vanishes; vanishing terms are dropped from the
    gradient (their contribution is bounded by the guard) and the batched
    backtracking only ever accepts genuine increases of the field itself.
    """
    v = start.copy()
    ell = space.eval_basis_array(v[None])[0] @ C
    f = float(np.sum(np.abs(ell)))
    step = 1.0 / max(space.k, 1)
    for _ in range(steps):
        grads = space.basis_gradient_array(v[None])[0]  # (f, 2, dim)
        dell = np.tensordot(grads, C, axes=(2, 0))  # (f, 2, N)
        mods = np.abs(ell)
        guard = mods > _ZERO_GUARD * max(f, 1e-300)
        phases = np.where(guard, ell / np.where(guard, mods, 1.0), 0.0)
        G = np.sum(np.conj(dell) * phases, axis=-1)
        T = _project_tangent(G, v)
        tnorm2 = float(np.sum(np.abs(T) ** 2))
        if tnorm2 <= tol * tol:
            break
        t = step
        improved = False
        for _ in range(5):
            lengths = t * _LADDER
            cands = v[None] + lengths[:, None, None] * T[None]
            cands /= np.sqrt(np.sum(np.abs(cands) ** 2, axis=-1, keepdims=True))
            cell = space.eval_basis_array(cands) @ C
            fvals = np.sum(np.abs(cell), axis=-1)
            ok = np.flatnonzero(fvals >= f + 1e-4 * lengths * tnorm2)
            if ok.size:
                j = int(ok[0])
                v, ell, f = cands[j], cell[j], float(fvals[j])
                step = lengths[j] * 2.0
                improved = True
                break
            t = lengths[-1] * 0.5
        if not improved:
            break
    return f, v


def _lebesgue_scan(space, C, m_per_factor, refine_from=4):
    pts, basis = space.scan_pair(m_per_factor)
    vals = np.sum(np.abs(basis @ C), axis=1)
    order = np.argsort(vals)[::-1][:refine_from]
    best_val = float(vals[order[0]])
    best_pt = pts[order[0]]
    for idx in order:
        val, pt = _lebesgue_refine(space, C, pts[idx].copy())
        if val > best_val:
            best_val, best_pt = val, pt
    return best_val, best_pt


def lebesgue_constant(basis, *, rtol=_LEBESGUE_RTOL):
    """Operator norm of the interpolation projection, with its argmax.

    Parameters
    ----------
    basis : LagrangeBasis
    rtol : float, optional
        Required relative agreement between the full- and half-density
        grid scans; the grid escalates until it is met.

    Returns
    -------
    (float, point)
        The maximum over the space of the cardinal-sum field, and a point
        attaining it.
    """
    space = basis.space
    C = basis.matrix
    m = space.default_scan_density()
    for _ in range(_MAX_LEBESGUE_ESCALATIONS + 1):
        val_full, pt_full = _lebesgue_scan(space, C, m)
        val_half, pt_half = _lebesgue_scan(space, C, max(2, m // 2))
        if val_half > val_full:
            val_full, pt_full = val_half, pt_half
        if abs(val_full - val_half) <= rtol * max(val_full, 1e-300):
            break
        m *= 2
    return val_full, space.geometry.unpack_row(pt_full)


# --- witness sections -----------------------------------------------------------


def witness_radius(k, eps):
    """Radius of the vanishing ball used by the witness construction."""
    if not 0.0 < eps < 1.0:
        raise DomainError("eps must lie strictly between 0 and 1")
    if k < 1:
        raise DomainError("witness construction needs level k >= 1")
    return eps * math.log(k) / ((1.0 - eps) * math.sqrt(k))


def witness_point(config, eps=0.2, seed=0, candidates=100):
    """A center for the vanishing ball with maximal headroom.

    Draws ``candidates`` uniform points and keeps the one whose ball of
    :func:`witness_radius` contains the fewest nodes, breaking ties by
    the smaller distance to the nearest node, then by draw order.  Among
    empty balls, the tightest one pins the nearest node at the ball
    boundary, which is where the sup-to-node-max signal of the witness
    is strongest and least noisy.
    """
    geom = config.space.geometry
    if geom.n_factors != 1:
        raise ModelMismatch("witness sections are built on the line model")
    rho = witness_radius(config.space.k, eps)
    rng = np.random.default_rng(seed)
    draws = geom.uniform_points_array(rng, candidates)
    d = geom.distance_array(draws[:, None], config.points[None, :])
    counts = np.sum(d <= rho, axis=1)
    nearest = np.min(d, axis=1)
    order = np.lexsort((np.arange(candidates), nearest, counts))
    return geom.unpack_row(draws[order[0]])


def witness_section(config, eps=0.2, x=None, seed=0):
    """Level-k section vanishing on all nodes near ``x`` yet large at ``x``.

    The section is a product of two line sections: a degree-``ceil(eps*k)``
    factor with one zero at each node inside the ball of
    :func:`witness_radius` around ``x`` (padded to exact degree with
    factors peaked at ``x``, then sup-normalized), and a peak section of
    the complementary level centered at ``x``.

    Parameters
    ----------
    config : Configuration
        Node set on the line model.
    eps : float, optional
        Fraction of the level budgeted to the vanishing factor.
    x : ProjPoint, optional
        Ball center; drawn by :func:`witness_point` when omitted.
    seed : int, optional
        Seed for the automatic center choice.

    Returns
    -------
    (Section, float, dict)
        The witness, the ratio of its sup over its largest node value,
        and diagnostics (ball data, padding, the vanishing factor's value
        at ``x``, argmax location).

    Raises
    ------
    BudgetExceeded
        If the ball holds more nodes than the vanishing factor has zeros.
    """
    space_k = config.space
    geom = space_k.geometry
    if geom.n_factors != 1:
        raise ModelMismatch("witness sections are built on the line model")
    k = space_k.k
    rho = witness_radius(k, eps)
    m = math.ceil(eps * k)
    if x is None:
        x = witness_point(config, eps=eps, seed=seed)
    xrow = geom.pack_row(x)
    d = geom.distance_array(xrow[None], config.points)
    inside = np.flatnonzero(d <= rho)
    if inside.size > m:
        raise BudgetExceeded(
            f"{inside.size} nodes inside the radius-{rho:.4f} ball exceed "
            f"the vanishing budget {m}"
        )
    poly = np.ones(1, dtype=np.complex128)
    for j in inside:
        p = config.points[j, 0]
        poly = np.convolve(poly, np.array([p[1], -p[0]]))
    xhat = np.conj(xrow[0])
    for _ in range(m - inside.size):
        poly = np.convolve(poly, xhat)
    space_m = get_space(geom, m)
    blocker = Section(space_m, space_m.coeffs_from_monomials(poly))
    sup_b, _ = sup_norm(blocker)
    blocker = blocker.scaled(1.0 / sup_b)
    peak = peak_section(get_space(geom, k - m), x)
    witness = tensor(blocker, peak)
    sup_w, arg_w = sup_norm(witness)
    node_vals = np.abs(space_k.eval_basis_array(config.points) @ witness.coeffs)
    node_max = float(np.max(node_vals))
    ratio = sup_w / node_max if node_max > 0.0 else float("inf")
    diagnostics = {
        "x": x,
        "eps": eps,
        "level": k,
        "vanishing_level": m,
        "ball_radius": rho,
        "nodes_in_ball": [int(j) for j in inside],
        "padding": int(m - inside.size),
        "blocker_at_x": eval_norm(blocker, x),
        "value_at_x": eval_norm(witness, x),
        "sup": sup_w,
        "sup_argmax": arg_w,
        "node_max": node_max,
        "nearest_node_distance": float(np.min(d)),
    }
    return witness, float(ratio), diagnostics
