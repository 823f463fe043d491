"""Holomorphic section spaces over the model geometries.

A level-``k`` space on the line is spanned by the monomials
``v0^(k-a) v1^a`` with orthonormalizing constants
``c_(k,a) = sqrt((k+1) binom(k, a))`` for the volume-one inner product;
the product geometry uses tensor products of two line factors with the
pairs ``(a, b)`` ordered lexicographically.  All pointwise quantities are
taken on canonical representatives, so a section's "norm at a point" is a
plain modulus and no local trivializations appear anywhere.

The closed-form reproducing kernel has modulus
``prod_f (k+1) |<p_f, q_f>|^k``, which the tests exercise against
quadrature; ``sup_norm`` combines a quasi-uniform scan grid (density tied
to the feature scale ``1/sqrt(k)``), projected gradient ascent, and a
grid-halving stability check.
"""

from __future__ import annotations

import math
import warnings

import numpy as np
from scipy.linalg import lu_factor
from scipy.special import gammaln

from .errors import (
    CountMismatch,
    DomainError,
    LevelMismatch,
    ModelMismatch,
    SpaceMismatch,
)
from .geometry import Geometry, canonicalize_array, get_geometry

# Scan density per line factor: sections at level k vary on scale
# 1/sqrt(k), so ~60 k^2 nodes oversample the feature scale by ~sqrt(k).
# The product geometry squares the node count, so it runs a lighter
# per-factor density; ascent refinement and grid halving compensate.
_SCAN_FLOOR_CP1 = 4000
_SCAN_PER_K2_CP1 = 60
_SCAN_FLOOR_PROD = 120
_SCAN_PER_K2_PROD = 12

_PIVOT_FLOOR = 1e-300
_SUP_STABILITY_RTOL = 1e-8
_MAX_SCAN_ESCALATIONS = 2

_SPACES = {}


def get_space(geometry, k):
    """Return the cached level-``k`` section space over ``geometry``."""
    if isinstance(geometry, str):
        geometry = get_geometry(geometry)
    if not isinstance(geometry, Geometry):
        raise ModelMismatch("expected a model geometry or its name")
    if k < 0 or int(k) != k:
        raise DomainError("level must be a nonnegative integer")
    key = (geometry.name, int(k))
    if key not in _SPACES:
        _SPACES[key] = SectionSpace(geometry, int(k))
    return _SPACES[key]


def release_scan_memory():
    """Drop every cached scan-grid basis matrix and quadrature table.

    Sweeps over many levels would otherwise pin one large matrix per
    level; callers iterating over k should release between levels.
    """
    for space in _SPACES.values():
        space._scan_cache.clear()
        space._quad_cache = None


class SectionSpace:
    """Sections of the k-th tensor power over one model geometry."""

    def __init__(self, geometry, k):
        self.geometry = geometry
        self.k = k
        a = np.arange(k + 1)
        log_c = 0.5 * (
            math.log(k + 1.0)
            + gammaln(k + 1.0)
            - gammaln(a + 1.0)
            - gammaln(k - a + 1.0)
        )
        self._log_norm_factor = log_c
        self._factor_norm = np.exp(log_c)
        if geometry.n_factors == 1:
            self.dim = k + 1
            self.exponents = a[:, None]
            self.normalizers = np.exp(log_c)
            self.log_normalizer_sum = float(np.sum(log_c))
        else:
            self.dim = (k + 1) ** 2
            left = np.repeat(a, k + 1)
            right = np.tile(a, k + 1)
            self.exponents = np.stack([left, right], axis=1)
            self.normalizers = np.exp(log_c[left] + log_c[right])
            self.log_normalizer_sum = float(np.sum(log_c[left] + log_c[right]))
        self._scan_cache = {}
        self._scan_density = None
        self._quad_cache = None

    def __repr__(self):
        return f"SectionSpace({self.geometry.name}, k={self.k})"

    # --- basis evaluation ---------------------------------------------------
    def _factor_powers(self, z):
        """All powers z^0..z^k for a complex array, stacked on a new last axis."""
        out = np.empty(z.shape + (self.k + 1,), dtype=np.complex128)
        out[..., 0] = 1.0
        if self.k:
            np.cumprod(
                np.broadcast_to(z[..., None], z.shape + (self.k,)),
                axis=-1,
                out=out[..., 1:],
            )
        return out

    def _factor_matrix(self, packed_factor):
        """Evaluate the (k+1) weighted line monomials on one factor column."""
        p0 = self._factor_powers(packed_factor[..., 0])
        p1 = self._factor_powers(packed_factor[..., 1])
        return self._factor_norm * p0[..., ::-1] * p1

    def eval_basis_array(self, packed):
        """Basis values at packed points, shape ``(P, dim)``."""
        if self.geometry.n_factors == 1:
            return self._factor_matrix(packed[..., 0, :])
        left = self._factor_matrix(packed[..., 0, :])
        right = self._factor_matrix(packed[..., 1, :])
        return (left[..., :, None] * right[..., None, :]).reshape(
            packed.shape[:-2] + (self.dim,)
        )

    def basis_gradient_array(self, packed):
        """Holomorphic coordinate derivatives of the basis.

        Returns an array of shape ``(P, f, 2, dim)`` holding
        ``d B_j / d v_(factor, coord)`` at each packed point.
        """
        k = self.k
        P = packed.shape[0]
        f = self.geometry.n_factors
        out = np.zeros((P, f, 2, self.dim), dtype=np.complex128)
        mats = [self._factor_matrix(packed[:, i, :]) for i in range(f)]
        a = np.arange(k + 1)
        for i in range(f):
            p0 = self._factor_powers(packed[:, i, 0])
            p1 = self._factor_powers(packed[:, i, 1])
            c = np.exp(self._log_norm_factor)
            # slot j of (rev[:, 1:] * p1[:, :-1]) is z0^(k-j-1) z1^j, the
            # common monomial of both coordinate derivatives
            d0 = np.zeros((P, k + 1), dtype=np.complex128)
            d1 = np.zeros((P, k + 1), dtype=np.complex128)
            if k > 0:
                common = p0[:, ::-1][:, 1:] * p1[:, :-1]
                d0[:, :-1] = c[:-1] * (k - a[:-1]) * common
                d1[:, 1:] = c[1:] * a[1:] * common
            if f == 1:
                out[:, 0, 0, :] = d0
                out[:, 0, 1, :] = d1
            else:
                other = mats[1 - i]
                if i == 0:
                    out[:, 0, 0, :] = (d0[:, :, None] * other[:, None, :]).reshape(
                        P, self.dim
                    )
                    out[:, 0, 1, :] = (d1[:, :, None] * other[:, None, :]).reshape(
                        P, self.dim
                    )
                else:
                    out[:, 1, 0, :] = (other[:, :, None] * d0[:, None, :]).reshape(
                        P, self.dim
                    )
                    out[:, 1, 1, :] = (other[:, :, None] * d1[:, None, :]).reshape(
                        P, self.dim
                    )
        return out

    # --- monomial coefficient conversion (line only) -------------------------
    def coeffs_from_monomials(self, poly):
        """Orthonormal-basis coefficients from monomial coefficients (line only)."""
        if self.geometry.n_factors != 1:
            raise ModelMismatch("monomial conversion is a line-factor operation")
        poly = np.asarray(poly, dtype=np.complex128)
        if poly.shape != (self.dim,):
            raise CountMismatch(f"expected {self.dim} monomial coefficients")
        return poly / self.normalizers

    def monomials_from_coeffs(self, coeffs):
        """Inverse of :meth:`coeffs_from_monomials`."""
        if self.geometry.n_factors != 1:
            raise ModelMismatch("monomial conversion is a line-factor operation")
        return np.asarray(coeffs, dtype=np.complex128) * self.normalizers

    # --- quadrature ----------------------------------------------------------
    def quadrature(self):
        """Cached exact rule at this level plus the basis matrix on its nodes."""
        if self._quad_cache is None:
            rule = self.geometry.quadrature_rule(self.k)
            self._quad_cache = (rule, self.eval_basis_array(rule.points))
        return self._quad_cache

    # --- scan grids for sup-type maxima --------------------------------------
    def default_scan_density(self):
        if self._scan_density is None:
            if self.geometry.n_factors == 1:
                self._scan_density = max(_SCAN_FLOOR_CP1, _SCAN_PER_K2_CP1 * self.k**2)
            else:
                self._scan_density = max(
                    _SCAN_FLOOR_PROD, _SCAN_PER_K2_PROD * self.k**2
                )
        return self._scan_density

    def scan_pair(self, m_per_factor):
        """Grid points and basis matrix at the given per-factor density, cached."""
        m = int(m_per_factor)
        if m not in self._scan_cache:
            pts = self.geometry.scan_grid(m)
            self._scan_cache[m] = (pts, self.eval_basis_array(pts))
        return self._scan_cache[m]


class Section:
    """A holomorphic section, stored by orthonormal-basis coefficients."""

    __slots__ = ("space", "coeffs")

    def __init__(self, space, coeffs):
        coeffs = np.asarray(coeffs, dtype=np.complex128)
        if coeffs.shape != (space.dim,):
            raise CountMismatch(
                f"expected {space.dim} coefficients, got {coeffs.shape}"
            )
        self.space = space
        self.coeffs = coeffs

    def __repr__(self):
        return f"Section({self.space!r}, l2={self.l2_norm():.6g})"

    def values_array(self, packed):
        return self.space.eval_basis_array(packed) @ self.coeffs

    def eval(self, point):
        """Value at a point object, in the canonical frame."""
        row = self.space.geometry.pack_row(point)
        return complex(self.values_array(row[None, ...])[0])

    def l2_norm_sq(self):
        """Squared volume-one L2 norm, exact by orthonormality."""
        return float(np.sum(np.abs(self.coeffs) ** 2))

    def l2_norm(self):
        return math.sqrt(self.l2_norm_sq())

    def scaled(self, factor):
        return Section(self.space, self.coeffs * factor)

    def to_json(self):
        return {
            "model": self.space.geometry.name,
            "k": self.space.k,
            "coeffs": [[c.real, c.imag] for c in self.coeffs],
        }

    @classmethod
    def from_json(cls, data):
        space = get_space(data["model"], data["k"])
        coeffs = np.array([complex(re, im) for re, im in data["coeffs"]])
        return cls(space, coeffs)


# --- public operations --------------------------------------------------------


def eval_basis(space, point):
    """Orthonormal basis values at a point, as a length-``dim`` vector."""
    row = space.geometry.pack_row(point)
    return space.eval_basis_array(row[None, ...])[0]


def eval_norm(section, point):
    """Pointwise norm of a section at a point."""
    return abs(section.eval(point))


def inner(s, t):
    """Volume-one inner product, via coefficients (Parseval)."""
    if s.space is not t.space:
        raise SpaceMismatch("sections live in different spaces")
    return complex(np.sum(s.coeffs * np.conj(t.coeffs)))


def quadrature_inner(s, t):
    """The same inner product evaluated by the exact quadrature rule."""
    if s.space is not t.space:
        raise SpaceMismatch("sections live in different spaces")
    rule, basis = s.space.quadrature()
    vs = basis @ s.coeffs
    vt = basis @ t.coeffs
    return complex(np.sum(rule.weights * vs * np.conj(vt)))


def bergman_norm(space, p, q):
    """Modulus of the reproducing kernel between two points (closed form)."""
    pp = space.geometry.pack_row(p)
    qq = space.geometry.pack_row(q)
    return float(bergman_norm_array(space, pp[None], qq[None])[0])


def bergman_norm_array(space, packed_p, packed_q):
    """Vectorized kernel modulus, broadcasting over leading axes."""
    ip = np.abs(np.sum(packed_p * np.conj(packed_q), axis=-1))
    per_factor = (space.k + 1.0) * ip**space.k
    return np.prod(per_factor, axis=-1)


def bergman_decay_ratio(space, samples=257):
    """Worst ratio of the kernel modulus to ``4 k^n exp(-sqrt(k) d)``.

    Scans pairs at all distances d in [0, diameter]: a fixed base point
    against a per-factor arc sweep (the kernel modulus only depends on the
    per-factor distances).  A return value <= 1 verifies the decay bound
    at this level.
    """
    geom = space.geometry
    t = np.linspace(0.0, math.pi / 2.0, samples)
    arc = np.stack([np.cos(t), np.sin(t)], axis=-1).astype(complex)
    if geom.n_factors == 1:
        pts = arc[:, None, :]
    else:
        left = np.repeat(arc, samples, axis=0)
        right = np.tile(arc, (samples, 1))
        pts = np.stack([left, right], axis=1)
    base = np.zeros((geom.n_factors, 2), dtype=complex)
    base[:, 0] = 1.0
    dists = geom.distance_array(pts, base)
    vals = bergman_norm_array(space, pts, base)
    bound = 4.0 * float(space.k) ** geom.n_factors * np.exp(
        -math.sqrt(space.k) * dists
    )
    return float(np.max(vals / bound))


def peak_section(space, p):
    """The kernel section centered at ``p``, normalized to unit value there.

    Its coefficients are ``conj(B_j(p)) / N_k``; the squared L2 norm is then
    exactly ``1 / N_k`` and its pointwise norm at distance ``d`` decays like
    the kernel itself.
    """
    b = eval_basis(space, p)
    return Section(space, np.conj(b) / space.dim)


def tensor(s, t):
    """Product of two line sections, landing at the summed level."""
    if s.space.geometry.n_factors != 1 or t.space.geometry.n_factors != 1:
        raise ModelMismatch("tensor products are implemented on the line")
    if s.space.geometry is not t.space.geometry:
        raise ModelMismatch("sections live over different geometries")
    target = get_space(s.space.geometry, s.space.k + t.space.k)
    poly = np.convolve(
        s.space.monomials_from_coeffs(s.coeffs),
        t.space.monomials_from_coeffs(t.coeffs),
    )
    return Section(target, target.coeffs_from_monomials(poly))


def vandermonde_lognorm(space, points):
    """Log of |det| of the basis-evaluation matrix of ``dim`` points.

    Computed through a partially pivoted LU factorization; any pivot of
    modulus below 1e-300 makes the configuration numerically singular and
    the result is ``-inf``.
    """
    packed = _pack_config_points(space, points)
    E = space.eval_basis_array(packed)
    return _lognorm_from_eval_matrix(E)


def _lognorm_from_eval_matrix(E):
    with warnings.catch_warnings():
        # exact singularity is an expected input here; it maps to -inf
        warnings.simplefilter("ignore")
        lu, _ = lu_factor(E.T, check_finite=False)
    diag = np.abs(np.diag(lu))
    if np.any(diag < _PIVOT_FLOOR):
        return float("-inf")
    return float(np.sum(np.log(diag)))


def _pack_config_points(space, points):
    if isinstance(points, np.ndarray):
        packed = points
    else:
        packed = space.geometry.pack(points)
    if packed.shape != (space.dim, space.geometry.n_factors, 2):
        raise CountMismatch(
            f"expected {space.dim} points for level {space.k}, got {packed.shape[0]}"
        )
    return packed


# --- sup norm -----------------------------------------------------------------


def _project_tangent(grad, v):
    """Project a coordinate gradient onto the projective tangent at v."""
    out = grad.copy()
    for i in range(v.shape[0]):
        out[i] -= np.sum(np.conj(v[i]) * grad[i]) * v[i]
    return out


_LADDER = 0.5 ** np.arange(8)


def _refine_log_modulus(space, coeffs, start, steps=30, tol=1e-12):
    """Projected gradient ascent on log|s| from a packed starting point.

    Returns (|s| at the refined point, refined packed point).  The phase
    direction is flat and removed by the projection; retraction is plain
    renormalization of each factor.  Backtracking evaluates a geometric
    ladder of step lengths in one batched call and accepts the first
    sufficient increase, longest step first.
    """
    v = start.copy()
    val = space.eval_basis_array(v[None])[0] @ coeffs
    if val == 0:
        return 0.0, v
    f = math.log(abs(val))
    step = 1.0 / max(space.k, 1)
    for _ in range(steps):
        grads = space.basis_gradient_array(v[None])[0]  # (f, 2, dim)
        ds = grads @ coeffs  # (f, 2)
        G = np.conj(ds / val)
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
            cvals = space.eval_basis_array(cands) @ coeffs
            ok = np.flatnonzero(
                np.log(np.abs(cvals) + 1e-300) >= f + 1e-4 * lengths * tnorm2
            )
            if ok.size:
                j = int(ok[0])
                v, val = cands[j], complex(cvals[j])
                f = math.log(abs(val))
                step = lengths[j] * 2.0
                improved = True
                break
            t = lengths[-1] * 0.5
        if not improved:
            break
    # canonical phases do not change |s|; re-canonicalize for output hygiene
    v = canonicalize_array(v)
    val = space.eval_basis_array(v[None])[0] @ coeffs
    return abs(val), v


def _scan_max(space, coeffs, m_per_factor, refine_from=4):
    pts, basis = space.scan_pair(m_per_factor)
    vals = np.abs(basis @ coeffs)
    order = np.argsort(vals)[::-1][:refine_from]
    best_val = float(vals[order[0]])
    best_pt = pts[order[0]]
    for idx in order:
        val, pt = _refine_log_modulus(space, coeffs, pts[idx].copy())
        if val > best_val:
            best_val, best_pt = val, pt
    return best_val, best_pt


def sup_norm(section, *, density=None):
    """Supremum of the pointwise norm, with its argmax point.

    A quasi-uniform scan grid (density tied to the level) seeds projected
    gradient ascent; the reported value is an actual evaluation, hence a
    certified lower bound.  The scan is accepted once a half-density scan
    agrees to 1e-8 relative, escalating the density otherwise.
    """
    space = section.space
    m = density if density is not None else space.default_scan_density()
    for _ in range(_MAX_SCAN_ESCALATIONS + 1):
        val_full, pt_full = _scan_max(space, section.coeffs, m)
        val_half, pt_half = _scan_max(space, section.coeffs, max(2, m // 2))
        if val_half > val_full:
            val_full, pt_full = val_half, pt_half
        if abs(val_full - val_half) <= _SUP_STABILITY_RTOL * max(val_full, 1e-300):
            break
        m *= 2
    return val_full, space.geometry.unpack_row(pt_full)
