"""Model geometries for the laboratory.

Two closed-form geometries are supported: the projective line ``cp1``
(unit vectors in C^2 modulo phase, distance ``d(p, q) = arccos|<p, q>|``)
and the product surface ``cp1xcp1`` whose points are pairs of line points
with distance ``sqrt(d1^2 + d2^2)``.  All volume measures are normalized
to total mass one.

Points travel in two forms: as :class:`ProjPoint` objects (or tuples of
them on the product) for the public API, and as packed complex arrays of
shape ``(..., n_factors, 2)`` for vectorized kernels.  Packed rows always
hold canonical representatives: unit norm, first coordinate of modulus
above ``1e-12`` made real nonnegative.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError, ModelMismatch, ZeroVector

NORM_EPS = 1e-12
PHASE_EPS = 1e-12
POINT_TOL = 1e-12

_GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0


def canonicalize_array(raw):
    """Canonicalize an array of homogeneous representatives.

    Parameters
    ----------
    raw : array_like, complex, shape (..., 2)
        Homogeneous coordinates; need not be normalized.

    Returns
    -------
    ndarray, shape (..., 2)
        Unit representatives with the first coordinate of modulus
        above ``1e-12`` rotated to the real nonnegative axis.

    Raises
    ------
    ZeroVector
        If any representative has norm below ``1e-12``.
    """
    v = np.asarray(raw, dtype=np.complex128)
    if v.shape[-1] != 2:
        raise ValueError("expected homogeneous coordinates of shape (..., 2)")
    norms = np.sqrt(np.abs(v[..., 0]) ** 2 + np.abs(v[..., 1]) ** 2)
    if np.any(norms < NORM_EPS):
        raise ZeroVector("representative norm below 1e-12")
    v = v / norms[..., None]
    pivot = np.where(np.abs(v[..., 0]) > PHASE_EPS, v[..., 0], v[..., 1])
    phase = pivot / np.abs(pivot)
    return v * np.conj(phase)[..., None]


class ProjPoint:
    """A point of the projective line, stored as its canonical representative."""

    __slots__ = ("arr",)
    __hash__ = None

    def __init__(self, arr, _canonical=False):
        if _canonical:
            self.arr = np.asarray(arr, dtype=np.complex128)
        else:
            self.arr = canonicalize_array(arr)
        self.arr.setflags(write=False)

    def __repr__(self):
        a, b = self.arr
        return f"ProjPoint([{a:.6g}, {b:.6g}])"

    def __eq__(self, other):
        if not isinstance(other, ProjPoint):
            return NotImplemented
        return bool(np.all(np.abs(self.arr - other.arr) <= POINT_TOL))

    def to_json(self):
        """Serialize as ``[re0, im0, re1, im1]``."""
        a, b = self.arr
        return [a.real, a.imag, b.real, b.imag]

    @classmethod
    def from_json(cls, data):
        if len(data) != 4:
            raise ValueError("expected four reals")
        return cls([complex(data[0], data[1]), complex(data[2], data[3])])


def canonicalize(raw):
    """Build a :class:`ProjPoint` from any nonzero representative."""
    return ProjPoint(raw)


def _sphere_from_packed(packed):
    """Map canonical line representatives to unit vectors in R^3."""
    z0 = packed[..., 0]
    z1 = packed[..., 1]
    cross = 2.0 * np.conj(z0) * z1
    return np.stack(
        [cross.real, cross.imag, (np.abs(z0) ** 2 - np.abs(z1) ** 2)], axis=-1
    )


def _packed_from_sphere(xyz):
    """Inverse of :func:`_sphere_from_packed` (up to phase, then canonicalized)."""
    xyz = np.asarray(xyz, dtype=float)
    u = np.clip(xyz[..., 2], -1.0, 1.0)
    half = 0.5 * np.arccos(u)
    phi = np.arctan2(xyz[..., 1], xyz[..., 0])
    raw = np.stack(
        [np.cos(half).astype(np.complex128), np.sin(half) * np.exp(1j * phi)], axis=-1
    )
    return canonicalize_array(raw)


def _fibonacci_sphere(m):
    """Spherical Fibonacci lattice with m nodes, as packed line points."""
    i = np.arange(m)
    u = 1.0 - 2.0 * (i + 0.5) / m
    phi = (2.0 * math.pi * _GOLDEN) * i
    half = 0.5 * np.arccos(np.clip(u, -1.0, 1.0))
    raw = np.stack(
        [np.cos(half).astype(np.complex128), np.sin(half) * np.exp(1j * phi)], axis=-1
    )
    return canonicalize_array(raw)


class QuadratureRule:
    """Nodes and weights of a product quadrature, exact for section pairs.

    ``points`` is packed with shape ``(P, f, 2)`` and ``weights`` sums to one.
    Iteration yields ``(point_object, weight)`` pairs.
    """

    __slots__ = ("geometry", "degree", "points", "weights")

    def __init__(self, geometry, degree, points, weights):
        self.geometry = geometry
        self.degree = degree
        self.points = points
        self.weights = weights

    def __len__(self):
        return self.weights.shape[0]

    def __iter__(self):
        for row, w in zip(self.points, self.weights):
            yield self.geometry.unpack_row(row), float(w)

    def integrate(self, values):
        """Contract node values (first axis = node) against the weights."""
        return np.tensordot(self.weights, np.asarray(values), axes=(0, 0))


def _cp1_quadrature_factor(degree):
    """Gauss-Legendre x uniform-azimuth rule on one line factor.

    Exact for hermitian pairs ``F(x) conj(G(x))`` of sections at a common
    level ``<= degree``: the azimuthal count resolves every surviving
    Fourier mode and the polar integrand is a polynomial of degree
    ``<= degree`` in ``cos(theta)``.
    """
    n_u = degree + 2
    n_phi = 2 * degree + 4
    u, w = np.polynomial.legendre.leggauss(n_u)
    half = 0.5 * np.arccos(np.clip(u, -1.0, 1.0))
    phi = 2.0 * math.pi * np.arange(n_phi) / n_phi
    z0 = np.repeat(np.cos(half), n_phi).astype(np.complex128)
    z1 = np.repeat(np.sin(half), n_phi) * np.exp(1j * np.tile(phi, n_u))
    pts = canonicalize_array(np.stack([z0, z1], axis=-1))
    wts = np.repeat(w / 2.0, n_phi) / n_phi
    return pts, wts


class Geometry:
    """Common interface of the two model geometries."""

    name = ""
    n_factors = 0
    diameter = 0.0

    # --- point plumbing ---------------------------------------------------
    def pack(self, points):
        """Pack a sequence of point objects into an array (P, f, 2)."""
        rows = [self.pack_row(p) for p in points]
        if not rows:
            return np.zeros((0, self.n_factors, 2), dtype=np.complex128)
        return np.stack(rows, axis=0)

    def unpack(self, packed):
        return [self.unpack_row(row) for row in packed]

    def pack_row(self, point):
        raise NotImplementedError

    def unpack_row(self, row):
        raise NotImplementedError

    def point_to_json(self, point):
        row = self.pack_row(point)
        return [x for z in row.reshape(-1) for x in (z.real, z.imag)]

    def point_from_json(self, data):
        flat = np.asarray(data, dtype=float)
        if flat.shape != (4 * self.n_factors,):
            raise ValueError(f"expected {4 * self.n_factors} reals")
        z = flat[0::2] + 1j * flat[1::2]
        return self.unpack_row(canonicalize_array(z.reshape(self.n_factors, 2)))

    # --- metric and measure -----------------------------------------------
    def distance(self, p, q):
        """Geodesic-scale distance between two point objects."""
        dp = self.pack_row(p)[None]
        dq = self.pack_row(q)[None]
        return float(self.distance_array(dp, dq)[0])

    def distance_array(self, packed_p, packed_q):
        """Distance between packed arrays, broadcasting over leading axes."""
        ip = np.abs(np.sum(packed_p * np.conj(packed_q), axis=-1))
        per_factor = np.arccos(np.clip(ip, 0.0, 1.0))
        return np.sqrt(np.sum(per_factor**2, axis=-1))

    def cap_measure(self, r):
        raise NotImplementedError

    def uniform_points_array(self, rng, size):
        """Draw ``size`` independent volume-uniform points, packed."""
        g = rng.standard_normal((size, self.n_factors, 2, 2))
        raw = g[..., 0] + 1j * g[..., 1]
        return canonicalize_array(raw)

    def uniform_sample(self, rng):
        """Draw a single volume-uniform point object."""
        return self.unpack_row(self.uniform_points_array(rng, 1)[0])

    def quadrature_rule(self, degree):
        raise NotImplementedError

    def scan_grid(self, m_per_factor):
        """Deterministic quasi-uniform grid with m nodes per line factor."""
        raise NotImplementedError


class CP1Geometry(Geometry):
    """The projective line with volume-one round metric."""

    name = "cp1"
    n_factors = 1
    n = 1
    diameter = math.pi / 2.0

    def pack_row(self, point):
        if not isinstance(point, ProjPoint):
            raise ModelMismatch("cp1 points are ProjPoint instances")
        return point.arr[None, :]

    def unpack_row(self, row):
        return ProjPoint(row[0], _canonical=True)

    def cap_measure(self, r):
        """Normalized volume of a closed metric ball of radius r."""
        if r < -1e-15 or r > self.diameter + 1e-12:
            raise DomainError(f"cap radius {r} outside [0, {self.diameter}]")
        return float(np.sin(np.clip(r, 0.0, self.diameter)) ** 2)

    def quadrature_rule(self, degree):
        if degree < 0:
            raise DomainError("degree must be nonnegative")
        pts, wts = _cp1_quadrature_factor(degree)
        return QuadratureRule(self, degree, pts[:, None, :], wts)

    def scan_grid(self, m_per_factor):
        return _fibonacci_sphere(m_per_factor)[:, None, :]


class ProductGeometry(Geometry):
    """Product of two projective lines with the sum-of-squares metric."""

    name = "cp1xcp1"
    n_factors = 2
    n = 2
    diameter = math.pi / math.sqrt(2.0)

    def pack_row(self, point):
        try:
            a, b = point
        except TypeError as exc:
            raise ModelMismatch("product points are pairs of ProjPoint") from exc
        if not (isinstance(a, ProjPoint) and isinstance(b, ProjPoint)):
            raise ModelMismatch("product points are pairs of ProjPoint")
        return np.stack([a.arr, b.arr], axis=0)

    def unpack_row(self, row):
        return (
            ProjPoint(row[0], _canonical=True),
            ProjPoint(row[1], _canonical=True),
        )

    def cap_measure(self, r):
        """Ball volume by one-dimensional integration of the product density.

        The factor radial density is ``sin(2t)`` on ``[0, pi/2]``, so the
        ball volume is the integral of ``sin(2 t) * sin^2(min(sqrt(r^2 - t^2),
        pi/2))``; the integrand is analytic on each side of the clamp point,
        which high-order Gauss-Legendre resolves far below 1e-12.
        """
        if r < -1e-15 or r > self.diameter + 1e-12:
            raise DomainError(f"cap radius {r} outside [0, {self.diameter}]")
        r = float(np.clip(r, 0.0, self.diameter))
        if r == 0.0:
            return 0.0
        half_pi = math.pi / 2.0
        nodes, weights = np.polynomial.legendre.leggauss(160)

        def segment(a, b, clamped):
            if b <= a:
                return 0.0
            t = 0.5 * (b - a) * nodes + 0.5 * (a + b)
            if clamped:
                inner = np.ones_like(t)
            else:
                inner = np.sin(np.sqrt(np.maximum(r * r - t * t, 0.0))) ** 2
            return 0.5 * (b - a) * float(np.dot(weights, np.sin(2.0 * t) * inner))

        if r <= half_pi:
            return segment(0.0, r, clamped=False)
        t_star = math.sqrt(r * r - half_pi * half_pi)
        return segment(0.0, t_star, clamped=True) + segment(
            t_star, half_pi, clamped=False
        )

    def quadrature_rule(self, degree):
        if degree < 0:
            raise DomainError("degree must be nonnegative")
        pts, wts = _cp1_quadrature_factor(degree)
        m = pts.shape[0]
        left = np.repeat(pts, m, axis=0)
        right = np.tile(pts, (m, 1))
        points = np.stack([left, right], axis=1)
        weights = np.repeat(wts, m) * np.tile(wts, m)
        return QuadratureRule(self, degree, points, weights)

    def scan_grid(self, m_per_factor):
        base = _fibonacci_sphere(m_per_factor)
        m = base.shape[0]
        left = np.repeat(base, m, axis=0)
        right = np.tile(base, (m, 1))
        return np.stack([left, right], axis=1)


CP1 = CP1Geometry()
CP1XCP1 = ProductGeometry()

_GEOMETRIES = {CP1.name: CP1, CP1XCP1.name: CP1XCP1}


def get_geometry(name):
    """Look up a geometry by its model name (``cp1`` or ``cp1xcp1``)."""
    try:
        return _GEOMETRIES[name]
    except KeyError:
        raise DomainError(f"unknown model {name!r}") from None


def sphere_coordinates(packed_cp1):
    """Unit R^3 coordinates of packed line points (used by hole finding and plots)."""
    return _sphere_from_packed(packed_cp1[..., 0, :])


def point_from_sphere(xyz):
    """Line point object from unit R^3 coordinates."""
    return ProjPoint(_packed_from_sphere(xyz), _canonical=True)
