"""Polytopes as finite intersections of halfspaces ``{x : <x, u> <= rho}``.

Polytopes may be unbounded, may contain redundant halfspaces, and may
have negative offsets (origin outside).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

UNIT_TOL = 1e-10


class PolytopeFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Halfspace:
    normal: np.ndarray
    offset: float

    def __post_init__(self):
        u = np.asarray(self.normal, dtype=float)
        if abs(np.linalg.norm(u) - 1.0) > UNIT_TOL:
            raise ValueError("halfspace normal must have unit length")
        object.__setattr__(self, "normal", u)


class Polytope:
    """Intersection of ``K`` halfspaces in R^n.

    Parameters
    ----------
    normals : array_like, shape (K, n)
        Unit outer normals.
    offsets : array_like, shape (K,)
        Offsets ``rho_i``.
    validate : bool
        Check unit normals. Only fault-injection code should turn this off.
    """

    def __init__(self, normals, offsets, validate: bool = True):
        normals = np.array(normals, dtype=float, ndmin=2)
        offsets = np.array(offsets, dtype=float, ndmin=1)
        if normals.ndim != 2 or offsets.ndim != 1 or normals.shape[0] != offsets.shape[0]:
            raise ValueError("normals must be (K, n) and offsets (K,)")
        K, n = normals.shape
        if K < 1 or n < 2:
            raise ValueError("need K >= 1 halfspaces in dimension n >= 2")
        if not (np.all(np.isfinite(normals)) and np.all(np.isfinite(offsets))):
            raise ValueError("normals and offsets must be finite")
        if validate:
            dev = np.abs(np.linalg.norm(normals, axis=1) - 1.0)
            if np.any(dev > UNIT_TOL):
                raise ValueError(f"non-unit normal (max deviation {dev.max():.3g})")
        normals.setflags(write=False)
        offsets.setflags(write=False)
        self.normals = normals
        self.offsets = offsets

    @classmethod
    def from_halfspaces(cls, halfspaces):
        hs = list(halfspaces)
        return cls([h.normal for h in hs], [h.offset for h in hs])

    @property
    def dim(self) -> int:
        return self.normals.shape[1]

    @property
    def K(self) -> int:
        return self.normals.shape[0]

    @property
    def halfspaces(self):
        return [Halfspace(u, float(r)) for u, r in zip(self.normals, self.offsets)]

    def __len__(self):
        return self.K

    def __eq__(self, other):
        if not isinstance(other, Polytope):
            return NotImplemented
        return (np.array_equal(self.normals, other.normals)
                and np.array_equal(self.offsets, other.offsets))

    def __hash__(self):
        return hash((self.normals.tobytes(), self.offsets.tobytes()))

    def __repr__(self):
        return f"Polytope(n={self.dim}, K={self.K})"

    def _check(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise ValueError(f"point dimension {x.shape[-1]} != polytope dimension {self.dim}")
        return x


def max_violation(P: Polytope, x):
    """``max_i (<x, u_i> - rho_i)``; works on a point or on rows of an array."""
    x = P._check(x)
    return np.max(x @ P.normals.T - P.offsets, axis=-1)


def contains(P: Polytope, x):
    return max_violation(P, x) <= 0.0


def distance(P: Polytope, x, tol: float = 1e-10, max_cycles: int = 10_000):
    """Euclidean distance from ``x`` to ``P`` by Dykstra's cyclic projections.

    ``x`` may be a single point or an ``(m, n)`` array; the iteration runs on
    all rows at once. Returns ``(dist, converged)`` with matching shapes.
    Rows inside ``P`` get distance 0 exactly.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    x = P._check(x)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    m = X.shape[0]
    dist = np.zeros(m)
    converged = np.ones(m, dtype=bool)
    viol = max_violation(P, X)
    active = np.nonzero(viol > 0.0)[0]
    if active.size:
        d, ok = _dykstra(P, X[active], tol, max_cycles)
        # distance is never below the violation of a single constraint
        dist[active] = np.maximum(d, viol[active])
        converged[active] = ok
    if single:
        return float(dist[0]), bool(converged[0])
    return dist, converged


def _dykstra(P: Polytope, X0, tol, max_cycles):
    U, rho = P.normals, P.offsets
    K = P.K
    Y = X0.copy()
    incr = np.zeros((K,) + X0.shape)
    live = np.ones(X0.shape[0], dtype=bool)
    idx = np.arange(X0.shape[0])
    for _ in range(max_cycles):
        rows = idx[live]
        if rows.size == 0:
            break
        Yl = Y[rows]
        start = Yl.copy()
        for i in range(K):
            Z = Yl + incr[i, rows]
            excess = np.maximum(Z @ U[i] - rho[i], 0.0)
            Yl = Z - excess[:, None] * U[i]
            incr[i, rows] = Z - Yl
        Y[rows] = Yl
        moved = np.linalg.norm(Yl - start, axis=1)
        live[rows[moved < tol]] = False
    d = np.linalg.norm(X0 - Y, axis=1)
    return d, ~live


def circumscribed_random(n: int, K: int, rho: float, seed) -> Polytope:
    """``{x : <x, x_i> <= rho}`` with ``x_i`` i.i.d. uniform on the sphere."""
    if K < 1 or rho <= 0:
        raise ValueError("need K >= 1 and rho > 0")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((K, n))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    return Polytope(z, np.full(K, float(rho)))


def standard_shape(name: str, n: int, scale: float = 1.0, K: int = None) -> Polytope:
    """Fixture polytopes: ``cube``, ``simplex`` or ``regular_polygon`` (n = 2).

    All are circumscribed about the ball of radius ``scale``.
    """
    if name == "cube":
        eye = np.eye(n)
        return Polytope(np.vstack((eye, -eye)), np.full(2 * n, float(scale)))
    if name == "simplex":
        # centered vertices of the standard simplex in R^{n+1}, expressed in
        # an orthonormal basis of the hyperplane sum(x) = 0
        V = np.eye(n + 1) - 1.0 / (n + 1)
        basis = np.linalg.qr(V[:, :n])[0]
        U = V @ basis
        U /= np.linalg.norm(U, axis=1, keepdims=True)
        return Polytope(U, np.full(n + 1, float(scale)))
    if name == "regular_polygon":
        if n != 2:
            raise ValueError("regular_polygon requires n = 2")
        if K is None or K < 3:
            raise ValueError("regular_polygon needs K >= 3")
        ang = 2.0 * np.pi * np.arange(K) / K
        return Polytope(np.column_stack((np.cos(ang), np.sin(ang))), np.full(K, float(scale)))
    raise ValueError(f"unknown shape {name!r}")


def serialize(P: Polytope) -> str:
    """Text format: ``n K`` then one ``u_1 ... u_n rho`` line per halfspace."""
    lines = [f"{P.dim} {P.K}"]
    for u, r in zip(P.normals, P.offsets):
        lines.append(" ".join(format(float(v), ".17g") for v in (*u, r)))
    return "\n".join(lines) + "\n"


def parse(text: str, strict: bool = False) -> Polytope:
    """Inverse of :func:`serialize`.

    Normals off the unit sphere by more than ``1e-10`` are renormalized with
    a warning; with ``strict=True`` a deviation beyond ``1e-6`` is an error.
    """
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows:
        raise PolytopeFormatError("empty polytope file")
    try:
        n, K = (int(v) for v in rows[0])
    except ValueError:
        raise PolytopeFormatError(f"malformed header line: {' '.join(rows[0])!r}") from None
    if len(rows) - 1 != K:
        raise PolytopeFormatError(f"header says K={K} but found {len(rows) - 1} halfspace lines")
    data = np.empty((K, n + 1))
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != n + 1:
            raise PolytopeFormatError(f"line {i}: expected {n + 1} numbers, got {len(row)}")
        try:
            data[i - 2] = [float(v) for v in row]
        except ValueError:
            raise PolytopeFormatError(f"line {i}: non-numeric entry") from None
    normals, offsets = data[:, :n], data[:, n]
    lengths = np.linalg.norm(normals, axis=1)
    if np.any(lengths == 0) or not np.all(np.isfinite(data)):
        raise PolytopeFormatError("zero or non-finite normal")
    dev = np.abs(lengths - 1.0)
    if strict and np.any(dev > 1e-6):
        raise PolytopeFormatError(f"non-unit normal (deviation {dev.max():.3g})")
    if np.any(dev > UNIT_TOL):
        warnings.warn(f"renormalized non-unit normals (max deviation {dev.max():.3g})",
                      UserWarning, stacklevel=2)
        bad = dev > UNIT_TOL
        normals[bad] /= lengths[bad, None]
    return Polytope(normals, offsets)


def as_halfspace_matrix(P: Polytope) -> np.ndarray:
    """``(K, n + 1)`` array ``[normals | offsets]``."""
    return np.column_stack((P.normals, P.offsets))
