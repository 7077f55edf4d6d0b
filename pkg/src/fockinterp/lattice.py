"""Zero sets: generation, canonical ordering and separation."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .weights import RadialWeight, d_rho, rho_at

#: spacing of the critical square lattice for phi(r) = r**2
CRITICAL_OMEGA = float(np.sqrt(np.pi / 2.0))


def canonical_order(points) -> np.ndarray:
    """Permutation sorting points by modulus, then argument in [0, 2pi), then real part.

    Moduli and arguments are rounded to 12 decimals so that lattice points
    on a common circle tie exactly.
    """
    p = np.asarray(points, dtype=complex)
    mod = np.round(np.abs(p), 12)
    arg = np.round(np.mod(np.angle(p), 2 * np.pi), 12)
    arg = np.where(arg >= np.round(2 * np.pi, 12), 0.0, arg)
    return np.lexsort((p.real, arg, mod))


@dataclass(frozen=True, eq=False)
class ZeroSet:
    """Finite, modulus-ordered point set ``lambda_1, lambda_2, ...``.

    ``points[k-1]`` is ``lambda_k``.  Every point of the underlying infinite
    set with modulus ``<= truncation_radius`` is present.
    """

    points: np.ndarray
    weight: RadialWeight = field(default_factory=RadialWeight.power)
    truncation_radius: float = np.inf
    omega: float | None = None  # lattice spacing, when the set is a (punctured) square lattice

    def __post_init__(self):
        p = np.asarray(self.points, dtype=complex).ravel()
        p = p[canonical_order(p)]
        p.setflags(write=False)
        object.__setattr__(self, "points", p)

    def __len__(self):
        return len(self.points)

    def __getitem__(self, k):
        """1-based access: ``zs[1]`` is the point of smallest modulus."""
        if not 1 <= k <= len(self.points):
            raise IndexError(f"zero index {k} out of range 1..{len(self.points)}")
        return self.points[k - 1]

    @property
    def moduli(self):
        return np.abs(self.points)

    def index_of(self, lam, tol=1e-12) -> int:
        """1-based index of the point equal to ``lam``."""
        i = np.flatnonzero(np.abs(self.points - lam) <= tol)
        if i.size == 0:
            raise KeyError(f"{lam} not in zero set")
        return int(i[0]) + 1

    @property
    def tree(self) -> cKDTree:
        t = self.__dict__.get("_tree")
        if t is None:
            t = cKDTree(np.column_stack([self.points.real, self.points.imag]))
            object.__setattr__(self, "_tree", t)
        return t

    def with_points(self, points) -> "ZeroSet":
        return ZeroSet(points, self.weight, self.truncation_radius, self.omega)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "re", "im"])
            for k, p in enumerate(self.points, start=1):
                w.writerow([k, repr(float(p.real)), repr(float(p.imag))])

    @classmethod
    def from_csv(cls, path, weight=None, truncation_radius=np.inf, omega=None) -> "ZeroSet":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        pts = np.array([float(r["re"]) + 1j * float(r["im"]) for r in rows])
        return cls(pts, weight or RadialWeight.power(), truncation_radius, omega)


def square_lattice(omega: float, R_max: float, weight: RadialWeight | None = None) -> ZeroSet:
    """All points ``omega*(m + i n)`` with modulus ``<= R_max``."""
    if omega <= 0:
        raise ValueError("omega must be positive")
    M = int(np.floor(R_max / omega)) + 1
    m, n = np.meshgrid(np.arange(-M, M + 1), np.arange(-M, M + 1), indexing="ij")
    keep = (m * m + n * n) * omega**2 <= R_max**2 * (1 + 1e-14)
    pts = omega * (m[keep] + 1j * n[keep])
    return ZeroSet(pts, weight or RadialWeight.power(2.0), float(R_max), float(omega))


def separation(zs: ZeroSet) -> float:
    """Exact minimum of ``d_rho`` over distinct pairs.

    Uses ``d_rho(p, q) >= |p - q| / rho(p)``: once an upper bound ``D`` on the
    minimum is known, only neighbours within ``D*rho(p)`` of each ``p`` can
    improve it.
    """
    pts = zs.points
    if len(pts) < 2:
        raise ValueError("separation needs at least two points")
    xy = np.column_stack([pts.real, pts.imag])
    tree = zs.tree
    dist, idx = tree.query(xy, k=2)
    if np.any(dist[:, 1] == 0):
        return 0.0
    upper = float(np.min(d_rho(zs.weight, pts, pts[idx[:, 1]])))
    rh = rho_at(zs.weight, pts)
    best = upper
    for i, nbrs in enumerate(tree.query_ball_point(xy, r=upper * rh * (1 + 1e-12))):
        nbrs = [j for j in nbrs if j != i]
        if nbrs:
            best = min(best, float(np.min(d_rho(zs.weight, pts[i], pts[nbrs]))))
    return best


def dist_to_set(z, zs: ZeroSet):
    """Euclidean distance from ``z`` (scalar or array) to the nearest point."""
    if len(zs) == 0:
        raise ValueError("empty zero set")
    z = np.asarray(z, dtype=complex)
    flat = z.ravel()
    d, _ = zs.tree.query(np.column_stack([flat.real, flat.imag]))
    d = d.reshape(z.shape)
    return d[()] if z.ndim == 0 else d


def remove_zero(zs: ZeroSet, index: int) -> ZeroSet:
    """Drop ``lambda_index`` (1-based); the result is re-ordered canonically."""
    if not 1 <= index <= len(zs):
        raise IndexError(f"zero index {index} out of range 1..{len(zs)}")
    pts = np.delete(zs.points, index - 1)
    return zs.with_points(pts)


def insert_zero(zs: ZeroSet, lam) -> ZeroSet:
    return zs.with_points(np.append(zs.points, complex(lam)))
