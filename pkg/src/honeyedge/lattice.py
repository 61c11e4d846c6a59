"""Equilateral lattice geometry, dual lattice, high-symmetry points and
edge-adapted frames for arbitrary rational edge directions.

All vectors are Cartesian 2-vectors.  Dual-lattice elements are indexed by
integer pairs (m, n) -> 2*pi*(m*k1 + n*k2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import NotCoprime

TAU = complex(math.cos(2 * math.pi / 3), math.sin(2 * math.pi / 3))


class EdgeClass(Enum):
    ZIGZAG = "zigzag"
    ARMCHAIR = "armchair"


@dataclass(frozen=True)
class LatticeBasis:
    """Direct basis (v1, v2), dual basis (k1, k2) with ki.vj = delta_ij,
    and a with a**2 = 2/sqrt(3) so the unit cell has area 1."""

    v1: np.ndarray
    v2: np.ndarray
    k1: np.ndarray
    k2: np.ndarray
    a: float

    def dual_vector(self, m: int, n: int) -> np.ndarray:
        """Dual-lattice vector 2*pi*(m*k1 + n*k2)."""
        return 2.0 * np.pi * (m * self.k1 + n * self.k2)


@dataclass(frozen=True)
class HighSymmetryPoints:
    K: np.ndarray
    Kp: np.ndarray
    tau: complex


@dataclass(frozen=True)
class EdgeFrame:
    """Edge-adapted frame for the rational direction a1*v1 + b1*v2.

    (a2, b2) completes the unimodular pair (a1*b2 - a2*b1 = 1), v_e1/v_e2
    span the lattice, K_e1/K_e2 are the dual pair, and ell is the unique
    vector with ell.v_e1 = 1 and K_e2.ell = 0.
    """

    a1: int
    b1: int
    a2: int
    b2: int
    v_e1: np.ndarray
    v_e2: np.ndarray
    K_e1: np.ndarray
    K_e2: np.ndarray
    ell: np.ndarray
    edge_class: EdgeClass
    kpar_K: float
    kpar_Kp: float

    @property
    def K2_norm(self) -> float:
        return float(np.linalg.norm(self.K_e2))


def build_lattice() -> LatticeBasis:
    """Canonical equilateral basis with unit-area fundamental cell."""
    a = math.sqrt(2.0 / math.sqrt(3.0))
    v1 = a * np.array([math.sqrt(3.0) / 2.0, 0.5])
    v2 = a * np.array([math.sqrt(3.0) / 2.0, -0.5])
    k1 = a * np.array([0.5, math.sqrt(3.0) / 2.0])
    k2 = a * np.array([0.5, -math.sqrt(3.0) / 2.0])
    return LatticeBasis(v1=v1, v2=v2, k1=k1, k2=k2, a=a)


def high_symmetry_points(basis: LatticeBasis) -> HighSymmetryPoints:
    """The two inequivalent Brillouin-zone corners K and K' = -K."""
    K = (2.0 * np.pi / 3.0) * (basis.k1 - basis.k2)
    return HighSymmetryPoints(K=K, Kp=-K, tau=TAU)


def classify_edge(a1: int, b1: int) -> EdgeClass:
    """Armchair type iff a1 == b1 (mod 3), zigzag type otherwise."""
    if (a1, b1) == (0, 0) or math.gcd(a1, b1) != 1:
        raise NotCoprime(f"({a1}, {b1}) is not a coprime direction")
    return EdgeClass.ARMCHAIR if (a1 - b1) % 3 == 0 else EdgeClass.ZIGZAG


def _complete_unimodular(a1: int, b1: int) -> tuple[int, int]:
    """Smallest (a2, b2) with a1*b2 - a2*b1 = 1.

    Extended Euclid gives one solution; the full set is
    (a2 + t*a1, b2 + t*b1).  Ties on |a2| + |b2| break toward smaller a2
    so frames are reproducible across platforms.
    """
    g, x, y = _ext_gcd(abs(a1), abs(b1))
    # a1*b2 - b1*a2 = 1 with signs restored
    sx = 1 if a1 >= 0 else -1
    sy = 1 if b1 >= 0 else -1
    b2, a2 = sx * x, -sy * y
    assert a1 * b2 - a2 * b1 == 1
    best = None
    for t in range(-abs(a1) - abs(b1) - 2, abs(a1) + abs(b1) + 3):
        ca, cb = a2 + t * a1, b2 + t * b1
        key = (abs(ca) + abs(cb), ca)
        if best is None or key < best[0]:
            best = (key, (ca, cb))
    return best[1]


def _ext_gcd(a: int, b: int) -> tuple[int, int, int]:
    if b == 0:
        return a, 1, 0
    g, x, y = _ext_gcd(b, a % b)
    return g, y, x - (a // b) * y


def edge_frame(a1: int, b1: int, basis: LatticeBasis | None = None) -> EdgeFrame:
    """Edge-adapted frame for the direction a1*v1 + b1*v2 (coprime)."""
    if (a1, b1) == (0, 0) or math.gcd(a1, b1) != 1:
        raise NotCoprime(f"({a1}, {b1}) is not a coprime direction")
    basis = basis or build_lattice()
    a2, b2 = _complete_unimodular(a1, b1)
    v_e1 = a1 * basis.v1 + b1 * basis.v2
    v_e2 = a2 * basis.v1 + b2 * basis.v2
    K_e1 = b2 * basis.k1 - a2 * basis.k2
    K_e2 = -b1 * basis.k1 + a1 * basis.k2
    # ell = K_e1 projected onto the orthogonal complement of K_e2; this is
    # the unique solution of ell.v_e1 = 1, K_e2.ell = 0.
    K2n = np.linalg.norm(K_e2)
    ell = K_e1 - (K_e2 @ K_e1) / K2n**2 * K_e2
    # K.v_e1 = 2*pi*(a1 - b1)/3; reduce on exact integer arithmetic.
    r = (a1 - b1) % 3
    kpar_K = 2.0 * np.pi * r / 3.0
    kpar_Kp = 2.0 * np.pi * ((-r) % 3) / 3.0
    return EdgeFrame(
        a1=a1, b1=b1, a2=a2, b2=b2,
        v_e1=v_e1, v_e2=v_e2, K_e1=K_e1, K_e2=K_e2, ell=ell,
        edge_class=classify_edge(a1, b1),
        kpar_K=kpar_K, kpar_Kp=kpar_Kp,
    )


def reduce_mod_dual(q: np.ndarray, basis: LatticeBasis, search: int = 3) -> np.ndarray:
    """Shortest representative of q modulo the dual lattice.

    Brute-force over |m|, |n| <= search; sufficient for vectors within a
    few Brillouin zones of the origin.
    """
    best = q
    best_n = np.linalg.norm(q)
    for m in range(-search, search + 1):
        for n in range(-search, search + 1):
            cand = q - basis.dual_vector(m, n)
            nn = np.linalg.norm(cand)
            if nn < best_n:
                best, best_n = cand, nn
    return best


def dist_to_valleys(k: np.ndarray, basis: LatticeBasis, search: int = 4) -> float:
    """Distance from k to the union of the K and K' dual-lattice classes."""
    hs = high_symmetry_points(basis)
    d1 = np.linalg.norm(reduce_mod_dual(k - hs.K, basis, search))
    d2 = np.linalg.norm(reduce_mod_dual(k - hs.Kp, basis, search))
    return float(min(d1, d2))
