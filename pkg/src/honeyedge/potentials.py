"""Lattice-periodic potentials as finite Fourier series, their symmetry
operations, and domain-wall profiles.

A potential is stored as a map (m, n) -> complex amplitude on the dual
lattice; evaluation at x is sum_{mn} c_{mn} exp(i 2*pi*(m*k1 + n*k2).x).
Real-valued functions satisfy c_{-m,-n} = conj(c_{m,n}).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from .errors import ZeroAmplitude
from .lattice import LatticeBasis, build_lattice


class SymmetryOp(Enum):
    C = "conjugation"
    P = "parity"
    R = "rotation"


# Rotation convention: (R f)(x) = f(M x) with M the clockwise 2*pi/3
# rotation.  On dual indices this acts as (m, n) -> (n - m, -m).
_ROT_INDEX = lambda m, n: (n - m, -m)


@dataclass
class FourierPotential:
    coeffs: dict[tuple[int, int], complex]
    cutoff: int

    def __post_init__(self):
        self.coeffs = {k: complex(v) for k, v in self.coeffs.items() if v != 0}

    def coeff(self, m: int, n: int) -> complex:
        return self.coeffs.get((m, n), 0.0 + 0.0j)

    def evaluate(self, points: np.ndarray, basis: LatticeBasis | None = None) -> np.ndarray:
        """Evaluate at Cartesian points of shape (..., 2)."""
        basis = basis or build_lattice()
        pts = np.asarray(points, dtype=float)
        out = np.zeros(pts.shape[:-1], dtype=complex)
        for (m, n), c in self.coeffs.items():
            g = basis.dual_vector(m, n)
            out += c * np.exp(1j * (pts @ g))
        return out

    def norm_l2(self) -> float:
        """l2 norm of the coefficient map (= L2 norm over the unit cell)."""
        return math.sqrt(sum(abs(c) ** 2 for c in self.coeffs.values()))

    def is_real(self, tol: float = 1e-12) -> bool:
        return all(
            abs(self.coeff(-m, -n).conjugate() - c) <= tol
            for (m, n), c in self.coeffs.items()
        )

    def frame_coeffs(self, a2: int, b2: int, a1: int, b1: int) -> dict[tuple[int, int], complex]:
        """Re-index coefficients in an edge frame: (m, n) -> (p, q) with
        p = a1*m + b1*n and q = a2*m + b2*n (unimodular, lossless)."""
        return {
            (a1 * m + b1 * n, a2 * m + b2 * n): c
            for (m, n), c in self.coeffs.items()
        }

    def to_json(self) -> str:
        items = [[m, n, c.real, c.imag] for (m, n), c in sorted(self.coeffs.items())]
        return json.dumps({"coeffs": items, "cutoff": self.cutoff})

    @classmethod
    def from_json(cls, text: str) -> "FourierPotential":
        doc = json.loads(text)
        coeffs = {(int(m), int(n)): complex(re, im) for m, n, re, im in doc["coeffs"]}
        return cls(coeffs=coeffs, cutoff=int(doc["cutoff"]))


def apply_symmetry(p: FourierPotential, op: SymmetryOp) -> FourierPotential:
    """Conjugation C, parity P (x -> -x) or 2*pi/3 rotation R, as an exact
    map on Fourier coefficients."""
    new: dict[tuple[int, int], complex] = {}
    if op is SymmetryOp.C:
        for (m, n), c in p.coeffs.items():
            new[(-m, -n)] = new.get((-m, -n), 0.0) + c.conjugate()
    elif op is SymmetryOp.P:
        for (m, n), c in p.coeffs.items():
            new[(-m, -n)] = new.get((-m, -n), 0.0) + c
    elif op is SymmetryOp.R:
        for (m, n), c in p.coeffs.items():
            new[_ROT_INDEX(m, n)] = new.get(_ROT_INDEX(m, n), 0.0) + c
    else:
        raise ValueError(f"unknown symmetry op {op!r}")
    return FourierPotential(coeffs=new, cutoff=p.cutoff)


def symmetry_residual(p: FourierPotential, op: SymmetryOp) -> float:
    """l2 distance between the coefficient maps of op(p) and p."""
    q = apply_symmetry(p, op)
    keys = set(p.coeffs) | set(q.coeffs)
    return math.sqrt(sum(abs(q.coeff(*k) - p.coeff(*k)) ** 2 for k in keys))


def is_honeycomb(p: FourierPotential, tol: float = 1e-10) -> bool:
    """Real, even and rotation-invariant to within tol."""
    return all(symmetry_residual(p, op) <= tol for op in SymmetryOp)


# The minimal rotation-closed shell of dual vectors: 2*pi*k1, 2*pi*k2 and
# -2*pi*(k1 + k2), i.e. indices (1,0), (0,1), (-1,-1) and their negatives.
_SHELL = [(1, 0), (0, 1), (-1, -1)]


def default_honeycomb_V(V0: float) -> FourierPotential:
    """V0 * [cos(2pi k1.x) + cos(2pi k2.x) + cos(2pi (k1+k2).x)]."""
    if V0 == 0:
        raise ZeroAmplitude("V0 must be nonzero")
    coeffs: dict[tuple[int, int], complex] = {}
    for (m, n) in _SHELL:
        coeffs[(m, n)] = V0 / 2.0
        coeffs[(-m, -n)] = V0 / 2.0
    return FourierPotential(coeffs=coeffs, cutoff=1)


def default_W(W0: float) -> FourierPotential:
    """W0 * [sin(2pi k1.x) + sin(2pi k2.x) - sin(2pi (k1+k2).x)]; odd and
    rotation-invariant."""
    if W0 == 0:
        raise ZeroAmplitude("W0 must be nonzero")
    coeffs: dict[tuple[int, int], complex] = {}
    for (m, n) in _SHELL:
        coeffs[(m, n)] = W0 / 2.0j
        coeffs[(-m, -n)] = -W0 / 2.0j
    return FourierPotential(coeffs=coeffs, cutoff=1)


def default_a(a0: float) -> FourierPotential:
    """Even coefficient function for the conjugation-breaking divergence
    term; same shell as the default honeycomb potential."""
    if a0 == 0:
        raise ZeroAmplitude("a0 must be nonzero")
    coeffs: dict[tuple[int, int], complex] = {}
    for (m, n) in _SHELL:
        coeffs[(m, n)] = a0 / 2.0
        coeffs[(-m, -n)] = a0 / 2.0
    return FourierPotential(coeffs=coeffs, cutoff=1)


class WallKind(Enum):
    TANH = "tanh"
    CUSTOM = "custom"


@dataclass
class DomainWall:
    """Profile s -> kappa(s) with kappa(s) -> +-1 as s -> +-infinity."""

    profile: Callable[[np.ndarray], np.ndarray]
    derivative: Callable[[np.ndarray], np.ndarray]
    kind: WallKind = WallKind.TANH
    limits: tuple[float, float] = (-1.0, 1.0)

    def __call__(self, s):
        return self.profile(s)


def tanh_wall() -> DomainWall:
    return DomainWall(
        profile=np.tanh,
        derivative=lambda s: 1.0 / np.cosh(s) ** 2,
        kind=WallKind.TANH,
    )


def custom_wall(profile, derivative, limits=(-1.0, 1.0)) -> DomainWall:
    return DomainWall(profile=profile, derivative=derivative,
                      kind=WallKind.CUSTOM, limits=limits)


def sample_on_cell(p: FourierPotential, ngrid: int,
                   basis: LatticeBasis | None = None) -> np.ndarray:
    """Sample on the fractional grid x = (i/ngrid) v1 + (j/ngrid) v2."""
    basis = basis or build_lattice()
    out = np.zeros((ngrid, ngrid), dtype=complex)
    u = np.arange(ngrid) / ngrid
    U1, U2 = np.meshgrid(u, u, indexing="ij")
    for (m, n), c in p.coeffs.items():
        out += c * np.exp(2j * np.pi * (m * U1 + n * U2))
    return out


def project_from_samples(samples: np.ndarray, cutoff: int) -> FourierPotential:
    """Recover Fourier coefficients from a fractional-grid sample array.

    Exact for band-limited data when ngrid >= 2*cutoff + 1 per axis.
    """
    ngrid = samples.shape[0]
    hat = np.fft.fft2(samples) / ngrid**2
    coeffs: dict[tuple[int, int], complex] = {}
    for m in range(-cutoff, cutoff + 1):
        for n in range(-cutoff, cutoff + 1):
            c = hat[m % ngrid, n % ngrid]
            if abs(c) > 1e-14:
                coeffs[(m, n)] = c
    return FourierPotential(coeffs=coeffs, cutoff=cutoff)
