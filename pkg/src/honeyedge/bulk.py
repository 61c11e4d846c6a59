"""Plane-wave Floquet-Bloch solver for the periodic bulk operators.

Assembles -(grad + i k)^2 + V (plus optional symmetry-breaking blocks) in
the basis exp(i 2*pi*(m*k1 + n*k2).x), |m|, |n| <= N.  Locates conical band
degeneracies at the Brillouin-zone corners, fixes the rotation/conjugation
gauge of the degenerate pair, extracts the Fermi velocity and the
symmetry-breaking coupling constants, and checks the transverse no-fold
condition and the perturbed bulk gap for a given edge frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import (
    AnisotropyTooLarge,
    CutoffTooSmall,
    GapClosed,
    NoDiracPoint,
    NondegeneracyFailure,
    NotConical,
    RotationSortFailure,
)
from .lattice import (
    EdgeFrame,
    LatticeBasis,
    TAU,
    build_lattice,
    dist_to_valleys,
    high_symmetry_points,
)
from .potentials import FourierPotential, is_honeycomb


class PerturbationKind(Enum):
    POTENTIAL = "W"      # adds sign * delta * W(x)
    DIVERGENCE = "A"     # adds sign * delta * div(a(x) sigma2 grad .)


@dataclass
class Perturbation:
    kind: PerturbationKind
    potential: FourierPotential
    delta: float
    sign: int = +1


@dataclass
class BlochProblem:
    potential: FourierPotential
    k: np.ndarray
    cutoff: int
    perturbation: Optional[Perturbation] = None
    basis: LatticeBasis = field(default_factory=build_lattice)


class PlaneWaveGrid:
    """Index bookkeeping for the square cutoff |m|, |n| <= N."""

    def __init__(self, cutoff: int, basis: LatticeBasis):
        self.cutoff = cutoff
        self.basis = basis
        side = 2 * cutoff + 1
        m, n = np.meshgrid(np.arange(-cutoff, cutoff + 1),
                           np.arange(-cutoff, cutoff + 1), indexing="ij")
        self.m = m.ravel()
        self.n = n.ravel()
        self.size = side * side
        # Cartesian dual vectors 2*pi*(m k1 + n k2)
        self.G = 2.0 * np.pi * (np.outer(self.m, basis.k1) + np.outer(self.n, basis.k2))

    def index(self, m, n):
        """Flat index of (m, n); -1 when outside the cutoff box."""
        m = np.asarray(m)
        n = np.asarray(n)
        N = self.cutoff
        inside = (np.abs(m) <= N) & (np.abs(n) <= N)
        idx = (m + N) * (2 * N + 1) + (n + N)
        return np.where(inside, idx, -1)


def _potential_block(grid: PlaneWaveGrid, pot: FourierPotential) -> np.ndarray:
    """Convolution matrix of multiplication by pot in the plane-wave basis."""
    H = np.zeros((grid.size, grid.size), dtype=complex)
    rows = np.arange(grid.size)
    for (p, q), c in pot.coeffs.items():
        cols = grid.index(grid.m - p, grid.n - q)
        ok = cols >= 0
        H[rows[ok], cols[ok]] += c
    return H


def _divergence_block(grid: PlaneWaveGrid, k: np.ndarray,
                      apot: FourierPotential) -> np.ndarray:
    """Matrix of div(a(x) sigma2 grad .), a first-order operator with
    entries i * a_{G-G'} * det[G - G', k + (G + G')/2]."""
    H = np.zeros((grid.size, grid.size), dtype=complex)
    rows = np.arange(grid.size)
    for (p, q), c in apot.coeffs.items():
        cols = grid.index(grid.m - p, grid.n - q)
        ok = cols >= 0
        r, cl = rows[ok], cols[ok]
        dG = grid.G[r] - grid.G[cl]
        mid = k + 0.5 * (grid.G[r] + grid.G[cl])
        det = dG[:, 0] * mid[:, 1] - dG[:, 1] * mid[:, 0]
        H[r, cl] += 1j * c * det
    return H


def assemble_bloch(problem: BlochProblem) -> np.ndarray:
    """Dense Hermitian matrix of the Bloch fiber operator at problem.k."""
    pot = problem.potential
    if problem.cutoff < pot.cutoff:
        raise CutoffTooSmall(
            f"cutoff {problem.cutoff} < potential cutoff {pot.cutoff}")
    grid = PlaneWaveGrid(problem.cutoff, problem.basis)
    kG = problem.k + grid.G
    H = np.diag((kG**2).sum(axis=1)).astype(complex)
    H += _potential_block(grid, pot)
    pert = problem.perturbation
    if pert is not None:
        if problem.cutoff < pert.potential.cutoff:
            raise CutoffTooSmall("cutoff below perturbation cutoff")
        w = pert.sign * pert.delta
        if pert.kind is PerturbationKind.POTENTIAL:
            H += w * _potential_block(grid, pert.potential)
        else:
            H += w * _divergence_block(grid, problem.k, pert.potential)
    return H


def bloch_eigs(potential, k, cutoff, n_bands=None, perturbation=None,
               basis=None, vectors=False):
    """Sorted eigenvalues (and optionally vectors) of the fiber at k."""
    basis = basis or build_lattice()
    H = assemble_bloch(BlochProblem(potential, np.asarray(k, float), cutoff,
                                    perturbation, basis))
    if vectors:
        w, V = np.linalg.eigh(H)
        if n_bands is not None:
            return w[:n_bands], V[:, :n_bands]
        return w, V
    w = np.linalg.eigvalsh(H)
    return w if n_bands is None else w[:n_bands]


def band_structure(potential, k_list, n_bands, cutoff, basis=None,
                   threads=None):
    """Bands E_b(k) (ascending) for each k in k_list; shape (nk, n_bands)."""
    basis = basis or build_lattice()
    k_list = [np.asarray(k, float) for k in k_list]
    if threads and threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=threads) as ex:
            rows = list(ex.map(
                lambda k: bloch_eigs(potential, k, cutoff, n_bands, basis=basis),
                k_list))
    else:
        rows = [bloch_eigs(potential, k, cutoff, n_bands, basis=basis)
                for k in k_list]
    return np.array(rows)


def _unit(phi):
    return np.array([math.cos(phi), math.sin(phi)])


def find_dirac_point(potential, cutoff, tol_deg=1e-7, max_band=12,
                     radii=(1e-2, 5e-3), n_dirs=8, aniso_tol=0.05,
                     basis=None, symmetry_tol=1e-10):
    """Locate the conical degeneracy at K.

    Returns (E_D, b_star) with b_star the 1-based index of the lower band
    of the first degenerate pair passing the isotropic-cone test.
    """
    basis = basis or build_lattice()
    if not is_honeycomb(potential, symmetry_tol):
        raise NoDiracPoint("potential is not honeycomb-symmetric")
    hs = high_symmetry_points(basis)
    wK = bloch_eigs(potential, hs.K, cutoff, n_bands=max_band + 1, basis=basis)
    candidates = [b for b in range(len(wK) - 1)
                  if wK[b + 1] - wK[b] < tol_deg and b + 1 <= max_band]
    if not candidates:
        raise NoDiracPoint(f"no degenerate pair below band {max_band} at K")
    last_aniso = None
    for b in candidates:
        E_D = 0.5 * (wK[b] + wK[b + 1])
        ok = True
        for r in radii:
            slopes = []
            for d in range(n_dirs):
                u = _unit(2 * math.pi * d / n_dirs)
                w = bloch_eigs(potential, hs.K + r * u, cutoff,
                               n_bands=b + 2, basis=basis)
                slopes.append((w[b + 1] - w[b]) / (2 * r))
            slopes = np.array(slopes)
            aniso = (slopes.max() - slopes.min()) / slopes.mean()
            last_aniso = aniso
            if not (slopes.mean() > 0 and aniso <= aniso_tol):
                ok = False
                break
        if ok:
            return float(E_D), b + 1
    raise NotConical(
        f"degenerate pair(s) found but cone test failed (anisotropy {last_aniso:.3g})")


def fit_fermi_velocity(potential, dirac_E_D, b_star, cutoff,
                       r_range=(1e-3, 2e-2), n_r=6, n_dirs=8,
                       aniso_tol=0.05, basis=None):
    """Least-squares cone slope of (E_{b+1} - E_b)/2 against radius.

    Returns (v_fit, max_directional_deviation).
    """
    basis = basis or build_lattice()
    hs = high_symmetry_points(basis)
    b = b_star - 1
    radii = np.linspace(r_range[0], r_range[1], n_r)
    dir_slopes = []
    for d in range(n_dirs):
        u = _unit(2 * math.pi * d / n_dirs)
        seps = []
        for r in radii:
            w = bloch_eigs(potential, hs.K + r * u, cutoff,
                           n_bands=b + 2, basis=basis)
            seps.append(0.5 * (w[b + 1] - w[b]))
        slope = np.polyfit(radii, seps, 1)[0]
        dir_slopes.append(slope)
    dir_slopes = np.array(dir_slopes)
    v_fit = dir_slopes.mean()
    dev = np.abs(dir_slopes - v_fit).max() / v_fit
    if dev > aniso_tol:
        raise AnisotropyTooLarge(f"directional deviation {dev:.3g}")
    return float(v_fit), float(dev)


# ---------------------------------------------------------------------------
# Rotation action and gauge fixing on the degenerate fiber
# ---------------------------------------------------------------------------

# (R f)(x) = f(M x) with M the clockwise 2*pi/3 rotation.  On a K-fiber
# coefficient grid this permutes indices by (m, n) -> (n - m, -m) plus a
# valley-dependent reciprocal shift.
_ROT_SHIFT = {"K": (-1, 0), "Kp": (1, 0)}


def rotate_fiber(coeffs: np.ndarray, grid: PlaneWaveGrid, valley: str) -> np.ndarray:
    """Apply the fiber rotation to a coefficient vector (truncation drops
    indices leaving the cutoff box)."""
    sm, sn = _ROT_SHIFT[valley]
    tm = grid.n - grid.m + sm
    tn = -grid.m + sn
    tgt = grid.index(tm, tn)
    out = np.zeros_like(coeffs)
    ok = tgt >= 0
    out[tgt[ok]] = coeffs[ok]
    return out


def parity_conjugate_fiber(coeffs: np.ndarray) -> np.ndarray:
    """PC acting within a fiber: coefficients conjugate in place."""
    return coeffs.conj()


def parity_to_other_valley(coeffs: np.ndarray, grid: PlaneWaveGrid) -> np.ndarray:
    """P maps the K fiber to the K' fiber with index negation."""
    tgt = grid.index(-grid.m, -grid.n)
    out = np.zeros_like(coeffs)
    ok = tgt >= 0
    out[tgt[ok]] = coeffs[ok]
    return out


def velocity_pairing(c1: np.ndarray, c2: np.ndarray, grid: PlaneWaveGrid,
                     kstar: np.ndarray) -> np.ndarray:
    """<phi_1, -2i grad phi_2> as a Cartesian 2-vector."""
    kG = kstar + grid.G
    weights = (c1.conj() * c2)
    return 2.0 * np.array([weights @ kG[:, 0], weights @ kG[:, 1]])


def pairing_matrix(phi_pair, grid: PlaneWaveGrid, kstar: np.ndarray,
                   r: np.ndarray) -> np.ndarray:
    """2x2 matrix <phi_j, -2i r.grad phi_k> for the gauge-fixed pair."""
    c1, c2 = phi_pair
    kG = kstar + grid.G
    proj = kG @ np.asarray(r, float)
    M = np.empty((2, 2), dtype=complex)
    for j, cj in enumerate((c1, c2)):
        for k, ck in enumerate((c1, c2)):
            M[j, k] = 2.0 * ((cj.conj() * ck) @ proj)
    return M


@dataclass
class DiracPointData:
    """Dirac-point bundle: energy, band index, Fermi velocity, gauge-fixed
    degenerate modes per valley, and symmetry-breaking couplings."""

    E_D: float
    b_star: int
    v_F: float
    cutoff: int
    phi: dict            # valley -> (c1, c2) coefficient arrays
    theta: dict          # valley -> <phi1, W phi1>
    theta_tilde: dict    # valley -> <phi1, div(A grad phi1)>
    theta_gap: float
    theta_tilde_gap: float
    diagnostics: dict
    basis: LatticeBasis

    @property
    def grid(self) -> PlaneWaveGrid:
        return PlaneWaveGrid(self.cutoff, self.basis)

    def kstar(self, valley: str) -> np.ndarray:
        hs = high_symmetry_points(self.basis)
        return hs.K if valley == "K" else hs.Kp

    def v_F_valley(self, valley: str) -> float:
        return self.v_F if valley == "K" else -self.v_F

    def scalars(self) -> dict:
        out = {
            "E_D": self.E_D, "b_star": self.b_star, "v_F": self.v_F,
            "cutoff": self.cutoff,
            "theta_K": self.theta["K"], "theta_Kp": self.theta["Kp"],
            "theta_tilde_K": self.theta_tilde["K"],
            "theta_tilde_Kp": self.theta_tilde["Kp"],
            "theta_gap": self.theta_gap,
            "theta_tilde_gap": self.theta_tilde_gap,
        }
        out.update({f"diag_{k}": v for k, v in self.diagnostics.items()})
        return out


def _tau_project(vecs: np.ndarray, grid: PlaneWaveGrid, valley: str):
    """Member of the degenerate span in the tau rotation eigenspace."""
    best = None
    for i in range(vecs.shape[1]):
        u = vecs[:, i]
        ru = rotate_fiber(u, grid, valley)
        rru = rotate_fiber(ru, grid, valley)
        proj = (u + np.conj(TAU) * ru + TAU * rru) / 3.0
        nn = np.linalg.norm(proj)
        if best is None or nn > best[0]:
            best = (nn, proj)
    if best[0] < 0.1:
        raise RotationSortFailure(
            "no tau rotation eigenvector in the degenerate span")
    return best[1] / best[0]


def dirac_point_data(V, W, a, cutoff, basis=None, tol_deg=1e-7,
                     nondegeneracy_tol=1e-8, max_band=12) -> DiracPointData:
    """Full Dirac-point bundle for honeycomb V with couplings to W and a.

    The degenerate pair at K is sorted into rotation eigenspaces, the
    conjugation partner is fixed by phi2 = PC phi1, and the overall phase
    is chosen so <phi_1, -2i grad phi_2> = v_F (1, -i) with v_F > 0.
    Valley K' modes are the parity images of the K modes.
    """
    basis = basis or build_lattice()
    hs = high_symmetry_points(basis)
    E_D, b_star = find_dirac_point(V, cutoff, tol_deg=tol_deg,
                                   max_band=max_band, basis=basis)
    grid = PlaneWaveGrid(cutoff, basis)
    w, vecs = bloch_eigs(V, hs.K, cutoff, basis=basis, vectors=True)
    pair = vecs[:, b_star - 1:b_star + 1]

    phi1 = _tau_project(pair, grid, "K")
    phi2 = parity_conjugate_fiber(phi1)
    diag = {}
    diag["rot_residual_phi1"] = float(np.linalg.norm(
        rotate_fiber(phi1, grid, "K") - TAU * phi1))
    diag["rot_residual_phi2"] = float(np.linalg.norm(
        rotate_fiber(phi2, grid, "K") - np.conj(TAU) * phi2))
    diag["pair_overlap"] = float(abs(phi1.conj() @ phi2))

    # canonical phase: x-component of the velocity pairing real positive
    c = velocity_pairing(phi1, phi2, grid, hs.K)
    z = c[0]
    if abs(z) < 1e-12:
        raise RotationSortFailure("velocity pairing vanished")
    wbar2 = z.conjugate() / abs(z)
    wbar = np.sqrt(wbar2)
    phi1 = wbar.conjugate() * phi1
    phi2 = wbar * phi2
    c = velocity_pairing(phi1, phi2, grid, hs.K)
    v_F = float(np.sqrt(abs(c[0]) ** 2 + abs(c[1]) ** 2) / math.sqrt(2.0))
    diag["pairing_x_imag"] = float(abs(c[0].imag))
    diag["pairing_structure_residual"] = float(abs(c[1] + 1j * c[0]) / v_F)
    d11 = velocity_pairing(phi1, phi1, grid, hs.K)
    diag["diag_pairing_residual"] = float(np.linalg.norm(d11))

    phi = {"K": (phi1, phi2),
           "Kp": (parity_to_other_valley(phi1, grid),
                  parity_to_other_valley(phi2, grid))}

    theta, theta_tilde = {}, {}
    for valley in ("K", "Kp"):
        kstar = hs.K if valley == "K" else hs.Kp
        p1, p2 = phi[valley]
        Wblk = _potential_block(grid, W)
        Ablk = _divergence_block(grid, kstar, a)
        th = p1.conj() @ (Wblk @ p1)
        tt = p1.conj() @ (Ablk @ p1)
        diag[f"theta_imag_{valley}"] = float(abs(th.imag))
        diag[f"theta_tilde_imag_{valley}"] = float(abs(tt.imag))
        diag[f"theta_offdiag_{valley}"] = float(abs(p1.conj() @ (Wblk @ p2)))
        diag[f"theta_tilde_offdiag_{valley}"] = float(abs(p1.conj() @ (Ablk @ p2)))
        diag[f"theta_sigma3_{valley}"] = float(abs(p2.conj() @ (Wblk @ p2) + th.real))
        theta[valley] = float(th.real)
        theta_tilde[valley] = float(tt.real)

    if abs(theta["K"]) < nondegeneracy_tol:
        raise NondegeneracyFailure(f"|theta_K| = {abs(theta['K']):.2e} < {nondegeneracy_tol}")
    if abs(theta_tilde["K"]) < nondegeneracy_tol:
        raise NondegeneracyFailure(
            f"|theta_tilde_K| = {abs(theta_tilde['K']):.2e} < {nondegeneracy_tol}")

    return DiracPointData(
        E_D=E_D, b_star=b_star, v_F=v_F, cutoff=cutoff, phi=phi,
        theta=theta, theta_tilde=theta_tilde,
        theta_gap=abs(theta["K"]), theta_tilde_gap=abs(theta_tilde["K"]),
        diagnostics=diag, basis=basis,
    )


def frame_gauge(dirac: DiracPointData, frame: EdgeFrame) -> dict:
    """Re-phase the canonical modes so the frame pairing relations hold:

        <(phi)^T, -2i K_e2.grad phi> = v_F^Ks |K_e2| sigma1
        <(phi)^T, -2i ell .grad phi> = (v_F^Ks / |K_e2|) sigma2

    with v_F^K = +v_F and v_F^K' = -v_F.  Returns valley -> (c1, c2).
    """
    grid = dirac.grid
    out = {}
    c1, c2 = dirac.phi["K"]
    M12 = pairing_matrix((c1, c2), grid, dirac.kstar("K"), frame.K_e2)[0, 1]
    wbar2 = M12.conjugate() / abs(M12)
    wbar = np.sqrt(wbar2)
    g1 = wbar.conjugate() * c1
    g2 = wbar * c2
    out["K"] = (g1, g2)
    out["Kp"] = (parity_to_other_valley(g1, grid),
                 parity_to_other_valley(g2, grid))
    return out


def coupling_theta(phi_pair, grid: PlaneWaveGrid, W: FourierPotential,
                   nondegeneracy_tol=1e-8):
    """(theta, offdiag_residual) for the potential-type coupling."""
    p1, p2 = phi_pair
    blk = _potential_block(grid, W)
    th = (p1.conj() @ (blk @ p1)).real
    off = abs(p1.conj() @ (blk @ p2))
    if abs(th) < nondegeneracy_tol:
        raise NondegeneracyFailure(f"|theta| = {abs(th):.2e}")
    return float(th), float(off)


def coupling_theta_tilde(phi_pair, grid: PlaneWaveGrid, kstar, a: FourierPotential,
                         nondegeneracy_tol=1e-8):
    """(theta_tilde, offdiag_residual) for the divergence-type coupling."""
    p1, p2 = phi_pair
    blk = _divergence_block(grid, np.asarray(kstar, float), a)
    th = (p1.conj() @ (blk @ p1)).real
    off = abs(p1.conj() @ (blk @ p2))
    if abs(th) < nondegeneracy_tol:
        raise NondegeneracyFailure(f"|theta_tilde| = {abs(th):.2e}")
    return float(th), float(off)


# ---------------------------------------------------------------------------
# Transverse no-fold condition and perturbed bulk gap
# ---------------------------------------------------------------------------

@dataclass
class NoFoldReport:
    passed: bool
    offending_t: list
    min_band_distance: float
    n_t: int
    tol_fold: float
    valley_margin: float


def check_no_fold(potential, frame: EdgeFrame, dirac: DiracPointData,
                  n_t: int = 201, tol_fold: float = 1e-3,
                  valley_margin: float = 0.05) -> NoFoldReport:
    """Scan E_{b*}, E_{b*+1} along Ks + t*K_e2, t in [-pi, pi], for both
    valleys; flag energies at E_D away from the valley momentum classes."""
    basis = dirac.basis
    b = dirac.b_star - 1
    offending = []
    min_dist = math.inf
    ts = np.linspace(-math.pi, math.pi, n_t)
    for valley in ("K", "Kp"):
        kstar = dirac.kstar(valley)
        for t in ts:
            k = kstar + t * frame.K_e2
            if dist_to_valleys(k, basis) <= valley_margin:
                continue
            w = bloch_eigs(potential, k, dirac.cutoff, n_bands=b + 2, basis=basis)
            d = min(abs(w[b] - dirac.E_D), abs(w[b + 1] - dirac.E_D))
            min_dist = min(min_dist, d)
            if d < tol_fold:
                offending.append((valley, float(t), float(d)))
    return NoFoldReport(passed=not offending, offending_t=offending,
                        min_band_distance=float(min_dist), n_t=n_t,
                        tol_fold=tol_fold, valley_margin=valley_margin)


def bulk_gap(potential, perturbation: Perturbation, frame: EdgeFrame,
             kpar: float, dirac: DiracPointData, n_t: int = 96,
             refine: bool = True, closed_tol: float = 1e-9):
    """Gap interval (a_delta, b_delta) of the perturbed bulk fibers along
    kpar*K_e1 + t*K_e2, t in [-pi, pi]."""
    basis = dirac.basis
    b = dirac.b_star - 1

    def bands_at(t):
        k = kpar * frame.K_e1 + t * frame.K_e2
        w = bloch_eigs(potential, k, dirac.cutoff, n_bands=b + 2,
                       perturbation=perturbation, basis=basis)
        return w[b], w[b + 1]

    ts = np.linspace(-math.pi, math.pi, n_t)
    lower = np.empty(n_t)
    upper = np.empty(n_t)
    for i, t in enumerate(ts):
        lower[i], upper[i] = bands_at(t)

    a_delta = lower.max()
    b_delta = upper.min()
    if refine:
        # refine each extremum over its bracketing neighbours
        il = int(lower.argmax())
        iu = int(upper.argmin())
        lo = max(il - 1, 0)
        hi = min(il + 1, n_t - 1)
        res = minimize_scalar(lambda t: -bands_at(t)[0],
                              bounds=(ts[lo], ts[hi]), method="bounded",
                              options={"xatol": 1e-10})
        a_delta = max(a_delta, -res.fun)
        lo = max(iu - 1, 0)
        hi = min(iu + 1, n_t - 1)
        res = minimize_scalar(lambda t: bands_at(t)[1],
                              bounds=(ts[lo], ts[hi]), method="bounded",
                              options={"xatol": 1e-10})
        b_delta = min(b_delta, res.fun)

    if b_delta - a_delta <= closed_tol:
        raise GapClosed(f"gap ({a_delta}, {b_delta}) closed")
    return float(a_delta), float(b_delta)
