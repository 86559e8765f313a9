"""Non-Hermitian spectral data of the volume operator.

Eigenvalues are sorted by descending modulus and grouped into clusters; each
column of the mode matrix U carries a chain index (j, l, k) in lexicographic
total order. The orthonormalized basis E is produced by QR in the weighted
discrete L2(D) inner product, with change-of-basis matrices stored so that

    E = U @ A,    U = E @ B,    A @ B = I,

both upper-triangular with positive-real diagonal on B. In index notation
e_gamma = sum_{gamma' <= gamma} a_{gamma,gamma'} u_{gamma'} with
a_{gamma,gamma'} = A[gamma', gamma].

Coefficient matrices (H, R(z), D(z)) are stored with entries[gamma, gamma']
equal to the coefficient of basis element gamma' in the image of basis element
gamma, so e.g. the operator acts on the grid as M @ U = U @ H.entries.T.

Numerical Jordan detection is ill-posed: the default eigendecomposition path
treats every eigenvector as a chain of length one and only flags suspicious
clusters. Chains of length > 1 are exercised through exactly constructed
synthetic systems (synthetic_jordan_system), for which the chain algebra is
fully implemented.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from .errors import InvalidArgumentError, NumericFailureError, ResonanceProximityError
from .volume import DiscreteOperator, operator_from_matrix


@dataclass(frozen=True)
class ChainIndex:
    j: int  # eigenvalue cluster, 1-based
    l: int  # chain within cluster, 1-based
    k: int  # position within chain, 1-based

    def key(self) -> Tuple[int, int, int]:
        return (self.j, self.l, self.k)


@dataclass
class SpectralSystem:
    lambdas: np.ndarray            # (N,) eigenvalue per total-order column
    indices: List[ChainIndex]      # chain index per column, lexicographically sorted
    chains: List[Tuple[int, int, int]]   # (j, l, length)
    U: np.ndarray                  # modes, columns in total order
    E: np.ndarray                  # weighted-orthonormal columns
    A: np.ndarray                  # E = U @ A
    B: np.ndarray                  # U = E @ B
    weights: np.ndarray            # quadrature weights of the grid
    cluster_tol: float
    warnings: List[str] = field(default_factory=list)

    @property
    def size(self) -> int:
        return self.U.shape[1]

    def position(self, gamma: ChainIndex) -> int:
        key = gamma.key()
        for pos, idx in enumerate(self.indices):
            if idx.key() == key:
                return pos
        raise InvalidArgumentError(f"chain index {gamma} not present")

    def chain_matrix(self) -> np.ndarray:
        """Matrix T with M @ U = U @ T (upper bidiagonal per chain)."""
        N = self.size
        T = np.zeros((N, N), dtype=complex)
        for pos, idx in enumerate(self.indices):
            T[pos, pos] = self.lambdas[pos]
            if idx.k > 1:
                T[pos - 1, pos] = 1.0
        return T


@dataclass(frozen=True)
class CoefficientMatrix:
    entries: np.ndarray
    kind: str                  # "H" | "R" | "D"
    z: Optional[complex] = None


def _fix_column_phases(U: np.ndarray) -> np.ndarray:
    """Rotate each column so its first significant component is real positive."""
    U = U.copy()
    for c in range(U.shape[1]):
        col = U[:, c]
        mags = np.abs(col)
        top = mags.max()
        nz = np.nonzero(mags > 1e-12 * top)[0]
        pivot = col[nz[0]]
        U[:, c] = col * (np.abs(pivot) / pivot)
    return U


def _weighted_qr(U: np.ndarray, w: np.ndarray):
    """QR in the weighted inner product; returns E, A, B with E = U A, U = E B."""
    s = np.sqrt(w)
    Q, R = np.linalg.qr(s[:, None] * U)
    d = np.diag(R).copy()
    if np.any(np.abs(d) == 0):
        raise NumericFailureError("mode matrix is numerically rank deficient")
    ph = d / np.abs(d)
    Q = Q * ph[None, :]
    R = (1.0 / ph)[:, None] * R
    E = Q / s[:, None]
    B = R
    A = scipy.linalg.solve_triangular(R, np.eye(R.shape[0]), lower=False)
    return E, A, B


def eigendecompose(op: DiscreteOperator, cluster_tol: Optional[float] = None) -> SpectralSystem:
    """Full complex eigendecomposition with deterministic ordering.

    Semisimple default path: every eigenvector is its own chain of length one;
    clusters whose eigenvector block is badly conditioned are flagged in
    SpectralSystem.warnings.
    """
    M = op.matrix
    try:
        lam, V = scipy.linalg.eig(M)
    except Exception as exc:  # pragma: no cover - LAPACK failure is exotic
        raise NumericFailureError(f"eigendecomposition failed: {exc}") from exc
    scale = float(np.max(np.abs(lam))) if lam.size else 1.0
    tol = cluster_tol if cluster_tol is not None else 1e-8 * max(scale, 1.0)
    if not (tol > 0):
        raise InvalidArgumentError("cluster_tol must be positive")

    # deterministic total order: descending modulus, ties by ascending phase
    ang = np.mod(np.angle(lam), 2.0 * np.pi)
    order = np.lexsort((ang, -np.abs(lam)))
    lam = lam[order]
    V = V[:, order]

    # cluster consecutive eigenvalues within tol of the cluster representative
    clusters: List[List[int]] = []
    for pos in range(lam.size):
        if clusters and abs(lam[pos] - lam[clusters[-1][0]]) <= tol:
            clusters[-1].append(pos)
        else:
            clusters.append([pos])

    warnings: List[str] = []
    indices: List[ChainIndex] = []
    chains: List[Tuple[int, int, int]] = []
    for j, members in enumerate(clusters, start=1):
        if len(members) > 1:
            sub = V[:, members]
            cond = np.linalg.cond(sub.conj().T @ sub)
            if cond > 1e16:
                warnings.append(
                    f"cluster {j} (lambda~{lam[members[0]]:.3e}, size {len(members)}) "
                    "looks defective; semisimple treatment retained"
                )
        for l, _ in enumerate(members, start=1):
            indices.append(ChainIndex(j=j, l=l, k=1))
            chains.append((j, l, 1))

    # unit weighted norm + phase gauge (chains all length one, so safe)
    w = op.weights
    norms = np.sqrt(np.sum(w[:, None] * np.abs(V) ** 2, axis=0))
    U = _fix_column_phases(V / norms[None, :])
    E, A, B = _weighted_qr(U, w)
    return SpectralSystem(lambdas=lam, indices=indices, chains=chains, U=U, E=E,
                          A=A, B=B, weights=w, cluster_tol=tol, warnings=warnings)


def synthetic_jordan_system(chain_spec: Sequence[Tuple[complex, int]],
                            V: Optional[np.ndarray] = None,
                            weights: Optional[np.ndarray] = None,
                            rng: Optional[np.random.Generator] = None):
    """Exactly constructed system with prescribed Jordan chains.

    chain_spec lists (eigenvalue, chain_length) in the desired cluster order;
    equal consecutive eigenvalues share a cluster. Returns (op, sys) where the
    operator matrix is V T V^{-1} for the chain-structured T.
    """
    total = sum(n for _, n in chain_spec)
    if V is None:
        rng = rng or np.random.default_rng(0)
        V = rng.normal(size=(total, total)) + 1j * rng.normal(size=(total, total))
        V += 2.0 * total * np.eye(total)  # keep well-conditioned
    V = np.asarray(V, dtype=complex)
    w = np.ones(total) if weights is None else np.asarray(weights, dtype=float)

    lambdas = np.zeros(total, dtype=complex)
    indices: List[ChainIndex] = []
    chains: List[Tuple[int, int, int]] = []
    pos = 0
    j = 0
    prev_lam = None
    l = 0
    for lam, length in chain_spec:
        if prev_lam is None or lam != prev_lam:
            j += 1
            l = 1
        else:
            l += 1
        prev_lam = lam
        chains.append((j, l, length))
        for k in range(1, length + 1):
            lambdas[pos] = lam
            indices.append(ChainIndex(j=j, l=l, k=k))
            pos += 1

    T = np.zeros((total, total), dtype=complex)
    for pos, idx in enumerate(indices):
        T[pos, pos] = lambdas[pos]
        if idx.k > 1:
            T[pos - 1, pos] = 1.0
    M = V @ T @ np.linalg.inv(V)
    op = operator_from_matrix(M, weights=w)
    E, A, B = _weighted_qr(V, w)
    sys = SpectralSystem(lambdas=lambdas, indices=indices, chains=chains, U=V,
                         E=E, A=A, B=B, weights=w, cluster_tol=1e-12,
                         warnings=[])
    return op, sys


def verify_resonant_mode(sys: SpectralSystem, op: DiscreteOperator,
                         gamma: ChainIndex):
    """Chain residual of one mode and its dominant spatial frequency.

    Returns (residual, dominant_frequency); the frequency is None when the grid
    carries no Cartesian lattice to Fourier-analyze (synthetic systems).
    """
    pos = sys.position(gamma)
    lam = sys.lambdas[pos]
    if lam == 0:
        raise InvalidArgumentError("zero is not a point-spectrum eigenvalue")
    u = sys.U[:, pos]
    pred = sys.U[:, pos - 1] if gamma.k > 1 else 0.0
    resid = np.linalg.norm(op.matrix @ u - lam * u - pred) / np.linalg.norm(u)
    freq = dominant_spatial_frequency(op, u)
    return float(resid), freq


def dominant_spatial_frequency(op: DiscreteOperator, values: np.ndarray):
    """Peak angular frequency of a grid field via FFT on the embedding lattice."""
    grid = op.grid
    shape = grid.lattice_shape
    if not shape or min(shape) < 4:
        return None
    arr = np.zeros(shape, dtype=complex)
    arr[tuple(grid.lattice_index.T)] = values
    F = np.fft.fftn(arr)
    freqs = [2.0 * np.pi * np.fft.fftfreq(nc, d=grid.cell_size) for nc in shape]
    mesh = np.meshgrid(*freqs, indexing="ij")
    radial = np.sqrt(sum(m**2 for m in mesh))
    peak = np.unravel_index(int(np.argmax(np.abs(F))), F.shape)
    return float(radial[peak])


def build_h_matrix(sys: SpectralSystem) -> CoefficientMatrix:
    """Representation of the operator in the mode basis:
    h = lambda on the chain diagonal, 1 on the (k, k-1) chain subentry."""
    N = sys.size
    H = np.zeros((N, N), dtype=complex)
    for pos, idx in enumerate(sys.indices):
        H[pos, pos] = sys.lambdas[pos]
        if idx.k > 1:
            H[pos, pos - 1] = 1.0
    return CoefficientMatrix(entries=H, kind="H")


def resolvent_chain_coefficients(lam: complex, chain_len: int, z: complex) -> np.ndarray:
    """Coefficients c_0..c_{chain_len-1} of (z - K)^{-1} K^2 along one chain.

    c_m multiplies the chain member m places below the one acted on:
      c_0 = lam^2/(z-lam)
      c_1 = lam^2/(z-lam)^2 + 2 lam/(z-lam)
      c_m = lam^2/(z-lam)^{m+1} + 2 lam/(z-lam)^m + 1/(z-lam)^{m-1},  m >= 2.
    """
    if chain_len < 1:
        raise InvalidArgumentError("chain_len must be at least 1")
    if z == lam:
        raise ResonanceProximityError(z, lam)
    s = 1.0 / (z - lam)
    c = np.zeros(chain_len, dtype=complex)
    c[0] = lam**2 * s
    if chain_len > 1:
        c[1] = lam**2 * s**2 + 2.0 * lam * s
    for m in range(2, chain_len):
        c[m] = lam**2 * s ** (m + 1) + 2.0 * lam * s**m + s ** (m - 1)
    return c


def _check_pole(sys: SpectralSystem, z: complex):
    d = np.abs(z - sys.lambdas)
    bad = d < max(sys.cluster_tol, 1e-12) * (1.0 + np.abs(sys.lambdas))
    if np.any(bad):
        idx = int(np.argmin(d))
        raise ResonanceProximityError(z, sys.lambdas[idx])


def build_r_matrix(sys: SpectralSystem, z: complex) -> CoefficientMatrix:
    """(z - K)^{-1} K^2 in the mode basis; acts on the grid as U @ R.entries.T."""
    _check_pole(sys, z)
    N = sys.size
    R = np.zeros((N, N), dtype=complex)
    pos = 0
    for _, _, length in sys.chains:
        lam = sys.lambdas[pos]
        c = resolvent_chain_coefficients(lam, length, z)
        for k in range(length):
            for m in range(k + 1):
                R[pos + k, pos + k - m] = c[m]
        pos += length
    return CoefficientMatrix(entries=R, kind="R", z=complex(z))


def build_d_matrix(sys: SpectralSystem, z: complex) -> CoefficientMatrix:
    """Same operator expressed against the orthonormal basis E.

    Satisfies E @ D.entries.T @ (E^H W) = (z I - M)^{-1} M^2 on the grid.
    """
    R = build_r_matrix(sys, z)
    D = sys.A.T @ R.entries @ sys.B.T
    return CoefficientMatrix(entries=D, kind="D", z=complex(z))
