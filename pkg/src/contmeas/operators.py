"""Dense complex linear algebra on small Hilbert spaces.

Spectral decompositions with degenerate-cluster merging, matrix functions
restricted to the support, matrix exponentials, superoperator vectorization
and positivity repair. Everything is plain numpy arrays; dimensions are
expected small (d <= 32), so dense d^2 x d^2 superoperators are fine.

Vectorization is column-stacking throughout: vec(X)[i + d*j] = X[i, j].
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .errors import NonFinite, NonHermitian, NotPSD, ZeroTrace
from . import tolerances as tol


def herm_defect(m: np.ndarray) -> float:
    """Largest entrywise deviation of m from its own adjoint."""
    return float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0


def require_hermitian(m: np.ndarray, herm_tol: float = tol.HERM_TOL) -> np.ndarray:
    if herm_defect(m) > herm_tol:
        raise NonHermitian(f"Hermiticity defect {herm_defect(m):.3e} > {herm_tol:.3e}")
    return m


def require_density(
    m: np.ndarray,
    psd_tol: float = tol.PSD_TOL,
    trace_tol: float = tol.TRACE_TOL,
    herm_tol: float = tol.HERM_TOL,
) -> np.ndarray:
    """Check the density-matrix invariants and return m unchanged."""
    require_hermitian(m, herm_tol)
    w = np.linalg.eigvalsh(m)
    if w.min() < -psd_tol:
        raise NotPSD(f"eigenvalue {w.min():.3e} below -{psd_tol:.3e}")
    tr = float(np.trace(m).real)
    if abs(tr - 1.0) > trace_tol:
        raise ZeroTrace(f"trace {tr!r} not within {trace_tol:.1e} of 1")
    return m


def trace_norm(m: np.ndarray) -> float:
    """Trace norm (sum of singular values)."""
    return float(np.linalg.svd(m, compute_uv=False).sum())


def spectral_decompose(
    m: np.ndarray,
    herm_tol: float = tol.HERM_TOL,
    deg_tol: float = tol.DEG_TOL,
) -> list[tuple[float, np.ndarray]]:
    """Eigenvalues and projectors of a Hermitian matrix, ascending.

    Eigenvalues separated by less than deg_tol are merged into a single
    cluster with one rank-deficient projector, so callers may assume the
    returned eigenvalues are pairwise distinct. Projectors are orthogonal
    and sum to the identity.
    """
    require_hermitian(m, herm_tol)
    w, v = np.linalg.eigh((m + m.conj().T) / 2.0)
    pairs: list[tuple[float, np.ndarray]] = []
    i = 0
    d = m.shape[0]
    while i < d:
        j = i + 1
        while j < d and w[j] - w[j - 1] < deg_tol:
            j += 1
        block = v[:, i:j]
        proj = block @ block.conj().T
        pairs.append((float(np.mean(w[i:j])), (proj + proj.conj().T) / 2.0))
        i = j
    return pairs


def matrix_function_on_support(
    m: np.ndarray,
    f: Callable[[float], float],
    zero_tol: float = tol.ZERO_TOL,
    psd_tol: float = tol.PSD_TOL,
) -> np.ndarray:
    """Apply a scalar function to a PSD matrix on its support.

    Eigenvalues at or below zero_tol map to 0 rather than through f, which
    realizes the 0 ln 0 = 0 convention for entropy-like integrands.
    """
    w, v = np.linalg.eigh((m + m.conj().T) / 2.0)
    if w.min() < -psd_tol:
        raise NotPSD(f"eigenvalue {w.min():.3e} below -{psd_tol:.3e}")
    fw = np.array([f(x) if x > zero_tol else 0.0 for x in w])
    out = (v * fw) @ v.conj().T
    return (out + out.conj().T) / 2.0


def expm_scaled(a: np.ndarray) -> np.ndarray:
    """Matrix exponential by scaling and squaring with Pade approximants."""
    if not np.all(np.isfinite(a)):
        raise NonFinite("expm input contains NaN or Inf")
    return scipy.linalg.expm(np.asarray(a, dtype=complex))


def vectorize_superoperator(
    action: Callable[[np.ndarray], np.ndarray], dim: int
) -> np.ndarray:
    """Matrix of a linear map on operators, in the column-stacking basis.

    The returned s satisfies s @ vec(X) = vec(action(X)) for every d x d X,
    with vec(X) = X.flatten(order='F').
    """
    s = np.zeros((dim * dim, dim * dim), dtype=complex)
    unit = np.zeros((dim, dim), dtype=complex)
    for j in range(dim):
        for i in range(dim):
            unit[i, j] = 1.0
            s[:, i + dim * j] = action(unit).flatten(order="F")
            unit[i, j] = 0.0
    return s


def vec(x: np.ndarray) -> np.ndarray:
    return x.flatten(order="F")


def unvec(v: np.ndarray, dim: int) -> np.ndarray:
    return v.reshape((dim, dim), order="F")


def project_to_density(
    m: np.ndarray, clip_tol: float = tol.CLIP_TOL
) -> tuple[np.ndarray, bool]:
    """Repair a near-density matrix: hermitize, clip negatives, renormalize.

    Returns (rho, severe). severe is True when the most negative eigenvalue
    was below -clip_tol * trace, which callers count as an integration
    warning; clips within that band are ordinary roundoff.
    """
    h = (m + m.conj().T) / 2.0
    tr = float(np.trace(h).real)
    if tr <= 0.0:
        raise ZeroTrace(f"trace {tr!r} <= 0")
    w, v = np.linalg.eigh(h)
    severe = bool(w.min() < -clip_tol * tr)
    w = np.clip(w, 0.0, None)
    s = w.sum()
    if s <= 0.0:
        raise ZeroTrace("no positive eigenvalues left after clipping")
    out = (v * (w / s)) @ v.conj().T
    return (out + out.conj().T) / 2.0, severe


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return (a + a.conj().T) / 2.0


def random_density(dim: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def pauli(which: str) -> np.ndarray:
    """Pauli matrices in the basis (|0> excited, |1> ground)."""
    mats = {
        "x": np.array([[0, 1], [1, 0]], dtype=complex),
        "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
        "z": np.array([[1, 0], [0, -1]], dtype=complex),
        "minus": np.array([[0, 0], [1, 0]], dtype=complex),
        "plus": np.array([[0, 1], [0, 0]], dtype=complex),
    }
    return mats[which].copy()


def matrices_from_sequence(ms: Sequence[np.ndarray]) -> np.ndarray:
    """Stack a sequence of equally shaped matrices into one (n, d, d) array."""
    if len(ms) == 0:
        return np.zeros((0, 0, 0), dtype=complex)
    return np.stack([np.asarray(m, dtype=complex) for m in ms])
