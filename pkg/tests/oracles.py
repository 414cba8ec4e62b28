"""Independent numerical oracles for cross-checking the package.

Everything here recomputes results through a different route than the code
under test: RK4 instead of vectorized expm, plain Taylor series instead of
scipy's Pade expm, and a tilted-generator FFT inversion for jump counting
statistics instead of trajectory sampling.
"""

import numpy as np
import scipy.linalg
import scipy.stats

from contmeas.model import MeasurementModel, generator_k, jump_map, liouvillian


def rk4_generator_flow(
    model: MeasurementModel, k: float, tau0: np.ndarray, t: float, steps: int = 10000
) -> np.ndarray:
    """Integrate dtau/dt = K(k)[tau] with classic RK4, acting on matrices
    directly (no vectorization, no expm)."""
    h = t / steps
    tau = np.asarray(tau0, dtype=complex).copy()
    for _ in range(steps):
        k1 = generator_k(model, k, tau)
        k2 = generator_k(model, k, tau + 0.5 * h * k1)
        k3 = generator_k(model, k, tau + 0.5 * h * k2)
        k4 = generator_k(model, k, tau + h * k3)
        tau = tau + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return tau


def taylor_expm(a: np.ndarray) -> np.ndarray:
    """Matrix exponential by scaled Taylor summation."""
    a = np.asarray(a, dtype=complex)
    norm = np.linalg.norm(a, ord=np.inf)
    squarings = max(0, int(np.ceil(np.log2(max(norm, 1e-300)))) + 1)
    small = a / (2.0**squarings)
    result = np.eye(a.shape[0], dtype=complex)
    term = np.eye(a.shape[0], dtype=complex)
    for n in range(1, 60):
        term = term @ small / n
        result = result + term
        if np.linalg.norm(term, ord=np.inf) < 1e-18:
            break
    for _ in range(squarings):
        result = result @ result
    return result


def _superoperator_matrix(apply, dim: int) -> np.ndarray:
    """Column-by-column matrix of a superoperator in the column-stacking basis."""
    mat = np.zeros((dim * dim, dim * dim), dtype=complex)
    for j in range(dim):
        for i in range(dim):
            basis = np.zeros((dim, dim), dtype=complex)
            basis[i, j] = 1.0
            mat[:, j * dim + i] = apply(basis).reshape(-1, order="F")
    return mat


def tilted_counting_probs(
    model: MeasurementModel, rho0: np.ndarray, t: float, n_max: int
) -> np.ndarray:
    """Distribution of the total jump count N_t under the physical law.

    The generating function E[s^N] = Tr exp(t (L + (s-1) J))[rho0] with J the
    weighted sum of the jump maps; inverting it on the unit circle with an FFT
    gives P(N = n).  Taking M >= 2 n_max keeps aliasing below machine noise
    for distributions that decay by n_max.
    """
    dim = model.dim
    l_mat = _superoperator_matrix(lambda x: liouvillian(model, x), dim)
    j_mat = _superoperator_matrix(
        lambda x: sum(
            model.mu[z] * jump_map(model, z, x) for z in model.z_values
        ),
        dim,
    )
    m = max(64, 2 * n_max)
    v0 = np.asarray(rho0, dtype=complex).reshape(-1, order="F")
    values = np.empty(m, dtype=complex)
    for j in range(m):
        s = np.exp(2j * np.pi * j / m)
        moved = scipy.linalg.expm(t * (l_mat + (s - 1.0) * j_mat)) @ v0
        values[j] = np.trace(moved.reshape(dim, dim, order="F"))
    probs = np.fft.fft(values).real / m
    return np.clip(probs[: n_max + 1], 0.0, None)


def chi_square_pvalue(observed: np.ndarray, probs: np.ndarray) -> float:
    """Pearson chi-square p-value with low-expectation cells merged into a tail.

    `observed[n]` counts trajectories with N = n; the last cell of both arrays
    absorbs everything beyond.
    """
    observed = np.asarray(observed, dtype=float)
    n_total = observed.sum()
    expected = np.asarray(probs, dtype=float) * n_total
    # fold the tail forward until every kept cell expects at least 5 counts
    keep = len(expected)
    while keep > 2 and expected[keep - 1] < 5.0:
        keep -= 1
    obs = np.concatenate([observed[: keep - 1], [observed[keep - 1 :].sum()]])
    exp = np.concatenate([expected[: keep - 1], [expected[keep - 1 :].sum()]])
    exp = exp * (obs.sum() / exp.sum())
    return float(scipy.stats.chisquare(obs, exp).pvalue)
