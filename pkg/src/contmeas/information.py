"""Entropy and information functionals over states and trajectory ensembles.

Deterministic pieces: von Neumann and relative entropy, the three a
posteriori entropy-rate terms (the diffusive one both as a spectral sum and
as an adaptive u-quadrature oracle), purity-rate terms, and orthogonal pure
decompositions of an initial state.

Monte Carlo pieces: classical relative entropies of the output laws from
trajectory log-weights, the a posteriori purity, the amount of information,
and the mutual-entropy report that assembles the seven compound/product
relative entropies at one time point from per-component ensembles.

Conventions: x ln x is 0 at x = 0 everywhere; relative entropy returns
+inf as a value (never an error) when supports do not nest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.integrate

from . import tolerances as tol
from .errors import EmptySample, NotPSD, QuadratureFailure
from .model import (
    MeasurementModel,
    jump_map,
    mean_drift,
    normalized_jump,
)
from .operators import (
    expm_scaled,
    matrix_function_on_support,
    spectral_decompose,
)
from .semigroup import propagate_master, vectorized_liouvillian
from .stats import combine_se, estimate_with_se
from .trajectories import (
    MODE_COUPLED,
    MODE_P,
    RawEnsemble,
    TimeGrid,
    derive_seed,
    run_ensemble,
)


def _xlogx(x: float) -> float:
    return x * math.log(x) if x > 0.0 else 0.0


def von_neumann_entropy(tau: np.ndarray, psd_tol: float = tol.PSD_TOL) -> float:
    """-Tr{tau ln tau} over the support."""
    w = np.linalg.eigvalsh(np.asarray(tau, dtype=complex))
    if w.min() < -psd_tol:
        raise NotPSD(f"eigenvalue {w.min():.3e} below -{psd_tol:.3e}")
    return float(-sum(_xlogx(x) for x in w if x > 0.0))


def von_neumann_entropy_batch(states: np.ndarray) -> np.ndarray:
    """Entropies of a stack (n, d, d); roundoff negatives are clipped."""
    w = np.linalg.eigvalsh(states)
    if float(w.min()) < -tol.PSD_TOL:
        raise NotPSD(f"sample eigenvalue {w.min():.3e} below tolerance")
    w = np.clip(w, 0.0, None)
    out = np.where(w > 0.0, -w * np.log(np.where(w > 0.0, w, 1.0)), 0.0)
    return out.sum(axis=1)


def quantum_relative_entropy(
    x: np.ndarray, y: np.ndarray, supp_tol: float = tol.SUPP_TOL
) -> float:
    """Tr{x ln x - x ln y}; +inf when the support of x leaks outside the
    support of y."""
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    wx, vx = np.linalg.eigh(x)
    wy, vy = np.linalg.eigh(y)
    if wx.min() < -tol.PSD_TOL or wy.min() < -tol.PSD_TOL:
        raise NotPSD("relative entropy needs positive semidefinite inputs")
    kernel = vy[:, wy <= supp_tol]
    if kernel.shape[1]:
        for lam, col in zip(wx, vx.T):
            if lam > supp_tol:
                overlap = float(np.sum(np.abs(kernel.conj().T @ col) ** 2))
                if overlap > supp_tol:
                    return math.inf
    term_x = sum(_xlogx(max(l, 0.0)) for l in wx)
    term_y = 0.0
    for lam, col in zip(wy, vy.T):
        if lam > supp_tol:
            term_y += math.log(lam) * float((col.conj() @ x @ col).real)
    return max(float(term_x - term_y), 0.0)


def relative_entropy_batch(
    states: np.ndarray, y: np.ndarray, supp_tol: float = tol.SUPP_TOL
) -> np.ndarray:
    """S_q(rho_i | y) for a stack of states against one fixed reference."""
    y = np.asarray(y, dtype=complex)
    wy, vy = np.linalg.eigh(y)
    kernel = vy[:, wy <= supp_tol]
    ln_y = np.zeros_like(y)
    for lam, col in zip(wy, vy.T):
        if lam > supp_tol:
            ln_y += math.log(lam) * np.outer(col, col.conj())
    out = -von_neumann_entropy_batch(states)
    out -= np.einsum("bij,ji->b", states, ln_y).real
    out = np.clip(out, 0.0, None)
    if kernel.shape[1]:
        leak = np.einsum(
            "ik,bij,jl->bkl", kernel.conj(), states, kernel
        )
        leak_tr = np.einsum("bkk->b", leak).real
        out = np.where(leak_tr > supp_tol, np.inf, out)
    return out


def _mean_se(samples: np.ndarray) -> tuple[float, float]:
    samples = np.asarray(samples, dtype=float)
    if samples.shape[0] == 0:
        raise EmptySample("no samples")
    if samples.shape[0] == 1:
        return float(samples[0]), 0.0
    return estimate_with_se(samples)


def a_posteriori_purity(states) -> tuple[float, float]:
    """Mean and SE of the linear entropy Tr{rho} - Tr{rho^2}."""
    states = np.asarray(states, dtype=complex)
    if states.ndim == 2:
        states = states[None]
    if states.shape[0] == 0:
        raise EmptySample("no states")
    tr = np.einsum("bii->b", states).real
    tr2 = np.einsum("bij,bji->b", states, states).real
    return _mean_se(tr - tr2)


@dataclass(frozen=True)
class PurityRates:
    p1dot: tuple[float, float]
    p2dot: tuple[float, float]
    p3dot: tuple[float, float]

    @property
    def total(self) -> float:
        return self.p1dot[0] - self.p2dot[0] - self.p3dot[0]

    @property
    def total_se(self) -> float:
        return combine_se(self.p1dot[1], self.p2dot[1], self.p3dot[1])


def _sqrtm_psd(tau: np.ndarray) -> np.ndarray:
    return matrix_function_on_support(tau, math.sqrt)


def purity_jump_term_forms(
    model: MeasurementModel, tau: np.ndarray
) -> tuple[float, float]:
    """The jump contribution to the purity rate, in both displayed forms.

    The first form uses the normalized post-jump state directly; the second
    is an equivalent rearrangement whose three pieces expose the sign
    structure. They agree to roundoff and cross-validate each other.
    """
    tau = np.asarray(tau, dtype=complex)
    root = _sqrtm_psd(tau)
    first = 0.0
    second = 0.0
    for z in model.z_values:
        mu = model.mu[z]
        eff = model.jump_effects[z]
        intensity = float(np.trace(eff @ tau).real)
        jtau = jump_map(model, z, tau)
        if intensity <= tol.JUMP_TOL:
            continue
        jhat = jtau / intensity
        first += mu * float(
            np.trace(
                intensity * (jhat @ jhat)
                - 2.0 * jump_map(model, z, tau @ tau)
                + intensity * (tau @ tau)
            ).real
        )
        mid = root @ eff @ root
        diff = mid - intensity * tau
        second += (mu / intensity) * float(
            np.trace(diff @ diff + jtau @ jtau - mid @ mid).real
        )
    return first, second


def purity_rates(model: MeasurementModel, states) -> PurityRates:
    """Sample means of the three purity-rate terms (second jump form)."""
    states = np.asarray(states, dtype=complex)
    if states.ndim == 2:
        states = states[None]
    n = states.shape[0]
    if n == 0:
        raise EmptySample("no states")
    p1 = np.zeros(n)
    p2 = np.zeros(n)
    p3 = np.zeros(n)
    r_plus = model.R + model.R.conj().T
    for i in range(n):
        rho = states[i]
        root = _sqrtm_psd(rho)
        for L in model.Ls:
            ld = L.conj().T
            p1[i] += 2.0 * float(
                np.trace(rho @ ld @ L @ rho - root @ ld @ rho @ L @ root).real
            )
        a = r_plus - mean_drift(model, rho) * np.eye(model.dim)
        p2[i] = float(np.trace(root @ a @ rho @ a @ root).real)
        _, p3[i] = purity_jump_term_forms(model, rho)
    return PurityRates(
        p1dot=_mean_se(p1), p2dot=_mean_se(p2), p3dot=_mean_se(p3)
    )


@dataclass(frozen=True)
class EntropyRateTerms:
    lindblad: float  # D1, may be +inf
    diffusive: float  # D2, spectral form
    diffusive_quadrature: float  # D2, u-integral oracle
    jump: float  # D3

    @property
    def total(self) -> float:
        return self.lindblad - self.diffusive - self.jump


def _d1(model: MeasurementModel, tau: np.ndarray) -> float:
    if not model.Ls:
        return 0.0
    w, v = np.linalg.eigh(tau)
    kernel = v[:, w <= tol.ZERO_TOL]
    if kernel.shape[1]:
        leak = 0.0
        for L in model.Ls:
            lk = kernel.conj().T @ L @ tau @ L.conj().T @ kernel
            leak += float(np.trace(lk).real)
        if leak > tol.SUPP_TOL:
            return math.inf
    ln_tau = matrix_function_on_support(tau, math.log)
    total = 0.0
    for L in model.Ls:
        ld = L.conj().T
        total += float(np.trace((ld @ L @ tau - L @ tau @ ld) @ ln_tau).real)
    return total


def _d2_spectral(model: MeasurementModel, tau: np.ndarray) -> float:
    r_plus = model.R + model.R.conj().T
    a = r_plus - mean_drift(model, tau) * np.eye(model.dim)
    decomp = [(lam, p) for lam, p in spectral_decompose(tau) if lam > tol.ZERO_TOL]
    total = 0.0
    for lam, p in decomp:
        pap = p @ a @ p
        total += 0.5 * lam * float(np.trace(pap @ pap).real)
    for lam_k, p_k in decomp:
        for lam_r, p_r in decomp:
            if lam_k == lam_r:
                continue
            coupling = float(np.trace(p_k @ r_plus @ p_r @ r_plus @ p_k).real)
            factor = lam_k * lam_r / (lam_k - lam_r) * math.log(lam_k / lam_r)
            total += 0.5 * coupling * factor
    return total


def _d2_quadrature(model: MeasurementModel, tau: np.ndarray) -> float:
    """Adaptive quadrature of the u-integral form of the diffusive term."""
    d = model.dim
    eye = np.eye(d)
    r = model.R
    r_dag = r.conj().T
    a = (r + r_dag) - mean_drift(model, tau) * eye
    c = tau @ r - r @ tau
    rank = max(1, int(np.sum(np.linalg.eigvalsh(tau) > tol.ZERO_TOL)))
    scale = float(np.trace(tau).real) / rank

    def integrand(theta: float) -> float:
        u = scale * math.tan(theta)
        if u <= 0.0:
            return 0.0
        base = u * eye + tau
        f = np.linalg.solve(base, tau)  # tau/(u+tau)
        g = np.linalg.solve(base, f)  # tau/(u+tau)^2
        t1 = u * np.trace(g @ a @ f @ a)
        t2 = np.trace(g @ c @ f @ r_dag)
        t3 = -np.trace((f @ r - r @ f) @ f @ r_dag)
        jac = scale / math.cos(theta) ** 2
        return float((t1 + t2 + t3).real) * jac

    value, abserr = scipy.integrate.quad(
        integrand, 0.0, math.pi / 2.0, epsabs=1e-11, epsrel=1e-11, limit=500
    )
    if not math.isfinite(value) or abserr > 1e-8:
        raise QuadratureFailure(
            f"u-integral error estimate {abserr:.2e} exceeds 1e-8"
        )
    return value


def _d3(model: MeasurementModel, tau: np.ndarray) -> float:
    if not model.channels:
        return 0.0
    tau_ln_tau = matrix_function_on_support(tau, _xlogx)
    total = 0.0
    for z in model.z_values:
        mu = model.mu[z]
        jtau = jump_map(model, z, tau)
        weight = float(np.trace(jtau).real)
        if weight <= tol.JUMP_TOL:
            continue
        moved = float(np.trace(jump_map(model, z, tau_ln_tau)).real)
        total += mu * (-moved - weight * von_neumann_entropy(jtau / weight))
    return total


def entropy_rate_terms(model: MeasurementModel, tau: np.ndarray) -> EntropyRateTerms:
    """The three terms of the a posteriori entropy rate at one state."""
    tau = np.asarray(tau, dtype=complex)
    w = np.linalg.eigvalsh(tau)
    if w.min() < -tol.PSD_TOL:
        raise NotPSD(f"eigenvalue {w.min():.3e} below tolerance")
    return EntropyRateTerms(
        lindblad=_d1(model, tau),
        diffusive=_d2_spectral(model, tau),
        diffusive_quadrature=_d2_quadrature(model, tau),
        jump=_d3(model, tau),
    )


def entropy_rate_mean(
    model: MeasurementModel, states
) -> tuple[float, float]:
    """Sample mean and SE of D1 - D2 - D3 over a stack of states (spectral
    diffusive form; the quadrature oracle is not run per sample)."""
    states = np.asarray(states, dtype=complex)
    if states.shape[0] == 0:
        raise EmptySample("no states")
    vals = np.empty(states.shape[0])
    for i in range(states.shape[0]):
        rho = states[i]
        vals[i] = _d1(model, rho) - _d2_spectral(model, rho) - _d3(model, rho)
    return _mean_se(vals)


def _snapshot_index(ensemble: RawEnsemble, t: float) -> int:
    for i, ts in enumerate(ensemble.times):
        if math.isclose(ts, t, rel_tol=1e-9, abs_tol=1e-12):
            return i
    raise EmptySample(f"time {t!r} is not among the ensemble snapshots")


def classical_rel_entropy_q(
    ensemble: RawEnsemble, t: float
) -> tuple[float, float]:
    """I_t(P|Q) estimated as the physical-mode mean of ln tr sigma."""
    if ensemble.mode not in (MODE_P, MODE_COUPLED):
        raise EmptySample("physical-mode ensemble required")
    return _mean_se(ensemble.log_weight[:, _snapshot_index(ensemble, t)])


def classical_rel_entropy_rate_q(
    model: MeasurementModel, states
) -> tuple[float, float]:
    """Rate of I_t(P|Q): E[m^2/2 + sum_z (1 - I_z + I_z ln I_z) mu_z]."""
    states = np.asarray(states, dtype=complex)
    if states.ndim == 2:
        states = states[None]
    if states.shape[0] == 0:
        raise EmptySample("no states")
    vals = 0.5 * np.einsum(
        "ij,bji->b", model.R + model.R.conj().T, states
    ).real ** 2
    for z in model.z_values:
        intensity = np.einsum(
            "ij,bji->b", model.jump_effects[z], states
        ).real
        intensity = np.clip(intensity, 0.0, None)
        entropic = np.where(
            intensity > 0.0,
            intensity * np.log(np.where(intensity > 0.0, intensity, 1.0)),
            0.0,
        )
        vals = vals + model.mu[z] * (1.0 - intensity + entropic)
    return _mean_se(vals)


def classical_rel_entropy_pair(
    ensemble: RawEnsemble, t: float
) -> tuple[float, float]:
    """I_t(P_alpha|P) from a coupled ensemble: mean of ln(w_alpha / w)."""
    if ensemble.mode != MODE_COUPLED or ensemble.log_weight_den is None:
        raise EmptySample("coupled ensemble required")
    i = _snapshot_index(ensemble, t)
    return _mean_se(ensemble.log_weight[:, i] - ensemble.log_weight_den[:, i])


def classical_rel_entropy_pair_rate(
    model: MeasurementModel, states_num, states_den
) -> tuple[float, float]:
    """Rate of I_t(P_alpha|P) from paired state samples."""
    states_num = np.asarray(states_num, dtype=complex)
    states_den = np.asarray(states_den, dtype=complex)
    if states_num.shape != states_den.shape:
        raise EmptySample("paired samples must have matching shapes")
    if states_num.ndim == 2:
        states_num = states_num[None]
        states_den = states_den[None]
    if states_num.shape[0] == 0:
        raise EmptySample("no states")
    r_plus = model.R + model.R.conj().T
    m_num = np.einsum("ij,bji->b", r_plus, states_num).real
    m_den = np.einsum("ij,bji->b", r_plus, states_den).real
    vals = 0.5 * (m_num - m_den) ** 2
    for z in model.z_values:
        eff = model.jump_effects[z]
        i_num = np.clip(np.einsum("ij,bji->b", eff, states_num).real, 0.0, None)
        i_den = np.clip(np.einsum("ij,bji->b", eff, states_den).real, 0.0, None)
        ratio = np.where(i_den > tol.JUMP_TOL, i_num / np.maximum(i_den, 1e-300), 0.0)
        inner = np.where(
            ratio > 0.0,
            1.0 - ratio + ratio * np.log(np.where(ratio > 0.0, ratio, 1.0)),
            1.0,
        )
        term = i_den * inner
        term = np.where(
            (i_den <= tol.JUMP_TOL) & (i_num > tol.JUMP_TOL), np.inf, term
        )
        term = np.where(
            (i_den <= tol.JUMP_TOL) & (i_num <= tol.JUMP_TOL), 0.0, term
        )
        vals = vals + model.mu[z] * term
    return _mean_se(vals)


@dataclass(frozen=True)
class ShattenDecomposition:
    weights: tuple[float, ...]
    states: np.ndarray  # (m, d, d) orthogonal rank-one projectors
    degeneracy_flag: bool


def shatten_decompose(rho: np.ndarray) -> ShattenDecomposition:
    """Orthogonal pure decomposition, descending weight, phase-fixed."""
    rho = np.asarray(rho, dtype=complex)
    w, v = np.linalg.eigh(rho)
    if w.min() < -tol.PSD_TOL:
        raise NotPSD(f"eigenvalue {w.min():.3e} below tolerance")
    order = np.argsort(-w, kind="stable")
    weights = []
    states = []
    kept = []
    for idx in order:
        if w[idx] <= tol.ZERO_TOL:
            continue
        col = v[:, idx].copy()
        nz = np.nonzero(np.abs(col) > tol.ZERO_TOL)[0][0]
        col *= np.conj(col[nz] / abs(col[nz]))
        weights.append(float(w[idx]))
        states.append(np.outer(col, col.conj()))
        kept.append(float(w[idx]))
    degenerate = any(
        abs(a - b) < tol.DEG_TOL for a, b in zip(kept, kept[1:])
    )
    return ShattenDecomposition(
        weights=tuple(weights),
        states=np.stack(states),
        degeneracy_flag=degenerate,
    )


def amount_of_information(rho: np.ndarray, states) -> tuple[float, float]:
    """I_t = S_q(initial) - E[S_q(a posteriori)]."""
    states = np.asarray(states, dtype=complex)
    if states.ndim == 2:
        states = states[None]
    if states.shape[0] == 0:
        raise EmptySample("no states")
    base = von_neumann_entropy(np.asarray(rho, dtype=complex))
    mean, se = _mean_se(von_neumann_entropy_batch(states))
    return base - mean, se


@dataclass(frozen=True)
class McConfig:
    n_traj: int
    dt: float
    master_seed: int
    workers: int | None = None


@dataclass(frozen=True)
class MutualEntropyReport:
    """The compound/product relative entropies at one time, as (value, SE)."""

    t: float
    s_q_initial: float
    s_q_eta: float
    s_pi_1: tuple[float, float]
    s_pi_1_direct: tuple[float, float]
    s_pi_2: tuple[float, float]
    s_pi_2_alt: tuple[float, float]
    s_pi_3: float
    s_sigma_pi_1: tuple[float, float]
    s_sigma_pi_2: tuple[float, float]
    s_sigma_pi_3: tuple[float, float]
    s_sigma_pi: tuple[float, float]
    s_sigma_pi_recheck: tuple[float, float]
    amount_of_information: tuple[float, float]
    i_p_q: tuple[float, float]
    chain_residuals: tuple[tuple[float, float], ...]
    bounds_ok: bool
    n_traj: int
    dt: float
    master_seed: int


def _report_t0(
    rho: np.ndarray, decomposition: ShattenDecomposition, mc: McConfig
) -> MutualEntropyReport:
    s_rho = von_neumann_entropy(rho)
    s_pi_3 = sum(
        w * quantum_relative_entropy(p, rho)
        for w, p in zip(decomposition.weights, decomposition.states)
    )
    zero = (0.0, 0.0)
    return MutualEntropyReport(
        t=0.0,
        s_q_initial=s_rho,
        s_q_eta=s_rho,
        s_pi_1=zero,
        s_pi_1_direct=zero,
        s_pi_2=zero,
        s_pi_2_alt=zero,
        s_pi_3=float(s_pi_3),
        s_sigma_pi_1=(s_rho, 0.0),
        s_sigma_pi_2=(s_rho, 0.0),
        s_sigma_pi_3=zero,
        s_sigma_pi=(s_rho, 0.0),
        s_sigma_pi_recheck=(s_rho, 0.0),
        amount_of_information=zero,
        i_p_q=zero,
        chain_residuals=(zero, zero, zero),
        bounds_ok=True,
        n_traj=mc.n_traj,
        dt=mc.dt,
        master_seed=mc.master_seed,
    )


def mutual_entropy_report(
    model: MeasurementModel,
    rho: np.ndarray,
    decomposition: ShattenDecomposition | None,
    t: float,
    mc: McConfig,
) -> MutualEntropyReport:
    """Assemble the mutual-entropy identities at time t.

    One physical ensemble is run from the initial state and one coupled
    ensemble per decomposition component; the headline values use the
    entropy-difference forms, the chain-rule residuals are computed from the
    independent direct-estimator forms so they carry real statistical
    content, and the final value is re-estimated once more with a derived
    seed as a cross-check.
    """
    rho = np.asarray(rho, dtype=complex)
    if decomposition is None:
        decomposition = shatten_decompose(rho)
    recon = sum(
        w * p for w, p in zip(decomposition.weights, decomposition.states)
    )
    if float(np.max(np.abs(recon - rho))) > 1e-10:
        raise NotPSD("decomposition does not reconstruct the initial state")
    if t == 0.0:
        return _report_t0(rho, decomposition, mc)

    grid = TimeGrid(t_max=t, dt=mc.dt)
    snaps = (0, grid.n_steps)
    s_rho = von_neumann_entropy(rho)
    eta = propagate_master(model, rho, [t]).states[-1]
    s_eta = von_neumann_entropy(eta)
    etas_alpha = [
        propagate_master(model, p, [t]).states[-1] for p in decomposition.states
    ]
    s_eta_alpha = [von_neumann_entropy(e) for e in etas_alpha]
    weights = decomposition.weights

    main = run_ensemble(
        model, rho, grid, mc.n_traj, derive_seed(mc.master_seed, "p-main"),
        mode=MODE_P, snapshot_steps=snaps, workers=mc.workers,
    )
    rho_samples = main.states[:, -1]
    s_rho_t = _mean_se(von_neumann_entropy_batch(rho_samples))
    i_p_q = _mean_se(main.log_weight[:, -1])
    s_pi_1_direct = _mean_se(relative_entropy_batch(rho_samples, eta))
    s_pi_1 = (s_eta - s_rho_t[0], s_rho_t[1])

    per_alpha = []
    for idx, p in enumerate(decomposition.states):
        ens = run_ensemble(
            model, p, grid, mc.n_traj,
            derive_seed(mc.master_seed, f"alpha-{idx}"),
            mode=MODE_COUPLED, snapshot_steps=snaps, rho_den=rho,
            workers=mc.workers,
        )
        states_a = ens.states[:, -1]
        states_den = ens.states_den[:, -1]
        per_alpha.append(
            {
                "pair": _mean_se(
                    ens.log_weight[:, -1] - ens.log_weight_den[:, -1]
                ),
                "i_alpha_q": _mean_se(ens.log_weight[:, -1]),
                "entropy": _mean_se(von_neumann_entropy_batch(states_a)),
                "rel_to_den": _mean_se(
                    np.array(
                        [
                            quantum_relative_entropy(states_a[i], states_den[i])
                            for i in range(states_a.shape[0])
                        ]
                    )
                ),
                "rel_to_eta": _mean_se(relative_entropy_batch(states_a, eta)),
                "rel_to_eta_alpha": _mean_se(
                    relative_entropy_batch(states_a, etas_alpha[idx])
                ),
            }
        )

    def wsum(key: str) -> tuple[float, float]:
        val = sum(w * d[key][0] for w, d in zip(weights, per_alpha))
        se = combine_se(*(w * d[key][1] for w, d in zip(weights, per_alpha)))
        return float(val), se

    s_pi_2 = wsum("pair")
    i_alpha_q = wsum("i_alpha_q")
    s_pi_2_alt = (i_alpha_q[0] - i_p_q[0], combine_se(i_alpha_q[1], i_p_q[1]))
    s_pi_3 = float(
        sum(
            w * quantum_relative_entropy(ea, eta)
            for w, ea in zip(weights, etas_alpha)
        )
    )
    mean_alpha_entropy = wsum("entropy")

    s_sigma_pi_1 = (
        s_pi_2[0] + s_rho_t[0] - mean_alpha_entropy[0],
        combine_se(s_pi_2[1], s_rho_t[1], mean_alpha_entropy[1]),
    )
    s_sigma_pi_2 = (
        s_eta - mean_alpha_entropy[0],
        mean_alpha_entropy[1],
    )
    s_sigma_pi_3 = (
        s_pi_2[0]
        + sum(w * se_a for w, se_a in zip(weights, s_eta_alpha))
        - mean_alpha_entropy[0],
        combine_se(s_pi_2[1], mean_alpha_entropy[1]),
    )
    s_sigma_pi = (
        s_pi_2[0] + s_eta - mean_alpha_entropy[0],
        combine_se(s_pi_2[1], mean_alpha_entropy[1]),
    )

    # residuals of the chain rule against the direct-estimator forms
    direct_1 = wsum("rel_to_den")
    direct_2 = wsum("rel_to_eta")
    direct_3 = wsum("rel_to_eta_alpha")
    res_1 = (
        s_sigma_pi[0] - (s_pi_2[0] + direct_1[0]) - s_pi_1_direct[0],
        combine_se(s_sigma_pi[1], s_pi_2[1], direct_1[1], s_pi_1_direct[1]),
    )
    res_2 = (
        s_sigma_pi[0] - direct_2[0] - s_pi_2[0],
        combine_se(s_sigma_pi[1], direct_2[1], s_pi_2[1]),
    )
    res_3 = (
        s_sigma_pi[0] - (s_pi_2[0] + direct_3[0]) - s_pi_3,
        combine_se(s_sigma_pi[1], s_pi_2[1], direct_3[1]),
    )

    # independent-seed re-estimate of the headline value
    re_pair = []
    re_entropy = []
    n_re = max(2, mc.n_traj // 2)
    for idx, p in enumerate(decomposition.states):
        ens = run_ensemble(
            model, p, grid, n_re,
            derive_seed(mc.master_seed, f"recheck-{idx}"),
            mode=MODE_COUPLED, snapshot_steps=snaps, rho_den=rho,
            workers=mc.workers,
        )
        re_pair.append(
            _mean_se(ens.log_weight[:, -1] - ens.log_weight_den[:, -1])
        )
        re_entropy.append(_mean_se(von_neumann_entropy_batch(ens.states[:, -1])))
    re_pi2 = sum(w * v[0] for w, v in zip(weights, re_pair))
    re_ent = sum(w * v[0] for w, v in zip(weights, re_entropy))
    re_se = combine_se(
        *(w * v[1] for w, v in zip(weights, re_pair)),
        *(w * v[1] for w, v in zip(weights, re_entropy)),
    )
    recheck = (float(re_pi2 + s_eta - re_ent), re_se)

    amount = (s_rho - s_rho_t[0], s_rho_t[1])
    bounds_ok = (
        s_pi_2[0] >= -3.0 * s_pi_2[1]
        and s_pi_2[0] <= s_rho + 3.0 * s_pi_2[1]
        and s_pi_3 <= min(s_rho, s_eta) + 1e-9
    )

    return MutualEntropyReport(
        t=float(t),
        s_q_initial=s_rho,
        s_q_eta=s_eta,
        s_pi_1=s_pi_1,
        s_pi_1_direct=s_pi_1_direct,
        s_pi_2=s_pi_2,
        s_pi_2_alt=s_pi_2_alt,
        s_pi_3=s_pi_3,
        s_sigma_pi_1=s_sigma_pi_1,
        s_sigma_pi_2=s_sigma_pi_2,
        s_sigma_pi_3=s_sigma_pi_3,
        s_sigma_pi=s_sigma_pi,
        s_sigma_pi_recheck=recheck,
        amount_of_information=amount,
        i_p_q=i_p_q,
        chain_residuals=(res_1, res_2, res_3),
        bounds_ok=bool(bounds_ok),
        n_traj=mc.n_traj,
        dt=mc.dt,
        master_seed=mc.master_seed,
    )


@dataclass(frozen=True)
class GainLossSplit:
    gain: tuple[float, float]
    loss: tuple[float, float]


def information_gain_loss(
    model: MeasurementModel,
    states_t: np.ndarray,
    states_t_plus: np.ndarray,
    eta_t: np.ndarray,
    delta_t: float,
) -> GainLossSplit:
    """Split the increment of the a posteriori relative entropy into the
    demixture gain (>= 0 per sample) and the channel-contraction loss
    (<= 0 in expectation), using the master propagation over delta_t."""
    d = model.dim
    prop = expm_scaled(vectorized_liouvillian(model) * delta_t)
    vecs = np.transpose(states_t, (0, 2, 1)).reshape(-1, d * d)
    moved = (vecs @ prop.T).reshape(-1, d, d).transpose(0, 2, 1)
    moved = (moved + np.conj(np.transpose(moved, (0, 2, 1)))) / 2.0
    eta_plus = propagate_master(model, eta_t, [delta_t]).states[-1]
    n = states_t.shape[0]
    gain = np.array(
        [
            quantum_relative_entropy(states_t_plus[i], moved[i])
            for i in range(n)
        ]
    )
    loss = relative_entropy_batch(moved, eta_plus) - relative_entropy_batch(
        states_t, eta_t
    )
    return GainLossSplit(gain=_mean_se(gain), loss=_mean_se(loss))
