"""Deterministic layer: master-equation propagation, characteristic
functionals for piecewise-constant test functions, equilibrium states.

Everything here works on the vectorized generator (a d^2 x d^2 matrix), so
propagation is a matrix exponential, exact in time for piecewise-constant
inputs. Test functions are restricted to piecewise-constant pieces; those
generate all finite-dimensional distributions of the output process, and
general time dependence would need an ODE integrator instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tolerances as tol
from .errors import BadShape
from .model import MeasurementModel, generator_k, liouvillian
from .operators import expm_scaled, trace_norm, unvec, vec, vectorize_superoperator


@dataclass(frozen=True)
class TestFunction:
    """Piecewise-constant signal-frequency path: values[i] on
    [breakpoints[i], breakpoints[i+1]). breakpoints[0] must be 0."""

    __test__ = False  # keep pytest from collecting this as a test case

    breakpoints: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        bp, vals = self.breakpoints, self.values
        if len(bp) != len(vals) + 1:
            raise BadShape(
                f"{len(bp)} breakpoints need {len(bp) - 1} values, got {len(vals)}"
            )
        if len(bp) < 2:
            raise BadShape("need at least one piece")
        if bp[0] != 0.0:
            raise BadShape(f"first breakpoint must be 0, got {bp[0]!r}")
        if any(b1 <= b0 for b0, b1 in zip(bp, bp[1:])):
            raise BadShape("breakpoints must be strictly ascending")

    @classmethod
    def constant(cls, k: float, t_max: float) -> "TestFunction":
        return cls(breakpoints=(0.0, float(t_max)), values=(float(k),))


@dataclass(frozen=True)
class StateSeries:
    times: tuple[float, ...]
    states: np.ndarray  # (n_times, d, d)


@dataclass(frozen=True)
class EquilibriumResult:
    state: np.ndarray
    non_unique: bool


def vectorized_liouvillian(model: MeasurementModel) -> np.ndarray:
    return vectorize_superoperator(lambda t: liouvillian(model, t), model.dim)


def vectorized_generator_k(model: MeasurementModel, k: float) -> np.ndarray:
    return vectorize_superoperator(lambda t: generator_k(model, k, t), model.dim)


def pair(a: np.ndarray, tau: np.ndarray) -> complex:
    """Duality pairing <a, tau>: trace of (a adjoint) tau."""
    return complex(np.trace(a.conj().T @ tau))


def propagate_master(
    model: MeasurementModel, rho0: np.ndarray, times
) -> StateSeries:
    """A priori states at the given ascending times (from 0)."""
    times = tuple(float(t) for t in times)
    if any(t1 < t0 for t0, t1 in zip(times, times[1:])) or (times and times[0] < 0):
        raise BadShape("times must ascend from 0")
    sup = vectorized_liouvillian(model)
    steps: dict[float, np.ndarray] = {}
    out = np.empty((len(times), model.dim, model.dim), dtype=complex)
    phi = vec(np.asarray(rho0, dtype=complex))
    t_prev = 0.0
    for i, t in enumerate(times):
        dt = t - t_prev
        if dt > 0.0:
            if dt not in steps:
                steps[dt] = expm_scaled(sup * dt)
            phi = steps[dt] @ phi
            t_prev = t
        m = unvec(phi, model.dim)
        out[i] = (m + m.conj().T) / 2.0
    return StateSeries(times=times, states=out)


def characteristic_functional(
    model: MeasurementModel,
    rho0: np.ndarray,
    k: TestFunction,
    a: np.ndarray | None = None,
) -> complex:
    """<a, G_t(k)[rho0]> for a piecewise-constant test function.

    The earliest piece acts first; a defaults to the identity, which gives
    the characteristic function of the output signal increments.
    """
    phi = vec(np.asarray(rho0, dtype=complex))
    for kappa, t0, t1 in zip(k.values, k.breakpoints, k.breakpoints[1:]):
        phi = expm_scaled(vectorized_generator_k(model, kappa) * (t1 - t0)) @ phi
    tau = unvec(phi, model.dim)
    if a is None:
        return complex(np.trace(tau))
    return pair(np.asarray(a, dtype=complex), tau)


def increment_characteristic(
    model: MeasurementModel, rho0: np.ndarray, kappa: float, t: float
) -> complex:
    """Characteristic function of Y(t) under ignorance of outcomes."""
    if t < 0:
        raise BadShape(f"t must be >= 0, got {t!r}")
    if t == 0.0:
        return complex(np.trace(np.asarray(rho0, dtype=complex)))
    phi = expm_scaled(vectorized_generator_k(model, kappa) * t) @ vec(
        np.asarray(rho0, dtype=complex)
    )
    return complex(phi.reshape((model.dim, model.dim), order="F").trace())


def equilibrium_state(
    model: MeasurementModel, residual_tol: float = tol.EQ_RESIDUAL_TOL
) -> EquilibriumResult | None:
    """A stationary state of the master equation, or None.

    The kernel of the vectorized generator is found by SVD. With a
    multi-dimensional kernel the maximally mixed state is projected onto
    the kernel span (an entropy-favoring deterministic tie-break) and the
    result flagged non_unique; if that projection is not a state, each
    kernel basis vector is tried in turn.
    """
    d = model.dim
    sup = vectorized_liouvillian(model)
    u, s, vh = np.linalg.svd(sup)
    scale = max(1.0, float(s[0]) if s.size else 1.0)
    kdim = int(np.sum(s <= 1e-10 * scale))
    if kdim == 0:
        return None
    basis = vh[len(s) - kdim :].conj()  # rows span the kernel, orthonormal

    def as_state(v: np.ndarray) -> np.ndarray | None:
        m = unvec(v, d)
        m = (m + m.conj().T) / 2.0
        tr = float(np.trace(m).real)
        if abs(tr) < 1e-12:
            return None
        m = m / tr
        w = np.linalg.eigvalsh(m)
        if w.min() < -tol.PSD_TOL:
            return None
        cand = m.copy()
        if trace_norm(liouvillian(model, cand)) > residual_tol:
            return None
        return cand

    mixed = vec(np.eye(d, dtype=complex) / d)
    proj = basis.T @ (basis.conj() @ mixed)
    for candidate_vec in [proj, *basis]:
        state = as_state(candidate_vec)
        if state is not None:
            return EquilibriumResult(state=state, non_unique=kdim > 1)
    return None
