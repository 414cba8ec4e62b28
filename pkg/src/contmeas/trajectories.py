"""Stochastic layer: jump-diffusion trajectories of the measurement record.

Two coupled representations are integrated on a fixed grid. Under the
reference probability the non-normalized state sigma follows a linear SDE
whose trace is the likelihood weight; under the physical probability the
normalized state rho follows the nonlinear filtering SDE. Both share one
step kernel: a completely positive one-step map

    X = M sigma M' + sum_j L_j sigma L_j' dt,   M = 1 + G dt + R dW,

whose expectation reproduces the no-jump drift of the linear equation to
first order in dt (the leftover dt^2 G sigma G' term is positive, so the
step can never leave the state cone; plain Euler can, and loses pathwise
purity at any dt). A jump in channel z replaces X by the jump map applied
to X. The physical mode runs the same kernel with dW = dWbreve + m dt and
state-dependent jump probabilities, then normalizes; the per-step log-trace
increments telescope to the exact likelihood ln tr sigma of the realized
discrete path, which keeps the two probabilities mutually consistent.

Trajectories are independent tasks keyed by (master_seed, index): each
draws its own counter-based random stream, so ensemble results are
bit-identical for any worker count or block size.
"""

from __future__ import annotations

import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from . import tolerances as tol
from .errors import (
    BadShape,
    RateTooHigh,
    StateCollapse,
    SupportViolation,
    WrongMode,
)
from .model import MeasurementModel, mean_drift
from .operators import require_density

BLOCK = 2048  # trajectories per task; fixed so results never depend on workers
LOG_WEIGHT_FLOOR = math.log(tol.WEIGHT_FLOOR)

MODE_Q = "q"
MODE_P = "p"
MODE_COUPLED = "coupled"


@dataclass(frozen=True)
class TimeGrid:
    t_max: float
    dt: float

    def __post_init__(self):
        if self.t_max <= 0 or self.dt <= 0:
            raise BadShape(f"need t_max > 0 and dt > 0, got {self.t_max}, {self.dt}")
        n = round(self.t_max / self.dt)
        if n < 1 or not math.isclose(n * self.dt, self.t_max, rel_tol=1e-9):
            raise BadShape(f"t_max={self.t_max!r} is not a multiple of dt={self.dt!r}")

    @cached_property
    def n_steps(self) -> int:
        return round(self.t_max / self.dt)

    @cached_property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt


@dataclass(frozen=True)
class RngStream:
    """Counter-based stream: (master_seed, stream_index) -> independent bits."""

    master_seed: int
    stream_index: int

    def generator(self) -> np.random.Generator:
        key = np.array(
            [self.master_seed % 2**64, self.stream_index % 2**64], dtype=np.uint64
        )
        return np.random.Generator(np.random.Philox(key=key))


def derive_seed(master_seed: int, salt: str) -> int:
    """Stable sub-seed for an auxiliary ensemble; hash-based, not sequential,
    so adding runs never shifts existing ones."""
    digest = hashlib.blake2b(
        f"{master_seed}:{salt}".encode(), digest_size=8
    ).digest()
    return int.from_bytes(digest, "little")


@dataclass(frozen=True)
class TrajectoryPath:
    grid: TimeGrid
    mode: str
    y: np.ndarray  # (n_steps+1,), y[0] = 0
    dW: np.ndarray  # (n_steps,), driving Wiener increments for this mode
    jumps: tuple[tuple[int, float], ...]  # (step index, amplitude z)
    states: np.ndarray  # (n_steps+1, d, d), normalized
    log_weight: np.ndarray  # (n_steps+1,), ln tr sigma, 0 at t=0
    repair_count: int
    max_impurity: float


@dataclass(frozen=True)
class RawEnsemble:
    """Per-trajectory records at the snapshot steps, in trajectory order."""

    mode: str
    grid: TimeGrid
    snapshot_steps: tuple[int, ...]
    times: np.ndarray  # (S,)
    log_weight: np.ndarray  # (N, S)
    y: np.ndarray  # (N, S)
    jump_counts: np.ndarray  # (N, S)
    states: np.ndarray | None  # (N, S, d, d)
    log_weight_den: np.ndarray | None  # (N, S), coupled mode only
    states_den: np.ndarray | None  # (N, S, d, d), coupled mode only
    max_impurity: np.ndarray  # (N,)
    repair_count: int
    dead_count: int

    @property
    def n_traj(self) -> int:
        return self.log_weight.shape[0]


def check_rate(model: MeasurementModel, grid: TimeGrid, mode: str) -> None:
    """Total per-step jump probability must stay well below 1."""
    if mode == MODE_Q:
        bound = model.total_rate
    else:
        bound = sum(
            model.mu[z] * float(np.linalg.eigvalsh(model.jump_effects[z]).max())
            for z in model.z_values
        )
    if grid.dt * bound > tol.RATE_CAP:
        raise RateTooHigh(
            f"dt * rate bound = {grid.dt * bound:.3g} exceeds {tol.RATE_CAP}"
        )


class _Precomp:
    """Step-kernel constants for one (model, dt) pair."""

    def __init__(self, model: MeasurementModel, dt: float):
        d = model.dim
        eye = np.eye(d, dtype=complex)
        sum_v = np.zeros((d, d), dtype=complex)
        for ch in model.channels:
            sum_v += ch.nu * ch.V
        gen = model.effective_drift - sum_v + model.total_rate * eye
        self.dim = d
        self.dt = dt
        self.sqrt_dt = math.sqrt(dt)
        self.base_m = eye + gen * dt
        self.base_m_dag = self.base_m.conj().T
        self.R = model.R
        self.R_dag = model.R.conj().T
        self.has_R = bool(np.any(model.R))
        self.Ls = [(L, L.conj().T) for L in model.Ls if np.any(L)]
        self.R_plus = model.R + model.R.conj().T
        self.z_values = model.z_values
        self.n_z = len(model.z_values)
        self.mu = np.array([model.mu[z] for z in model.z_values])
        self.effects = [model.jump_effects[z] for z in model.z_values]
        self.jump_ops = []  # per z: list of (weight nu/mu, V, V adjoint)
        for z in model.z_values:
            group = model.channels_at[z]
            m = model.mu[z]
            self.jump_ops.append(
                [(ch.nu / m, ch.V, ch.V.conj().T) for ch in group]
            )
        self.fire_prob_q = self.mu * dt
        self.drift = (model.c - model.compensator_drift) * dt
        self.r = model.r


def _hermitize(x: np.ndarray) -> np.ndarray:
    return (x + np.conj(np.swapaxes(x, -1, -2))) / 2.0


def _linear_step(p: _Precomp, rho: np.ndarray, dw: np.ndarray) -> np.ndarray:
    """One no-jump application of the CP kernel to a batch of states."""
    left = np.matmul(p.base_m, rho)
    x = np.matmul(left, p.base_m_dag)
    if p.has_R:
        rrho = np.matmul(p.R, rho)
        dw3 = dw[:, None, None]
        x = x + dw3 * (np.matmul(rrho, p.base_m_dag) + np.matmul(left, p.R_dag))
        x = x + (dw3 * dw3) * np.matmul(rrho, p.R_dag)
    for L, L_dag in p.Ls:
        x = x + p.dt * np.matmul(np.matmul(L, rho), L_dag)
    return x


def _apply_jump(p: _Precomp, zi: int, x: np.ndarray) -> np.ndarray:
    acc = np.zeros_like(x)
    for w, v, v_dag in p.jump_ops[zi]:
        acc += w * np.matmul(np.matmul(v, x), v_dag)
    return acc


def _repair_batch(rho: np.ndarray, dim: int) -> int:
    """Clip negative eigenvalues in place, preserving each trace. Returns the
    number of states whose repair exceeded roundoff scale."""
    if dim == 2:
        det = (
            rho[:, 0, 0].real * rho[:, 1, 1].real
            - rho[:, 0, 1].real ** 2
            - rho[:, 0, 1].imag ** 2
        )
        bad = np.nonzero(det < -tol.PSD_TOL)[0]
    else:
        diag = np.einsum("bii->bi", rho).real
        offsum = np.sum(np.abs(rho), axis=2) - np.abs(
            np.einsum("bii->bi", rho)
        )
        bad = np.nonzero(np.min(diag - offsum, axis=1) < -tol.PSD_TOL)[0]
    if bad.size == 0:
        return 0
    count = 0
    for i in bad:
        w, v = np.linalg.eigh(rho[i])
        if w.min() >= -tol.PSD_TOL:
            continue
        count += 1
        tr = w.sum()
        w = np.clip(w, 0.0, None)
        s = w.sum()
        if s > 0 and tr > 0:
            w *= tr / s
        rho[i] = (v * w) @ v.conj().T
    return count


def _draw_randoms(master_seed, lo, hi, n_steps, n_z):
    """Per-trajectory streams for indices [lo, hi): normals then uniforms."""
    b = hi - lo
    normals = np.empty((b, n_steps))
    uniforms = np.empty((b, n_steps, n_z)) if n_z else None
    for j, idx in enumerate(range(lo, hi)):
        gen = RngStream(master_seed, idx).generator()
        normals[j] = gen.standard_normal(n_steps)
        if n_z:
            uniforms[j] = gen.random((n_steps, n_z))
    return normals, uniforms


def _check_support(rho_num: np.ndarray, rho_den: np.ndarray) -> None:
    w, v = np.linalg.eigh(rho_den)
    kernel = v[:, w <= tol.SUPP_TOL]
    if kernel.shape[1] == 0:
        return
    leak = float(
        np.einsum("ij,ik,kj->", kernel.conj(), rho_num, kernel).real
    )
    if leak > tol.SUPP_TOL:
        raise SupportViolation(
            f"initial state leaks {leak:.3e} outside the reference support"
        )


class _BlockResult:
    __slots__ = (
        "log_weight", "y", "jump_counts", "states", "log_weight_den",
        "states_den", "max_impurity", "repair_count", "dead_count",
        "dW", "fires",
    )


def _run_block(
    model: MeasurementModel,
    pre: _Precomp,
    grid: TimeGrid,
    mode: str,
    rho0: np.ndarray,
    rho_den0: np.ndarray | None,
    master_seed: int,
    lo: int,
    hi: int,
    snap_steps: tuple[int, ...],
    keep_states: bool,
    record_full: bool,
) -> _BlockResult:
    d = pre.dim
    b = hi - lo
    n_steps = grid.n_steps
    n_z = pre.n_z
    normals, uniforms = _draw_randoms(master_seed, lo, hi, n_steps, n_z)

    rho = np.broadcast_to(rho0, (b, d, d)).copy()
    lw = np.zeros(b)
    y = np.zeros(b)
    jumps = np.zeros(b, dtype=np.int64)
    dead = np.zeros(b, dtype=bool)
    max_imp = np.zeros(b)
    repair_count = 0

    coupled = mode == MODE_COUPLED
    physical = mode in (MODE_P, MODE_COUPLED)
    if coupled:
        rho_den = np.broadcast_to(rho_den0, (b, d, d)).copy()
        lw_den = np.zeros(b)

    n_snap = len(snap_steps)
    snap_slot = {s: i for i, s in enumerate(snap_steps)}
    out = _BlockResult()
    out.log_weight = np.empty((b, n_snap))
    out.y = np.empty((b, n_snap))
    out.jump_counts = np.empty((b, n_snap), dtype=np.int64)
    out.states = np.empty((b, n_snap, d, d), dtype=complex) if keep_states else None
    out.log_weight_den = np.empty((b, n_snap)) if coupled else None
    out.states_den = (
        np.empty((b, n_snap, d, d), dtype=complex) if coupled and keep_states else None
    )
    out.dW = np.empty((b, n_steps)) if record_full else None
    out.fires = np.empty((b, n_steps, n_z), dtype=bool) if record_full else None

    def record(step: int) -> None:
        slot = snap_slot.get(step)
        if slot is None:
            return
        out.log_weight[:, slot] = lw
        out.y[:, slot] = y
        out.jump_counts[:, slot] = jumps
        if keep_states:
            out.states[:, slot] = rho
        if coupled:
            out.log_weight_den[:, slot] = lw_den
            if keep_states:
                out.states_den[:, slot] = rho_den

    record(0)
    for i in range(n_steps):
        dw = normals[:, i] * pre.sqrt_dt
        if physical:
            m = np.einsum("ij,bji->b", pre.R_plus, rho).real
            dw_eff = dw + m * grid.dt
        else:
            dw_eff = dw
        if record_full:
            out.dW[:, i] = dw

        x = _linear_step(pre, rho, dw_eff)
        if coupled:
            x_den = _linear_step(pre, rho_den, dw_eff)

        jump_y = np.zeros(b) if n_z else None
        for zi in range(n_z):
            if physical:
                intensity = np.einsum("ij,bji->b", pre.effects[zi], rho).real
                prob = np.clip(intensity * pre.mu[zi] * grid.dt, 0.0, None)
            else:
                prob = pre.fire_prob_q[zi]
            fired = uniforms[:, i, zi] < prob
            if record_full:
                out.fires[:, i, zi] = fired
            idx = np.nonzero(fired)[0]
            if idx.size:
                x[idx] = _apply_jump(pre, zi, x[idx])
                if coupled:
                    x_den[idx] = _apply_jump(pre, zi, x_den[idx])
                jump_y[idx] += pre.z_values[zi]
                jumps[idx] += 1

        tr = np.einsum("bii->b", x).real
        newly_dead = (~dead) & (tr <= tol.DEAD_TOL)
        alive = ~(dead | newly_dead)
        if coupled:
            tr_den = np.einsum("bii->b", x_den).real
            den_dead = alive & (tr_den <= tol.DEAD_TOL)
            if np.any(den_dead):
                raise SupportViolation(
                    "denominator state died on a path whose numerator is alive"
                )

        lw[alive] += np.log(tr[alive])
        if np.any(lw[alive] < LOG_WEIGHT_FLOOR):
            raise StateCollapse(
                f"trajectory weight fell below {tol.WEIGHT_FLOOR:g} at step {i}"
            )
        rho[alive] = _hermitize(x[alive] / tr[alive, None, None])
        if coupled:
            lw_den[alive] += np.log(tr_den[alive])
            rho_den[alive] = _hermitize(x_den[alive] / tr_den[alive, None, None])
            repair_count += _repair_batch(rho_den, d)
        if np.any(newly_dead):
            dead |= newly_dead
            lw[newly_dead] = -np.inf
            rho[newly_dead] = rho0
            if coupled:
                lw_den[newly_dead] = -np.inf
                rho_den[newly_dead] = rho_den0
        repair_count += _repair_batch(rho, d)

        y += pre.drift + pre.r * dw_eff
        if n_z:
            y += jump_y
        if physical:
            imp = 1.0 - np.einsum("bij,bji->b", rho, rho).real
            np.maximum(max_imp, imp, out=max_imp)
        record(i + 1)

    out.max_impurity = max_imp
    out.repair_count = repair_count
    out.dead_count = int(dead.sum())
    return out


def run_ensemble(
    model: MeasurementModel,
    rho0: np.ndarray,
    grid: TimeGrid,
    n_traj: int,
    master_seed: int,
    mode: str = MODE_Q,
    snapshot_steps: Sequence[int] | None = None,
    rho_den: np.ndarray | None = None,
    workers: int | None = None,
    keep_states: bool = True,
) -> RawEnsemble:
    """Integrate n_traj independent trajectories and collect snapshots.

    Results are a pure function of (model, rho0, grid, n_traj, master_seed,
    mode): trajectories are blocked in fixed chunks and merged in index
    order, so the worker count cannot change any bit of the output.
    """
    if mode not in (MODE_Q, MODE_P, MODE_COUPLED):
        raise BadShape(f"unknown mode {mode!r}")
    if n_traj < 1:
        raise BadShape("n_traj must be >= 1")
    check_rate(model, grid, mode)
    rho0 = np.asarray(rho0, dtype=complex)
    require_density(rho0)
    rho0 = rho0 / np.trace(rho0).real
    if mode == MODE_COUPLED:
        if rho_den is None:
            raise BadShape("coupled mode needs the reference initial state")
        rho_den = np.asarray(rho_den, dtype=complex)
        require_density(rho_den)
        rho_den = rho_den / np.trace(rho_den).real
        _check_support(rho0, rho_den)
    else:
        rho_den = None

    if snapshot_steps is None:
        snapshot_steps = (0, grid.n_steps)
    snap = tuple(sorted(set(int(s) for s in snapshot_steps)))
    if snap and (snap[0] < 0 or snap[-1] > grid.n_steps):
        raise BadShape(f"snapshot steps must lie in [0, {grid.n_steps}]")

    pre = _Precomp(model, grid.dt)
    ranges = [(lo, min(lo + BLOCK, n_traj)) for lo in range(0, n_traj, BLOCK)]

    def task(bounds):
        lo, hi = bounds
        return _run_block(
            model, pre, grid, mode, rho0, rho_den, master_seed, lo, hi,
            snap, keep_states, record_full=False,
        )

    if workers is not None and workers > 1 and len(ranges) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(task, ranges))
    else:
        blocks = [task(r) for r in ranges]

    def cat(attr):
        parts = [getattr(blk, attr) for blk in blocks]
        return None if parts[0] is None else np.concatenate(parts, axis=0)

    return RawEnsemble(
        mode=mode,
        grid=grid,
        snapshot_steps=snap,
        times=np.array([grid.times[s] for s in snap]),
        log_weight=cat("log_weight"),
        y=cat("y"),
        jump_counts=cat("jump_counts"),
        states=cat("states"),
        log_weight_den=cat("log_weight_den"),
        states_den=cat("states_den"),
        max_impurity=cat("max_impurity"),
        repair_count=sum(blk.repair_count for blk in blocks),
        dead_count=sum(blk.dead_count for blk in blocks),
    )


def _single_path(
    model: MeasurementModel,
    rho0: np.ndarray,
    grid: TimeGrid,
    rng: RngStream,
    mode: str,
    rho_den: np.ndarray | None = None,
):
    check_rate(model, grid, mode)
    rho0 = np.asarray(rho0, dtype=complex)
    require_density(rho0)
    rho0 = rho0 / np.trace(rho0).real
    if rho_den is not None:
        rho_den = np.asarray(rho_den, dtype=complex)
        require_density(rho_den)
        rho_den = rho_den / np.trace(rho_den).real
        _check_support(rho0, rho_den)
    pre = _Precomp(model, grid.dt)
    all_steps = tuple(range(grid.n_steps + 1))
    blk = _run_block(
        model, pre, grid, mode, rho0, rho_den,
        rng.master_seed, rng.stream_index, rng.stream_index + 1,
        all_steps, keep_states=True, record_full=True,
    )
    jump_list = []
    for i in range(grid.n_steps):
        for zi in range(pre.n_z):
            if blk.fires[0, i, zi]:
                jump_list.append((i, pre.z_values[zi]))
    path = TrajectoryPath(
        grid=grid,
        mode=mode if mode != MODE_COUPLED else MODE_P,
        y=blk.y[0],
        dW=blk.dW[0],
        jumps=tuple(jump_list),
        states=blk.states[0],
        log_weight=blk.log_weight[0],
        repair_count=blk.repair_count,
        max_impurity=float(blk.max_impurity[0]),
    )
    return path, blk


def simulate_linear_q(
    model: MeasurementModel, rho0: np.ndarray, grid: TimeGrid, rng: RngStream
) -> TrajectoryPath:
    """One path of the linear reference-probability equation; states are
    stored normalized with the trace carried in log_weight."""
    path, _ = _single_path(model, rho0, grid, rng, MODE_Q)
    return path


def simulate_physical(
    model: MeasurementModel, rho0: np.ndarray, grid: TimeGrid, rng: RngStream
) -> TrajectoryPath:
    """One path of the nonlinear filtering equation under the physical law."""
    path, _ = _single_path(model, rho0, grid, rng, MODE_P)
    return path


def simulate_coupled_pair(
    model: MeasurementModel,
    rho_alpha: np.ndarray,
    rho: np.ndarray,
    grid: TimeGrid,
    rng: RngStream,
) -> tuple[TrajectoryPath, np.ndarray]:
    """Physical path from rho_alpha plus the co-integrated log-weight of the
    linear equation started from rho, driven by the same realized noise."""
    path, blk = _single_path(model, rho_alpha, grid, rng, MODE_COUPLED, rho_den=rho)
    return path, blk.log_weight_den[0]


def ybv_decomposition(
    path: TrajectoryPath, model: MeasurementModel
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Split a physical-mode signal into bounded-variation, martingale and
    jump parts; the three series sum back to y."""
    if path.mode != MODE_P:
        raise WrongMode("decomposition is defined for physical-mode paths")
    n = path.grid.n_steps
    dt = path.grid.dt
    comp = model.compensator_drift
    m_series = np.array([mean_drift(model, path.states[i]) for i in range(n)])
    cbv = np.concatenate(
        [[0.0], np.cumsum((model.c - comp) * dt + model.r * m_series * dt)]
    )
    mart = np.concatenate([[0.0], model.r * np.cumsum(path.dW)])
    jump = np.zeros(n + 1)
    for step, z in path.jumps:
        jump[step + 1 :] += z
    return cbv, mart, jump
