"""Ensemble orchestration, estimator bookkeeping and the verification suite.

Everything stochastic funnels through run_config / run_ensemble so that a
(config, seed) pair pins down every byte of output. The check_* functions
implement the acceptance battery; self_test_suite bundles them at two
scales. Statistical comparisons pass at 3 standard errors plus an explicit
discretization allowance C*dt, with C calibrated by a dt-halving pre-pass.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import BadShape, NonHermitianH, TooFewSamples
from .information import (
    McConfig,
    classical_rel_entropy_rate_q,
    entropy_rate_mean,
    information_gain_loss,
    mutual_entropy_report,
    purity_rates,
    quantum_relative_entropy,
    shatten_decompose,
    von_neumann_entropy_batch,
    _d2_quadrature,
    _d2_spectral,
)
from .model import MeasurementModel, liouvillian, validate_model
from .operators import expm_scaled, pauli, random_density, unvec, vec
from .presets import PRESETS, load_preset
from .semigroup import (
    TestFunction,
    characteristic_functional,
    propagate_master,
    vectorized_generator_k,
    vectorized_liouvillian,
)
from .stats import combine_se, estimate_with_se
from .trajectories import (
    MODE_COUPLED,
    MODE_P,
    MODE_Q,
    RawEnsemble,
    TimeGrid,
    derive_seed,
    run_ensemble,
)

DEFAULT_SEED = 20240817


# ---------------------------------------------------------------------------
# run configuration and named functionals

def _samples_entropy(ens: RawEnsemble, j: int) -> np.ndarray:
    return von_neumann_entropy_batch(ens.states[:, j])


def _samples_purity(ens: RawEnsemble, j: int) -> np.ndarray:
    return np.einsum("bij,bji->b", ens.states[:, j], ens.states[:, j]).real


def _samples_linear_entropy(ens: RawEnsemble, j: int) -> np.ndarray:
    tr = np.einsum("bii->b", ens.states[:, j]).real
    return tr - _samples_purity(ens, j)


FUNCTIONALS: dict[str, Callable[[RawEnsemble, int], np.ndarray]] = {
    "entropy": _samples_entropy,
    "purity": _samples_purity,
    "linear_entropy": _samples_linear_entropy,
    "weight": lambda ens, j: np.exp(ens.log_weight[:, j]),
    "log_weight": lambda ens, j: ens.log_weight[:, j],
    "y": lambda ens, j: ens.y[:, j],
    "y_squared": lambda ens, j: ens.y[:, j] ** 2,
    "jumps": lambda ens, j: ens.jump_counts[:, j].astype(float),
}

_NEEDS_STATES = frozenset({"entropy", "purity", "linear_entropy"})


@dataclass(frozen=True)
class RunConfig:
    model: MeasurementModel
    initial_state: np.ndarray
    t_max: float
    dt: float
    n_trajectories: int
    master_seed: int
    mode: str = MODE_Q
    outputs: tuple[str, ...] = ("weight", "y")
    snapshot_stride: int = 1

    def __post_init__(self):
        if self.n_trajectories < 1:
            raise BadShape("need at least one trajectory")
        if self.snapshot_stride < 1:
            raise BadShape("snapshot stride must be >= 1")
        unknown = [name for name in self.outputs if name not in FUNCTIONALS]
        if unknown:
            raise BadShape(
                f"unknown functionals {unknown}; registered: {sorted(FUNCTIONALS)}"
            )


@dataclass(frozen=True)
class EnsembleSeries:
    times: np.ndarray
    means: dict[str, np.ndarray]
    ses: dict[str, np.ndarray]
    n_traj: int
    mode: str


def run_config(
    config: RunConfig, workers: int | None = None
) -> tuple[EnsembleSeries, RawEnsemble]:
    """Run the configured ensemble and reduce the named functionals."""
    grid = TimeGrid(t_max=config.t_max, dt=config.dt)
    steps = list(range(0, grid.n_steps + 1, config.snapshot_stride))
    if steps[-1] != grid.n_steps:
        steps.append(grid.n_steps)
    raw = run_ensemble(
        config.model,
        config.initial_state,
        grid,
        config.n_trajectories,
        config.master_seed,
        mode=config.mode,
        snapshot_steps=steps,
        workers=workers,
        keep_states=bool(_NEEDS_STATES & set(config.outputs)),
    )
    n_snap = len(raw.snapshot_steps)
    means: dict[str, np.ndarray] = {}
    ses: dict[str, np.ndarray] = {}
    for name in config.outputs:
        fn = FUNCTIONALS[name]
        mean_arr = np.empty(n_snap)
        se_arr = np.empty(n_snap)
        for j in range(n_snap):
            samples = fn(raw, j)
            if samples.shape[0] == 1:
                mean_arr[j], se_arr[j] = float(samples[0]), 0.0
            else:
                mean_arr[j], se_arr[j] = estimate_with_se(samples)
        means[name] = mean_arr
        ses[name] = se_arr
    return (
        EnsembleSeries(
            times=raw.times,
            means=means,
            ses=ses,
            n_traj=raw.n_traj,
            mode=raw.mode,
        ),
        raw,
    )


# ---------------------------------------------------------------------------
# verification plumbing

@dataclass(frozen=True)
class CheckResult:
    name: str
    statistic: float
    threshold: float
    passed: bool
    details: dict = field(default_factory=dict)


@dataclass(frozen=True)
class VerificationReport:
    checks: tuple[CheckResult, ...]
    elapsed_seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "elapsed_seconds": self.elapsed_seconds,
            "checks": [
                {
                    "name": c.name,
                    "statistic": c.statistic,
                    "threshold": c.threshold,
                    "passed": c.passed,
                    "details": c.details,
                }
                for c in self.checks
            ],
        }


def _result(name, statistic, threshold, **details) -> CheckResult:
    statistic = float(statistic)
    threshold = float(threshold)
    return CheckResult(
        name=name,
        statistic=statistic,
        threshold=threshold,
        passed=bool(statistic <= threshold),
        details=details,
    )


def _complex_mean_se(samples: np.ndarray) -> tuple[complex, float]:
    mean_re, se_re = estimate_with_se(np.ascontiguousarray(samples.real))
    mean_im, se_im = estimate_with_se(np.ascontiguousarray(samples.imag))
    return complex(mean_re, mean_im), math.hypot(se_re, se_im)


def _slot(ens: RawEnsemble, t: float) -> int:
    for i, ts in enumerate(ens.times):
        if math.isclose(ts, t, rel_tol=1e-9, abs_tol=1e-12):
            return i
    raise BadShape(f"time {t!r} not captured by the ensemble snapshots")


def _fn_label(fn: TestFunction) -> str:
    return "k=" + "|".join(f"{v:g}" for v in fn.values)


def _truncate(fn: TestFunction, t: float) -> TestFunction:
    bps = [b for b in fn.breakpoints if b < t - 1e-12] + [t]
    return TestFunction(breakpoints=tuple(bps), values=fn.values[: len(bps) - 1])


def verify_gphi(
    model: MeasurementModel,
    rho0: np.ndarray,
    test_fns: TestFunction | Sequence[TestFunction],
    observables: Sequence[tuple[str, np.ndarray | None]],
    n_traj: int,
    master_seed: int,
    dt: float,
    workers: int | None = None,
    model_label: str = "model",
) -> VerificationReport:
    """Monte Carlo vs. deterministic characteristic functional.

    For each test function, each observable and each breakpoint time, the
    weighted estimator over the reference-probability ensemble is compared
    against the matrix-exponential value. The discretization allowance is
    calibrated from a second run at dt/2.
    """
    t0 = time.monotonic()
    if isinstance(test_fns, TestFunction):
        test_fns = [test_fns]
    fns = list(test_fns)
    t_end = max(fn.breakpoints[-1] for fn in fns)
    bp_times = sorted({b for fn in fns for b in fn.breakpoints})

    runs = {}
    for tag, d in (("dt", dt), ("half", dt / 2.0)):
        grid = TimeGrid(t_max=t_end, dt=d)
        steps = []
        for b in bp_times:
            s = round(b / d)
            if not math.isclose(s * d, b, rel_tol=1e-9, abs_tol=1e-12):
                raise BadShape(f"breakpoint {b!r} is not on the dt={d!r} grid")
            steps.append(s)
        runs[tag] = run_ensemble(
            model, rho0, grid, n_traj, master_seed,
            mode=MODE_Q, snapshot_steps=steps, workers=workers,
        )

    def estimate(ens: RawEnsemble, fn: TestFunction, a, t: float):
        phase = np.zeros(ens.n_traj)
        for kappa, b0, b1 in zip(fn.values, fn.breakpoints, fn.breakpoints[1:]):
            if b1 > t + 1e-12:
                break
            phase = phase + kappa * (ens.y[:, _slot(ens, b1)] - ens.y[:, _slot(ens, b0)])
        j = _slot(ens, t)
        rho_hat = ens.states[:, j]
        if a is None:
            amp = np.einsum("bii->b", rho_hat)
        else:
            amp = np.einsum("ij,bji->b", np.asarray(a).conj().T, rho_hat)
        samples = np.exp(1j * phase) * amp * np.exp(ens.log_weight[:, j])
        return _complex_mean_se(samples)

    checks = []
    for fn in fns:
        for a_name, a in observables:
            for t in fn.breakpoints[1:]:
                det = characteristic_functional(model, rho0, _truncate(fn, t), a)
                est, se = estimate(runs["dt"], fn, a, t)
                est_half, _ = estimate(runs["half"], fn, a, t)
                c_disc = 2.0 * abs(est - est_half) / dt
                delta = abs(est - det)
                checks.append(
                    _result(
                        f"gphi[{model_label},{_fn_label(fn)},a={a_name},t={t:g}]",
                        delta,
                        3.0 * se + c_disc * dt,
                        mc=[est.real, est.imag],
                        deterministic=[det.real, det.imag],
                        se=se,
                        c_disc=c_disc,
                        dt=dt,
                        n_traj=n_traj,
                    )
                )
    return VerificationReport(
        checks=tuple(checks), elapsed_seconds=time.monotonic() - t0
    )


# ---------------------------------------------------------------------------
# acceptance battery
#
# Each check_* returns a list of CheckResult; the numbered acceptance
# criteria map onto them one-to-one in tests and in the full suite.

def _fixture_models() -> dict[str, MeasurementModel]:
    return {name: make() for name, make in PRESETS.items()}


def check_generator_consistency(
    n_random: int = 100, seed: int = DEFAULT_SEED
) -> list[CheckResult]:
    """Zero-frequency generator equals the master generator; trace kills it."""
    out = []
    rng = np.random.Generator(np.random.Philox(seed))
    for name, model in _fixture_models().items():
        k0 = vectorized_generator_k(model, 0.0)
        lv = vectorized_liouvillian(model)
        out.append(
            _result(
                f"generator-zero-frequency[{name}]",
                float(np.max(np.abs(k0 - lv))),
                1e-14,
            )
        )
        worst = 0.0
        for _ in range(n_random):
            tau = random_density(model.dim, rng) * math.exp(rng.uniform(-2, 2))
            image = liouvillian(model, tau)
            norm1 = float(np.abs(np.linalg.eigvalsh(tau)).sum())
            worst = max(worst, abs(complex(np.trace(image))) / norm1)
        out.append(
            _result(
                f"generator-trace-preservation[{name}]",
                worst,
                1e-12,
                n_random=n_random,
            )
        )
    return out


def check_semigroup(seed: int = DEFAULT_SEED) -> list[CheckResult]:
    out = []
    rng = np.random.Generator(np.random.Philox(seed + 1))
    for name, model in _fixture_models().items():
        for rho_label, rho in (
            ("mixed", np.eye(2, dtype=complex) / 2.0),
            ("random", random_density(model.dim, rng)),
        ):
            series = propagate_master(model, rho, [0.1, 1.0, 10.0])
            worst_tr = max(
                abs(float(np.trace(s).real) - 1.0) for s in series.states
            )
            worst_eig = max(
                -float(np.linalg.eigvalsh(s).min()) for s in series.states
            )
            out.append(
                _result(
                    f"semigroup-trace[{name},{rho_label}]", worst_tr, 1e-10
                )
            )
            out.append(
                _result(
                    f"semigroup-psd[{name},{rho_label}]", worst_eig, 1e-10
                )
            )
    model = load_preset("diffusive-qubit")
    excited = np.diag([1.0, 0.0]).astype(complex)
    got = propagate_master(model, excited, [1.0]).states[0][0, 0].real
    out.append(
        _result(
            "semigroup-decay-value",
            abs(got - math.exp(-1.0)),
            1e-8,
            population=float(got),
        )
    )
    return out


def check_factorization() -> list[CheckResult]:
    """Composition of the characteristic functional across a time split."""
    out = []
    sz = pauli("z")
    for name in ("counting-qubit", "diffusive-qubit"):
        model = load_preset(name)
        rho = np.eye(2, dtype=complex) / 2.0
        for a_name, a in (("id", None), ("sz", sz)):
            # same frequency split in two pieces vs. one piece
            split = TestFunction(breakpoints=(0.0, 0.4, 1.0), values=(0.7, 0.7))
            whole = TestFunction.constant(0.7, 1.0)
            delta1 = abs(
                characteristic_functional(model, rho, split, a)
                - characteristic_functional(model, rho, whole, a)
            )
            # two-piece vs. manual composition through the intermediate state
            two = TestFunction(breakpoints=(0.0, 0.4, 1.0), values=(0.7, -1.3))
            mid = unvec(
                expm_scaled(vectorized_generator_k(model, 0.7) * 0.4)
                @ vec(rho),
                model.dim,
            )
            composed = characteristic_functional(
                model, mid, TestFunction.constant(-1.3, 0.6), a
            )
            delta2 = abs(
                characteristic_functional(model, rho, two, a) - composed
            )
            out.append(
                _result(
                    f"factorization[{name},a={a_name}]",
                    max(delta1, delta2),
                    1e-9,
                    split_vs_whole=delta1,
                    two_piece_vs_composed=delta2,
                )
            )
    return out


def check_martingale(
    n_traj: int = 10_000,
    dt: float = 1e-3,
    workers: int | None = None,
    seed: int = DEFAULT_SEED,
) -> list[CheckResult]:
    """E_Q[tr sigma_t] = 1 at t in {0.5, 1} on every fixture."""
    out = []
    grid = TimeGrid(t_max=1.0, dt=dt)
    half = round(0.5 / dt)
    for name, model in _fixture_models().items():
        ens = run_ensemble(
            model, np.eye(2, dtype=complex) / 2.0, grid, n_traj,
            derive_seed(seed, f"martingale-{name}"),
            mode=MODE_Q, snapshot_steps=(half, grid.n_steps),
            workers=workers, keep_states=False,
        )
        for j, t in enumerate((0.5, 1.0)):
            w = np.exp(ens.log_weight[:, j])
            mean, se = estimate_with_se(w)
            out.append(
                _result(
                    f"martingale[{name},t={t:g}]",
                    abs(mean - 1.0),
                    3.0 * se,
                    mean=mean,
                    se=se,
                    n_traj=n_traj,
                    dt=dt,
                )
            )
    return out


def check_gphi(
    n_traj: int = 10_000,
    dt: float = 1e-3,
    workers: int | None = None,
    seed: int = DEFAULT_SEED,
    models: Sequence[str] = ("decoupled", "diffusive-qubit", "counting-qubit"),
) -> list[CheckResult]:
    out = []
    rho = np.eye(2, dtype=complex) / 2.0
    fns = [
        TestFunction(breakpoints=(0.0, 0.5, 1.0), values=(0.0, 0.0)),
        TestFunction(breakpoints=(0.0, 0.5, 1.0), values=(1.0, 1.0)),
    ]
    observables = [("id", None), ("sz", pauli("z"))]
    for name in models:
        report = verify_gphi(
            load_preset(name), rho, fns, observables, n_traj,
            derive_seed(seed, f"gphi-{name}"), dt,
            workers=workers, model_label=name,
        )
        out.extend(report.checks)
    return out


def check_demixture(
    n_traj: int = 10_000,
    dt: float = 1e-3,
    workers: int | None = None,
    seed: int = DEFAULT_SEED,
) -> list[CheckResult]:
    """E_P[rho_t] equals the a priori state at t=1, entrywise."""
    out = []
    rho = np.eye(2, dtype=complex) / 2.0
    for name in ("diffusive-qubit", "counting-qubit"):
        model = load_preset(name)
        eta = propagate_master(model, rho, [1.0]).states[0]
        means = {}
        ses = {}
        for tag, d in (("dt", dt), ("half", dt / 2.0)):
            grid = TimeGrid(t_max=1.0, dt=d)
            ens = run_ensemble(
                model, rho, grid, n_traj,
                derive_seed(seed, f"demixture-{name}"),
                mode=MODE_P, snapshot_steps=(grid.n_steps,), workers=workers,
            )
            states = ens.states[:, 0]
            means[tag] = states.mean(axis=0)
            if tag == "dt":
                d2 = model.dim * model.dim
                flat = states.reshape(ens.n_traj, d2)
                se_flat = np.empty(d2)
                for e in range(d2):
                    _, se_re = estimate_with_se(
                        np.ascontiguousarray(flat[:, e].real)
                    )
                    _, se_im = estimate_with_se(
                        np.ascontiguousarray(flat[:, e].imag)
                    )
                    se_flat[e] = math.hypot(se_re, se_im)
                ses[tag] = se_flat.reshape(model.dim, model.dim)
        c_disc = 2.0 * np.abs(means["dt"] - means["half"]) / dt
        delta = np.abs(means["dt"] - eta)
        allow = 3.0 * ses["dt"] + c_disc * dt
        ratio = delta / np.where(allow > 0.0, allow, 1.0)
        ratio = np.where((allow == 0.0) & (delta > 0.0), np.inf, ratio)
        out.append(
            _result(
                f"demixture[{name},t=1]",
                float(ratio.max()),
                1.0,
                worst_delta=float(delta.max()),
                dt=dt,
                n_traj=n_traj,
            )
        )
    return out


def check_diffusive_term_oracle(
    n_states: int = 100, seed: int = DEFAULT_SEED
) -> list[CheckResult]:
    """Spectral form of the diffusive entropy term vs. adaptive quadrature."""
    out = []
    rng = np.random.Generator(np.random.Philox(seed + 7))
    for d in (2, 3, 4):
        worst = 0.0
        for _ in range(n_states):
            raw = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
            model = validate_model(
                {
                    "dim": d,
                    "H": np.zeros((d, d), dtype=complex),
                    "Ls": [],
                    "R": raw / math.sqrt(d),
                    "c": 0.0,
                    "r": 1.0,
                    "b": 1.0,
                    "channels": [],
                }
            )
            tau = random_density(d, rng)
            spectral = _d2_spectral(model, tau)
            quadrature = _d2_quadrature(model, tau)
            rel = abs(spectral - quadrature) / max(
                abs(spectral), abs(quadrature), 1e-12
            )
            worst = max(worst, rel)
        out.append(
            _result(
                f"diffusive-term-oracle[d={d}]",
                worst,
                1e-6,
                n_states=n_states,
            )
        )
        # pure states give exactly zero
        worst_pure = 0.0
        for _ in range(10):
            v = rng.normal(size=d) + 1j * rng.normal(size=d)
            v /= np.linalg.norm(v)
            tau = np.outer(v, v.conj())
            raw = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
            model = validate_model(
                {
                    "dim": d,
                    "H": np.zeros((d, d), dtype=complex),
                    "Ls": [],
                    "R": raw / math.sqrt(d),
                    "c": 0.0,
                    "r": 1.0,
                    "b": 1.0,
                    "channels": [],
                }
            )
            worst_pure = max(worst_pure, abs(_d2_spectral(model, tau)))
        out.append(
            _result(f"diffusive-term-pure-zero[d={d}]", worst_pure, 1e-12)
        )
    return out


def check_rate_identities(
    n_traj: int = 10_000,
    dt: float = 1e-3,
    workers: int | None = None,
    seed: int = DEFAULT_SEED,
) -> list[CheckResult]:
    """Finite-difference entropy and purity rates vs. their term formulas.

    Both identities are checked at t=0.5 on the counting qubit from the
    maximally mixed state, sharing ensembles; the pure-state fixture must
    additionally stay pure along every path.
    """
    out = []
    model = load_preset("counting-qubit")
    rho = np.eye(2, dtype=complex) / 2.0
    t_lo, t_mid, t_hi = 0.45, 0.5, 0.55
    data = {}
    for tag, d in (("dt", dt), ("half", dt / 2.0)):
        grid = TimeGrid(t_max=t_hi, dt=d)
        steps = tuple(round(t / d) for t in (t_lo, t_mid, t_hi))
        ens = run_ensemble(
            model, rho, grid, n_traj,
            derive_seed(seed, "rate-identities"),
            mode=MODE_P, snapshot_steps=steps, workers=workers,
        )
        ent_lo = von_neumann_entropy_batch(ens.states[:, 0])
        ent_hi = von_neumann_entropy_batch(ens.states[:, 2])
        fd_entropy = estimate_with_se((ent_hi - ent_lo) / (t_hi - t_lo))
        rhs_entropy = entropy_rate_mean(model, ens.states[:, 1])

        tr2 = lambda s: np.einsum("bij,bji->b", s, s).real
        imp_lo = 1.0 - tr2(ens.states[:, 0])
        imp_hi = 1.0 - tr2(ens.states[:, 2])
        fd_purity = estimate_with_se((imp_hi - imp_lo) / (t_hi - t_lo))
        rates = purity_rates(model, ens.states[:, 1])
        data[tag] = {
            "entropy": (fd_entropy, rhs_entropy),
            "purity": (fd_purity, (rates.total, rates.total_se)),
        }

    for which in ("entropy", "purity"):
        (fd, fd_se), (rhs, rhs_se) = (
            data["dt"][which][0],
            data["dt"][which][1],
        )
        (fd_h, _), (rhs_h, _) = (
            data["half"][which][0],
            data["half"][which][1],
        )
        delta = abs(fd - rhs)
        c_disc = 2.0 * abs((fd - rhs) - (fd_h - rhs_h)) / dt
        se = combine_se(fd_se, rhs_se)
        out.append(
            _result(
                f"{which}-rate-identity[counting-qubit,t=0.5]",
                delta,
                3.0 * se + c_disc * dt,
                finite_difference=fd,
                term_formula=rhs,
                se=se,
                c_disc=c_disc,
                dt=dt,
                n_traj=n_traj,
            )
        )

    plus = np.array([[0.5, 0.5], [0.5, 0.5]], dtype=complex)
    grid = TimeGrid(t_max=1.0, dt=dt)
    ens = run_ensemble(
        load_preset("diffusive-qubit"), plus, grid, n_traj,
        derive_seed(seed, "purity-preservation"),
        mode=MODE_P, snapshot_steps=(grid.n_steps,), workers=workers,
        keep_states=False,
    )
    out.append(
        _result(
            "purity-preservation[diffusive-qubit,pure]",
            float(ens.max_impurity.max()),
            1e-4,
            n_traj=n_traj,
            dt=dt,
        )
    )
    return out


def check_classical_entropies(
    n_traj: int = 10_000,
    dt: float = 1e-3,
    workers: int | None = None,
    seed: int = DEFAULT_SEED,
) -> list[CheckResult]:
    """Output-law relative entropies: integrated rate, monotonicity, bound."""
    out = []
    rho = np.eye(2, dtype=complex) / 2.0
    grid = TimeGrid(t_max=1.0, dt=dt)
    snap_times = np.linspace(0.0, 1.0, 21)
    steps = tuple(round(t / dt) for t in snap_times)

    for name in ("diffusive-qubit", "counting-qubit"):
        model = load_preset(name)
        ens = run_ensemble(
            model, rho, grid, n_traj,
            derive_seed(seed, f"classical-q-{name}"),
            mode=MODE_P, snapshot_steps=steps, workers=workers,
        )
        lhs, lhs_se = estimate_with_se(ens.log_weight[:, -1])
        rate_mean = np.empty(len(steps))
        rate_se = np.empty(len(steps))
        for j in range(len(steps)):
            rate_mean[j], rate_se[j] = classical_rel_entropy_rate_q(
                model, ens.states[:, j]
            )
        rhs = float(np.trapezoid(rate_mean, ens.times))
        spacing = float(ens.times[1] - ens.times[0])
        rhs_se = float(np.sum(rate_se) * spacing)  # correlated, conservative
        out.append(
            _result(
                f"classical-relent-integrated-rate[{name}]",
                abs(lhs - rhs),
                3.0 * combine_se(lhs_se, rhs_se),
                log_weight_mean=lhs,
                integrated_rate=rhs,
                n_traj=n_traj,
                dt=dt,
            )
        )

    model = load_preset("diffusive-qubit")
    plus = np.array([[0.5, 0.5], [0.5, 0.5]], dtype=complex)
    ens = run_ensemble(
        model, plus, grid, n_traj,
        derive_seed(seed, "classical-pair"),
        mode=MODE_COUPLED, snapshot_steps=steps, rho_den=rho,
        workers=workers, keep_states=False,
    )
    diff = ens.log_weight - ens.log_weight_den
    values = diff.mean(axis=0)
    worst_drop = 0.0
    for j in range(len(steps) - 1):
        step_mean, step_se = estimate_with_se(diff[:, j + 1] - diff[:, j])
        worst_drop = max(worst_drop, -(step_mean + 2.0 * step_se))
    out.append(
        _result(
            "classical-relent-pair-monotone[diffusive-qubit]",
            worst_drop,
            0.0,
            n_traj=n_traj,
        )
    )
    bound = quantum_relative_entropy(plus, rho)
    worst_excess = -math.inf
    for j in range(len(steps)):
        mean, se = estimate_with_se(diff[:, j])
        worst_excess = max(worst_excess, mean - (bound + 3.0 * se))
    out.append(
        _result(
            "classical-relent-pair-bound[diffusive-qubit]",
            worst_excess,
            0.0,
            bound=bound,
            final_value=float(values[-1]),
        )
    )
    return out


def check_mutual_entropy(
    n_traj: int = 10_000,
    dt: float = 1e-3,
    workers: int | None = None,
    seed: int = DEFAULT_SEED,
) -> list[CheckResult]:
    out = []
    model = load_preset("diffusive-qubit")
    rho = np.eye(2, dtype=complex) / 2.0
    decomp = shatten_decompose(rho)
    mc = McConfig(
        n_traj=n_traj, dt=dt,
        master_seed=derive_seed(seed, "mutual-entropy"), workers=workers,
    )

    rep0 = mutual_entropy_report(model, rho, decomp, 0.0, mc)
    s0 = rep0.s_q_initial
    worst = max(
        abs(rep0.s_sigma_pi[0] - s0),
        abs(rep0.s_sigma_pi_1[0] - s0),
        abs(rep0.s_sigma_pi_2[0] - s0),
        abs(rep0.s_pi_3 - s0),
        abs(rep0.s_sigma_pi_3[0]),
        abs(rep0.s_pi_1[0]),
        abs(rep0.s_pi_2[0]),
    )
    out.append(_result("mutual-entropy-initial-block", worst, 1e-10))

    rep = mutual_entropy_report(model, rho, decomp, 1.0, mc)
    for i, (res, res_se) in enumerate(rep.chain_residuals, start=1):
        out.append(
            _result(
                f"mutual-entropy-chain-residual[{i}]",
                abs(res),
                3.0 * res_se,
                residual=res,
                se=res_se,
                n_traj=n_traj,
            )
        )

    # deterministic monotonicity of the demixture product term
    etas = propagate_master(model, rho, np.linspace(0.0, 1.0, 11).tolist())
    comps = [
        propagate_master(model, p, np.linspace(0.0, 1.0, 11).tolist())
        for p in decomp.states
    ]
    series = [
        sum(
            w * quantum_relative_entropy(comp.states[j], etas.states[j])
            for w, comp in zip(decomp.weights, comps)
        )
        for j in range(11)
    ]
    worst_rise = max(
        (series[j + 1] - series[j] for j in range(10)), default=0.0
    )
    out.append(
        _result(
            "mutual-entropy-product-term-monotone",
            worst_rise,
            1e-9,
            values=[float(v) for v in series],
        )
    )

    lo = rep.s_pi_2[0] + 3.0 * rep.s_pi_2[1]
    hi = rep.s_pi_2[0] - 3.0 * rep.s_pi_2[1]
    worst_bound = max(-lo, hi - rep.s_q_initial)
    out.append(
        _result(
            "mutual-entropy-state-term-bounds",
            worst_bound,
            0.0,
            value=rep.s_pi_2[0],
            se=rep.s_pi_2[1],
            entropy_bound=rep.s_q_initial,
        )
    )
    out.append(
        _result(
            "mutual-entropy-recheck-consistency",
            abs(rep.s_sigma_pi[0] - rep.s_sigma_pi_recheck[0]),
            3.0 * combine_se(rep.s_sigma_pi[1], rep.s_sigma_pi_recheck[1]),
        )
    )
    return out


def check_null_model(
    n_traj: int = 10_000,
    dt: float = 1e-3,
    workers: int | None = None,
    seed: int = DEFAULT_SEED,
) -> list[CheckResult]:
    """Informationless jumps must change nothing, exactly."""
    out = []
    model = load_preset("informationless-jumps")
    rho = np.diag([0.75, 0.25]).astype(complex)
    grid = TimeGrid(t_max=1.0, dt=dt)
    steps = tuple(round(t / dt) for t in (0.25, 0.5, 1.0))
    worst_lw = 0.0
    worst_state = 0.0
    for mode in (MODE_Q, MODE_P):
        ens = run_ensemble(
            model, rho, grid, n_traj,
            derive_seed(seed, f"null-{mode}"),
            mode=mode, snapshot_steps=steps, workers=workers,
        )
        worst_lw = max(worst_lw, float(np.max(np.abs(ens.log_weight))))
        worst_state = max(
            worst_state, float(np.max(np.abs(ens.states - rho)))
        )
    out.append(_result("null-model-log-weight", worst_lw, 0.0))
    out.append(_result("null-model-frozen-state", worst_state, 0.0))

    mc = McConfig(
        n_traj=max(64, n_traj // 16), dt=dt,
        master_seed=derive_seed(seed, "null-report"), workers=workers,
    )
    rep = mutual_entropy_report(model, rho, None, 0.5, mc)
    out.append(
        _result(
            "null-model-information",
            max(abs(rep.i_p_q[0]), abs(rep.s_pi_2[0])),
            0.0,
        )
    )
    return out


def check_reproducibility(
    n_traj: int = 10_000,
    dt: float = 1e-3,
    seed: int = DEFAULT_SEED,
    worker_counts: Sequence[int] = (1, 4, 8),
) -> list[CheckResult]:
    """Worker count must not change any output byte."""
    out = []
    grid = TimeGrid(t_max=1.0, dt=dt)
    steps = tuple(round(t / dt) for t in (0.5, 1.0))
    configs = [
        (
            "counting-qubit-p",
            load_preset("counting-qubit"),
            np.eye(2, dtype=complex) / 2.0,
            MODE_P,
            None,
        ),
        (
            "diffusive-qubit-coupled",
            load_preset("diffusive-qubit"),
            np.array([[0.5, 0.5], [0.5, 0.5]], dtype=complex),
            MODE_COUPLED,
            np.eye(2, dtype=complex) / 2.0,
        ),
    ]
    for label, model, rho, mode, den in configs:
        baseline = None
        mismatches = 0
        for w in worker_counts:
            ens = run_ensemble(
                model, rho, grid, n_traj,
                derive_seed(seed, f"repro-{label}"),
                mode=mode, snapshot_steps=steps, rho_den=den, workers=w,
            )
            blob = b"".join(
                arr.tobytes()
                for arr in (
                    ens.log_weight, ens.y, ens.jump_counts, ens.states,
                    ens.max_impurity,
                )
                if arr is not None
            )
            if ens.log_weight_den is not None:
                blob += ens.log_weight_den.tobytes()
                blob += ens.states_den.tobytes()
            if baseline is None:
                baseline = blob
            elif blob != baseline:
                mismatches += 1
        out.append(
            _result(
                f"reproducibility[{label}]",
                float(mismatches),
                0.0,
                worker_counts=list(worker_counts),
                n_traj=n_traj,
            )
        )
    return out


def check_estimator_examples(seed: int = DEFAULT_SEED) -> list[CheckResult]:
    out = []
    mean, se = estimate_with_se(np.array([1.0, 1.0, 1.0, 1.0]))
    out.append(
        _result("estimator-constant", max(abs(mean - 1.0), abs(se)), 0.0)
    )
    mean, se = estimate_with_se(np.array([0.0, 2.0]))
    out.append(
        _result(
            "estimator-two-point", max(abs(mean - 1.0), abs(se - 1.0)), 1e-15
        )
    )
    rng = np.random.Generator(np.random.Philox(seed + 11))
    draws = rng.standard_normal(1_000_000)
    mean, se = estimate_with_se(draws)
    out.append(
        _result("estimator-normal-mean", abs(mean), 3.0 * se, se=se)
    )
    try:
        estimate_with_se(np.array([1.0]))
        failed = 1.0
    except TooFewSamples:
        failed = 0.0
    out.append(_result("estimator-rejects-singletons", failed, 0.0))
    return out


def check_model_validation() -> list[CheckResult]:
    bad = {
        "dim": 2,
        "H": np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex),
        "Ls": [],
        "R": np.zeros((2, 2), dtype=complex),
        "c": 0.0,
        "r": 0.0,
        "b": 1.0,
        "channels": [],
    }
    try:
        validate_model(bad)
        caught = 1.0
    except NonHermitianH:
        caught = 0.0
    return [_result("validation-rejects-non-hermitian", caught, 0.0)]


def check_gain_loss_signs(
    n_traj: int = 4000,
    dt: float = 1e-3,
    workers: int | None = None,
    seed: int = DEFAULT_SEED,
) -> list[CheckResult]:
    """Sign diagnostic for the two competing relative-entropy contributions."""
    model = load_preset("diffusive-qubit")
    rho = np.eye(2, dtype=complex) / 2.0
    t, delta_t = 0.5, 0.05
    grid = TimeGrid(t_max=t + delta_t, dt=dt)
    steps = (round(t / dt), grid.n_steps)
    ens = run_ensemble(
        model, rho, grid, n_traj, derive_seed(seed, "gain-loss"),
        mode=MODE_P, snapshot_steps=steps, workers=workers,
    )
    eta_t = propagate_master(model, rho, [t]).states[0]
    split = information_gain_loss(
        model, ens.states[:, 0], ens.states[:, 1], eta_t, delta_t
    )
    worst = 0.0
    if abs(split.gain[0]) > 3.0 * split.gain[1]:
        worst = max(worst, -split.gain[0])
    if abs(split.loss[0]) > 3.0 * split.loss[1]:
        worst = max(worst, split.loss[0])
    return [
        _result(
            "information-gain-loss-signs",
            worst,
            0.0,
            gain=split.gain[0],
            gain_se=split.gain[1],
            loss=split.loss[0],
            loss_se=split.loss[1],
        )
    ]


def self_test_suite(
    scale: str = "quick",
    workers: int | None = None,
    seed: int = DEFAULT_SEED,
) -> VerificationReport:
    """Bundle the registered invariant checks at the chosen scale."""
    t0 = time.monotonic()
    checks: list[CheckResult] = []
    if scale == "quick":
        checks += check_generator_consistency(n_random=25, seed=seed)
        checks += check_semigroup(seed=seed)
        checks += check_factorization()
        checks += check_diffusive_term_oracle(n_states=10, seed=seed)
        checks += check_estimator_examples(seed=seed)
        checks += check_model_validation()
        checks += check_martingale(512, 2e-3, workers=workers, seed=seed)
        checks += check_gphi(
            512, 2e-3, workers=workers, seed=seed, models=("decoupled",)
        )
        checks += check_null_model(256, 2e-3, workers=workers, seed=seed)
        checks += check_reproducibility(
            4196, 4e-3, seed=seed, worker_counts=(1, 4)
        )
    elif scale == "full":
        checks += check_generator_consistency(n_random=100, seed=seed)
        checks += check_semigroup(seed=seed)
        checks += check_factorization()
        checks += check_martingale(10_000, 1e-3, workers=workers, seed=seed)
        checks += check_gphi(10_000, 1e-3, workers=workers, seed=seed)
        checks += check_demixture(10_000, 1e-3, workers=workers, seed=seed)
        checks += check_diffusive_term_oracle(n_states=100, seed=seed)
        checks += check_rate_identities(10_000, 1e-3, workers=workers, seed=seed)
        checks += check_classical_entropies(
            10_000, 1e-3, workers=workers, seed=seed
        )
        checks += check_mutual_entropy(10_000, 1e-3, workers=workers, seed=seed)
        checks += check_null_model(10_000, 1e-3, workers=workers, seed=seed)
        checks += check_reproducibility(10_000, 1e-3, seed=seed)
        checks += check_estimator_examples(seed=seed)
        checks += check_model_validation()
        checks += check_gain_loss_signs(4000, 1e-3, workers=workers, seed=seed)
    else:
        raise BadShape(f"scale must be 'quick' or 'full', got {scale!r}")
    return VerificationReport(
        checks=tuple(checks), elapsed_seconds=time.monotonic() - t0
    )
