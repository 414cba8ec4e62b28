import numpy as np
import pytest

from contmeas.errors import BadShape
from contmeas.harness import (
    FUNCTIONALS,
    RunConfig,
    check_estimator_examples,
    check_factorization,
    check_generator_consistency,
    check_model_validation,
    check_semigroup,
    run_config,
    self_test_suite,
    verify_gphi,
)
from contmeas.semigroup import TestFunction
from contmeas.operators import pauli
from conftest import MIXED, PLUS, WORKERS


def test_run_config_validation(decoupled):
    with pytest.raises(BadShape):
        RunConfig(decoupled, MIXED, 1.0, 1e-3, 0, 1)
    with pytest.raises(BadShape):
        RunConfig(decoupled, MIXED, 1.0, 1e-3, 8, 1, outputs=("no-such",))
    with pytest.raises(BadShape):
        RunConfig(decoupled, MIXED, 1.0, 1e-3, 8, 1, snapshot_stride=0)
    assert set(RunConfig(decoupled, MIXED, 1.0, 1e-3, 8, 1).outputs) <= set(FUNCTIONALS)


def test_run_config_decoupled_signal_moments(decoupled):
    # E[Y] = c t and Var[Y] = r^2 t for the decoupled fixture
    cfg = RunConfig(
        decoupled, MIXED, 1.0, 1e-3, 4000, 101,
        outputs=("y", "y_squared", "weight"), snapshot_stride=250,
    )
    series, raw = run_config(cfg, workers=WORKERS)
    assert series.times[0] == 0.0 and series.times[-1] == pytest.approx(1.0)
    for j, t in enumerate(series.times):
        mean_y = series.means["y"][j]
        se_y = series.ses["y"][j]
        assert abs(mean_y - t) <= 3.0 * se_y + 1e-12
        var = series.means["y_squared"][j] - mean_y**2
        assert abs(var - t) <= 0.08  # loose, for the variance of the variance
    assert np.all(series.means["weight"] == 1.0)  # no system: weights exactly 1
    assert raw.n_traj == 4000


def test_run_config_snapshot_stride(counting_qubit):
    cfg = RunConfig(counting_qubit, MIXED, 0.1, 1e-3, 32, 7, mode="p",
                    outputs=("entropy", "jumps"), snapshot_stride=33)
    series, raw = run_config(cfg)
    # stride walks 0, 33, 66, 99 and the final step is always appended
    assert list(raw.snapshot_steps) == [0, 33, 66, 99, 100]
    assert series.means["entropy"].shape == (5,)
    assert series.means["jumps"][-1] >= series.means["jumps"][0]


def test_run_config_workers_do_not_change_results(diffusive_qubit):
    cfg = RunConfig(diffusive_qubit, PLUS, 0.05, 1e-3, 4100, 11, mode="q",
                    outputs=("weight", "y"), snapshot_stride=50)
    series_one, _ = run_config(cfg, workers=1)
    series_four, _ = run_config(cfg, workers=4)
    for key in ("weight", "y"):
        assert np.array_equal(series_one.means[key], series_four.means[key])
        assert np.array_equal(series_one.ses[key], series_four.ses[key])


def test_verify_gphi_decoupled_exact(decoupled):
    # for the decoupled fixture the weighted estimator is an exact identity
    # at k = 0 and within noise of exp(t(ik - k^2/2)) otherwise
    report = verify_gphi(
        decoupled, MIXED,
        [TestFunction.constant(0.0, 0.5), TestFunction.constant(1.0, 0.5)],
        [("id", None), ("z", pauli("z"))],
        n_traj=512, master_seed=3, dt=2e-3, model_label="decoupled",
    )
    assert report.passed
    names = [c.name for c in report.checks]
    assert len(names) == 4
    assert all("decoupled" in n for n in names)
    for c in report.checks:
        assert c.statistic <= c.threshold


def test_verify_gphi_piecewise(counting_qubit):
    fn = TestFunction(breakpoints=(0.0, 0.25, 0.5), values=(0.8, -1.1))
    report = verify_gphi(
        counting_qubit, MIXED, fn, [("id", None)],
        n_traj=2000, master_seed=9, dt=2e-3, model_label="counting",
    )
    assert report.passed
    # one check per breakpoint time past zero
    assert len(report.checks) == 2


def test_verify_gphi_off_grid_breakpoint(counting_qubit):
    fn = TestFunction(breakpoints=(0.0, 0.0003), values=(1.0,))
    with pytest.raises(BadShape):
        verify_gphi(counting_qubit, MIXED, fn, [("id", None)],
                    n_traj=8, master_seed=1, dt=2e-4)


def test_structural_checks_pass():
    for res in (
        check_generator_consistency(n_random=10, seed=77),
        check_semigroup(seed=77),
        check_factorization(),
        check_estimator_examples(seed=77),
        check_model_validation(),
    ):
        for c in res:
            assert c.passed, f"{c.name}: {c.statistic} > {c.threshold}"


def test_quick_self_test_suite():
    report = self_test_suite("quick", workers=WORKERS, seed=20240817)
    failed = [c.name for c in report.checks if not c.passed]
    assert report.passed, f"failing checks: {failed}"
    assert len(report.checks) > 40
    d = report.to_dict()
    assert d["passed"] is True
    assert len(d["checks"]) == len(report.checks)


def test_self_test_suite_rejects_unknown_scale():
    with pytest.raises(BadShape):
        self_test_suite("medium")
