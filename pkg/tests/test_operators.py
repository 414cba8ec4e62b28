import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contmeas.errors import NonHermitian, NotPSD, ZeroTrace
from contmeas.operators import (
    expm_scaled,
    herm_defect,
    matrix_function_on_support,
    pauli,
    project_to_density,
    random_density,
    random_hermitian,
    require_density,
    require_hermitian,
    spectral_decompose,
    trace_norm,
    unvec,
    vec,
    vectorize_superoperator,
)
from oracles import taylor_expm


def test_herm_defect_and_require():
    assert herm_defect(np.eye(2)) == 0.0
    skew = np.array([[0.0, 1.0], [-1.0, 0.0]])
    assert herm_defect(skew) > 0.5
    with pytest.raises(NonHermitian):
        require_hermitian(skew)
    require_hermitian(np.eye(2) + 1e-13 * skew)  # within tolerance


def test_require_density_invariants():
    require_density(np.eye(2) / 2)
    with pytest.raises(NotPSD):
        require_density(np.diag([1.5, -0.5]))
    with pytest.raises(ZeroTrace):
        require_density(np.eye(2))


def test_trace_norm_matches_eigenvalues(rng):
    h = random_hermitian(4, rng)
    assert trace_norm(h) == pytest.approx(np.abs(np.linalg.eigvalsh(h)).sum(), rel=1e-12)


def test_spectral_decompose_projectors(rng):
    h = random_hermitian(5, rng)
    parts = spectral_decompose(h)
    rebuilt = sum(lam * p for lam, p in parts)
    assert np.allclose(rebuilt, h, atol=1e-12)
    total = sum(p for _, p in parts)
    assert np.allclose(total, np.eye(5), atol=1e-12)
    for lam, p in parts:
        assert np.allclose(p @ p, p, atol=1e-12)
    for i, (_, p) in enumerate(parts):
        for _, q in parts[i + 1 :]:
            assert np.abs(p @ q).max() < 1e-12


def test_spectral_decompose_merges_degenerate():
    m = np.diag([1.0, 1.0 + 1e-12, 3.0])
    parts = spectral_decompose(m)
    assert len(parts) == 2
    assert int(round(np.trace(parts[0][1]).real)) == 2


def test_matrix_function_on_support():
    rho = np.diag([0.75, 0.25, 0.0]).astype(complex)
    root = matrix_function_on_support(rho, np.sqrt)
    assert np.allclose(root @ root, rho, atol=1e-14)
    # 0 ln 0 = 0: kernel eigenvalue never reaches f
    logr = matrix_function_on_support(rho, np.log)
    assert logr[2, 2] == 0.0
    with pytest.raises(NotPSD):
        matrix_function_on_support(np.diag([1.0, -1.0]), np.sqrt)


def test_expm_scaled_against_taylor(rng):
    a = (rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))) * 2.0
    assert np.allclose(expm_scaled(a), taylor_expm(a), atol=1e-11)


def test_vec_unvec_roundtrip(rng):
    x = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    assert np.array_equal(unvec(vec(x), 3), x)


def test_vectorize_superoperator_action(rng):
    a = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    b = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    s = vectorize_superoperator(lambda x: a @ x @ b, 3)
    x = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    assert np.allclose(unvec(s @ vec(x), 3), a @ x @ b, atol=1e-13)


def test_project_to_density_clips_and_flags():
    rho, severe = project_to_density(np.diag([1.0, -1e-9]))
    assert not severe
    assert np.trace(rho).real == pytest.approx(1.0, abs=1e-14)
    assert np.linalg.eigvalsh(rho).min() >= 0.0

    rho, severe = project_to_density(np.diag([1.0, -0.2]))
    assert severe
    with pytest.raises(ZeroTrace):
        project_to_density(np.zeros((2, 2)))


def test_pauli_algebra():
    sx, sy, sz = pauli("x"), pauli("y"), pauli("z")
    assert np.allclose(sx @ sy - sy @ sx, 2j * sz)
    assert np.allclose(sz @ sz, np.eye(2))
    minus = pauli("minus")
    # lowering maps the excited basis vector (index 0) to the ground one
    assert np.allclose(minus @ np.array([1.0, 0.0]), np.array([0.0, 1.0]))
    assert np.allclose(minus, np.array([[0, 0], [1, 0]]))


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1), st.integers(min_value=2, max_value=6))
def test_random_density_is_density(seed, dim):
    rho = random_density(dim, np.random.default_rng(seed))
    assert herm_defect(rho) < 1e-14
    assert np.trace(rho).real == pytest.approx(1.0, abs=1e-12)
    assert np.linalg.eigvalsh(rho).min() >= -1e-14
