import math
import os

import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings, strategies as st

from soficize.errors import DegeneracyError, DomainError, PreconditionError, ValidationError
from soficize.linalg import (
    ProjectionRep, check_linear_independence, complement_decompose, cyclic_shift, haar_unitary,
    hs_norm, load_matrix, lowdin_orthogonalize, norms, op_norm, orthonormality_defect,
    polar_unitary, random_hermitian, repair_block_unitary, save_matrix, unitary_eigendecomposition,
)

# G^{-1/2} for the 2-frame below, from scipy.linalg.sqrtm
LOWDIN_2FRAME = np.array([[0.9987460731103329, 0.050062775059818834],
                          [-0.050062775059818945, 0.9987460731103329]])


def test_norms_identity_and_shift():
    n = norms(np.eye(5))
    assert n.hs == pytest.approx(math.sqrt(5))
    assert n.op == pytest.approx(1.0)
    assert n.trace == pytest.approx(5)
    assert norms(cyclic_shift(6)).trace == 0
    assert norms(np.diag([3.0, -1.0])).op == pytest.approx(3.0)


def test_eigendecomposition_identity_and_cycle():
    ph, Z = unitary_eigendecomposition(np.eye(4))
    npt.assert_allclose(ph, 0, atol=1e-12)
    ph, Z = unitary_eigendecomposition(cyclic_shift(4))
    npt.assert_allclose(ph, [0, 0.25, 0.5, 0.75], atol=1e-12)
    npt.assert_allclose(Z.conj().T @ Z, np.eye(4), atol=1e-12)


def test_eigendecomposition_haar_residual():
    u = haar_unitary(32, np.random.default_rng(1))
    ph, Z = unitary_eigendecomposition(u)
    assert np.all(np.diff(ph) >= 0)
    assert op_norm(u @ Z - Z * np.exp(2j * np.pi * ph)) <= 1e-10


def test_eigendecomposition_rejects_non_unitary():
    with pytest.raises(ValidationError) as exc:
        unitary_eigendecomposition(np.diag([1.0, 1.1]))
    assert exc.value.args[0].startswith("matrix is not unitary")


def test_lowdin_orthonormal_input_unchanged():
    q = haar_unitary(8, np.random.default_rng(2))[:, :3]
    npt.assert_allclose(lowdin_orthogonalize(q, delta=0.0), q, atol=1e-12)


def test_lowdin_two_frame():
    x = np.array([[1, 0.1], [0, math.sqrt(0.99)]], dtype=complex)
    t = lowdin_orthogonalize(x, delta=0.1)
    npt.assert_allclose(t, LOWDIN_2FRAME, atol=1e-12)
    dev = np.linalg.norm(x - t, axis=0)
    assert np.all(dev <= 0.2)
    npt.assert_allclose(dev, 0.05007847620819408, atol=1e-12)


def test_lowdin_singular_gram():
    x = np.array([[1, 1], [0, 0]], dtype=complex)
    with pytest.raises(DegeneracyError):
        lowdin_orthogonalize(x)


def test_lowdin_precondition_names_overlap():
    x = np.array([[1, 0.6], [0, 0.8]], dtype=complex)
    with pytest.raises(PreconditionError) as exc:
        lowdin_orthogonalize(x, delta=0.1)
    assert "pairwise_overlap" in exc.value.failures


def test_linear_independence():
    assert check_linear_independence(np.eye(4))
    assert not check_linear_independence(np.array([[1, 1], [0, 0]]))
    # unit vectors with overlaps 0.2 < 1/4
    g = np.full((4, 4), 0.2) + 0.8 * np.eye(4)
    x = np.linalg.cholesky(g).conj().T
    assert check_linear_independence(x)


def _complement_instance(rng, d=64, rank=10, n=5, kappa=0.05, delta=0.01):
    q = haar_unitary(d, rng)
    p = ProjectionRep(q[:, :rank])
    comp = q[:, rank:]
    # nearly orthonormal complement parts plus a small leak into range(p)
    c = comp[:, :n] + 0.002 * comp[:, n:2 * n]
    c /= np.linalg.norm(c, axis=0)
    w = q[:, :rank] @ (rng.standard_normal((rank, n)) + 1j * rng.standard_normal((rank, n)))
    w /= np.linalg.norm(w, axis=0)
    a = 0.8 * kappa
    return p, math.sqrt(1 - a * a) * c + a * w


def test_complement_decompose_trivial_projection():
    rng = np.random.default_rng(3)
    q = haar_unitary(16, rng)[:, :3]
    x = q + 0.01 * q[:, ::-1]
    x /= np.linalg.norm(x, axis=0)
    phis, thetas = complement_decompose(ProjectionRep.zero(16), x, check=False)
    npt.assert_allclose(phis, x, atol=1e-14)
    npt.assert_allclose(thetas, lowdin_orthogonalize(x), atol=1e-12)


def test_complement_decompose_orthonormal_complement():
    q = haar_unitary(12, np.random.default_rng(4))
    p = ProjectionRep(q[:, :4])
    _, thetas = complement_decompose(p, q[:, 4:7], delta=0.01, kappa=0.05)
    npt.assert_allclose(thetas, q[:, 4:7], atol=1e-12)


def test_complement_decompose_random_instance():
    p, x = _complement_instance(np.random.default_rng(5))
    phis, thetas = complement_decompose(p, x, delta=0.01, kappa=0.05)
    assert orthonormality_defect(thetas) <= 1e-9
    assert hs_norm(p.apply(thetas)) <= 1e-10
    assert np.max(np.linalg.norm(phis - thetas, axis=0)) <= 2 * 0.01 * 5


def test_complement_decompose_preconditions():
    p, x = _complement_instance(np.random.default_rng(6), kappa=0.09)
    with pytest.raises(PreconditionError) as exc:
        complement_decompose(p, x, delta=0.01, kappa=0.01)
    assert "projection_norm" in exc.value.failures
    with pytest.raises(PreconditionError) as exc:
        complement_decompose(p, x, delta=0.01, kappa=0.2)
    assert "kappa_below_tenth" in exc.value.failures


def test_repair_block_diagonal_is_exact():
    rng = np.random.default_rng(7)
    a, b = haar_unitary(3, rng), haar_unitary(5, rng)
    u = np.zeros((8, 8), complex)
    u[:3, :3], u[3:, 3:] = a, b
    p = ProjectionRep(np.eye(8)[:, :3])
    v = repair_block_unitary(u, p, delta=0.0)
    npt.assert_allclose(v, p.matrix() @ u @ p.matrix(), atol=1e-12)


def test_repair_givens():
    phi, d = 0.3, 8
    u = np.eye(d, dtype=complex)
    u[:2, :2] = [[math.cos(phi), -math.sin(phi)], [math.sin(phi), math.cos(phi)]]
    p = ProjectionRep(np.eye(d)[:, :1])
    delta = math.sin(phi) ** 2 / d
    v = repair_block_unitary(u, p, delta=delta)
    err = hs_norm((u - v) @ p.matrix()) ** 2
    # polar factor of cos(phi) on span(e1) is 1
    assert err == pytest.approx(2 - 2 * math.cos(phi), abs=1e-12)
    assert err <= 4 * delta * d


def test_repair_full_projection_returns_u():
    u = haar_unitary(6, np.random.default_rng(8))
    npt.assert_allclose(repair_block_unitary(u, ProjectionRep.full(6), delta=0.0), u, atol=1e-12)


def test_repair_domain():
    with pytest.raises(DomainError):
        repair_block_unitary(np.eye(4), ProjectionRep.full(4), delta=0.5)


def test_polar_degenerate_counted():
    w = np.diag([1.0, 1e-15, 2.0])
    res = polar_unitary(w)
    assert res.n_degenerate == 1
    npt.assert_allclose(res.unitary.conj().T @ res.unitary, np.eye(3), atol=1e-12)


@pytest.mark.parametrize("binary", [False, True])
def test_matrix_round_trip(tmp_path, binary):
    m = haar_unitary(5, np.random.default_rng(9))
    path = os.path.join(tmp_path, "m.json")
    save_matrix(path, m, binary=binary)
    npt.assert_array_equal(load_matrix(path), m)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.integers(2, 24))
def test_hs_bi_invariance(seed, d):
    rng = np.random.default_rng(seed)
    a, b = haar_unitary(d, rng), haar_unitary(d, rng)
    s = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    assert abs(hs_norm(a @ s @ b) - hs_norm(s)) <= 1e-10 * max(1.0, hs_norm(s))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.integers(2, 16), st.integers(16, 128))
def test_lowdin_bound_property(seed, n, d):
    rng = np.random.default_rng(seed)
    delta = 1.0 / (2 * n)
    q = haar_unitary(d, rng)[:, :n]
    # perturb until overlaps are at most delta
    x = q + 0.5 * delta / math.sqrt(n) * (rng.standard_normal((d, n)) + 1j * rng.standard_normal((d, n))) / math.sqrt(2 * d)
    x /= np.linalg.norm(x, axis=0)
    t = lowdin_orthogonalize(x, delta=delta)
    assert orthonormality_defect(t) <= 1e-9
    assert np.max(np.linalg.norm(x - t, axis=0)) <= delta * n
    # same span
    assert hs_norm(x - t @ (t.conj().T @ x)) <= 1e-9


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.integers(4, 24), st.floats(0.0, 0.3))
def test_repair_property(seed, d, t):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, d))
    p = ProjectionRep(np.eye(d)[:, :k])
    u = haar_unitary(d, rng) if t == 0 else _blockish(d, k, t, rng)
    leak = hs_norm(p.complement_apply(u @ p.basis)) ** 2 / d
    if leak >= 0.5:
        return
    v = repair_block_unitary(u, p, delta=leak)
    P = p.matrix()
    assert hs_norm(P @ v - v @ P) <= 1e-9
    assert hs_norm(v.conj().T @ v - P) <= 1e-9
    assert hs_norm((u - v) @ P) ** 2 <= 4 * leak * d + 1e-9


def _blockish(d, k, t, rng):
    a, b = haar_unitary(k, rng), haar_unitary(d - k, rng)
    u = np.zeros((d, d), complex)
    u[:k, :k], u[k:, k:] = a, b
    w, q = np.linalg.eigh(random_hermitian(d, rng, 1.0))
    return u @ ((q * np.exp(1j * t * w)) @ q.conj().T)
