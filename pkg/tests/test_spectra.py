import math

import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings, strategies as st

from soficize.errors import DomainError, PreconditionError
from soficize.linalg import ProjectionRep, cyclic_shift, haar_unitary
from soficize.spectra import (
    Eigen, ds_power_trace_bound, eigenphases, interval_projection_mass, interval_vector_mass,
    localized_ds, localized_spectral_measure, persist_bound, span_ds_bound, spectral_projection,
    subtraction_ds_bound, trace_vs_ds_check, vector_ds_many,
)
from soficize.torus import AtomicTorusMeasure as Mu, mix, tv_distance

seeds = st.integers(0, 2**32)


def direct_eig_projection(u, a, b):
    """Projection onto eigenvectors with phase in [a, b), via numpy's general eig."""
    lam, V = np.linalg.eig(u)
    V /= np.linalg.norm(V, axis=0)
    ph = np.mod(np.angle(lam) / (2 * np.pi), 1.0)
    sel = V[:, (ph >= a) & (ph < b)]
    return sel @ sel.conj().T


def near_orthonormal(rng, d, n, scale):
    q = haar_unitary(d, rng)[:, :n]
    x = q + scale * (rng.standard_normal((d, n)) + 1j * rng.standard_normal((d, n))) / math.sqrt(2 * d)
    return x / np.linalg.norm(x, axis=0)


def test_localized_measure_examples():
    V = ProjectionRep(np.eye(5)[:, :2])
    mu = localized_spectral_measure(np.eye(5), V).measure.merged()
    npt.assert_allclose(mu.positions, [0.0])
    mu = localized_spectral_measure(np.diag([1.0, -1.0]), np.array([1.0, 0.0])).measure
    assert tv_distance(mu, Mu.point_mass(0.0)) <= 1e-12
    mu = localized_spectral_measure(cyclic_shift(4), ProjectionRep.full(4)).measure
    npt.assert_allclose(mu.positions, [0, 0.25, 0.5, 0.75], atol=1e-12)
    npt.assert_allclose(mu.masses, 0.25, atol=1e-12)


def test_zero_subspace():
    with pytest.raises(DomainError):
        localized_spectral_measure(np.eye(3), np.zeros(3))


def test_eigenphases_match_decomposition():
    u = haar_unitary(40, np.random.default_rng(0))
    npt.assert_allclose(eigenphases(u), Eigen.of(u).phases, atol=1e-10)


def test_power_reuses_vectors():
    u = haar_unitary(12, np.random.default_rng(1))
    e3 = Eigen.of(u).power(3)
    u3 = np.linalg.matrix_power(u, 3)
    npt.assert_allclose(u3 @ e3.vectors, e3.vectors * np.exp(2j * np.pi * e3.phases), atol=1e-10)


def test_trace_vs_ds_examples():
    lhs, rhs = trace_vs_ds_check(cyclic_shift(8), ProjectionRep.full(8), 4)
    assert lhs == pytest.approx(0, abs=1e-12)
    assert rhs == pytest.approx(0.5)
    lhs, rhs = trace_vs_ds_check(np.eye(6), ProjectionRep.full(6), 4)
    assert lhs == pytest.approx(1.0)
    assert rhs == pytest.approx(2.0)


def test_interval_mass_examples():
    rng = np.random.default_rng(2)
    u = haar_unitary(16, rng)
    p = ProjectionRep.from_span(rng.standard_normal((16, 3)))
    assert interval_projection_mass(u, p, [(0.0, 1.0)]) == pytest.approx(1.0)
    assert interval_projection_mass(u, p, []) == 0.0
    q = direct_eig_projection(u, 0.0, 0.5)
    direct = np.linalg.norm(q @ p.matrix()) ** 2 / 3
    assert abs(interval_projection_mass(u, p, [(0.0, 0.5)]) - direct) <= 1e-9


def test_interval_vector_mass():
    rng = np.random.default_rng(3)
    u = haar_unitary(16, rng)
    p = ProjectionRep.from_span(rng.standard_normal((16, 4)))
    xi = rng.standard_normal(16) + 1j * rng.standard_normal(16)
    pxi = p.apply(xi[:, None])[:, 0]
    q = direct_eig_projection(u, 0.2, 0.7)
    expected = np.linalg.norm(q @ pxi) ** 2 / np.linalg.norm(pxi) ** 2
    assert abs(interval_vector_mass(u, pxi, [(0.2, 0.7)]) - expected) <= 1e-9


def test_spectral_projection_commutes():
    u = haar_unitary(20, np.random.default_rng(4))
    q = spectral_projection(u, [(0.1, 0.4)]).matrix()
    npt.assert_allclose(q @ u, u @ q, atol=1e-10)


def test_power_trace_examples():
    ds, et = ds_power_trace_bound(cyclic_shift(16), 8, 4)
    assert ds == pytest.approx(0, abs=1e-12)
    ds, et = ds_power_trace_bound(np.eye(16), 8, 4)
    assert ds == pytest.approx(1.5)
    assert et >= ds
    ds, et = ds_power_trace_bound(haar_unitary(256, np.random.default_rng(5)), 32, 8)
    assert ds <= et


def test_span_bound_examples():
    rng = np.random.default_rng(6)
    u = haar_unitary(32, rng)
    q = haar_unitary(32, rng)[:, :4]
    lhs, rhs = span_ds_bound(u, q, 0.0, 6)
    assert lhs <= rhs + 1e-12
    x = q[:, :1]
    lhs, rhs = span_ds_bound(u, x, 0.0, 6)
    assert lhs == pytest.approx(vector_ds_many(Eigen.of(u), x, 6)[0])
    with pytest.raises(PreconditionError) as exc:
        span_ds_bound(u, np.stack([q[:, 0] + 0.3 * q[:, 1], q[:, 1]], axis=1), 0.01, 6)
    assert "pairwise_overlap" in exc.value.failures


def test_persist_examples():
    rng = np.random.default_rng(7)
    u = haar_unitary(64, rng)
    p = ProjectionRep.from_span(haar_unitary(64, rng)[:, :10])
    lhs, rhs = persist_bound(u, p, np.zeros((64, 0)), 0.1, 5)
    assert lhs == rhs
    with pytest.raises(PreconditionError) as exc:
        persist_bound(u, p, p.basis[:, :2], 0.1, 5)
    assert "projection_norm" in exc.value.failures


def test_subtraction_example():
    rng = np.random.default_rng(8)
    u = haar_unitary(32, rng)
    q = haar_unitary(32, rng)
    lhs, rhs = subtraction_ds_bound(u, q[:, :12], q[:, :4], 6)
    assert lhs <= rhs
    with pytest.raises(DomainError):
        subtraction_ds_bound(u, q[:, :4], q[:, 4:6], 6)


def test_measure_json():
    mu = localized_spectral_measure(cyclic_shift(4), ProjectionRep.full(4))
    assert '"rank": 4' in mu.to_json()


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(2, 32))
def test_mass_conservation(seed, d):
    rng = np.random.default_rng(seed)
    u = haar_unitary(d, rng)
    k = int(rng.integers(1, d + 1))
    p = ProjectionRep.from_span(rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k)))
    assert abs(localized_spectral_measure(u, p).measure.masses.sum() - 1) <= 1e-10


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(4, 32))
def test_direct_sum_mixing(seed, d):
    rng = np.random.default_rng(seed)
    u = haar_unitary(d, rng)
    q = haar_unitary(d, rng)
    k = int(rng.integers(1, d - 1))
    l = int(rng.integers(1, d - k + 1))
    V1, V2 = q[:, :k], q[:, k:k + l]
    eig = Eigen.of(u)
    whole = localized_spectral_measure(u, ProjectionRep(q[:, :k + l]), eig).measure
    parts = mix([localized_spectral_measure(u, ProjectionRep(V1), eig).measure,
                 localized_spectral_measure(u, ProjectionRep(V2), eig).measure], [k / (k + l), l / (k + l)])
    assert tv_distance(whole, parts) <= 1e-10


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(2, 32), st.floats(0.0, 1.0))
def test_tv_perturbation(seed, d, t):
    rng = np.random.default_rng(seed)
    u = haar_unitary(d, rng)
    eig = Eigen.of(u)
    x = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    y = x + t * (rng.standard_normal(d) + 1j * rng.standard_normal(d))
    x, y = x / np.linalg.norm(x), y / np.linalg.norm(y)
    mx = localized_spectral_measure(u, x, eig).measure
    my = localized_spectral_measure(u, y, eig).measure
    assert tv_distance(mx, my) <= 2 * np.linalg.norm(x - y) + 1e-12


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(4, 32), st.integers(1, 12))
def test_subtraction_property(seed, d, N):
    rng = np.random.default_rng(seed)
    u = haar_unitary(d, rng)
    q = haar_unitary(d, rng)
    k = int(rng.integers(2, d + 1))
    w = int(rng.integers(1, k))
    lhs, rhs = subtraction_ds_bound(u, q[:, :k], q[:, :w], N)
    assert lhs <= rhs + 1e-12


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(1, 12))
def test_trace_vs_ds_property(seed, N):
    rng = np.random.default_rng(seed)
    u = haar_unitary(32, rng)
    k = int(rng.integers(1, 33))
    p = ProjectionRep.from_span(rng.standard_normal((32, k)) + 1j * rng.standard_normal((32, k)))
    lhs, rhs = trace_vs_ds_check(u, p, N)
    assert lhs <= rhs + 1e-12


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(1, 4), st.integers(1, 12))
def test_span_bound_property(seed, n, N):
    rng = np.random.default_rng(seed)
    u = haar_unitary(64, rng)
    x = near_orthonormal(rng, 64, n, 0.5 / n)
    eta = float(np.max(np.abs(x.conj().T @ x - np.diag(np.diag(x.conj().T @ x))), initial=0.0))
    if eta > 1.0 / n:
        return
    lhs, rhs = span_ds_bound(u, x, eta, N)
    assert lhs <= rhs + 1e-12


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(1, 4), st.integers(1, 12))
def test_persist_property(seed, n, N):
    rng = np.random.default_rng(seed)
    d = 128
    u = haar_unitary(d, rng)
    q = haar_unitary(d, rng)
    k = int(rng.integers(0, 40))
    p = ProjectionRep(q[:, :k])
    c = near_orthonormal(rng, d - k, n, 0.2)
    x = q[:, k:] @ c
    if k:
        w = q[:, :k] @ (rng.standard_normal((k, n)) + 0j)
        x = math.sqrt(1 - 0.08**2) * x + 0.08 * w / np.linalg.norm(w, axis=0)
    delta = 1.0 / (2 * n)
    lhs, rhs = persist_bound(u, p, x, delta, N)
    assert lhs <= rhs + 1e-12
