import math

import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from soficize.errors import DomainError, StructuralError
from soficize.linalg import cyclic_shift, haar_unitary
from soficize.sphere import (
    ConcentrationReport, GridConfig, SeededSampler, concentration_experiment, concentration_grid,
    geodesic_distance, sample_unit_vector, trace_event_bound, trace_monte_carlo,
)


def test_unit_scalar_in_dimension_one():
    z = sample_unit_vector(1, SeededSampler(0))
    assert z.shape == (1,)
    assert abs(abs(z[0]) - 1) <= 1e-12


def test_dimension_zero_rejected():
    with pytest.raises(DomainError):
        sample_unit_vector(0, SeededSampler(0))


def test_replay_is_bit_identical():
    a = SeededSampler(42)
    b = SeededSampler(42)
    for _ in range(3):
        npt.assert_array_equal(a.draw(7), b.draw(7))
    c = SeededSampler(42, counter=1)
    npt.assert_array_equal(c.draw(7), SeededSampler(42).draw_batch(7, 2)[:, 1])


def test_batch_matches_sequential_draws():
    s = SeededSampler(3)
    batch = s.clone().draw_batch(5, 4)
    seq = np.stack([s.draw(5) for _ in range(4)], axis=1)
    npt.assert_array_equal(batch, seq)


def test_fork_streams_differ():
    s = SeededSampler(3)
    assert not np.allclose(s.fork(1).draw(8), s.fork(2).draw(8))


def test_first_coordinate_mass():
    d, n = 16, 10**5
    xs = SeededSampler(11).draw_batch(d, n)
    m = np.abs(xs[0]) ** 2
    # |<xi, e1>|^2 is Beta(1, d-1)
    sigma = math.sqrt((d - 1) / (d * d * (d + 1)) / n)
    assert abs(m.mean() - 1 / d) <= 3 * sigma


def test_norms_are_one():
    xs = SeededSampler(1).draw_batch(9, 50)
    npt.assert_allclose(np.linalg.norm(xs, axis=0), 1.0, atol=1e-12)


def test_geodesic_examples():
    e = np.eye(3, dtype=complex)
    assert geodesic_distance(e[0], e[0]) == 0.0
    assert geodesic_distance(e[0], e[1]) == pytest.approx(math.pi / 2)
    with pytest.raises(StructuralError):
        geodesic_distance(e[0], np.ones(2))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32))
def test_geodesic_dominates_chord(seed):
    s = SeededSampler(seed)
    x, y = s.draw(8), s.draw(8)
    assert geodesic_distance(x, y) >= np.linalg.norm(x - y) - 1e-12


def test_trace_monte_carlo_identity_exact():
    assert trace_monte_carlo(np.eye(6), 100, SeededSampler(0)) == pytest.approx(1.0, abs=1e-14)


def test_trace_monte_carlo_traceless():
    m = trace_monte_carlo(cyclic_shift(4), 10**4, SeededSampler(5))
    assert abs(m) <= 5 * 1 / 100


def test_trace_monte_carlo_diag():
    m = trace_monte_carlo(np.diag([2.0, 0.0]), 10**4, SeededSampler(6))
    assert abs(m - 1) <= 5 * 1 / 100


def test_trace_monte_carlo_needs_samples():
    with pytest.raises(DomainError):
        trace_monte_carlo(np.eye(2), 0, SeededSampler(0))


def test_concentration_zero_operator():
    rep = concentration_experiment(np.zeros((8, 8)), 0.01, 200, SeededSampler(0))
    assert rep.empirical_success == 1.0


def test_concentration_large_deviation():
    s = haar_unitary(8, np.random.default_rng(0))
    rep = concentration_experiment(s, 2.0, 500, SeededSampler(1))
    assert rep.empirical_success == 1.0


def test_concentration_d256():
    s = haar_unitary(256, np.random.default_rng(2))
    rep = concentration_experiment(s, 0.5, 2000, SeededSampler(2))
    assert rep.empirical_success >= rep.paper_bound
    assert rep.paper_bound == pytest.approx(trace_event_bound(256, 0.5, 1.0))


def test_concentration_norm_mode():
    s = haar_unitary(64, np.random.default_rng(3))
    rep = concentration_experiment(s, 0.3, 1000, SeededSampler(3), mode="norm")
    assert rep.passes()


def test_concentration_report_json():
    rep = ConcentrationReport(16, 100, 0.3, 0.9, 0.8)
    assert '"paper_bound": 0.8' in rep.to_json()
    assert rep.passes()


def test_grid_config_json():
    cfg = GridConfig.from_json('{"dims": [16], "cs": [0.5, 1.0], "n_samples": 200, "seed": 1}')
    reps = concentration_grid(cfg)
    assert [r.c for r in reps] == [0.5, 1.0]
    assert all(0 <= r.empirical_success <= 1 for r in reps)


def test_unitary_invariance_ks():
    d, n = 16, 10**4
    u = haar_unitary(d, np.random.default_rng(7))
    a = SeededSampler(100).draw_batch(d, n)
    b = SeededSampler(200).draw_batch(d, n)
    x = np.real(a[0])
    y = np.real((u @ b)[0])
    assert stats.ks_2samp(x, y).pvalue > 1e-3


def test_orthogonal_decorrelation():
    d, n = 8, 10**5
    xs = SeededSampler(9).draw_batch(d, n)
    q = haar_unitary(d, np.random.default_rng(9))
    eta, theta = q[:, 0], q[:, 1]
    prod = (eta.conj() @ xs) * np.conj(theta.conj() @ xs)
    assert abs(prod.mean()) <= 5 / math.sqrt(n)
