"""Localized spectral measures of unitaries and the estimates built on them.

The measure of u localized to a subspace V puts mass |p v_k|^2 / dim V on the
eigenphase of each eigenvector v_k, where p is the projection onto V.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, PreconditionError, StructuralError
from .linalg import (
    BOUND_SLACK,
    ProjectionRep,
    as_frame,
    check_unitary,
    hs_norm,
    max_offdiag,
    phases_from_eigenvalues,
    unitary_eigendecomposition,
)
from .torus import AtomicTorusMeasure, bin_index, ds_n, in_intervals


@dataclass(frozen=True)
class Eigen:
    """Cached eigendecomposition: phases in [0, 1) and orthonormal eigenvectors."""

    phases: np.ndarray
    vectors: np.ndarray

    @classmethod
    def of(cls, u) -> "Eigen":
        return cls(*unitary_eigendecomposition(u))

    @property
    def dim(self) -> int:
        return self.phases.size

    def power(self, k: int) -> "Eigen":
        """Eigenstructure of u^k from that of u."""
        ph = np.mod(self.phases * k, 1.0)
        ph[ph >= 1.0 - 1e-14] = 0.0
        return Eigen(ph, self.vectors)


def eigenphases(u) -> np.ndarray:
    """Sorted eigenphases only, without eigenvectors.

    Eigenvalues of the Hermitian Cayley transform x_k = tan(pi (theta_k + r))
    of a rotated copy of u give theta_k back through an arctangent.
    """
    u = check_unitary(u)
    d = u.shape[0]
    rot = 0.3819660112501051
    w = np.exp(2j * np.pi * rot) * u
    eye = np.eye(d)
    try:
        h = 1j * np.linalg.solve((eye + w).T, (eye - w).T).T
        x = np.linalg.eigvalsh((h + h.conj().T) / 2)
        ok = np.all(np.isfinite(x))
    except np.linalg.LinAlgError:
        ok = False
    if ok:
        lam = np.exp(2j * (np.arctan(x) - np.pi * rot))
    else:
        lam = np.linalg.eigvals(u)
    return np.sort(phases_from_eigenvalues(lam / np.abs(lam)), kind="stable")


@dataclass(frozen=True)
class LocalizedSpectralMeasure:
    measure: AtomicTorusMeasure
    source_dim: int
    subspace_rank: int

    def ds(self, N: int) -> float:
        return ds_n(self.measure, N)

    def to_dict(self) -> dict:
        out = self.measure.to_dict()
        out.update({"d": self.source_dim, "rank": self.subspace_rank})
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _subspace_frame(V, d):
    """Orthonormal frame for V given as a ProjectionRep, a frame or a vector."""
    if isinstance(V, ProjectionRep):
        b = V.basis
    else:
        x = as_frame(V)
        if x.shape[1] == 1:
            nrm = np.linalg.norm(x)
            if nrm == 0:
                raise DomainError("zero subspace")
            b = x / nrm
        else:
            b = ProjectionRep.from_span(x).basis
    if b.shape[0] != d:
        raise StructuralError(f"subspace lives in dimension {b.shape[0]}, operator in {d}")
    if b.shape[1] == 0:
        raise DomainError("zero subspace")
    return b


def spectral_masses(eig: Eigen, V) -> np.ndarray:
    """Masses |p v_k|^2 / rank for each eigenvector, in eigen order."""
    b = _subspace_frame(V, eig.dim)
    coeff = eig.vectors.conj().T @ b
    return np.sum(np.abs(coeff) ** 2, axis=1) / b.shape[1]


def localized_spectral_measure(u, V, eig: Eigen | None = None) -> LocalizedSpectralMeasure:
    if eig is None:
        eig = Eigen.of(u)
    m = spectral_masses(eig, V)
    rank = _subspace_frame(V, eig.dim).shape[1]
    total = math.fsum(m)
    if abs(total - 1.0) > 1e-10:
        raise DomainError(f"localized masses sum to {total}")
    return LocalizedSpectralMeasure(AtomicTorusMeasure(eig.phases, m / total), eig.dim, rank)


def localized_ds(eig: Eigen, V, N: int) -> float:
    """DS_N of the localized measure without building the measure object."""
    m = spectral_masses(eig, V)
    bins = np.bincount(_bins(eig, N), weights=m / m.sum(), minlength=N)
    return float(np.sum(np.abs(bins - 1.0 / N)))


def _bins(eig, N):
    return bin_index(eig.phases, N)


def vector_ds_many(eig: Eigen, xs, N: int) -> np.ndarray:
    """DS_N of the measure localized to each column of xs, vectorized."""
    x = as_frame(xs)
    return ds_from_coords(eig, eig.vectors.conj().T @ x, N)


def ds_from_coords(eig: Eigen, coords, N: int) -> np.ndarray:
    """Like ``vector_ds_many`` with the eigenbasis coordinates already computed."""
    w = np.abs(coords) ** 2
    w /= np.sum(w, axis=0, keepdims=True)
    idx = _bins(eig, N)
    onehot = np.zeros((N, eig.dim))
    onehot[idx, np.arange(eig.dim)] = 1.0
    return np.sum(np.abs(onehot @ w - 1.0 / N), axis=0)


def _as_proj(p, d=None):
    if isinstance(p, ProjectionRep):
        return p
    return ProjectionRep.from_span(p)


def trace_vs_ds_check(u, p, N: int, eig: Eigen | None = None):
    """(|tr(pu)| / tr(p), DS_N(S_u(p)) + 2/N)."""
    p = _as_proj(p)
    if p.rank == 0:
        raise DomainError("projection must be nonzero")
    u = np.asarray(u, dtype=complex)
    b = p.basis
    lhs = abs(np.trace(b.conj().T @ u @ b)) / p.rank
    rhs = localized_spectral_measure(u, p, eig).ds(N) + 2.0 / N
    return float(lhs), float(rhs)


def interval_projection_mass(u, p, E, eig: Eigen | None = None) -> float:
    """Mass that the measure localized to p gives to a union of arcs E."""
    p = _as_proj(p)
    if p.rank == 0:
        raise DomainError("projection must be nonzero")
    mu = localized_spectral_measure(u, p, eig).measure
    return mu.measure_of(E)


def interval_vector_mass(u, xi, E, eig: Eigen | None = None) -> float:
    """Mass that the measure localized to a single vector gives to E."""
    return localized_spectral_measure(u, np.asarray(xi), eig).measure.measure_of(E)


def spectral_projection(u, E, eig: Eigen | None = None) -> ProjectionRep:
    """Projection onto the eigenvectors whose phases lie in E."""
    if eig is None:
        eig = Eigen.of(u)
    mask = in_intervals(eig.phases, E)
    return ProjectionRep(eig.vectors[:, mask])


def erdos_turan_bound(fourier_abs, M: int, N: int) -> float:
    """N times the Erdős–Turán discrepancy bound with explicit constants.

    With D = 6/(M+1) + (4/pi) sum_{k<=M} (1/k - 1/(M+1)) |mu^(k)| bounding the
    largest interval discrepancy, every arc mass is within D of 1/N, so
    DS_N <= N D.
    """
    k = np.arange(1, M + 1)
    a = np.asarray(fourier_abs, dtype=float)[:M]
    D = 6.0 / (M + 1) + 4.0 / np.pi * float(np.sum((1.0 / k - 1.0 / (M + 1)) * a))
    return N * D


def ds_power_trace_bound(u, M: int, N: int, phases=None):
    """(exact DS_N of the eigenvalue distribution, bound from |tr(u^k)|/d for k <= M)."""
    if M < 1:
        raise DomainError("M must be at least 1")
    ph = eigenphases(u) if phases is None else np.asarray(phases)
    d = ph.size
    mu = AtomicTorusMeasure(ph, np.full(d, 1.0 / d))
    lam = np.exp(2j * np.pi * ph)
    k = np.arange(1, M + 1)
    power_traces = np.abs(np.sum(lam[None, :] ** k[:, None], axis=1)) / d
    return ds_n(mu, N), erdos_turan_bound(power_traces, M, N)


def span_ds_bound(u, xs, eta: float, N: int, eig: Eigen | None = None):
    """(DS_N of the span, mean single-vector DS_N + 2 eta n)."""
    x = as_frame(xs)
    n = x.shape[1]
    if n == 0:
        raise DomainError("need at least one vector")
    ov = max_offdiag(x.conj().T @ x)
    fails = {}
    if ov > eta + BOUND_SLACK:
        fails["pairwise_overlap"] = (ov, float(eta))
    if eta > 1.0 / n + BOUND_SLACK:
        fails["eta_le_inv_n"] = (float(eta), 1.0 / n)
    if fails:
        raise PreconditionError("span bound preconditions fail", fails)
    if eig is None:
        eig = Eigen.of(u)
    lhs = localized_ds(eig, ProjectionRep.from_span(x), N)
    rhs = float(np.mean(vector_ds_many(eig, x, N))) + 2 * eta * n
    return float(lhs), float(rhs)


def persist_hypotheses(p, xs, delta) -> dict:
    p = _as_proj(p)
    x = as_frame(xs)
    n = x.shape[1]
    fails = {}
    if n and 2 * delta > 1.0 / n + BOUND_SLACK:
        fails["two_delta_le_inv_n"] = (2 * float(delta), 1.0 / n)
    if p.rank > p.dim / 2:
        fails["trace_le_half_dim"] = (float(p.rank), p.dim / 2)
    if n:
        pn = float(np.max(np.linalg.norm(p.apply(x), axis=0)))
        if pn > 0.1 + BOUND_SLACK:
            fails["projection_norm"] = (pn, 0.1)
        ov = max_offdiag(p.complement_apply(x).conj().T @ x)
        if ov > delta + BOUND_SLACK:
            fails["complement_overlap"] = (ov, float(delta))
    return fails


def persist_bound(u, p, xs, delta: float, N: int, eig: Eigen | None = None):
    """DS_N of the complement after adding vectors, against its bound.

    lhs is DS_N(S_u(I - q)) with q the projection onto pH + span(xs);
    rhs is (1 + 4n/d)(DS_N(S_u(I-p)) + (2/d)(4 delta n^2 + sum_k DS_N(S_u((I-p)x_k)))).
    """
    p = _as_proj(p)
    x = as_frame(xs) if np.asarray(xs).size else np.zeros((p.dim, 0), complex)
    n = x.shape[1]
    d = p.dim
    fails = persist_hypotheses(p, x, delta)
    if fails:
        raise PreconditionError("persistence hypotheses fail", fails)
    if eig is None:
        eig = Eigen.of(u)
    comp_p = p.complement()
    base = localized_ds(eig, comp_p, N)
    if n == 0:
        return float(base), float(base)
    resid = p.complement_apply(x)
    q = ProjectionRep.from_span(np.concatenate([p.basis, resid], axis=1))
    lhs = localized_ds(eig, q.complement(), N)
    per_vec = float(np.sum(vector_ds_many(eig, resid, N)))
    rhs = (1 + 4 * n / d) * (base + 2.0 / d * (4 * delta * n * n + per_vec))
    return float(lhs), float(rhs)


def subtraction_ds_bound(u, V, W, N: int, eig: Eigen | None = None):
    """For W inside V: (DS_N of V minus W, (DS_N(V) + c DS_N(W)) / (1 - c)) with c = dim W / dim V."""
    if eig is None:
        eig = Eigen.of(u)
    V = _as_proj(V)
    W = _as_proj(W)
    if not W.rank < V.rank:
        raise DomainError("W must be a proper subspace of V")
    leak = hs_norm(V.complement_apply(W.basis))
    if leak > 1e-8:
        raise DomainError(f"W is not contained in V (leakage {leak:.3e})")
    diff = ProjectionRep.from_span(V.basis - W.apply(V.basis))
    c = W.rank / V.rank
    lhs = localized_ds(eig, diff, N)
    rhs = (localized_ds(eig, V, N) + c * localized_ds(eig, W, N)) / (1 - c)
    return float(lhs), float(rhs)
