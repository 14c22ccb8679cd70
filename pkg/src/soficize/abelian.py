"""Eigenvalue rounding: the Fourier route from a unitary to a cyclic permutation.

Sorted eigenphases of u are matched in order to the d-th roots of unity,
up to the best cyclic offset. The rounded unitary has u's eigenvectors and
is a single d-cycle in the Fourier transform of its eigenbasis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import OracleDeclined
from .group import as_element
from .linalg import UNITARY_TOL, check_unitary, hs_norm
from .sofication.approx import SoficApprox, SoficInducedApprox
from .spectra import Eigen


@dataclass(frozen=True)
class RoundingPlan:
    """Sorted eigenphase j goes to target (j + offset) mod d, i.e. phase target[j] / d."""

    phases: np.ndarray
    target: np.ndarray
    offset: int
    cost: float

    def __post_init__(self):
        d = self.phases.size
        if not np.array_equal(np.sort(self.target), np.arange(d)):
            raise ValueError("rounding targets are not a bijection onto Z/d")

    @property
    def dim(self) -> int:
        return self.phases.size

    @property
    def cycle_type(self) -> tuple:
        return (self.dim,)

    def to_dict(self) -> dict:
        return {"dim": self.dim, "offset": self.offset, "cost": self.cost, "cycle_type": list(self.cycle_type)}


def rounding_plan(phases) -> RoundingPlan:
    """Best cyclic offset for the order-preserving match of sorted phases to k/d."""
    th = np.sort(np.asarray(phases, dtype=float))
    d = th.size
    j = np.arange(d)
    # cost(s) = sum_j |e(theta_j) - e((j+s)/d)|^2 = 2d - 2 Re(conj(e(s/d)) S)
    S = np.sum(np.exp(2j * np.pi * (th - j / d)))
    s = np.arange(d)
    cost = 2 * d - 2 * np.real(np.exp(-2j * np.pi * s / d) * S)
    best = int(np.argmin(cost))
    return RoundingPlan(th, (j + best) % d, best, float(max(cost[best], 0.0)))


def round_eigenvalues_to_permutation(u, elements=None, tol: float = UNITARY_TOL):
    """Rounded permutation approximation of u and its distance |u - b(1)|_HS^2 / d.

    ``elements`` lists the integers for which permutations are stored
    (default: every residue, as -(d-1)..d-1).
    """
    u = check_unitary(u, tol)
    d = u.shape[0]
    eig = Eigen.of(u)
    plan = rounding_plan(eig.phases)
    # eigen order is already sorted by phase
    W = np.empty_like(eig.vectors)
    W[:, plan.target] = eig.vectors
    a = np.arange(d)
    F = np.exp(2j * np.pi * np.outer(a, a) / d) / math.sqrt(d)
    B = W @ F.T
    if elements is None:
        elements = range(-(d - 1), d)
    perms = {as_element(k, 1): (a + as_element(k, 1)[0]) % d for k in elements}
    perms.setdefault((1,), (a + 1) % d)
    beta = SoficInducedApprox(B, SoficApprox(d, perms, rank=1), 0)
    rounded = (W * np.exp(2j * np.pi * a / d)) @ W.conj().T
    dist = hs_norm(u - rounded) ** 2 / d
    return beta, float(dist)


def oracle_distances(alpha, E, beta: SoficInducedApprox) -> dict:
    """|a(g) - b(g)|_HS^2 / d for g in E."""
    d = alpha.dim
    eye = np.eye(d, dtype=complex)
    return {as_element(g, alpha.rank): hs_norm(alpha(g) - beta.apply_to(g, eye)) ** 2 / d for g in E}


def commuting(gens, tol: float = 1e-9) -> bool:
    d = gens[0].shape[0]
    return all(hs_norm(a @ b - b @ a) <= tol * math.sqrt(d)
               for i, a in enumerate(gens) for b in gens[i + 1:])


def round_generators(alpha, tol: float = 1e-9) -> list:
    """Componentwise rounding of the generators of a rank-r approximation.

    Declines unless the generator unitaries commute within ``tol`` (HS norm
    relative to sqrt(d)). Returns one ``(beta_i, distance_i)`` per generator.
    """
    r = alpha.rank
    gens = [alpha(tuple(int(i == j) for j in range(r))) for i in range(r)]
    if not commuting(gens, tol):
        raise OracleDeclined("generators do not commute; rounding covers commuting inputs only")
    return [round_eigenvalues_to_permutation(u, elements=(-1, 0, 1)) for u in gens]


def abelian_oracle(alpha, E, eps: float | None = None) -> dict:
    """Feasibility summary: rounding of the generator and distances on E.

    Rank 1 rounds the single generator; rank r > 1 rounds each generator
    and reports the largest generator distance.
    """
    E = [as_element(g, alpha.rank) for g in E]
    if alpha.rank == 1:
        elems = sorted({g[0] for g in E} | {1})
        beta, dist = round_eigenvalues_to_permutation(alpha((1,)), elements=elems)
        on_E = oracle_distances(alpha, E, beta)
        out = {"status": "ok", "generator_distance": dist,
               "distance": {str(list(g)): v for g, v in on_E.items()}, "max_distance": max(on_E.values())}
    else:
        try:
            parts = round_generators(alpha)
        except OracleDeclined as exc:
            return {"status": "declined", "reason": str(exc)}
        dists = [dd for _, dd in parts]
        out = {"status": "ok", "generator_distances": dists, "max_distance": max(dists), "componentwise": True}
        beta = None
    if eps is not None:
        out["target"] = eps**2
        out["passed"] = out["max_distance"] <= eps**2
    out["beta"] = beta
    return out
