"""Inner recursion: grow an almost invariant subspace block by block.

Each accepted step adds |F| orthonormal vectors theta_h (h in F) built from
the translates a(h) x of one searched vector x. Inside a block, g acts on
labels by h -> gh where that stays in F; the remaining labels are matched
to the free slots in increasing order.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import BlockFailedError, DomainError, SearchFailedError, StepRejectedError
from ..group import FolnerBox, identity, multiply, product_set, sorted_elements
from ..linalg import (
    ProjectionRep,
    complement_hypotheses,
    complement_decompose,
    hs_norm,
    orthonormality_defect,
    polar_unitary,
    TOL_GRAM,
)
from ..spectra import bin_index
from .approx import HyperlinearApprox, SoficApprox, SoficInducedApprox, validate_hyperlinear
from .search import SearchContext, StepParams, candidate_vector_search

log = logging.getLogger(__name__)


def label_permutation(F: FolnerBox, g) -> np.ndarray:
    """Slot map for g on the labels of F: h -> gh when gh lies in F, else lowest free slot."""
    n = len(F)
    perm = np.full(n, -1, dtype=np.int64)
    used = np.zeros(n, dtype=bool)
    for i, h in enumerate(F.elements):
        gh = multiply(g, h)
        if gh in F:
            j = F.index(gh)
            perm[i] = j
            used[j] = True
    free = iter(np.flatnonzero(~used))
    for i in range(n):
        if perm[i] < 0:
            perm[i] = next(free)
    return perm


def action_set(E) -> list:
    """E together with all products of two elements of E."""
    return sorted_elements(set(E) | product_set(E, E))


def complement_ds(eig, p: ProjectionRep, N: int) -> float:
    """DS_N of a unitary localized to the complement of p, from the masses on p."""
    d = eig.dim
    k = p.rank
    if k == d:
        raise DomainError("complement is zero")
    on_p = np.sum(np.abs(eig.vectors.conj().T @ p.basis) ** 2, axis=1) if k else np.zeros(d)
    m = np.clip(1.0 - on_p, 0.0, None)
    m /= m.sum()
    bins = np.bincount(bin_index(eig.phases, N), weights=m, minlength=N)
    return float(np.sum(np.abs(bins - 1.0 / N)))


@dataclass
class RecursionState:
    """Built frame p (columns grouped in blocks of |F|), partial permutations, step log."""

    dim: int
    p: ProjectionRep
    F: FolnerBox
    actions: list
    perms: dict = field(default_factory=dict)
    n: int = 0
    log: list = field(default_factory=list)
    tau_error: dict = field(default_factory=dict)

    @classmethod
    def start(cls, dim: int, F: FolnerBox, E) -> "RecursionState":
        acts = action_set(E)
        return cls(dim, ProjectionRep.zero(dim), F, acts,
                   {g: np.zeros(0, dtype=np.int64) for g in acts}, 0, [],
                   {g: 0.0 for g in E})

    @property
    def trace(self) -> int:
        return self.p.rank

    def block_labels(self, k: int) -> dict:
        """Map label h -> column index for block k."""
        off = k * len(self.F)
        return {h: off + i for i, h in enumerate(self.F.elements)}

    def sofic(self) -> SoficApprox:
        return SoficApprox(self.trace, self.perms, rank=self.F.rank)

    def beta(self) -> SoficInducedApprox:
        return SoficInducedApprox(self.p.basis, self.sofic(), 0)


def check_hypotheses(alpha, state: RecursionState, params: StepParams, ds_cap: float) -> dict:
    """Measured value and allowed value for each step hypothesis."""
    d = state.dim
    out = {}
    out["trace_cap"] = (float(state.trace), params.kappa**2 * d / 2)
    if state.trace:
        b = state.p.basis
        leak = max(hs_norm(state.p.complement_apply(alpha(g) @ b)) ** 2 for g in params.E)
        out["almost_invariance"] = (float(leak), params.nu**2 * state.trace)
    e = identity(params.F.rank)
    ds = max(complement_ds(alpha.eigen(g), state.p, params.N) for g in params.F.elements if g != e)
    out["disuniformity"] = (ds, ds_cap * params.slack)
    out["room"] = (float(state.trace + len(params.F)), float(d))
    return out


def inner_step(alpha, state: RecursionState, params: StepParams, sampler=None,
               ds_cap: float | None = None, context=None) -> RecursionState:
    """One step of the inner recursion; returns a new state, leaving the input untouched.

    ``ds_cap`` is the running disuniformity cap for the complement before the
    step (defaults to delta); after the step it is inflated by exp(16|F|^2/d).
    """
    if sampler is None:
        raise DomainError("a sampler is required")
    d = state.dim
    F = params.F
    nF = len(F)
    cap = params.delta if ds_cap is None else ds_cap
    hyp = check_hypotheses(alpha, state, params, cap)
    failed = {k: v for k, v in hyp.items() if v[0] > v[1] * (1 + 1e-12)}
    if failed:
        name = next(iter(failed))
        raise StepRejectedError(f"step hypothesis '{name}' fails: {failed[name][0]:.4g} > {failed[name][1]:.4g}",
                                {"failed": list(failed), "hypotheses": hyp})

    ctx = context or SearchContext(alpha, state.p, params)
    res = candidate_vector_search(alpha, state.p, params, sampler, ctx)
    Y = res.translates
    phis, thetas = complement_decompose(state.p, Y, check=False)
    pre = complement_hypotheses(state.p, Y, 2 * params.delta, params.kappa)
    q = state.p.extend(thetas)
    th = params.thresholds()

    # clause (b): almost invariance of q with the same nu
    qb = q.basis
    leak = {g: hs_norm(q.complement_apply(alpha(g) @ qb)) for g in params.E}
    nu_ach = max(leak.values()) / math.sqrt(q.rank)
    # clause (c): disuniformity of the new complement
    e = identity(F.rank)
    new_cap = cap * math.exp(min(700.0, 16 * nF**2 / d))
    if q.rank < d:
        ds_after = max(complement_ds(alpha.eigen(g), q, params.N) for g in F.elements if g != e)
    else:
        ds_after = 0.0
    # permutations on the new block and the running tau-error sums
    off = state.trace
    new_perms, tau_err = {}, dict(state.tau_error)
    for g in state.actions:
        local = label_permutation(F, g)
        new_perms[g] = np.concatenate([state.perms[g], off + local])
        if g in tau_err:
            moved = alpha(g) @ thetas
            # tau(g) theta_h = theta_{gh} should match a(g) theta_h
            target = thetas[:, local]
            tau_err[g] = state.tau_error[g] + hs_norm(target - moved) ** 2
    trii_rhs = (params.nu**2 + (4 * params.kappa + 10 * nF * params.delta) ** 2) * q.rank

    clauses = {
        "a_composition": (res.report.values["compose"], th["compose"]),
        "b_almost_invariance": (nu_ach * math.sqrt(q.rank), params.nu * math.sqrt(q.rank)),
        "c_disuniformity": (ds_after, new_cap * params.slack),
        "d_projection": (res.report.values["proj"], th["proj"]),
        "trii": (max(tau_err.values()), trii_rhs),
        "gram": (orthonormality_defect(qb), TOL_GRAM * 10),
        "trace_bookkeeping": (float(abs(q.rank - (state.trace + nF))), 0.0),
    }
    bad = {k: v for k, v in clauses.items() if v[0] > v[1] * (1 + 1e-12) + 1e-15}
    entry = {
        "step": state.n + 1,
        "tr_p": q.rank,
        "nu_achieved": nu_ach,
        "kappa_achieved": res.report.values["proj"],
        "ds_bound": new_cap,
        "ds_achieved": ds_after,
        "search_draws": res.report.draws,
        "search": res.report.to_dict(),
        "hypotheses": {k: list(v) for k, v in hyp.items()},
        "clauses": {k: list(v) for k, v in clauses.items()},
        "complement_preconditions_failed": {k: list(v) for k, v in pre.items()},
        "lowdin_shift": float(np.max(np.linalg.norm(phis - thetas, axis=0))),
    }
    if bad:
        name = next(iter(bad))
        raise StepRejectedError(f"step clause '{name}' fails: {bad[name][0]:.4g} > {bad[name][1]:.4g}",
                                {"failed": list(bad), "entry": entry})
    return RecursionState(d, q, F, state.actions, new_perms, state.n + 1, state.log + [entry], tau_err)


@dataclass
class BlockResult:
    p: ProjectionRep
    beta: SoficInducedApprox
    gamma: HyperlinearApprox | None
    complement: np.ndarray
    metrics: dict
    state: RecursionState


def _complement_generators(alpha, comp: np.ndarray, rank: int) -> list:
    gens = []
    for i in range(rank):
        e_i = tuple(int(i == j) for j in range(rank))
        w = comp.conj().T @ alpha(e_i) @ comp
        gens.append(polar_unitary(w).unitary)
    return gens


def build_block(alpha, E, params: StepParams, sampler, min_dim: int = 1,
                ds_cap0: float | None = None, build_gamma: bool = True, progress=None) -> BlockResult:
    """Run inner steps until the built rank exceeds kappa^2 d / 2.

    The complement approximation repairs each generator by its nearest
    unitary on the complement and extends to all of Z^r by words.
    """
    d = alpha.dim
    if d < min_dim:
        raise DomainError(f"dimension {d} is below the required minimum {min_dim}")
    F = params.F
    nF = len(F)
    state = RecursionState.start(d, F, E)
    cap = params.delta if ds_cap0 is None else ds_cap0
    stop = "trace_exceeded"
    while state.trace <= params.kappa**2 * d / 2:
        if state.trace + nF > d:
            stop = "no_room"
            break
        try:
            state = inner_step(alpha, state, params, sampler, cap)
        except (StepRejectedError, SearchFailedError) as exc:
            raise BlockFailedError(f"block failed at step {state.n + 1}: {exc}",
                                   {"state": state, "error": exc}) from exc
        cap = state.log[-1]["ds_bound"]
        if progress:
            progress(state.log[-1])
    if state.n == 0:
        raise BlockFailedError("no step fits in the available dimension", {"state": state})

    p = state.p
    beta = state.beta()
    comp = p.complement().basis
    metrics = {"steps": state.n, "tr_p": p.rank, "dim": d, "stop": stop, "F_radius": F.radius,
               "nu": params.nu, "kappa": params.kappa}
    b1 = {}
    for g in params.E:
        diff = beta.apply_to(g, p.basis) - alpha(g) @ p.basis
        b1[str(list(g))] = hs_norm(diff) ** 2
    metrics["block_error"] = {"achieved": max(b1.values()), "target": (5 * params.kappa + params.nu) ** 2 * p.rank,
                         "per_element": b1}
    gamma = None
    if build_gamma and comp.shape[1]:
        gens = _complement_generators(alpha, comp, F.rank)
        gamma = HyperlinearApprox.from_generators(gens, check=False)
        b2 = {}
        for g in params.E:
            diff = comp @ gamma(g) - alpha(g) @ comp
            b2[str(list(g))] = hs_norm(diff) ** 2
        metrics["complement_error"] = {"achieved": max(b2.values()), "target": 4 * params.nu**2 * (d - p.rank),
                             "per_element": b2}
        rep = validate_hyperlinear(gamma, params.E, 7 * params.nu)
        metrics["gamma_defect"] = {"max_composition": rep.max_composition, "max_trace": rep.max_trace,
                                   "target": 7 * params.nu, "passed": rep.passed}
    return BlockResult(p, beta, gamma, comp, metrics, state)
