"""Randomized search for a vector whose translates form a good next block.

For a candidate unit vector x and translates x_h = a(h) x with h in F, five
condition families are measured against their thresholds:

  proj       max_h |p x_h|                                   <= kappa
  leak       max_{g in E, h} |(I-p) a(g) p x_h|              <= kappa nu
  compose    max_{g,h} |a(g) x_h - a(gh) x|                  <= 2 delta
  overlap    max_{g != h} |<(I-p) x_g, (I-p) x_h>|           <= 2 delta
  spectral   max_{g != e, h} DS_N of a(g) localized to (I-p) x_h  <= 2 delta

Every threshold is multiplied by the schedule's slack factor.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import SearchFailedError
from ..group import FolnerBox, identity, multiply
from ..linalg import ProjectionRep, max_offdiag
from ..spectra import ds_from_coords

CHEAP = ("proj", "leak", "overlap")
COSTLY = ("compose", "spectral")
FAMILIES = CHEAP + COSTLY


@dataclass(frozen=True)
class StepParams:
    E: tuple
    F: FolnerBox
    kappa: float
    nu: float
    delta: float
    N: int
    budget: int = 64
    slack: float = 1.0
    search_mode: str = "best"
    shortlist: int = 4

    def thresholds(self) -> dict:
        s = self.slack
        return {
            "proj": s * self.kappa,
            "leak": s * self.kappa * self.nu,
            "compose": s * 2 * self.delta,
            "overlap": s * 2 * self.delta,
            "spectral": s * 2 * self.delta,
        }


@dataclass
class ConditionReport:
    values: dict
    thresholds: dict
    draws: int
    draw_index: int | None = None
    mode: str = "best"

    @property
    def evaluated(self) -> list:
        return [k for k in FAMILIES if k in self.values]

    @property
    def holds(self) -> dict:
        return {k: self.values[k] <= self.thresholds[k] for k in self.evaluated}

    @property
    def margins(self) -> dict:
        return {k: self.thresholds[k] - self.values[k] for k in self.evaluated}

    @property
    def admissible(self) -> bool:
        return len(self.evaluated) == len(FAMILIES) and all(self.holds.values())

    @property
    def score(self) -> float:
        return score(self.values, self.thresholds)

    def to_dict(self) -> dict:
        return {
            "values": dict(self.values),
            "thresholds": dict(self.thresholds),
            "holds": self.holds,
            "admissible": self.admissible,
            "score": self.score,
            "draws": self.draws,
            "draw_index": self.draw_index,
            "mode": self.mode,
        }


def score(values: dict, thresholds: dict, weights: dict | None = None) -> float:
    """Weighted maximum of value / threshold; at most 1 means every condition holds."""
    w = weights or {}
    return max((w.get(k, 1.0) * v / thresholds[k] for k, v in values.items()), default=0.0)


class SearchContext:
    """Precomputed data for evaluating candidates against a fixed (a, p, F)."""

    def __init__(self, alpha, p: ProjectionRep, params: StepParams):
        self.alpha = alpha
        self.p = p
        self.params = params
        self.F = list(params.F.elements)
        self.E = list(params.E)
        self.e = identity(params.F.rank)
        self.FF = sorted({multiply(g, h) for g in self.F for h in self.F})
        self.ff_index = {g: i for i, g in enumerate(self.FF)}

    def translates(self, xi, elements) -> np.ndarray:
        if hasattr(self.alpha, "orbit"):
            return self.alpha.orbit(xi, elements)
        return np.stack([self.alpha(h) @ xi for h in elements], axis=1)

    def cheap(self, xi) -> tuple:
        p = self.p
        Y = self.translates(xi, self.F)
        PY = p.apply(Y)
        C = Y - PY
        vals = {"proj": float(np.max(np.linalg.norm(PY, axis=0)))}
        if p.rank:
            leak = 0.0
            for g in self.E:
                W = self.alpha(g) @ PY
                leak = max(leak, float(np.max(np.linalg.norm(p.complement_apply(W), axis=0))))
            vals["leak"] = leak
        else:
            vals["leak"] = 0.0
        vals["overlap"] = max_offdiag(C.conj().T @ C)
        return vals, Y, C

    def _coords(self, eig, X, cache, key):
        # eigenvector frames are shared between powers of one generator
        k = (id(eig.vectors), key)
        if k not in cache:
            cache[k] = eig.vectors.conj().T @ X
        return cache[k]

    def compose(self, xi, Y, cache=None) -> float:
        """max over g, h in F of |a(g) a(h) x - a(gh) x|, measured in the eigenbasis of a(g)."""
        cache = {} if cache is None else cache
        Yff = self.translates(xi, self.FF)
        idx = np.array([[self.ff_index[multiply(g, h)] for h in self.F] for g in self.F])
        worst = 0.0
        for i, g in enumerate(self.F):
            if g == self.e:
                diff = Y - Yff[:, idx[i]]
            else:
                eig = self.alpha.eigen(g)
                lam = np.exp(2j * np.pi * eig.phases)[:, None]
                diff = lam * self._coords(eig, Y, cache, "Y") - self._coords(eig, Yff, cache, "Yff")[:, idx[i]]
            worst = max(worst, float(np.max(np.linalg.norm(diff, axis=0))))
        return worst

    def spectral(self, C, cache=None) -> float:
        cache = {} if cache is None else cache
        N = self.params.N
        worst = 0.0
        for g in self.F:
            if g == self.e:
                continue
            eig = self.alpha.eigen(g)
            worst = max(worst, float(np.max(ds_from_coords(eig, self._coords(eig, C, cache, "C"), N))))
        return worst

    def full(self, xi) -> tuple:
        vals, Y, C = self.cheap(xi)
        cache = {}
        vals["compose"] = self.compose(xi, Y, cache)
        vals["spectral"] = self.spectral(C, cache)
        return vals, Y, C


@dataclass
class SearchResult:
    xi: np.ndarray | None
    report: ConditionReport
    translates: np.ndarray | None = None

    def __iter__(self):
        yield self.xi
        yield self.report


def candidate_vector_search(alpha, p: ProjectionRep, params: StepParams, sampler,
                            context: SearchContext | None = None) -> SearchResult:
    """Draw up to ``budget`` sphere samples and pick a vector meeting the five conditions.

    Mode "first" returns the first admissible draw. Mode "best" scores every
    draw on the cheap families, evaluates the costly families on a shortlist
    and returns the lowest full score, admissible or not; the report says
    which conditions hold. No admissible draw in mode "first", or an empty
    budget, raises ``SearchFailedError`` carrying the best draw seen.
    """
    ctx = context or SearchContext(alpha, p, params)
    th = params.thresholds()
    d = p.dim
    K = int(params.budget)
    if K <= 0:
        raise SearchFailedError("search budget is empty", SearchResult(None, ConditionReport({}, th, 0)))
    if params.search_mode == "first":
        best = None
        for k in range(K):
            xi = sampler.draw(d)
            vals, Y, C = ctx.cheap(xi)
            if all(vals[f] <= th[f] for f in CHEAP):
                cache = {}
                vals["compose"] = ctx.compose(xi, Y, cache)
                if vals["compose"] <= th["compose"]:
                    vals["spectral"] = ctx.spectral(C, cache)
            rep = ConditionReport(vals, th, k + 1, k, "first")
            if rep.admissible:
                return SearchResult(xi, rep, Y)
            if best is None or (len(rep.evaluated), -rep.score) > (len(best.report.evaluated), -best.report.score):
                best = SearchResult(xi, rep, Y)
        best.report.draws = K
        raise SearchFailedError(f"no admissible candidate in {K} draws", best)

    draws = []
    for k in range(K):
        xi = sampler.draw(d)
        vals, Y, C = ctx.cheap(xi)
        draws.append((score(vals, th), k, xi))
    draws.sort(key=lambda t: (t[0], t[1]))
    best = None
    for _, k, xi in draws[: max(1, params.shortlist)]:
        vals, Y, C = ctx.full(xi)
        rep = ConditionReport(vals, th, K, k, "best")
        if best is None or (rep.score, k) < (best.report.score, best.report.draw_index):
            best = SearchResult(xi, rep, Y)
    return best
