"""Parameter schedules for the block recursion.

A schedule lists, for levels n = 1..m, a Følner box F_n and an invariance
constant nu_n, together with the shared constants kappa, delta, N and the
search budget. Levels run from n = m (largest box) down to n = 1.

``mode="strict"`` refuses any schedule that breaks a required
constraint. ``mode="desk"`` enforces only structural sanity and reports the
strict constraints it breaks; this is the only way to run at laptop sizes.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

from ..errors import ScheduleError
from ..group import as_element, boundary_ratio, box, max_norm

MODES = ("strict", "desk")
SEARCH_MODES = ("best", "first")


@dataclass(frozen=True)
class Constraint:
    name: str
    lhs: float
    rhs: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs * (1 + 1e-12)

    def to_dict(self) -> dict:
        return {"name": self.name, "lhs": self.lhs, "rhs": self.rhs, "holds": self.holds}


@dataclass(frozen=True)
class ParamSchedule:
    E: tuple
    epsilon: float
    kappa: float
    N: int
    delta: float
    nus: tuple
    boxes: tuple
    delta0: float | None = None
    budget: int = 64
    min_dim: int = 1
    slack: float = 1.0
    mode: str = "desk"
    search_mode: str = "best"
    shortlist: int = 4
    on_refusal: str = "stop"

    def __post_init__(self):
        E = tuple(sorted({as_element(g) for g in self.E}))
        object.__setattr__(self, "E", E)
        object.__setattr__(self, "nus", tuple(float(v) for v in self.nus))
        object.__setattr__(self, "boxes", tuple(self.boxes))
        if self.delta0 is None:
            object.__setattr__(self, "delta0", float(self.delta))

    @property
    def m(self) -> int:
        return len(self.boxes)

    @property
    def rank(self) -> int:
        return len(self.E[0]) if self.E else 0

    def level(self, n: int) -> tuple:
        """(F_n, nu_n) for 1 <= n <= m."""
        return self.boxes[n - 1], self.nus[n - 1]

    def structural_violations(self) -> list:
        bad = []
        if not self.E:
            bad.append("E is empty")
        if len({len(g) for g in self.E}) > 1:
            bad.append("E mixes ranks")
        if self.mode not in MODES:
            bad.append(f"mode must be one of {MODES}")
        if self.search_mode not in SEARCH_MODES:
            bad.append(f"search_mode must be one of {SEARCH_MODES}")
        if self.on_refusal not in ("stop", "fail"):
            bad.append("on_refusal must be 'stop' or 'fail'")
        if not 0 < self.epsilon:
            bad.append("epsilon must be positive")
        if not 0 < self.kappa < 1:
            bad.append("kappa must lie in (0, 1)")
        if not 0 < self.delta < 0.5:
            bad.append("delta must lie in (0, 1/2)")
        if not 0 < self.delta0 <= self.delta:
            bad.append("delta0 must lie in (0, delta]")
        if self.N < 1:
            bad.append("N must be at least 1")
        if self.budget < 0:
            bad.append("budget must be nonnegative")
        if self.min_dim < 1:
            bad.append("min_dim must be at least 1")
        if self.slack < 1:
            bad.append("slack must be at least 1")
        if len(self.nus) != self.m:
            bad.append("need one nu per box")
        if any(not 0 < v for v in self.nus):
            bad.append("every nu must be positive")
        if any(b.rank != self.rank for b in self.boxes):
            bad.append("box rank differs from rank of E")
        radii = [b.radius for b in self.boxes]
        if any(a > b for a, b in zip(radii, radii[1:])):
            bad.append("boxes must be increasing")
        if any(a < b for a, b in zip(self.nus, self.nus[1:])):
            bad.append("nus must be nonincreasing")
        if self.boxes and self.E and self.rank == self.boxes[0].rank:
            need = 2 * max(max_norm(g) for g in self.E)
            if self.boxes[0].radius < need:
                bad.append("F_1 must contain E*E")
        return bad

    def required_constraints(self) -> list:
        m = self.m
        shrink = (1 - self.kappa**2 / 2) ** m
        out = [
            Constraint("kappa_eq_eps_over_25", self.kappa, self.epsilon / 25),
            Constraint("shrink_factor", shrink, self.epsilon / 2),
            Constraint("nu_budget", float(sum(v * v for v in self.nus)),
                       self.epsilon**2 / (16 * max(m, 1)) * shrink),
            Constraint("resolution", 3.0 / self.N, self.delta),
        ]
        for n, (F, nu) in enumerate(zip(self.boxes, self.nus), start=1):
            size = len(F)
            out.append(Constraint(f"delta_vs_nu[{n}]", 2 * self.delta * size, nu / 6))
            out.append(Constraint(f"folner[{n}]", float(boundary_ratio(self.E, F)) * size, nu * nu * size / 4))
            # delta0 <= delta exp(-16|F|), compared in log space to avoid underflow
            out.append(Constraint(f"log_delta0[{n}]", math.log(self.delta0), math.log(self.delta) - 16 * size))
        return out

    def strict_violations(self) -> list:
        return [c for c in self.required_constraints() if not c.holds]

    def validate(self) -> list:
        """Raise on structural problems, and in strict mode on any broken constraint.

        Returns the list of broken constraints (empty in strict mode).
        """
        bad = self.structural_violations()
        if bad:
            raise ScheduleError("schedule is malformed: " + "; ".join(bad), bad)
        viol = self.strict_violations()
        if self.mode == "strict" and viol:
            names = ", ".join(c.name for c in viol)
            raise ScheduleError(f"schedule violates required constraints: {names}", viol)
        return viol

    def inflation_cap(self, steps: int, F_size: int, dim: int) -> float:
        """delta0 * exp(16 n |F|^2 / d), the running disuniformity cap after n steps."""
        return float(self.delta0 * math.exp(min(700.0, 16 * steps * F_size**2 / dim)))

    def to_dict(self) -> dict:
        return {
            "E": [list(g) for g in self.E],
            "epsilon": self.epsilon,
            "kappa": self.kappa,
            "N": self.N,
            "delta": self.delta,
            "delta0": self.delta0,
            "nus": list(self.nus),
            "radii": [b.radius for b in self.boxes],
            "budget": self.budget,
            "min_dim": self.min_dim,
            "slack": self.slack,
            "mode": self.mode,
            "search_mode": self.search_mode,
            "shortlist": self.shortlist,
            "on_refusal": self.on_refusal,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "ParamSchedule":
        obj = dict(obj)
        E = [tuple(g) for g in obj.pop("E")]
        rank = len(E[0])
        radii = obj.pop("radii")
        return cls(E=tuple(E), boxes=tuple(box(rank, int(L)) for L in radii), **obj)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def level_sizes(dim: int, rank: int, e_radius: int, kappa: float, max_radius: int,
                box_fill: float = 1.0, max_levels: int = 64) -> list:
    """Simulate the peeling: radius and step count for each level, in run order.

    A level uses the largest box with at most ``box_fill * d_U`` elements
    (capped at ``max_radius``) and takes steps until the built rank exceeds
    kappa^2 d_U / 2 or the next block no longer fits. A level needs a box
    containing E*E, i.e. radius at least 2 * e_radius.
    """
    out = []
    dU = int(dim)
    while len(out) < max_levels:
        side = int(math.floor((box_fill * dU) ** (1.0 / rank) + 1e-9))
        L = min(max_radius, (side - 1) // 2)
        if L < 2 * e_radius:
            break
        size = (2 * L + 1) ** rank
        built, steps = 0, 0
        while built <= kappa**2 * dU / 2 and built + size <= dU:
            built += size
            steps += 1
        if steps == 0:
            break
        out.append({"radius": L, "steps": steps, "dim": dU})
        dU -= built
    return out


def desk_schedule(E, epsilon: float, dim: int, kappa: float = 0.6, delta: float = 0.45,
                  N: int | None = None, max_radius: int = 60, box_fill: float = 1.0,
                  budget: int = 64, slack: float = 1.0, min_dim: int | None = None,
                  search_mode: str = "best", shortlist: int = 4, on_refusal: str = "stop",
                  delta0: float | None = None, max_levels: int = 64) -> ParamSchedule:
    """Schedule tuned for laptop dimensions.

    nu_n is the smallest value compatible with the Følner relation
    |E F_n - F_n| <= nu_n^2 |F_n| / 4, i.e. 2 sqrt(boundary ratio).
    """
    E = sorted({as_element(g) for g in E})
    rank = len(E[0])
    R = max(max_norm(g) for g in E)
    levels = level_sizes(dim, rank, R, kappa, max_radius, box_fill, max_levels)
    radii = sorted(lv["radius"] for lv in levels)
    boxes = tuple(box(rank, L) for L in radii)
    nus = tuple(min(1.0, 2 * math.sqrt(float(boundary_ratio(E, b)))) for b in boxes)
    if N is None:
        N = int(math.ceil(3.0 / delta))
    if min_dim is None:
        min_dim = len(boxes[-1]) if boxes else (4 * R + 1) ** rank
    return ParamSchedule(E=tuple(E), epsilon=float(epsilon), kappa=float(kappa), N=int(N),
                         delta=float(delta), nus=nus, boxes=boxes, delta0=delta0, budget=int(budget),
                         min_dim=int(min_dim), slack=float(slack), mode="desk", search_mode=search_mode,
                         shortlist=int(shortlist), on_refusal=on_refusal)
