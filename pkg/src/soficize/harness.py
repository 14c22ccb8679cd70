"""Test inputs, end-to-end runs and reports."""
from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field

import jsonschema
import numpy as np

from .abelian import abelian_oracle
from .errors import ConfigError, PipelineFailedError, ScheduleError
from .group import box, sorted_elements, symmetric_interval
from .linalg import haar_unitary, random_hermitian
from .sofication.approx import HyperlinearApprox, SoficApprox, SoficInducedApprox, validate_hyperlinear
from .sofication.io import jsonable, load_manifest
from .sofication.pipeline import sofify
from .sofication.schedule import ParamSchedule, desk_schedule

KINDS = ("exact-shift", "perturbed-shift", "haar-noise", "sofic-seeded", "file")


@dataclass
class RunConfig:
    kind: str = "perturbed-shift"
    rank: int = 1
    dim: int = 512
    noise: float = 0.05
    e_radius: int = 3
    epsilon: float = 0.5
    seed: int | None = None
    schedule_overrides: dict = field(default_factory=dict)
    schedule_file: str | None = None
    manifest: str | None = None
    out_dir: str | None = None

    def __post_init__(self):
        if self.seed is None:
            raise ConfigError("a seed is required")
        if self.kind not in KINDS:
            raise ConfigError(f"unknown generator kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "file" and not self.manifest:
            raise ConfigError("kind 'file' needs a manifest path")
        for name in ("rank", "dim", "e_radius"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be a positive integer")
        if not self.epsilon > 0:
            raise ConfigError("epsilon must be positive")
        if self.noise < 0:
            raise ConfigError("noise must be nonnegative")
        if self.kind != "file" and self.rank > 1 and self.side ** self.rank != self.dim:
            raise ConfigError(f"rank {self.rank} needs a dimension that is a perfect {self.rank}-th power")

    @property
    def side(self) -> int:
        return int(round(self.dim ** (1.0 / self.rank)))

    @property
    def E(self) -> list:
        return symmetric_interval(self.rank, self.e_radius)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, obj: dict) -> "RunConfig":
        return cls(**obj)


def torus_shift(side: int, rank: int, axis: int) -> np.ndarray:
    """Permutation matrix of the unit translation along ``axis`` of (Z/side)^rank."""
    return _perm_matrix(_torus_image(side, rank, axis), side**rank)


def _perm_matrix(image, d) -> np.ndarray:
    m = np.zeros((d, d))
    m[image, np.arange(d)] = 1.0
    return m


def _noise_factor(d, eta, rng) -> np.ndarray:
    h = random_hermitian(d, rng, math.sqrt(d))
    w, q = np.linalg.eigh(h)
    return (q * np.exp(1j * eta * w)) @ q.conj().T


def generate_test_approx(cfg: RunConfig):
    """Input approximation for a run; all randomness comes from ``cfg.seed``."""
    if cfg.kind == "file":
        return load_manifest(cfg.manifest)
    r, d = cfg.rank, cfg.dim
    rng = np.random.default_rng([cfg.seed, 0])
    if cfg.kind == "haar-noise":
        return HyperlinearApprox.from_generators([haar_unitary(d, rng) for _ in range(r)], name=cfg.kind)
    V = haar_unitary(d, rng)
    shifts = [torus_shift(cfg.side, r, i) for i in range(r)]
    if cfg.kind == "sofic-seeded":
        need = sorted_elements(set(box(r, 2 * cfg.e_radius).elements))
        perms = {}
        for g in need:
            img = np.arange(d)
            for i, c in enumerate(g):
                step = _torus_image(cfg.side, r, i) if c > 0 else np.argsort(_torus_image(cfg.side, r, i))
                for _ in range(abs(c)):
                    img = step[img]
            perms[g] = img
        return SoficInducedApprox(V, SoficApprox(d, perms, rank=r), 0)
    gens = [V @ s @ V.conj().T for s in shifts]
    if cfg.kind == "perturbed-shift":
        gens = [u @ _noise_factor(d, cfg.noise, rng) for u in gens]
    return HyperlinearApprox.from_generators(gens, name=cfg.kind)


def _torus_image(side: int, rank: int, axis: int) -> np.ndarray:
    """Image of each point under the unit translation along ``axis`` of (Z/side)^rank."""
    idx = np.arange(side**rank).reshape((side,) * rank)
    return np.roll(idx, -1, axis=axis).reshape(-1)


def build_schedule(cfg: RunConfig, dim: int | None = None) -> ParamSchedule:
    """Schedule from the config file, else the desk schedule for ``dim`` (default ``cfg.dim``)."""
    if cfg.schedule_file:
        with open(cfg.schedule_file) as fh:
            return ParamSchedule.from_dict(json.load(fh))
    return desk_schedule(cfg.E, cfg.epsilon, dim or cfg.dim, **cfg.schedule_overrides)


REPORT_SCHEMA = {
    "type": "object",
    "required": ["certificate", "seed", "config", "input_defect", "oracle", "per_step", "bounds"],
    "properties": {
        "certificate": {"enum": ["pass", "fail", "declined"]},
        "seed": {"type": "integer"},
        "config": {"type": "object"},
        "input_defect": {"type": "object"},
        "oracle": {"type": "object"},
        "per_step": {"type": "array", "items": {
            "type": "object",
            "required": ["step", "tr_p", "nu_achieved", "kappa_achieved", "ds_bound", "search_draws"]}},
        "levels": {"type": "array"},
        "bounds": {"type": "object"},
    },
}


@dataclass
class RunReport:
    """Everything a run produced. ``wall_clock`` is kept out of the JSON so reports are reproducible."""

    config: dict
    seed: int
    certificate: str
    input_defect: dict
    oracle: dict
    sofify: dict
    beta: SoficInducedApprox | None = None
    wall_clock: float = 0.0
    failure: str | None = None
    search_failure: bool = False

    def to_dict(self) -> dict:
        s = self.sofify or {}
        out = {
            "certificate": self.certificate,
            "seed": self.seed,
            "config": self.config,
            "input_defect": self.input_defect,
            "oracle": self.oracle,
            "per_step": s.get("per_step", []),
            "levels": s.get("levels", []),
            "bounds": s.get("bounds", {}),
        }
        for k in ("route", "distance", "max_distance", "checks", "verifier", "verifier_mismatch",
                  "schedule", "schedule_violations", "tail_dim", "tail_fraction"):
            if k in s:
                out[k] = s[k]
        if self.failure:
            out["failure"] = self.failure
        if self.oracle.get("max_distance") is not None and "max_distance" in s:
            out["oracle_comparison"] = {
                "pipeline": s["max_distance"],
                "oracle": self.oracle["max_distance"],
                "ratio": s["max_distance"] / max(self.oracle["max_distance"], 1e-300),
            }
        out = jsonable(out)
        jsonschema.validate(out, REPORT_SCHEMA)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"


def run(cfg: RunConfig, progress=None) -> RunReport:
    """Generate the input, run the oracle and the pipeline, and collect the report."""
    t0 = time.perf_counter()
    alpha = generate_test_approx(cfg)
    E = cfg.E
    d = validate_hyperlinear(alpha, E, cfg.epsilon)
    defect = d.to_dict()
    if isinstance(alpha, HyperlinearApprox):
        orc = abelian_oracle(alpha, E, cfg.epsilon)
    else:
        orc = {"status": "skipped", "reason": "input is already sofic-induced"}
    orc.pop("beta", None)
    cfg_d = cfg.to_dict()
    try:
        sched = build_schedule(cfg, alpha.dim)
        beta, rep = sofify(alpha, E, cfg.epsilon, sched, seed=cfg.seed, progress=progress)
    except ScheduleError as exc:
        return RunReport(cfg_d, cfg.seed, "declined", defect, orc, {}, None,
                         time.perf_counter() - t0, f"schedule refused: {exc}")
    except PipelineFailedError as exc:
        diag = exc.diagnostics or {}
        return RunReport(cfg_d, cfg.seed, "declined", defect, orc, diag.get("report", {}), None,
                         time.perf_counter() - t0, str(exc), bool(diag.get("search_failure")))
    return RunReport(cfg_d, cfg.seed, rep["certificate"], defect, orc, rep, beta, time.perf_counter() - t0)
