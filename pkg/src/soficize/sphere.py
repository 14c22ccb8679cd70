"""Uniform sampling on complex unit spheres and Monte Carlo checks of trace identities."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DomainError, StructuralError
from .linalg import as_matrix, haar_unitary, op_norm


@dataclass
class SeededSampler:
    """Counter-based stream: draw number k depends only on (seed, k).

    Each draw builds its own generator from ``[seed, counter]``, so batches,
    clones and disjoint counter ranges all replay the same vectors.
    """

    seed: int
    counter: int = 0

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise DomainError("seed must be a 64-bit nonnegative integer")
        self.seed = int(self.seed)

    def rng(self, counter=None) -> np.random.Generator:
        c = self.counter if counter is None else counter
        return np.random.default_rng([self.seed, int(c)])

    def next_rng(self) -> np.random.Generator:
        g = self.rng()
        self.counter += 1
        return g

    def draw(self, d: int) -> np.ndarray:
        return sample_unit_vector(d, self)

    def draw_batch(self, d: int, n: int) -> np.ndarray:
        """Columns are the next n draws, identical to n calls of ``draw``."""
        out = np.empty((d, n), dtype=complex)
        for j in range(n):
            out[:, j] = self.draw(d)
        return out

    def clone(self) -> "SeededSampler":
        return SeededSampler(self.seed, self.counter)

    def fork(self, stream: int) -> "SeededSampler":
        """Independent stream keyed by (seed, stream), starting at counter 0."""
        seed = int(np.random.SeedSequence([self.seed, int(stream)]).generate_state(1, np.uint64)[0])
        return SeededSampler(seed, 0)


def _gaussian_unit(rng, d):
    z = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return z / np.linalg.norm(z)


def sample_unit_vector(d: int, sampler: SeededSampler) -> np.ndarray:
    """Uniform unit vector in C^d from 2d normalized standard Gaussians."""
    if d < 1:
        raise DomainError("dimension must be at least 1")
    return _gaussian_unit(sampler.next_rng(), d)


def geodesic_distance(xi, eta) -> float:
    """arccos of the real part of <xi, eta>, clipped to [-1, 1]."""
    xi, eta = np.asarray(xi), np.asarray(eta)
    if xi.shape != eta.shape:
        raise StructuralError("vectors have different dimensions")
    return float(np.arccos(np.clip(np.real(np.vdot(eta, xi)), -1.0, 1.0)))


def quadratic_forms(s, xs) -> np.ndarray:
    """<s x_j, x_j> for each column x_j."""
    return np.sum(np.conj(xs) * (s @ xs), axis=0)


def trace_monte_carlo(s, n_samples: int, sampler: SeededSampler, batch: int = 2048) -> complex:
    """Sample mean of <s xi, xi>, an unbiased estimate of tr(s)/d."""
    s = as_matrix(s)
    if s.shape[0] != s.shape[1]:
        raise StructuralError("operator must be square")
    if n_samples < 1:
        raise DomainError("n_samples must be positive")
    d = s.shape[0]
    total = 0j
    done = 0
    while done < n_samples:
        k = min(batch, n_samples - done)
        total += complex(np.sum(quadratic_forms(s, sampler.draw_batch(d, k))))
        done += k
    return total / n_samples


def trace_event_bound(d: int, c: float, s_op: float) -> float:
    """1 - 2 exp(-c^2 (2d-1) / (8 |s|_op^2)), clipped to [0, 1]."""
    if s_op == 0:
        return 1.0
    return float(min(1.0, max(0.0, 1 - 2 * math.exp(-c * c * (2 * d - 1) / (8 * s_op**2)))))


def norm_event_bound(d: int, c: float, s_op: float) -> float:
    """Same shape as ``trace_event_bound`` with |s|_op^4 in place of |s|_op^2."""
    if s_op == 0:
        return 1.0
    return float(min(1.0, max(0.0, 1 - 2 * math.exp(-c * c * (2 * d - 1) / (8 * s_op**4)))))


@dataclass
class ConcentrationReport:
    d: int
    n: int
    c: float
    empirical_success: float
    paper_bound: float
    mode: str = "trace"
    op_norm: float = 0.0

    @property
    def standard_error(self) -> float:
        p = self.empirical_success
        return math.sqrt(p * (1 - p) / self.n) if self.n else 0.0

    def passes(self, n_se: float = 3.0) -> bool:
        return self.empirical_success >= self.paper_bound - n_se * self.standard_error

    def to_dict(self) -> dict:
        out = asdict(self)
        out["standard_error"] = self.standard_error
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _event_values(s, xs, mode, target, hs2):
    if mode == "trace":
        return np.abs(quadratic_forms(s, xs) - target)
    return np.sum(np.abs(s @ xs) ** 2, axis=0) - hs2 / s.shape[0]


def _deviations(s, n_samples, sampler, mode, batch):
    d = s.shape[0]
    target = np.trace(s) / d
    hs2 = float(np.linalg.norm(s) ** 2)
    out = []
    done = 0
    while done < n_samples:
        k = min(batch, n_samples - done)
        out.append(_event_values(s, sampler.draw_batch(d, k), mode, target, hs2))
        done += k
    return np.concatenate(out) if out else np.zeros(0)


def _report(s, c, devs, mode, s_op):
    d = s.shape[0]
    n = len(devs)
    hits = int(np.sum(devs <= c))
    bound = trace_event_bound(d, c, s_op) if mode == "trace" else norm_event_bound(d, c, s_op)
    return ConcentrationReport(d, n, float(c), hits / max(n, 1), bound, mode, s_op)


def concentration_experiment(s, c: float, n_samples: int, sampler: SeededSampler,
                             mode: str = "trace", batch: int = 1024) -> ConcentrationReport:
    """Fraction of draws with |<s xi, xi> - tr(s)/d| <= c (mode "trace"),
    or |s xi|^2 <= c + |s|_HS^2 / d (mode "norm")."""
    if not c > 0:
        raise DomainError("c must be positive")
    if mode not in ("trace", "norm"):
        raise DomainError(f"unknown mode {mode!r}")
    s = as_matrix(s)
    devs = _deviations(s, n_samples, sampler, mode, batch)
    return _report(s, c, devs, mode, op_norm(s))


@dataclass
class GridConfig:
    dims: list
    cs: list
    n_samples: int
    seed: int
    mode: str = "trace"

    @classmethod
    def from_json(cls, text: str) -> "GridConfig":
        return cls(**json.loads(text))


def concentration_grid(cfg: GridConfig) -> list:
    """Run the experiment on one Haar unitary per dimension across all deviations.

    The draws for a dimension are shared by every deviation c.
    """
    if cfg.mode not in ("trace", "norm"):
        raise DomainError(f"unknown mode {cfg.mode!r}")
    reports = []
    for i, d in enumerate(cfg.dims):
        s = haar_unitary(int(d), np.random.default_rng([cfg.seed, 1, i]))
        sampler = SeededSampler(cfg.seed, counter=i * 10**9)
        devs = _deviations(s, cfg.n_samples, sampler, cfg.mode, 1024)
        s_op = op_norm(s)
        for c in cfg.cs:
            if not c > 0:
                raise DomainError("c must be positive")
            reports.append(_report(s, float(c), devs, cfg.mode, s_op))
    return reports
