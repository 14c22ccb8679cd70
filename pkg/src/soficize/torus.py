"""Atomic probability measures on the circle R/Z and their disuniformity."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .errors import DomainError

MASS_TOL = 1e-12
MERGE_TOL = 1e-12
# Atoms within this many bin widths below k/N are counted in bin k.
BOUNDARY_TOL = 1e-10


def bin_index(positions, N: int) -> np.ndarray:
    """Index k with position in [k/N, (k+1)/N), robust to round-off at k/N."""
    x = np.asarray(positions, dtype=float)
    return np.mod(np.floor(x * N + BOUNDARY_TOL).astype(np.int64), N)


@dataclass(frozen=True)
class AtomicTorusMeasure:
    positions: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.positions, dtype=float)).copy()
        m = np.atleast_1d(np.asarray(self.masses, dtype=float)).copy()
        if x.shape != m.shape or x.ndim != 1:
            raise DomainError("positions and masses must be matching 1-D arrays")
        if x.size == 0:
            raise DomainError("a probability measure needs at least one atom")
        if np.any(x < 0) or np.any(x >= 1):
            raise DomainError("positions must lie in [0, 1)")
        if np.any(m < -MASS_TOL):
            raise DomainError("masses must be nonnegative")
        total = math.fsum(m)
        if abs(total - 1.0) > MASS_TOL * max(1.0, math.sqrt(m.size)):
            raise DomainError(f"masses sum to {total!r}, not 1")
        m = np.clip(m, 0.0, None)
        x.setflags(write=False)
        m.setflags(write=False)
        object.__setattr__(self, "positions", x)
        object.__setattr__(self, "masses", m)

    @classmethod
    def from_atoms(cls, atoms) -> "AtomicTorusMeasure":
        a = np.asarray(list(atoms), dtype=float).reshape(-1, 2)
        return cls(a[:, 0], a[:, 1])

    @classmethod
    def point_mass(cls, x: float = 0.0) -> "AtomicTorusMeasure":
        return cls([float(x) % 1.0], [1.0])

    @classmethod
    def uniform_grid(cls, N: int, offset: float = 0.0) -> "AtomicTorusMeasure":
        return cls((np.arange(N) / N + offset) % 1.0, np.full(N, 1.0 / N))

    @classmethod
    def normalized(cls, positions, weights) -> "AtomicTorusMeasure":
        w = np.clip(np.asarray(weights, dtype=float), 0.0, None)
        return cls(np.asarray(positions, dtype=float) % 1.0, w / w.sum())

    def __len__(self):
        return self.positions.size

    @property
    def atoms(self) -> list:
        return list(zip(self.positions.tolist(), self.masses.tolist()))

    def bin_masses(self, N: int) -> np.ndarray:
        if N < 1:
            raise DomainError("N must be at least 1")
        return np.bincount(bin_index(self.positions, N), weights=self.masses, minlength=N)

    def ds(self, N: int) -> float:
        return ds_n(self, N)

    def merged(self, tol: float = MERGE_TOL) -> "AtomicTorusMeasure":
        x, m = _merge(self.positions, self.masses, tol)
        return AtomicTorusMeasure(x, m / math.fsum(m) if m.size else m)

    def measure_of(self, intervals) -> float:
        """Mass of a finite union of half-open arcs [a, b)."""
        return float(np.sum(self.masses[in_intervals(self.positions, intervals)]))

    def integrate(self, f: Callable) -> complex:
        return complex(np.sum(self.masses * np.asarray(f(self.positions))))

    def fourier(self, k: int) -> complex:
        return complex(np.sum(self.masses * np.exp(2j * np.pi * k * self.positions)))

    def to_dict(self) -> dict:
        return {"atoms": [[float(x), float(m)] for x, m in zip(self.positions, self.masses)]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, obj: dict) -> "AtomicTorusMeasure":
        return cls.from_atoms(obj["atoms"])

    @classmethod
    def from_json(cls, text: str) -> "AtomicTorusMeasure":
        return cls.from_dict(json.loads(text))


def _merge(x, m, tol):
    """Combine atoms whose positions chain together within tol."""
    if x.size == 0:
        return x, m
    order = np.argsort(x, kind="stable")
    xs, ms = x[order], m[order]
    new_group = np.concatenate([[True], np.diff(xs) > tol])
    gid = np.cumsum(new_group) - 1
    pos = xs[new_group]
    mass = np.bincount(gid, weights=ms)
    return pos, mass


def in_intervals(positions, intervals) -> np.ndarray:
    """Boolean mask of positions inside a union of arcs [a, b) with 0 <= a <= b <= 1."""
    x = np.asarray(positions, dtype=float)
    mask = np.zeros(x.shape, dtype=bool)
    for a, b in intervals:
        if not (0.0 <= a <= b <= 1.0):
            raise DomainError(f"interval [{a}, {b}) must satisfy 0 <= a <= b <= 1")
        lo = x >= a - BOUNDARY_TOL if a > 0 else np.ones_like(mask)
        hi = x < b - BOUNDARY_TOL if b < 1 else np.ones_like(mask)
        mask |= lo & hi
    return mask


def ds_n(mu: AtomicTorusMeasure, N: int) -> float:
    """Sum over the N arcs [k/N, (k+1)/N) of |mu(arc) - 1/N|."""
    return float(np.sum(np.abs(mu.bin_masses(N) - 1.0 / N)))


def tv_distance(mu: AtomicTorusMeasure, nu: AtomicTorusMeasure) -> float:
    """Half the L1 distance between the merged atom masses."""
    x = np.concatenate([mu.positions, nu.positions])
    m = np.concatenate([mu.masses, -nu.masses])
    _, diff = _merge(x, m, MERGE_TOL)
    return float(0.5 * np.sum(np.abs(diff)))


def mix(measures: Sequence[AtomicTorusMeasure], weights) -> AtomicTorusMeasure:
    w = np.asarray(weights, dtype=float)
    if len(measures) != w.size or w.size == 0:
        raise DomainError("need one weight per measure")
    if np.any(w < 0) or abs(math.fsum(w) - 1.0) > MASS_TOL:
        raise DomainError("weights must be nonnegative and sum to 1")
    x = np.concatenate([mu.positions for mu in measures])
    m = np.concatenate([wi * mu.masses for wi, mu in zip(w, measures)])
    keep = m > 0
    if not np.any(keep):
        keep[:] = True
    return AtomicTorusMeasure(x[keep], m[keep] / math.fsum(m[keep]))


def subtract_rescale(mu: AtomicTorusMeasure, nu: AtomicTorusMeasure, c: float) -> AtomicTorusMeasure:
    """(mu - c nu) / (1 - c), requiring c nu <= mu atom by atom."""
    if not 0 < c < 1:
        raise DomainError("c must lie strictly between 0 and 1")
    x = np.concatenate([mu.positions, nu.positions])
    m = np.concatenate([mu.masses, -c * nu.masses])
    pos, diff = _merge(x, m, MERGE_TOL)
    bad = diff < -MASS_TOL
    if np.any(bad):
        i = int(np.argmax(bad))
        raise DomainError(f"c*nu exceeds mu at atom {pos[i]:.12g} by {-diff[i]:.3e}")
    diff = np.clip(diff, 0.0, None)
    keep = diff > 0
    return AtomicTorusMeasure(pos[keep], diff[keep] / math.fsum(diff[keep]))


@dataclass(frozen=True)
class TestFunction:
    """A function on the circle together with bounds on |psi| and |psi'|."""

    __test__ = False  # keep pytest from collecting this class

    f: Callable
    sup: float
    deriv_sup: float

    def __call__(self, x):
        return self.f(x)


def trig_polynomial(coeffs: dict) -> TestFunction:
    """psi(x) = sum_k c_k exp(2 pi i k x); sup bounds are the triangle-inequality ones."""
    ks = np.array(list(coeffs.keys()), dtype=float)
    cs = np.array(list(coeffs.values()), dtype=complex)

    def f(x):
        x = np.asarray(x, dtype=float)
        return np.exp(2j * np.pi * np.multiply.outer(x, ks)) @ cs

    return TestFunction(f, float(np.sum(np.abs(cs))), float(np.sum(2 * np.pi * np.abs(ks) * np.abs(cs))))


def _grid_bounds(psi, n=8193):
    x = np.linspace(0.0, 1.0, n)
    y = np.asarray(psi(x), dtype=complex)
    return float(np.max(np.abs(y))), float(np.max(np.abs(np.diff(y))) * (n - 1))


def lebesgue_integral(psi) -> complex:
    re = integrate.quad(lambda t: float(np.real(psi(np.array([t]))[0])), 0.0, 1.0, epsabs=1e-10, limit=200)[0]
    im = integrate.quad(lambda t: float(np.imag(psi(np.array([t]))[0])), 0.0, 1.0, epsabs=1e-10, limit=200)[0]
    return complex(re, im)


def integral_defect(mu: AtomicTorusMeasure, psi, N: int, psi_sup=None, deriv_sup=None):
    """(|int psi dmu - int psi dx|, DS_N(mu) sup|psi| + (2/N) sup|psi'|).

    ``psi`` is a ``TestFunction`` or a vectorized callable; for a bare callable
    without bounds they are estimated on a fine grid.
    """
    if isinstance(psi, TestFunction):
        psi_sup = psi.sup if psi_sup is None else psi_sup
        deriv_sup = psi.deriv_sup if deriv_sup is None else deriv_sup
        f = psi.f
    else:
        f = psi
        if psi_sup is None or deriv_sup is None:
            s, ds = _grid_bounds(f)
            psi_sup = s if psi_sup is None else psi_sup
            deriv_sup = ds if deriv_sup is None else deriv_sup
    lhs = abs(mu.integrate(f) - lebesgue_integral(f))
    rhs = ds_n(mu, N) * psi_sup + 2.0 / N * deriv_sup
    return float(lhs), float(rhs)
