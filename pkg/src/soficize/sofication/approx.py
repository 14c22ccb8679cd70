"""Hyperlinear and sofic approximations of Z^r and their defect tables."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..errors import StructuralError, ValidationError
from ..group import as_element, identity, inverse, multiply, sorted_elements
from ..linalg import (
    TOL_GRAM,
    UNITARY_TOL,
    ProjectionRep,
    as_matrix,
    check_unitary,
    hs_norm,
    orthonormality_defect,
)
from ..spectra import Eigen


class HyperlinearApprox:
    """A map from group elements to unitaries on C^d.

    Explicitly stored units form the support. An optional ``extension``
    callable defines further elements lazily; its values are cached.
    """

    def __init__(self, rank: int, dim: int, units: dict | None = None,
                 extension: Callable | None = None, check: bool = True, name: str = ""):
        self.rank = int(rank)
        self.dim = int(dim)
        self.name = name
        self._units = {}
        self._cache = {}
        self._eigen = {}
        self.extension = extension
        self.check = check
        self._power_base = None
        e = identity(self.rank)
        for g, m in (units or {}).items():
            self._set(as_element(g, self.rank), m)
        if e in self._units:
            if hs_norm(self._units[e] - np.eye(self.dim)) > 1e-9:
                raise ValidationError("identity element must map to the identity matrix")
        else:
            self._units[e] = np.eye(self.dim, dtype=complex)

    def _set(self, g, m):
        m = as_matrix(m)
        if m.shape != (self.dim, self.dim):
            raise StructuralError(f"unit for {g} has shape {m.shape}, expected {(self.dim, self.dim)}")
        if self.check:
            check_unitary(m, UNITARY_TOL, name=f"unit for {g}")
        self._units[g] = m

    @property
    def support(self) -> list:
        return sorted(self._units)

    def defined(self, g) -> bool:
        g = as_element(g, self.rank)
        return g in self._units or self.extension is not None

    def __call__(self, g) -> np.ndarray:
        return self.unit(g)

    def unit(self, g) -> np.ndarray:
        g = as_element(g, self.rank)
        if g in self._units:
            return self._units[g]
        if g in self._cache:
            return self._cache[g]
        if self.extension is None:
            raise StructuralError(f"element {g} is outside the support")
        m = as_matrix(self.extension(g))
        if self.check:
            check_unitary(m, UNITARY_TOL, name=f"unit for {g}")
        self._cache[g] = m
        return m

    def eigen(self, g) -> Eigen:
        """Cached eigendecomposition of the unit for g."""
        g = as_element(g, self.rank)
        if g not in self._eigen:
            base = self._power_base
            if base is not None and self.rank == 1 and g not in ((0,), (1,)):
                self._eigen[g] = self.eigen((1,)).power(g[0])
            else:
                self._eigen[g] = Eigen.of(self.unit(g))
        return self._eigen[g]

    def orbit(self, xi, elements) -> np.ndarray:
        """Columns a(h) xi for h in ``elements``.

        Powers of a single generator go through its eigenbasis, so no power
        matrix is formed.
        """
        xi = np.asarray(xi)
        elements = [as_element(h, self.rank) for h in elements]
        if self._power_base is not None and self.rank == 1:
            eig = self.eigen((1,))
            ks = np.array([h[0] for h in elements], dtype=float)
            c = eig.vectors.conj().T @ xi
            return eig.vectors @ (np.exp(2j * np.pi * np.outer(eig.phases, ks)) * c[:, None])
        return np.stack([self.unit(h) @ xi for h in elements], axis=1)

    def drop_caches(self):
        self._cache.clear()
        self._eigen.clear()

    def restrict(self, elements) -> "HyperlinearApprox":
        return HyperlinearApprox(self.rank, self.dim, {g: self.unit(g) for g in elements}, check=False)

    def symmetric_closure_ok(self) -> bool:
        return all(inverse(g) in self._units for g in self._units) or self.extension is not None

    @classmethod
    def from_generators(cls, generators, check: bool = True, name: str = "") -> "HyperlinearApprox":
        """Units defined on all of Z^r by words in the given generator unitaries.

        The unit of (c_1..c_r) is u_1^{c_1} ... u_r^{c_r}, negative powers using
        the adjoint.
        """
        gens = [check_unitary(as_matrix(u)) if check else as_matrix(u) for u in generators]
        r = len(gens)
        d = gens[0].shape[0]
        powers = [dict() for _ in range(r)]

        def power(i, k):
            if k == 0:
                return np.eye(d, dtype=complex)
            tab = powers[i]
            sgn = 1 if k > 0 else -1
            step = gens[i] if k > 0 else gens[i].conj().T
            j = k
            while j != 0 and j not in tab:
                j -= sgn
            m = tab[j] if j else np.eye(d, dtype=complex)
            while j != k:
                j += sgn
                m = step @ m
                tab[j] = m
            return m

        def ext(g):
            nz = [i for i, c in enumerate(g) if c]
            if len(nz) == 1:
                return power(nz[0], g[nz[0]])
            m = np.eye(d, dtype=complex)
            for i, c in enumerate(g):
                if c:
                    m = m @ power(i, c)
            return m

        units = {tuple(int(i == j) for j in range(r)): gens[i] for i in range(r)}
        out = cls(r, d, units, extension=ext, check=False, name=name)
        out.check = check
        if r == 1:
            out._power_base = gens[0]
        out.generators = gens
        return out

    def compress(self, basis) -> "HyperlinearApprox":
        """Lazily compressed units B* u(g) B, which need not be unitary."""
        b = np.asarray(basis)
        return HyperlinearApprox(self.rank, b.shape[1], extension=lambda g: b.conj().T @ self.unit(g) @ b,
                                 check=False)


@dataclass
class DefectReport:
    """Composition defects |a(gh) - a(g)a(h)|_HS^2 / d and trace defects |tr a(h^-1 g)| / d."""

    composition: dict
    trace: dict
    eps: float

    @property
    def max_composition(self) -> float:
        return max(self.composition.values(), default=0.0)

    @property
    def max_trace(self) -> float:
        return max(self.trace.values(), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_composition <= self.eps and self.max_trace <= self.eps

    def to_dict(self) -> dict:
        return {
            "eps": self.eps,
            "max_composition": self.max_composition,
            "max_trace": self.max_trace,
            "passed": self.passed,
            "composition": [[list(g), list(h), v] for (g, h), v in sorted(self.composition.items())],
            "trace": [[list(g), list(h), v] for (g, h), v in sorted(self.trace.items())],
        }


def validate_hyperlinear(alpha: HyperlinearApprox, F, eps: float) -> DefectReport:
    F = sorted_elements(F)
    for g in F:
        if not alpha.defined(g):
            raise StructuralError(f"element {g} is outside the support")
    d = alpha.dim
    comp, tr = {}, {}
    for g, h in itertools.product(F, F):
        gh = multiply(g, h)
        if not alpha.defined(gh):
            raise StructuralError(f"product {gh} is outside the support")
        comp[(g, h)] = hs_norm(alpha(gh) - alpha(g) @ alpha(h)) ** 2 / d
        if g != h:
            tr[(g, h)] = abs(np.trace(alpha(multiply(inverse(h), g)))) / d
    return DefectReport(comp, tr, float(eps))


def almost_invariance_defect(alpha, p, E) -> float:
    """max over g in E of |(I - p) a(g) p|_HS / sqrt(tr p)."""
    p = p if isinstance(p, ProjectionRep) else ProjectionRep.from_span(p)
    if p.rank == 0:
        raise StructuralError("projection must be nonzero")
    b = p.basis
    vals = [hs_norm(p.complement_apply(alpha(g) @ b)) for g in E]
    return float(max(vals) / np.sqrt(p.rank))


class SoficApprox:
    """Permutations of {0..n-1} indexed by group elements.

    ``perms[g][v]`` is the image of point v under g.
    """

    def __init__(self, point_count: int, perms: dict, rank: int | None = None):
        self.point_count = int(point_count)
        self.perms = {}
        for g, p in perms.items():
            g = as_element(g, rank)
            arr = np.asarray(p, dtype=np.int64)
            if arr.shape != (self.point_count,):
                raise StructuralError(f"permutation for {g} has wrong length")
            if not np.array_equal(np.sort(arr), np.arange(self.point_count)):
                raise StructuralError(f"image for {g} is not a bijection")
            arr.setflags(write=False)
            self.perms[g] = arr
        self.rank = rank if rank is not None else (len(next(iter(self.perms))) if self.perms else 1)

    @property
    def support(self) -> list:
        return sorted(self.perms)

    def __call__(self, g) -> np.ndarray:
        g = as_element(g, self.rank)
        if g not in self.perms:
            raise StructuralError(f"element {g} is outside the support")
        return self.perms[g]

    def matrix(self, g) -> np.ndarray:
        """Permutation matrix sending basis vector v to basis vector perms[g][v]."""
        n = self.point_count
        m = np.zeros((n, n))
        m[self(g), np.arange(n)] = 1.0
        return m

    def fixed_points(self, g) -> int:
        return int(np.sum(self(g) == np.arange(self.point_count)))

    def to_dict(self) -> dict:
        return {"point_count": self.point_count,
                "perms": [[list(g), self.perms[g].tolist()] for g in self.support]}

    @classmethod
    def from_dict(cls, obj) -> "SoficApprox":
        return cls(obj["point_count"], {tuple(g): p for g, p in obj["perms"]})


def validate_sofic(sigma: SoficApprox, F, eps: float) -> DefectReport:
    """Fractions of points where sigma(g)sigma(h) != sigma(gh), and where sigma(g) = sigma(h)."""
    F = sorted_elements(F)
    n = sigma.point_count
    comp, coinc = {}, {}
    for g, h in itertools.product(F, F):
        gh = multiply(g, h)
        comp[(g, h)] = float(np.sum(sigma(g)[sigma(h)] != sigma(gh))) / n
        if g != h:
            coinc[(g, h)] = float(np.sum(sigma(g) == sigma(h))) / n
    return DefectReport(comp, coinc, float(eps))


@dataclass
class SoficInducedApprox:
    """Permutation action of a sofic approximation in an orthonormal basis.

    The basis may span a proper subspace; units then act on that subspace
    only. The first columns of ``basis`` are indexed by the sofic points; the last
    ``identity_block_rank`` columns span a block on which every unit is I.
    """

    basis: np.ndarray
    sofic: SoficApprox
    identity_block_rank: int = 0

    def __post_init__(self):
        b = as_matrix(self.basis)
        if b.shape[1] != self.sofic.point_count + self.identity_block_rank:
            raise StructuralError("basis columns do not match point count plus identity block")
        if b.shape[0] < b.shape[1]:
            raise StructuralError("basis has more columns than rows")
        defect = orthonormality_defect(b)
        if defect > TOL_GRAM * 10:
            raise ValidationError(f"basis not orthonormal (defect {defect:.3e})", defect)
        self.basis = b

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def rank(self) -> int:
        return self.sofic.rank

    def coordinate_matrix(self, g) -> np.ndarray:
        """The unit for g written in the stored basis: a permutation matrix."""
        n = self.sofic.point_count
        m = np.eye(self.basis.shape[1])
        m[:n, :n] = self.sofic.matrix(g)
        return m

    def matrix(self, g) -> np.ndarray:
        b = self.basis
        return b @ self.coordinate_matrix(g) @ b.conj().T

    def __call__(self, g) -> np.ndarray:
        return self.matrix(g)

    def defined(self, g) -> bool:
        return as_element(g, self.rank) in self.sofic.perms

    def apply_to(self, g, x) -> np.ndarray:
        """Unit for g applied to the columns of x, without forming the matrix."""
        b = self.basis
        n = self.sofic.point_count
        c = b.conj().T @ x
        out = c.copy()
        out[self.sofic(g)] = c[:n]
        return b @ out

    def to_hyperlinear(self) -> HyperlinearApprox:
        return HyperlinearApprox(self.rank, self.dim, extension=self.matrix, check=False)

    def full_sofic(self) -> SoficApprox:
        """The sofic approximation on all basis vectors, identity block points fixed."""
        n, t = self.sofic.point_count, self.identity_block_rank
        tail = np.arange(n, n + t)
        return SoficApprox(n + t, {g: np.concatenate([p, tail]) for g, p in self.sofic.perms.items()},
                           rank=self.rank)


def sofic_induce(sigma: SoficApprox, basis=None) -> SoficInducedApprox:
    """Permutation matrices of sigma, in the standard basis unless one is given."""
    n = sigma.point_count
    b = np.eye(n, dtype=complex) if basis is None else basis
    return SoficInducedApprox(b, sigma, 0)


def is_permutation_matrix(m, tol: float = 1e-12) -> bool:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    r = np.round(np.real(m))
    if np.max(np.abs(m - r), initial=0.0) > tol:
        return False
    if not np.all((r == 0) | (r == 1)):
        return False
    return bool(np.all(r.sum(axis=0) == 1) and np.all(r.sum(axis=1) == 1))
