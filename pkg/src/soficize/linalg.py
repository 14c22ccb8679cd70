"""Dense complex matrix primitives: norms, unitary spectra and frame repair.

Frames are plain 2-D complex arrays whose columns are the vectors. A
``ProjectionRep`` stores an orthonormal frame for the range of a projection,
so ``p = B B*`` is never formed unless asked for.
"""
from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg as sla

from .errors import (
    BoundViolation,
    DegeneracyError,
    DomainError,
    PreconditionError,
    StructuralError,
    ValidationError,
)

log = logging.getLogger(__name__)

TOL_GRAM = 1e-9
UNITARY_TOL = 1e-8
EIG_TOL = 1e-8
SINGULAR_FLOOR = 1e-12
# Gram eigenvalues below this are treated as a rank drop.
GRAM_FLOOR = 1e-12
# Absolute slack added when checking a guaranteed inequality in floating point.
BOUND_SLACK = 1e-10


def as_matrix(a, name="matrix") -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise StructuralError(f"{name} must be 2-D, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DomainError(f"{name} has non-finite entries")
    return m


def as_frame(xs, name="frame") -> np.ndarray:
    """Columns of a 2-D array, or a single 1-D vector as a one-column frame."""
    x = np.asarray(xs, dtype=complex)
    if x.ndim == 1:
        x = x[:, None]
    return as_matrix(x, name)


def _square(m, name="matrix"):
    m = as_matrix(m, name)
    if m.shape[0] != m.shape[1]:
        raise StructuralError(f"{name} must be square, got shape {m.shape}")
    return m


class Norms(NamedTuple):
    hs: float
    op: float
    trace: complex | None


def hs_norm(s) -> float:
    return float(np.linalg.norm(s))


def op_norm(s) -> float:
    s = np.asarray(s)
    if s.size == 0:
        return 0.0
    return float(np.linalg.norm(s, 2))


def norms(s, trace: bool = True) -> Norms:
    """Hilbert-Schmidt norm, operator norm and (optionally) trace."""
    s = as_matrix(s)
    tr = None
    if trace:
        if s.shape[0] != s.shape[1]:
            raise StructuralError("trace requested for a non-square matrix")
        tr = complex(np.trace(s))
    return Norms(hs_norm(s), op_norm(s), tr)


def unitary_defect(u) -> float:
    u = _square(u)
    return op_norm(u.conj().T @ u - np.eye(u.shape[0]))


def check_unitary(u, tol=UNITARY_TOL, name="matrix") -> np.ndarray:
    u = _square(u, name)
    defect = unitary_defect(u)
    if defect > tol:
        raise ValidationError(f"{name} is not unitary: defect {defect:.3e} > {tol:.1e}", defect)
    return u


def cyclic_shift(d: int, k: int = 1) -> np.ndarray:
    """Permutation matrix sending e_j to e_{j+k mod d}."""
    return np.roll(np.eye(d, dtype=complex), k, axis=0)


def phases_from_eigenvalues(lam) -> np.ndarray:
    """Map unit complex numbers to phases in [0, 1), snapping 1-ulp wraparound to 0."""
    ph = np.mod(np.angle(lam) / (2 * np.pi), 1.0)
    ph[ph >= 1.0 - 1e-14] = 0.0
    return ph


# Rotations tried before the Cayley transform; irrational multiples of a turn.
_CAYLEY_ROTATIONS = (0.3819660112501051, 0.7236067977499789, 0.1458980337503155)


def _cayley_eig(u, rot):
    """Eigenvectors of u from the Hermitian Cayley transform of e^{2 pi i rot} u."""
    d = u.shape[0]
    w = np.exp(2j * np.pi * rot) * u
    eye = np.eye(d)
    h = 1j * np.linalg.solve((eye + w).T, (eye - w).T).T
    h = (h + h.conj().T) / 2
    _, Z = np.linalg.eigh(h)
    lam = np.einsum("ij,ij->j", Z.conj(), u @ Z)
    return lam, Z


def unitary_eigendecomposition(u, tol=UNITARY_TOL, eig_tol=EIG_TOL, method="cayley"):
    """Eigenphases in [0, 1) sorted ascending and an orthonormal eigenvector frame.

    The default route diagonalizes the Hermitian Cayley transform of a rotated
    copy of u, which gives exactly orthonormal vectors even for clustered
    spectra; eigenvalues are then read off as Rayleigh quotients. If the
    residual check fails for every rotation, a complex Schur form is used.
    """
    u = check_unitary(u, tol)
    d = u.shape[0]
    if d == 0:
        return np.zeros(0), np.zeros((0, 0), complex)
    limit = eig_tol * max(1.0, np.sqrt(d))
    attempts = []
    if method == "cayley":
        attempts = [("cayley", r) for r in _CAYLEY_ROTATIONS]
    attempts.append(("schur", None))
    resid = np.inf
    for kind, rot in attempts:
        if kind == "cayley":
            try:
                lam, Z = _cayley_eig(u, rot)
            except np.linalg.LinAlgError:
                continue
        else:
            T, Z = sla.schur(u, output="complex")
            lam = np.diag(T).copy()
        lam = lam / np.abs(lam)
        resid = op_norm(u @ Z - Z * lam[None, :])
        if resid <= limit:
            break
    else:
        raise ValidationError(f"eigendecomposition residual {resid:.3e} too large", resid)
    ph = phases_from_eigenvalues(lam)
    order = np.argsort(ph, kind="stable")
    return ph[order], Z[:, order]


def gram(xs) -> np.ndarray:
    x = as_frame(xs)
    return x.conj().T @ x


def max_offdiag(g) -> float:
    g = np.asarray(g)
    n = g.shape[0]
    if n < 2:
        return 0.0
    return float(np.max(np.abs(g - np.diag(np.diag(g)))))


def orthonormality_defect(xs) -> float:
    x = as_frame(xs)
    return float(np.max(np.abs(gram(x) - np.eye(x.shape[1])), initial=0.0))


def _inv_sqrt_psd(g):
    w, V = np.linalg.eigh(g)
    if w.size and w.min() <= GRAM_FLOOR * max(1.0, w.max()):
        raise DegeneracyError(f"Gram matrix is singular (smallest eigenvalue {w.min():.3e})")
    return (V * (1.0 / np.sqrt(w))[None, :]) @ V.conj().T


def lowdin_orthogonalize(xs, delta=None) -> np.ndarray:
    """Symmetric orthogonalization X G^{-1/2}.

    With ``delta`` given, the inputs must be unit vectors with pairwise overlaps
    at most delta, and the result is checked against max_j |x_j - t_j| <= delta n.
    """
    x = as_frame(xs)
    n = x.shape[1]
    if n == 0:
        return x.copy()
    g = x.conj().T @ x
    if delta is not None:
        fails = {}
        unit = float(np.max(np.abs(np.sqrt(np.real(np.diag(g))) - 1.0)))
        if unit > 1e-9:
            fails["unit_vectors"] = (unit, 1e-9)
        ov = max_offdiag(g)
        if ov > delta + BOUND_SLACK:
            fails["pairwise_overlap"] = (ov, delta)
        if fails:
            raise PreconditionError("orthogonalization preconditions fail", fails)
    t = x @ _inv_sqrt_psd(g)
    if delta is not None:
        dev = float(np.max(np.linalg.norm(x - t, axis=0)))
        if dev > delta * n + BOUND_SLACK:
            raise BoundViolation(f"orthogonalization moved a vector by {dev:.4g} > delta*n = {delta * n:.4g}")
    return t


def check_linear_independence(xs) -> bool:
    """Diagonal dominance settles it when overlaps are at most 1/n; otherwise Gram rank."""
    x = as_frame(xs)
    n = x.shape[1]
    if n == 0:
        return True
    if n > x.shape[0]:
        return False
    g = x.conj().T @ x
    if max_offdiag(g) <= 1.0 / n - BOUND_SLACK and np.allclose(np.diag(g).real, 1.0, atol=1e-9):
        return True
    w = np.linalg.eigvalsh(g)
    return bool(w.min() > GRAM_FLOOR * max(1.0, w.max()) * n)


@dataclass(frozen=True)
class ProjectionRep:
    """Orthogonal projection stored as an orthonormal basis of its range."""

    basis: np.ndarray

    def __post_init__(self):
        b = as_frame(self.basis, "projection basis")
        if b.shape[1] > b.shape[0]:
            raise StructuralError("projection basis has more columns than rows")
        defect = orthonormality_defect(b) if b.shape[1] else 0.0
        if defect > TOL_GRAM * 10:
            raise ValidationError(f"projection basis not orthonormal (defect {defect:.3e})", defect)
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)

    @classmethod
    def zero(cls, d: int) -> "ProjectionRep":
        return cls(np.zeros((d, 0), complex))

    @classmethod
    def full(cls, d: int) -> "ProjectionRep":
        return cls(np.eye(d, dtype=complex))

    @classmethod
    def from_span(cls, xs, rtol=1e-10) -> "ProjectionRep":
        """Projection onto the span of arbitrary columns."""
        x = as_frame(xs)
        if x.shape[1] == 0:
            return cls.zero(x.shape[0])
        U, s, _ = np.linalg.svd(x, full_matrices=False)
        k = int(np.sum(s > rtol * max(1.0, s.max())))
        return cls(U[:, :k])

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    def matrix(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T

    def apply(self, x) -> np.ndarray:
        b = self.basis
        return b @ (b.conj().T @ x)

    def complement_apply(self, x) -> np.ndarray:
        return x - self.apply(x)

    def complement(self) -> "ProjectionRep":
        if self.rank == 0:
            return ProjectionRep.full(self.dim)
        if self.rank == self.dim:
            return ProjectionRep.zero(self.dim)
        q, _ = np.linalg.qr(self.basis, mode="complete")
        c = q[:, self.rank:]
        # One refinement pass keeps the complement orthogonal to a nearly orthonormal basis.
        c = c - self.apply(c)
        c, _ = np.linalg.qr(c)
        return ProjectionRep(c)

    def extend(self, frame) -> "ProjectionRep":
        """Direct sum with an orthonormal frame orthogonal to the current range."""
        return ProjectionRep(np.concatenate([self.basis, as_frame(frame)], axis=1))


def as_projection(p, d=None) -> ProjectionRep:
    if isinstance(p, ProjectionRep):
        return p
    return ProjectionRep.from_span(p)


def complement_decompose(p, xs, delta=None, kappa=None, check=True):
    """Split vectors off a projection and orthonormalize what is left.

    Returns ``(phis, thetas)`` where phi_k = (I-p)x_k / sqrt(1 - |p x_k|^2) and
    thetas is the symmetric orthogonalization of the phis. With ``check`` the
    stated hypotheses are verified first and the 2 delta n bound afterwards.
    """
    p = as_projection(p)
    x = as_frame(xs)
    if x.shape[0] != p.dim:
        raise StructuralError("vectors and projection live in different dimensions")
    n = x.shape[1]
    px = p.apply(x)
    px_norm2 = np.sum(np.abs(px) ** 2, axis=0)
    comp = x - px
    if check:
        if delta is None or kappa is None:
            raise DomainError("delta and kappa are required when check=True")
        fails = complement_hypotheses(p, x, delta, kappa)
        if fails:
            raise PreconditionError("complement decomposition preconditions fail", fails)
    scale = 1.0 - px_norm2
    if np.any(scale <= GRAM_FLOOR):
        raise DegeneracyError("a vector lies inside the projection range")
    phis = comp / np.sqrt(scale)[None, :]
    thetas = lowdin_orthogonalize(phis)
    if check and n:
        dev = float(np.max(np.linalg.norm(phis - thetas, axis=0)))
        if dev > 2 * delta * n + BOUND_SLACK:
            raise BoundViolation(f"complement orthogonalization moved a vector by {dev:.4g} > 2 delta n")
    return phis, thetas


def complement_hypotheses(p, xs, delta, kappa) -> dict:
    """Measured values of each failed hypothesis as ``{name: (measured, allowed)}``."""
    p = as_projection(p)
    x = as_frame(xs)
    n = x.shape[1]
    fails = {}
    if not kappa < 0.1:
        fails["kappa_below_tenth"] = (float(kappa), 0.1)
    if n and 2 * delta > 1.0 / n + BOUND_SLACK:
        fails["two_delta_le_inv_n"] = (2 * float(delta), 1.0 / n)
    if n:
        pn = float(np.max(np.linalg.norm(p.apply(x), axis=0)))
        if pn > kappa + BOUND_SLACK:
            fails["projection_norm"] = (pn, float(kappa))
        ov = max_offdiag(p.complement_apply(x).conj().T @ x)
        if ov > delta + BOUND_SLACK:
            fails["complement_overlap"] = (ov, float(delta))
    return fails


class PolarResult(NamedTuple):
    unitary: np.ndarray
    n_degenerate: int


def polar_unitary(w, floor=SINGULAR_FLOOR) -> PolarResult:
    """Unitary factor of the polar decomposition via the SVD.

    Every singular value is replaced by phase 1; values below ``floor`` carry no
    direction information and also get phase 1, which is counted and logged.
    """
    w = _square(w)
    if w.shape[0] == 0:
        return PolarResult(w.copy(), 0)
    a, s, bh = np.linalg.svd(w)
    n_deg = int(np.sum(s < floor))
    if n_deg:
        log.info("polar repair: %d singular values below %.0e given phase 1", n_deg, floor)
    return PolarResult(a @ bh, n_deg)


def repair_block_unitary(u, p, delta=None, return_info=False):
    """Nearest unitary on range(p): polar factor of the compression p u p.

    The result v satisfies v*v = vv* = p and commutes with p. When delta is
    given, ``|(I-p) u p|_HS^2 <= delta d`` is checked first and
    ``|(u - v) p|_HS^2 <= 4 delta d`` afterwards.
    """
    u = check_unitary(u)
    p = as_projection(p)
    d = u.shape[0]
    if p.dim != d:
        raise StructuralError("projection and matrix dimensions differ")
    if delta is not None:
        if not delta < 0.5:
            raise DomainError(f"delta must be below 1/2, got {delta}")
        b = p.basis
        leak = hs_norm(p.complement_apply(u @ b)) ** 2
        if leak > delta * d + BOUND_SLACK:
            raise PreconditionError("block repair precondition fails", {"leakage": (leak, delta * d)})
    b = p.basis
    w = b.conj().T @ u @ b
    small, n_deg = polar_unitary(w)
    v = b @ small @ b.conj().T
    if delta is not None:
        err = hs_norm((u - v) @ b) ** 2
        if err > 4 * delta * d + BOUND_SLACK:
            raise BoundViolation(f"block repair error {err:.4g} > 4 delta d = {4 * delta * d:.4g}")
    if return_info:
        return v, {"n_degenerate": n_deg, "compressed": small}
    return v


def haar_unitary(d: int, rng) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Gaussian matrix with phase fix."""
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph[None, :]


def random_hermitian(d: int, rng, hs=None) -> np.ndarray:
    """GUE-type Hermitian matrix, optionally rescaled to a given HS norm."""
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    h = (a + a.conj().T) / 2
    if hs is not None:
        h *= hs / np.linalg.norm(h)
    return h


# Matrix exchange format

def matrix_to_json(m, sidecar: str | None = None, base_dir: str = ".") -> dict:
    """JSON object for a matrix; with ``sidecar`` the entries go to a binary file."""
    m = as_matrix(m)
    head = {"dim_rows": int(m.shape[0]), "dim_cols": int(m.shape[1])}
    if sidecar is None:
        flat = m.reshape(-1)
        head["entries"] = [[float(z.real), float(z.imag)] for z in flat]
    else:
        np.ascontiguousarray(m, dtype="<c16").tofile(os.path.join(base_dir, sidecar))
        head["sidecar"] = sidecar
        head["sidecar_format"] = "float64-le-interleaved"
    return head


def matrix_from_json(obj: dict, base_dir: str = ".") -> np.ndarray:
    rows, cols = int(obj["dim_rows"]), int(obj["dim_cols"])
    if "sidecar" in obj:
        data = np.fromfile(os.path.join(base_dir, obj["sidecar"]), dtype="<c16")
    else:
        e = np.asarray(obj["entries"], dtype=float).reshape(-1, 2)
        data = e[:, 0] + 1j * e[:, 1]
    if data.size != rows * cols:
        raise StructuralError(f"expected {rows * cols} entries, found {data.size}")
    return as_matrix(data.reshape(rows, cols).astype(complex))


def save_matrix(path: str, m, binary: bool = False) -> None:
    base_dir = os.path.dirname(os.path.abspath(path))
    sidecar = os.path.basename(path) + ".bin" if binary else None
    with open(path, "w") as fh:
        json.dump(matrix_to_json(m, sidecar, base_dir), fh)


def load_matrix(path: str) -> np.ndarray:
    with open(path) as fh:
        obj = json.load(fh)
    return matrix_from_json(obj, os.path.dirname(os.path.abspath(path)))
