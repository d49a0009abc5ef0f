"""Dense complex operator algebra for small quantum systems.

Vectorization is column-stacking throughout: ``vec(A)`` stacks the columns
of ``A``, so ``vec(A B C) = (C^T kron A) vec(B)``.  Every superoperator in
this package acts on column-stacked operators; mixing conventions is the
classic source of silent sign bugs, so all conversions live here.

Units are hbar = k_B = 1 everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg

from .tolerances import ALGEBRAIC, DYNAMICAL, LEVEL_MERGE_REL, STRUCTURAL

__all__ = [
    "Operator",
    "DensityMatrix",
    "Superoperator",
    "KrausMap",
    "eig_hermitian",
    "matexp",
    "tensor",
    "partial_trace",
    "expect",
    "evolve_unitary",
    "kraus_apply",
    "to_choi",
    "cp_check",
    "trace_distance",
    "vec",
    "unvec",
    "sandwich_superop",
    "hamiltonian_superop",
    "dissipator_superop",
    "unitary_superop",
    "identity_superop",
    "group_degenerate",
    "random_hermitian",
    "random_unitary",
    "random_density",
    "PAULI_X",
    "PAULI_Y",
    "PAULI_Z",
    "SIGMA_MINUS",
    "SIGMA_PLUS",
]

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
SIGMA_MINUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)  # |0><1|
SIGMA_PLUS = SIGMA_MINUS.conj().T


def _as_square_complex(mat) -> np.ndarray:
    arr = np.array(mat, dtype=complex, copy=True, order="C")
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {arr.shape}")
    if arr.shape[0] < 1:
        raise ValueError("empty matrix")
    if not (np.all(np.isfinite(arr.real)) and np.all(np.isfinite(arr.imag))):
        raise ValueError("matrix has NaN or Inf entries")
    arr.setflags(write=False)
    return arr


def _maxabs(arr: np.ndarray) -> float:
    return float(np.max(np.abs(arr))) if arr.size else 0.0


@dataclass(frozen=True)
class Operator:
    """A dense complex square matrix with a structural tag.

    ``kind`` is one of ``hermitian``, ``unitary`` or ``general``; the tag
    is verified at construction so downstream code can trust it.
    """

    mat: np.ndarray
    kind: str = "general"

    def __post_init__(self):
        arr = _as_square_complex(self.mat)
        object.__setattr__(self, "mat", arr)
        if self.kind == "hermitian":
            scale = max(1.0, _maxabs(arr))
            resid = _maxabs(arr - arr.conj().T)
            if resid > STRUCTURAL * scale:
                raise ValueError(
                    f"matrix tagged hermitian but |A - A^dag| = {resid:.3e}"
                )
        elif self.kind == "unitary":
            d = arr.shape[0]
            resid = _maxabs(arr.conj().T @ arr - np.eye(d))
            if resid > ALGEBRAIC:
                raise ValueError(
                    f"matrix tagged unitary but |A^dag A - I| = {resid:.3e}"
                )
        elif self.kind != "general":
            raise ValueError(f"unknown operator kind {self.kind!r}")

    @classmethod
    def hermitian(cls, mat) -> "Operator":
        return cls(mat, kind="hermitian")

    @classmethod
    def unitary(cls, mat) -> "Operator":
        return cls(mat, kind="unitary")

    @classmethod
    def general(cls, mat) -> "Operator":
        return cls(mat, kind="general")

    @classmethod
    def identity(cls, dim: int) -> "Operator":
        return cls(np.eye(dim), kind="unitary")

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def dag(self) -> "Operator":
        return Operator(self.mat.conj().T, kind=self.kind)

    def is_hermitian(self) -> bool:
        scale = max(1.0, _maxabs(self.mat))
        return _maxabs(self.mat - self.mat.conj().T) <= STRUCTURAL * scale


@dataclass(frozen=True)
class DensityMatrix:
    """A positive unit-trace operator: the state of the system."""

    mat: np.ndarray

    def __post_init__(self):
        arr = _as_square_complex(self.mat)
        object.__setattr__(self, "mat", arr)
        herm = _maxabs(arr - arr.conj().T)
        if herm > STRUCTURAL * max(1.0, _maxabs(arr)):
            raise ValueError(f"density matrix not hermitian: residual {herm:.3e}")
        tr = complex(np.trace(arr))
        if abs(tr - 1.0) > ALGEBRAIC:
            raise ValueError(f"density matrix trace {tr} differs from 1")
        evals = np.linalg.eigvalsh((arr + arr.conj().T) / 2.0)
        if evals[0] < -ALGEBRAIC:
            raise ValueError(f"density matrix has negative eigenvalue {evals[0]:.3e}")

    @classmethod
    def pure(cls, ket) -> "DensityMatrix":
        v = np.asarray(ket, dtype=complex).reshape(-1)
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()))

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityMatrix":
        return cls(np.eye(dim) / dim)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def purity(self) -> float:
        return float(np.real(np.trace(self.mat @ self.mat)))


def vec(mat: np.ndarray) -> np.ndarray:
    """Column-stack a matrix into a vector."""
    return np.asarray(mat).reshape(-1, order="F")


def unvec(v: np.ndarray, dim: int | None = None) -> np.ndarray:
    """Inverse of :func:`vec` for square matrices."""
    v = np.asarray(v).reshape(-1)
    if dim is None:
        dim = int(round(math.isqrt(v.size)))
        if dim * dim != v.size:
            raise ValueError(f"vector of length {v.size} is not a square vec")
    return v.reshape(dim, dim, order="F")


@dataclass(frozen=True)
class Superoperator:
    """A linear map on operators, stored as a d^2 x d^2 matrix acting on
    column-stacked operators."""

    mat: np.ndarray

    def __post_init__(self):
        arr = _as_square_complex(self.mat)
        d = int(round(math.isqrt(arr.shape[0])))
        if d * d != arr.shape[0]:
            raise ValueError(f"superoperator side {arr.shape[0]} is not a square")
        object.__setattr__(self, "mat", arr)

    @property
    def dim(self) -> int:
        return int(round(math.isqrt(self.mat.shape[0])))

    def apply_matrix(self, m: np.ndarray) -> np.ndarray:
        out = unvec(self.mat @ vec(m), self.dim)
        return out

    def apply(self, rho: DensityMatrix) -> DensityMatrix:
        out = self.apply_matrix(rho.mat)
        out = (out + out.conj().T) / 2.0
        return DensityMatrix(out)

    def __matmul__(self, other: "Superoperator") -> "Superoperator":
        return Superoperator(self.mat @ other.mat)

    def trace_preservation_residual(self) -> float:
        """Max deviation of the dual action on the identity: trace(S rho)
        equals trace(rho) for all rho iff vec(I)^dag S = vec(I)^dag."""
        iv = vec(np.eye(self.dim)).conj()
        return _maxabs(iv @ self.mat - iv)


def identity_superop(dim: int) -> Superoperator:
    return Superoperator(np.eye(dim * dim))


def sandwich_superop(a: np.ndarray, b: np.ndarray) -> Superoperator:
    """The map rho -> A rho B as a superoperator: (B^T kron A)."""
    return Superoperator(np.kron(np.asarray(b).T, np.asarray(a)))


def hamiltonian_superop(h: Operator | np.ndarray) -> Superoperator:
    """The commutator generator rho -> -i [H, rho]."""
    hm = h.mat if isinstance(h, Operator) else np.asarray(h, dtype=complex)
    d = hm.shape[0]
    eye = np.eye(d)
    return Superoperator(-1j * (np.kron(eye, hm) - np.kron(hm.T, eye)))


def dissipator_superop(v: np.ndarray) -> Superoperator:
    """Lindblad dissipator rho -> V rho V^dag - (1/2){V^dag V, rho}."""
    v = np.asarray(v, dtype=complex)
    d = v.shape[0]
    eye = np.eye(d)
    vdv = v.conj().T @ v
    m = np.kron(v.conj(), v) - 0.5 * (np.kron(eye, vdv) + np.kron(vdv.T, eye))
    return Superoperator(m)


def unitary_superop(u: Operator | np.ndarray) -> Superoperator:
    """Conjugation map rho -> U rho U^dag."""
    um = u.mat if isinstance(u, Operator) else np.asarray(u, dtype=complex)
    return Superoperator(np.kron(um.conj(), um))


def eig_hermitian(a: Operator) -> tuple[np.ndarray, Operator]:
    """Eigendecomposition of a hermitian operator.

    Returns ascending eigenvalues and the unitary of eigenvectors V with
    A = V diag(lam) V^dag.
    """
    if not isinstance(a, Operator):
        raise TypeError("eig_hermitian expects an Operator")
    if not a.is_hermitian():
        raise ValueError("eig_hermitian: input is not hermitian")
    evals, evecs = np.linalg.eigh((a.mat + a.mat.conj().T) / 2.0)
    return evals, Operator.unitary(evecs)


def _is_normal(m: np.ndarray) -> bool:
    scale = max(1.0, _maxabs(m)) ** 2
    return _maxabs(m @ m.conj().T - m.conj().T @ m) <= 100 * STRUCTURAL * scale


def matexp(x: Operator | Superoperator, t: float = 1.0):
    """exp(X t), eigendecomposition for normal matrices and Pade
    scaling-and-squaring otherwise.  Returns the same wrapper type."""
    if isinstance(x, Superoperator):
        return Superoperator(scipy.linalg.expm(x.mat * t))
    if not isinstance(x, Operator):
        raise TypeError("matexp expects an Operator or Superoperator")
    m = x.mat
    if x.kind == "hermitian" or _is_normal(m):
        # Schur of a normal matrix is diagonal, giving exp through the
        # spectrum with orthonormal vectors.
        tvals, z = scipy.linalg.schur(m, output="complex")
        out = (z * np.exp(np.diag(tvals) * t)) @ z.conj().T
    else:
        out = scipy.linalg.expm(m * t)
    kind = "general"
    anti = _maxabs(m + m.conj().T)
    herm = _maxabs(m - m.conj().T)
    scale = max(1.0, _maxabs(m))
    if herm <= STRUCTURAL * scale and abs(np.imag(t)) == 0.0:
        kind = "hermitian"
        out = (out + out.conj().T) / 2.0
    elif anti <= STRUCTURAL * scale and abs(np.imag(t)) == 0.0:
        kind = "unitary"
    return Operator(out, kind=kind)


def _combine_kind(kinds: Sequence[str]) -> str:
    if all(k == "hermitian" for k in kinds):
        return "hermitian"
    if all(k == "unitary" for k in kinds):
        return "unitary"
    return "general"


def tensor(*ops):
    """Kronecker product with row-major subsystem ordering.

    Accepts Operators (returns an Operator) or DensityMatrices (returns a
    DensityMatrix).
    """
    if not ops:
        raise ValueError("tensor of nothing")
    if all(isinstance(o, DensityMatrix) for o in ops):
        out = ops[0].mat
        for o in ops[1:]:
            out = np.kron(out, o.mat)
        return DensityMatrix(out)
    mats = []
    kinds = []
    for o in ops:
        if isinstance(o, Operator):
            mats.append(o.mat)
            kinds.append(o.kind)
        elif isinstance(o, DensityMatrix):
            mats.append(o.mat)
            kinds.append("hermitian")
        else:
            mats.append(np.asarray(o, dtype=complex))
            kinds.append("general")
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return Operator(out, kind=_combine_kind(kinds))


def partial_trace(op, dims: Sequence[int], keep: Iterable[int]):
    """Trace out subsystems, keeping those indexed (from 0) in ``keep``.

    ``dims`` lists the subsystem dimensions in tensor order; their product
    must equal the operator dimension.  Returns the same wrapper type as
    the input.
    """
    is_rho = isinstance(op, DensityMatrix)
    m = op.mat if isinstance(op, (Operator, DensityMatrix)) else np.asarray(op)
    dims = list(int(d) for d in dims)
    n = len(dims)
    if int(np.prod(dims)) != m.shape[0]:
        raise ValueError(f"dims {dims} do not factor dimension {m.shape[0]}")
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= n for k in keep):
        raise ValueError(f"keep indices {keep} out of range for {n} subsystems")
    arr = m.reshape(dims + dims)
    row_idx = list(range(n))
    col_idx = [i + n if i in keep else i for i in range(n)]
    out_idx = [i for i in keep] + [i + n for i in keep]
    traced = np.einsum(arr, row_idx + col_idx, out_idx)
    d_keep = int(np.prod([dims[k] for k in keep])) if keep else 1
    traced = traced.reshape(d_keep, d_keep)
    if is_rho:
        return DensityMatrix((traced + traced.conj().T) / 2.0)
    if isinstance(op, Operator):
        kind = "hermitian" if op.kind == "hermitian" else "general"
        return Operator(traced, kind=kind)
    return traced


def expect(rho: DensityMatrix, a: Operator):
    """Tr(rho A); returns a float for hermitian observables."""
    if rho.dim != a.dim:
        raise ValueError(f"dimension mismatch: state {rho.dim}, observable {a.dim}")
    val = complex(np.trace(rho.mat @ a.mat))
    if a.kind == "hermitian" or a.is_hermitian():
        return float(val.real)
    return val


def evolve_unitary(rho: DensityMatrix, u: Operator) -> DensityMatrix:
    """U rho U^dag.  Rejects non-unitary input."""
    um = u.mat
    resid = _maxabs(um.conj().T @ um - np.eye(u.dim))
    if resid > ALGEBRAIC:
        raise ValueError(f"evolve_unitary: U not unitary, residual {resid:.3e}")
    out = um @ rho.mat @ um.conj().T
    return DensityMatrix((out + out.conj().T) / 2.0)


@dataclass(frozen=True)
class KrausMap:
    """A CP trace-preserving map rho -> sum_j W_j^dag rho W_j with the
    normalisation sum_j W_j W_j^dag = I."""

    kraus_ops: tuple = field(default_factory=tuple)

    def __post_init__(self):
        ops = tuple(_as_square_complex(w) for w in self.kraus_ops)
        if not ops:
            raise ValueError("KrausMap needs at least one operator")
        d = ops[0].shape[0]
        if any(w.shape[0] != d for w in ops):
            raise ValueError("Kraus operators must share one dimension")
        object.__setattr__(self, "kraus_ops", ops)
        resid = _maxabs(sum(w @ w.conj().T for w in ops) - np.eye(d))
        if resid > ALGEBRAIC:
            raise ValueError(
                f"Kraus set not normalised: |sum W W^dag - I| = {resid:.3e}"
            )

    @property
    def dim(self) -> int:
        return self.kraus_ops[0].shape[0]

    def as_superoperator(self) -> Superoperator:
        m = sum(np.kron(w.T, w.conj().T) for w in self.kraus_ops)
        return Superoperator(m)


def kraus_apply(kmap: KrausMap, rho: DensityMatrix) -> DensityMatrix:
    if kmap.dim != rho.dim:
        raise ValueError("dimension mismatch between map and state")
    out = sum(w.conj().T @ rho.mat @ w for w in kmap.kraus_ops)
    return DensityMatrix((out + out.conj().T) / 2.0)


def to_choi(s: Superoperator) -> Operator:
    """Choi matrix of a superoperator via its action on the (unnormalised)
    maximally entangled reference: C = sum_ij |i><j| kron S(|i><j|)."""
    d = s.dim
    s4 = s.mat.reshape(d, d, d, d)
    choi = s4.transpose(3, 1, 2, 0).reshape(d * d, d * d)
    return Operator(choi, kind="general")


def cp_check(s: Superoperator) -> tuple[bool, float]:
    """Complete positivity via the Choi spectrum.

    Returns (is_cp, min_eig).  The Choi matrix of a hermiticity-preserving
    map is hermitian; residual non-hermiticity is symmetrised away before
    the spectrum is taken.
    """
    choi = to_choi(s).mat
    herm = (choi + choi.conj().T) / 2.0
    min_eig = float(np.linalg.eigvalsh(herm)[0])
    return (min_eig >= -DYNAMICAL, min_eig)


def trace_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """(1/2) ||rho - sigma||_1."""
    diff = rho.mat - sigma.mat
    svals = np.linalg.svd((diff + diff.conj().T) / 2.0, compute_uv=False)
    return 0.5 * float(np.sum(svals))


def group_degenerate(values: np.ndarray, tol: float | None = None) -> list[np.ndarray]:
    """Cluster a sorted-or-not list of reals into degenerate groups.

    Values within ``tol`` of the running cluster head join that cluster.
    Default tolerance is LEVEL_MERGE_REL times the spread (or 1 for a flat
    spectrum).  Returns index arrays, ordered by cluster value.
    """
    values = np.asarray(values, dtype=float)
    if tol is None:
        spread = float(values.max() - values.min()) if values.size else 0.0
        tol = LEVEL_MERGE_REL * max(spread, 1.0)
    order = np.argsort(values)
    groups: list[list[int]] = []
    head = None
    for idx in order:
        v = values[idx]
        if head is None or v - head > tol:
            groups.append([idx])
            head = v
        else:
            groups[-1].append(idx)
    return [np.array(g, dtype=int) for g in groups]


def random_hermitian(dim: int, rng: np.random.Generator, scale: float = 1.0) -> Operator:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return Operator.hermitian(scale * (g + g.conj().T) / 2.0)


def random_unitary(dim: int, rng: np.random.Generator) -> Operator:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(g)
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    return Operator.unitary(q)


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> DensityMatrix:
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    m = g @ g.conj().T
    return DensityMatrix(m / np.trace(m))
