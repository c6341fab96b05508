"""Finite-dimensional C*-algebras realized as direct sums of full matrix blocks."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import IncompatibleOperands, InvalidArgument, NotAHomomorphism

DEFAULT_TOL = 1e-9


def _frozen(mat) -> np.ndarray:
    arr = np.array(mat, dtype=complex)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Algebra:
    """The algebra M_{n_1} + ... + M_{n_k}."""

    block_dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(n) for n in self.block_dims)
        if len(dims) == 0 or any(n < 1 for n in dims):
            raise InvalidArgument(f"block dimensions must be a nonempty list of positive integers, got {self.block_dims!r}")
        object.__setattr__(self, "block_dims", dims)

    @property
    def nblocks(self) -> int:
        return len(self.block_dims)

    @property
    def dim(self) -> int:
        return sum(n * n for n in self.block_dims)

    @property
    def is_commutative(self) -> bool:
        return all(n == 1 for n in self.block_dims)

    def basis_labels(self) -> list[tuple[int, int, int]]:
        """Matrix units (block, row, col) in coordinate order."""
        return [(j, k, l) for j, n in enumerate(self.block_dims) for k in range(n) for l in range(n)]

    def offsets(self) -> list[int]:
        out, acc = [], 0
        for n in self.block_dims:
            out.append(acc)
            acc += n * n
        return out

    def index(self, block: int, row: int, col: int) -> int:
        n = self.block_dims[block]
        return self.offsets()[block] + row * n + col

    def elem(self, blocks: Sequence) -> "AlgElem":
        return AlgElem(self, tuple(_frozen(b) for b in blocks))

    def zero(self) -> "AlgElem":
        return self.elem([np.zeros((n, n)) for n in self.block_dims])

    def unit(self) -> "AlgElem":
        return self.elem([np.eye(n) for n in self.block_dims])

    def block_unit(self, block: int) -> "AlgElem":
        """Central projection onto one block."""
        return self.elem([np.eye(n) if j == block else np.zeros((n, n)) for j, n in enumerate(self.block_dims)])

    def matrix_unit(self, block: int, row: int, col: int) -> "AlgElem":
        blocks = [np.zeros((n, n), dtype=complex) for n in self.block_dims]
        blocks[block][row, col] = 1.0
        return self.elem(blocks)

    def basis(self) -> list["AlgElem"]:
        return [self.matrix_unit(*lab) for lab in self.basis_labels()]

    def from_coords(self, vec) -> "AlgElem":
        vec = np.asarray(vec, dtype=complex)
        if vec.shape != (self.dim,):
            raise InvalidArgument(f"expected {self.dim} coordinates, got shape {vec.shape}")
        blocks, pos = [], 0
        for n in self.block_dims:
            blocks.append(vec[pos:pos + n * n].reshape(n, n))
            pos += n * n
        return self.elem(blocks)

    def random(self, rng: np.random.Generator, hermitian: bool = False) -> "AlgElem":
        blocks = []
        for n in self.block_dims:
            m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            blocks.append((m + m.conj().T) / 2 if hermitian else m)
        return self.elem(blocks)

    def to_json(self) -> dict:
        return {"blocks": list(self.block_dims)}

    @classmethod
    def from_json(cls, data: dict) -> "Algebra":
        if not isinstance(data, dict) or "blocks" not in data:
            raise InvalidArgument("algebra JSON must be an object with a 'blocks' list")
        return make_algebra(data["blocks"])


def make_algebra(block_dims: Iterable[int]) -> Algebra:
    dims = list(block_dims)
    if not dims:
        raise InvalidArgument("an algebra needs at least one block")
    for n in dims:
        if int(n) != n or n < 1:
            raise InvalidArgument(f"block dimensions must be positive integers, got {n!r}")
    return Algebra(tuple(int(n) for n in dims))


@dataclass(frozen=True, eq=False)
class AlgElem:
    parent: Algebra
    blocks: tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.blocks) != self.parent.nblocks:
            raise InvalidArgument("number of blocks does not match the parent algebra")
        for b, n in zip(self.blocks, self.parent.block_dims):
            if b.shape != (n, n):
                raise InvalidArgument(f"block of shape {b.shape} does not conform to size {n}")

    def _check(self, other: "AlgElem"):
        if not isinstance(other, AlgElem) or other.parent != self.parent:
            raise IncompatibleOperands("elements live in different algebras")

    def __add__(self, other: "AlgElem") -> "AlgElem":
        self._check(other)
        return self.parent.elem([a + b for a, b in zip(self.blocks, other.blocks)])

    def __sub__(self, other: "AlgElem") -> "AlgElem":
        self._check(other)
        return self.parent.elem([a - b for a, b in zip(self.blocks, other.blocks)])

    def __neg__(self) -> "AlgElem":
        return self.parent.elem([-a for a in self.blocks])

    def __mul__(self, scalar) -> "AlgElem":
        if isinstance(scalar, AlgElem):
            return self @ scalar
        return self.parent.elem([scalar * a for a in self.blocks])

    __rmul__ = __mul__

    def __matmul__(self, other: "AlgElem") -> "AlgElem":
        self._check(other)
        return self.parent.elem([a @ b for a, b in zip(self.blocks, other.blocks)])

    def adjoint(self) -> "AlgElem":
        return self.parent.elem([a.conj().T for a in self.blocks])

    @property
    def H(self) -> "AlgElem":
        return self.adjoint()

    def norm(self) -> float:
        return max(float(np.linalg.norm(a, 2)) if a.size else 0.0 for a in self.blocks)

    def coords(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self.blocks])

    def dist(self, other: "AlgElem") -> float:
        return (self - other).norm()

    def is_hermitian(self, tol: float = DEFAULT_TOL) -> bool:
        return self.dist(self.adjoint()) <= tol * max(1.0, self.norm())

    def to_json(self) -> list:
        return [[[[float(z.real), float(z.imag)] for z in row] for row in b] for b in self.blocks]

    @classmethod
    def from_json(cls, alg: Algebra, data: list) -> "AlgElem":
        blocks = [np.array([[complex(re, im) for re, im in row] for row in b], dtype=complex).reshape(n, n)
                  for b, n in zip(data, alg.block_dims)]
        return alg.elem(blocks)

    def __repr__(self) -> str:
        return f"AlgElem({self.parent.block_dims}, norm={self.norm():.3g})"


def elem_product(a: AlgElem, b: AlgElem) -> AlgElem:
    return a @ b


def positivity_witness(a: AlgElem) -> tuple[float, int, np.ndarray]:
    """Most negative blockwise eigenvalue of the Hermitian part, with its block and eigenvector."""
    best = (np.inf, -1, np.zeros(0))
    for j, blk in enumerate(a.blocks):
        h = (blk + blk.conj().T) / 2
        w, v = np.linalg.eigh(h)
        if w[0] < best[0]:
            best = (float(w[0]), j, v[:, 0])
    return best


def is_positive(a: AlgElem, tol: float = DEFAULT_TOL) -> bool:
    scale = a.norm()
    if scale == 0.0:
        return True
    if a.dist(a.adjoint()) > tol * scale:
        return False
    return positivity_witness(a)[0] >= -tol * scale


def functional_calculus(a: AlgElem, f: Callable[[np.ndarray], np.ndarray], tol: float = DEFAULT_TOL) -> AlgElem:
    """Apply a scalar function to a Hermitian element blockwise through its eigendecomposition."""
    if not a.is_hermitian(tol):
        raise InvalidArgument("functional calculus needs a Hermitian element")
    blocks = []
    for blk in a.blocks:
        w, v = np.linalg.eigh((blk + blk.conj().T) / 2)
        blocks.append((v * f(w)) @ v.conj().T)
    return a.parent.elem(blocks)


def is_central(a: AlgElem, tol: float = DEFAULT_TOL) -> bool:
    """Central elements of a block sum are scalars on every block."""
    for blk in a.blocks:
        n = blk.shape[0]
        if np.abs(blk - np.trace(blk) / n * np.eye(n)).max() > tol * max(1.0, a.norm()):
            return False
    return True


@dataclass(frozen=True)
class Ideal:
    """A two-sided ideal of a block sum: the sub-sum over a set of blocks."""

    parent: Algebra
    block_mask: frozenset[int]

    def __post_init__(self):
        mask = frozenset(int(j) for j in self.block_mask)
        if any(j < 0 or j >= self.parent.nblocks for j in mask):
            raise InvalidArgument("ideal mask refers to a missing block")
        object.__setattr__(self, "block_mask", mask)

    @classmethod
    def full(cls, alg: Algebra) -> "Ideal":
        return cls(alg, frozenset(range(alg.nblocks)))

    @classmethod
    def zero(cls, alg: Algebra) -> "Ideal":
        return cls(alg, frozenset())

    @property
    def is_zero(self) -> bool:
        return not self.block_mask

    @property
    def is_full(self) -> bool:
        return len(self.block_mask) == self.parent.nblocks

    def complement(self) -> "Ideal":
        return Ideal(self.parent, frozenset(range(self.parent.nblocks)) - self.block_mask)

    def __and__(self, other: "Ideal") -> "Ideal":
        return Ideal(self.parent, self.block_mask & other.block_mask)

    def __or__(self, other: "Ideal") -> "Ideal":
        return Ideal(self.parent, self.block_mask | other.block_mask)

    def contains(self, a: AlgElem, tol: float = DEFAULT_TOL) -> bool:
        return all(np.abs(b).max(initial=0.0) <= tol for j, b in enumerate(a.blocks) if j not in self.block_mask)

    def quotient_blocks(self) -> list[int]:
        return [j for j in range(self.parent.nblocks) if j not in self.block_mask]

    def basis(self) -> list[AlgElem]:
        return [self.parent.matrix_unit(j, k, l) for (j, k, l) in self.parent.basis_labels() if j in self.block_mask]


def _homomorphism_residual(alg: Algebra, images: list) -> float:
    labels = alg.basis_labels()
    lookup = dict(zip(labels, images))
    worst = 0.0
    for (j, k, l), img in zip(labels, images):
        worst = max(worst, _norm(img.adjoint() - lookup[(j, l, k)]))
        for (j2, k2, l2), img2 in zip(labels, images):
            prod = img @ img2
            if j2 == j and k2 == l:
                prod = prod - lookup[(j, k, l2)]
            worst = max(worst, _norm(prod))
    return worst


def _norm(x) -> float:
    if hasattr(x, "norm"):
        return float(x.norm())
    return float(np.linalg.norm(np.asarray(x), 2))


def homomorphism_residual(alg: Algebra, phi: Callable) -> float:
    """Largest violation of multiplicativity and *-preservation over the matrix units."""
    images = [phi(e) for e in alg.basis()]
    return _homomorphism_residual(alg, images)


def ideal_from_kernel(alg: Algebra, phi: Callable, tol: float = DEFAULT_TOL) -> tuple[Ideal, Ideal]:
    """Kernel of a *-homomorphism as a block mask, together with its annihilator."""
    images = [phi(e) for e in alg.basis()]
    scale = max([_norm(img) for img in images] + [1.0])
    res = _homomorphism_residual(alg, images)
    if res > tol * scale:
        raise NotAHomomorphism(f"map fails the *-homomorphism axioms (residual {res:.3e})")
    killed = set()
    for j in range(alg.nblocks):
        if _norm(phi(alg.block_unit(j))) <= tol * scale:
            killed.add(j)
    ker = Ideal(alg, frozenset(killed))
    return ker, ker.complement()
