"""Right Hilbert modules over block-sum algebras in canonical multiplicity form.

A module with multiplicities (m_1, ..., m_k) over M_{n_1} + ... + M_{n_k} has vectors
given by tuples of m_i x n_i matrices.  The inner product on block i is x_i^* y_i and
adjointable operators are tuples of m'_i x m_i matrices acting from the left.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import block_diag

from .algebra import DEFAULT_TOL, AlgElem, Algebra, make_algebra
from .errors import IncompatibleOperands, InvalidArgument


def _frozen(mat) -> np.ndarray:
    arr = np.array(mat, dtype=complex)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class HilbertModule:
    coeff: Algebra
    mults: tuple[int, ...]

    def __post_init__(self):
        mults = tuple(int(m) for m in self.mults)
        if len(mults) != self.coeff.nblocks or any(m < 0 for m in mults):
            raise InvalidArgument(f"multiplicities {self.mults!r} do not fit algebra {self.coeff.block_dims}")
        object.__setattr__(self, "mults", mults)

    @property
    def dim(self) -> int:
        """Linear dimension over the complex numbers."""
        return sum(m * n for m, n in zip(self.mults, self.coeff.block_dims))

    @property
    def is_zero(self) -> bool:
        return all(m == 0 for m in self.mults)

    def shapes(self) -> list[tuple[int, int]]:
        return list(zip(self.mults, self.coeff.block_dims))

    def offsets(self) -> list[int]:
        out, acc = [], 0
        for m, n in self.shapes():
            out.append(acc)
            acc += m * n
        return out

    def vec(self, blocks: Sequence) -> "ModVec":
        return ModVec(self, tuple(_frozen(b).reshape(m, n) for b, (m, n) in zip(blocks, self.shapes())))

    def zero(self) -> "ModVec":
        return self.vec([np.zeros((m, n)) for m, n in self.shapes()])

    def from_coords(self, coords) -> "ModVec":
        coords = np.asarray(coords, dtype=complex)
        if coords.shape != (self.dim,):
            raise InvalidArgument(f"expected {self.dim} coordinates, got shape {coords.shape}")
        blocks, pos = [], 0
        for m, n in self.shapes():
            blocks.append(coords[pos:pos + m * n].reshape(m, n))
            pos += m * n
        return self.vec(blocks)

    def basis_labels(self) -> list[tuple[int, int, int]]:
        """Vector-space basis (block, row, col) in coordinate order."""
        return [(i, p, q) for i, (m, n) in enumerate(self.shapes()) for p in range(m) for q in range(n)]

    def basis(self) -> list["ModVec"]:
        eye = np.eye(self.dim)
        return [self.from_coords(eye[k]) for k in range(self.dim)]

    def random(self, rng: np.random.Generator) -> "ModVec":
        return self.vec([rng.normal(size=(m, n)) + 1j * rng.normal(size=(m, n)) for m, n in self.shapes()])

    def to_json(self) -> dict:
        return {"coeff": list(self.coeff.block_dims), "mults": list(self.mults)}

    @classmethod
    def from_json(cls, data: dict) -> "HilbertModule":
        if not isinstance(data, dict) or "coeff" not in data or "mults" not in data:
            raise InvalidArgument("module JSON must carry 'coeff' and 'mults'")
        return cls(make_algebra(data["coeff"]), tuple(data["mults"]))


def standard_module(alg: Algebra) -> HilbertModule:
    """The algebra as a right module over itself."""
    return HilbertModule(alg, alg.block_dims)


@dataclass(frozen=True, eq=False)
class ModVec:
    parent: HilbertModule
    blocks: tuple[np.ndarray, ...]

    def _check(self, other: "ModVec"):
        if not isinstance(other, ModVec) or other.parent != self.parent:
            raise IncompatibleOperands("vectors live in different modules")

    def __add__(self, other: "ModVec") -> "ModVec":
        self._check(other)
        return self.parent.vec([a + b for a, b in zip(self.blocks, other.blocks)])

    def __sub__(self, other: "ModVec") -> "ModVec":
        self._check(other)
        return self.parent.vec([a - b for a, b in zip(self.blocks, other.blocks)])

    def __neg__(self) -> "ModVec":
        return self.parent.vec([-a for a in self.blocks])

    def __mul__(self, scalar) -> "ModVec":
        return self.parent.vec([scalar * a for a in self.blocks])

    __rmul__ = __mul__

    def rmul(self, b: AlgElem) -> "ModVec":
        """Right action x.b of the coefficient algebra."""
        if b.parent != self.parent.coeff:
            raise IncompatibleOperands("right action by an element of another algebra")
        return self.parent.vec([x @ bb for x, bb in zip(self.blocks, b.blocks)])

    def coords(self) -> np.ndarray:
        if not self.blocks:
            return np.zeros(0, dtype=complex)
        return np.concatenate([a.ravel() for a in self.blocks])

    def norm(self) -> float:
        return float(np.sqrt(inner_product(self, self).norm()))

    def dist(self, other: "ModVec") -> float:
        return (self - other).norm()

    def as_elem(self) -> AlgElem:
        """Read a vector of the standard module of an algebra as an algebra element."""
        if self.parent != standard_module(self.parent.coeff):
            raise IncompatibleOperands("only vectors of the standard module are algebra elements")
        return self.parent.coeff.elem(self.blocks)


def elem_as_vec(a: AlgElem) -> ModVec:
    return standard_module(a.parent).vec(a.blocks)


def inner_product(x: ModVec, y: ModVec) -> AlgElem:
    """The coefficient-valued inner product, conjugate-linear in x."""
    x._check(y)
    return x.parent.coeff.elem([a.conj().T @ b for a, b in zip(x.blocks, y.blocks)])


@dataclass(frozen=True, eq=False)
class AdjOp:
    """An adjointable map between two modules over the same coefficient algebra."""

    source: HilbertModule
    target: HilbertModule
    blocks: tuple[np.ndarray, ...]

    def __post_init__(self):
        if self.source.coeff != self.target.coeff:
            raise IncompatibleOperands("source and target have different coefficient algebras")
        for b, m, mp in zip(self.blocks, self.source.mults, self.target.mults):
            if b.shape != (mp, m):
                raise InvalidArgument(f"operator block of shape {b.shape}, expected {(mp, m)}")

    @classmethod
    def make(cls, source: HilbertModule, target: HilbertModule, blocks: Sequence) -> "AdjOp":
        return cls(source, target, tuple(_frozen(b).reshape(mp, m) for b, m, mp in zip(blocks, source.mults, target.mults)))

    @classmethod
    def identity(cls, X: HilbertModule) -> "AdjOp":
        return cls.make(X, X, [np.eye(m) for m in X.mults])

    @classmethod
    def zero(cls, source: HilbertModule, target: HilbertModule | None = None) -> "AdjOp":
        target = source if target is None else target
        return cls.make(source, target, [np.zeros((mp, m)) for m, mp in zip(source.mults, target.mults)])

    @classmethod
    def random(cls, source: HilbertModule, target: HilbertModule, rng: np.random.Generator) -> "AdjOp":
        return cls.make(source, target, [rng.normal(size=(mp, m)) + 1j * rng.normal(size=(mp, m))
                                         for m, mp in zip(source.mults, target.mults)])

    def _check_same(self, other: "AdjOp"):
        if not isinstance(other, AdjOp) or other.source != self.source or other.target != self.target:
            raise IncompatibleOperands("operators act between different modules")

    def __call__(self, x: ModVec) -> ModVec:
        if x.parent != self.source:
            raise IncompatibleOperands("vector is not in the operator's source module")
        return self.target.vec([t @ b for t, b in zip(self.blocks, x.blocks)])

    def __matmul__(self, other: "AdjOp") -> "AdjOp":
        if isinstance(other, ModVec):
            return self(other)
        if other.target != self.source:
            raise IncompatibleOperands("cannot compose: target and source differ")
        return AdjOp.make(other.source, self.target, [a @ b for a, b in zip(self.blocks, other.blocks)])

    def __add__(self, other: "AdjOp") -> "AdjOp":
        self._check_same(other)
        return AdjOp.make(self.source, self.target, [a + b for a, b in zip(self.blocks, other.blocks)])

    def __sub__(self, other: "AdjOp") -> "AdjOp":
        self._check_same(other)
        return AdjOp.make(self.source, self.target, [a - b for a, b in zip(self.blocks, other.blocks)])

    def __neg__(self) -> "AdjOp":
        return AdjOp.make(self.source, self.target, [-a for a in self.blocks])

    def __mul__(self, scalar) -> "AdjOp":
        return AdjOp.make(self.source, self.target, [scalar * a for a in self.blocks])

    __rmul__ = __mul__

    def adjoint(self) -> "AdjOp":
        return AdjOp.make(self.target, self.source, [a.conj().T for a in self.blocks])

    @property
    def H(self) -> "AdjOp":
        return self.adjoint()

    def norm(self) -> float:
        return max([float(np.linalg.norm(a, 2)) for a in self.blocks if a.size] + [0.0])

    def dist(self, other: "AdjOp") -> float:
        return (self - other).norm()

    def linear_matrix(self) -> np.ndarray:
        """The matrix of the operator on complex coordinates."""
        n = self.source.coeff.block_dims
        mats = [np.kron(b, np.eye(k)) for b, k in zip(self.blocks, n)]
        return block_diag(*mats) if mats else np.zeros((0, 0))

    def rank(self, tol: float = DEFAULT_TOL) -> list[int]:
        """Blockwise numerical rank."""
        out = []
        for b in self.blocks:
            if b.size == 0:
                out.append(0)
                continue
            s = np.linalg.svd(b, compute_uv=False)
            out.append(int(np.sum(s > tol * max(1.0, s[0]))))
        return out


def adjop_from_linear(source: HilbertModule, target: HilbertModule, mat: np.ndarray) -> tuple[AdjOp, float]:
    """Read a complex-linear map as an adjointable operator.

    Returns the operator and the residual against the given matrix, which is zero
    exactly when the map commutes with the right action.
    """
    blocks = []
    so, to = source.offsets(), target.offsets()
    for i, ((m, n), (mp, _)) in enumerate(zip(source.shapes(), target.shapes())):
        rows = [to[i] + p * n for p in range(mp)]
        cols = [so[i] + p * n for p in range(m)]
        blocks.append(mat[np.ix_(rows, cols)] if m and mp else np.zeros((mp, m)))
    op = AdjOp.make(source, target, blocks)
    residual = float(np.abs(op.linear_matrix() - mat).max(initial=0.0))
    return op, residual


def rank_one(x: ModVec, y: ModVec) -> AdjOp:
    """Theta_{x,y}: z -> x <y|z>."""
    if x.parent.coeff != y.parent.coeff:
        raise IncompatibleOperands("rank-one operator needs vectors over one coefficient algebra")
    return AdjOp.make(y.parent, x.parent, [a @ b.conj().T for a, b in zip(x.blocks, y.blocks)])


def standard_frame(X: HilbertModule) -> list[ModVec]:
    """Matrix-unit frame: one vector per row of each block, with a single 1 in column 0."""
    frame = []
    for i, (m, n) in enumerate(X.shapes()):
        for p in range(m):
            blocks = [np.zeros((mm, nn), dtype=complex) for mm, nn in X.shapes()]
            blocks[i][p, 0] = 1.0
            frame.append(X.vec(blocks))
    return frame


def frame_operator(frame: Sequence[ModVec]) -> AdjOp:
    """Sum of Theta_{u,u}; equals the identity exactly when the family is a frame."""
    total = AdjOp.zero(frame[0].parent)
    for u in frame:
        total = total + rank_one(u, u)
    return total


def reconstruct(frame: Sequence[ModVec], x: ModVec) -> ModVec:
    out = x.parent.zero()
    for u in frame:
        out = out + u.rmul(inner_product(u, x))
    return out


def random_frame(X: HilbertModule, rng: np.random.Generator, extra: int = 2) -> list[ModVec]:
    """A frame different from the standard one: a random unitary image, mixed by a tall isometry."""
    base = standard_frame(X)
    unitary = AdjOp.make(X, X, [np.linalg.qr(rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m)))[0]
                                for m in X.mults])
    rotated = [unitary(u) for u in base]
    count = len(rotated)
    if count == 0:
        return []
    tall = rng.normal(size=(count + extra, count)) + 1j * rng.normal(size=(count + extra, count))
    iso, _ = np.linalg.qr(tall)
    frame = []
    for k in range(count + extra):
        v = X.zero()
        for j, u in enumerate(rotated):
            v = v + iso[k, j] * u
        frame.append(v)
    return frame


def end_algebra(X: HilbertModule) -> Algebra:
    """End(X) as a block sum, dropping the blocks where X has multiplicity zero."""
    return make_algebra([m for m in X.mults if m > 0] or [1])


def left_mult(a: AlgElem) -> AdjOp:
    """Left multiplication by a on the standard module."""
    X = standard_module(a.parent)
    return AdjOp.make(X, X, a.blocks)


def op_as_elem(T: AdjOp) -> AlgElem:
    """Read an operator on the standard module of an algebra as an algebra element."""
    return T.source.coeff.elem(T.blocks)


@dataclass(frozen=True)
class DirectSum:
    module: HilbertModule
    parts: tuple[HilbertModule, ...]
    inclusions: tuple[AdjOp, ...]

    def projection(self, k: int) -> AdjOp:
        inc = self.inclusions[k]
        return inc @ inc.adjoint()


def direct_sum(*parts: HilbertModule) -> DirectSum:
    if not parts:
        raise InvalidArgument("direct sum of nothing")
    coeff = parts[0].coeff
    if any(p.coeff != coeff for p in parts):
        raise IncompatibleOperands("direct sum needs a common coefficient algebra")
    mults = tuple(sum(p.mults[i] for p in parts) for i in range(coeff.nblocks))
    total = HilbertModule(coeff, mults)
    incs = []
    offs = [0] * coeff.nblocks
    for p in parts:
        blocks = []
        for i in range(coeff.nblocks):
            b = np.zeros((mults[i], p.mults[i]), dtype=complex)
            b[offs[i]:offs[i] + p.mults[i], :] = np.eye(p.mults[i])
            blocks.append(b)
            offs[i] += p.mults[i]
        incs.append(AdjOp.make(p, total, blocks))
    return DirectSum(total, tuple(parts), tuple(incs))


def block_operator(rows: Sequence[Sequence[AdjOp]], sources: Sequence[HilbertModule], targets: Sequence[HilbertModule]) -> AdjOp:
    """Assemble an operator between direct sums from a grid of blocks."""
    src = direct_sum(*sources)
    tgt = direct_sum(*targets)
    total = AdjOp.zero(src.module, tgt.module)
    for r, row in enumerate(rows):
        for c, op in enumerate(row):
            if op is not None:
                total = total + tgt.inclusions[r] @ op @ src.inclusions[c].adjoint()
    return total


@dataclass(frozen=True)
class Compacts:
    """X (x) X^* realized as the compact operators on X, with Theta_{x,y} <-> x (x) y^*."""

    module: HilbertModule

    @property
    def dim(self) -> int:
        return sum(m * m for m in self.module.mults)

    def operator(self, x: ModVec, y: ModVec) -> AdjOp:
        return rank_one(x, y)

    def star(self, x: ModVec, y: ModVec) -> tuple[ModVec, ModVec]:
        """(x (x) y^*)^* = y (x) x^*."""
        return y, x

    def product(self, pair1: tuple[ModVec, ModVec], pair2: tuple[ModVec, ModVec]) -> tuple[ModVec, ModVec]:
        """(f1 (x) f2^*)(f3 (x) f4^*) = f1 <f2|f3> (x) f4^*."""
        f1, f2 = pair1
        f3, f4 = pair2
        return f1.rmul(inner_product(f2, f3)), f4

    def span_dim(self, tol: float = DEFAULT_TOL) -> int:
        """Dimension of the span of all Theta_{u,v} over the coordinate basis."""
        basis = self.module.basis()
        rows = [np.concatenate([b.ravel() for b in rank_one(u, v).blocks]) for u in basis for v in basis]
        if not rows:
            return 0
        s = np.linalg.svd(np.array(rows), compute_uv=False)
        return int(np.sum(s > tol * max(1.0, s[0])))


def conjugate_and_compacts(X: HilbertModule) -> Compacts:
    return Compacts(X)
