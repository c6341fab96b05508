"""Random instance generators used by tests and the verification suites."""
from __future__ import annotations

import numpy as np
from scipy.stats import unitary_group

from .algebra import Algebra
from .module import AdjOp, HilbertModule
from .tensor import Correspondence


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    if n == 0:
        return np.zeros((0, 0), dtype=complex)
    if n == 1:
        return np.array([[np.exp(2j * np.pi * rng.random())]])
    return unitary_group.rvs(n, random_state=rng)


def hom_blocks(left: Algebra, mult_row, e) -> np.ndarray:
    """The block sum of e_j (x) I_{r_j} for a multiplicity row r."""
    pieces = [np.kron(b, np.eye(r)) for b, r in zip(e.blocks, mult_row) if r]
    if not pieces:
        return np.zeros((0, 0), dtype=complex)
    out = np.zeros((sum(p.shape[0] for p in pieces),) * 2, dtype=complex)
    pos = 0
    for p in pieces:
        k = p.shape[0]
        out[pos:pos + k, pos:pos + k] = p
        pos += k
    return out


def hom_correspondence(left: Algebra, right: Algebra, mults, rng: np.random.Generator | None = None,
                       padding=None) -> Correspondence:
    """A correspondence whose left action has multiplicity matrix ``mults`` (right blocks x left blocks).

    ``padding`` adds rows per right block on which the left action vanishes.  With a
    generator the action is conjugated by a random unitary in each block.
    """
    mults = np.asarray(mults, dtype=int).reshape(right.nblocks, left.nblocks)
    pad = [0] * right.nblocks if padding is None else list(padding)
    sizes = [int(sum(r * n for r, n in zip(row, left.block_dims))) + p for row, p in zip(mults, pad)]
    X = HilbertModule(right, tuple(sizes))
    us = [random_unitary(s, rng) if rng is not None else np.eye(s) for s in sizes]

    def act(e):
        blocks = []
        for row, p, s, u in zip(mults, pad, sizes, us):
            h = np.zeros((s, s), dtype=complex)
            core = hom_blocks(left, row, e)
            h[:core.shape[0], :core.shape[0]] = core
            blocks.append(u @ h @ u.conj().T)
        return AdjOp.make(X, X, blocks)

    return Correspondence.from_map(left, X, act)


def random_cp(left: Algebra, X: HilbertModule, rng: np.random.Generator, rank: int = 2) -> Correspondence:
    """a -> sum_k K_k^* pi(a) K_k with pi the direct sum of ``rank`` copies of each identity block."""
    dil = sum(n * rank for n in left.block_dims)
    kraus = [rng.normal(size=(dil, m)) + 1j * rng.normal(size=(dil, m)) for m in X.mults]
    scale = [1.0 / np.sqrt(max(dil, 1)) for _ in X.mults]

    def act(e):
        pe = hom_blocks(left, [rank] * left.nblocks, e)
        return AdjOp.make(X, X, [s * K.conj().T @ pe @ K for K, s in zip(kraus, scale)])

    return Correspondence.from_map(left, X, act)


def random_mults(nrows: int, ncols: int, rng: np.random.Generator, high: int = 2, injective: bool = False,
                 nondegenerate: bool = True) -> np.ndarray:
    """Random multiplicity matrix; ``injective`` makes every column nonzero and
    ``nondegenerate`` every row nonzero."""
    while True:
        M = rng.integers(0, high + 1, size=(nrows, ncols))
        if injective and (M.sum(axis=0) == 0).any():
            continue
        if nondegenerate and (M.sum(axis=1) == 0).any():
            continue
        return M


def pinching_expectation(A: Algebra, partitions, rng: np.random.Generator | None = None):
    """Conditional expectation onto a block-diagonal subalgebra, optionally rotated by a unitary of A.

    ``partitions[j]`` splits the size of block j of A.  Returns (B, rho: A -> B, iota: B -> A)
    with rho and iota stored as algebra maps.
    """
    from .algebra import make_algebra
    from .positivity import algebra_map

    sizes = [s for part in partitions for s in part]
    B = make_algebra(sizes)
    us = [random_unitary(n, rng) if rng is not None else np.eye(n) for n in A.block_dims]
    owner = [(j, sum(part[:k])) for j, part in enumerate(partitions) for k in range(len(part))]

    def embed(b):
        blocks = [np.zeros((n, n), dtype=complex) for n in A.block_dims]
        for blk, (j, start), s in zip(b.blocks, owner, sizes):
            blocks[j][start:start + s, start:start + s] = blk
        return A.elem([u @ x @ u.conj().T for u, x in zip(us, blocks)])

    def pinch(a):
        rot = [u.conj().T @ x @ u for u, x in zip(us, a.blocks)]
        return B.elem([rot[j][start:start + s, start:start + s] for (j, start), s in zip(owner, sizes)])

    return B, algebra_map(A, B, pinch), algebra_map(B, A, embed)


def module_dim(left: Algebra, right: Algebra, mults) -> int:
    """Complex dimension of the module produced by :func:`hom_correspondence` without padding."""
    mults = np.asarray(mults).reshape(right.nblocks, left.nblocks)
    return int(sum(m * int(row @ np.asarray(left.block_dims)) for m, row in zip(right.block_dims, mults)))


def random_regular_pair(rng: np.random.Generator, max_x: int = 4, max_f: int = 6, max_y: int | None = 6):
    """A regular A-A correspondence X and a regular bi-Hilbertian A-B bimodule F.

    Both left actions are injective, which makes X regular and the index of F invertible.
    Returns (X, F) with complex dimensions at most ``max_x`` and ``max_f``; ``max_y`` bounds
    the dimension of F^* X F, which controls the size of the conjugate Fock module.
    """
    from .bihilb import conjugate_correspondence

    while True:
        X, F = _draw_pair(rng, max_x, max_f)
        if max_y is None or conjugate_correspondence(X, F).module.dim <= max_y:
            return X, F


def _draw_pair(rng: np.random.Generator, max_x: int, max_f: int):
    from .algebra import make_algebra
    from .bihilb import make_bihilb, upsilon_inner

    shapes = [[1], [1, 1], [2], [1, 1, 1]]
    while True:
        A = make_algebra(shapes[int(rng.integers(len(shapes)))])
        B = make_algebra([int(k) for k in rng.integers(1, 3, size=int(rng.integers(1, 3)))])
        MX = random_mults(A.nblocks, A.nblocks, rng, high=2, injective=True)
        MF = random_mults(B.nblocks, A.nblocks, rng, high=2, injective=True)
        if module_dim(A, A, MX) <= max_x and module_dim(A, B, MF) <= max_f:
            break
    X = hom_correspondence(A, A, MX, rng)
    Fc = hom_correspondence(A, B, MF, rng)
    weights = rng.uniform(0.5, 2.0, size=(B.nblocks, A.nblocks))
    return X, make_bihilb(Fc, upsilon_inner(Fc, weights))


def random_algebra(rng: np.random.Generator, max_blocks: int = 3, max_size: int = 3):
    from .algebra import make_algebra

    k = int(rng.integers(1, max_blocks + 1))
    return make_algebra([int(n) for n in rng.integers(1, max_size + 1, size=k)])


def random_cp_instance(rng: np.random.Generator, max_blocks: int = 3, max_size: int = 3) -> Correspondence:
    """A random CP map from A into End_B(X) with both algebras of at most ``max_blocks`` blocks."""
    A = random_algebra(rng, max_blocks, max_size)
    B = random_algebra(rng, max_blocks, max_size)
    X = HilbertModule(B, tuple(int(m) for m in rng.integers(1, max_size + 1, size=B.nblocks)))
    return random_cp(A, X, rng, rank=int(rng.integers(1, 3)))


def random_hom_instance(rng: np.random.Generator, max_blocks: int = 3, max_size: int = 2) -> Correspondence:
    """A random nondegenerate *-homomorphism correspondence."""
    A = random_algebra(rng, max_blocks, max_size)
    B = random_algebra(rng, max_blocks, max_size)
    M = random_mults(B.nblocks, A.nblocks, rng, high=2, nondegenerate=True)
    return hom_correspondence(A, B, M, rng)


def sparse_injective_mults(n: int, rng: np.random.Generator) -> np.ndarray:
    """One copy of each left block, placed in a random right block."""
    M = np.zeros((n, n), dtype=int)
    M[rng.integers(n, size=n), np.arange(n)] = 1
    return M


def random_complemented_pair(rng: np.random.Generator, max_dim: int = 6, max_blocks: int = 3):
    """X = Y + Z over a common algebra with both left actions injective.

    Returns (X, Y, P0, iota) where iota embeds Y in X and P0 = iota iota^*.
    """
    from .algebra import make_algebra
    from .tensor import correspondence_sum

    shapes = [s for s in ([1], [1, 1], [1, 2], [1, 1, 1], [2, 1, 1]) if len(s) <= max_blocks]
    while True:
        A = make_algebra(shapes[int(rng.integers(len(shapes)))])
        MY, MZ = sparse_injective_mults(A.nblocks, rng), sparse_injective_mults(A.nblocks, rng)
        if module_dim(A, A, MY) + module_dim(A, A, MZ) <= max_dim:
            break
    Y = hom_correspondence(A, A, MY, rng)
    Z = hom_correspondence(A, A, MZ, rng)
    X, (iota, _) = correspondence_sum(Y, Z)
    return X, Y, iota @ iota.adjoint(), iota
