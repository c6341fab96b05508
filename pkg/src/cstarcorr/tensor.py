"""Correspondences, the Gram-quotient engine, balanced tensor products and KSGNS dilations."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .algebra import DEFAULT_TOL, AlgElem, Algebra
from .errors import IncompatibleOperands, NotCompletelyPositive, NotPositiveSemidefinite
from .module import AdjOp, HilbertModule, ModVec, direct_sum, elem_as_vec, left_mult, standard_module


@dataclass(frozen=True, eq=False)
class Correspondence:
    """A right module over ``module.coeff`` with a linear left action of ``left``.

    The action is stored through its values on the matrix units of the left algebra.
    It is a *-homomorphism for ordinary correspondences and completely positive for
    positive correspondences.
    """

    left: Algebra
    module: HilbertModule
    images: tuple[AdjOp, ...]

    def __post_init__(self):
        if len(self.images) != self.left.dim:
            raise IncompatibleOperands("need one image per matrix unit of the left algebra")
        for img in self.images:
            if img.source != self.module or img.target != self.module:
                raise IncompatibleOperands("left action images must be operators on the module")

    @classmethod
    def from_map(cls, left: Algebra, module: HilbertModule, fn: Callable[[AlgElem], AdjOp]) -> "Correspondence":
        return cls(left, module, tuple(fn(e) for e in left.basis()))

    @property
    def right(self) -> Algebra:
        return self.module.coeff

    @cached_property
    def _stacks(self) -> list[np.ndarray]:
        return [np.array([img.blocks[i] for img in self.images]).reshape(self.left.dim, m, m)
                for i, m in enumerate(self.module.mults)]

    def act(self, a: AlgElem) -> AdjOp:
        if a.parent != self.left:
            raise IncompatibleOperands("element is not in the left algebra")
        c = a.coords()
        return AdjOp.make(self.module, self.module, [np.tensordot(c, st, axes=1) for st in self._stacks])

    def __call__(self, a: AlgElem) -> AdjOp:
        return self.act(a)

    def homomorphism_residual(self) -> float:
        labels = self.left.basis_labels()
        lookup = dict(zip(labels, self.images))
        worst = 0.0
        for (j, k, l), img in zip(labels, self.images):
            worst = max(worst, img.adjoint().dist(lookup[(j, l, k)]))
            for (j2, k2, l2), img2 in zip(labels, self.images):
                prod = img @ img2
                if j2 == j and k2 == l:
                    prod = prod - lookup[(j, k, l2)]
                worst = max(worst, prod.norm())
        return worst

    def is_homomorphism(self, tol: float = DEFAULT_TOL) -> bool:
        scale = max([img.norm() for img in self.images] + [1.0])
        return self.homomorphism_residual() <= tol * scale

    def is_nondegenerate(self, tol: float = DEFAULT_TOL) -> bool:
        """Finite-dimensional nondegeneracy: the unit acts as the identity."""
        return self.act(self.left.unit()).dist(AdjOp.identity(self.module)) <= tol

    def transport(self, U: AdjOp) -> "Correspondence":
        """Move the left action along a unitary U: module -> U.target."""
        return Correspondence(self.left, U.target, tuple(U @ img @ U.adjoint() for img in self.images))

    def compress(self, V: AdjOp) -> "Correspondence":
        """The map a -> V^* phi(a) V for V: W -> module."""
        return Correspondence(self.left, V.source, tuple(V.adjoint() @ img @ V for img in self.images))

    def shape_json(self) -> dict:
        return {"left": self.left.to_json(), "module": self.module.to_json()}


def identity_correspondence(alg: Algebra) -> Correspondence:
    """(Id, A_A): the algebra acting on itself by left multiplication."""
    return Correspondence.from_map(alg, standard_module(alg), left_mult)


def correspondence_sum(*parts: Correspondence) -> tuple[Correspondence, list[AdjOp]]:
    """Direct sum of correspondences with the inclusions of the summands."""
    ds = direct_sum(*(p.module for p in parts))
    images = []
    for r in range(parts[0].left.dim):
        total = AdjOp.zero(ds.module)
        for inc, p in zip(ds.inclusions, parts):
            total = total + inc @ p.images[r] @ inc.adjoint()
        images.append(total)
    return Correspondence(parts[0].left, ds.module, tuple(images)), list(ds.inclusions)


def multiplicity_matrix(corr: Correspondence, tol: float = DEFAULT_TOL) -> np.ndarray:
    """For a *-homomorphic action: entry (i, j) counts copies of left block j inside right block i."""
    out = np.zeros((corr.right.nblocks, corr.left.nblocks), dtype=int)
    for j in range(corr.left.nblocks):
        ranks = corr.act(corr.left.matrix_unit(j, 0, 0)).rank(tol)
        out[:, j] = ranks
    return out


# ---------------------------------------------------------------------------
# Gram quotient


@dataclass(frozen=True, eq=False)
class SemiInnerSpace:
    """A raw module with a positive semidefinite Gram operator.

    The semi-inner product is <x|y>_gram = <x| gram y>.  ``left_images`` optionally
    carries a left action on the raw module, given on matrix units of ``left``.
    """

    raw: HilbertModule
    gram: AdjOp
    left: Algebra | None = None
    left_images: tuple[AdjOp, ...] | None = None


@dataclass(frozen=True, eq=False)
class Quotient:
    module: HilbertModule
    q: AdjOp
    lift: AdjOp
    eigenvalues: tuple[np.ndarray, ...]

    def push(self, op: AdjOp) -> AdjOp:
        """Transport a raw operator that preserves the null space."""
        return self.q @ op @ self.lift

    def __iter__(self):
        yield self.module
        yield self.q


def gram_quotient(S: SemiInnerSpace, tol: float = DEFAULT_TOL) -> Quotient:
    """Quotient of a raw module by the null vectors of its Gram operator.

    Each block of the Gram operator is diagonalized; eigenvalues below tol times the
    largest one are discarded, and the square roots of the others scale the kept
    eigenvectors into the quotient map.
    """
    eig = []
    lam_max = 0.0
    for g in S.gram.blocks:
        if g.size == 0:
            eig.append((np.zeros(0), np.zeros((0, 0))))
            continue
        w, v = np.linalg.eigh((g + g.conj().T) / 2)
        eig.append((w, v))
        lam_max = max(lam_max, float(np.abs(w).max()))
    cutoff = tol * lam_max
    lam_min = min([float(w[0]) for w, _ in eig if w.size] + [0.0])
    if lam_min < -max(cutoff, 1e-300) and lam_max > 0:
        raise NotPositiveSemidefinite(f"gram operator has eigenvalue {lam_min:.3e}", lam_min)
    mults, qb, lb, kept = [], [], [], []
    for (w, v), m in zip(eig, S.raw.mults):
        keep = w > cutoff if lam_max > 0 else np.zeros(w.shape, dtype=bool)
        wk, vk = w[keep], v[:, keep]
        mults.append(int(keep.sum()))
        root = np.sqrt(wk)
        qb.append((vk * root).conj().T)
        lb.append(vk / root if wk.size else np.zeros((m, 0)))
        kept.append(wk)
    M = HilbertModule(S.raw.coeff, tuple(mults))
    q = AdjOp.make(S.raw, M, qb)
    lift = AdjOp.make(M, S.raw, lb)
    return Quotient(M, q, lift, tuple(kept))


def quotient_correspondence(S: SemiInnerSpace, tol: float = DEFAULT_TOL) -> tuple[Correspondence, Quotient]:
    quo = gram_quotient(S, tol)
    images = tuple(quo.push(img) for img in S.left_images)
    return Correspondence(S.left, quo.module, images), quo


# ---------------------------------------------------------------------------
# Balanced tensor products


class TensorProduct:
    """The interior tensor product X (x)_B Y of an A-B and a B-C correspondence.

    The raw space is Y^D with D the complex dimension of X: slot s holds e_s (x) y for
    the coordinate vector e_s of X.  Its Gram operator has entries psi(<e_s|e_t>).  The
    left action of X may be merely completely positive, in which case the result carries
    the map rho (x) Id.
    """

    def __init__(self, X: Correspondence, Y: Correspondence, tol: float = DEFAULT_TOL):
        if X.right != Y.left:
            raise IncompatibleOperands("middle algebras do not match")
        self.X, self.Y, self.tol = X, Y, tol
        B = X.right
        D = X.module.dim
        self.D = D
        raw = HilbertModule(Y.right, tuple(D * m for m in Y.module.mults))
        self.raw = raw
        gram_blocks = []
        for c, yc in enumerate(Y.module.mults):
            pieces = []
            for i, (mi, ni) in enumerate(X.module.shapes()):
                if mi == 0:
                    continue
                choi = np.zeros((ni * yc, ni * yc), dtype=complex)
                for q in range(ni):
                    for q2 in range(ni):
                        choi[q * yc:(q + 1) * yc, q2 * yc:(q2 + 1) * yc] = Y.images[B.index(i, q, q2)].blocks[c]
                pieces.extend([choi] * mi)
            g = np.zeros((D * yc, D * yc), dtype=complex)
            pos = 0
            for p in pieces:
                k = p.shape[0]
                g[pos:pos + k, pos:pos + k] = p
                pos += k
            gram_blocks.append(g)
        self.gram = AdjOp.make(raw, raw, gram_blocks)
        self.quotient = gram_quotient(SemiInnerSpace(raw, self.gram), tol)
        self.module = self.quotient.module
        images = tuple(self.op(img, None) for img in X.images)
        self.corr = Correspondence(X.left, self.module, images)

    # raw-level helpers -------------------------------------------------

    def _split(self, mat: np.ndarray, c: int, axis: int) -> np.ndarray:
        yc = self.Y.module.mults[c]
        shape = list(mat.shape)
        if axis == 0:
            return mat.reshape(self.D, yc, shape[1])
        return mat.reshape(shape[0], self.D, yc)

    def raw_vec(self, x: ModVec, y: ModVec) -> ModVec:
        xc = x.coords()
        return self.raw.vec([np.kron(xc[:, None], yb) for yb in y.blocks])

    def vec(self, x: ModVec, y: ModVec) -> ModVec:
        """The elementary tensor x (x) y."""
        if x.parent != self.X.module or y.parent != self.Y.module:
            raise IncompatibleOperands("factors do not belong to the tensor factors")
        return self.quotient.q(self.raw_vec(x, y))

    def creation(self, x: ModVec) -> AdjOp:
        """The map y -> x (x) y from Y into the product."""
        xc = x.coords()
        blocks = []
        for c, qc in enumerate(self.quotient.q.blocks):
            q3 = self._split(qc, c, axis=1)
            blocks.append(np.einsum("ksy,s->ky", q3, xc))
        return AdjOp.make(self.Y.module, self.module, blocks)

    def slots(self, v: ModVec) -> list[ModVec]:
        """A raw preimage of v, split into one Y-vector per coordinate of X."""
        raw = self.quotient.lift(v)
        out = []
        for s in range(self.D):
            blocks = []
            for c, yc in enumerate(self.Y.module.mults):
                blocks.append(raw.blocks[c][s * yc:(s + 1) * yc, :])
            out.append(self.Y.module.vec(blocks))
        return out

    def slot_ops(self) -> list[AdjOp]:
        """Operators R_s: product -> Y with v = sum_s e_s (x) R_s v."""
        ops = []
        for s in range(self.D):
            blocks = []
            for c, yc in enumerate(self.Y.module.mults):
                blocks.append(self.quotient.lift.blocks[c][s * yc:(s + 1) * yc, :])
            ops.append(AdjOp.make(self.module, self.Y.module, blocks))
        return ops

    def op(self, S: AdjOp | None, T: AdjOp | None) -> AdjOp:
        """S (x) T for S on X (right B-linear) and T on Y commuting with the B-action."""
        Sl = None if S is None else S.linear_matrix()
        blocks = []
        for c, (qc, lc) in enumerate(zip(self.quotient.q.blocks, self.quotient.lift.blocks)):
            l3 = self._split(lc, c, axis=0)
            if T is not None:
                l3 = np.einsum("yz,szk->syk", T.blocks[c], l3)
            if Sl is not None:
                l3 = np.einsum("st,tyk->syk", Sl, l3)
            blocks.append(qc @ l3.reshape(lc.shape))
        return AdjOp.make(self.module, self.module, blocks)


def tensor_product(X: Correspondence, Y: Correspondence, tol: float = DEFAULT_TOL) -> TensorProduct:
    return TensorProduct(X, Y, tol)


def balanced_tensor(X: Correspondence, Y: Correspondence, tol: float = DEFAULT_TOL) -> Correspondence:
    return TensorProduct(X, Y, tol).corr


# ---------------------------------------------------------------------------
# KSGNS


@dataclass(frozen=True, eq=False)
class KSGNSResult:
    corr: Correspondence
    V: AdjOp
    product: TensorProduct

    @property
    def quotient_map(self) -> AdjOp:
        return self.product.quotient.q

    def elementary(self, a: AlgElem, x: ModVec) -> ModVec:
        """The class of a (x) x."""
        return self.product.vec(elem_as_vec(a), x)

    def dilation_residual(self, rho: Correspondence) -> float:
        """max over matrix units of |rho(e) - V^* pi(e) V|."""
        return max(img.dist(self.V.adjoint() @ pimg @ self.V) for img, pimg in zip(rho.images, self.corr.images))

    def span_defect(self, tol: float = DEFAULT_TOL) -> int:
        """Number of missing dimensions in the span of pi(A) V(X); zero means dense."""
        missing = 0
        for c, m in enumerate(self.corr.module.mults):
            if m == 0:
                continue
            stack = np.hstack([img.blocks[c] @ self.V.blocks[c] for img in self.corr.images])
            s = np.linalg.svd(stack, compute_uv=False)
            rank = int(np.sum(s > tol * max(1.0, s[0])))
            missing += m - rank
        return missing


def ksgns(rho: Correspondence, tol: float = DEFAULT_TOL) -> KSGNSResult:
    """The KSGNS dilation (pi_rho, A (x)_rho X) of a completely positive action."""
    from .positivity import is_completely_positive

    ok, witness = is_completely_positive(rho, tol)
    if not ok:
        raise NotCompletelyPositive(f"map is not completely positive (Choi eigenvalue {witness.eigenvalue:.3e})")
    prod = TensorProduct(identity_correspondence(rho.left), rho, tol)
    V = prod.creation(elem_as_vec(rho.left.unit()))
    return KSGNSResult(prod.corr, V, prod)


# ---------------------------------------------------------------------------
# Unitary isomorphism


def _intertwiner_space(Ts: Sequence[np.ndarray], Ss: Sequence[np.ndarray], tol: float) -> np.ndarray:
    """Basis (columns, row-major vec) of {U : U T_r = S_r U for all r}."""
    m = Ts[0].shape[0] if Ts else 0
    mp = Ss[0].shape[0] if Ss else 0
    size = m * mp
    if size == 0:
        return np.zeros((size, 0))
    H = np.zeros((size, size), dtype=complex)
    scale = 1.0
    Im, Imp = np.eye(m), np.eye(mp)
    for T, S in zip(Ts, Ss):
        M = np.kron(Imp, T.T) - np.kron(S, Im)
        H += M.conj().T @ M
        scale = max(scale, np.abs(T).max(), np.abs(S).max())
    w, v = np.linalg.eigh(H)
    return v[:, w <= max(tol, 1e-10) * scale ** 2 * max(1, len(Ts))]


def iso_signature(X: Correspondence, tol: float = DEFAULT_TOL) -> tuple[int, ...]:
    """Per right block: dimension of the commutant of the left action."""
    out = []
    for i, m in enumerate(X.module.mults):
        Ts = [img.blocks[i] for img in X.images]
        out.append(_intertwiner_space(Ts, Ts, tol).shape[1] if m else 0)
    return tuple(out)


def find_unitary_iso(X: Correspondence, Y: Correspondence, tol: float = DEFAULT_TOL,
                     seed: int = 0) -> AdjOp | None:
    """A unitary U: X -> Y with U phi_X(a) U^* = phi_Y(a), or None when none exists.

    The decision compares dimensions of intertwiner spaces: Hom(X, Y), End(X) and End(Y)
    have equal dimension exactly when the two *-closed families are unitarily equivalent.
    The unitary is the polar part of a generic intertwiner.
    """
    if X.left != Y.left or X.right != Y.right:
        return None
    if X.module.mults != Y.module.mults:
        return None
    if X.module == Y.module and all(a.dist(b) == 0 for a, b in zip(X.images, Y.images)):
        return AdjOp.identity(X.module)
    rng = np.random.default_rng(seed)
    blocks = []
    for i, m in enumerate(X.module.mults):
        if m == 0:
            blocks.append(np.zeros((0, 0)))
            continue
        Ts = [img.blocks[i] for img in X.images]
        Ss = [img.blocks[i] for img in Y.images]
        hom = _intertwiner_space(Ts, Ss, tol)
        ex = _intertwiner_space(Ts, Ts, tol).shape[1]
        ey = _intertwiner_space(Ss, Ss, tol).shape[1]
        if not (hom.shape[1] == ex == ey) or ex == 0:
            return None
        found = None
        for _ in range(8):
            coeffs = rng.normal(size=hom.shape[1]) + 1j * rng.normal(size=hom.shape[1])
            U0 = (hom @ coeffs).reshape(m, m)
            W, sv, Vh = np.linalg.svd(U0)
            if sv[-1] > 1e-6 * sv[0]:
                found = W @ Vh
                break
        if found is None:
            return None
        blocks.append(found)
    U = AdjOp.make(X.module, Y.module, blocks)
    scale = max([img.norm() for img in X.images] + [1.0])
    residual = max([(U @ a @ U.adjoint()).dist(b) for a, b in zip(X.images, Y.images)] + [0.0])
    if residual > max(tol, 1e-8) * scale * 100:
        return None
    return U


def map_between(src: TensorProduct, dst: TensorProduct, S: AdjOp | None, T: AdjOp | None) -> AdjOp:
    """S (x) T from X (x) Y to X' (x) Y' for S: X -> X' and T: Y -> Y' (None means identity)."""
    Sl = None if S is None else S.linear_matrix()
    if Sl is None and src.D != dst.D:
        raise IncompatibleOperands("identity on the left factor needs equal first factors")
    blocks = []
    for c, (qc, lc) in enumerate(zip(dst.quotient.q.blocks, src.quotient.lift.blocks)):
        l3 = src._split(lc, c, axis=0)
        if T is not None:
            l3 = np.einsum("yz,szk->syk", T.blocks[c], l3)
        if Sl is not None:
            l3 = np.einsum("st,tyk->syk", Sl, l3)
        blocks.append(qc @ l3.reshape(-1, lc.shape[1]))
    return AdjOp.make(src.module, dst.module, blocks)
