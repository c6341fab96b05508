"""Truncated Fock modules, creation operators, covariance, Fock projections and the
expectation T -> PTP, plus subproduct systems."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .algebra import DEFAULT_TOL, AlgElem, Algebra, Ideal, ideal_from_kernel
from .errors import (IncompatibleOperands, InconsistentSubproduct, InvalidArgument, NotAMorphism,
                     PreconditionViolated)
from .module import (AdjOp, HilbertModule, ModVec, adjop_from_linear, direct_sum, elem_as_vec, inner_product, rank_one,
                     standard_frame)
from .tensor import Correspondence, TensorProduct, identity_correspondence, map_between


class Tower:
    """Levels G_0 = base, G_{n+1} = X (x) G_n for an A-A correspondence X and an A-C base.

    With the identity correspondence as base this is the truncated Fock module of X.
    The creation operator of x is v -> x (x) v on each level and annihilates level N.
    Words T_xi take xi from ``words``, the truncated Fock module of X.
    """

    def __init__(self, X: Correspondence, base: Correspondence, depth: int, words: "TruncFock | None" = None,
                 tol: float = DEFAULT_TOL):
        if depth < 0:
            raise InvalidArgument("depth must be nonnegative")
        if X.left != X.right:
            raise IncompatibleOperands("a Fock module needs an A-A correspondence")
        if base.left != X.right:
            raise IncompatibleOperands("the base must carry a left action of the coefficient algebra of X")
        self.X, self.N, self.tol = X, depth, tol
        self.alg: Algebra = X.left
        self.levels: list[Correspondence] = [base]
        self.products: list[TensorProduct] = []
        for _ in range(depth):
            tp = TensorProduct(X, self.levels[-1], tol)
            self.products.append(tp)
            self.levels.append(tp.corr)
        self.sum = direct_sum(*(lv.module for lv in self.levels))
        self.module: HilbertModule = self.sum.module
        self._words = words

    @property
    def words(self) -> "TruncFock":
        return self if self._words is None else self._words

    @property
    def level_dims(self) -> list[int]:
        return [lv.module.dim for lv in self.levels]

    @property
    def dim(self) -> int:
        return self.module.dim

    def include(self, n: int) -> AdjOp:
        return self.sum.inclusions[n]

    def level_projection(self, n: int) -> AdjOp:
        return self.sum.projection(n)

    def window(self, top: int) -> AdjOp:
        """Projection onto levels 0..top."""
        out = AdjOp.zero(self.module)
        for n in range(min(top, self.N) + 1):
            out = out + self.level_projection(n)
        return out

    def embed(self, v: ModVec, n: int) -> ModVec:
        return self.include(n)(v)

    def fock_op(self, op: AdjOp) -> "FockOp":
        return FockOp(self, op)

    def identity(self) -> "FockOp":
        return FockOp(self, AdjOp.identity(self.module))

    def zero(self) -> "FockOp":
        return FockOp(self, AdjOp.zero(self.module))

    def from_levels(self, ops: dict[tuple[int, int], AdjOp]) -> "FockOp":
        """Assemble from blocks keyed by (target level, source level)."""
        total = AdjOp.zero(self.module)
        for (m, n), op in ops.items():
            total = total + self.include(m) @ op @ self.include(n).adjoint()
        return FockOp(self, total)

    def left_action(self, a: AlgElem) -> "FockOp":
        return self.from_levels({(n, n): lv.act(a) for n, lv in enumerate(self.levels)})

    @cached_property
    def _unit_creations(self) -> list["FockOp"]:
        return [self.creation(e) for e in self.X.module.basis()]

    def creation(self, x: ModVec) -> "FockOp":
        if x.parent != self.X.module:
            raise IncompatibleOperands("creation needs a vector of the base correspondence")
        return self.from_levels({(n + 1, n): tp.creation(x) for n, tp in enumerate(self.products)})

    def creation_word(self, xi: ModVec, k: int) -> "FockOp":
        """T_xi for xi in level k of the Fock module of X: T_a is the left action for
        k = 0 and T_xi = sum_s T_{e_s} T_{zeta_s} when xi = sum_s e_s (x) zeta_s."""
        W = self.words
        if xi.parent != W.levels[k].module:
            raise IncompatibleOperands(f"vector is not in level {k}")
        if k == 0:
            return self.left_action(xi.as_elem())
        total = self.zero()
        for s, zeta in enumerate(W.products[k - 1].slots(xi)):
            if np.abs(zeta.coords()).max(initial=0.0) == 0.0:
                continue
            total = total + self._unit_creations[s] @ self.creation_word(zeta, k - 1)
        return total

    def elementary(self, xs: Sequence[ModVec], tail: ModVec) -> ModVec:
        """x_1 (x) ... (x) x_k (x) tail in level k, with tail in the base."""
        v = tail
        for level, x in enumerate(reversed(xs)):
            v = self.products[level].creation(x)(v)
        return v

    def compact(self, xi: ModVec, eta: ModVec) -> "FockOp":
        """Theta_{xi, eta} on the whole module."""
        return FockOp(self, rank_one(xi, eta))


class TruncFock(Tower):
    """Levels X^{(x)0} = A, ..., X^{(x)N} of the Fock module of an A-A correspondence.

    Level n+1 is realized as X (x)_A (level n), so the creation operator of x is the
    map v -> x (x) v of that product.  Creation operators annihilate level N.
    """

    def __init__(self, X: Correspondence, depth: int, tol: float = DEFAULT_TOL):
        if X.left != X.right:
            raise IncompatibleOperands("a Fock module needs an A-A correspondence")
        super().__init__(X, identity_correspondence(X.left), depth, None, tol)

    def elementary(self, xs: Sequence[ModVec], tail: ModVec | None = None) -> ModVec:
        """x_1 (x) ... (x) x_k in level k (the vacuum 1_A for k = 0)."""
        return super().elementary(xs, elem_as_vec(self.alg.unit()) if tail is None else tail)

    def vacuum(self) -> ModVec:
        return self.embed(elem_as_vec(self.alg.unit()), 0)


def truncated_fock(X: Correspondence, depth: int, tol: float = DEFAULT_TOL) -> TruncFock:
    return TruncFock(X, depth, tol)


@dataclass(frozen=True, eq=False)
class FockOp:
    parent: Tower
    op: AdjOp

    def _wrap(self, op: AdjOp) -> "FockOp":
        return FockOp(self.parent, op)

    def __add__(self, other: "FockOp") -> "FockOp":
        return self._wrap(self.op + other.op)

    def __sub__(self, other: "FockOp") -> "FockOp":
        return self._wrap(self.op - other.op)

    def __neg__(self) -> "FockOp":
        return self._wrap(-self.op)

    def __mul__(self, scalar) -> "FockOp":
        return self._wrap(self.op * scalar)

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, ModVec):
            return self.op(other)
        return self._wrap(self.op @ other.op)

    def __call__(self, v: ModVec) -> ModVec:
        return self.op(v)

    def adjoint(self) -> "FockOp":
        return self._wrap(self.op.adjoint())

    @property
    def H(self) -> "FockOp":
        return self.adjoint()

    def norm(self) -> float:
        return self.op.norm()

    def dist(self, other: "FockOp") -> float:
        return self.op.dist(other.op)

    def block(self, m: int, n: int) -> AdjOp:
        """The component from level n to level m."""
        F = self.parent
        return F.include(m).adjoint() @ self.op @ F.include(n)

    def window_dist(self, other: "FockOp", top: int) -> float:
        """Distance of the two operators restricted to levels 0..top."""
        if top < 0:
            return 0.0
        W = self.parent.window(top)
        return (self.op @ W).dist(other.op @ W)


# ---------------------------------------------------------------------------
# Covariance


def covariance_ideal(X: Correspondence, tol: float = DEFAULT_TOL) -> Ideal:
    """J_X = ker(phi)^perp; every adjointable operator is compact in finite dimensions."""
    if X.module.dim == 0:
        return Ideal.zero(X.left)
    return ideal_from_kernel(X.left, X.act, tol)[1]


@dataclass(frozen=True, eq=False)
class CorrMorphism:
    """A pair (pi, psi) from Y (over B) to X (over A).

    ``pi`` maps B into A and ``psi`` is the complex-linear map on coordinates.
    """

    Y: Correspondence
    X: Correspondence
    pi: Callable[[AlgElem], AlgElem]
    psi: np.ndarray

    def apply(self, y: ModVec) -> ModVec:
        return self.X.module.from_coords(self.psi @ y.coords())

    def axiom_residuals(self) -> dict[str, float]:
        Ybasis = self.Y.module.basis()
        B = self.Y.right
        res = {"left": 0.0, "inner": 0.0, "right": 0.0}
        for y in Ybasis:
            for e in self.Y.left.basis():
                lhs = self.apply(self.Y.act(e)(y))
                rhs = self.X.act(self.pi(e))(self.apply(y))
                res["left"] = max(res["left"], lhs.dist(rhs))
            for b in B.basis():
                res["right"] = max(res["right"], self.apply(y.rmul(b)).dist(self.apply(y).rmul(self.pi(b))))
            for y2 in Ybasis:
                lhs = inner_product(self.apply(y), self.apply(y2))
                res["inner"] = max(res["inner"], lhs.dist(self.pi(inner_product(y, y2))))
        return res


def inclusion_morphism(Y: Correspondence, X: Correspondence, iota: AdjOp) -> CorrMorphism:
    """(Id_A, iota) for a sub-correspondence embedded by the isometry iota: Y -> X."""
    if iota.source != Y.module or iota.target != X.module:
        raise IncompatibleOperands("iota must map Y into X")
    return CorrMorphism(Y, X, lambda a: a, iota.linear_matrix())


def check_covariance(mor: CorrMorphism, tol: float = DEFAULT_TOL) -> tuple[bool, float]:
    """Compare psi^(1)(phi_Y(a)) with phi_X(pi(a)) on the matrix units of J_Y.

    psi^(1) sends Theta_{y1,y2} to Theta_{psi(y1),psi(y2)}; phi_Y(a) is expanded as
    sum_j Theta_{phi_Y(a) u_j, u_j} over the standard frame of Y.
    """
    worst_axiom = max(mor.axiom_residuals().values())
    if worst_axiom > max(tol, 1e-9) * 10:
        raise NotAMorphism(f"morphism axioms fail (residual {worst_axiom:.3e})")
    J = covariance_ideal(mor.Y, tol)
    frame = standard_frame(mor.Y.module)
    worst = 0.0
    for e in J.basis():
        act = mor.Y.act(e)
        lifted = AdjOp.zero(mor.X.module)
        for u in frame:
            lifted = lifted + rank_one(mor.apply(act(u)), mor.apply(u))
        worst = max(worst, lifted.dist(mor.X.act(mor.pi(e))))
    return worst <= max(tol, 1e-9) * 10, worst


# ---------------------------------------------------------------------------
# Fock projections and the expectation


def is_correspondence_projection(P0: AdjOp, X: Correspondence, tol: float = DEFAULT_TOL) -> bool:
    if P0.source != X.module or P0.target != X.module:
        return False
    ok = (P0 @ P0).dist(P0) <= tol and P0.dist(P0.adjoint()) <= tol
    return ok and all((P0 @ img).dist(img @ P0) <= tol * max(1.0, img.norm()) for img in X.images)


def induced_fock_projection(P0: AdjOp, F: TruncFock, tol: float = DEFAULT_TOL) -> FockOp:
    """P = Id_A + P0 + P0 (x) P0 + ... levelwise."""
    if not is_correspondence_projection(P0, F.X, max(tol, 1e-10)):
        raise PreconditionViolated("P0 is not a projection commuting with the left action")
    levels = [AdjOp.identity(F.levels[0].module)]
    for tp in F.products:
        levels.append(tp.op(P0, levels[-1]))
    return F.from_levels({(n, n): p for n, p in enumerate(levels)})


def _check_fock_projection(P: FockOp, tol: float):
    F = P.parent
    if (P @ P).dist(P) > tol or P.dist(P.adjoint()) > tol:
        raise PreconditionViolated("P is not a projection")
    for n in range(F.N + 1):
        Ln = F.level_projection(n)
        if (P.op @ Ln).dist(Ln @ P.op) > tol:
            raise PreconditionViolated("P does not preserve the levels")
    for e in F.alg.basis():
        L = F.left_action(e)
        if (P @ L).dist(L @ P) > tol * max(1.0, L.norm()):
            raise PreconditionViolated("P does not commute with the left action")


def fock_expectation(P: FockOp, T: FockOp, tol: float = 1e-8, check: bool = True) -> FockOp:
    """Psi_P(T) = PTP."""
    if check:
        _check_fock_projection(P, tol)
    return P @ T @ P


@dataclass(frozen=True, eq=False)
class SubFockPair:
    """A complemented sub-correspondence Y of X on a common truncated Fock module."""

    F: TruncFock
    P0: AdjOp
    P: FockOp

    def alpha(self, y: ModVec) -> FockOp:
        """alpha(T_y) = T_y on the ambient Fock module."""
        return self.F.creation(y)

    def alpha_left(self, a: AlgElem) -> FockOp:
        return self.F.left_action(a)

    def beta(self, y: ModVec) -> FockOp:
        """beta(T_y): T_y on F_Y and zero on its complement."""
        return self.F.creation(y) @ self.P

    def beta_left(self, a: AlgElem) -> FockOp:
        return self.F.left_action(a) @ self.P


def sub_fock_pair(X: Correspondence, P0: AdjOp, depth: int, tol: float = DEFAULT_TOL) -> SubFockPair:
    F = TruncFock(X, depth, tol)
    return SubFockPair(F, P0, induced_fock_projection(P0, F, tol))


# ---------------------------------------------------------------------------
# Subproduct systems


@dataclass(frozen=True, eq=False)
class SubproductSystem:
    """Fibers X_0 = A, X_1, ..., X_N with isometries iota_{1,m}: X_{1+m} -> X_1 (x) X_m.

    ``products[m]`` is the tensor product X_1 (x) X_m receiving ``inclusions[m]``.
    """

    coeff: Algebra
    fibers: tuple[Correspondence, ...]
    products: tuple[TensorProduct, ...]
    inclusions: tuple[AdjOp, ...]

    def check(self, tol: float = 1e-9):
        for m, (tp, iota) in enumerate(zip(self.products, self.inclusions)):
            if tp.X is not self.fibers[1] or tp.Y is not self.fibers[m]:
                raise InconsistentSubproduct(f"product {m} is not X_1 (x) X_{m}")
            if iota.source != self.fibers[m + 1].module or iota.target != tp.module:
                raise InconsistentSubproduct(f"inclusion {m} has the wrong source or target")
            if (iota.adjoint() @ iota).dist(AdjOp.identity(iota.source)) > tol:
                raise InconsistentSubproduct(f"inclusion {m} is not an isometry")
            for e, img, big in zip(self.coeff.basis(), self.fibers[m + 1].images, tp.corr.images):
                if (iota @ img).dist(big @ iota) > tol:
                    raise InconsistentSubproduct(f"inclusion {m} does not intertwine the left actions")


def subproduct_embeddings(S: SubproductSystem, F: TruncFock) -> list[AdjOp]:
    """Isometries E_k: X_k -> X_1^{(x)k} with E_k = sum_s C_{e_s} E_{k-1} R_s iota_{1,k-1}."""
    if F.X is not S.fibers[1]:
        raise InconsistentSubproduct("the Fock module is not built on X_1")
    S.check()
    emb = [AdjOp.identity(F.levels[0].module)]
    basis = S.fibers[1].module.basis()
    depth = min(F.N, len(S.fibers) - 1)
    for k in range(1, depth + 1):
        tp = S.products[k - 1]
        R = tp.slot_ops()
        total = AdjOp.zero(S.fibers[k].module, F.levels[k].module)
        for s, e in enumerate(basis):
            total = total + F.products[k - 1].creation(e) @ emb[k - 1] @ R[s] @ S.inclusions[k - 1]
        emb.append(total)
    return emb


def subproduct_projection(S: SubproductSystem, F: TruncFock, tol: float = 1e-9) -> FockOp:
    emb = subproduct_embeddings(S, F)
    for k, E in enumerate(emb):
        if (E.adjoint() @ E).dist(AdjOp.identity(E.source)) > tol:
            raise InconsistentSubproduct(f"level {k} embedding is not isometric")
    levels = {(k, k): E @ E.adjoint() for k, E in enumerate(emb)}
    for k in range(len(emb), F.N + 1):
        levels[(k, k)] = AdjOp.zero(F.levels[k].module)
    return F.from_levels(levels)


def projected_creation(P: FockOp, xi: ModVec, k: int = 1) -> FockOp:
    """T^P_xi = P T_xi."""
    F = P.parent
    T = F.creation(xi) if k == 1 else F.creation_word(xi, k)
    return P @ T


def symmetric_subproduct(d: int, depth: int, tol: float = DEFAULT_TOL) -> SubproductSystem:
    """Symmetric tensor powers of C^d over C, with X_{1+m} inside C^d (x) X_m."""
    from itertools import combinations_with_replacement, permutations

    from .algebra import make_algebra

    C = make_algebra([1])

    def sym_basis(n: int) -> np.ndarray:
        """Orthonormal symmetric tensors in (C^d)^{(x)n} as columns."""
        cols = []
        for combo in combinations_with_replacement(range(d), n):
            v = np.zeros(d ** n, dtype=complex)
            perms = set(permutations(combo))
            for p in perms:
                idx = 0
                for c in p:
                    idx = idx * d + c
                v[idx] = 1.0
            cols.append(v / np.sqrt(len(perms)))
        return np.array(cols).T if cols else np.zeros((d ** n, 0))

    fibers = [identity_correspondence(C)]
    for n in range(1, depth + 1):
        k = sym_basis(n).shape[1]
        M = HilbertModule(C, (k,))
        fibers.append(Correspondence.from_map(C, M, lambda e, M=M: AdjOp.make(M, M, [e.blocks[0][0, 0] * np.eye(M.mults[0])])))
    products, inclusions = [], []
    for m in range(depth):
        tp = TensorProduct(fibers[1], fibers[m], tol)
        big = sym_basis(m + 1)
        small = sym_basis(m)
        # coordinates of each symmetric (m+1)-tensor as sum_s e_s (x) w_s with w_s in Sym^m
        raw = np.zeros((d * small.shape[1], big.shape[1]), dtype=complex)
        for s in range(d):
            part = big.reshape(d, d ** m, -1)[s]
            raw[s * small.shape[1]:(s + 1) * small.shape[1], :] = small.conj().T @ part
        raw_op = AdjOp.make(fibers[m + 1].module, tp.raw, [raw])
        products.append(tp)
        inclusions.append(tp.quotient.q @ raw_op)
    return SubproductSystem(C, tuple(fibers), tuple(products), tuple(inclusions))


def trivial_subproduct(X: Correspondence, depth: int, tol: float = DEFAULT_TOL) -> SubproductSystem:
    """X_n = X^{(x)n}; the inclusions are the canonical identifications."""
    F = TruncFock(X, depth, tol)
    unit = elem_as_vec(X.left.unit())
    cols = np.array([F.products[0].creation(e)(unit).coords() for e in X.module.basis()]).T
    U = adjop_from_linear(X.module, F.levels[1].module, cols.reshape(F.levels[1].module.dim, X.module.dim))[0]
    fibers = [F.levels[0], X] + F.levels[2:]
    products, incs = [F.products[0]], [U]
    if depth >= 2:
        XX = TensorProduct(X, X, tol)
        products.append(XX)
        incs.append(map_between(F.products[1], XX, None, U.adjoint()))
    for m in range(2, depth):
        products.append(F.products[m])
        incs.append(AdjOp.identity(F.products[m].module))
    return SubproductSystem(X.left, tuple(fibers), tuple(products), tuple(incs))
