"""Bi-Hilbertian bimodules of finite index: the index e^beta, the map Upsilon, conjugate
modules, the projections P_n, the isometries W_n, the representation psi and the
expectation Phi_P, plus the covering-space generator."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .algebra import DEFAULT_TOL, AlgElem, Algebra, functional_calculus, is_central, is_positive, make_algebra
from .errors import IncompatibleOperands, IndexNotInvertible, InvalidArgument, NotACover, NotBiHilbertian
from .fock import FockOp, Tower, TruncFock
from .module import AdjOp, HilbertModule, ModVec, inner_product, random_frame, rank_one, standard_frame
from .tensor import Correspondence, SemiInnerSpace, TensorProduct, gram_quotient

LeftInner = Callable[[ModVec, ModVec], AlgElem]


def upsilon_inner(corr: Correspondence, weights=None) -> LeftInner:
    """The left inner product Upsilon(Theta_{f,g}) for a weighted trace Upsilon.

    Block j of Upsilon(T) has entries sum_i w_ij Tr(phi(E^j_{lk})_i T_i); it is
    A-bilinear and, for an injective left action with positive weights, faithful.
    """
    A = corr.left
    w = np.ones((corr.right.nblocks, A.nblocks)) if weights is None else np.asarray(weights, dtype=float)

    def inner(f: ModVec, g: ModVec) -> AlgElem:
        T = rank_one(f, g)
        blocks = []
        for j, n in enumerate(A.block_dims):
            blk = np.zeros((n, n), dtype=complex)
            for k in range(n):
                for l in range(n):
                    img = corr.images[A.index(j, l, k)]
                    blk[k, l] = sum(w[i, j] * np.trace(img.blocks[i] @ T.blocks[i]) for i in range(len(T.blocks)))
            blocks.append(blk)
        return A.elem(blocks)

    return inner


@dataclass(frozen=True, eq=False)
class BiHilbModule:
    """An A-B correspondence with a compatible A-valued left inner product.

    ``gram[s, t]`` holds the coordinates of the left inner product of the coordinate
    vectors e_s and e_t; the form is linear in its first and conjugate-linear in its
    second argument.
    """

    corr: Correspondence
    gram: np.ndarray
    norm_constants: tuple[float, float]

    @property
    def left(self) -> Algebra:
        return self.corr.left

    @property
    def right(self) -> Algebra:
        return self.corr.right

    @property
    def module(self) -> HilbertModule:
        return self.corr.module

    def left_inner(self, f: ModVec, g: ModVec) -> AlgElem:
        c = np.einsum("s,t,std->d", f.coords(), g.coords().conj(), self.gram)
        return self.left.from_coords(c)

    def right_inner(self, f: ModVec, g: ModVec) -> AlgElem:
        return inner_product(f, g)

    def act(self, a: AlgElem, f: ModVec) -> ModVec:
        return self.corr.act(a)(f)


def _left_gram(corr: Correspondence, left_inner: LeftInner) -> np.ndarray:
    basis = corr.module.basis()
    D = len(basis)
    G = np.zeros((D, D, corr.left.dim), dtype=complex)
    for s, e in enumerate(basis):
        for t, f in enumerate(basis):
            G[s, t] = left_inner(e, f).coords()
    return G


def make_bihilb(corr: Correspondence, left_inner: LeftInner, tol: float = 1e-9) -> BiHilbModule:
    """Check the bi-Hilbertian axioms and return the bimodule."""
    A, B = corr.left, corr.right
    if not corr.is_homomorphism(tol):
        raise NotBiHilbertian("left action is not a *-homomorphism", "left-adjointable")
    G = _left_gram(corr, left_inner)
    scale = max(1.0, float(np.abs(G).max(initial=0.0)))
    F = BiHilbModule(corr, G, (0.0, 0.0))
    basis = corr.module.basis()
    D = len(basis)
    # left A-linearity
    for e in A.basis()[: A.dim]:
        for s, f in enumerate(basis):
            for t, g in enumerate(basis):
                lhs = F.left_inner(corr.act(e)(f), g)
                rhs = e @ A.from_coords(G[s, t])
                if lhs.dist(rhs) > tol * scale:
                    raise NotBiHilbertian("left inner product is not left A-linear", "left-linear")
    # hermitian symmetry
    for s in range(D):
        for t in range(D):
            if A.from_coords(G[s, t]).adjoint().dist(A.from_coords(G[t, s])) > tol * scale:
                raise NotBiHilbertian("left inner product is not hermitian", "hermitian")
    # positivity: the block matrix [<e_s|e_t>] is positive in M_D(A)
    for j, n in enumerate(A.block_dims):
        off = A.offsets()[j]
        big = np.zeros((D * n, D * n), dtype=complex)
        for s in range(D):
            for t in range(D):
                big[s * n:(s + 1) * n, t * n:(t + 1) * n] = G[s, t, off:off + n * n].reshape(n, n)
        if D and np.linalg.eigvalsh((big + big.conj().T) / 2)[0] < -tol * scale:
            raise NotBiHilbertian("left inner product is not positive", "positive")
    # definiteness and norm equivalence through the scalar trace forms
    T = np.zeros((D, D), dtype=complex)
    for s in range(D):
        for t in range(D):
            T[s, t] = np.trace(sum_blocks(A, G[s, t]))
    # trace of the right inner product is the Euclidean form on coordinates, so the
    # extreme eigenvalues of the left trace form bound the ratio of the two norms
    left_form = T.T
    left_form = (left_form + left_form.conj().T) / 2
    if D:
        w = np.linalg.eigvalsh(left_form)
        if w[0] <= tol * max(scale, float(w[-1])):
            raise NotBiHilbertian("left inner product is degenerate", "definite")
        consts = (float(w[0]), float(w[-1]))
    else:
        consts = (1.0, 1.0)
    # right action adjointable for the left inner product
    for b in B.basis():
        for f in basis:
            for g in basis:
                lhs = F.left_inner(f.rmul(b), g)
                rhs = F.left_inner(f, g.rmul(b.adjoint()))
                if lhs.dist(rhs) > tol * scale:
                    raise NotBiHilbertian("right action is not adjointable for the left inner product",
                                          "right-adjointable")
    return BiHilbModule(corr, G, consts)


def sum_blocks(A: Algebra, coords: np.ndarray) -> np.ndarray:
    """Block-diagonal matrix of an element given by coordinates (for traces)."""
    el = A.from_coords(coords)
    n = sum(A.block_dims)
    out = np.zeros((n, n), dtype=complex)
    pos = 0
    for b in el.blocks:
        k = b.shape[0]
        out[pos:pos + k, pos:pos + k] = b
        pos += k
    return out


# ---------------------------------------------------------------------------
# Index data


@dataclass(frozen=True, eq=False)
class IndexData:
    ebeta: AlgElem
    ebeta_inv_sqrt: AlgElem | None
    regular: bool
    frame_residual: float
    central: bool
    positive: bool
    left_injective: bool
    left_full: bool


def index_sum(F: BiHilbModule, frame: Sequence[ModVec]) -> AlgElem:
    total = F.left.zero()
    for u in frame:
        total = total + F.left_inner(u, u)
    return total


def watatani_index(F: BiHilbModule, seed: int = 0, tol: float = 1e-9) -> IndexData:
    """e^beta = sum_j <f_j|f_j> over the standard frame, compared with a random frame."""
    ebeta = index_sum(F, standard_frame(F.module))
    other = index_sum(F, random_frame(F.module, np.random.default_rng(seed)))
    A = F.left
    w_min = min(float(np.linalg.eigvalsh((b + b.conj().T) / 2)[0]) for b in ebeta.blocks)
    regular = w_min > tol * max(1.0, ebeta.norm())
    inv = functional_calculus(ebeta, lambda w: 1.0 / np.sqrt(w)) if regular else None
    injective = all(F.corr.act(A.block_unit(j)).norm() > tol for j in range(A.nblocks))
    span = F.gram.reshape(-1, A.dim)
    full = bool(span.size) and int(np.linalg.matrix_rank(span, tol=1e-8 * max(1.0, np.abs(span).max()))) == A.dim
    return IndexData(ebeta, inv, regular, ebeta.dist(other), is_central(ebeta, 1e-10), is_positive(ebeta, tol),
                     injective, full)


def upsilon(F: BiHilbModule, T: AdjOp) -> AlgElem:
    """Upsilon(T) = sum_i <T f_i | f_i> over the standard frame."""
    total = F.left.zero()
    for u in standard_frame(F.module):
        total = total + F.left_inner(T(u), u)
    return total


# ---------------------------------------------------------------------------
# Conjugate module and the compacts F (x)_B F^*


class Conjugate:
    """F^* as a B-A correspondence, with F (x)_B F^* and the vectors Omega and Z.

    The raw space is A^D: the tuple (a_s) stands for sum_s e_s^* a_s with Gram entries
    a_s^* <e_s|e_t> a_t, and b e_s^* = (e_s b^*)^*.
    """

    def __init__(self, F: BiHilbModule, tol: float = DEFAULT_TOL):
        self.F, self.tol = F, tol
        A, B = F.left, F.right
        D = F.module.dim
        raw = HilbertModule(A, tuple(D * n for n in A.block_dims))
        gram_blocks = []
        for j, n in enumerate(A.block_dims):
            off = A.offsets()[j]
            g = np.zeros((D * n, D * n), dtype=complex)
            for s in range(D):
                for t in range(D):
                    g[s * n:(s + 1) * n, t * n:(t + 1) * n] = F.gram[s, t, off:off + n * n].reshape(n, n)
            gram_blocks.append(g)
        self.raw = raw
        self.quotient = gram_quotient(SemiInnerSpace(raw, AdjOp.make(raw, raw, gram_blocks)), tol)
        self.module = self.quotient.module
        basis = F.module.basis()
        images = []
        for E in B.basis():
            K = np.array([(e.rmul(E.adjoint())).coords() for e in basis]).T.conj()
            raw_op = AdjOp.make(raw, raw, [np.kron(K, np.eye(n)) for n in A.block_dims])
            images.append(self.quotient.push(raw_op))
        self.corr = Correspondence(B, self.module, tuple(images))
        self.compacts = TensorProduct(F.corr, self.corr, tol)

    def star(self, f: ModVec) -> ModVec:
        """f^* = sum_s conj(f_s) e_s^*."""
        c = f.coords().conj()
        blocks = [np.kron(c[:, None], np.eye(n)) for n in self.F.left.block_dims]
        return self.quotient.q(self.raw.vec(blocks))

    def elementary(self, f: ModVec, g: ModVec) -> ModVec:
        """f (x) g^* in F (x)_B F^*."""
        return self.compacts.vec(f, self.star(g))

    @cached_property
    def omega(self) -> ModVec:
        total = self.compacts.module.zero()
        for u in standard_frame(self.F.module):
            total = total + self.elementary(u, u)
        return total


def conjugate_module(F: BiHilbModule, tol: float = DEFAULT_TOL) -> Conjugate:
    return Conjugate(F, tol)


@dataclass(frozen=True, eq=False)
class IndexProjection:
    conj: Conjugate
    index: IndexData
    Z: ModVec
    P0: AdjOp


def index_projection(F: BiHilbModule, conj: Conjugate | None = None, tol: float = 1e-9) -> IndexProjection:
    """P_0 = Theta_{Z,Z} on F (x)_B F^* with Z = Omega e^{-beta/2}."""
    data = watatani_index(F, tol=tol)
    if not data.regular:
        raise IndexNotInvertible("the right index is not invertible")
    conj = Conjugate(F) if conj is None else conj
    Z = conj.omega.rmul(data.ebeta_inv_sqrt)
    return IndexProjection(conj, data, Z, rank_one(Z, Z))


def z_pairing_residuals(F: BiHilbModule, rng: np.random.Generator, trials: int = 3) -> dict[str, float]:
    """Compare <f1 (x) f2^* | a Z> with e^{-beta/2} <f2|f1> a and with e^{-beta/2} <f1|f2> a."""
    ip = index_projection(F)
    c, Z = ip.index.ebeta_inv_sqrt, ip.Z
    act = ip.conj.compacts.corr.act
    out = {"swapped": 0.0, "in_order": 0.0}
    for _ in range(trials):
        f1, f2, a = F.module.random(rng), F.module.random(rng), F.left.random(rng)
        lhs = inner_product(ip.conj.elementary(f1, f2), act(a)(Z))
        out["swapped"] = max(out["swapped"], lhs.dist(c @ F.left_inner(f2, f1) @ a))
        out["in_order"] = max(out["in_order"], lhs.dist(c @ F.left_inner(f1, f2) @ a))
    return out


# ---------------------------------------------------------------------------
# Conjugated correspondence F^* X F


class Conjugation:
    """Y = F^* (x)_A X (x)_A F as a B-B correspondence."""

    def __init__(self, X: Correspondence, F: BiHilbModule, conj: Conjugate | None = None, tol: float = DEFAULT_TOL):
        if X.left != F.left or X.right != F.left:
            raise IncompatibleOperands("X must be an A-A correspondence for the left algebra of F")
        self.X, self.F = X, F
        self.conj = Conjugate(F, tol) if conj is None else conj
        self.XF = TensorProduct(X, F.corr, tol)
        self.Yprod = TensorProduct(self.conj.corr, self.XF.corr, tol)
        self.corr = self.Yprod.corr

    def vec(self, f1: ModVec, x: ModVec, f2: ModVec) -> ModVec:
        """f1^* (x) x (x) f2."""
        return self.Yprod.vec(self.conj.star(f1), self.XF.vec(x, f2))


def conjugate_correspondence(X: Correspondence, F: BiHilbModule, tol: float = DEFAULT_TOL) -> Correspondence:
    return Conjugation(X, F, tol=tol).corr


# ---------------------------------------------------------------------------
# The ambient module F (x) F_Y (x) F^* and the isometries W_n


class ConjugateFock:
    """Truncated F (x)_B F_Y (x)_B F^* with Y = F^* X F, levels F (x) Y^{(x)n} (x) F^*.

    Level n is F (x) G_n with G_0 = F^* and G_n = Y (x) G_{n-1}.
    """

    def __init__(self, X: Correspondence, F: BiHilbModule, depth: int, tol: float = DEFAULT_TOL):
        self.X, self.F, self.N, self.tol = X, F, depth, tol
        self.idx = index_projection(F)
        self.conj = self.idx.conj
        self.cj = Conjugation(X, F, self.conj, tol)
        self.Y = self.cj.corr
        self.FX = TruncFock(X, depth, tol)
        self.FY = TruncFock(self.Y, depth, tol)
        self.G = Tower(self.Y, self.conj.corr, depth, self.FY, tol)
        self.amb_products = [TensorProduct(F.corr, lv, tol) for lv in self.G.levels]
        from .module import direct_sum
        self.amb_sum = direct_sum(*(tp.module for tp in self.amb_products))
        self.module = self.amb_sum.module
        self.c = self.idx.index.ebeta_inv_sqrt
        self.frame = standard_frame(F.module)

    # ambient plumbing ----------------------------------------------------

    def amb_include(self, n: int) -> AdjOp:
        return self.amb_sum.inclusions[n]

    def amb_elementary(self, f: ModVec, ys: Sequence[ModVec], g: ModVec) -> ModVec:
        """f (x) y_1 (x) ... (x) y_n (x) g^* in level n."""
        inner = self.G.elementary(ys, self.conj.star(g))
        return self.amb_products[len(ys)].vec(f, inner)

    def amb_window(self, top: int) -> AdjOp:
        """Projection onto ambient levels 0..top."""
        total = AdjOp.zero(self.module)
        for n in range(min(top, self.N) + 1):
            inc = self.amb_include(n)
            total = total + inc @ inc.adjoint()
        return total

    def window_dist(self, S: AdjOp, T: AdjOp, top: int) -> float:
        Q = self.amb_window(top)
        return (Q @ (S - T) @ Q).norm()

    def cap(self, f: ModVec) -> AdjOp:
        """C_f: G -> ambient, v -> f (x) v on every level."""
        total = AdjOp.zero(self.G.module, self.module)
        for n, tp in enumerate(self.amb_products):
            total = total + self.amb_include(n) @ tp.creation(f) @ self.G.include(n).adjoint()
        return total

    def generator(self, f: ModVec, T: FockOp, g: ModVec) -> AdjOp:
        """The operator f (x) T (x) g^*: h (x) v -> f (x) T <g|h> v."""
        return self.cap(f) @ T.op @ self.cap(g).adjoint()

    def pi(self, a: AlgElem) -> AdjOp:
        total = AdjOp.zero(self.module)
        for n, tp in enumerate(self.amb_products):
            inc = self.amb_include(n)
            total = total + inc @ tp.corr.act(a) @ inc.adjoint()
        return total

    # W_n ---------------------------------------------------------------------

    def y_vec(self, f1: ModVec, x: ModVec, f2: ModVec) -> ModVec:
        return self.cj.vec(f1, x, f2)

    @cached_property
    def W_levels(self) -> list[AdjOp]:
        """W_0(a) = Z a and W_n(x (x) xi) = Z (x) x (x) W_{n-1}(xi), regrouped as
        sum_{i,s} (e^{-beta/2} u_i) (x) (u_i^* (x) x (x) e_s) (x) R_s W_{n-1}(xi)."""
        Z = self.idx.Z
        W0 = AdjOp.make(self.FX.levels[0].module, self.amb_products[0].module, Z.blocks)
        out = [W0]
        Fbasis = self.F.module.basis()
        cu = [self.F.act(self.c, u) for u in self.frame]
        for n in range(1, self.N + 1):
            Rx = self.FX.products[n - 1].slot_ops()
            Ramb = self.amb_products[n - 1].slot_ops()
            Gp = self.G.products[n - 1]
            top = self.amb_products[n]
            total = AdjOp.zero(self.FX.levels[n].module, top.module)
            for t, x in enumerate(self.X.module.basis()):
                inner = AdjOp.zero(self.amb_products[n - 1].module, top.module)
                for u, cu_i in zip(self.frame, cu):
                    Cu = top.creation(cu_i)
                    for s, e in enumerate(Fbasis):
                        inner = inner + Cu @ Gp.creation(self.y_vec(u, x, e)) @ Ramb[s]
                total = total + inner @ out[n - 1] @ Rx[t]
            out.append(total)
        return out

    @cached_property
    def W(self) -> AdjOp:
        total = AdjOp.zero(self.FX.module, self.module)
        for n, Wn in enumerate(self.W_levels):
            total = total + self.amb_include(n) @ Wn @ self.FX.include(n).adjoint()
        return total

    def P_level(self, n: int) -> AdjOp:
        Wn = self.W_levels[n]
        return Wn @ Wn.adjoint()

    def P_on_elementary(self, f: Sequence[ModVec], g: Sequence[ModVec], xs: Sequence[ModVec]) -> ModVec:
        """(P_0 (x) Id (x) ... (x) P_0) applied to f_0 (x) g_0^* (x) x_1 (x) f_1 (x) g_1^* (x) ... ,
        evaluated as W_n(a_0 x_1 (x) a_1 x_2 (x) ... (x) x_n a_n) with a_k = e^{-beta/2} <f_k|g_k>."""
        a = [self.c @ self.F.left_inner(fk, gk) for fk, gk in zip(f, g)]
        n = len(xs)
        if n == 0:
            from .module import elem_as_vec
            return self.W_levels[0](elem_as_vec(a[0]))
        ys = [self.X.act(a[k])(x) for k, x in enumerate(xs)]
        ys[-1] = ys[-1].rmul(a[n])
        return self.W_levels[n](self.FX.elementary(ys))

    def raw_elementary(self, f: Sequence[ModVec], g: Sequence[ModVec], xs: Sequence[ModVec]) -> ModVec:
        """f_0 (x) (g_0^* (x) x_1 (x) f_1) (x) ... (x) (g_{n-1}^* (x) x_n (x) f_n) (x) g_n^* in level n."""
        n = len(xs)
        ys = [self.y_vec(g[k], xs[k], f[k + 1]) for k in range(n)]
        return self.amb_elementary(f[0], ys, g[n])

    def W_adjoint_formula(self, f: ModVec, fs: Sequence[ModVec], xs: Sequence[ModVec], gs: Sequence[ModVec],
                          g: ModVec) -> ModVec:
        """e^{-beta/2}<f|f_1> x_1 (x) e^{-beta/2}<g_1|f_2> x_2 (x) ... (x) x_n e^{-beta/2}<g_n|g>
        for the input f (x) (f_1^* (x) x_1 (x) g_1) (x) ... (x) (f_n^* (x) x_n (x) g_n) (x) g^*."""
        n = len(xs)
        if n == 0:
            from .module import elem_as_vec
            return elem_as_vec(self.c @ self.F.left_inner(f, g))
        lefts = [f] + list(gs[:-1])
        out = [self.X.act(self.c @ self.F.left_inner(l, fk))(x) for l, fk, x in zip(lefts, fs, xs)]
        out[-1] = out[-1].rmul(self.c @ self.F.left_inner(gs[-1], g))
        return self.FX.elementary(out)

    # psi, Phi_P ----------------------------------------------------------------

    def psi(self, x: ModVec) -> AdjOp:
        """psi(x) = sum_{i,j} u_i (x) T_{u_i^* (x) e^{-beta/2} x (x) u_j} (x) u_j^*."""
        cx = self.X.act(self.c)(x)
        total = AdjOp.zero(self.module)
        caps = [self.cap(u) for u in self.frame]
        for ui, Ci in zip(self.frame, caps):
            for uj, Cj in zip(self.frame, caps):
                T = self.G.creation(self.y_vec(ui, cx, uj))
                total = total + Ci @ T.op @ Cj.adjoint()
        return total

    def phi_expectation(self, T: AdjOp) -> FockOp:
        """Phi_P(T) = W^* P T P W = W^* T W."""
        return FockOp(self.FX, self.W.adjoint() @ T @ self.W)

    def closed_form(self, f: ModVec, zs: Sequence[tuple[ModVec, ModVec, ModVec]],
                    ws: Sequence[tuple[ModVec, ModVec, ModVec]], g: ModVec) -> FockOp:
        """Phi_P(f (x) T_z T_w^* (x) g^*) = T_xi e^{-beta} <L|R> T_eta^* with
        z = (x) (f_i^* (x) x_i (x) g_i), w likewise, L = g_m (or f) and R = g_{m+n} (or g)."""
        c = self.c
        ip = self.F.left_inner
        m, n = len(zs), len(ws)
        xi_parts, prev = [], f
        for fi, xi, gi in zs:
            xi_parts.append(self.X.act(c @ ip(prev, fi))(xi))
            prev = gi
        L = prev
        eta_parts, prev = [], g
        for fi, xi, gi in ws:
            eta_parts.append(self.X.act(c @ ip(prev, fi))(xi))
            prev = gi
        R = prev
        mid = c @ c @ ip(L, R)
        Txi = self.FX.creation_word(self.FX.elementary(xi_parts), m)
        Teta = self.FX.creation_word(self.FX.elementary(eta_parts), n)
        return Txi @ self.FX.left_action(mid) @ Teta.adjoint()

    def word_operator(self, triples: Sequence[tuple[ModVec, ModVec, ModVec]]) -> FockOp:
        """T_z on the G tower for z = (x) (f_i^* (x) x_i (x) g_i)."""
        ys = [self.y_vec(*t) for t in triples]
        z = self.FY.elementary(ys)
        return self.G.creation_word(z, len(ys))


def wn_isometry(X: Correspondence, F: BiHilbModule, n: int, tol: float = DEFAULT_TOL) -> AdjOp:
    return ConjugateFock(X, F, n, tol).W_levels[n]


def psi_representation(ctx: ConjugateFock, x: ModVec) -> AdjOp:
    return ctx.psi(x)


def phi_expectation(ctx: ConjugateFock, T: AdjOp) -> FockOp:
    return ctx.phi_expectation(T)


# ---------------------------------------------------------------------------
# Covering spaces


@dataclass(frozen=True, eq=False)
class Covering:
    M: int
    gamma: tuple[int, ...]
    Mtilde: int
    pi: tuple[int, ...]
    A: Algebra
    B: Algebra
    X: Correspondence
    F: BiHilbModule
    conj: Conjugation

    def fibre(self, x: int) -> list[int]:
        return [t for t in range(self.Mtilde) if self.pi[t] == x]

    def fibre_product(self) -> list[tuple[int, int]]:
        """Pairs (y, x) with pi(y) = gamma(pi(x)); the second coordinate carries the right action."""
        return [(y, x) for x in range(self.Mtilde) for y in range(self.Mtilde) if self.pi[y] == self.gamma[self.pi[x]]]

    def func_M(self, values) -> ModVec:
        return self.X.module.vec([np.array([[v]]) for v in values])

    def func_Mtilde(self, values) -> ModVec:
        return self.F.module.vec([np.array([[v]]) for v in values])

    def eq54_inner(self, f1, h, f2, g1, k, g2) -> np.ndarray:
        """Pointwise conj(f2) conj(h o pi) sum_{y in pi^-1(gamma(pi x))} (f1 conj(g1))(y) (k o pi) g2."""
        out = np.zeros(self.Mtilde, dtype=complex)
        for x in range(self.Mtilde):
            px = self.pi[x]
            fib = sum(f1[y] * np.conj(g1[y]) for y in self.fibre(self.gamma[px]))
            out[x] = np.conj(f2[x]) * np.conj(h[px]) * fib * k[px] * g2[x]
        return out

    def fibre_product_correspondence(self) -> Correspondence:
        """Graph correspondence of the fibre product with r = p1 and s = p2."""
        from .graphalg import Graph, graph_correspondence
        edges = self.fibre_product()
        G = Graph(self.Mtilde, tuple((x, y) for (y, x) in edges))
        return graph_correspondence(G)


def _function_algebra_corr(A: Algebra, B: Algebra, pull: Sequence[int]) -> Correspondence:
    """C(B-points) as an A-B correspondence, a acting by multiplication with a o pull."""
    X = HilbertModule(B, tuple(1 for _ in range(B.nblocks)))
    return Correspondence.from_map(A, X, lambda e: AdjOp.make(X, X, [e.blocks[pull[t]] for t in range(B.nblocks)]))


def covering_bimodule(M: int, gamma: Sequence[int], Mtilde: int, pi: Sequence[int], tol: float = DEFAULT_TOL) -> Covering:
    gamma, pi = tuple(int(g) for g in gamma), tuple(int(p) for p in pi)
    if M < 1 or Mtilde < 1:
        raise InvalidArgument("point sets must be nonempty")
    if sorted(gamma) != list(range(M)):
        raise InvalidArgument("gamma must be a permutation of M")
    if len(pi) != Mtilde or any(p < 0 or p >= M for p in pi):
        raise NotACover("pi must map the cover into M")
    if set(pi) != set(range(M)):
        raise NotACover("pi is not surjective")
    A = make_algebra([1] * M)
    B = make_algebra([1] * Mtilde)
    X = _function_algebra_corr(A, A, gamma)
    Fcorr = _function_algebra_corr(A, B, pi)
    F = make_bihilb(Fcorr, upsilon_inner(Fcorr))
    conj = Conjugation(X, F, tol=tol)
    return Covering(M, gamma, Mtilde, pi, A, B, X, F, conj)


def covering_from_json(data: dict, tol: float = DEFAULT_TOL) -> Covering:
    try:
        return covering_bimodule(int(data["M"]), data["gamma"], int(data["Mtilde"]), data["pi"], tol)
    except KeyError as exc:
        raise InvalidArgument(f"covering JSON is missing {exc}") from None
