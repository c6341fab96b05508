"""Completely positive maps, Choi certificates, composition of positive correspondences,
conditional expectations and quotient maps."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .algebra import DEFAULT_TOL, AlgElem, Algebra, Ideal, make_algebra
from .errors import (IdealNotRespected, IncompatibleOperands, InvalidArgument, NotCompletelyPositive, NotLinear,
                     PreconditionViolated)
from .module import AdjOp, HilbertModule, adjop_from_linear, elem_as_vec, left_mult, op_as_elem, standard_module
from .tensor import Correspondence, KSGNSResult, TensorProduct, identity_correspondence, ksgns

# A positive correspondence (rho, X) and a completely positive map into End(X) carry the
# same data: the module and the images of the matrix units.
PositiveCorrespondence = Correspondence
CPMap = Correspondence


@dataclass(frozen=True)
class ChoiWitness:
    eigenvalue: float
    dom_block: int
    cod_block: int
    vector: np.ndarray


def choi_matrix(rho: Correspondence, dom_block: int, cod_block: int) -> np.ndarray:
    """sum_{k,l} E_kl (x) rho(E_kl) restricted to one block of the domain and one of End(X)."""
    n = rho.left.block_dims[dom_block]
    m = rho.module.mults[cod_block]
    C = np.zeros((n * m, n * m), dtype=complex)
    for k in range(n):
        for l in range(n):
            C[k * m:(k + 1) * m, l * m:(l + 1) * m] = rho.images[rho.left.index(dom_block, k, l)].blocks[cod_block]
    return C


def is_completely_positive(rho: Correspondence, tol: float = DEFAULT_TOL) -> tuple[bool, ChoiWitness]:
    """Blockwise Choi test; the witness is the most negative Choi eigenpair."""
    worst = ChoiWitness(np.inf, -1, -1, np.zeros(0))
    scale = 1.0
    for j in range(rho.left.nblocks):
        for i, m in enumerate(rho.module.mults):
            if m == 0:
                continue
            C = choi_matrix(rho, j, i)
            herm_defect = float(np.abs(C - C.conj().T).max(initial=0.0))
            w, v = np.linalg.eigh((C + C.conj().T) / 2)
            scale = max(scale, float(np.abs(w).max(initial=0.0)))
            lam = float(w[0]) if herm_defect <= tol * scale else -herm_defect
            if lam < worst.eigenvalue:
                worst = ChoiWitness(lam, j, i, v[:, 0])
    if worst.dom_block < 0:
        return True, ChoiWitness(0.0, -1, -1, np.zeros(0))
    return worst.eigenvalue >= -tol * scale, worst


def cp_from_callable(dom: Algebra, X: HilbertModule, fn: Callable[[AlgElem], AdjOp], tol: float = DEFAULT_TOL,
                     seed: int = 0) -> Correspondence:
    """Sample a map on the matrix units and confirm linearity on random combinations."""
    corr = Correspondence.from_map(dom, X, fn)
    rng = np.random.default_rng(seed)
    for _ in range(3):
        a, b = dom.random(rng), dom.random(rng)
        s = complex(rng.normal(), rng.normal())
        lhs = fn(a + s * b)
        rhs = corr.act(a) + s * corr.act(b)
        if lhs.dist(rhs) > tol * max(1.0, lhs.norm()):
            raise NotLinear("map is not linear on sampled inputs")
    return corr


def algebra_map(dom: Algebra, cod: Algebra, fn: Callable[[AlgElem], AlgElem]) -> Correspondence:
    """A linear map between algebras, stored as left multiplications on the standard module."""
    return Correspondence.from_map(dom, standard_module(cod), lambda e: left_mult(fn(e)))


def apply_map(rho: Correspondence, a: AlgElem) -> AlgElem:
    """Evaluate a map whose module is the standard module of its codomain algebra."""
    return op_as_elem(rho.act(a))


def compose_maps(sigma: Correspondence, rho: Correspondence) -> Correspondence:
    """sigma o rho for rho: A -> B (algebra map) and sigma: B -> End(Y)."""
    if rho.module != standard_module(sigma.left):
        raise IncompatibleOperands("rho must land in the algebra that sigma acts from")
    return Correspondence(rho.left, sigma.module, tuple(sigma.act(op_as_elem(img)) for img in rho.images))


def transpose_map(alg: Algebra) -> Correspondence:
    return algebra_map(alg, alg, lambda a: alg.elem([b.T for b in a.blocks]))


def compose_pos(P: Correspondence, Q: Correspondence, tol: float = DEFAULT_TOL) -> Correspondence:
    """(rho, X) (x) (sigma, Y) = (rho (x) Id, X (x)_B (B (x)_sigma Y))."""
    if P.right != Q.left:
        raise IncompatibleOperands("middle algebras do not match")
    inner = ksgns(Q, tol)
    out = TensorProduct(P, inner.corr, tol).corr
    ok, w = is_completely_positive(out, tol)
    if not ok:
        raise NotCompletelyPositive(f"composite left action failed certification ({w.eigenvalue:.3e})")
    return out


# ---------------------------------------------------------------------------
# Conditional expectations


def expectation_residual(rho: Correspondence, iota: Correspondence) -> dict[str, float]:
    """Residuals of the conditional-expectation axioms for rho: A -> A onto iota(B)."""
    A = rho.left
    B = iota.left
    res = {}
    res["fixes_subalgebra"] = max(apply_map(rho, apply_map(iota, b)).dist(apply_map(iota, b)) for b in B.basis())
    res["idempotent"] = max(apply_map(rho, apply_map(rho, a)).dist(apply_map(rho, a)) for a in A.basis())
    res["contractive"] = max(0.0, apply_map(rho, A.unit()).norm() - 1.0)
    worst = 0.0
    images = {k: apply_map(iota, b) for k, b in enumerate(B.basis())}
    rho_basis = [apply_map(rho, a) for a in A.basis()]
    for a, ra in zip(A.basis(), rho_basis):
        for b1 in images.values():
            for b2 in images.values():
                lhs = apply_map(rho, b1 @ a @ b2)
                worst = max(worst, lhs.dist(b1 @ ra @ b2))
    res["bimodule"] = worst
    return res


def is_conditional_expectation(rho: Correspondence, iota: Correspondence, tol: float = DEFAULT_TOL) -> bool:
    if not iota.is_homomorphism(tol):
        raise PreconditionViolated("inclusion is not a *-homomorphism")
    ok, _ = is_completely_positive(rho, tol)
    if not ok:
        return False
    return all(v <= tol for v in expectation_residual(rho, iota).values())


def corestrict(rho: Correspondence, iota: Correspondence) -> Correspondence:
    """View a map A -> A with range in iota(B) as a map A -> B."""
    B = iota.left
    basis_coords = np.array([apply_map(iota, b).coords() for b in B.basis()]).T
    pinv = np.linalg.pinv(basis_coords)
    return algebra_map(rho.left, B, lambda a: B.from_coords(pinv @ apply_map(rho, a).coords()))


@dataclass(frozen=True, eq=False)
class IsoReport:
    psi: AdjOp
    isometry_residual: float
    right_linearity_residual: float
    surjective: bool
    rank_defect: int
    domain: TensorProduct
    target: KSGNSResult


def expectation_compose_iso(rho: Correspondence, iota: Correspondence, sigma: Correspondence,
                            tol: float = DEFAULT_TOL) -> IsoReport:
    """psi((a (x) b1) (x) (b2 (x) y)) = a iota(b1 b2) (x) y from
    (A (x)_rho B) (x)_B (B (x)_sigma Y) into A (x)_{sigma o rho} Y.

    ``rho`` maps A into B (use :func:`corestrict` for a map A -> A), ``iota`` embeds B in A.
    """
    full = compose_maps(iota, rho)
    if not is_conditional_expectation(full, iota, tol):
        raise PreconditionViolated("rho is not a conditional expectation onto iota(B)")
    A, B = rho.left, iota.left
    K1 = ksgns(rho, tol)
    K2 = ksgns(sigma, tol)
    D = TensorProduct(K1.corr, K2.corr, tol)
    T = ksgns(compose_maps(sigma, rho), tol)
    R_outer = D.slot_ops()
    R_inner = K2.product.slot_ops()
    coord_basis = K1.corr.module.basis()
    B_basis = B.basis()
    A_units = A.basis()
    psi = AdjOp.zero(D.module, T.corr.module)
    for s, e_s in enumerate(coord_basis):
        betas = [v.as_elem() for v in K1.product.slots(e_s)]
        left_part = A.zero()
        for E_r, beta in zip(A_units, betas):
            left_part = left_part + E_r @ apply_map(iota, beta)
        for t, E_t in enumerate(B_basis):
            a_st = left_part @ apply_map(iota, E_t)
            if a_st.norm() == 0.0:
                continue
            C = T.product.creation(elem_as_vec(a_st))
            psi = psi + C @ R_inner[t] @ R_outer[s]
    iso_res = (psi.adjoint() @ psi).dist(AdjOp.identity(D.module)) if D.module.dim else 0.0
    ranks = psi.rank(1e-8)
    defect = sum(T.corr.module.mults) - sum(ranks)
    lin_res = adjop_from_linear(D.module, T.corr.module, psi.linear_matrix())[1]
    return IsoReport(psi, iso_res, lin_res, defect == 0, defect, D, T)


# ---------------------------------------------------------------------------
# Quotients by ideals


def quotient_algebra(I: Ideal) -> Algebra:
    keep = I.quotient_blocks()
    if not keep:
        raise InvalidArgument("quotient by the whole algebra is zero")
    return make_algebra([I.parent.block_dims[j] for j in keep])


def quotient_elem(I: Ideal, a: AlgElem) -> AlgElem:
    return quotient_algebra(I).elem([a.blocks[j] for j in I.quotient_blocks()])


def splitting(I: Ideal, a: AlgElem) -> AlgElem:
    """The canonical block inclusion A/I -> A, a completely positive splitting of the quotient map."""
    A = I.parent
    keep = I.quotient_blocks()
    blocks = [np.zeros((n, n)) for n in A.block_dims]
    for pos, j in enumerate(keep):
        blocks[j] = a.blocks[pos]
    return A.elem(blocks)


def quotient_cp(rho: Correspondence, I: Ideal, J: Ideal, tol: float = DEFAULT_TOL) -> Correspondence:
    """The induced map A/I -> B/J, a + I -> rho(a) + J, for an algebra map rho: A -> B."""
    A, B = I.parent, J.parent
    if rho.left != A or rho.module != standard_module(B):
        raise IncompatibleOperands("rho must map the ideal's algebra into the second ideal's algebra")
    for e in I.basis():
        if not J.contains(apply_map(rho, e), tol):
            raise IdealNotRespected("rho does not map I into J")
    AI, BJ = quotient_algebra(I), quotient_algebra(J)
    out = algebra_map(AI, BJ, lambda a: quotient_elem(J, apply_map(rho, splitting(I, a))))
    ok, w = is_completely_positive(out, tol)
    if not ok:
        raise NotCompletelyPositive(f"induced map is not completely positive ({w.eigenvalue:.3e})")
    return out


def positive_identity(alg: Algebra) -> Correspondence:
    return identity_correspondence(alg)
