"""Acceptance criteria; each test prints one PASS/FAIL line."""
import time

import numpy as np
import pytest

from cstarcorr.algebra import make_algebra
from cstarcorr.bihilb import covering_bimodule, watatani_index
from cstarcorr.fock import covariance_ideal
from cstarcorr.graphalg import kappa_check, parse_graph, parse_subgraph, random_graph_pair, suffix_kappa_check
from cstarcorr.instances import (hom_correspondence, random_complemented_pair, random_cp_instance,
                                 random_hom_instance, random_regular_pair)
from cstarcorr.module import AdjOp
from cstarcorr.positivity import compose_pos
from cstarcorr.suites import (DEFAULT_COVER, O1_TEXT, O2_TEXT, conjugate_fock_trial, covariance_example,
                              covering_trial, fock_projection_trial, ksgns_trial, morita_example, random_chain,
                              retract_trial, scalar_example, semicategory_trial, subproduct_trial, unitary_residual)
from cstarcorr.tensor import find_unitary_iso, identity_correspondence, iso_signature, ksgns


@pytest.fixture
def verdict(capsys):
    def emit(n: int, ok: bool, detail: str):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
        assert ok, detail
    return emit


def test_criterion_1_ksgns_dilation(verdict):
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    worst, defect = 0.0, 0
    for _ in range(200):
        res, d = ksgns_trial(random_cp_instance(rng), 1e-9)
        worst, defect = max(worst, res), max(defect, d)
    elapsed = time.perf_counter() - start
    verdict(1, worst <= 1e-9 and defect == 0 and elapsed <= 30,
            f"dilation residual {worst:.2e}, span defect {defect}, {elapsed:.1f}s")


def test_criterion_2_semicategory(verdict):
    rng = np.random.default_rng(2025)
    right = left = 0.0
    sig_ok = True
    for _ in range(100):
        P = random_chain(rng, length=1)[0]
        R = compose_pos(P, identity_correspondence(P.right))
        right = max(right, unitary_residual(find_unitary_iso(R, P), R, P))
        L = compose_pos(identity_correspondence(P.left), P)
        K = ksgns(P).corr
        sig_ok &= L.module.dim == K.module.dim and iso_signature(L) == iso_signature(K)
        left = max(left, unitary_residual(find_unitary_iso(L, K), L, K))
    assoc = 0.0
    for _ in range(50):
        P, Q, R = random_chain(rng)
        assoc = max(assoc, semicategory_trial(P, Q, R, 1e-9)["associativity"])
    verdict(2, right < 1e-8 and left < 1e-8 and sig_ok and assoc < 1e-8,
            f"right identity {right:.2e}, left identity = KSGNS {left:.2e} (signatures match: {sig_ok}), "
            f"associativity {assoc:.2e}")


def test_criterion_3_retract(verdict):
    rng = np.random.default_rng(2026)
    first = second = 0.0
    for _ in range(100):
        a, b = retract_trial(random_hom_instance(rng), 1e-9)
        first, second = max(first, a), max(second, b)
    verdict(3, first < 1e-8 and second < 1e-8, f"KSGNS o U = Id {first:.2e}, idempotence {second:.2e}")


def test_criterion_4_fock_expectation(verdict):
    rng = np.random.default_rng(2027)
    worst: dict[str, float] = {}
    ideals = True
    for _ in range(10):
        X, Y, P0, iota = random_complemented_pair(rng)
        assert X.module.dim <= 6 and X.left.nblocks <= 3
        ideals &= covariance_ideal(X) == covariance_ideal(Y)
        for k, v in fock_projection_trial(X, Y, P0, iota, 4).items():
            worst[k] = max(worst.get(k, 0.0), v)
    ok = ideals and worst["compacts"] <= 1e-10 and all(v <= 1e-9 for v in worst.values())
    verdict(4, ok, f"J_X = J_Y: {ideals}; " + ", ".join(f"{k} {v:.2e}" for k, v in worst.items()))


def test_criterion_5_covariance_failure(verdict):
    covariant, gap = covariance_example()
    C = make_algebra([1])
    X = hom_correspondence(C, C, [[2]])
    Y = hom_correspondence(C, C, [[1]])
    iota = AdjOp.make(Y.module, X.module, [np.array([[1.0], [0.0]])])
    res = fock_projection_trial(X, Y, iota @ iota.adjoint(), iota, 4)
    verdict(5, (not covariant) and gap >= 1 and max(res.values()) <= 1e-9,
            f"covariance fails with residual {gap:.2f}; expectation suite worst {max(res.values()):.2e}")


def test_criterion_6_symmetric_subproduct(verdict):
    dims, res = subproduct_trial(2, 5)
    verdict(6, dims == [1, 2, 3, 4, 5, 6] and res <= 1e-9, f"level dimensions {dims}, compression residual {res:.2e}")


def test_criterion_7_watatani_index(verdict):
    morita = max(watatani_index(morita_example(n)).ebeta.dist(morita_example(n).left.unit()) for n in (1, 2, 3))
    scalar = max(abs(watatani_index(scalar_example(n)).ebeta.coords()[0] - n) for n in (1, 2, 3, 5))
    cover = 0.0
    covers = [(covering_bimodule(1, [0], k, [0] * k), k) for k in (2, 3, 4)]
    covers.append((covering_bimodule(**DEFAULT_COVER), 2))
    for cov, k in covers:
        idx = watatani_index(cov.F).ebeta.coords()
        cover = max(cover, float(np.abs(idx - k).max()))
    rng = np.random.default_rng(2028)
    frame = 0.0
    for _ in range(3):
        _, F = random_regular_pair(rng)
        base = watatani_index(F, seed=0).ebeta
        for seed in range(1, 4):
            idx = watatani_index(F, seed=seed)
            frame = max(frame, idx.frame_residual, idx.ebeta.dist(base))
    verdict(7, morita <= 1e-12 and scalar <= 1e-12 and cover <= 1e-12 and frame <= 1e-10,
            f"Morita {morita:.2e}, C^n {scalar:.2e}, covers {cover:.2e}, frame independence {frame:.2e}")


def test_criterion_8_conjugate_fock(verdict):
    rng = np.random.default_rng(2029)
    start = time.perf_counter()
    worst: dict[str, float] = {}
    for k in range(4):
        X, F = random_regular_pair(rng)
        assert X.module.dim <= 4 and F.module.dim <= 6
        for name, v in conjugate_fock_trial(X, F, 3, seed=k).items():
            worst[name] = max(worst.get(name, 0.0), v)
    elapsed = time.perf_counter() - start
    verdict(8, all(v <= 1e-9 for v in worst.values()) and elapsed <= 120,
            ", ".join(f"{k} {v:.2e}" for k, v in worst.items()) + f", {elapsed:.1f}s")


def test_criterion_9_graph_kappa(verdict):
    start = time.perf_counter()
    E = parse_graph(O2_TEXT)
    reports = [("O_2/O_1 depth 4", kappa_check(E, parse_subgraph(O1_TEXT, E), 4))]
    E4, sub4 = random_graph_pair(4, np.random.default_rng(2030))
    reports.append(("random 4-vertex depth 3", kappa_check(E4, sub4, 3)))
    elapsed = time.perf_counter() - start
    suffix = suffix_kappa_check(E, parse_subgraph(O1_TEXT, E), 3, polar_depth=1).passed
    failed = [f"{name}: {k} ({rep.counterexamples.get(k, '')})" for name, rep in reports
              for k, v in rep.checks.items() if not v]
    detail = "; ".join(failed) if failed else "all kappa checks hold"
    verdict(9, not failed and elapsed <= 60,
            f"{detail}; {elapsed:.1f}s; suffix-corrected map passes: {suffix}")


def test_criterion_10_covering(verdict):
    cov = covering_bimodule(**DEFAULT_COVER)
    res = covering_trial(cov)
    dim = cov.conj.corr.module.dim
    index = watatani_index(cov.F).ebeta.coords()
    ok = dim == 12 and res["fibre_inner_product"] <= 1e-10 and float(np.abs(index - 2).max()) <= 1e-12
    verdict(10, ok, f"dimension {dim}, inner product formula {res['fibre_inner_product']:.2e}, "
                    f"index {[float(c.real) for c in index]}")
