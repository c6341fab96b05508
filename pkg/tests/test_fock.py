import numpy as np
import pytest

from cstarcorr.algebra import make_algebra
from cstarcorr.errors import InconsistentSubproduct, NotAMorphism, PreconditionViolated
from cstarcorr.fock import (TruncFock, check_covariance, covariance_ideal, fock_expectation,
                            inclusion_morphism, induced_fock_projection, projected_creation, sub_fock_pair,
                            subproduct_projection, symmetric_subproduct, trivial_subproduct, truncated_fock)
from cstarcorr.graphalg import graph_correspondence, no_source_ideal, parse_graph
from cstarcorr.instances import hom_correspondence, random_complemented_pair
from cstarcorr.module import AdjOp, elem_as_vec, inner_product
from cstarcorr.suites import covariance_example, fock_projection_trial, subproduct_trial
from cstarcorr.tensor import correspondence_sum

C = make_algebra([1])


def _example_pair():
    """X = C^2 over C with Y = C e_1."""
    X = hom_correspondence(C, C, [[2]])
    Y = hom_correspondence(C, C, [[1]])
    iota = AdjOp.make(Y.module, X.module, [np.array([[1.0], [0.0]])])
    return X, Y, iota


def test_depth_zero_is_the_algebra():
    A = make_algebra([2, 1])
    X = hom_correspondence(A, A, [[1, 0], [1, 1]])
    assert truncated_fock(X, 0).dim == A.dim


@pytest.mark.parametrize("n", [1, 2, 3])
def test_scalar_fock_dimension(n):
    F = truncated_fock(hom_correspondence(C, C, [[n]]), 3)
    assert F.dim == 1 + n + n ** 2 + n ** 3


def test_graph_fock_levels_count_paths():
    E = parse_graph("vertex u\nvertex v\nedge a u v\nedge b v v\nedge c v u\n")
    F = truncated_fock(graph_correspondence(E), 4)
    assert F.level_dims == [len(E.paths(k)) for k in range(5)]


def test_creation_on_vacuum_and_top(rng):
    A = make_algebra([2, 1])
    X = hom_correspondence(A, A, [[1, 1], [1, 0]], rng=rng)
    F = truncated_fock(X, 3)
    x = X.module.random(rng)
    a = A.random(rng)
    Tx = F.creation(x)
    assert Tx(F.embed(elem_as_vec(a), 0)).dist(F.embed(F.products[0].creation(x)(elem_as_vec(a)), 1)) < 1e-12
    # level-one vector x a, read through the canonical identification X (x) A = X
    xa = F.embed(F.elementary([x.rmul(a)]), 1)
    assert Tx(F.embed(elem_as_vec(a), 0)).dist(xa) < 1e-12
    top = F.include(3)(F.levels[3].module.random(rng))
    assert Tx(top).norm() == 0


def test_annihilation_of_creation(rng):
    A = make_algebra([1, 2])
    X = hom_correspondence(A, A, [[1, 1], [0, 1]], rng=rng)
    F = truncated_fock(X, 3)
    x, y = X.module.random(rng), X.module.random(rng)
    lhs = F.creation(x).adjoint() @ F.creation(y)
    assert lhs.window_dist(F.left_action(inner_product(x, y)), 2) < 1e-12
    # the adjoint kills the vacuum level
    assert F.creation(x).adjoint().block(0, 0).norm() == 0


def test_covariance_ideal_examples():
    A = make_algebra([2, 1])
    assert covariance_ideal(hom_correspondence(A, A, [[1, 0], [0, 1]])).is_full
    X, Y, _ = _example_pair()
    assert covariance_ideal(Y).is_full
    killed = hom_correspondence(A, A, [[1, 0], [1, 0]])
    assert covariance_ideal(killed).block_mask == {0}


def test_graph_covariance_ideal_is_no_source_mask():
    E = parse_graph("vertex u\nvertex v\nvertex w\nedge a u v\nedge b v v\nedge c v w\n")
    assert covariance_ideal(graph_correspondence(E)) == no_source_ideal(E)
    assert no_source_ideal(E).block_mask == {1, 2}


def test_identity_morphism_is_covariant(rng):
    A = make_algebra([2, 1])
    X = hom_correspondence(A, A, [[1, 1], [1, 0]], rng=rng)
    ok, res = check_covariance(inclusion_morphism(X, X, AdjOp.identity(X.module)))
    assert ok and res < 1e-12


def test_example_inclusion_not_covariant():
    ok, res = covariance_example()
    assert not ok and res >= 1


def test_example_expectation_still_works():
    X, Y, iota = _example_pair()
    P0 = iota @ iota.adjoint()
    res = fock_projection_trial(X, Y, P0, iota, 4)
    assert max(res.values()) < 1e-9, res


def test_non_morphism_rejected():
    X, Y, _ = _example_pair()
    bad = AdjOp.make(Y.module, X.module, [np.array([[2.0], [0.0]])])
    with pytest.raises(NotAMorphism):
        check_covariance(inclusion_morphism(Y, X, bad))


def test_induced_projection_examples():
    X, Y, iota = _example_pair()
    F = truncated_fock(X, 3)
    assert induced_fock_projection(AdjOp.identity(X.module), F).dist(F.identity()) < 1e-12
    P = induced_fock_projection(AdjOp.zero(X.module), F)
    assert P.op.dist(F.level_projection(0)) < 1e-12
    P = induced_fock_projection(iota @ iota.adjoint(), F)
    assert [sum(P.block(n, n).rank()) for n in range(4)] == [1, 1, 1, 1]


def test_induced_projection_rejects_non_projection(rng):
    X, _, _ = _example_pair()
    F = truncated_fock(X, 2)
    with pytest.raises(PreconditionViolated):
        induced_fock_projection(AdjOp.make(X.module, X.module, [np.array([[1.0, 1.0], [0.0, 0.0]])]), F)
    with pytest.raises(PreconditionViolated):
        fock_expectation(F.creation(X.module.random(rng)), F.identity())


def test_fock_expectation_random_instances(rng):
    for _ in range(4):
        X, Y, P0, iota = random_complemented_pair(rng)
        res = fock_projection_trial(X, Y, P0, iota, 4)
        assert max(res.values()) < 1e-9, res


def test_expectation_idempotent_and_identity_on_sub(rng):
    X, Y, P0, iota = random_complemented_pair(rng)
    pair = sub_fock_pair(X, P0, 4)
    F, P = pair.F, pair.P
    T = F.creation(X.module.random(rng)) @ F.creation(X.module.random(rng)).adjoint()
    once = fock_expectation(P, T)
    assert fock_expectation(P, once).dist(once) < 1e-12
    # Psi_P o alpha is the identity on operators generated by creations of Y
    y1, y2, y3 = (iota(Y.module.random(rng)) for _ in range(3))
    word = F.creation(y1) @ F.creation(y2) @ F.creation(y3).adjoint()
    assert fock_expectation(P, word).window_dist(word @ P, 3) < 1e-10
    word = F.creation(y1).adjoint() @ F.creation(y2)
    assert fock_expectation(P, word).window_dist(word @ P, 3) < 1e-10


def test_regular_complement_keeps_covariance_ideal(rng):
    for _ in range(10):
        X, Y, P0, iota = random_complemented_pair(rng)
        assert covariance_ideal(X) == covariance_ideal(Y)
        # X acts diagonally on Y + Y^perp
        Q0 = AdjOp.identity(X.module) - P0
        for img in X.images:
            assert img.dist(P0 @ img @ P0 + Q0 @ img @ Q0) < 1e-12


def test_trivial_subproduct_gives_identity(rng):
    A = make_algebra([1, 1])
    X = hom_correspondence(A, A, [[1, 1], [1, 0]], rng=rng)
    S = trivial_subproduct(X, 3)
    F = TruncFock(S.fibers[1], 3)
    assert subproduct_projection(S, F).dist(F.identity()) < 1e-10


@pytest.mark.parametrize("depth", [2, 3, 5])
def test_symmetric_subproduct(depth):
    dims, res = subproduct_trial(2, depth)
    assert dims == list(range(1, depth + 2))
    assert res < 1e-9


def test_symmetric_subproduct_projection_ranks():
    S = symmetric_subproduct(3, 3)
    F = TruncFock(S.fibers[1], 3)
    P = subproduct_projection(S, F)
    assert [sum(P.block(n, n).rank()) for n in range(4)] == [1, 3, 6, 10]
    x = S.fibers[1].module.random(np.random.default_rng(0))
    assert projected_creation(P, x).dist(P @ F.creation(x)) == 0


def test_inconsistent_subproduct_rejected():
    S = symmetric_subproduct(2, 2)
    broken = type(S)(S.coeff, S.fibers, S.products, (S.inclusions[0] * 2,) + S.inclusions[1:])
    with pytest.raises(InconsistentSubproduct):
        broken.check()
    with pytest.raises(InconsistentSubproduct):
        subproduct_projection(S, TruncFock(hom_correspondence(C, C, [[2]]), 2))


def test_covariance_ideals_differ_when_sub_action_has_kernel():
    """With a regular complement J_X is everything, so J_X = J_Y needs an injective action on Y."""
    A = make_algebra([1, 1])
    Y = hom_correspondence(A, A, [[1, 0], [0, 0]])
    Z = hom_correspondence(A, A, [[1, 0], [0, 1]])
    X, _ = correspondence_sum(Y, Z)
    assert covariance_ideal(X).is_full
    assert covariance_ideal(Y).block_mask == {0}
