import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cstarcorr.algebra import (AlgElem, Algebra, Ideal, elem_product, functional_calculus, ideal_from_kernel,
                               is_central, is_positive, make_algebra)
from cstarcorr.errors import IncompatibleOperands, InvalidArgument, NotAHomomorphism

shapes = st.lists(st.integers(1, 3), min_size=1, max_size=3)


def test_make_algebra_examples():
    assert make_algebra([2]).dim == 4
    A = make_algebra([1, 1, 1])
    assert A.dim == 3 and A.is_commutative
    B = make_algebra([2, 3])
    assert B.dim == 13
    assert B.unit().norm() == pytest.approx(1.0)


@pytest.mark.parametrize("bad", [[], [0], [2, -1]])
def test_make_algebra_rejects(bad):
    with pytest.raises(InvalidArgument):
        make_algebra(bad)


def test_product_examples():
    A = make_algebra([2])
    rng = np.random.default_rng(0)
    a = A.random(rng)
    assert (A.unit() @ a).dist(a) == 0
    assert elem_product(A.matrix_unit(0, 0, 1), A.matrix_unit(0, 1, 0)).dist(A.matrix_unit(0, 0, 0)) == 0


def test_parent_mismatch():
    a, b = make_algebra([2]).unit(), make_algebra([1, 1]).unit()
    with pytest.raises(IncompatibleOperands):
        a @ b
    with pytest.raises(IncompatibleOperands):
        a + b


@settings(max_examples=40, deadline=None)
@given(shapes, st.integers(0, 2**32 - 1))
def test_involution_and_cstar_identity(dims, seed):
    A = make_algebra(dims)
    rng = np.random.default_rng(seed)
    a, b = A.random(rng), A.random(rng)
    assert (a @ b).adjoint().dist(b.adjoint() @ a.adjoint()) < 1e-12
    assert abs((a.adjoint() @ a).norm() - a.norm() ** 2) < 1e-12 * max(1.0, a.norm() ** 2)
    assert is_positive(a.adjoint() @ a)


def test_squares_positive_many():
    rng = np.random.default_rng(1)
    for dims in ([1], [2], [1, 2], [3, 1, 2]):
        A = make_algebra(dims)
        assert all(is_positive(a.adjoint() @ a) for a in (A.random(rng) for _ in range(1000)))


def test_is_positive_examples():
    A = make_algebra([2])
    assert is_positive(A.unit())
    assert not is_positive(A.elem([np.diag([1.0, -1.0])]))
    assert not is_positive(A.matrix_unit(0, 0, 1))


def test_functional_calculus_sqrt():
    A = make_algebra([3, 1])
    rng = np.random.default_rng(2)
    a = A.random(rng)
    p = a.adjoint() @ a
    r = functional_calculus(p, lambda w: np.sqrt(np.clip(w, 0, None)))
    assert (r @ r).dist(p) < 1e-10
    with pytest.raises(InvalidArgument):
        functional_calculus(A.matrix_unit(0, 0, 1), np.sqrt)


def test_is_central():
    A = make_algebra([2, 1])
    assert is_central(A.unit() * 3 + A.block_unit(1))
    assert not is_central(A.matrix_unit(0, 0, 0))


def test_json_roundtrip():
    A = make_algebra([2, 1])
    assert A.to_json() == {"blocks": [2, 1]}
    assert Algebra.from_json(json.loads(json.dumps(A.to_json()))) == A
    a = A.random(np.random.default_rng(3))
    assert AlgElem.from_json(A, json.loads(json.dumps(a.to_json()))).dist(a) == 0


def test_kernel_injective():
    A = make_algebra([2, 1])
    ker, perp = ideal_from_kernel(A, lambda a: a)
    assert ker.is_zero and perp.is_full


def test_kernel_projection_onto_first_block():
    A = make_algebra([1, 1])
    C = make_algebra([1])
    ker, perp = ideal_from_kernel(A, lambda a: C.elem([a.blocks[0]]))
    assert ker.block_mask == {1} and perp.block_mask == {0}
    assert (ker & perp).is_zero and (ker | perp).is_full


def test_kernel_rejects_non_homomorphism():
    A = make_algebra([2])
    with pytest.raises(NotAHomomorphism):
        ideal_from_kernel(A, lambda a: a * 2)


def test_ideal_operations():
    A = make_algebra([1, 2, 1])
    I = Ideal(A, frozenset({0, 2}))
    assert I.complement().block_mask == {1}
    assert I.contains(A.block_unit(0) + A.block_unit(2))
    assert not I.contains(A.block_unit(1))
    assert I.quotient_blocks() == [1]
    assert len(I.basis()) == 2
    with pytest.raises(InvalidArgument):
        Ideal(A, frozenset({5}))
