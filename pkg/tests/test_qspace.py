import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qfrucht.qspace import (LinOp, QSet, QSpaceError, complete_graph, conjugate_op, degree_operators,
                            dumps_operator, make_quantum_graph, make_quantum_set, operator_from_json,
                            operator_to_json, projection_rank, schur_product, spectral_projections,
                            verify_quantum_graph)

from conftest import dual, group

block_lists = st.lists(st.integers(1, 4), min_size=1, max_size=3)


def explicit_m_mstar(space, weight_override=None):
    """Independent assembly of m and its weighted adjoint from the definition."""
    d = space.dim
    m = np.zeros((d, d * d))
    for k, (off, n) in enumerate(zip(space.offsets, space.block_sizes)):
        for i in range(n):
            for j in range(n):
                for q in range(n):
                    m[off + i * n + q, (off + i * n + j) * d + off + j * n + q] = 1
    w = space.weights if weight_override is None else weight_override
    ww = np.kron(w, w)
    mstar = (m.T * w[None, :]) / ww[:, None]
    return m, mstar


def random_op(space, rng, real=False):
    a = rng.normal(size=(space.dim, space.dim))
    if not real:
        a = a + 1j * rng.normal(size=(space.dim, space.dim))
    return LinOp(space, a)


# -- make_quantum_set --------------------------------------------------------
def test_classical_three_point_set():
    x = make_quantum_set([1, 1, 1])
    assert x.dim == 3
    assert x.psi_weights == (1, 1, 1)
    assert x.is_classical


def test_m2_weight_is_derived_from_mmstar():
    x = make_quantum_set([2])
    # with trial weight 1 the product m m^* is c * I; the weight solving m m^* = I is c
    m, mstar = explicit_m_mstar(x, weight_override=np.ones(x.dim))
    prod = m @ mstar
    c = prod[0, 0]
    assert np.allclose(prod, c * np.eye(x.dim))
    assert c == pytest.approx(x.psi_weights[0]) == pytest.approx(2)
    assert x.psi(x.unit) == pytest.approx(4)


def test_group_algebra_shape_of_s3():
    x = make_quantum_set([2, 1, 1])
    assert x.psi(x.unit) == pytest.approx(6)


@pytest.mark.parametrize("bad", [[], [0], [2, -1]])
def test_make_quantum_set_rejects_bad_sizes(bad):
    with pytest.raises(QSpaceError):
        make_quantum_set(bad)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(1, 8), min_size=1, max_size=2))
def test_mmstar_is_identity(sizes):
    x = make_quantum_set(sizes)
    m = x.multiplication_matrix()
    w = x.weights
    mstar = m.conj().T.multiply(w[None, :]).multiply(1 / np.kron(w, w)[:, None])
    assert np.abs((m @ mstar).toarray() - np.eye(x.dim)).max() <= 1e-10


@settings(max_examples=20, deadline=None)
@given(block_lists)
def test_psi_is_tracial(sizes):
    x = make_quantum_set(sizes)
    eye = np.eye(x.dim)
    for r in range(x.dim):
        for s in range(x.dim):
            assert x.psi(x.multiply(eye[r], eye[s])) == pytest.approx(x.psi(x.multiply(eye[s], eye[r])))


def test_inner_product_weights():
    x = make_quantum_set([3, 1])
    eye = np.eye(x.dim)
    for r in range(x.dim):
        for s in range(x.dim):
            expect = x.block_sizes[x.label(r)[0]] if r == s else 0
            assert x.inner(eye[r], eye[s]) == pytest.approx(expect)


# -- Schur product -----------------------------------------------------------
@settings(max_examples=25, deadline=None)
@given(block_lists, st.integers(0, 2**31))
def test_schur_matches_explicit_oracle(sizes, seed):
    x = make_quantum_set(sizes)
    rng = np.random.default_rng(seed)
    a, b = random_op(x, rng), random_op(x, rng)
    m, mstar = explicit_m_mstar(x)
    ref = m @ np.kron(a.matrix, b.matrix) @ mstar
    assert np.abs(schur_product(a, b).matrix - ref).max() <= 1e-10


def test_schur_classical_is_entrywise():
    x = make_quantum_set([1] * 5)
    rng = np.random.default_rng(1)
    a, b = random_op(x, rng), random_op(x, rng)
    assert np.allclose(schur_product(a, b).matrix, a.matrix * b.matrix, atol=1e-14)


@pytest.mark.parametrize("sizes", [[1], [2], [2, 1, 1], [3, 2]])
def test_identity_schur_identity(sizes):
    x = make_quantum_set(sizes)
    ident = LinOp.identity(x)
    assert (schur_product(ident, ident) - ident).norm() <= 1e-12


def test_schur_on_group_multipliers():
    g = group("Z3")
    q = dual("Z3")
    n = g.order
    rng = np.random.default_rng(3)
    ta, tb = rng.normal(size=n) + 1j * rng.normal(size=n), rng.normal(size=n)
    f, finv = q.fourier, q.fourier_inverse
    a = LinOp(q.space, f @ np.diag(n * ta) @ finv)
    b = LinOp(q.space, f @ np.diag(n * tb) @ finv)
    m, mstar = explicit_m_mstar(q.space)
    oracle = m @ np.kron(a.matrix, b.matrix) @ mstar
    diag = finv @ oracle @ f
    expect = np.array([n * sum(ta[x] * tb[y] for x in range(n) for y in range(n) if g.mul[x, y] == k)
                       for k in range(n)])
    assert np.abs(diag - np.diag(expect)).max() <= 1e-10
    assert np.abs(finv @ schur_product(a, b).matrix @ f - np.diag(expect)).max() <= 1e-10


def test_schur_rejects_mismatched_spaces():
    a = LinOp.identity(QSet((2,)))
    b = LinOp.identity(QSet((1, 1, 1, 1)))
    with pytest.raises(QSpaceError):
        schur_product(a, b)


@settings(max_examples=20, deadline=None)
@given(block_lists, st.integers(0, 2**31))
def test_schur_associative_and_bilinear(sizes, seed):
    x = make_quantum_set(sizes)
    rng = np.random.default_rng(seed)
    a, b, c = (random_op(x, rng) for _ in range(3))
    lhs = schur_product(schur_product(a, b), c)
    rhs = schur_product(a, schur_product(b, c))
    assert (lhs - rhs).norm() <= 1e-9 * max(1.0, lhs.norm())
    s = 0.3 - 1.2j
    lin = schur_product(a * s + b, c)
    assert (lin - (schur_product(a, c) * s + schur_product(b, c))).norm() <= 1e-9 * max(1.0, lin.norm())


# -- conjugation -------------------------------------------------------------
def test_conjugate_fixes_real_classical():
    x = make_quantum_set([1, 1, 1])
    a = random_op(x, np.random.default_rng(0), real=True)
    assert np.array_equal(conjugate_op(a).matrix, a.matrix)


def test_conjugate_multiplier_symbol():
    g, q = group("Z3"), dual("Z3")
    rng = np.random.default_rng(5)
    t = rng.normal(size=3) + 1j * rng.normal(size=3)
    a = LinOp(q.space, q.fourier @ np.diag(t) @ q.fourier_inverse)
    abar = conjugate_op(a)
    for h in range(3):
        lam = q.lambda_vector(h)
        # definition: (A(f^*))^*
        direct = q.space.star(a(q.space.star(lam)))
        assert np.allclose(abar(lam), direct)
        assert np.allclose(abar(lam), np.conj(t[g.inverse[h]]) * lam)


def test_complete_graph_conjugation_invariant():
    x = make_quantum_set([2, 1])
    k = complete_graph(x)
    assert (conjugate_op(k) - k).norm() <= 1e-12


@settings(max_examples=20, deadline=None)
@given(block_lists, st.integers(0, 2**31))
def test_conjugate_involutive_and_antimultiplicative(sizes, seed):
    x = make_quantum_set(sizes)
    rng = np.random.default_rng(seed)
    a, b = random_op(x, rng), random_op(x, rng)
    assert (conjugate_op(conjugate_op(a)) - a).norm() <= 1e-12 * max(1, a.norm())
    lhs = conjugate_op(schur_product(a, b))
    # the star reverses products, so the order flips
    rhs = schur_product(conjugate_op(b), conjugate_op(a))
    assert (lhs - rhs).norm() <= 1e-9 * max(1.0, lhs.norm())


def test_conjugate_matches_definition_on_matrix_blocks():
    x = make_quantum_set([2, 1])
    a = random_op(x, np.random.default_rng(2))
    eye = np.eye(x.dim)
    cols = np.stack([x.star(a(x.star(eye[r]))) for r in range(x.dim)], axis=1)
    assert np.abs(conjugate_op(a).matrix - cols).max() <= 1e-12


def test_conjugate_multiplicative_in_the_same_order_only_when_commutative():
    rng = np.random.default_rng(4)
    x = make_quantum_set([1, 1, 1, 1])
    a, b = random_op(x, rng), random_op(x, rng)
    same = conjugate_op(schur_product(a, b)) - schur_product(conjugate_op(a), conjugate_op(b))
    assert same.norm() <= 1e-12
    y = make_quantum_set([2])
    a, b = random_op(y, rng), random_op(y, rng)
    same = conjugate_op(schur_product(a, b)) - schur_product(conjugate_op(a), conjugate_op(b))
    assert same.norm() > 1e-3


@settings(max_examples=20, deadline=None)
@given(block_lists, st.integers(0, 2**31))
def test_real_operator_has_real_adjoint(sizes, seed):
    x = make_quantum_set(sizes)
    b = random_op(x, np.random.default_rng(seed))
    a = b + conjugate_op(b)
    assert (a - conjugate_op(a)).norm() <= 1e-12 * max(1, a.norm())
    adj = a.adjoint()
    assert (adj - conjugate_op(adj)).norm() <= 1e-10 * max(1.0, adj.norm())


# -- graph flags and degrees -------------------------------------------------
@pytest.mark.parametrize("sizes", [[1, 1, 1], [2], [2, 1, 1], [3, 1]])
def test_complete_graph_flags_and_degree(sizes):
    x = make_quantum_set(sizes)
    k = complete_graph(x)
    flags = verify_quantum_graph(k)
    assert flags.schur_idempotent and flags.real and flags.undirected and flags.loopless
    deg = degree_operators(k)
    assert deg.is_regular
    assert deg.degree == pytest.approx(x.psi(x.unit) - 1)
    assert (deg.in_degree - LinOp.identity(x) * (x.dim - 1)).norm() <= 1e-10


def test_zero_map_is_edgeless_graph():
    x = make_quantum_set([2, 1])
    z = LinOp.zero(x)
    flags = verify_quantum_graph(z)
    assert flags.schur_idempotent and flags.real and flags.undirected and flags.loopless
    deg = degree_operators(z)
    assert deg.in_degree.norm() == 0 and deg.degree == 0


def test_dual_z2_sign_projection_graph():
    q = dual("Z2")
    # A from the coefficient oracle: c = (1/2, -1/2) is idempotent under sum_{ab=g} c_a c_b
    c = np.array([0.5, -0.5])
    assert np.allclose([c[0] * c[0] + c[1] * c[1], 2 * c[0] * c[1]], c)
    n = 2
    a = LinOp(q.space, q.fourier @ np.diag(n * c) @ q.fourier_inverse)
    flags = verify_quantum_graph(a)
    assert flags.schur_idempotent and flags.real and flags.undirected and flags.loopless
    assert np.allclose(a(q.lambda_vector(0)), q.lambda_vector(0))
    assert np.allclose(a(q.lambda_vector(1)), -q.lambda_vector(1))
    deg = degree_operators(a)
    assert deg.is_regular and deg.degree == pytest.approx(1)


def test_flags_are_results_not_errors():
    x = make_quantum_set([2, 1])
    a = random_op(x, np.random.default_rng(0))
    flags = verify_quantum_graph(a)
    assert not flags.schur_idempotent
    graph = make_quantum_graph(a)
    assert graph.regular_degree is None


# -- spectral projections ----------------------------------------------------
def test_identity_single_cluster():
    x = make_quantum_set([2, 1])
    pairs = spectral_projections(LinOp.identity(x))
    assert len(pairs) == 1
    val, p = pairs[0]
    assert val == pytest.approx(1)
    assert (p - LinOp.identity(x)).norm() <= 1e-10


def test_diagonal_ranks():
    x = make_quantum_set([1, 1, 1])
    pairs = spectral_projections(LinOp(x, np.diag([1.0, 1.0, 2.0])))
    assert [projection_rank(p) for _, p in pairs] == [2, 1]


def test_non_normal_rejected():
    x = make_quantum_set([1, 1])
    with pytest.raises(QSpaceError):
        spectral_projections(LinOp(x, np.array([[0, 1], [0, 0]])))


@settings(max_examples=20, deadline=None)
@given(block_lists, st.integers(0, 2**31))
def test_projections_orthogonal_and_complete(sizes, seed):
    x = make_quantum_set(sizes)
    rng = np.random.default_rng(seed)
    z = rng.normal(size=(x.dim, x.dim)) + 1j * rng.normal(size=(x.dim, x.dim))
    u, _ = np.linalg.qr(z)
    vals = rng.integers(0, 3, size=x.dim) + 1j * rng.integers(0, 2, size=x.dim)
    orth = u @ np.diag(vals) @ u.conj().T
    sw = np.sqrt(x.weights)
    n = LinOp(x, orth / sw[:, None] * sw[None, :])
    pairs = spectral_projections(n)
    total = sum((p for _, p in pairs), LinOp.zero(x))
    assert (total - LinOp.identity(x)).norm() <= 1e-9
    for i, (vi, pi) in enumerate(pairs):
        assert (pi @ pi - pi).norm() <= 1e-9
        assert (pi.adjoint() - pi).norm() <= 1e-9
        assert (n @ pi - pi * vi).norm() <= 1e-8
        for _, pj in pairs[i + 1:]:
            assert (pi @ pj).norm() <= 1e-9


# -- JSON --------------------------------------------------------------------
def test_operator_json_round_trip_is_exact():
    import json

    x = make_quantum_set([2, 1])
    a = random_op(x, np.random.default_rng(9))
    back = operator_from_json(json.loads(dumps_operator(a)))
    assert back.space == a.space
    assert np.array_equal(back.matrix, a.matrix)
    assert operator_to_json(a)["space"] == {"blocks": [2, 1]}


def test_operator_json_errors():
    with pytest.raises(QSpaceError):
        operator_from_json({"re": [[1]]})
    with pytest.raises(QSpaceError):
        operator_from_json({"space": {"blocks": [2]}, "re": [[1]], "im": [[0]]})
