import numpy as np
import pytest
import scipy.linalg

from ncspec.ncpoly import MatrixAssignment, evaluate, parse_polynomial
from ncspec.linearize import (
    EmptyPolynomialError,
    ResolventSolver,
    SingularPointError,
    _assert_structure,
    bind_full,
    eval_resolvent,
    from_json,
    linearize,
    to_json,
    verify_schur,
)


def _rand_assignment(rng, n, u, t):
    def mat():
        return rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))

    return MatrixAssignment(
        n,
        circulars={j: mat() for j in range(1, u + 1)},
        deterministics={k: mat() for k in range(1, t + 1)},
    )


def _rand_poly_text(rng, u=2, t=2, max_deg=4, max_monomials=6):
    terms = []
    for _ in range(int(rng.integers(1, max_monomials + 1))):
        deg = int(rng.integers(0, max_deg + 1))
        factors = [f"{rng.integers(1, 5)}"]
        for _ in range(deg):
            if rng.random() < 0.5 and u > 0:
                factors.append(f"Y{rng.integers(1, u + 1)}")
            else:
                star = "*" if rng.random() < 0.3 else ""
                factors.append(f"A{rng.integers(1, t + 1)}{star}")
        terms.append("*".join(factors))
    return " + ".join(terms)


def test_single_symbol_shape_and_matrices():
    L = linearize(parse_polynomial("Y1", 1, 0))
    assert L.m == 3
    expected_gamma = np.array([[0, 0, 1], [0, 0, -1], [1, -1, 0]], dtype=complex)
    assert np.array_equal(L.gamma, expected_gamma)
    z1 = np.zeros((3, 3), dtype=complex)
    z1[1, 1] = 1
    assert np.array_equal(L.zeta[1], z1)


def test_block_sizes_example1_zeroed():
    # "A1 + (1/8)*A1^2": padded blocks of 3 and 4 rows share the border -> m = 6
    L = linearize(parse_polynomial("A1 + (1/8)*A1^2", 0, 1))
    assert L.m == 6


def test_example1_m():
    P1 = "(3/2)*Y1 + (1/6)*Y2^2*A1 + (1/6)*Y2*Y3*A1*Y3 + A1^2*Y3 + A1 + (1/8)*A1^2"
    assert linearize(parse_polynomial(P1, 3, 1)).m == 21


def test_constant_polynomial_recovers_identity():
    L = linearize(parse_polynomial("1", 0, 0))
    a = MatrixAssignment(4)
    Ly = bind_full(L, a)
    N = 4
    Q = Ly[N:, N:]
    ustar, v = Ly[:N, N:], Ly[N:, :N]
    P_rec = -(ustar @ np.linalg.solve(Q, v))
    assert np.allclose(P_rec, np.eye(4), atol=1e-13)


def test_empty_polynomial_rejected():
    with pytest.raises(EmptyPolynomialError):
        linearize(parse_polynomial("Y1 - Y1", 1, 0))


def test_eval_resolvent_determinant_oracle():
    # z e11 - L(0) for P = "Y1" at N = 1 has |det| = |z|
    L = linearize(parse_polynomial("Y1", 1, 0))
    a = MatrixAssignment(1, circulars={1: np.zeros((1, 1))})
    for z in (2.0, -1.5 + 0.5j, 3j):
        K = eval_resolvent(L, a, 1.0, z)
        assert K.shape == (3, 3)
        assert abs(np.linalg.det(K)) == pytest.approx(abs(z), rel=1e-12)


def test_eval_resolvent_zero_bindings_is_minus_gamma():
    L = linearize(parse_polynomial("Y1*A1 + 2", 1, 1))
    n = 3
    a = MatrixAssignment(n, circulars={1: np.zeros((n, n))},
                         deterministics={1: np.zeros((n, n))})
    K = eval_resolvent(L, a, 1.0, 0.0)
    assert np.array_equal(K, -np.kron(L.gamma, np.eye(n)))


def test_verify_schur_scalar_identity():
    L = linearize(parse_polynomial("Y1", 1, 0))
    a = MatrixAssignment(1, circulars={1: np.zeros((1, 1))})
    rep = verify_schur(L, parse_polynomial("Y1", 1, 0), a, 1.0)
    assert rep["residual_corner"] < 1e-14
    assert rep["residual_p"] < 1e-14
    assert rep["detQ_error"] < 1e-14


def test_verify_schur_random_polynomials():
    rng = np.random.default_rng(5)
    for _ in range(25):
        text = _rand_poly_text(rng)
        p = parse_polynomial(text, 2, 2)
        if not p.monomials:
            continue
        L = linearize(p)
        a = _rand_assignment(rng, 5, 2, 2)
        rep = verify_schur(L, p, a, 10.0)
        assert rep["residual_p"] < 1e-9, text
        assert rep["residual_corner"] < 1e-9, text
        assert rep["detQ_error"] < 1e-9, text


def test_verify_schur_singular_point():
    p = parse_polynomial("A1", 0, 1)
    L = linearize(p)
    a = MatrixAssignment(2, deterministics={1: np.diag([1.0, 2.0])})
    with pytest.raises(SingularPointError):
        verify_schur(L, p, a, 1.0)


def test_detq_is_unimodular_with_large_coefficients():
    # the coefficient absorption must never touch det Q
    p = parse_polynomial("1000*Y1*A1*Y1 + 0.001*A1 + 7", 1, 1)
    L = linearize(p)
    rng = np.random.default_rng(0)
    a = _rand_assignment(rng, 4, 1, 1)
    rep = verify_schur(L, p, a, 10.0)
    assert rep["detQ_error"] < 1e-9


def test_structure_invariants_asserted_on_build():
    rng = np.random.default_rng(9)
    for _ in range(10):
        p = parse_polynomial(_rand_poly_text(rng), 2, 2)
        if not p.monomials:
            continue
        L = linearize(p)
        _assert_structure(L)  # idempotent re-check
        assert L.gamma[0, 0] == 0
        assert set(np.unique(L.gamma[0, :])) <= {0, 1}


def test_eigenvalue_transport():
    # {z : z eigenvalue of P(y)} == finite eigenvalues of the pencil
    # (L(y), e11 x I)
    rng = np.random.default_rng(3)
    for _ in range(5):
        p = parse_polynomial(_rand_poly_text(rng, max_deg=3, max_monomials=4), 2, 2)
        if not p.monomials:
            continue
        L = linearize(p)
        n = 4
        a = _rand_assignment(rng, n, 2, 2)
        Py = evaluate(p, a, 1.0)
        target = np.sort_complex(np.linalg.eigvals(Py))
        Ly = bind_full(L, a, 1.0)
        E11 = np.zeros((L.m * n, L.m * n), dtype=complex)
        E11[:n, :n] = np.eye(n)
        gen = scipy.linalg.eig(Ly, E11, right=False)
        finite = np.sort_complex(gen[np.isfinite(gen)])
        assert len(finite) == len(target)
        assert np.max(np.abs(finite - target)) < 1e-6


def test_gluing_order_still_valid():
    p = parse_polynomial("Y1*A1 + A1 + 3*Y1^2", 1, 1)
    k = len(p.monomials)
    rng = np.random.default_rng(1)
    a = _rand_assignment(rng, 3, 1, 1)
    for order in ([2, 0, 1], [1, 2, 0], list(range(k))):
        L = linearize(p, order=order)
        rep = verify_schur(L, p, a, 8.0)
        assert max(rep.values()) < 1e-10


def test_json_round_trip():
    p = parse_polynomial("(1/2)*Y1 + 2i*A1*Y2 + A1*", 2, 1)
    L = linearize(p)
    L2 = from_json(to_json(L))
    assert L2.m == L.m and L2.u == L.u and L2.t == L.t
    assert np.array_equal(L2.gamma, L.gamma)
    assert set(L2.zeta) == set(L.zeta)
    assert all(np.array_equal(L2.zeta[j], L.zeta[j]) for j in L.zeta)
    assert set(L2.beta) == set(L.beta)
    assert all(np.array_equal(L2.beta[k], L.beta[k]) for k in L.beta)
    assert to_json(L2) == to_json(L)


def test_resolvent_solver_matches_dense():
    rng = np.random.default_rng(17)
    p = parse_polynomial(_rand_poly_text(rng, max_deg=3, max_monomials=4), 2, 2)
    L = linearize(p)
    n = 6
    a = _rand_assignment(rng, n, 2, 2)
    z = 11.0 + 0.5j
    solver = ResolventSolver(L, a, 1.0, z)
    K = eval_resolvent(L, a, 1.0, z)

    assert np.allclose(solver.p_of_y, evaluate(p, a, 1.0), atol=1e-10)

    rhs = rng.standard_normal((L.m * n, 3)) + 1j * rng.standard_normal((L.m * n, 3))
    x = solver.solve(rhs)
    assert np.linalg.norm(K @ x - rhs) < 1e-8 * np.linalg.norm(rhs)
    y = solver.solve_adjoint(rhs)
    assert np.linalg.norm(K.conj().T @ y - rhs) < 1e-8 * np.linalg.norm(rhs)

    # 1-d right-hand sides keep their shape
    r1 = rhs[:, 0]
    assert solver.solve(r1).shape == r1.shape

    smin = solver.smallest_singular(tol=1e-10, max_iter=2000)
    svals = np.linalg.svd(K, compute_uv=False)
    assert smin == pytest.approx(svals[-1], rel=1e-3)
