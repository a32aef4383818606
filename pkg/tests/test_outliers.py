import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ncspec.freespec import OUTSIDE, HermitizedModel, spectrum_grid
from ncspec.linearize import eval_resolvent, linearize
from ncspec.ncpoly import (
    DimensionMismatchError,
    MatrixAssignment,
    evaluate,
    parse_polynomial,
    zero_circulars,
)
from ncspec.outliers import (
    Annulus,
    Decomposition,
    GridTooCoarseError,
    MapComplement,
    Rectangle,
    SingularDenominatorError,
    SingularResolventError,
    contraction_radius,
    det_ratio,
    factor_perturbation,
    match_outliers,
    outlier_indicator,
    predicted_outliers,
    report_to_dict,
    write_report_json,
)
from ncspec.randmat import COMPLEX_GAUSSIAN, EnsembleSpec, sample_iid

EXAMPLE1 = ("(3/2)*Y1 + (1/6)*Y2^2*A1 + (1/6)*Y2*Y3*A1*Y3"
            " + A1^2*Y3 + A1 + (1/8)*A1^2")


def _ex1_poly():
    return parse_polynomial(EXAMPLE1, 3, 1)


def _spiked_diag(N, entries):
    d = np.zeros((N, N), dtype=complex)
    for i, v in enumerate(entries):
        d[i, i] = v
    return d


def _ex1_assignment(N, circulars=None):
    return MatrixAssignment(N, circulars or {}, {1: _spiked_diag(N, [2.0, 2.0j])})


def _zeros_assignment(N, u=3, t=1):
    zero = np.zeros((N, N), dtype=complex)
    return MatrixAssignment(N, {j: zero for j in range(1, u + 1)},
                            {k: zero for k in range(1, t + 1)})


def _sample_circulars(N, seed, u=3):
    return {j: sample_iid(EnsembleSpec(COMPLEX_GAUSSIAN, N, seed, j))
            for j in range(1, u + 1)}


@pytest.fixture(scope="module")
def ex1_proxy_map():
    # limiting model: the finite-rank letter vanishes, so A1 -> 0 at N = 1
    h = HermitizedModel.from_polynomial(_ex1_poly(), {1: np.zeros((1, 1))}, N=1)
    return spectrum_grid(h, (-0.9, 2.9, -0.3, 2.3), 0.2)


# ---------------------------------------------------------------------------
# regions
# ---------------------------------------------------------------------------


def test_rectangle_contains_and_boundary():
    box = Rectangle(-1.0, 2.0, 0.5, 1.5)
    assert box.contains(0.0 + 1.0j)
    assert box.contains(-1.0 + 0.5j)          # corners are included
    assert not box.contains(2.1 + 1.0j)
    assert not box.contains(0.0)
    pts = box.boundary_points(40)
    assert pts.shape == (40,)
    for z in pts:
        assert box.contains(z)
        on_edge = (math.isclose(z.real, -1.0) or math.isclose(z.real, 2.0)
                   or math.isclose(z.imag, 0.5) or math.isclose(z.imag, 1.5))
        assert on_edge


def test_rectangle_rejects_degenerate():
    with pytest.raises(ValueError):
        Rectangle(0.0, 0.0, -1.0, 1.0)


def test_annulus_disk_complement():
    gamma = Annulus(0.0, 1.6)
    assert gamma.contains(2.5)
    assert gamma.contains(-0.5 + 2.0j)
    assert gamma.contains(1.6)                # boundary included
    assert not gamma.contains(0.0)
    pts = gamma.boundary_points(64)
    assert pts.shape == (64,)
    assert np.allclose(np.abs(pts), 1.6)


def test_annulus_bounded_and_disk():
    ring = Annulus(1.0j, 1.0, 2.0)
    assert ring.contains(1.0j + 1.5)
    assert not ring.contains(1.0j)
    assert not ring.contains(1.0j + 2.5)
    radii = np.abs(ring.boundary_points(100) - 1.0j)
    assert np.all((np.isclose(radii, 1.0)) | (np.isclose(radii, 2.0)))
    assert np.any(np.isclose(radii, 1.0)) and np.any(np.isclose(radii, 2.0))

    disk = Annulus(0.0, 0.0, 3.0)
    assert disk.contains(0.0)
    assert np.allclose(np.abs(disk.boundary_points(16)), 3.0)

    with pytest.raises(ValueError):
        Annulus(0.0, -0.5, 1.0)
    with pytest.raises(ValueError):
        Annulus(0.0, 2.0, 1.0)
    with pytest.raises(ValueError):
        Annulus(0.0, 0.0, math.inf)


def test_map_complement_geometry():
    h = HermitizedModel.from_polynomial(parse_polynomial("Y1", 1, 0), N=1)
    smap = spectrum_grid(h, (-1.6, 1.6, -1.6, 1.6), 0.2)
    region = MapComplement(smap, standoff=0.35)
    assert region.contains(1.8)
    assert not region.contains(1.1)
    assert not region.contains(0.0)
    pts = region.boundary_points(128)
    assert pts.size > 0
    inside = np.array([v.z for v in smap.verdicts() if v.verdict != OUTSIDE])
    dist = np.min(np.abs(pts[:, None] - inside[None, :]), axis=1)
    assert np.allclose(dist, 0.35, rtol=1e-8)
    with pytest.raises(ValueError):
        MapComplement(smap, standoff=0.0)


# ---------------------------------------------------------------------------
# decomposition and rank factors
# ---------------------------------------------------------------------------


def test_decomposition_split_roundtrip():
    a = _ex1_assignment(6)
    dec = Decomposition.split(a)
    assert np.all(dec.base.deterministics[1] == 0)
    assert np.array_equal(dec.spikes.deterministics[1], a.deterministics[1])
    assert np.array_equal(dec.full().deterministics[1], a.deterministics[1])
    assert dec.spike_ranks() == {1: 2}

    rng = np.random.default_rng(3)
    base = MatrixAssignment(6, {}, {1: rng.standard_normal((6, 6))})
    dec2 = Decomposition.split(a, base)
    assert np.allclose(dec2.base.deterministics[1] + dec2.spikes.deterministics[1],
                       a.deterministics[1])


def test_decomposition_rejects_mismatch():
    a = _ex1_assignment(6)
    with pytest.raises(DimensionMismatchError):
        Decomposition.split(a, MatrixAssignment(5, {}, {1: np.zeros((5, 5))}))
    with pytest.raises(DimensionMismatchError):
        Decomposition(MatrixAssignment(6, {}, {1: np.zeros((6, 6))}),
                      MatrixAssignment(6, {}, {2: np.zeros((6, 6))}))


def test_factor_reconstruction_example1():
    N = 10
    L = linearize(_ex1_poly())
    spikes = Decomposition.split(_ex1_assignment(N)).spikes
    rf = factor_perturbation(L, spikes)
    dense = np.zeros((L.m * N, L.m * N), dtype=complex)
    for (k, starred), b in L.beta.items():
        mat = spikes.deterministics[k]
        dense += np.kron(b, mat.conj().T if starred else mat)
    err = np.linalg.norm(dense - rf.left @ rf.right)
    assert err <= 1e-12 * (1 + np.linalg.norm(dense))
    nnz = sum(int(np.count_nonzero(b)) for b in L.beta.values())
    assert rf.rank <= 2 * nnz
    assert rf.rank == 14
    assert rf.left.shape == (L.m * N, 14)
    assert rf.right.shape == (14, L.m * N)


def test_factor_zero_spikes():
    N = 5
    L = linearize(_ex1_poly())
    spikes = MatrixAssignment(N, {}, {1: np.zeros((N, N), dtype=complex)})
    rf = factor_perturbation(L, spikes)
    assert rf.rank == 0
    assert rf.left.shape == (L.m * N, 0)
    assert rf.right.shape == (0, L.m * N)
    # empty determinant: the indicator is identically one
    val = outlier_indicator(L, _zeros_assignment(N), rf, 123.0 + 4.0j)
    assert val == 1.0


def test_factor_rank_additivity_bound():
    N = 6
    rng = np.random.default_rng(11)
    p = parse_polynomial("Y1 + A1*Y1*A2 + A2 + A1", 1, 2)
    L = linearize(p)
    s1 = np.outer(rng.standard_normal(N), rng.standard_normal(N)).astype(complex)
    s2 = sum(np.outer(rng.standard_normal(N) + 1j * rng.standard_normal(N),
                      rng.standard_normal(N)) for _ in range(2))
    spikes = MatrixAssignment(N, {}, {1: s1, 2: s2})
    rf = factor_perturbation(L, spikes)
    bound = sum(np.linalg.matrix_rank(b)
                * np.linalg.matrix_rank(spikes.deterministics[k])
                for (k, _), b in L.beta.items())
    assert 0 < rf.rank <= bound
    dense = sum(np.kron(b, spikes.deterministics[k])
                for (k, _), b in L.beta.items())
    err = np.linalg.norm(dense - rf.left @ rf.right)
    assert err <= 1e-10 * (1 + np.linalg.norm(dense))


def test_factor_handles_starred_letters():
    N = 5
    rng = np.random.default_rng(4)
    p = parse_polynomial("Y1 + A1**Y1*A1", 1, 1)
    L = linearize(p)
    assert (1, True) in L.beta and (1, False) in L.beta
    spike = np.outer(rng.standard_normal(N) + 1j * rng.standard_normal(N),
                     rng.standard_normal(N)).astype(complex)
    spikes = MatrixAssignment(N, {}, {1: spike})
    rf = factor_perturbation(L, spikes)
    dense = sum(np.kron(b, spike.conj().T if starred else spike)
                for (k, starred), b in L.beta.items())
    err = np.linalg.norm(dense - rf.left @ rf.right)
    assert err <= 1e-10 * (1 + np.linalg.norm(dense))


# ---------------------------------------------------------------------------
# predicted outliers
# ---------------------------------------------------------------------------


def test_predicted_outliers_example1(ex1_proxy_map):
    pred = predicted_outliers(_ex1_poly(), _ex1_assignment(400), ex1_proxy_map)
    assert len(pred) == 2
    assert abs(pred[0] - (-0.5 + 2.0j)) < 1e-12
    assert abs(pred[1] - 2.5) < 1e-12


def test_predicted_outliers_example3():
    p = parse_polynomial("Y1 + A1 + A2 + A1*Y2*A2*Y2 + Y3*A2*Y2", 3, 2)
    h = HermitizedModel.from_polynomial(
        p, {1: np.diag([1.0, -1.0]), 2: np.zeros((2, 2))}, N=2)
    smap = spectrum_grid(h, (-1.4, 2.9, -0.4, 2.4), 0.2)
    N = 400
    sign = np.ones(N)
    sign[N // 2:] = -1.0
    a = MatrixAssignment(N, {}, {1: np.diag(sign).astype(complex),
                                 2: _spiked_diag(N, [1.5, -2.0 + 2.0j])})
    pred = predicted_outliers(p, a, smap)
    assert len(pred) == 2
    assert abs(pred[0] - (-1.0 + 2.0j)) < 1e-12
    assert abs(pred[1] - 2.5) < 1e-12


def test_predicted_outliers_example4():
    p = parse_polynomial("(1/5)*(Y1+3)*(Y2+A1)*(Y3+2) - 2", 3, 1)
    h = HermitizedModel.from_polynomial(p, {1: np.zeros((1, 1))}, N=1)
    smap = spectrum_grid(h, (-2.6, -1.4, -2.7, 2.7), 0.2)
    a = MatrixAssignment(400, {}, {1: _spiked_diag(400, [2.0j, -2.0j])})
    pred = predicted_outliers(p, a, smap)
    assert len(pred) == 2
    assert abs(pred[0] - (-2.0 - 2.4j)) < 1e-9
    assert abs(pred[1] - (-2.0 + 2.4j)) < 1e-9


def test_predicted_outliers_skips_uncovered_candidates():
    # map covers only the neighborhood of 2.5; the second spike and the
    # bulk zeros fall outside the grid and are ignored without error
    h = HermitizedModel.from_polynomial(_ex1_poly(), {1: np.zeros((1, 1))}, N=1)
    smap = spectrum_grid(h, (2.1, 2.9, -0.3, 0.3), 0.2)
    pred = predicted_outliers(_ex1_poly(), _ex1_assignment(50), smap)
    assert len(pred) == 1
    assert abs(pred[0] - 2.5) < 1e-12


def test_predicted_outliers_keeps_multiplicity():
    p = parse_polynomial("Y1 + A1", 1, 1)
    h = HermitizedModel.from_polynomial(p, {1: np.zeros((1, 1))}, N=1)
    smap = spectrum_grid(h, (2.1, 2.9, -0.3, 0.3), 0.2)
    a = MatrixAssignment(8, {}, {1: _spiked_diag(8, [2.5, 2.5])})
    assert predicted_outliers(p, a, smap) == [2.5, 2.5]


def test_predicted_outliers_mixed_cell_raises():
    p = parse_polynomial("Y1 + A1", 1, 1)
    h = HermitizedModel.from_polynomial(p, {1: np.zeros((1, 1))}, N=1)
    smap = spectrum_grid(h, (0.8, 1.4, -0.2, 0.4), 0.2)
    a = MatrixAssignment(8, {}, {1: _spiked_diag(8, [1.02])})
    with pytest.raises(GridTooCoarseError, match="mixed-verdict"):
        predicted_outliers(p, a, smap)


def test_predicted_outliers_inside_candidates_skipped():
    p = parse_polynomial("Y1 + A1", 1, 1)
    h = HermitizedModel.from_polynomial(p, {1: np.zeros((1, 1))}, N=1)
    smap = spectrum_grid(h, (-0.5, 0.7, -0.5, 0.5), 0.2)
    a = MatrixAssignment(8, {}, {1: _spiked_diag(8, [0.3])})
    assert predicted_outliers(p, a, smap) == []


# ---------------------------------------------------------------------------
# determinant ratio
# ---------------------------------------------------------------------------


def test_det_ratio_example1_frozen_value():
    N = 10
    a = _ex1_assignment(N)
    base = MatrixAssignment(N, {}, {1: np.zeros((N, N), dtype=complex)})
    boundary = 1.8 * np.exp(2j * np.pi * np.arange(256) / 256)
    ratio = det_ratio(_ex1_poly(), a, base, boundary)
    assert ratio >= 0.1
    assert ratio == pytest.approx(0.275853933553, rel=1e-9)
    # direct-determinant oracle over the same boundary
    p0 = evaluate(zero_circulars(_ex1_poly()), a)
    direct = min(abs(np.linalg.det(z * np.eye(N) - p0))
                 / abs(np.linalg.det(z * np.eye(N))) for z in boundary)
    assert ratio == pytest.approx(direct, rel=1e-9)


def test_det_ratio_identity_when_no_spikes():
    N = 7
    a = _ex1_assignment(N)
    boundary = [3.0, 3.0j, -4.0]
    assert det_ratio(_ex1_poly(), a, a, boundary) == pytest.approx(1.0, abs=1e-14)


def test_det_ratio_vanishes_on_eigenvalue_crossing():
    N = 8
    a = _ex1_assignment(N)
    base = MatrixAssignment(N, {}, {1: np.zeros((N, N), dtype=complex)})
    ratio = det_ratio(_ex1_poly(), a, base, [2.5, 1.8])
    assert ratio == 0.0


def test_det_ratio_singular_denominator():
    N = 6
    a = _ex1_assignment(N)
    base = MatrixAssignment(N, {}, {1: _spiked_diag(N, [1.0])})
    # 1.125 is an eigenvalue of A + A^2/8 at the base assignment
    with pytest.raises(SingularDenominatorError):
        det_ratio(_ex1_poly(), a, base, [1.125])


def test_det_ratio_validation():
    a = _ex1_assignment(5)
    with pytest.raises(ValueError):
        det_ratio(_ex1_poly(), a, a, [])
    with pytest.raises(DimensionMismatchError):
        det_ratio(_ex1_poly(), a,
                  MatrixAssignment(4, {}, {1: np.zeros((4, 4))}), [3.0])


def test_det_ratio_unitary_conjugation_invariance():
    N = 6
    rng = np.random.default_rng(17)
    p = parse_polynomial("Y1 + A1 + (1/3)*A1^2", 1, 1)
    full = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
    base = full + 0.1 * np.outer(rng.standard_normal(N), rng.standard_normal(N))
    u, _ = np.linalg.qr(rng.standard_normal((N, N))
                        + 1j * rng.standard_normal((N, N)))
    boundary = 9.0 * np.exp(2j * np.pi * np.arange(32) / 32)
    plain = det_ratio(p, MatrixAssignment(N, {}, {1: full}),
                      MatrixAssignment(N, {}, {1: base}), boundary)
    rotated = det_ratio(p, MatrixAssignment(N, {}, {1: u @ full @ u.conj().T}),
                        MatrixAssignment(N, {}, {1: u @ base @ u.conj().T}),
                        boundary)
    assert rotated == pytest.approx(plain, rel=1e-9)


# ---------------------------------------------------------------------------
# detection function
# ---------------------------------------------------------------------------


def test_outlier_indicator_quotient_identity():
    N = 8
    L = linearize(_ex1_poly())
    zero = np.zeros((N, N), dtype=complex)
    a = MatrixAssignment(N, {j: zero for j in (1, 2, 3)},
                         {1: _spiked_diag(N, [2.0, 2.0j])})
    base = _zeros_assignment(N)
    rf = factor_perturbation(L, Decomposition.split(a).spikes)
    worst = 0.0
    for z in 1.8 * np.exp(2j * np.pi * np.arange(64) / 64):
        lhs = outlier_indicator(L, base, rf, z)
        sf, lf = np.linalg.slogdet(eval_resolvent(L, a, 0.0, z))
        sb, lb = np.linalg.slogdet(eval_resolvent(L, base, 0.0, z))
        rhs = (sf / sb) * np.exp(lf - lb)
        worst = max(worst, abs(lhs - rhs) / abs(rhs))
    assert worst < 1e-8


def test_outlier_indicator_quotient_identity_random_model():
    N = 8
    rng = np.random.default_rng(23)
    p = parse_polynomial("Y1 + A1*Y1*A1 + A1 + (1/2)*A1^2", 1, 1)
    L = linearize(p)
    zero = np.zeros((N, N), dtype=complex)
    base_mat = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
    spike = np.outer(rng.standard_normal(N), rng.standard_normal(N))
    a = MatrixAssignment(N, {1: zero}, {1: base_mat + spike})
    base = MatrixAssignment(N, {1: zero}, {1: base_mat})
    rf = factor_perturbation(L, Decomposition.split(a, base).spikes)
    for z in (20.0, 15.0 + 11.0j, -18.0j):
        lhs = outlier_indicator(L, base, rf, z)
        sf, lf = np.linalg.slogdet(eval_resolvent(L, a, 0.0, z))
        sb, lb = np.linalg.slogdet(eval_resolvent(L, base, 0.0, z))
        rhs = (sf / sb) * np.exp(lf - lb)
        assert abs(lhs - rhs) / abs(rhs) < 1e-8


def test_outlier_indicator_singular_resolvent():
    N = 6
    L = linearize(_ex1_poly())
    a = _ex1_assignment(N)
    rf = factor_perturbation(L, Decomposition.split(a).spikes)
    with pytest.raises(SingularResolventError):
        outlier_indicator(L, _zeros_assignment(N), rf, 0.0)


def test_zero_location_by_argument_principle():
    # winding of the detection function along |z| = 1.7 counts the sampled
    # model's eigenvalues beyond the circle (the base model has none there)
    N = 50
    scale = 1.0 / math.sqrt(N)
    p = _ex1_poly()
    L = linearize(p)
    pts = 1.7 * np.exp(2j * np.pi * np.arange(1024) / 1024)
    for seed, expected in ((0, 2), (1, 3)):
        circ = _sample_circulars(N, seed)
        a = MatrixAssignment(N, circ, {1: _spiked_diag(N, [2.0, 2.0j])})
        base = MatrixAssignment(N, circ, {1: np.zeros((N, N), dtype=complex)})
        n_model = int(np.sum(np.abs(np.linalg.eigvals(evaluate(p, a, scale)))
                             >= 1.7))
        n_base = int(np.sum(np.abs(np.linalg.eigvals(evaluate(p, base, scale)))
                            >= 1.7))
        assert n_base == 0
        rf = factor_perturbation(L, Decomposition.split(a).spikes)
        phases = np.angle([outlier_indicator(L, base, rf, z, scale)
                           for z in pts])
        steps = np.diff(np.concatenate([phases, phases[:1]]))
        steps = (steps + np.pi) % (2 * np.pi) - np.pi
        count = -steps.sum() / (2 * np.pi)
        assert count == pytest.approx(n_model, abs=1e-6)
        assert n_model == expected


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 20), st.integers(1, 20), st.integers(0, 10 ** 6))
def test_sylvester_identity(d1, d2, seed):
    rng = np.random.default_rng(seed)
    p = (rng.standard_normal((d1, d2)) + 1j * rng.standard_normal((d1, d2)))
    q = (rng.standard_normal((d2, d1)) + 1j * rng.standard_normal((d2, d1)))
    p /= math.sqrt(d1 * d2)
    lhs = np.linalg.det(np.eye(d1) + p @ q)
    rhs = np.linalg.det(np.eye(d2) + q @ p)
    assert abs(lhs - rhs) <= 1e-10 * (1 + abs(rhs))


# ---------------------------------------------------------------------------
# matching and reports
# ---------------------------------------------------------------------------


def test_match_identical_lists():
    gamma = Annulus(0.0, 1.6)
    values = [2.5, -0.5 + 2.0j]
    report = match_outliers(values, values, gamma, 0.2)
    assert report.counts == (2, 2)
    assert len(report.pairs) == 2
    assert max(pair.distance for pair in report.pairs) == 0.0
    assert report.unmatched_predicted == ()
    assert report.unmatched_empirical == ()
    assert report.det_ratio_min is None


def test_match_count_mismatch_is_reported():
    gamma = Annulus(0.0, 1.6)
    predicted = [2.5, -0.5 + 2.0j]
    empirical = [2.52, -0.49 + 1.97j, 3.0]
    report = match_outliers(empirical, predicted, gamma, 0.2)
    assert report.counts == (2, 3)
    assert len(report.pairs) == 2
    assert report.unmatched_predicted == ()
    assert report.unmatched_empirical == (3.0 + 0.0j,)


def test_match_respects_radius():
    gamma = Annulus(0.0, 1.6)
    report = match_outliers([2.9], [2.5], gamma, 0.2)
    assert report.counts == (1, 1)
    assert report.pairs == ()
    assert report.unmatched_predicted == (2.5 + 0.0j,)


def test_match_restricts_to_region():
    gamma = Annulus(0.0, 1.6)
    report = match_outliers([2.5, 0.2], [2.5, 0.3, -0.2j], gamma, 0.1)
    assert report.counts == (1, 1)
    assert len(report.pairs) == 1


def test_match_permutation_invariance():
    rng = np.random.default_rng(5)
    gamma = Rectangle(-10.0, 10.0, -10.0, 10.0)
    predicted = [2.5, -0.5 + 2.0j, 1.0 - 1.0j, -3.0]
    empirical = [2.52, -0.52 + 2.01j, 1.02 - 1.0j, -2.95, 7.0]
    baseline = match_outliers(empirical, predicted, gamma, 0.45)
    for _ in range(5):
        shuffled = match_outliers(
            [empirical[i] for i in rng.permutation(len(empirical))],
            [predicted[i] for i in rng.permutation(len(predicted))],
            gamma, 0.45)
        assert set(shuffled.pairs) == set(baseline.pairs)
        assert shuffled.counts == baseline.counts


def test_report_json_schema(tmp_path):
    gamma = Annulus(0.0, 1.6)
    report = match_outliers([2.52, -0.49 + 1.97j], [2.5, -0.5 + 2.0j],
                            gamma, 0.2, det_ratio_min=0.27)
    path = tmp_path / "report.json"
    write_report_json(report, path)
    data = json.loads(path.read_text())
    assert set(data) == {"predicted", "empirical", "pairs", "counts",
                         "det_ratio_min"}
    assert data["counts"] == [2, 2]
    assert data["det_ratio_min"] == 0.27
    assert len(data["pairs"]) == 2
    assert set(data["pairs"][0]) == {"p", "e", "dist"}
    assert data["predicted"][0] == [2.5, 0.0]

    bare = report_to_dict(match_outliers([], [], gamma, 0.2))
    assert "det_ratio_min" not in bare
    assert bare["counts"] == [0, 0]


# ---------------------------------------------------------------------------
# contraction radius
# ---------------------------------------------------------------------------


def test_contraction_radius_matches_dense_oracle():
    N = 40
    L = linearize(_ex1_poly())
    circ = _sample_circulars(N, 7)
    a = MatrixAssignment(N, circ, {1: np.zeros((N, N), dtype=complex)})
    scale = 1.0 / math.sqrt(N)
    dense = contraction_radius(L, a, 1.8, scale, dense_dim=10 ** 6)
    arnoldi = contraction_radius(L, a, 1.8, scale, dense_dim=0)
    pencil = np.linalg.inv(eval_resolvent(L, a, 0.0, 1.8))
    rand = sum(np.kron(zm, scale * circ[j]) for j, zm in L.zeta.items())
    oracle = float(np.max(np.abs(np.linalg.eigvals(pencil @ rand))))
    assert dense == pytest.approx(oracle, rel=1e-9)
    assert arnoldi == pytest.approx(oracle, rel=1e-6)
    assert dense == pytest.approx(0.9016292665, rel=1e-6)


def test_contraction_example1_below_threshold():
    N = 300
    L = linearize(_ex1_poly())
    a = MatrixAssignment(N, _sample_circulars(N, 0),
                         {1: np.zeros((N, N), dtype=complex)})
    scale = 1.0 / math.sqrt(N)
    for z in (1.8, 1.8 * np.exp(0.55j * np.pi)):
        assert contraction_radius(L, a, z, scale) <= 0.98


def test_contraction_zero_random_part():
    N = 6
    L = linearize(_ex1_poly())
    assert contraction_radius(L, _zeros_assignment(N), 2.0) == 0.0
    p = parse_polynomial("A1 + A1^2", 0, 1)
    a = MatrixAssignment(N, {}, {1: _spiked_diag(N, [0.5])})
    assert contraction_radius(linearize(p), a, 3.0) == 0.0


# ---------------------------------------------------------------------------
# end-to-end: example 1 at moderate size
# ---------------------------------------------------------------------------


def test_example1_matching_pipeline(ex1_proxy_map):
    N = 1000
    p = _ex1_poly()
    a = MatrixAssignment(N, _sample_circulars(N, 3),
                         {1: _spiked_diag(N, [2.0, 2.0j])})
    empirical = np.linalg.eigvals(evaluate(p, a, 1.0 / math.sqrt(N)))
    predicted = predicted_outliers(p, a, ex1_proxy_map)
    gamma = Annulus(0.0, 1.6)
    base = MatrixAssignment(N, {}, {1: np.zeros((N, N), dtype=complex)})
    ratio = det_ratio(p, a, base, gamma.boundary_points(16))
    report = match_outliers(empirical, predicted, gamma, 0.2,
                            det_ratio_min=ratio)
    assert report.counts == (2, 2)
    assert len(report.pairs) == 2
    assert report.det_ratio_min > 0.1
    for pair in report.pairs:
        assert pair.distance <= 0.2
