"""Finite-rank outlier analysis: prediction, detection, and matching.

Each deterministic letter splits into a well-conditioned *base* part plus a
finite-rank *spike* part.  The spikes are what create isolated eigenvalues
away from the limiting spectrum, and three computable objects track them:

* candidate locations are the eigenvalues of the circular-free polynomial
  P(0, A), filtered through a :class:`~ncspec.freespec.SpectrumMap` so that
  only candidates sitting strictly outside the limiting spectrum survive;
* the stability of a search region's boundary is the minimum ratio
  |det(zI - P(0, A))| / |det(zI - P(0, A_base))| along the boundary — a
  ratio near zero means the boundary grazes a candidate and counting inside
  the region is ill-posed;
* empirical outliers of the sampled model are the zeros of the scalar
  function z -> det(I_p - right * R(z) * left), where left/right factor the
  spike part of the pencil and R(z) is the resolvent of the remaining model.

The module also provides the region geometry used to delimit searches
(rectangle, annulus/disk-complement, and the complement of a spectrum map at
a standoff distance), greedy matching of predicted against empirical outlier
lists, and the spectral radius of R_base(z) * (random part), whose
contraction below 1 is what makes the detection function trustworthy.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
import scipy.sparse.linalg

from .freespec import OUTSIDE, SpectrumMap
from .linearize import Linearization, ResolventSolver, SingularResolventError
from .ncpoly import (
    DETERMINISTIC,
    CIRCULAR,
    DimensionMismatchError,
    MatrixAssignment,
    NcPolynomial,
    Symbol,
    evaluate,
    zero_circulars,
)

__all__ = [
    "Rectangle",
    "Annulus",
    "MapComplement",
    "Region",
    "Decomposition",
    "RankFactor",
    "MatchedPair",
    "OutlierReport",
    "GridTooCoarseError",
    "SingularDenominatorError",
    "SingularResolventError",
    "predicted_outliers",
    "det_ratio",
    "factor_perturbation",
    "outlier_indicator",
    "match_outliers",
    "contraction_radius",
    "report_to_dict",
    "write_report_json",
]


class GridTooCoarseError(ValueError):
    """A candidate eigenvalue fell in a mixed-verdict grid cell."""


class SingularDenominatorError(ArithmeticError):
    """A boundary point is (numerically) an eigenvalue of the base model."""


# ---------------------------------------------------------------------------
# Regions
# ---------------------------------------------------------------------------


def _circle(center: complex, radius: float, count: int) -> np.ndarray:
    angles = 2.0 * math.pi * np.arange(count) / count
    return center + radius * np.exp(1j * angles)


@dataclass(frozen=True)
class Rectangle:
    """Closed axis-aligned rectangle [re_min, re_max] x [im_min, im_max]."""

    re_min: float
    re_max: float
    im_min: float
    im_max: float

    def __post_init__(self):
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise ValueError("rectangle must have positive width and height")

    def contains(self, z: complex) -> bool:
        z = complex(z)
        return (self.re_min <= z.real <= self.re_max
                and self.im_min <= z.imag <= self.im_max)

    def boundary_points(self, count: int = 256) -> np.ndarray:
        width = self.re_max - self.re_min
        height = self.im_max - self.im_min
        perimeter = 2.0 * (width + height)
        # walk the perimeter counterclockwise from the lower-left corner
        t = perimeter * np.arange(count) / count
        pts = np.empty(count, dtype=complex)
        for i, s in enumerate(t):
            if s < width:
                pts[i] = complex(self.re_min + s, self.im_min)
            elif s < width + height:
                pts[i] = complex(self.re_max, self.im_min + (s - width))
            elif s < 2 * width + height:
                pts[i] = complex(self.re_max - (s - width - height), self.im_max)
            else:
                pts[i] = complex(self.re_min, self.im_max - (s - 2 * width - height))
        return pts


@dataclass(frozen=True)
class Annulus:
    """Closed annulus inner <= |z - center| <= outer.

    ``outer=inf`` (the default) makes it a disk complement, the shape of
    every search region in the worked examples; ``inner=0`` makes it a disk.
    """

    center: complex = 0.0
    inner: float = 0.0
    outer: float = math.inf

    def __post_init__(self):
        if self.inner < 0 or self.outer <= self.inner:
            raise ValueError("need 0 <= inner < outer")
        if math.isinf(self.outer) and self.inner == 0:
            raise ValueError("annulus with inner=0, outer=inf is the whole "
                             "plane and has no boundary")

    def contains(self, z: complex) -> bool:
        r = abs(complex(z) - self.center)
        return self.inner <= r <= self.outer

    def boundary_points(self, count: int = 256) -> np.ndarray:
        if math.isinf(self.outer):
            return _circle(self.center, self.inner, count)
        if self.inner == 0:
            return _circle(self.center, self.outer, count)
        n_out = int(round(count * self.outer / (self.inner + self.outer)))
        n_out = min(max(n_out, 1), count - 1)
        return np.concatenate([
            _circle(self.center, self.inner, count - n_out),
            _circle(self.center, self.outer, n_out),
        ])


@dataclass(frozen=True)
class MapComplement:
    """Points at distance >= standoff from every non-Outside node of a map.

    The boundary is the level set {d(z, S) = standoff} of the discretized
    inside-set S, sampled on circles around the nodes and thinned to the
    requested count (the discretization of such a boundary is a
    desk-level choice; circle sampling keeps it simple and conservative).
    """

    smap: SpectrumMap
    standoff: float

    def __post_init__(self):
        if self.standoff <= 0:
            raise ValueError("standoff must be positive")

    def _inside_nodes(self) -> np.ndarray:
        nodes = [v.z for v in self.smap.verdicts() if v.verdict != OUTSIDE]
        return np.asarray(nodes, dtype=complex)

    def contains(self, z: complex) -> bool:
        inside = self._inside_nodes()
        if inside.size == 0:
            return True
        return float(np.min(np.abs(complex(z) - inside))) >= self.standoff

    def boundary_points(self, count: int = 256) -> np.ndarray:
        inside = self._inside_nodes()
        if inside.size == 0:
            raise ValueError("map has no inside nodes; the region has no "
                             "boundary")
        per_node = max(16, int(math.ceil(4 * count / inside.size)))
        angles = 2.0 * math.pi * np.arange(per_node) / per_node
        cand = (inside[:, None] + self.standoff * np.exp(1j * angles)).ravel()
        dist = np.min(np.abs(cand[:, None] - inside[None, :]), axis=1)
        kept = cand[dist >= self.standoff * (1.0 - 1e-9)]
        if kept.size == 0:  # pragma: no cover - standoff below grid spacing
            raise ValueError("no boundary points survive; increase standoff "
                             "beyond the grid resolution")
        anchor = complex(np.mean(inside))
        kept = kept[np.argsort(np.angle(kept - anchor), kind="stable")]
        if kept.size <= count:
            return kept
        pick = np.linspace(0, kept.size - 1, count).round().astype(int)
        return kept[pick]


Region = Union[Rectangle, Annulus, MapComplement]


# ---------------------------------------------------------------------------
# Decomposition of the deterministic letters
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Decomposition:
    """Entrywise split A_k = base_k + spike_k of every deterministic letter.

    ``base`` is the well-conditioned part that stays inside the resolvent;
    ``spikes`` holds the finite-rank remainder that gets factored out.
    """

    base: MatrixAssignment
    spikes: MatrixAssignment

    def __post_init__(self):
        if self.base.N != self.spikes.N:
            raise DimensionMismatchError(
                f"base has N={self.base.N}, spikes has N={self.spikes.N}")
        if set(self.base.deterministics) != set(self.spikes.deterministics):
            raise DimensionMismatchError(
                "base and spikes must bind the same deterministic indices")

    @classmethod
    def split(cls, a: MatrixAssignment,
              base: Optional[MatrixAssignment] = None) -> "Decomposition":
        """Split ``a`` against a given base (default: base = 0, everything
        is spike — the right choice when A itself has finite rank)."""
        if base is None:
            zero = np.zeros((a.N, a.N), dtype=complex)
            base = MatrixAssignment(
                a.N, {}, {k: zero for k in a.deterministics})
        if base.N != a.N:
            raise DimensionMismatchError(
                f"assignment has N={a.N}, base has N={base.N}")
        spikes = {}
        for k, mat in a.deterministics.items():
            spikes[k] = mat - base.binding(Symbol(DETERMINISTIC, k))
        return cls(base=base,
                   spikes=MatrixAssignment(a.N, {}, spikes))

    def full(self) -> MatrixAssignment:
        """Recombine into the original assignment."""
        total = {k: self.base.deterministics[k] + self.spikes.deterministics[k]
                 for k in self.base.deterministics}
        return MatrixAssignment(self.base.N, {}, total)

    def spike_ranks(self, cutoff: float = 1e-10) -> dict:
        """Numerical rank of each spike (singular values above cutoff*s1)."""
        ranks = {}
        for k, mat in sorted(self.spikes.deterministics.items()):
            s = np.linalg.svd(mat, compute_uv=False)
            ranks[k] = (int(np.sum(s > cutoff * s[0]))
                        if s.size and s[0] > 0 else 0)
        return ranks


@dataclass(frozen=True)
class RankFactor:
    """Thin factorization sum_k beta_k (x) spike_k = left @ right."""

    left: np.ndarray        # (mN, rank)
    right: np.ndarray       # (rank, mN)
    rank: int


def factor_perturbation(L: Linearization, spikes: MatrixAssignment,
                        cutoff: float = 1e-10) -> RankFactor:
    """Factor the spike part of the pencil through its truncated SVD.

    Keeps the singular values above ``cutoff`` times the largest one.  The
    full mN x mN sum is never materialized: each term beta (x) (U s V*)
    contributes the thin factors beta[:, j] (x) (U s) and e_j^T (x) V* per
    nonzero beta column, and one small QR+SVD extracts the exact truncated
    SVD of the assembled sum from those.
    """
    N = spikes.N
    mn = L.m * N
    f_blocks: list = []
    g_blocks: list = []
    for (k, starred), bmat in sorted(L.beta.items()):
        amat = spikes.binding(Symbol(DETERMINISTIC, k, starred))
        if starred:
            amat = amat.conj().T
        u_k, s_k, vh_k = np.linalg.svd(amat)
        rank_k = (int(np.sum(s_k > cutoff * s_k[0]))
                  if s_k.size and s_k[0] > 0 else 0)
        if rank_k == 0:
            continue
        scaled = u_k[:, :rank_k] * s_k[:rank_k]
        vh_k = vh_k[:rank_k, :]
        for j in np.flatnonzero(np.any(bmat != 0, axis=0)):
            f_blocks.append(np.kron(bmat[:, j:j + 1], scaled))
            g = np.zeros((rank_k, mn), dtype=complex)
            g[:, j * N:(j + 1) * N] = vh_k
            g_blocks.append(g)
    if not f_blocks:
        return RankFactor(np.zeros((mn, 0), dtype=complex),
                          np.zeros((0, mn), dtype=complex), 0)
    q_l, r_l = np.linalg.qr(np.hstack(f_blocks))
    q_r, r_r = np.linalg.qr(np.vstack(g_blocks).conj().T)
    u_c, s, vh_c = np.linalg.svd(r_l @ r_r.conj().T)
    p = int(np.sum(s > cutoff * s[0])) if s.size and s[0] > 0 else 0
    if p == 0:
        return RankFactor(np.zeros((mn, 0), dtype=complex),
                          np.zeros((0, mn), dtype=complex), 0)
    left = (q_l @ u_c[:, :p]) * s[:p]
    right = (q_r @ vh_c[:p, :].conj().T).conj().T
    return RankFactor(left, right, p)


# ---------------------------------------------------------------------------
# Prediction and stability
# ---------------------------------------------------------------------------


def predicted_outliers(p: NcPolynomial, a: MatrixAssignment,
                       smap: SpectrumMap) -> list:
    """Eigenvalues of P(0, A) whose four surrounding map nodes are Outside.

    Candidates the map does not cover are skipped silently (the map is
    expected to cover the range of interest, typically a neighborhood of the
    search region); a candidate in a covered cell with both Outside and
    inside corners raises :class:`GridTooCoarseError` rather than guessing.
    Multiple eigenvalues are kept with multiplicity, sorted by (re, im).
    """
    base = evaluate(zero_circulars(p), a)
    values = sorted((complex(v) for v in np.linalg.eigvals(base)),
                    key=lambda w: (w.real, w.imag))
    chosen = []
    for lam in values:
        corners = smap.cell_corners(lam)
        if corners is None:
            continue
        outside = [c.verdict == OUTSIDE for c in corners]
        if all(outside):
            chosen.append(lam)
        elif any(outside):
            raise GridTooCoarseError(
                f"candidate {lam:.6g} falls in a mixed-verdict cell; "
                f"refine the grid below {smap.resolution:g}")
    return chosen


def det_ratio(p: NcPolynomial, a: MatrixAssignment, base: MatrixAssignment,
              boundary: Sequence[complex], *,
              singular_tol: float = 1e-8) -> float:
    """min over the boundary of |det(zI - P(0,A))| / |det(zI - P(0,A_base))|.

    Both characteristic polynomials are evaluated from one eigendecomposition
    each, as sums of log-distances, so the ratio survives the exponent range
    of N = 1000 without overflow and each extra boundary point costs O(N).
    A boundary within ``singular_tol`` (relative) of an eigenvalue of the
    base model raises :class:`SingularDenominatorError` — the region boundary
    is invalid.
    """
    boundary = [complex(z) for z in boundary]
    if not boundary:
        raise ValueError("boundary must contain at least one point")
    if a.N != base.N:
        raise DimensionMismatchError(
            f"assignment has N={a.N}, base has N={base.N}")
    p0 = zero_circulars(p)
    full_eigs = np.linalg.eigvals(evaluate(p0, a))
    base_eigs = np.linalg.eigvals(evaluate(p0, base))
    scale = 1.0 + float(np.max(np.abs(base_eigs)))
    for z in boundary:
        if float(np.min(np.abs(base_eigs - z))) <= singular_tol * scale:
            raise SingularDenominatorError(
                f"boundary point {z:.6g} is within tolerance of an "
                f"eigenvalue of the base model; move the boundary")
    best = math.inf
    for z in boundary:
        num_dist = np.abs(full_eigs - z)
        den_dist = np.abs(base_eigs - z)
        if np.any(num_dist == 0.0):
            return 0.0
        best = min(best, math.exp(float(np.sum(np.log(num_dist))
                                        - np.sum(np.log(den_dist)))))
    return best


# ---------------------------------------------------------------------------
# Detection function and matching
# ---------------------------------------------------------------------------


def outlier_indicator(L: Linearization, a: MatrixAssignment, rf: RankFactor,
                      z: complex, scale_circulars: float = 1.0) -> complex:
    """det(I_p - right * R(z) * left) with R(z) the resolvent of the pencil
    bound to ``a`` (circular letters scaled by ``scale_circulars``; bind
    zeros — or scale by 0 — for the deterministic-only variant).

    The zeros of this function in z are exactly the eigenvalues of the
    spiked model that the model bound to ``a`` does not share.  R(z) is
    applied to the ``rank`` columns of ``left`` by linear solves; no full
    inverse is formed.  Raises :class:`SingularResolventError` when z is an
    eigenvalue of the model bound to ``a``.
    """
    if rf.rank == 0:
        return complex(1.0)
    solver = ResolventSolver(L, a, scale_circulars, z)
    core = rf.right @ solver.solve(rf.left)
    return complex(np.linalg.det(np.eye(rf.rank, dtype=complex) - core))


@dataclass(frozen=True)
class MatchedPair:
    predicted: complex
    empirical: complex
    distance: float


@dataclass(frozen=True)
class OutlierReport:
    """Predicted-vs-empirical bookkeeping inside a search region."""

    region: Region
    predicted: tuple
    empirical: tuple
    pairs: tuple
    counts: tuple            # (len(predicted), len(empirical))
    det_ratio_min: Optional[float] = None

    @property
    def unmatched_predicted(self) -> tuple:
        rest = list(self.predicted)
        for pair in self.pairs:
            rest.remove(pair.predicted)
        return tuple(rest)

    @property
    def unmatched_empirical(self) -> tuple:
        rest = list(self.empirical)
        for pair in self.pairs:
            rest.remove(pair.empirical)
        return tuple(rest)


def match_outliers(empirical: Sequence[complex], predicted: Sequence[complex],
                   region: Region, match_radius: float,
                   det_ratio_min: Optional[float] = None) -> OutlierReport:
    """Restrict both lists to the region and match greedily by distance.

    Pairs are taken in increasing distance order (ties broken by value, so
    the result does not depend on input order) and only while the distance
    stays within ``match_radius``.  Count mismatches and unmatched entries
    are reported in the result, never raised.
    """
    pred = [complex(v) for v in predicted if region.contains(v)]
    emp = [complex(v) for v in empirical if region.contains(v)]
    candidates = sorted(
        (abs(q - e), q.real, q.imag, e.real, e.imag, qi, ei)
        for qi, q in enumerate(pred) for ei, e in enumerate(emp)
    )
    pairs = []
    used_pred: set = set()
    used_emp: set = set()
    for dist, _, _, _, _, qi, ei in candidates:
        if dist > match_radius:
            break
        if qi in used_pred or ei in used_emp:
            continue
        used_pred.add(qi)
        used_emp.add(ei)
        pairs.append(MatchedPair(pred[qi], emp[ei], float(dist)))
    return OutlierReport(region=region, predicted=tuple(pred),
                         empirical=tuple(emp), pairs=tuple(pairs),
                         counts=(len(pred), len(emp)),
                         det_ratio_min=det_ratio_min)


def report_to_dict(report: OutlierReport) -> dict:
    """JSON-ready dict; complex values become [re, im] pairs."""
    as_pair = lambda z: [z.real, z.imag]
    data = {
        "predicted": [as_pair(z) for z in report.predicted],
        "empirical": [as_pair(z) for z in report.empirical],
        "pairs": [{"p": as_pair(pr.predicted), "e": as_pair(pr.empirical),
                   "dist": pr.distance} for pr in report.pairs],
        "counts": list(report.counts),
    }
    if report.det_ratio_min is not None:
        data["det_ratio_min"] = float(report.det_ratio_min)
    return data


def write_report_json(report: OutlierReport, path) -> None:
    Path(path).write_text(json.dumps(report_to_dict(report), indent=2) + "\n")


# ---------------------------------------------------------------------------
# Contraction of the detection series
# ---------------------------------------------------------------------------


def contraction_radius(L: Linearization, a: MatrixAssignment, z: complex,
                       scale_circulars: float = 1.0, *, tol: float = 1e-8,
                       dense_dim: int = 600) -> float:
    """Spectral radius of R_det(z) * (sum_j zeta_j (x) scale*X_j).

    R_det is the resolvent of the pencil with the circular letters dropped
    (only the deterministic part of ``a`` enters it); the multiplier is the
    random part.  A radius bounded away from 1 over a region boundary is
    what lets the detection function be expanded around the deterministic
    model.  Dimensions up to ``dense_dim`` use dense eigenvalues; larger
    ones use an Arnoldi largest-magnitude eigenvalue of the implicitly
    applied product.
    """
    N = a.N
    n = L.m * N
    if not L.zeta:
        return 0.0
    bound = [(zmat, scale_circulars * a.binding(Symbol(CIRCULAR, j)))
             for j, zmat in sorted(L.zeta.items())]
    if all(np.all(x == 0) for _, x in bound):
        return 0.0
    solver = ResolventSolver(L, a, 0.0, z)

    def multiply(vec: np.ndarray) -> np.ndarray:
        v = vec.reshape(L.m, N)
        acc = np.zeros((L.m, N), dtype=complex)
        for zmat, x in bound:
            acc += zmat @ (v @ x.T)
        return solver.solve(acc.ravel())

    if n <= dense_dim:
        random_part = np.zeros((n, n), dtype=complex)
        for zmat, x in bound:
            random_part += np.kron(zmat, x)
        vals = np.linalg.eigvals(solver.solve(random_part))
    else:
        op = scipy.sparse.linalg.LinearOperator((n, n), matvec=multiply,
                                                dtype=complex)
        try:
            vals = scipy.sparse.linalg.eigs(
                op, k=1, which="LM", tol=tol, ncv=min(n, 40),
                return_eigenvectors=False)
        except scipy.sparse.linalg.ArpackNoConvergence as err:
            if err.eigenvalues is None or len(err.eigenvalues) == 0:
                raise
            vals = err.eigenvalues
    return float(np.max(np.abs(vals)))
