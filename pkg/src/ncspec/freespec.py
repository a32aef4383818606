"""Membership test for the limiting spectrum of P(X/sqrt(N), A).

A point z lies outside the limiting spectrum exactly when two conditions
hold for the linearized model:

  1. the deterministic pencil ``y_z = (gamma - z*e11) (x) I + sum_k beta_k (x) A_k``
     is invertible (smallest singular value above tolerance), and
  2. the completely positive map

        b  |->  sum_j Z_j * Phi( W (b (x) I_N) W ) * Z_j,
        W = (hermitization(y_z) - x*I)^{-1},  Phi = id (x) normalized trace,

     evaluated at base point x = 0, has spectral radius < 1.

The same machinery locates the edge of the support of the hermitized model:
for real shifts x the base point must first be moved to the subordination
image omega(x) of the sign-symmetrized model (omega(0) = 0, which is why the
membership test gets away with the plain inverse).  The smallest x where the
map's radius at omega(x) reaches 1 estimates the limiting smallest singular
value of ``z*e11 (x) I - L(X/sqrt(N), A)``.

The deterministic tuple A is a finite-dimensional stand-in for the limiting
operators; verdicts inherit its approximation quality (re-run at a lower
dimension to gauge stability).
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .linearize import Linearization, bind_full, linearize
from .ncpoly import MatrixAssignment, NcPolynomial

__all__ = [
    "OUTSIDE",
    "INSIDE_S0",
    "INSIDE_RADIUS",
    "Tolerances",
    "HermitizedModel",
    "SpectrumVerdict",
    "SpectrumMap",
    "EdgeResult",
    "SubordinationResult",
    "SingularBaseError",
    "InsideSpectrumError",
    "NoConvergenceError",
    "variance_blocks",
    "build_yz",
    "hermitization",
    "delta1",
    "choi_matrix",
    "delta1_radius",
    "is_outside_spectrum",
    "spectrum_grid",
    "write_spectrum_csv",
    "edge_of_support",
    "subordination",
    "fixed_point_subordination",
]

OUTSIDE = "Outside"
INSIDE_S0 = "InsideS0"
INSIDE_RADIUS = "InsideRadius"


class SingularBaseError(ArithmeticError):
    """The shifted hermitized pencil is too close to singular to invert."""


class InsideSpectrumError(ValueError):
    """Operation requires a point outside the spectrum."""


class NoConvergenceError(RuntimeError):
    def __init__(self, message, last=None, step=None):
        super().__init__(message)
        self.last = last
        self.step = step


@dataclass(frozen=True)
class Tolerances:
    """Numerical knobs; every field can be overridden from config.

    smin_scale: y_z counts as singular when s_min <= smin_scale*(1 + ||y_z||).
    margin: Outside requires the map radius < 1 - margin.
    edge: absolute bisection tolerance for the support-edge shift x*.
    fixed_point: Picard step norm at which subordination iteration stops.
    max_iter: iteration cap shared by Picard and the radius power method.
    dense_radius_dim: largest map dimension (2m)^2 that uses dense eigenvalues
        for the spectral radius; beyond it a positive-cone power iteration runs.
    """

    smin_scale: float = 1e-8
    margin: float = 0.02
    edge: float = 1e-4
    fixed_point: float = 1e-12
    max_iter: int = 10000
    dense_radius_dim: int = 400

    def replace(self, **kw) -> "Tolerances":
        return dataclasses.replace(self, **kw)


DEFAULT_TOL = Tolerances()


@dataclass
class HermitizedModel:
    """Linearization plus concrete deterministic bindings at dimension N."""

    L: Linearization
    A: MatrixAssignment
    N: int

    @classmethod
    def from_polynomial(cls, p: NcPolynomial, deterministics=None,
                        N: Optional[int] = None,
                        order: Optional[Sequence[int]] = None):
        dets = {k: np.asarray(v, dtype=complex)
                for k, v in (deterministics or {}).items()}
        if N is None:
            if not dets:
                raise ValueError("pass N explicitly when there are no "
                                 "deterministic matrices")
            N = next(iter(dets.values())).shape[0]
        return cls(L=linearize(p, order=order),
                   A=MatrixAssignment(N, {}, dets), N=N)


@dataclass(frozen=True)
class SpectrumVerdict:
    z: complex
    smin_yz: float
    delta1_radius: Optional[float]
    verdict: str


@dataclass
class SpectrumMap:
    region: tuple            # (re_min, re_max, im_min, im_max)
    resolution: float
    re_nodes: np.ndarray
    im_nodes: np.ndarray
    cells: list              # cells[j][i] = verdict at (re_nodes[i], im_nodes[j])

    def verdicts(self):
        for row in self.cells:
            for v in row:
                yield v

    def cell_corners(self, z: complex):
        """The four node verdicts around z, or None if z is not covered."""
        re, im = z.real, z.imag
        nr, ni = len(self.re_nodes), len(self.im_nodes)
        if nr < 2 or ni < 2:
            return None
        h = self.resolution
        if not (self.re_nodes[0] <= re <= self.re_nodes[-1]
                and self.im_nodes[0] <= im <= self.im_nodes[-1]):
            return None
        i = int(min(max(math.floor((re - self.re_nodes[0]) / h), 0), nr - 2))
        j = int(min(max(math.floor((im - self.im_nodes[0]) / h), 0), ni - 2))
        return [self.cells[j][i], self.cells[j][i + 1],
                self.cells[j + 1][i], self.cells[j + 1][i + 1]]


@dataclass(frozen=True)
class EdgeResult:
    x: float
    crossed: bool            # False: radius never reached 1; x is s_min(y_z)


@dataclass(frozen=True)
class SubordinationResult:
    omega: np.ndarray
    residual: float
    iterations: int


# ---------------------------------------------------------------------------
# Pencil and hermitization
# ---------------------------------------------------------------------------


def _zero_circular_assignment(h: HermitizedModel) -> MatrixAssignment:
    zero = np.zeros((h.N, h.N), dtype=complex)
    circ = {j: zero for j in range(1, h.L.u + 1)}
    return MatrixAssignment(h.N, circ, h.A.deterministics)


def build_yz(h: HermitizedModel, z: complex) -> np.ndarray:
    """(gamma - z*e11) (x) I_N + sum_k beta_k (x) A_k.

    Singular exactly when z is an eigenvalue of P(0, A)."""
    y = bind_full(h.L, _zero_circular_assignment(h), 0.0)
    y[: h.N, : h.N] -= z * np.eye(h.N)
    return y


def hermitization(y: np.ndarray) -> np.ndarray:
    """[[0, y], [y*, 0]] — selfadjoint with spectrum {+-singular values}."""
    n = y.shape[0]
    out = np.zeros((2 * n, 2 * n), dtype=complex)
    out[:n, n:] = y
    out[n:, :n] = y.conj().T
    return out


def variance_blocks(L: Linearization) -> list:
    """Selfadjoint couplers Z_j = [[0, zeta_j], [zeta_j*, 0]], one per circular
    symbol; they carry the circular coefficients into the hermitized algebra."""
    out = []
    m = L.m
    for j in sorted(L.zeta):
        zj = np.zeros((2 * m, 2 * m), dtype=complex)
        zj[:m, m:] = L.zeta[j]
        zj[m:, :m] = L.zeta[j].conj().T
        out.append(zj)
    return out


# ---------------------------------------------------------------------------
# The completely positive map and its spectral radius
# ---------------------------------------------------------------------------


def _sandwich_tensor(X: np.ndarray, Y: np.ndarray, mb: int, N: int) -> np.ndarray:
    """T[p,q,r,s] = (1/N) * sum_{n,k} X[(p,n),(r,k)] * Y[(s,k),(q,n)], so that
    Phi(X (b (x) I_N) Y)[p,q] = sum_{r,s} T[p,q,r,s] b[r,s].  One gemm."""
    Xt = X.reshape(mb, N, mb, N).transpose(0, 2, 1, 3).reshape(mb * mb, N * N)
    Yt = Y.reshape(mb, N, mb, N).transpose(2, 0, 3, 1).reshape(mb * mb, N * N)
    T = (Xt @ Yt.T) / N                          # [(p,r), (q,s)]
    return T.reshape(mb, mb, mb, mb).transpose(0, 2, 1, 3)


def _two_norm(M: np.ndarray, iters: int = 60) -> float:
    """Largest singular value by power iteration on M*M (deterministic
    start vector); accurate to a relative 1e-8 stop or `iters` rounds."""
    n = M.shape[0]
    v = 1.0 + np.arange(n) / max(n, 1)
    v = v.astype(complex) / np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        w = M @ v
        v_next = M.conj().T @ w
        lam_next = float(np.linalg.norm(w)) ** 2       # Rayleigh for M*M
        nrm = np.linalg.norm(v_next)
        if nrm == 0:
            return 0.0
        v = v_next / nrm
        if abs(lam_next - lam) <= 1e-8 * max(lam_next, 1e-300):
            lam = lam_next
            break
        lam = lam_next
    return math.sqrt(lam)


def _invert_pencil(y: np.ndarray, tol: Tolerances):
    """One factorization per pencil: (inverse, s_min, s_max), with inverse
    None when y is singular at the working tolerance.  s_min is 1/||y^{-1}||,
    so no full SVD is ever taken."""
    smax = _two_norm(y)
    try:
        B = np.linalg.inv(y)
    except np.linalg.LinAlgError:
        return None, 0.0, smax
    nrm = _two_norm(B)
    smin = 1.0 / nrm if nrm > 0 else math.inf
    if not np.isfinite(nrm) or smin <= tol.smin_scale * (1.0 + smax):
        return None, smin, smax
    return B, smin, smax


class _Delta1Data:
    """Assembled action of the map at one (z, x): the sandwich tensors plus
    the Z_j couplers.  Applying the map never materializes the big matrix."""

    def __init__(self, h: HermitizedModel, z: complex, x: float,
                 tol: Tolerances, y: Optional[np.ndarray] = None,
                 inv_data=None):
        self.m, self.N = h.L.m, h.N
        self.zs = variance_blocks(h.L)
        if y is None:
            y = build_yz(h, z)
        m, N = self.m, self.N
        if x == 0:
            if inv_data is None:
                inv_data = _invert_pencil(y, tol)
            B, smin, _ = inv_data
            if B is None:
                raise SingularBaseError(
                    f"pencil at z={z} is singular (s_min ~ {smin:.3e})")
            Bh = B.conj().T
            # blocks of Phi(W (b(x)I) W) with W = [[0, B*], [B, 0]]:
            #   out11 <- b22, out12 <- b21, out21 <- b12, out22 <- b11
            self.parts = (
                _sandwich_tensor(Bh, B, m, N).reshape(m * m, m * m),
                _sandwich_tensor(Bh, Bh, m, N).reshape(m * m, m * m),
                _sandwich_tensor(B, B, m, N).reshape(m * m, m * m),
                _sandwich_tensor(B, Bh, m, N).reshape(m * m, m * m),
            )
            self.full = None
        else:
            svals = np.linalg.svd(y, compute_uv=False)
            base_gap = float(np.min(np.abs(svals - x)))
            if base_gap <= tol.smin_scale * (1.0 + float(svals[0])):
                raise SingularBaseError(
                    f"hermitized pencil at z={z}, x={x} has singular-value "
                    f"gap {base_gap:.3e}")
            Y = hermitization(y)
            W = np.linalg.inv(Y - x * np.eye(2 * m * N))
            T = _sandwich_tensor(W, W, 2 * m, N)
            self.full = T.reshape(4 * m * m, 4 * m * m)
            self.parts = None

    def sandwich(self, b: np.ndarray) -> np.ndarray:
        """Phi(W (b (x) I_N) W) for a 2m x 2m input."""
        m = self.m
        if self.full is not None:
            return (self.full @ b.ravel()).reshape(2 * m, 2 * m)
        g = np.empty((2 * m, 2 * m), dtype=complex)
        M1, M2, M3, M4 = self.parts
        g[:m, :m] = (M1 @ b[m:, m:].ravel()).reshape(m, m)
        g[:m, m:] = (M2 @ b[m:, :m].ravel()).reshape(m, m)
        g[m:, :m] = (M3 @ b[:m, m:].ravel()).reshape(m, m)
        g[m:, m:] = (M4 @ b[:m, :m].ravel()).reshape(m, m)
        return g

    def apply(self, b: np.ndarray) -> np.ndarray:
        g = self.sandwich(b)
        out = np.zeros_like(g)
        for zj in self.zs:
            out += zj @ g @ zj
        return out

    def sandwich_matrix(self) -> np.ndarray:
        """Row-major matrix of b |-> Phi(W (b(x)I) W) on vec(b)[p*2m+q]."""
        m = self.m
        if self.full is not None:
            return self.full
        M1, M2, M3, M4 = self.parts
        T = np.zeros((2 * m,) * 4, dtype=complex)
        T[:m, :m, m:, m:] = M1.reshape(m, m, m, m)
        T[:m, m:, m:, :m] = M2.reshape(m, m, m, m)
        T[m:, :m, :m, m:] = M3.reshape(m, m, m, m)
        T[m:, m:, :m, :m] = M4.reshape(m, m, m, m)
        return T.reshape(4 * m * m, 4 * m * m)

    def map_matrix_rowmajor(self) -> np.ndarray:
        d = 2 * self.m
        s = np.zeros((d * d, d * d), dtype=complex)
        for zj in self.zs:
            s += np.kron(zj, zj.T)
        return s @ self.sandwich_matrix()


def _row_to_col(D: np.ndarray, d: int) -> np.ndarray:
    """Re-index a row-major map matrix to column-stacking vec convention."""
    idx = np.arange(d * d).reshape(d, d).T.ravel()
    return D[np.ix_(idx, idx)]


def delta1(h: HermitizedModel, z: complex, x: float = 0.0,
           tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Dense (2m)^2 x (2m)^2 matrix of the completely positive map

        b |-> sum_j Z_j Phi(W (b (x) I_N) W) Z_j

    in the column-stacking convention vec(b)[r + s*2m] = b[r,s]."""
    data = _Delta1Data(h, z, x, tol)
    return _row_to_col(data.map_matrix_rowmajor(), 2 * data.m)


def choi_matrix(D: np.ndarray) -> np.ndarray:
    """Reshuffle a column-stacked map matrix into its Choi matrix; the map is
    completely positive exactly when the result is positive semidefinite."""
    d2 = D.shape[0]
    d = int(round(math.sqrt(d2)))
    C = D.reshape(d, d, d, d).transpose(3, 1, 2, 0).reshape(d2, d2)
    return C


def _cone_radius(apply_fn, d: int, tol: Tolerances) -> float:
    """Spectral radius by power iteration on the cone of positive matrices.

    The radius of a completely positive map is attained at a positive element,
    so iterating from the identity converges; a +0.5*identity-map shift makes
    the leading eigenvalue simple on its circle."""
    shift = 0.5
    b = np.eye(d, dtype=complex) / d
    lam_prev = None
    hits = 0
    for _ in range(tol.max_iter):
        nb = apply_fn(b) + shift * b
        nb = (nb + nb.conj().T) / 2
        lam = float(np.trace(nb).real)          # trace(b) == 1
        if lam <= 0:
            return 0.0
        b = nb / lam
        if lam_prev is not None and abs(lam - lam_prev) <= 1e-11 * max(1.0, lam):
            hits += 1
            if hits >= 2:
                return max(lam - shift, 0.0)
        else:
            hits = 0
        lam_prev = lam
    raise NoConvergenceError(
        f"radius power iteration did not settle in {tol.max_iter} steps",
        last=lam_prev,
    )


def _radius_from_data(data: _Delta1Data, tol: Tolerances) -> float:
    dim = (2 * data.m) ** 2
    if dim <= tol.dense_radius_dim:
        D = data.map_matrix_rowmajor()
        return float(np.max(np.abs(np.linalg.eigvals(D)))) if D.size else 0.0
    return _cone_radius(data.apply, 2 * data.m, tol)


def delta1_radius(h: HermitizedModel, z: complex, x: float = 0.0,
                  tol: Tolerances = DEFAULT_TOL) -> float:
    """Spectral radius of the map; < 1 marks z outside the spectrum (given
    y_z invertible).  Dense eigenvalues for small maps, cone power iteration
    for large ones."""
    return _radius_from_data(_Delta1Data(h, z, x, tol), tol)


# ---------------------------------------------------------------------------
# Verdicts, grids, edges
# ---------------------------------------------------------------------------


def is_outside_spectrum(h: HermitizedModel, z: complex,
                        tol: Tolerances = DEFAULT_TOL) -> SpectrumVerdict:
    """Classify z: InsideS0 (pencil singular), InsideRadius (map radius too
    large) or Outside.  Diagnostics ride along in the verdict."""
    y = build_yz(h, z)
    B, smin, smax = _invert_pencil(y, tol)
    if B is None:
        return SpectrumVerdict(z, smin, None, INSIDE_S0)
    data = _Delta1Data(h, z, 0.0, tol, y=y, inv_data=(B, smin, smax))
    r = _radius_from_data(data, tol)
    verdict = OUTSIDE if r < 1.0 - tol.margin else INSIDE_RADIUS
    return SpectrumVerdict(z, smin, r, verdict)


def _axis_nodes(lo: float, hi: float, step: float) -> np.ndarray:
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1 if hi > lo else 1
    return lo + step * np.arange(max(n, 1))


def spectrum_grid(h: HermitizedModel, region, resolution: float,
                  tol: Tolerances = DEFAULT_TOL) -> SpectrumMap:
    """Verdict at every node of a regular grid over the rectangle
    region = (re_min, re_max, im_min, im_max)."""
    re_min, re_max, im_min, im_max = region
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    re_nodes = _axis_nodes(re_min, re_max, resolution)
    im_nodes = _axis_nodes(im_min, im_max, resolution)
    cells = [
        [is_outside_spectrum(h, complex(re, im), tol) for re in re_nodes]
        for im in im_nodes
    ]
    return SpectrumMap(tuple(region), resolution, re_nodes, im_nodes, cells)


def write_spectrum_csv(smap: SpectrumMap, path) -> None:
    lines = ["re,im,smin_yz,delta1_radius,verdict"]
    for row in smap.cells:
        for v in row:
            r = "" if v.delta1_radius is None else repr(float(v.delta1_radius))
            lines.append(
                f"{repr(v.z.real)},{repr(v.z.imag)},{repr(float(v.smin_yz))},"
                f"{r},{v.verdict}"
            )
    Path(path).write_text("\n".join(lines) + "\n")


def _blockdiag_part(g: np.ndarray, m: int) -> np.ndarray:
    out = np.zeros_like(g)
    out[:m, :m] = g[:m, :m]
    out[m:, m:] = g[m:, m:]
    return out


def _symmetrized_fixed_point(Y, zs, m, N, x, seed, tol):
    """Picard solve of  w = x*I + eta(blockdiag(Phi((Y - w (x) I_N)^{-1}))).

    The block-diagonal projection averages the model over a global sign flip
    of Y (conjugation by diag(I, -I) negates Y and fixes the projection), the
    symmetrization under which w(0) = 0.  Returns (w, converged, iterations);
    convergence failure is reported, not raised, because the edge search uses
    it as an inside-the-support signal."""
    d = 2 * m
    eye_n = np.eye(N, dtype=complex)
    x_term = x * np.eye(d, dtype=complex)
    w = seed.copy()
    for k in range(1, tol.max_iter + 1):
        try:
            res = np.linalg.inv(Y - np.kron(w, eye_n))
        except np.linalg.LinAlgError:
            return w, False, k
        g = res.reshape(d, N, d, N).trace(axis1=1, axis2=3) / N
        g = _blockdiag_part(g, m)
        nw = x_term.copy()
        for zj in zs:
            nw += zj @ g @ zj
        nw = _blockdiag_part((nw + nw.conj().T) / 2, m)
        step = float(np.linalg.norm(nw - w))
        if not np.isfinite(step):
            return w, False, k
        w = nw
        if step < tol.fixed_point * (1.0 + abs(x)):
            return w, True, k
    return w, False, tol.max_iter


def _symmetrized_radius(Y, zs, m, N, w, tol) -> float:
    """Spectral radius of the derivative of the symmetrized model's transform
    at base point w:

        c |-> (1/2) * ( eta(Phi(W c W)) + J eta(Phi(W JcJ W)) J ),

    W = (Y - w (x) I_N)^{-1}, J = diag(I_m, -I_m).  At w = 0 this radius
    coincides with the radius of the plain map (the two sign branches agree),
    so the membership criterion is the x = 0 special case."""
    d = 2 * m
    W = np.linalg.inv(Y - np.kron(w, np.eye(N, dtype=complex)))
    S = _sandwich_tensor(W, W, d, N).reshape(d * d, d * d)
    K = np.zeros((d * d, d * d), dtype=complex)
    for zj in zs:
        K += np.kron(zj, zj.T)
    T = K @ S
    j_sign = np.concatenate([np.ones(m), -np.ones(m)])
    jj = np.kron(j_sign, j_sign)
    T = 0.5 * (T + jj[:, None] * T * jj[None, :])
    if d * d <= tol.dense_radius_dim:
        return float(np.max(np.abs(np.linalg.eigvals(T))))
    return _cone_radius(lambda b: (T @ b.ravel()).reshape(d, d), d, tol)


def edge_of_support(h: HermitizedModel, z: complex,
                    tol: Tolerances = DEFAULT_TOL) -> EdgeResult:
    """Lower edge of the limiting singular-value distribution of the pencil
    ``z*e11 (x) I - L(X/sqrt(N), A)``.

    For a trial shift x the criterion solves the symmetrized subordination
    fixed point omega(x) -- a block-diagonal 2m x 2m matrix with
    omega(0) = 0 -- and evaluates the spectral radius of the derivative map
    at omega(x).  The radius grows with x; the first crossing of 1 is the
    edge, located by bisection on (0, s_min(y_z)) to absolute tolerance
    tol.edge.  (Evaluating the radius at the unsubordinated shift x*I instead
    overstates the edge; only omega(x) matches simulation.)

    Requires z outside the spectrum.  crossed=False means the radius stayed
    below 1 all the way up to s_min(y_z), which is then returned as x."""
    if h.L.u < 1:
        raise InsideSpectrumError("model has no random part; no edge to find")
    v = is_outside_spectrum(h, z, tol)
    if v.verdict != OUTSIDE:
        raise InsideSpectrumError(f"z={z} is not outside the spectrum "
                                  f"({v.verdict})")
    m, N = h.L.m, h.N
    y = build_yz(h, z)
    Y = hermitization(y)
    zs = variance_blocks(h.L)
    smin = float(v.smin_yz)

    def outside_gap(x: float, seed: np.ndarray):
        w, ok, _ = _symmetrized_fixed_point(Y, zs, m, N, x, seed, tol)
        if not ok:
            return False, w
        return _symmetrized_radius(Y, zs, m, N, w, tol) < 1.0, w

    lo = 0.0
    w_lo = np.zeros((2 * m, 2 * m), dtype=complex)
    hi = smin * (1.0 - 1e-9)
    ok, w = outside_gap(hi, w_lo)
    if ok:
        return EdgeResult(x=smin, crossed=False)
    while hi - lo > tol.edge:
        mid = (lo + hi) / 2
        ok, w = outside_gap(mid, w_lo)
        if ok:
            lo, w_lo = mid, w
        else:
            hi = mid
    return EdgeResult(x=(lo + hi) / 2, crossed=True)


# ---------------------------------------------------------------------------
# Subordination
# ---------------------------------------------------------------------------


def fixed_point_subordination(Y: np.ndarray, z_blocks, N: int, b: np.ndarray,
                              tol_fp: float = 1e-12,
                              max_iter: int = 10000) -> SubordinationResult:
    """Picard iteration for the subordination function of a selfadjoint Y
    (dimension d*N) against the semicircular family with couplers z_blocks.

    Solves  w = b + eta(G(w)),  G(w) = (id (x) tr_N)((Y - w (x) I_N)^{-1}),
    eta(g) = sum_j Z_j g Z_j, starting from w0 = b (Im b > 0)."""
    d = b.shape[0]
    eyeN = np.eye(N, dtype=complex)

    def g_of(w):
        res = np.linalg.inv(Y - np.kron(w, eyeN))
        return res.reshape(d, N, d, N).trace(axis1=1, axis2=3) / N

    def eta(g):
        out = np.zeros_like(g)
        for zj in z_blocks:
            out += zj @ g @ zj
        return out

    w = np.array(b, dtype=complex)
    step = math.inf
    for k in range(1, max_iter + 1):
        w_next = b + eta(g_of(w))
        step = float(np.linalg.norm(w_next - w))
        w = w_next
        if step < tol_fp:
            residual = float(np.linalg.norm(w - eta(g_of(w)) - b))
            return SubordinationResult(omega=w, residual=residual, iterations=k)
    raise NoConvergenceError(
        f"subordination Picard iteration exceeded {max_iter} steps "
        f"(last step {step:.3e})",
        last=w, step=step,
    )


def subordination(h: HermitizedModel, z: complex, b: np.ndarray,
                  tol: Tolerances = DEFAULT_TOL) -> SubordinationResult:
    """Subordination of the hermitized pencil at z, evaluated at b (Im b > 0,
    2m x 2m)."""
    m = h.L.m
    b = np.asarray(b, dtype=complex)
    if b.shape != (2 * m, 2 * m):
        raise ValueError(f"b must be {2*m}x{2*m}, got {b.shape}")
    imag = (b - b.conj().T) / 2j
    if float(np.min(np.linalg.eigvalsh(imag))) <= 0:
        raise ValueError("b must have strictly positive imaginary part")
    Y = hermitization(build_yz(h, z))
    return fixed_point_subordination(Y, variance_blocks(h.L), h.N, b,
                                     tol_fp=tol.fixed_point,
                                     max_iter=tol.max_iter)
