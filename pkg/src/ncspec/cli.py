"""Config-driven command line: simulate spectra, map the limiting spectrum,
run the outlier pipeline, and reproduce the built-in examples.

Subcommands
-----------
``simulate``    sample the matrix model once; write every eigenvalue
                (``eigenvalues.csv``) and a scatter figure (``scatter.svg``).
``spectrum``    classify a grid of test points with the limiting-spectrum
                criterion (``spectrum.csv``, ``region.svg``) and report how
                stable the verdicts are under halving the proxy dimension.
``outliers``    the full pipeline: check that the outlier region Γ stays
                clear of the estimated spectrum, predict outliers from the
                zero-circular polynomial, simulate once, match predictions
                to empirical eigenvalues, and attach the boundary
                determinant-ratio diagnostic (``report.json``,
                ``overlay.svg``, plus ``eigenvalues.csv`` so every plotted
                point is on file).
``example K``   run ``outliers`` on built-in example K (1–4).

Configs are TOML (JSON is accepted by file suffix); every command is a pure
function of config + seed, so reruns produce byte-identical files.  Exit
codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:          # python < 3.11
    import tomli as tomllib

from ncspec.freespec import (
    DEFAULT_TOL,
    OUTSIDE,
    HermitizedModel,
    InsideSpectrumError,
    NoConvergenceError,
    Tolerances,
    is_outside_spectrum,
    spectrum_grid,
    write_spectrum_csv,
)
from ncspec.ncpoly import (
    MatrixAssignment,
    NcPolynomial,
    ParseError,
    SymbolIndexError,
    UnsupportedStarredCircularError,
    evaluate,
    parse_polynomial,
    zero_circulars,
)
from ncspec.outliers import (
    Annulus,
    GridTooCoarseError,
    det_ratio,
    match_outliers,
    predicted_outliers,
    write_report_json,
)
from ncspec.presets import (
    CircleCurve,
    Curve,
    EllipseCurve,
    ExamplePreset,
    TwoLobeCurve,
    UnknownExampleError,
    get_example,
    materialize,
)
from ncspec.randmat import (
    BalancedSign,
    DiagSpec,
    EnsembleSpec,
    FileFormatError,
    FromFile,
    GueRealization,
    NonFiniteError,
    SizeError,
    _parse_complex_token,
    eigenvalues,
    sample_iid,
    write_eigenvalues_csv,
)

__all__ = [
    "ConfigError",
    "GammaInsideSpectrumError",
    "RunConfig",
    "load_config",
    "parse_config",
    "preset_config",
    "simulate_eigenvalues",
    "run_outliers",
    "cmd_simulate",
    "cmd_spectrum",
    "cmd_outliers",
    "cmd_example",
    "main",
]


class ConfigError(ValueError):
    """Configuration rejected; ``path`` is the dotted field that failed."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class GammaInsideSpectrumError(ArithmeticError):
    """The outlier-region boundary crosses the estimated limiting spectrum."""

    def __init__(self, cells):
        self.cells = list(cells)
        listing = ", ".join(
            f"[{c[0]:.6g}, {c[1]:.6g}] x [{c[2]:.6g}, {c[3]:.6g}]"
            for c in self.cells
        )
        super().__init__(
            "the outlier-region boundary meets the estimated spectrum in "
            f"{len(self.cells)} grid cell(s): {listing}; enlarge the region "
            "radius or rethink the model"
        )


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    """Validated, fully-resolved inputs for one command invocation."""

    text: str
    polynomial: NcPolynomial
    circulars: int
    n: int
    seed: int
    ensemble: str
    deterministic: dict          # {index: DetGenerator}, full matrices
    base: dict                   # {index: DetGenerator}, well-conditioned part
    proxy: dict                  # {index: DetGenerator} for the limit stand-in
    proxy_n: int
    grid_region: Optional[tuple]
    grid_step: float
    stability: bool
    gamma_center: complex
    gamma_radius: Optional[float]
    gamma_points: int
    match_radius: float
    boundary_points: int
    tol: Tolerances
    out_dir: str
    curve: Optional[Curve]


_SYMBOL_KEY = re.compile(r"^A([1-9][0-9]*)$")
_GEN_KINDS = ("diag", "balanced-sign", "gue", "file", "zero")


def _fail(path: str, message: str):
    raise ConfigError(path, message)


def _table(data: dict, key: str, path: str) -> dict:
    value = data.get(key, {})
    if not isinstance(value, dict):
        _fail(f"{path}{key}", "expected a table")
    return value


def _get(table: dict, key: str, path: str, kinds, default):
    if key not in table:
        if default is _REQUIRED:
            _fail(f"{path}.{key}", "missing required field")
        return default
    value = table[key]
    if kinds is bool:
        if not isinstance(value, bool):
            _fail(f"{path}.{key}", f"expected true/false, got {value!r}")
        return value
    if isinstance(value, bool) or not isinstance(value, kinds):
        _fail(f"{path}.{key}", f"unexpected value {value!r}")
    return value


_REQUIRED = object()
_NUMBER = (int, float)


def _as_complex(value, path: str) -> complex:
    if isinstance(value, bool):
        _fail(path, f"expected a number, got {value!r}")
    if isinstance(value, _NUMBER):
        return complex(value)
    if isinstance(value, str):
        try:
            return _parse_complex_token(value)
        except FileFormatError as err:
            _fail(path, str(err))
    if isinstance(value, (list, tuple)) and len(value) == 2 \
            and all(isinstance(v, _NUMBER) for v in value):
        return complex(value[0], value[1])
    _fail(path, f"cannot read {value!r} as a complex number "
                "(use 2, \"2i\", \"1.5-2i\" or [re, im])")


def _positive(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, _NUMBER) or value <= 0:
        _fail(path, f"expected a positive number, got {value!r}")
    return float(value)


def _generator(table, path: str):
    if not isinstance(table, dict):
        _fail(path, "expected a table with a 'kind' field")
    kind = _get(table, "kind", path, str, _REQUIRED)
    if kind == "diag":
        values = _get(table, "values", path, (list, tuple), _REQUIRED)
        return DiagSpec(tuple(
            _as_complex(v, f"{path}.values[{i}]") for i, v in enumerate(values)
        ))
    if kind == "balanced-sign":
        return BalancedSign()
    if kind == "gue":
        seed = _get(table, "seed", path, int, _REQUIRED)
        return GueRealization(seed)
    if kind == "file":
        return FromFile(_get(table, "path", path, str, _REQUIRED))
    if kind == "zero":
        return DiagSpec(())
    _fail(f"{path}.kind", f"unknown kind {kind!r}; pick one of {_GEN_KINDS}")


def _symbol_table(data: dict, name: str) -> dict:
    """{index: generator} from a table keyed A1, A2, ..."""
    gens = {}
    for key, sub in _table(data, name, "").items():
        m = _SYMBOL_KEY.match(key)
        if not m:
            _fail(f"{name}.{key}", "keys must look like A1, A2, ...")
        gens[int(m.group(1))] = _generator(sub, f"{name}.{key}")
    return gens


def _default_base(gen):
    """A' = 0 for finite-rank matrices, A' = A for full ones."""
    return DiagSpec(()) if isinstance(gen, DiagSpec) else gen


def _check_diag_fits(gen, n: int, path: str):
    if isinstance(gen, DiagSpec) and len(gen.values) > n:
        _fail(path, f"{len(gen.values)} diagonal values do not fit in "
                    f"dimension {n}")


def _curve_from_table(table: dict) -> Curve:
    kind = _get(table, "kind", "curve", str, _REQUIRED)
    if kind == "circle":
        return CircleCurve(_as_complex(table.get("center", 0.0), "curve.center"),
                           _positive(table.get("radius", None), "curve.radius"))
    if kind == "ellipse":
        return EllipseCurve(_positive(table.get("semi_re"), "curve.semi_re"),
                            _positive(table.get("semi_im"), "curve.semi_im"))
    if kind == "two-lobe":
        return TwoLobeCurve()
    _fail("curve.kind", f"unknown kind {kind!r}; "
          "pick circle, ellipse or two-lobe")


def parse_config(data: dict, *, n: Optional[int] = None,
                 seed: Optional[int] = None, out: Optional[str] = None,
                 grid_step: Optional[float] = None,
                 margin: Optional[float] = None) -> RunConfig:
    """Validate a config dict (from TOML/JSON) into a RunConfig.

    The keyword arguments are the command-line overrides; they are applied
    before validation so e.g. an overridden ``--n`` is checked against the
    diagonal spike lengths.
    """
    if not isinstance(data, dict):
        _fail("<config>", "top level must be a table")
    model = _table(data, "model", "")
    text = _get(model, "polynomial", "model", str, _REQUIRED)
    u = _get(model, "circulars", "model", int, _REQUIRED)
    if u < 0:
        _fail("model.circulars", "must be >= 0")
    n = n if n is not None else _get(model, "n", "model", int, _REQUIRED)
    if n < 1:
        _fail("model.n", f"must be >= 1, got {n}")
    seed = seed if seed is not None else _get(model, "seed", "model", int, 0)
    ensemble = _get(model, "ensemble", "model", str, "complex-gaussian")
    try:
        EnsembleSpec(ensemble, 1, 0)
    except ValueError as err:
        _fail("model.ensemble", str(err))

    deterministic = _symbol_table(data, "deterministic")
    t = len(deterministic)
    missing = sorted(set(range(1, t + 1)) - set(deterministic))
    if missing:
        _fail("deterministic", f"symbols must be contiguous A1..A{t}; "
                               f"A{missing[0]} is missing")
    try:
        poly = parse_polynomial(text, u, t)
    except (ParseError, SymbolIndexError,
            UnsupportedStarredCircularError) as err:
        _fail("model.polynomial", str(err))

    base = {k: _default_base(g) for k, g in deterministic.items()}
    for k, g in _symbol_table(data, "base").items():
        if k not in deterministic:
            _fail(f"base.A{k}", "no matching entry under [deterministic]")
        base[k] = g

    grid = _table(data, "grid", "")
    region = grid.get("region")
    if region is not None:
        if (not isinstance(region, (list, tuple)) or len(region) != 4
                or any(isinstance(v, bool) or not isinstance(v, _NUMBER)
                       for v in region)):
            _fail("grid.region", "expected [re_min, re_max, im_min, im_max]")
        if not (region[0] < region[1] and region[2] < region[3]):
            _fail("grid.region", "min bounds must be below max bounds")
        region = tuple(float(v) for v in region)
    step = grid_step if grid_step is not None \
        else _get(grid, "step", "grid", _NUMBER, 0.2)
    step = _positive(step, "grid.step")
    proxy_n = _get(grid, "proxy_n", "grid", int, 8)
    if proxy_n < 1:
        _fail("grid.proxy_n", "must be >= 1")
    stability = _get(grid, "stability", "grid", bool, True)

    proxy = {k: _default_base(g) for k, g in deterministic.items()}
    for k, g in _symbol_table(data, "proxy").items():
        if k not in deterministic:
            _fail(f"proxy.A{k}", "no matching entry under [deterministic]")
        proxy[k] = g

    gamma = _table(data, "gamma", "")
    center = _as_complex(gamma.get("center", 0.0), "gamma.center")
    radius = gamma.get("radius")
    if radius is not None:
        radius = _positive(radius, "gamma.radius")
    gamma_points = _get(gamma, "points", "gamma", int, 24)
    if gamma_points < 4:
        _fail("gamma.points", "need at least 4 boundary samples")

    match = _table(data, "match", "")
    match_radius = _positive(match.get("radius", 0.2), "match.radius")
    boundary_points = _get(match, "boundary_points", "match", int, 64)
    if boundary_points < 1:
        _fail("match.boundary_points", "must be >= 1")

    tol = DEFAULT_TOL
    for key, value in _table(data, "tolerances", "").items():
        if key in ("max_iter", "dense_radius_dim"):
            if isinstance(value, bool) or not isinstance(value, int) \
                    or value < 1:
                _fail(f"tolerances.{key}", f"expected a positive integer, "
                                           f"got {value!r}")
        else:
            value = _positive(value, f"tolerances.{key}")
        try:
            tol = tol.replace(**{key: value})
        except TypeError:
            _fail(f"tolerances.{key}", "unknown tolerance field")
    if margin is not None:
        tol = tol.replace(margin=_positive(margin, "tolerances.margin"))
    if not tol.margin < 1:
        _fail("tolerances.margin", "must be below 1")

    out_dir = out if out is not None \
        else _get(_table(data, "output", ""), "dir", "output", str,
                  "ncspec-out")

    curve = None
    if "curve" in data:
        curve = _curve_from_table(_table(data, "curve", ""))

    for k, g in deterministic.items():
        _check_diag_fits(g, n, f"deterministic.A{k}.values")
    for k, g in base.items():
        _check_diag_fits(g, n, f"base.A{k}.values")
    for k, g in proxy.items():
        _check_diag_fits(g, proxy_n, f"proxy.A{k}.values")

    return RunConfig(
        text=text, polynomial=poly, circulars=u, n=n, seed=seed,
        ensemble=ensemble, deterministic=deterministic, base=base,
        proxy=proxy, proxy_n=proxy_n, grid_region=region, grid_step=step,
        stability=stability, gamma_center=center, gamma_radius=radius,
        gamma_points=gamma_points, match_radius=match_radius,
        boundary_points=boundary_points, tol=tol, out_dir=out_dir,
        curve=curve,
    )


def load_config(path, **overrides) -> RunConfig:
    """Read a TOML (or, by suffix, JSON) config file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as err:
        _fail(str(path), f"cannot read config: {err}")
    try:
        if path.suffix.lower() == ".json":
            data = json.loads(text)
        else:
            data = tomllib.loads(text)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as err:
        _fail(str(path), f"cannot parse config: {err}")
    return parse_config(data, **overrides)


def preset_config(preset: ExamplePreset, *, n: Optional[int] = None,
                  seed: Optional[int] = None, out: Optional[str] = None,
                  grid_step: Optional[float] = None,
                  margin: Optional[float] = None) -> RunConfig:
    """RunConfig for a built-in example, with the usual overrides."""
    t = len(preset.deterministics)
    tol = DEFAULT_TOL if margin is None \
        else DEFAULT_TOL.replace(margin=_positive(margin,
                                                  "tolerances.margin"))
    return RunConfig(
        text=preset.polynomial,
        polynomial=parse_polynomial(preset.polynomial, preset.circulars, t),
        circulars=preset.circulars,
        n=n if n is not None else preset.default_n,
        seed=seed if seed is not None else preset.default_seed,
        ensemble="complex-gaussian",
        deterministic=dict(preset.deterministics),
        base=dict(preset.base),
        proxy=dict(preset.proxy),
        proxy_n=preset.proxy_n,
        grid_region=preset.grid_region,
        grid_step=grid_step if grid_step is not None else preset.grid_step,
        stability=True,
        gamma_center=complex(preset.gamma_center),
        gamma_radius=preset.gamma_radius,
        gamma_points=24,
        match_radius=preset.match_radius,
        boundary_points=64,
        tol=tol,
        out_dir=out if out is not None else f"ncspec-example{preset.id}",
        curve=preset.curve,
    )


# ---------------------------------------------------------------------------
# Pipeline pieces
# ---------------------------------------------------------------------------


def _materialize_each(gens: dict, N: int, section: str) -> dict:
    out = {}
    for k, g in sorted(gens.items()):
        try:
            out[k] = materialize({k: g}, N)[k]
        except (SizeError, FileFormatError) as err:
            raise ConfigError(f"{section}.A{k}", str(err)) from err
    return out


def _proxy_model(cfg: RunConfig) -> HermitizedModel:
    dets = _materialize_each(cfg.proxy, cfg.proxy_n, "proxy")
    return HermitizedModel.from_polynomial(cfg.polynomial, dets,
                                           N=cfg.proxy_n)


def simulate_eigenvalues(cfg: RunConfig, dets: Optional[dict] = None) \
        -> np.ndarray:
    """All eigenvalues of one sampled model, sorted by (re, im)."""
    if dets is None:
        dets = _materialize_each(cfg.deterministic, cfg.n, "deterministic")
    circ = {j: sample_iid(EnsembleSpec(cfg.ensemble, cfg.n, cfg.seed, j))
            for j in range(1, cfg.circulars + 1)}
    M = evaluate(cfg.polynomial, MatrixAssignment(cfg.n, circ, dets),
                 cfg.n ** -0.5)
    ev = eigenvalues(M)
    return ev[np.lexsort((ev.imag, ev.real))]


def _lattice_cell(z: complex, h: float) -> tuple:
    i, j = math.floor(z.real / h), math.floor(z.imag / h)
    return (i * h, (i + 1) * h, j * h, (j + 1) * h)


def _cluster_rectangles(points, step: float) -> list:
    """Merge step-padded boxes around the points into disjoint rectangles."""
    pad = step
    rects = [[z.real - pad, z.real + pad, z.imag - pad, z.imag + pad]
             for z in points]
    merged = True
    while merged:
        merged = False
        for i in range(len(rects)):
            for j in range(i + 1, len(rects)):
                a, b = rects[i], rects[j]
                if a[0] <= b[1] and b[0] <= a[1] \
                        and a[2] <= b[3] and b[2] <= a[3]:
                    rects[i] = [min(a[0], b[0]), max(a[1], b[1]),
                                min(a[2], b[2]), max(a[3], b[3])]
                    del rects[j]
                    merged = True
                    break
            if merged:
                break
    return [tuple(r) for r in rects]


def run_outliers(cfg: RunConfig):
    """The outlier pipeline; returns (report, empirical, predicted)."""
    if cfg.gamma_radius is None:
        _fail("gamma.radius", "the outliers command needs an outlier region")
    gamma = Annulus(cfg.gamma_center, cfg.gamma_radius)
    h = _proxy_model(cfg)

    offenders = set()
    for z in gamma.boundary_points(cfg.gamma_points):
        if is_outside_spectrum(h, complex(z), cfg.tol).verdict != OUTSIDE:
            offenders.add(_lattice_cell(complex(z), cfg.grid_step))
    if offenders:
        raise GammaInsideSpectrumError(sorted(offenders))

    dets_full = _materialize_each(cfg.deterministic, cfg.n, "deterministic")
    dets_base = _materialize_each(cfg.base, cfg.n, "base")
    a_full = MatrixAssignment(cfg.n, {}, dets_full)
    a_base = MatrixAssignment(cfg.n, {}, dets_base)

    candidates = np.linalg.eigvals(
        evaluate(zero_circulars(cfg.polynomial), a_full))
    interest = sorted((complex(z) for z in candidates
                       if gamma.contains(complex(z))),
                      key=lambda q: (q.real, q.imag))
    predicted = []
    for rect in _cluster_rectangles(interest, cfg.grid_step):
        smap = spectrum_grid(h, rect, cfg.grid_step, cfg.tol)
        predicted.extend(predicted_outliers(cfg.polynomial, a_full, smap))
    predicted.sort(key=lambda q: (q.real, q.imag))

    empirical = [complex(z)
                 for z in simulate_eigenvalues(cfg, dets=dets_full)]
    ratio = det_ratio(cfg.polynomial, a_full, a_base,
                      gamma.boundary_points(cfg.boundary_points),
                      singular_tol=cfg.tol.smin_scale)
    report = match_outliers(empirical, predicted, gamma, cfg.match_radius,
                            det_ratio_min=ratio)
    return report, np.array(empirical, dtype=complex), predicted


# ---------------------------------------------------------------------------
# SVG figures
# ---------------------------------------------------------------------------

_VERDICT_FILL = {
    "Outside": "#d9e7f5",
    "InsideRadius": "#f0a24b",
    "InsideS0": "#9e2b2b",
}


class _Canvas:
    """Equal-aspect plane-to-pixel transform plus the frame and ticks."""

    W, H = 640, 560
    ML, MR, MT, MB = 58, 18, 34, 46

    def __init__(self, box):
        re0, re1, im0, im1 = box
        iw, ih = self.W - self.ML - self.MR, self.H - self.MT - self.MB
        self.scale = min(iw / (re1 - re0), ih / (im1 - im0))
        self.mid = complex((re0 + re1) / 2, (im0 + im1) / 2)
        self.cx, self.cy = self.ML + iw / 2, self.MT + ih / 2
        self.re_span = iw / self.scale
        self.im_span = ih / self.scale

    def px(self, z: complex):
        return (self.cx + (z.real - self.mid.real) * self.scale,
                self.cy - (z.imag - self.mid.imag) * self.scale)

    def length(self, value: float) -> float:
        return value * self.scale

    def frame(self, title: str) -> list:
        out = [
            f'<rect x="0" y="0" width="{self.W}" height="{self.H}" '
            'fill="white"/>',
            f'<text x="{self.W / 2:.1f}" y="20" text-anchor="middle" '
            f'font-size="13">{title}</text>',
        ]
        x0, y0 = self.ML, self.MT
        x1, y1 = self.W - self.MR, self.H - self.MB
        re_lo = self.mid.real - self.re_span / 2
        im_lo = self.mid.imag - self.im_span / 2
        for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
            xv = re_lo + frac * self.re_span
            yv = im_lo + frac * self.im_span
            xp = x0 + frac * (x1 - x0)
            yp = y1 - frac * (y1 - y0)
            out.append(f'<line x1="{xp:.1f}" y1="{y1}" x2="{xp:.1f}" '
                       f'y2="{y1 + 4}" stroke="#444"/>')
            out.append(f'<text x="{xp:.1f}" y="{y1 + 17}" '
                       f'text-anchor="middle" font-size="10">{xv:.3g}</text>')
            out.append(f'<line x1="{x0 - 4}" y1="{yp:.1f}" x2="{x0}" '
                       f'y2="{yp:.1f}" stroke="#444"/>')
            out.append(f'<text x="{x0 - 7}" y="{yp + 3.5:.1f}" '
                       f'text-anchor="end" font-size="10">{yv:.3g}</text>')
        out.append(f'<rect x="{x0}" y="{y0}" width="{x1 - x0}" '
                   f'height="{y1 - y0}" fill="none" stroke="#444"/>')
        out.append(f'<text x="{(x0 + x1) / 2:.1f}" y="{self.H - 8}" '
                   'text-anchor="middle" font-size="11">Re z</text>')
        out.append(f'<text x="14" y="{(y0 + y1) / 2:.1f}" font-size="11" '
                   f'transform="rotate(-90 14 {(y0 + y1) / 2:.1f})" '
                   'text-anchor="middle">Im z</text>')
        return out


def _box_around(point_sets, pad_frac: float = 0.08) -> tuple:
    pts = np.concatenate([np.asarray(p, dtype=complex).ravel()
                          for p in point_sets if len(p)])
    re0, re1 = float(pts.real.min()), float(pts.real.max())
    im0, im1 = float(pts.imag.min()), float(pts.imag.max())
    pad = pad_frac * max(re1 - re0, im1 - im0, 1.0)
    return (re0 - pad, re1 + pad, im0 - pad, im1 + pad)


def _dot(cv: _Canvas, z: complex, cls: str, r: float, style: str) -> str:
    x, y = cv.px(z)
    return f'<circle class="{cls}" cx="{x:.2f}" cy="{y:.2f}" r="{r}" {style}/>'


def _loop_path(cv: _Canvas, loop, style: str, close: bool = True) -> str:
    coords = [cv.px(complex(z)) for z in loop]
    d = "M" + " L".join(f"{x:.2f} {y:.2f}" for x, y in coords)
    if close:
        d += " Z"
    return f'<path d="{d}" fill="none" {style}/>'


def _legend(cv: _Canvas, entries) -> list:
    out = []
    y = cv.MT + 14
    for swatch, label in entries:
        out.append(f'<g transform="translate({cv.ML + 10},{y})">{swatch}'
                   f'<text x="22" y="4" font-size="11">{label}</text></g>')
        y += 16
    return out


_CURVE_STYLE = 'stroke="#1f6fb5" stroke-width="1.5"'
_GAMMA_STYLE = 'stroke="#777" stroke-width="1.2" stroke-dasharray="6 4"'


def _write_svg(path: Path, cv: _Canvas, body: list, title: str):
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{cv.W}" '
            f'height="{cv.H}" viewBox="0 0 {cv.W} {cv.H}" '
            'font-family="sans-serif">')
    Path(path).write_text(
        "\n".join([head] + cv.frame(title) + body + ["</svg>"]) + "\n")


def _curve_layers(cv: _Canvas, curve: Optional[Curve]) -> list:
    if curve is None:
        return []
    return [_loop_path(cv, loop, _CURVE_STYLE) for loop in curve.loops()]


def _scatter_svg(path, ev, curve, title):
    extra = [np.array([z for loop in curve.loops() for z in loop])] \
        if curve is not None else []
    cv = _Canvas(_box_around([ev] + extra))
    body = _curve_layers(cv, curve)
    body += [_dot(cv, complex(z), "eig", 2.2, 'fill="#111"') for z in ev]
    entries = [('<circle cx="8" cy="0" r="2.2" fill="#111"/>',
                f"eigenvalues ({len(ev)})")]
    if curve is not None:
        entries.append((f'<line x1="0" y1="0" x2="16" y2="0" {_CURVE_STYLE}/>',
                        curve.label))
    body += _legend(cv, entries)
    _write_svg(path, cv, body, title)


def _region_svg(path, smap, curve, title):
    nodes = [v.z for v in smap.verdicts()]
    cv = _Canvas(_box_around([nodes], pad_frac=0.05))
    side = cv.length(smap.resolution) * 0.9
    body = []
    for v in smap.verdicts():
        x, y = cv.px(v.z)
        body.append(f'<rect class="cell" x="{x - side / 2:.2f}" '
                    f'y="{y - side / 2:.2f}" width="{side:.2f}" '
                    f'height="{side:.2f}" '
                    f'fill="{_VERDICT_FILL[v.verdict]}"/>')
    body += _curve_layers(cv, curve)
    entries = [(f'<rect x="0" y="-7" width="14" height="14" '
                f'fill="{fill}"/>', verdict)
               for verdict, fill in _VERDICT_FILL.items()]
    if curve is not None:
        entries.append((f'<line x1="0" y1="0" x2="16" y2="0" {_CURVE_STYLE}/>',
                        curve.label))
    body += _legend(cv, entries)
    _write_svg(path, cv, body, title)


def _overlay_svg(path, cfg, ev, predicted, title):
    gamma_ring = CircleCurve(cfg.gamma_center, cfg.gamma_radius).loops(180)
    extras = [gamma_ring[0]]
    if cfg.curve is not None:
        extras += [np.array([z for loop in cfg.curve.loops() for z in loop])]
    cv = _Canvas(_box_around([ev, np.asarray(predicted, dtype=complex)]
                             + extras))
    body = _curve_layers(cv, cfg.curve)
    body.append(_loop_path(cv, gamma_ring[0], _GAMMA_STYLE))
    body += [_dot(cv, complex(z), "eig", 2.2, 'fill="#111"') for z in ev]
    body += [_dot(cv, complex(q), "pred", 5.0,
                  'fill="none" stroke="#c0392b" stroke-width="1.8"')
             for q in predicted]
    entries = [
        ('<circle cx="8" cy="0" r="2.2" fill="#111"/>',
         f"empirical eigenvalues ({len(ev)})"),
        ('<circle cx="8" cy="0" r="5" fill="none" stroke="#c0392b" '
         'stroke-width="1.8"/>', "predicted outliers"),
        (f'<line x1="0" y1="0" x2="16" y2="0" {_GAMMA_STYLE}/>',
         "outlier region boundary"),
    ]
    if cfg.curve is not None:
        entries.append((f'<line x1="0" y1="0" x2="16" y2="0" {_CURVE_STYLE}/>',
                        cfg.curve.label))
    body += _legend(cv, entries)
    _write_svg(path, cv, body, title)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(cfg: RunConfig) -> dict:
    ev = simulate_eigenvalues(cfg)
    out = _outdir(cfg)
    files = {"eigenvalues.csv": out / "eigenvalues.csv",
             "scatter.svg": out / "scatter.svg"}
    write_eigenvalues_csv(files["eigenvalues.csv"], ev)
    _scatter_svg(files["scatter.svg"], ev, cfg.curve,
                 f"eigenvalues, n = {cfg.n}, seed = {cfg.seed}")
    print(f"simulate: {len(ev)} eigenvalues at n = {cfg.n}, "
          f"seed = {cfg.seed} -> {out}")
    return files


def cmd_spectrum(cfg: RunConfig) -> dict:
    if cfg.grid_region is None:
        _fail("grid.region", "the spectrum command needs a grid region")
    h = _proxy_model(cfg)
    smap = spectrum_grid(h, cfg.grid_region, cfg.grid_step, cfg.tol)
    out = _outdir(cfg)
    files = {"spectrum.csv": out / "spectrum.csv",
             "region.svg": out / "region.svg"}
    write_spectrum_csv(smap, files["spectrum.csv"])
    _region_svg(files["region.svg"], smap, cfg.curve,
                f"spectrum membership, proxy dimension {cfg.proxy_n}, "
                f"step {cfg.grid_step:g}")
    verdicts = [v.verdict for v in smap.verdicts()]
    print(f"spectrum: {len(verdicts)} nodes at step {cfg.grid_step:g} -> "
          f"{out} (Outside {verdicts.count('Outside')}, InsideRadius "
          f"{verdicts.count('InsideRadius')}, InsideS0 "
          f"{verdicts.count('InsideS0')})")
    if not cfg.stability:
        print("spectrum: stability check disabled")
    elif cfg.proxy_n < 2:
        print("spectrum: stability check skipped (proxy dimension 1)")
    else:
        half = cfg.proxy_n // 2
        try:
            h2 = HermitizedModel.from_polynomial(
                cfg.polynomial, _materialize_each(cfg.proxy, half, "proxy"),
                N=half)
        except ConfigError:
            print(f"spectrum: stability check skipped (proxy generators "
                  f"do not fit dimension {half})")
            return files
        flips = sum(
            1 for v in smap.verdicts()
            if is_outside_spectrum(h2, v.z, cfg.tol).verdict != v.verdict)
        print(f"spectrum: stability check at proxy dimension {half}: "
              f"{flips} of {len(verdicts)} verdicts flip")
    return files


def cmd_outliers(cfg: RunConfig) -> dict:
    report, ev, _ = run_outliers(cfg)
    out = _outdir(cfg)
    files = {"report.json": out / "report.json",
             "eigenvalues.csv": out / "eigenvalues.csv",
             "overlay.svg": out / "overlay.svg"}
    write_report_json(report, files["report.json"])
    write_eigenvalues_csv(files["eigenvalues.csv"], ev)
    # the overlay draws exactly what report.json records
    _overlay_svg(files["overlay.svg"], cfg, ev, report.predicted,
                 f"outliers, n = {cfg.n}, seed = {cfg.seed}")
    n_pred, n_emp = report.counts
    dists = [f"{pair.distance:.3f}" for pair in report.pairs]
    print(f"outliers: {n_pred} predicted / {n_emp} empirical in the region, "
          f"{len(report.pairs)} matched (distances {dists}); "
          f"min |det ratio| on the boundary = {report.det_ratio_min:.4g}")
    print(f"outliers: wrote {', '.join(str(p) for p in files.values())}")
    return files


def cmd_example(example_id: int, **overrides) -> dict:
    preset = get_example(example_id)
    cfg = preset_config(preset, **overrides)
    print(f"example {preset.id}: {preset.name}")
    return cmd_outliers(cfg)


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

_NUMERICAL_ERRORS = (
    ArithmeticError,          # singular pencils/denominators, Γ violations
    GridTooCoarseError,
    InsideSpectrumError,
    NoConvergenceError,
    NonFiniteError,
    np.linalg.LinAlgError,
)


def _add_common(sub, with_source: bool):
    if with_source:
        src = sub.add_mutually_exclusive_group(required=True)
        src.add_argument("--config", metavar="PATH",
                         help="TOML (or JSON) config file")
        src.add_argument("--example", type=int, metavar="ID",
                         help="use a built-in example preset instead")
    sub.add_argument("--n", type=int, help="override the matrix dimension")
    sub.add_argument("--seed", type=int, help="override the sampling seed")
    sub.add_argument("--out", help="override the output directory")
    sub.add_argument("--grid-step", type=float,
                     help="override the verdict-grid resolution")
    sub.add_argument("--tol-margin", type=float,
                     help="override the spectrum-verdict margin")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ncspec",
        description="Spectra and outliers of polynomials in Ginibre and "
                    "deterministic matrices.")
    subs = parser.add_subparsers(dest="command", required=True)
    for name, text in (("simulate", "sample the model, write eigenvalues"),
                       ("spectrum", "map the limiting-spectrum criterion"),
                       ("outliers", "predict, simulate and match outliers")):
        _add_common(subs.add_parser(name, help=text), with_source=True)
    ex = subs.add_parser("example", help="run a built-in example end to end")
    ex.add_argument("id", type=int, help="example id (1-4)")
    _add_common(ex, with_source=False)
    return parser


def _resolve_config(args) -> RunConfig:
    overrides = dict(n=args.n, seed=args.seed, out=args.out,
                     grid_step=args.grid_step, margin=args.tol_margin)
    if args.config is None:
        return preset_config(get_example(args.example), **overrides)
    return load_config(args.config, **overrides)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "example":
            cmd_example(args.id, n=args.n, seed=args.seed, out=args.out,
                        grid_step=args.grid_step, margin=args.tol_margin)
        elif args.command == "simulate":
            cmd_simulate(_resolve_config(args))
        elif args.command == "spectrum":
            cmd_spectrum(_resolve_config(args))
        else:
            cmd_outliers(_resolve_config(args))
    except (ConfigError, UnknownExampleError) as err:
        print(f"ncspec: config error: {err}", file=sys.stderr)
        return 2
    except _NUMERICAL_ERRORS as err:
        print(f"ncspec: numerical failure: {err}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
