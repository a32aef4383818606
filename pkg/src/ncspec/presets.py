"""Built-in example models: four polynomial ensembles with spiked
deterministic matrices, each bundled with everything the pipeline needs.

A preset fixes the polynomial text, the deterministic matrices (split into a
well-conditioned base and finite-rank spikes), a small proxy assignment that
stands in for the limiting deterministic tuple, the outlier region Γ (the
complement of a disk known to contain the limiting spectrum), a matching
tolerance, and — where the limiting spectrum has a closed-form boundary — an
analytic curve to overlay on figures:

1. ``(3/2)*Y1 + …`` with one rank-2 spike ``diag(2, 2i)``; limiting spectrum
   is the disk of radius 3/2, predicted outliers ``{2.5, -0.5+2i}``.
2. ``(1/2)*Y1 + …`` with a rank-2 spike ``diag(2, -2.5)`` riding on a fixed
   GUE realization; the limiting spectrum is an ellipse and the outliers are
   the classical spiked-Wigner values ``{2.125, -2.6}``.
3. ``Y1 + A1 + A2 + …`` with a balanced ±1 sign matrix and a rank-2 spike;
   the limiting spectrum is the two-lobed curve ``|z²-1|² = |z|²+1`` and the
   predicted outliers are ``{2.5, -1+2i}``.
4. ``(1/5)*(Y1+3)*(Y2+A1)*(Y3+2) - 2`` with spike ``diag(2i, -2i)``; the
   limiting spectrum is the disk ``|z+2| ≤ √2`` and the predicted outliers
   are ``{-2 ± 2.4i}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from ncspec.randmat import (
    BalancedSign,
    DiagSpec,
    GueRealization,
    generate_deterministic,
)

__all__ = [
    "CircleCurve",
    "EllipseCurve",
    "TwoLobeCurve",
    "Curve",
    "ExamplePreset",
    "UnknownExampleError",
    "EXAMPLE_IDS",
    "get_example",
    "materialize",
]


class UnknownExampleError(ValueError):
    """Requested example id is not one of the built-in presets."""


# ---------------------------------------------------------------------------
# Analytic boundary curves (for figure overlays)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CircleCurve:
    center: complex
    radius: float

    @property
    def label(self) -> str:
        c, r = self.center, self.radius
        inner = f"z - {c:g}" if c else "z"
        return f"|{inner}| = {r:g}"

    def loops(self, count: int = 256) -> list:
        th = np.linspace(0.0, 2 * math.pi, count, endpoint=False)
        return [self.center + self.radius * np.exp(1j * th)]


@dataclass(frozen=True)
class EllipseCurve:
    semi_re: float
    semi_im: float

    @property
    def label(self) -> str:
        return f"ellipse {self.semi_re:.4g} x {self.semi_im:.4g}"

    def loops(self, count: int = 256) -> list:
        th = np.linspace(0.0, 2 * math.pi, count, endpoint=False)
        return [self.semi_re * np.cos(th) + 1j * self.semi_im * np.sin(th)]


@dataclass(frozen=True)
class TwoLobeCurve:
    """The quartic curve |z² - 1|² = |z|² + 1.

    In polar coordinates r² = 1 + 2·cos(2θ), giving two closed lobes around
    ±1 that pinch together at the origin (max |z| = √3 on the real axis).
    """

    @property
    def label(self) -> str:
        return "|z^2 - 1|^2 = |z|^2 + 1"

    def loops(self, count: int = 256) -> list:
        th = np.linspace(-math.pi / 3, math.pi / 3, max(count // 2, 8))
        r = np.sqrt(np.maximum(1.0 + 2.0 * np.cos(2.0 * th), 0.0))
        lobe = r * np.exp(1j * th)
        return [lobe, -lobe]

    def contains(self, z: complex) -> bool:
        return abs(z * z - 1) ** 2 < abs(z) ** 2 + 1


Curve = Union[CircleCurve, EllipseCurve, TwoLobeCurve]


# ---------------------------------------------------------------------------
# Presets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExamplePreset:
    """Everything needed to run one of the built-in example models.

    ``deterministics`` generate the full A matrices at the simulation
    dimension; ``base`` generates the well-conditioned part (the difference
    is the finite-rank spike).  ``proxy`` generates the small stand-in for
    the limiting tuple at dimension ``proxy_n`` — spikes are dropped there,
    because the limit does not see them.  Γ is the disk complement
    ``{|z - gamma_center| >= gamma_radius}``.
    """

    id: int
    name: str
    polynomial: str
    circulars: int
    deterministics: dict
    base: dict
    proxy: dict
    proxy_n: int
    gamma_center: complex
    gamma_radius: float
    curve: Optional[Curve]
    grid_region: tuple
    grid_step: float
    match_radius: float
    default_n: int = 1000
    default_seed: int = 0


_ZERO = DiagSpec(())

_EXAMPLES = {
    1: ExamplePreset(
        id=1,
        name="cubic model, rank-2 spike diag(2, 2i)",
        polynomial="(3/2)*Y1 + (1/6)*Y2^2*A1 + (1/6)*Y2*Y3*A1*Y3 + A1^2*Y3"
                   " + A1 + (1/8)*A1^2",
        circulars=3,
        deterministics={1: DiagSpec((2, 2j))},
        base={1: _ZERO},
        proxy={1: _ZERO},
        proxy_n=1,
        gamma_center=0.0,
        gamma_radius=1.6,
        curve=CircleCurve(0.0, 1.5),
        grid_region=(-1.9, 1.9, -1.9, 1.9),
        grid_step=0.2,
        match_radius=0.2,
        default_seed=3,
    ),
    2: ExamplePreset(
        id=2,
        name="spiked-Wigner model, diag(2, -2.5) over a GUE realization",
        polynomial="(1/2)*Y1 + (1/6)*A1*Y2*(A2+A1+Y3)*Y2 + A2*Y3*A1"
                   " + A1 + (1/2)*A2",
        circulars=3,
        deterministics={1: DiagSpec((2, -2.5)), 2: GueRealization(0)},
        base={1: _ZERO, 2: GueRealization(0)},
        proxy={1: _ZERO, 2: GueRealization(0)},
        proxy_n=40,
        gamma_center=0.0,
        gamma_radius=1.5,
        curve=EllipseCurve(3 / (2 * math.sqrt(2)), 1 / (2 * math.sqrt(2))),
        grid_region=(-1.45, 1.45, -0.85, 0.85),
        grid_step=0.2,
        match_radius=0.3,
    ),
    3: ExamplePreset(
        id=3,
        name="sign-matrix model, rank-2 spike diag(1.5, -2+2i)",
        polynomial="Y1 + A1 + A2 + A1*Y2*A2*Y2 + Y3*A2*Y2",
        circulars=3,
        deterministics={1: BalancedSign(), 2: DiagSpec((1.5, -2 + 2j))},
        base={1: BalancedSign(), 2: _ZERO},
        proxy={1: BalancedSign(), 2: _ZERO},
        proxy_n=2,
        gamma_center=0.0,
        gamma_radius=2.0,
        curve=TwoLobeCurve(),
        grid_region=(-1.95, 1.95, -1.15, 1.15),
        grid_step=0.2,
        match_radius=0.2,
    ),
    4: ExamplePreset(
        id=4,
        name="affine product model, spike diag(2i, -2i)",
        polynomial="(1/5)*(Y1+3)*(Y2+A1)*(Y3+2) - 2",
        circulars=3,
        deterministics={1: DiagSpec((2j, -2j))},
        base={1: _ZERO},
        proxy={1: _ZERO},
        proxy_n=1,
        gamma_center=-2.0,
        gamma_radius=1.9,
        curve=CircleCurve(-2.0, math.sqrt(2)),
        grid_region=(-3.65, -0.35, -1.65, 1.65),
        grid_step=0.2,
        match_radius=0.2,
    ),
}

EXAMPLE_IDS = tuple(sorted(_EXAMPLES))


def get_example(example_id: int) -> ExamplePreset:
    try:
        return _EXAMPLES[example_id]
    except (KeyError, TypeError):
        raise UnknownExampleError(
            f"no example {example_id!r}; available ids are {list(EXAMPLE_IDS)}"
        ) from None


def materialize(generators: dict, N: int) -> dict:
    """Generate every deterministic matrix of a {index: generator} table."""
    return {k: generate_deterministic(g, N) for k, g in generators.items()}
