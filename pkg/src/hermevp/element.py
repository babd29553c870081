"""Reference-element machinery: C1 shape functions, quadrature, and the
piecewise Hermite interpolant.

The basis on the reference element [0, 1] has p+1 functions in local order
(value left, slope left, value right, slope right, bubbles):

    H00 = 1 - 3 s^2 + 2 s^3        H01 = 3 s^2 - 2 s^3
    H10 = s (1 - s)^2              H11 = s^2 (s - 1)
    B_m = s^2 (1-s)^2 P_m(2s - 1)  for m = 0..p-4  (shifted Legendre)

The bubbles and their first derivatives vanish at both endpoints, so gluing
elements through the shared (value, slope) pairs gives a C1 space of local
degree p.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre as npleg
from numpy.polynomial import polynomial as nppoly

from .errors import BadGrouping, DegreeTooLow, DimensionMismatch, InvalidSpec


@dataclass(frozen=True)
class QuadRule:
    """Gauss-Legendre points and weights mapped to [0, 1]."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.points.setflags(write=False)
        self.weights.setflags(write=False)

    @property
    def n_points(self) -> int:
        return len(self.points)


def gauss_rule(n: int) -> QuadRule:
    if n < 1:
        raise InvalidSpec(f"quadrature rule needs at least one point, got {n}")
    x, w = np.polynomial.legendre.leggauss(n)
    return QuadRule(points=0.5 * (x + 1.0), weights=0.5 * w)


@lru_cache(maxsize=32)
def _basis_coeffs(p: int) -> np.ndarray:
    """Power-basis coefficients (p+1, p+1) of the reference shapes, low order
    first, one row per shape function."""
    if p < 3:
        raise DegreeTooLow(f"C1 Hermite elements need degree >= 3, got {p}")
    rows = [
        [1.0, 0.0, -3.0, 2.0],   # H00
        [0.0, 1.0, -2.0, 1.0],   # H10
        [0.0, 0.0, 3.0, -2.0],   # H01
        [0.0, 0.0, -1.0, 1.0],   # H11
    ]
    weight = np.array([0.0, 0.0, 1.0, -2.0, 1.0])  # s^2 (1-s)^2
    for m in range(p - 3):
        leg = npleg.Legendre.basis(m, domain=[0.0, 1.0])
        pm = leg.convert(kind=nppoly.Polynomial).coef
        rows.append(nppoly.polymul(weight, pm))
    out = np.zeros((p + 1, p + 1))
    for i, r in enumerate(rows):
        out[i, : len(r)] = r
    return out


def hermite_basis(p: int, s, deriv: int = 0) -> np.ndarray:
    """Evaluate all p+1 reference shapes (or a derivative) at points s.

    Returns an array of shape (p+1, len(s)).  Derivatives are taken on the
    reference element; mapping to an element of width h divides by h^deriv
    and scales the slope shapes by h, which is assembly's business.
    """
    if deriv < 0:
        raise InvalidSpec(f"derivative order must be >= 0, got {deriv}")
    coeffs = _basis_coeffs(p)
    for _ in range(deriv):
        coeffs = nppoly.polyder(coeffs, axis=1)
    s = np.atleast_1d(np.asarray(s, dtype=float))
    # Horner along the coefficient axis
    out = np.zeros((p + 1, len(s)))
    for c in coeffs.T[::-1]:
        out = out * s + c[:, None]
    return out


@dataclass(frozen=True)
class ShapeTable:
    """Shapes and their first two reference derivatives at quadrature points."""

    p: int
    rule: QuadRule
    values: np.ndarray
    d1: np.ndarray
    d2: np.ndarray


def shape_table(p: int, rule: QuadRule | None = None) -> ShapeTable:
    """Tabulate the degree-p basis; the default rule uses 2p Gauss points,
    enough for products of basis second-derivatives times smooth data."""
    if rule is None:
        rule = gauss_rule(2 * p)
    s = rule.points
    return ShapeTable(
        p=p,
        rule=rule,
        values=hermite_basis(p, s, 0),
        d1=hermite_basis(p, s, 1),
        d2=hermite_basis(p, s, 2),
    )


@dataclass(frozen=True)
class HermiteData:
    """Point data (values and slopes) to be interpolated."""

    nodes: np.ndarray
    values: np.ndarray
    slopes: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        values = np.asarray(self.values, dtype=float)
        slopes = np.asarray(self.slopes, dtype=float)
        if not (len(nodes) == len(values) == len(slopes)):
            raise DimensionMismatch(
                f"nodes/values/slopes lengths differ: "
                f"{len(nodes)}/{len(values)}/{len(slopes)}"
            )
        if len(nodes) < 2:
            raise InvalidSpec("interpolation needs at least two nodes")
        if np.any(np.diff(nodes) <= 0.0):
            raise InvalidSpec("interpolation nodes must be strictly increasing")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "slopes", slopes)


class PiecewiseFunction:
    """Piecewise polynomial over groups of intervals, evaluable with any
    derivative order; stores power-basis coefficients per group on the
    group-local coordinate t in [0, 1]."""

    def __init__(self, breaks: np.ndarray, coeffs: np.ndarray):
        self.breaks = np.asarray(breaks, dtype=float)
        self.coeffs = np.asarray(coeffs, dtype=float)
        if len(self.breaks) != len(self.coeffs) + 1:
            raise DimensionMismatch("breaks and coefficient rows do not line up")
        self.breaks.setflags(write=False)
        self.coeffs.setflags(write=False)

    def __call__(self, x, deriv: int = 0):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        g = np.clip(np.searchsorted(self.breaks, x, side="right") - 1,
                    0, len(self.coeffs) - 1)
        widths = self.breaks[g + 1] - self.breaks[g]
        t = (x - self.breaks[g]) / widths
        coeffs = self.coeffs
        for _ in range(deriv):
            coeffs = nppoly.polyder(coeffs, axis=1)
        c = coeffs[g]
        out = np.zeros_like(t)
        for k in range(c.shape[1] - 1, -1, -1):
            out = out * t + c[:, k]
        return out / widths**deriv


def hermite_interpolant(data: HermiteData, n: int = 1) -> PiecewiseFunction:
    """Piecewise Hermite interpolant with groups of n consecutive intervals.

    Each group of n intervals carries one polynomial of degree 2n+1 matching
    values and slopes at its n+1 nodes, so the global function is C1.  The
    number of intervals must be divisible by n.
    """
    if n < 1:
        raise InvalidSpec(f"group size must be >= 1, got {n}")
    n_int = len(data.nodes) - 1
    if n_int % n != 0:
        raise BadGrouping(f"{n_int} intervals cannot be grouped in runs of {n}")

    n_groups = n_int // n
    breaks = data.nodes[::n].copy()
    coeffs = np.zeros((n_groups, 2 * n + 2))
    for g in range(n_groups):
        sl = slice(g * n, g * n + n + 1)
        xa, xb = data.nodes[g * n], data.nodes[g * n + n]
        L = xb - xa
        t = (data.nodes[sl] - xa) / L
        acc = np.zeros(2 * n + 2)
        for i in range(n + 1):
            # Lagrange cardinal polynomial for node i and its derivative there
            li = np.array([1.0])
            dsum = 0.0
            for j in range(n + 1):
                if j == i:
                    continue
                li = nppoly.polymul(li, [-t[j], 1.0]) / (t[i] - t[j])
                dsum += 1.0 / (t[i] - t[j])
            li2 = nppoly.polymul(li, li)
            shifted = np.array([-t[i], 1.0])  # (t - t_i)
            h0 = nppoly.polymul(nppoly.polyadd([1.0], -2.0 * dsum * shifted), li2)
            h1 = nppoly.polymul(shifted, li2)
            acc[: len(h0)] += data.values[g * n + i] * h0
            acc[: len(h1)] += L * data.slopes[g * n + i] * h1
        coeffs[g] = acc
    return PiecewiseFunction(breaks, coeffs)


def eval_layer_function(x, epsilon: float, beta: float,
                        side: str = "left", deriv: int = 0):
    """Boundary-layer exponential e^{-beta x/eps} (left) or its mirror
    e^{-beta (1-x)/eps} (right), with exact derivatives."""
    if epsilon <= 0.0 or beta <= 0.0:
        raise InvalidSpec("epsilon and beta must be positive")
    x = np.asarray(x, dtype=float)
    rate = beta / epsilon
    if side == "left":
        return (-rate) ** deriv * np.exp(-rate * x)
    if side == "right":
        return rate**deriv * np.exp(-rate * (1.0 - x))
    raise InvalidSpec(f"side must be 'left' or 'right', got {side!r}")
