"""Assembly of the stiffness and mass matrices for

    B(u, v) = eps^2 (u'', v'') + (a u', v') + (b u, v)

in the C1 Hermite space with clamped ends u(0) = u'(0) = u(1) = u'(1) = 0.

Global dof layout interleaves (value, slope) pairs in node order, with each
element's bubble coefficients appended right after its left node's pair; the
four clamped end dofs are eliminated, not penalized.  Slope dofs hold the
physical derivative du/dx, so the slope shapes are scaled by the element
width h and the matrices stay well-defined on strongly graded meshes.

Both matrices are stored symmetric banded, upper form: band[bw + i - j, j]
holds entry (i, j) for j - bw <= i <= j, the layout scipy's banded Cholesky
and eig_banded expect.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import blas as sblas

from .element import ShapeTable, hermite_basis
from .errors import (CoefficientViolation, DimensionMismatch, InvalidSpec,
                     ZeroVector)
from .mesh import Mesh


@dataclass(frozen=True)
class CoefficientSet:
    """Problem coefficients.  a_floor is a certified positive lower bound for
    a(x) on [0, 1], used for validation and for the default layer strength
    beta = sqrt(a_floor).

    allow_degenerate skips the positivity checks so tests can assemble
    isolated terms (a = 0, b = 0, or eps = 0); never set it for real runs.
    """

    a: Callable
    b: Callable
    epsilon: float
    a_floor: float
    allow_degenerate: bool = False

    def __post_init__(self):
        if not self.allow_degenerate:
            if self.epsilon <= 0.0:
                raise InvalidSpec(f"epsilon must be positive, got {self.epsilon}")
            if self.a_floor <= 0.0:
                raise InvalidSpec(f"a_floor must be positive, got {self.a_floor}")
        elif self.epsilon < 0.0:
            raise InvalidSpec(f"epsilon must be non-negative, got {self.epsilon}")


class SymBandMatrix:
    """Symmetric banded matrix, upper storage band[bw + i - j, j] = A[i, j]."""

    def __init__(self, n: int, bandwidth: int):
        if n < 1 or bandwidth < 0:
            raise InvalidSpec(f"bad band matrix shape n={n}, bandwidth={bandwidth}")
        self.n = n
        self.bandwidth = bandwidth
        self.band = np.zeros((bandwidth + 1, n))

    def scatter(self, idx: np.ndarray, local: np.ndarray) -> None:
        """Add a dense symmetric local matrix at global indices idx; negative
        indices mark eliminated dofs and are skipped."""
        keep = np.flatnonzero(idx >= 0)
        gi = idx[keep]
        loc = local[np.ix_(keep, keep)]
        ii = np.repeat(gi, len(gi))
        jj = np.tile(gi, len(gi))
        upper = ii <= jj
        np.add.at(self.band,
                  (self.bandwidth + ii[upper] - jj[upper], jj[upper]),
                  loc.ravel()[upper])

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        for d in range(self.bandwidth + 1):
            diag = self.band[self.bandwidth - d, d:]
            idx = np.arange(self.n - d)
            out[idx, idx + d] = diag
            out[idx + d, idx] = diag
        return out

    def matvec(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise DimensionMismatch(f"vector shape {x.shape} vs matrix n={self.n}")
        return sblas.dsbmv(self.bandwidth, 1.0, self.band, x)

    def norm_inf(self) -> float:
        return float(np.abs(self.to_dense()).sum(axis=1).max())

    def dump(self, path) -> None:
        """Write stored band entries as 'row col value' lines (i <= j)."""
        with open(path, "w") as fh:
            for j in range(self.n):
                for d in range(min(self.bandwidth, j) + 1):
                    i = j - d
                    fh.write(f"{i} {j} {self.band[self.bandwidth - d, j]:.17g}\n")


@dataclass(frozen=True)
class DofMap:
    """Free-dof numbering with the clamped end dofs eliminated."""

    p: int
    n_free: int
    bandwidth: int
    element_dofs: np.ndarray      # (n_elements, p+1), -1 for eliminated dofs
    value_indices: np.ndarray     # free index of each interior node's value dof
    slope_indices: np.ndarray

    def __post_init__(self):
        self.element_dofs.setflags(write=False)
        self.value_indices.setflags(write=False)
        self.slope_indices.setflags(write=False)


def build_dof_map(n_elements: int, p: int) -> DofMap:
    if p < 3:
        raise InvalidSpec(f"element degree must be >= 3, got {p}")
    N = n_elements
    n_bub = p - 3
    node_value = np.full(N + 1, -1, dtype=np.int64)
    node_slope = np.full(N + 1, -1, dtype=np.int64)
    bubbles = np.full((N, n_bub), -1, dtype=np.int64)
    counter = 0
    for i in range(N + 1):
        if i not in (0, N):
            node_value[i] = counter
            node_slope[i] = counter + 1
            counter += 2
        if i < N:
            for m in range(n_bub):
                bubbles[i, m] = counter
                counter += 1

    element_dofs = np.empty((N, p + 1), dtype=np.int64)
    for e in range(N):
        element_dofs[e, 0] = node_value[e]
        element_dofs[e, 1] = node_slope[e]
        element_dofs[e, 2] = node_value[e + 1]
        element_dofs[e, 3] = node_slope[e + 1]
        element_dofs[e, 4:] = bubbles[e]

    bandwidth = 0
    for e in range(N):
        free = element_dofs[e][element_dofs[e] >= 0]
        if len(free) > 1:
            bandwidth = max(bandwidth, int(free.max() - free.min()))
    return DofMap(
        p=p,
        n_free=counter,
        bandwidth=bandwidth,
        element_dofs=element_dofs,
        value_indices=node_value[1:N].copy(),
        slope_indices=node_slope[1:N].copy(),
    )


def element_matrices(h: float, shapes: ShapeTable, epsilon: float,
                     a_vals: np.ndarray, b_vals: np.ndarray):
    """Local stiffness and mass matrices for one element of width h, with
    coefficient samples a_vals, b_vals at the mapped quadrature points."""
    w = shapes.rule.weights
    k2 = (shapes.d2 * w) @ shapes.d2.T
    k1 = (shapes.d1 * (w * a_vals)) @ shapes.d1.T
    k0 = (shapes.values * (w * b_vals)) @ shapes.values.T
    m0 = (shapes.values * w) @ shapes.values.T

    k_loc = (epsilon**2 / h**3) * k2 + (1.0 / h) * k1 + h * k0
    m_loc = h * m0
    scale = np.ones(shapes.p + 1)
    scale[1] = scale[3] = h
    k_loc = k_loc * scale[:, None] * scale[None, :]
    m_loc = m_loc * scale[:, None] * scale[None, :]
    return k_loc, m_loc


def assemble(mesh: Mesh, shapes: ShapeTable, coeffs: CoefficientSet):
    """Assemble (K, M, dofmap) over the mesh.

    Coefficients are sampled at the mapped quadrature points of every
    element; a(x) must stay at or above a_floor and b(x) must be
    non-negative at each sample unless allow_degenerate is set.
    """
    if shapes.p != mesh.spec.p:
        raise InvalidSpec(
            f"shape degree {shapes.p} disagrees with mesh spec degree {mesh.spec.p}"
        )
    nodes, widths = mesh.nodes, mesh.widths
    n_el = mesh.n_elements
    q = shapes.rule.points
    w = shapes.rule.weights
    eps = coeffs.epsilon

    x = nodes[:-1, None] + widths[:, None] * q[None, :]     # (n_el, nq)
    a_at = np.broadcast_to(np.asarray(coeffs.a(x), dtype=float), x.shape)
    b_at = np.broadcast_to(np.asarray(coeffs.b(x), dtype=float), x.shape)
    if not coeffs.allow_degenerate:
        tol = 1e-12 * max(1.0, abs(coeffs.a_floor))
        if np.any(a_at < coeffs.a_floor - tol):
            worst = float(a_at.min())
            raise CoefficientViolation(
                f"a(x) dips to {worst} below the certified floor {coeffs.a_floor}"
            )
        if np.any(b_at < 0.0):
            raise CoefficientViolation(f"b(x) reaches {float(b_at.min())} < 0")

    k2_ref = (shapes.d2 * w) @ shapes.d2.T
    m_ref = (shapes.values * w) @ shapes.values.T
    k1_el = np.einsum("eq,iq,kq->eik", a_at * w, shapes.d1, shapes.d1)
    k0_el = np.einsum("eq,iq,kq->eik", b_at * w, shapes.values, shapes.values)

    h = widths
    k_el = (eps**2 / h**3)[:, None, None] * k2_ref[None] \
        + (1.0 / h)[:, None, None] * k1_el \
        + h[:, None, None] * k0_el
    m_el = h[:, None, None] * m_ref[None]
    scale = np.ones((n_el, shapes.p + 1))
    scale[:, 1] = scale[:, 3] = h
    k_el *= scale[:, :, None] * scale[:, None, :]
    m_el *= scale[:, :, None] * scale[:, None, :]

    dofmap = build_dof_map(n_el, shapes.p)
    if dofmap.n_free == 0:
        raise InvalidSpec("no free dofs: mesh too small for clamped ends")
    K = SymBandMatrix(dofmap.n_free, dofmap.bandwidth)
    M = SymBandMatrix(dofmap.n_free, dofmap.bandwidth)
    for e in range(n_el):
        K.scatter(dofmap.element_dofs[e], k_el[e])
        M.scatter(dofmap.element_dofs[e], m_el[e])
    return K, M, dofmap


def energy_inner_product(K: SymBandMatrix, u: np.ndarray, v: np.ndarray) -> float:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != (K.n,) or v.shape != (K.n,):
        raise DimensionMismatch(
            f"vectors {u.shape}, {v.shape} vs matrix n={K.n}"
        )
    return float(u @ K.matvec(v))


def rayleigh_quotient(K: SymBandMatrix, M: SymBandMatrix, u: np.ndarray) -> float:
    u = np.asarray(u, dtype=float)
    if not np.any(u):
        raise ZeroVector("Rayleigh quotient of the zero vector")
    num = energy_inner_product(K, u, u)
    den = energy_inner_product(M, u, u)
    if den <= 0.0:
        raise ZeroVector(f"u^T M u = {den} is not positive")
    return num / den


@dataclass
class FEFunction:
    """A member of the C1 space, evaluable anywhere with any derivative.

    Holds full (unconstrained) coefficient arrays; clamped end dofs are zero.
    """

    mesh: Mesh
    p: int
    node_values: np.ndarray
    node_slopes: np.ndarray
    bubbles: np.ndarray = field(default=None)  # (n_elements, p-3)

    def __post_init__(self):
        n = self.mesh.n_elements
        if self.bubbles is None:
            self.bubbles = np.zeros((n, self.p - 3))
        if (len(self.node_values) != n + 1 or len(self.node_slopes) != n + 1
                or self.bubbles.shape != (n, self.p - 3)):
            raise DimensionMismatch("coefficient arrays do not match the mesh")

    @classmethod
    def from_dof_vector(cls, mesh: Mesh, dofmap: DofMap,
                        vec: np.ndarray) -> "FEFunction":
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (dofmap.n_free,):
            raise DimensionMismatch(
                f"dof vector shape {vec.shape}, expected ({dofmap.n_free},)"
            )
        n = mesh.n_elements
        padded = np.concatenate([vec, [0.0]])   # index -1 reads as 0
        values = np.zeros(n + 1)
        slopes = np.zeros(n + 1)
        values[1:n] = padded[dofmap.value_indices]
        slopes[1:n] = padded[dofmap.slope_indices]
        bubbles = padded[dofmap.element_dofs[:, 4:]] if dofmap.p > 3 \
            else np.zeros((n, 0))
        return cls(mesh=mesh, p=dofmap.p, node_values=values,
                   node_slopes=slopes, bubbles=bubbles)

    def __call__(self, x, deriv: int = 0):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        nodes = self.mesh.nodes
        e = np.clip(np.searchsorted(nodes, x, side="right") - 1,
                    0, self.mesh.n_elements - 1)
        h = self.mesh.widths[e]
        s = (x - nodes[e]) / h
        basis = hermite_basis(self.p, s, deriv)
        out = (self.node_values[e] * basis[0]
               + h * self.node_slopes[e] * basis[1]
               + self.node_values[e + 1] * basis[2]
               + h * self.node_slopes[e + 1] * basis[3])
        for m in range(self.p - 3):
            out += self.bubbles[e, m] * basis[4 + m]
        return out / h**deriv
