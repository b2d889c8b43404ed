"""Per-node differential geometry of the discretized sheet.

Everything here is derived from the position field r and the candidate normal
n: tangent vectors, the induced Lorentzian metric, Christoffel symbols (by
tangential projection of the second derivatives, not by metric derivatives),
the second fundamental form, the curvature tensor, and the residuals of the
two structure identities that tie them together.  All inner products are the
signature (-,+,...,+) Minkowski form.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .grid import FieldSet, ParameterGrid, ChartMap, _node_str, finite_difference, mixed_second


class GeometryError(ValueError):
    """Base for degenerate-geometry failures."""


class DegenerateMetricError(GeometryError):
    pass


class SignatureError(GeometryError):
    pass


class DegenerateFrameError(GeometryError):
    pass


def _signs(dim: int) -> np.ndarray:
    s = np.ones(dim)
    s[0] = -1.0
    return s


def minkowski_dot(a: np.ndarray, b: np.ndarray) -> np.ndarray | float:
    """Signature (-,+,...,+) inner product along the last axis.

    Broadcasts over leading axes; scalar for plain vectors.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape[-1] != b.shape[-1]:
        raise ValueError(f"vector length mismatch: {a.shape[-1]} vs {b.shape[-1]}")
    prod = a * b
    out = np.sum(prod[..., 1:], axis=-1) - prod[..., 0]
    if out.ndim == 0:
        return float(out)
    return out


@dataclass
class MetricData:
    """Induced metric quantities per node."""

    tangents: np.ndarray    # (*counts, m+1, N+1), tangents[..., j, :] = dr/du_j
    g: np.ndarray           # (*counts, m+1, m+1)
    g_inv: np.ndarray       # (*counts, m+1, m+1)
    det_g: np.ndarray       # (*counts,)
    sqrt_neg_g: np.ndarray  # (*counts,)


def metric(fields: FieldSet, grid: ParameterGrid, singular_tol: float = 1e-10) -> MetricData:
    """Tangents by finite differences, g_jk by Minkowski products, inverse per node.

    Raises DegenerateMetricError when |det g| < singular_tol and SignatureError
    when det g > 0 (the sheet lost its time-like direction), naming the node.
    """
    tangents = np.stack(
        [finite_difference(fields.r, grid, axis=j) for j in range(grid.ndim)], axis=-2
    )
    signs = _signs(fields.r.shape[-1])
    g = np.einsum("...ja,...ka,a->...jk", tangents, tangents, signs)
    det = np.linalg.det(g)
    near_singular = np.abs(det) < singular_tol
    if near_singular.any():
        node = tuple(np.argwhere(near_singular)[0])
        raise DegenerateMetricError(f"metric determinant below {singular_tol} at node {_node_str(node)}")
    wrong_sign = det > 0
    if wrong_sign.any():
        node = tuple(np.argwhere(wrong_sign)[0])
        raise SignatureError(f"det g > 0 at node {_node_str(node)}: no time-like direction")
    return MetricData(
        tangents=tangents,
        g=g,
        g_inv=np.linalg.inv(g),
        det_g=det,
        sqrt_neg_g=np.sqrt(-det),
    )


@dataclass
class NormalFrame:
    """Orthonormal space-like normal frame and the candidate normal's projection."""

    vectors: np.ndarray   # (*counts, s, N+1), minkowski-orthonormal, orthogonal to tangents
    n_normal: np.ndarray  # (*counts, N+1), projection of fields.n onto the normal space


def normal_frame(
    metric_data: MetricData,
    fields: FieldSet,
    null_tol: float = 1e-8,
    skip_tol: float = 1e-8,
) -> NormalFrame:
    """Gram-Schmidt normal frame seeded from the canonical basis e_0..e_N.

    The tangent span is pseudo-orthonormalized first; candidate basis vectors
    are then projected onto its complement in fixed order.  Candidates whose
    residual is (Euclidean) negligible are skipped as linearly dependent; a
    non-negligible residual with |v.v| below null_tol means the complement
    contains a null direction and the frame is degenerate.
    """
    tangents = metric_data.tangents
    counts = tangents.shape[:-2]
    n_par = tangents.shape[-2]
    dim = tangents.shape[-1]
    s_normals = dim - n_par
    if s_normals < 1:
        raise DegenerateFrameError("no normal directions: ambient dimension too small")
    signs = _signs(dim)

    # Pseudo-orthonormal tangent basis tau_a with tau_a . tau_a = sigma_a = +-1.
    tau = np.zeros(counts + (n_par, dim))
    sigma = np.zeros(counts + (n_par,))
    for a in range(n_par):
        w = tangents[..., a, :].copy()
        for b in range(a):
            coef = np.einsum("...a,...a,a->...", w, tau[..., b, :], signs) * sigma[..., b]
            w -= coef[..., None] * tau[..., b, :]
        nu = np.einsum("...a,...a,a->...", w, w, signs)
        bad = np.abs(nu) < null_tol
        if bad.any():
            node = tuple(np.argwhere(bad)[0][: len(counts)])
            raise DegenerateFrameError(
                f"null direction in tangent span at node {_node_str(node)}"
            )
        sigma[..., a] = np.sign(nu)
        tau[..., a, :] = w / np.sqrt(np.abs(nu))[..., None]

    frame = np.zeros(counts + (s_normals, dim))
    filled = np.zeros(counts, dtype=np.intp)
    for i in range(dim):
        active = filled < s_normals
        if not active.any():
            break
        v = np.zeros(counts + (dim,))
        v[..., i] = 1.0
        for a in range(n_par):
            coef = sigma[..., a] * tau[..., a, i] * signs[i]
            v -= coef[..., None] * tau[..., a, :]
        # Unfilled frame slots are zero rows, so projecting against all s
        # slots is a no-op for them.
        for q in range(s_normals):
            coef = np.einsum("...a,...a,a->...", v, frame[..., q, :], signs)
            v -= coef[..., None] * frame[..., q, :]
        eucl = np.einsum("...a,...a->...", v, v)
        nu = np.einsum("...a,...a,a->...", v, v, signs)
        skip = eucl < skip_tol**2
        candidate = active & ~skip
        null_bad = candidate & (np.abs(nu) < null_tol)
        if null_bad.any():
            node = tuple(np.argwhere(null_bad)[0])
            raise DegenerateFrameError(
                f"null direction in the tangent complement at node {_node_str(node)}"
            )
        not_spacelike = candidate & (nu < 0)
        if not_spacelike.any():
            node = tuple(np.argwhere(not_spacelike)[0])
            raise DegenerateFrameError(
                f"time-like direction in the tangent complement at node {_node_str(node)}"
            )
        if candidate.any():
            unit = v / np.sqrt(np.where(candidate, nu, 1.0))[..., None]
            where = np.nonzero(candidate)
            frame[where + (filled[where],)] = unit[where]
            filled[where] += 1
    incomplete = filled < s_normals
    if incomplete.any():
        node = tuple(np.argwhere(incomplete)[0])
        raise DegenerateFrameError(f"normal frame incomplete at node {_node_str(node)}")

    coeffs = np.einsum("...a,...qa,a->...q", fields.n, frame, signs)
    n_normal = np.einsum("...q,...qa->...a", coeffs, frame)
    return NormalFrame(vectors=frame, n_normal=n_normal)


def second_derivatives(r: np.ndarray, grid: ParameterGrid) -> np.ndarray:
    """d^2 r / du_j du_k per node, shape (*counts, m+1, m+1, N+1).

    Mixed entries are computed once for j < k and mirrored, so the array is
    symmetric in (j, k) bit-for-bit.
    """
    nd = grid.ndim
    d2 = np.empty(grid.counts + (nd, nd) + r.shape[grid.ndim :], dtype=float)
    for j in range(nd):
        for k in range(j, nd):
            val = mixed_second(r, grid, j, k)
            d2[..., j, k, :] = val
            d2[..., k, j, :] = val
    return d2


def christoffel(d2r: np.ndarray, metric_data: MetricData) -> np.ndarray:
    """Christoffel symbols as the tangential projection of d^2 r.

    Gamma^l_jk = g^{ls} (d^2 r/du_j du_k . g_s); returned with index order
    [..., l, j, k], symmetric in (j, k).
    """
    signs = _signs(d2r.shape[-1])
    proj = np.einsum("...jka,...sa,a->...jks", d2r, metric_data.tangents, signs)
    return np.einsum("...ls,...jks->...ljk", metric_data.g_inv, proj)


def second_fundamental_form(
    d2r: np.ndarray,
    normal: np.ndarray,
    metric_data: MetricData,
    unit_tol: float = 1e-8,
) -> tuple[np.ndarray, np.ndarray]:
    """b_jk = d^2 r/du_j du_k . n and the raised form b^l_j = b_jk g^{kl}.

    The normal must be unit to within unit_tol in the Minkowski norm.
    """
    signs = _signs(d2r.shape[-1])
    nn = np.einsum("...a,...a,a->...", normal, normal, signs)
    off = np.abs(nn - 1.0) > unit_tol
    if off.any():
        node = tuple(np.argwhere(off)[0])
        raise ValueError(f"normal is not unit at node {_node_str(node)} (n.n = {nn[tuple(np.argwhere(off)[0])]:.6g})")
    b, b_up = _fundamental_form_raw(d2r, normal, metric_data)
    return b, b_up


def _fundamental_form_raw(
    d2r: np.ndarray, normal: np.ndarray, metric_data: MetricData
) -> tuple[np.ndarray, np.ndarray]:
    # b is linear in the normal; no unit check so penalized candidates work too.
    signs = _signs(d2r.shape[-1])
    b = np.einsum("...jka,...a,a->...jk", d2r, normal, signs)
    b_up = np.einsum("...jk,...kl->...lj", b, metric_data.g_inv)
    return b, b_up


def riemann(gamma: np.ndarray, grid: ParameterGrid) -> np.ndarray:
    """Curvature tensor from the connection coefficients.

    R^l_ijk = d Gamma^l_jk/du_i - d Gamma^l_ik/du_j
              + Gamma^p_jk Gamma^l_pi - Gamma^p_ik Gamma^l_pj,
    returned with index order [..., l, i, j, k].  Computed as W - W.swap(i, j),
    so the antisymmetry in (i, j) is exact.
    """
    dgamma = np.stack(
        [finite_difference(gamma, grid, axis=i) for i in range(grid.ndim)], axis=-4
    )
    # dgamma[..., i, l, j, k] -> half[..., l, i, j, k]
    half = np.swapaxes(dgamma, -4, -3)
    half = half + np.einsum("...pjk,...lpi->...lijk", gamma, gamma)
    return half - np.swapaxes(half, -3, -2)


def gauss_residual(riemann_tensor: np.ndarray, b: np.ndarray, b_up: np.ndarray) -> float:
    """Max-norm residual of b_jk b^l_i - b_ik b^l_j - R^l_ijk over nodes and indices.

    Meaningful in codimension one, where the single normal carries all of b.
    """
    lhs = np.einsum("...jk,...li->...lijk", b, b_up)
    rhs = np.einsum("...ik,...lj->...lijk", b, b_up) + riemann_tensor
    return float(np.max(np.abs(lhs - rhs)))


def weingarten_residual(
    fields: FieldSet,
    grid: ParameterGrid,
    b_up: np.ndarray,
    metric_data: MetricData,
    frame: NormalFrame,
) -> tuple[float, np.ndarray]:
    """Residual of dn/du_j = -b^l_j dr/du_l + e^q_j n_hat_q, plus the e^q_j.

    Returns the max Euclidean norm of the per-node, per-direction residual
    vector and the normal-connection coefficients e[..., j, q].
    """
    signs = _signs(fields.r.shape[-1])
    dn = np.stack(
        [finite_difference(fields.n, grid, axis=j) for j in range(grid.ndim)], axis=-2
    )
    e = np.einsum("...ja,...qa,a->...jq", dn, frame.vectors, signs)
    model = -np.einsum("...lj,...la->...ja", b_up, metric_data.tangents)
    model += np.einsum("...jq,...qa->...ja", e, frame.vectors)
    resid = dn - model
    max_norm = float(np.sqrt(np.einsum("...ja,...ja->...j", resid, resid).max()))
    return max_norm, e


@dataclass
class ChartMetric:
    """Chart-induced metric U_ij and its determinant magnitude per chart node."""

    U_ij: np.ndarray    # (*chart counts, 4, 4)
    U: np.ndarray       # (*chart counts,)
    sqrt_U: np.ndarray  # (*chart counts,)


def chart_metric(chart: ChartMap) -> ChartMetric:
    """U_ij = du/dx_i . du/dx_j with the Euclidean dot on parameter space."""
    du = chart.derivatives()
    U_ij = np.einsum("...ia,...ja->...ij", du, du)
    U = np.abs(np.linalg.det(U_ij))
    return ChartMetric(U_ij=U_ij, U=U, sqrt_U=np.sqrt(U))


@dataclass
class GeometryCache:
    """All per-node tensors needed by the energy functionals and identity checks.

    The fundamental form is taken along the stored candidate normal fields.n
    as-is; pass require_unit_normal=True to build_geometry to enforce the
    unit-normal precondition of the standalone operation.
    """

    metric: MetricData
    d2r: np.ndarray
    gamma: np.ndarray
    b: np.ndarray
    b_up: np.ndarray
    dphi: np.ndarray
    riemann: Optional[np.ndarray] = None
    frame: Optional[NormalFrame] = None

    @property
    def tangents(self) -> np.ndarray:
        return self.metric.tangents

    @property
    def g(self) -> np.ndarray:
        return self.metric.g

    @property
    def g_inv(self) -> np.ndarray:
        return self.metric.g_inv

    @property
    def sqrt_neg_g(self) -> np.ndarray:
        return self.metric.sqrt_neg_g


def build_geometry(
    fields: FieldSet,
    grid: ParameterGrid,
    with_riemann: bool = False,
    with_frame: bool = False,
    require_unit_normal: bool = False,
    singular_tol: float = 1e-10,
) -> GeometryCache:
    """Assemble the immutable geometry cache for a field configuration."""
    md = metric(fields, grid, singular_tol=singular_tol)
    d2r = second_derivatives(fields.r, grid)
    gamma = christoffel(d2r, md)
    if require_unit_normal:
        b, b_up = second_fundamental_form(d2r, fields.n, md)
    else:
        b, b_up = _fundamental_form_raw(d2r, fields.n, md)
    dphi = np.stack(
        [finite_difference(fields.phi, grid, axis=j) for j in range(grid.ndim)], axis=-1
    )
    cache = GeometryCache(metric=md, d2r=d2r, gamma=gamma, b=b, b_up=b_up, dphi=dphi)
    if with_riemann:
        cache.riemann = riemann(gamma, grid)
    if with_frame:
        cache.frame = normal_frame(md, fields)
    return cache
