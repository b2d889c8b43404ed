"""Scalar functionals of the sheet: curvature and amplitude energies, the
penalized functional, and the chart-weighted action with multiplier terms.

All integrals are composite trapezoid quadrature over the parameter grid
(matching the second-order stencils), except the chart-weighted forms which
integrate over the lab-frame chart grid.  The reduced action J and the
penalized J_K carry the volume weight sqrt(-g) alone; the chart-weighted
action additionally carries sqrt(U).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .grid import ChartMap, FieldSet, ParameterGrid, _node_str, finite_difference, interpolate
from .geometry import (
    ChartMetric,
    GeometryCache,
    _signs,
    build_geometry,
    chart_metric,
    minkowski_dot,
)


class NonFiniteValueError(ValueError):
    pass


class SuperluminalMotionError(ValueError):
    pass


@dataclass(frozen=True)
class QuadratureRule:
    """Composite trapezoid weights; per-node weight is the per-axis product."""

    axis_weights: tuple[np.ndarray, ...]
    node_weights: np.ndarray

    @classmethod
    def from_grid(cls, grid: ParameterGrid) -> "QuadratureRule":
        axis_w = []
        for axis in range(grid.ndim):
            h = grid.spacings[axis]
            w = np.full(grid.counts[axis], h)
            w[0] = w[-1] = 0.5 * h
            axis_w.append(w)
        node_w = axis_w[0]
        for w in axis_w[1:]:
            node_w = np.multiply.outer(node_w, w)
        return cls(axis_weights=tuple(axis_w), node_weights=node_w)


@lru_cache(maxsize=64)
def _rule(grid: ParameterGrid) -> QuadratureRule:
    return QuadratureRule.from_grid(grid)


def quadrature(values: np.ndarray, grid: ParameterGrid) -> float:
    """Composite trapezoid integral over the full grid box."""
    if values.shape != grid.counts:
        raise ValueError("integrand shape does not match grid counts")
    bad = ~np.isfinite(values)
    if bad.any():
        node = tuple(np.argwhere(bad)[0])
        raise NonFiniteValueError(f"non-finite integrand at node {_node_str(node)}")
    return float(np.sum(values * _rule(grid).node_weights))


def slice_masses(values: np.ndarray, grid: ParameterGrid) -> np.ndarray:
    """Spatial integral over D_1 per u_0 slice; returns shape (counts[0],)."""
    rule = _rule(grid)
    w = np.ones(())
    for axw in rule.axis_weights[1:]:
        w = np.multiply.outer(w, axw)
    return np.sum(values * w, axis=tuple(range(1, grid.ndim)))


def time_integral(values_t: np.ndarray, grid: ParameterGrid) -> float:
    """Trapezoid integral of a per-slice quantity along axis 0."""
    return float(np.sum(values_t * _rule(grid).axis_weights[0]))


@dataclass
class EnergyBreakdown:
    """Itemized values of the energy pieces; total_JK = total_J + (K/2) * penalties."""

    kinetic: float
    j1_curvature: float
    j2_dirichlet: float
    j2_christoffel: float
    penalty_norm: float
    penalty_orth: float
    penalty_unit: float
    total_J: float
    total_JK: float
    K: float

    CSV_FIELDS = (
        "K",
        "j1",
        "j2_dirichlet",
        "j2_christoffel",
        "penalty_norm",
        "penalty_orth",
        "penalty_unit",
        "total_J",
        "total_JK",
    )

    @staticmethod
    def csv_header() -> str:
        return ",".join(EnergyBreakdown.CSV_FIELDS)

    def csv_row(self) -> str:
        vals = (
            self.K,
            self.j1_curvature,
            self.j2_dirichlet,
            self.j2_christoffel,
            self.penalty_norm,
            self.penalty_orth,
            self.penalty_unit,
            self.total_J,
            self.total_JK,
        )
        return ",".join(f"{v:.17g}" for v in vals)


def _curvature_density(geom: GeometryCache) -> np.ndarray:
    """g^{jk} b_jl b^l_k per node."""
    return np.einsum("...jk,...jl,...lk->...", geom.g_inv, geom.b, geom.b_up)


def j1_curvature_energy(fields: FieldSet, geom: GeometryCache, grid: ParameterGrid) -> float:
    """(1/2) integral of |phi|^2 g^{jk} b_jl b^l_k sqrt(-g)."""
    dens = np.abs(fields.phi) ** 2 * _curvature_density(geom) * geom.sqrt_neg_g
    return 0.5 * quadrature(dens, grid)


def s_tensor(phi: np.ndarray, geom: GeometryCache, grid: ParameterGrid) -> np.ndarray:
    """The mixed amplitude/connection tensor, index order [..., l, i, j, k].

    S^l_ijk = (dphi/du_j)(dphi*/du_i) delta_kl + (dphi/du_i) phi* Gamma^l_jk.
    """
    dphi = np.stack([finite_difference(phi, grid, axis=j) for j in range(grid.ndim)], axis=-1)
    nd = grid.ndim
    eye = np.eye(nd)
    term1 = np.einsum("...j,...i,kl->...lijk", dphi, np.conj(dphi), eye)
    term2 = np.einsum("...i,...,...ljk->...lijk", dphi, np.conj(phi), geom.gamma.astype(complex))
    return term1 + term2


def s_tensor_contracted(phi: np.ndarray, geom: GeometryCache, grid: ParameterGrid) -> np.ndarray:
    """g^{jk} Re[S^l_jlk] per node, the contracted form behind the second energy part."""
    s = s_tensor(phi, geom, grid)
    traced = np.einsum("...ljlk->...jk", s)
    return np.einsum("...jk,...jk->...", geom.g_inv, traced).real


def j2_energy(phi: np.ndarray, geom: GeometryCache, grid: ParameterGrid) -> tuple[float, float]:
    """Amplitude energy split into its gradient and connection pieces.

    dirichlet   = (1/2) int g^{jk} dphi/du_j dphi*/du_k sqrt(-g)
    christoffel = (1/4) int (dphi/du_l phi* + dphi*/du_l phi) Gamma^l_jk g^{jk} sqrt(-g)
    """
    dphi = np.stack([finite_difference(phi, grid, axis=j) for j in range(grid.ndim)], axis=-1)
    dens_d = np.einsum("...jk,...j,...k->...", geom.g_inv, dphi, np.conj(dphi)).real
    dirichlet = 0.5 * quadrature(dens_d * geom.sqrt_neg_g, grid)

    re_pair = 2.0 * (dphi * np.conj(phi)[..., None]).real  # dphi_l phi* + dphi*_l phi
    gamma_c = np.einsum("...ljk,...jk->...l", geom.gamma, geom.g_inv)
    dens_c = np.einsum("...l,...l->...", re_pair, gamma_c)
    christoffel = 0.25 * quadrature(dens_c * geom.sqrt_neg_g, grid)
    return dirichlet, christoffel


def reduced_action(fields: FieldSet, geom: GeometryCache, grid: ParameterGrid) -> float:
    """J = J_1 + J_2 in parameter coordinates (no chart weight, no kinetic term)."""
    j1 = j1_curvature_energy(fields, geom, grid)
    j2d, j2c = j2_energy(fields.phi, geom, grid)
    return j1 + j2d + j2c


def penalty_terms(fields: FieldSet, geom: GeometryCache, grid: ParameterGrid) -> tuple[float, float, float]:
    """The three quadratic constraint measures, without the K/2 prefactor.

    norm -- int_0^T (int_{D_1} |phi|^2 sqrt(-g) du - 1)^2 dt
    orth -- sum_j int_D (dr/du_j . n)^2 sqrt(-g) du dt
    unit -- int_D (n.n - 1)^2 sqrt(-g) du dt

    The volume weight is sqrt(-g) uniformly in all three terms.
    """
    mass = slice_masses(np.abs(fields.phi) ** 2 * geom.sqrt_neg_g, grid)
    norm = time_integral((mass - 1.0) ** 2, grid)

    signs = _signs(fields.r.shape[-1])
    dots = np.einsum("...ja,...a,a->...j", geom.tangents, fields.n, signs)
    orth = quadrature(np.sum(dots**2, axis=-1) * geom.sqrt_neg_g, grid)

    nn = minkowski_dot(fields.n, fields.n)
    unit = quadrature((nn - 1.0) ** 2 * geom.sqrt_neg_g, grid)
    return norm, orth, unit


def assemble_JK(
    fields: FieldSet,
    grid: ParameterGrid,
    K: float,
    geom: GeometryCache | None = None,
    singular_tol: float = 1e-10,
) -> EnergyBreakdown:
    """Full breakdown of J_K = J + (K/2)(norm + orth + unit).

    singular_tol is the metric-degeneracy threshold below which the
    configuration is rejected as outside the admissible set.
    """
    if K < 0:
        raise ValueError(f"penalty weight K must be >= 0, got {K}")
    if geom is None:
        geom = build_geometry(fields, grid, singular_tol=singular_tol)
    j1 = j1_curvature_energy(fields, geom, grid)
    j2d, j2c = j2_energy(fields.phi, geom, grid)
    p_norm, p_orth, p_unit = penalty_terms(fields, geom, grid)
    total_J = j1 + j2d + j2c
    total_JK = total_J + 0.5 * K * (p_norm + p_orth + p_unit)
    return EnergyBreakdown(
        kinetic=0.0,
        j1_curvature=j1,
        j2_dirichlet=j2d,
        j2_christoffel=j2c,
        penalty_norm=p_norm,
        penalty_orth=p_orth,
        penalty_unit=p_unit,
        total_J=total_J,
        total_JK=total_JK,
        K=float(K),
    )


def constraint_residuals(fields: FieldSet, grid: ParameterGrid, geom: GeometryCache | None = None) -> tuple[float, float, float]:
    """Un-squared constraint measures used for the 1/K decay study.

    norm residual -- int_0^T |int_{D_1} |phi|^2 sqrt(-g) du - 1| dt
    orth residual -- L2 norm of dr/du_j . n over D
    unit residual -- L2 norm of (n.n - 1) over D
    """
    if geom is None:
        geom = build_geometry(fields, grid)
    mass = slice_masses(np.abs(fields.phi) ** 2 * geom.sqrt_neg_g, grid)
    res_norm = time_integral(np.abs(mass - 1.0), grid)
    _, p_orth, p_unit = penalty_terms(fields, geom, grid)
    return res_norm, float(np.sqrt(p_orth)), float(np.sqrt(p_unit))


def _chart_fields(
    fields: FieldSet,
    grid: ParameterGrid,
    chart: ChartMap,
    geom: GeometryCache,
) -> dict[str, np.ndarray]:
    """Interpolate the per-node densities onto the chart image points."""
    pts = chart.u
    return {
        "phi_sq": interpolate(grid, np.abs(fields.phi) ** 2, pts),
        "g": interpolate(grid, geom.g, pts),
        "sqrt_neg_g": interpolate(grid, geom.sqrt_neg_g, pts),
    }


def kinetic_energy(
    fields: FieldSet,
    grid: ParameterGrid,
    chart: ChartMap,
    cmetric: ChartMetric,
    mass: float,
    c: float,
) -> float:
    """m c int |phi|^2 sqrt(-g_jk du_j/dt du_k/dt) sqrt(-g) sqrt(U) over the chart.

    The motion must be time-like: -g_jk udot_j udot_k > 0 at every chart node.
    """
    geom = build_geometry(fields, grid)
    at = _chart_fields(fields, grid, chart, geom)
    udot = chart.derivatives()[..., 0, :]
    speed_sq = -np.einsum("...jk,...j,...k->...", at["g"], udot, udot)
    bad = speed_sq <= 0.0
    if bad.any():
        node = tuple(np.argwhere(bad)[0])
        raise SuperluminalMotionError(
            f"-g_jk udot_j udot_k <= 0 at chart node {_node_str(node)}: motion is not time-like"
        )
    integrand = mass * c * at["phi_sq"] * np.sqrt(speed_sq) * at["sqrt_neg_g"] * cmetric.sqrt_U
    return quadrature(integrand, chart.grid)


def full_action(
    fields: FieldSet,
    grid: ParameterGrid,
    chart: ChartMap,
    mass: float,
    c: float,
    E: float | np.ndarray = 0.0,
    lam_tangent: float | np.ndarray = 0.0,
    lam_unit: float | np.ndarray = 0.0,
) -> float:
    """Chart-weighted action with multiplier terms, for evaluation only.

    kinetic + J_1 + J_2 (each weighted by sqrt(-g) sqrt(U) over the chart)
    - int E(t) (int |phi|^2 sqrt(-g) sqrt(U) dx - 1) dt
    + sum_j int lam_j (dr/du_j . n) sqrt(-g) sqrt(U)
    + int lam_unit (n.n - 1) sqrt(-g) sqrt(U)

    E may be a scalar or a per-time-slice array; lam_tangent a scalar or a
    length m+1 vector; lam_unit a scalar or per-chart-node array.  None of the
    multipliers are ever optimized over.
    """
    geom = build_geometry(fields, grid)
    cmetric = chart_metric(chart)
    kin = kinetic_energy(fields, grid, chart, cmetric, mass, c)

    pts = chart.u
    weight = interpolate(grid, geom.sqrt_neg_g, pts) * cmetric.sqrt_U
    phi_sq = interpolate(grid, np.abs(fields.phi) ** 2, pts)

    dphi = np.stack([finite_difference(fields.phi, grid, axis=j) for j in range(grid.ndim)], axis=-1)
    g_inv_c = interpolate(grid, geom.g_inv, pts)
    dphi_c = interpolate(grid, dphi, pts)
    phi_c = interpolate(grid, fields.phi, pts)
    gamma_c = interpolate(grid, geom.gamma, pts)

    curv = interpolate(grid, _curvature_density(geom), pts)
    j1 = 0.5 * quadrature(phi_sq * curv * weight, chart.grid)

    dens_d = np.einsum("...jk,...j,...k->...", g_inv_c, dphi_c, np.conj(dphi_c)).real
    j2d = 0.5 * quadrature(dens_d * weight, chart.grid)

    re_pair = 2.0 * (dphi_c * np.conj(phi_c)[..., None]).real
    gamma_tr = np.einsum("...ljk,...jk->...l", gamma_c, g_inv_c)
    dens_c = np.einsum("...l,...l->...", re_pair, gamma_tr)
    j2c = 0.25 * quadrature(dens_c * weight, chart.grid)

    # Normalization multiplier: spatial mass per lab-time slice on the chart.
    rule = _rule(chart.grid)
    w_sp = np.ones(())
    for axw in rule.axis_weights[1:]:
        w_sp = np.multiply.outer(w_sp, axw)
    mass_t = np.sum(phi_sq * weight * w_sp, axis=(1, 2, 3))
    e_arr = np.broadcast_to(np.asarray(E, dtype=float), mass_t.shape)
    e_term = -float(np.sum(e_arr * (mass_t - 1.0) * rule.axis_weights[0]))

    signs = _signs(fields.r.shape[-1])
    dots = np.einsum("...ja,...a,a->...j", geom.tangents, fields.n, signs)
    dots_c = interpolate(grid, dots, pts)
    lam_t = np.broadcast_to(np.asarray(lam_tangent, dtype=float), dots_c.shape[-1:])
    orth_term = quadrature(np.einsum("...j,j->...", dots_c, lam_t) * weight, chart.grid)

    nn = minkowski_dot(fields.n, fields.n)
    nn_c = interpolate(grid, np.asarray(nn), pts)
    lam_u = np.asarray(lam_unit, dtype=float)
    unit_term = quadrature(lam_u * (nn_c - 1.0) * weight, chart.grid)

    return kin + j1 + j2d + j2c + e_term + orth_term + unit_term
