"""Penalty-method minimization of J_K over the interior field degrees of freedom.

The gradient contract is per-DOF central finite differences of the assembled
J_K; descent is plain Armijo-backtracking gradient steps.  A continuation
sweep drives K upward with warm starts and fits the log-log slope of the
constraint residuals against K, which should sit near -1.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field as dc_field
from typing import Optional, Sequence

import numpy as np

from .grid import FieldSet, ParameterGrid, _node_str, apply_boundary, finite_difference
from .geometry import GeometryError, build_geometry, minkowski_dot, _signs
from .energy import NonFiniteValueError, assemble_JK, constraint_residuals, slice_masses

logger = logging.getLogger(__name__)

THEOREM_M_RANGE = (5, 8)


class GradientProbeError(RuntimeError):
    pass


@dataclass(frozen=True)
class PenaltyConfig:
    """Knobs for the descent loop and the K continuation."""

    k_schedule: tuple[float, ...] = (10.0, 100.0, 1000.0, 10000.0)
    step_init: float = 0.1
    armijo_c: float = 1e-4
    backtrack: float = 0.5
    grad_tol: float = 1e-6
    max_iters: int = 5000
    fd_step: float = 1e-6
    singular_tol: float = 1e-10
    optimize_fields: tuple[str, ...] = ("r", "phi", "n")

    def __post_init__(self):
        ks = self.k_schedule
        if not ks or any(b <= a for a, b in zip(ks, ks[1:])) or ks[0] <= 0:
            raise ValueError("k_schedule must be positive and strictly increasing")
        for name in ("step_init", "armijo_c", "backtrack", "grad_tol", "fd_step"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        if not 0 < self.armijo_c < 1 or not 0 < self.backtrack < 1:
            raise ValueError("armijo_c and backtrack must lie in (0, 1)")
        bad = set(self.optimize_fields) - {"r", "phi", "n"}
        if bad or not self.optimize_fields:
            raise ValueError(f"optimize_fields must be a nonempty subset of r, phi, n (got {self.optimize_fields})")


@dataclass
class KRecord:
    """Outcome of one fixed-K minimization."""

    K: float
    iterations: int
    total_J: float
    total_JK: float
    res_norm: float
    res_orth: float
    res_unit: float
    grad_norm: float
    stalled: bool
    converged: bool
    start_total_J: float = float("nan")
    min_slice_mass: float = float("nan")
    min_normal_sq: float = float("nan")
    jk_trace: list[float] = dc_field(default_factory=list)

    CSV_FIELDS = (
        "K",
        "iterations",
        "total_J",
        "total_JK",
        "res_norm",
        "res_orth",
        "res_unit",
        "grad_norm",
        "stalled",
    )

    def csv_row(self) -> str:
        vals = [
            f"{self.K:.17g}",
            str(self.iterations),
            f"{self.total_J:.17g}",
            f"{self.total_JK:.17g}",
            f"{self.res_norm:.17g}",
            f"{self.res_orth:.17g}",
            f"{self.res_unit:.17g}",
            f"{self.grad_norm:.17g}",
            "1" if self.stalled else "0",
        ]
        return ",".join(vals)


@dataclass
class MinimizeReport:
    """Per-K records plus the fitted residual decay slopes."""

    records: list[KRecord]
    slopes: dict[str, Optional[float]]
    theorem_range_notice: Optional[str] = None
    final_fields: Optional[FieldSet] = None

    @property
    def stalled(self) -> bool:
        return any(rec.stalled for rec in self.records)

    @staticmethod
    def csv_header() -> str:
        return ",".join(KRecord.CSV_FIELDS)

    def csv_rows(self) -> list[str]:
        return [rec.csv_row() for rec in self.records]

    def summary_line(self) -> str:
        parts = []
        for name in ("norm", "orth", "unit"):
            s = self.slopes.get(name)
            parts.append(f"{name}={s:.17g}" if s is not None else f"{name}=skipped")
        return "slopes: " + " ".join(parts)


def fit_loglog_slope(params: Sequence[float], residuals: Sequence[float]) -> float:
    """Least-squares slope of log residual against log parameter."""
    x = np.log10(np.asarray(params, dtype=float))
    y = np.log10(np.asarray(residuals, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


def _dof_entries(
    grid: ParameterGrid,
    n_components: int,
    kinds: tuple[str, ...] = ("r", "phi", "n"),
) -> list[tuple[str, tuple[int, ...], int]]:
    """Deterministic DOF order: r block, phi block (Re, Im), n block.

    Within a block, interior nodes run row-major; within a node, vector
    components run in index order.  ``kinds`` restricts the blocks (used by
    scenarios that relax only a subset of the fields).
    """
    interior_nodes = [tuple(idx) for idx in np.argwhere(grid.interior_mask)]
    entries: list[tuple[str, tuple[int, ...], int]] = []
    if "r" in kinds:
        for node in interior_nodes:
            for comp in range(n_components):
                entries.append(("r", node, comp))
    if "phi" in kinds:
        for node in interior_nodes:
            entries.append(("phi_re", node, 0))
            entries.append(("phi_im", node, 0))
    if "n" in kinds:
        for node in interior_nodes:
            for comp in range(n_components):
                entries.append(("n", node, comp))
    return entries


def pack_interior(fields: FieldSet, grid: ParameterGrid) -> np.ndarray:
    """Flatten the interior DOFs in the canonical order."""
    interior = grid.interior_mask
    r_block = fields.r[interior].ravel()
    phi_int = fields.phi[interior]
    phi_block = np.stack([phi_int.real, phi_int.imag], axis=-1).ravel()
    n_block = fields.n[interior].ravel()
    return np.concatenate([r_block, phi_block, n_block])


def _add_scaled(fields: FieldSet, direction: FieldSet, alpha: float, grid: ParameterGrid) -> FieldSet:
    out = fields.copy()
    interior = grid.interior_mask
    out.r[interior] += alpha * direction.r[interior]
    out.phi[interior] += alpha * direction.phi[interior]
    out.n[interior] += alpha * direction.n[interior]
    return out


def _clamp_phi(fields: FieldSet) -> None:
    """Radial projection back to |phi|^2 >= eps, preserving phase."""
    mag_sq = np.abs(fields.phi) ** 2
    low = mag_sq < fields.eps
    if low.any():
        target = np.sqrt(fields.eps)
        mag = np.sqrt(mag_sq[low])
        vals = fields.phi[low]
        fields.phi[low] = np.where(mag > 0, vals * (target / np.where(mag > 0, mag, 1.0)), target)


def gradient_JK(
    fields: FieldSet,
    grid: ParameterGrid,
    K: float,
    fd_step: float = 1e-6,
    singular_tol: float = 1e-10,
    kinds: tuple[str, ...] = ("r", "phi", "n"),
) -> FieldSet:
    """Central finite-difference gradient of J_K over the interior DOFs.

    Returned as a FieldSet-shaped object: boundary entries are zero, and the
    phi slot carries dJ/d(Re phi) + i dJ/d(Im phi).  ``kinds`` restricts the
    probed blocks; entries outside them stay zero.
    """
    work = fields.copy()
    grad = FieldSet(
        r=np.zeros_like(fields.r),
        phi=np.zeros_like(fields.phi),
        n=np.zeros_like(fields.n),
        r_bc=np.zeros_like(fields.r_bc),
        phi_bc=np.zeros_like(fields.phi_bc),
        eps=fields.eps,
    )

    def value() -> float:
        return assemble_JK(work, grid, K, singular_tol=singular_tol).total_JK

    for kind, node, comp in _dof_entries(grid, fields.r.shape[-1], kinds):
        if kind == "r":
            arr, idx = work.r, node + (comp,)
        elif kind == "n":
            arr, idx = work.n, node + (comp,)
        else:
            arr, idx = work.phi, node
        old = arr[idx]
        base = old.real if kind != "phi_im" else old.imag
        h = fd_step * (1.0 + abs(base))
        delta = h if kind != "phi_im" else 1j * h
        try:
            arr[idx] = old + delta
            jp = value()
            arr[idx] = old - delta
            jm = value()
        except (GeometryError, NonFiniteValueError) as exc:
            raise GradientProbeError(
                f"J_K not evaluable while probing {kind} at node {_node_str(node)} component {comp}: {exc}"
            ) from exc
        finally:
            arr[idx] = old
        if not (np.isfinite(jp) and np.isfinite(jm)):
            raise GradientProbeError(
                f"non-finite J_K while probing {kind} at node {_node_str(node)} component {comp}"
            )
        d = (jp - jm) / (2.0 * h)
        if kind == "r":
            grad.r[idx] = d
        elif kind == "n":
            grad.n[idx] = d
        elif kind == "phi_re":
            grad.phi[idx] += d
        else:
            grad.phi[idx] += 1j * d
    return grad


def minimize_fixed_K(
    fields: FieldSet,
    grid: ParameterGrid,
    K: float,
    cfg: PenaltyConfig,
) -> tuple[FieldSet, KRecord]:
    """Armijo-backtracking gradient descent on J_K at fixed K.

    Accepted iterates never increase J_K; phi is radially clamped back to the
    admissible set after every step.  Step underflow is recorded as a stall,
    not raised.
    """
    x = apply_boundary(fields, grid)
    _clamp_phi(x)
    j_cur = assemble_JK(x, grid, K, singular_tol=cfg.singular_tol).total_JK
    trace = [j_cur]
    step = cfg.step_init
    stalled = False
    converged = False
    grad_norm = float("nan")
    iters = 0

    while iters < cfg.max_iters:
        try:
            grad = gradient_JK(
                x, grid, K,
                fd_step=cfg.fd_step,
                singular_tol=cfg.singular_tol,
                kinds=cfg.optimize_fields,
            )
        except GradientProbeError:
            # Probe stepped over the admissibility wall: the iterate sits at
            # the edge of the feasible region; report a stall.
            stalled = True
            break
        gvec = pack_interior(grad, grid)
        grad_norm = float(np.linalg.norm(gvec))
        if grad_norm <= cfg.grad_tol:
            converged = True
            break
        gsq = grad_norm * grad_norm
        alpha = step
        accepted = False
        while alpha >= 1e-14:
            trial = _add_scaled(x, grad, -alpha, grid)
            _clamp_phi(trial)
            try:
                j_trial = assemble_JK(trial, grid, K, singular_tol=cfg.singular_tol).total_JK
            except GeometryError:
                j_trial = float("inf")
            if np.isfinite(j_trial) and j_trial <= j_cur - cfg.armijo_c * alpha * gsq:
                accepted = True
                break
            alpha *= cfg.backtrack
        if not accepted:
            stalled = True
            break
        x = trial
        j_cur = j_trial
        trace.append(j_cur)
        step = min(2.0 * alpha, cfg.step_init)
        iters += 1

    geom = build_geometry(x, grid, singular_tol=cfg.singular_tol)
    breakdown = assemble_JK(x, grid, K, geom=geom)
    res_norm, res_orth, res_unit = constraint_residuals(x, grid, geom=geom)
    mass = slice_masses(np.abs(x.phi) ** 2 * geom.sqrt_neg_g, grid)
    nn = minkowski_dot(x.n, x.n)
    record = KRecord(
        K=float(K),
        iterations=iters,
        total_J=breakdown.total_J,
        total_JK=breakdown.total_JK,
        res_norm=res_norm,
        res_orth=res_orth,
        res_unit=res_unit,
        grad_norm=grad_norm,
        stalled=stalled,
        converged=converged,
        min_slice_mass=float(mass.min()),
        min_normal_sq=float(np.min(nn)),
        jk_trace=trace,
    )
    return x, record


def theorem_range_notice(m: int, n_ambient: int) -> Optional[str]:
    lo, hi = THEOREM_M_RANGE
    if lo <= m <= hi and m < n_ambient:
        return None
    return (
        f"note: m={m}, N={n_ambient} lies outside the existence theorem's range "
        f"{lo} <= m <= {hi}, m < N; the run proceeds regardless"
    )


def penalty_continuation(
    fields: FieldSet,
    grid: ParameterGrid,
    cfg: PenaltyConfig,
) -> MinimizeReport:
    """Sweep K upward with warm starts and fit the residual decay slopes.

    Slopes are fitted per constraint over the schedule points whose residual
    exceeds 1e-12; a residual at machine zero is skipped.
    """
    notice = theorem_range_notice(grid.m, fields.n_ambient)
    if notice:
        logger.info(notice)
    x = fields
    records: list[KRecord] = []
    for K in cfg.k_schedule:
        start_J = assemble_JK(x, grid, K).total_J
        x, rec = minimize_fixed_K(x, grid, K, cfg)
        rec.start_total_J = start_J
        records.append(rec)

    slopes: dict[str, Optional[float]] = {}
    for name, getter in (
        ("norm", lambda r: r.res_norm),
        ("orth", lambda r: r.res_orth),
        ("unit", lambda r: r.res_unit),
    ):
        ks = [rec.K for rec in records if getter(rec) > 1e-12]
        rs = [getter(rec) for rec in records if getter(rec) > 1e-12]
        slopes[name] = fit_loglog_slope(ks, rs) if len(ks) >= 2 else None
    return MinimizeReport(
        records=records, slopes=slopes, theorem_range_notice=notice, final_fields=x
    )


@dataclass
class CoercivityReport:
    """Worst-case margins of the coercivity hypotheses; diagnostic only."""

    margin_spatial_eig: float
    node_spatial_eig: tuple[int, ...]
    margin_normal_grad: float
    node_normal_grad: tuple[int, ...]
    margin_second_deriv: float
    node_second_deriv: tuple[int, ...]

    @property
    def spatial_eig_holds(self) -> bool:
        return self.margin_spatial_eig >= 0.0

    @property
    def normal_grad_holds(self) -> bool:
        return self.margin_normal_grad >= 0.0

    @property
    def second_deriv_holds(self) -> bool:
        return self.margin_second_deriv >= 0.0


def coercivity_check(
    fields: FieldSet,
    grid: ParameterGrid,
    c0: float,
    c1: float,
    c2: float = 0.0,
) -> CoercivityReport:
    """Check the coercivity bounds per node; violations are reported, not raised.

    (a) smallest eigenvalue of the spatial block of g^{jk} >= c0
    (b) |phi|^2 g^{jk} b_jl b^l_k >= c1 * sum_i dn/du_i . dn/du_i
    (c) |phi|^2 g^{jk} b_jl b^l_k >= c2 * |d^2 r/du_i du_j|^2 for every (i, j)
    """
    geom = build_geometry(fields, grid)
    spatial = geom.g_inv[..., 1:, 1:]
    eigs = np.linalg.eigvalsh(spatial)
    margin_a = eigs[..., 0] - c0
    node_a = tuple(int(i) for i in np.unravel_index(np.argmin(margin_a), grid.counts))

    lhs = np.abs(fields.phi) ** 2 * np.einsum("...jk,...jl,...lk->...", geom.g_inv, geom.b, geom.b_up)
    dn = np.stack([finite_difference(fields.n, grid, axis=j) for j in range(grid.ndim)], axis=-2)
    signs = _signs(fields.n.shape[-1])
    dn_sq = np.einsum("...ja,...ja,a->...", dn, dn, signs)
    margin_b = lhs - c1 * dn_sq
    node_b = tuple(int(i) for i in np.unravel_index(np.argmin(margin_b), grid.counts))

    d2_sq = np.einsum("...ija,...ija->...ij", geom.d2r, geom.d2r)
    margin_c = lhs[..., None, None] - c2 * d2_sq
    flat = np.argmin(margin_c.reshape(grid.counts + (-1,)).min(axis=-1))
    node_c = tuple(int(i) for i in np.unravel_index(flat, grid.counts))

    return CoercivityReport(
        margin_spatial_eig=float(margin_a.min()),
        node_spatial_eig=node_a,
        margin_normal_grad=float(margin_b.min()),
        node_normal_grad=node_b,
        margin_second_deriv=float(margin_c.min()),
        node_second_deriv=node_c,
    )
