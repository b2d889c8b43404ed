"""Uniform tensor-product grids over the sheet parameters and the field unknowns.

The parameter domain is a box [a_0,b_0] x ... x [a_m,b_m] sampled on a uniform
tensor-product grid.  Axis 0 is the time-like parameter (u_0 = c*t); the
remaining m axes are the intrinsic spatial parameters.  All derivative and
quadrature machinery in the package is built on these grids, so node
enumeration is fixed to row-major order once and for all: serialized fields
are bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np


class GridError(ValueError):
    """Invalid grid construction, boundary data, or off-grid evaluation."""


def _node_str(idx: Sequence[int]) -> str:
    return "(" + ", ".join(str(int(i)) for i in idx) + ")"


@dataclass(frozen=True)
class ParameterGrid:
    """Uniform grid on a box in parameter space.

    extents   -- per-axis (lo, hi) pairs, hi > lo
    counts    -- per-axis node counts, each >= 3
    spacings  -- per-axis spacing, exactly (hi - lo) / (count - 1)
    """

    extents: tuple[tuple[float, float], ...]
    counts: tuple[int, ...]
    spacings: tuple[float, ...]

    @property
    def ndim(self) -> int:
        return len(self.counts)

    @property
    def m(self) -> int:
        """Number of intrinsic spatial parameters (axes beyond u_0)."""
        return self.ndim - 1

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.counts))

    def axis_coords(self, axis: int) -> np.ndarray:
        lo, hi = self.extents[axis]
        return np.linspace(lo, hi, self.counts[axis])

    @cached_property
    def coordinates(self) -> np.ndarray:
        """Node coordinates, shape (*counts, ndim)."""
        axes = [self.axis_coords(j) for j in range(self.ndim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack(mesh, axis=-1)

    @cached_property
    def boundary_mask(self) -> np.ndarray:
        """True where any index sits at an axis extreme, shape (*counts,)."""
        mask = np.zeros(self.counts, dtype=bool)
        for axis in range(self.ndim):
            sl = [slice(None)] * self.ndim
            sl[axis] = 0
            mask[tuple(sl)] = True
            sl[axis] = -1
            mask[tuple(sl)] = True
        return mask

    @cached_property
    def interior_mask(self) -> np.ndarray:
        return ~self.boundary_mask

    def nodes(self) -> Iterator[tuple[int, ...]]:
        """Row-major node enumeration over axes in order u_0..u_m."""
        return np.ndindex(*self.counts)

    @property
    def volume(self) -> float:
        v = 1.0
        for lo, hi in self.extents:
            v *= hi - lo
        return v


def build_grid(extents: Sequence[Sequence[float]], counts: Sequence[int]) -> ParameterGrid:
    """Build a uniform grid; counts below 3 or degenerate extents are rejected."""
    ext = tuple((float(lo), float(hi)) for lo, hi in extents)
    cts = tuple(int(c) for c in counts)
    if len(ext) != len(cts) or not ext:
        raise GridError("extents and counts must be nonempty and of equal length")
    for axis, (lo, hi) in enumerate(ext):
        if not (np.isfinite(lo) and np.isfinite(hi)) or hi <= lo:
            raise GridError(f"axis {axis}: extent [{lo}, {hi}] is degenerate")
        if cts[axis] < 3:
            raise GridError(f"axis {axis}: count {cts[axis]} < 3, central differences undefined")
    spacings = tuple((hi - lo) / (c - 1) for (lo, hi), c in zip(ext, cts))
    return ParameterGrid(extents=ext, counts=cts, spacings=spacings)


def _axis_slicer(arr_ndim: int, axis: int):
    def sl(s):
        idx = [slice(None)] * arr_ndim
        idx[axis] = s
        return tuple(idx)

    return sl


def finite_difference(values: np.ndarray, grid: ParameterGrid, axis: int, order: int = 1) -> np.ndarray:
    """Second-order finite difference of a node-indexed field along one grid axis.

    Interior nodes use second-order central stencils.  Boundary nodes use
    one-sided second-order stencils whose leading truncation term matches the
    central one (h^2 f'''/6 for first, h^2 f''''/12 for second derivatives),
    so the truncation error varies smoothly across the boundary; this keeps
    composed derivatives, such as the curvature tensor built from
    differentiated connection coefficients, second-order accurate up to the
    boundary.  Short axes fall back to the widest one-sided stencil that fits
    (still exact for quadratics).  Extra trailing axes of ``values`` (vector
    or tensor components) are differentiated componentwise.
    """
    if values.shape[: grid.ndim] != grid.counts:
        raise GridError("field shape does not match grid counts")
    if not 0 <= axis < grid.ndim:
        raise GridError(f"axis {axis} out of range for {grid.ndim} grid axes")
    h = grid.spacings[axis]
    count = grid.counts[axis]
    sl = _axis_slicer(values.ndim, axis)
    out = np.empty_like(values, dtype=np.result_type(values, float))

    # Edge stencils are evaluated in difference-from-the-edge form (the
    # weights sum to zero), so a constant field differentiates to exactly
    # zero in floating point on every node.
    if order == 1:
        out[sl(slice(1, -1))] = (values[sl(slice(2, None))] - values[sl(slice(None, -2))]) / (2.0 * h)
        if count >= 4:
            lo = values[sl(0)]
            out[sl(0)] = (
                7.0 * (values[sl(1)] - lo) - 4.0 * (values[sl(2)] - lo) + (values[sl(3)] - lo)
            ) / (2.0 * h)
            hi = values[sl(-1)]
            out[sl(-1)] = -(
                7.0 * (values[sl(-2)] - hi) - 4.0 * (values[sl(-3)] - hi) + (values[sl(-4)] - hi)
            ) / (2.0 * h)
        else:
            lo = values[sl(0)]
            out[sl(0)] = (4.0 * (values[sl(1)] - lo) - (values[sl(2)] - lo)) / (2.0 * h)
            hi = values[sl(-1)]
            out[sl(-1)] = -(4.0 * (values[sl(-2)] - hi) - (values[sl(-3)] - hi)) / (2.0 * h)
        return out

    if order == 2:
        h2 = h * h
        out[sl(slice(1, -1))] = (
            values[sl(slice(2, None))] - 2.0 * values[sl(slice(1, -1))] + values[sl(slice(None, -2))]
        ) / h2
        if count >= 5:
            lo = values[sl(0)]
            out[sl(0)] = (
                -9.0 * (values[sl(1)] - lo)
                + 10.0 * (values[sl(2)] - lo)
                - 5.0 * (values[sl(3)] - lo)
                + (values[sl(4)] - lo)
            ) / h2
            hi = values[sl(-1)]
            out[sl(-1)] = (
                -9.0 * (values[sl(-2)] - hi)
                + 10.0 * (values[sl(-3)] - hi)
                - 5.0 * (values[sl(-4)] - hi)
                + (values[sl(-5)] - hi)
            ) / h2
        elif count == 4:
            lo = values[sl(0)]
            out[sl(0)] = (
                -5.0 * (values[sl(1)] - lo) + 4.0 * (values[sl(2)] - lo) - (values[sl(3)] - lo)
            ) / h2
            hi = values[sl(-1)]
            out[sl(-1)] = (
                -5.0 * (values[sl(-2)] - hi) + 4.0 * (values[sl(-3)] - hi) - (values[sl(-4)] - hi)
            ) / h2
        else:
            # count == 3: the quadratic through the three nodes has constant
            # second derivative, which the central stencil already gives.
            edge = (values[sl(0)] - 2.0 * values[sl(1)] + values[sl(2)]) / h2
            out[sl(0)] = edge
            out[sl(-1)] = edge
        return out

    raise GridError(f"order must be 1 or 2, got {order}")


def mixed_second(values: np.ndarray, grid: ParameterGrid, j: int, k: int) -> np.ndarray:
    """d^2 f / du_j du_k by composing first-derivative stencils (j != k)."""
    if j == k:
        return finite_difference(values, grid, j, order=2)
    return finite_difference(finite_difference(values, grid, j, order=1), grid, k, order=1)


@dataclass
class FieldSet:
    """The unknowns (r, phi, n) on grid nodes plus their prescribed boundary data.

    r        -- position field, shape (*counts, N+1); first component is c*t
    phi      -- complex amplitude, shape (*counts,)
    n        -- candidate normal field, shape (*counts, N+1)
    r_bc     -- boundary values for r (consulted on boundary nodes only);
                slice [0] along axis 0 is the initial-time data, slice [-1]
                the final-time data, and the remaining boundary nodes carry
                the side-wall data.  NaN marks missing data.
    phi_bc   -- boundary values for phi, same layout
    eps      -- admissible-set lower bound for |phi|^2

    n carries no prescribed boundary data: apply_boundary never touches it.
    """

    r: np.ndarray
    phi: np.ndarray
    n: np.ndarray
    r_bc: np.ndarray
    phi_bc: np.ndarray
    eps: float = 1e-4

    @property
    def n_ambient(self) -> int:
        """Ambient spatial dimension N (r maps into R^{N+1})."""
        return self.r.shape[-1] - 1

    @property
    def r_hat0(self) -> np.ndarray:
        return self.r_bc[0]

    @property
    def r_hat1(self) -> np.ndarray:
        return self.r_bc[-1]

    @property
    def phi_hat0(self) -> np.ndarray:
        return self.phi_bc[0]

    @property
    def phi_hat1(self) -> np.ndarray:
        return self.phi_bc[-1]

    def copy(self) -> "FieldSet":
        return FieldSet(
            r=self.r.copy(),
            phi=self.phi.copy(),
            n=self.n.copy(),
            r_bc=self.r_bc.copy(),
            phi_bc=self.phi_bc.copy(),
            eps=self.eps,
        )


def apply_boundary(fields: FieldSet, grid: ParameterGrid) -> FieldSet:
    """Overwrite boundary nodes with prescribed data; interior nodes untouched.

    Idempotent.  Missing (NaN) boundary data raises, naming the node.
    """
    mask = grid.boundary_mask
    bad_r = mask & ~np.all(np.isfinite(fields.r_bc), axis=-1)
    bad_phi = mask & ~np.isfinite(fields.phi_bc)
    bad = bad_r | bad_phi
    if bad.any():
        node = tuple(np.argwhere(bad)[0])
        raise GridError(f"missing boundary data at node {_node_str(node)}")
    out = fields.copy()
    out.r[mask] = fields.r_bc[mask]
    out.phi[mask] = fields.phi_bc[mask]
    return out


def interpolate(grid: ParameterGrid, values: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Multilinear interpolation of a node-indexed field at parameter points.

    values -- shape (*counts, ...); points -- shape (..., ndim).
    Points must lie inside the grid box (a small snap tolerance is allowed
    at the faces).
    """
    if values.shape[: grid.ndim] != grid.counts:
        raise GridError("field shape does not match grid counts")
    pts = np.asarray(points, dtype=float)
    if pts.shape[-1] != grid.ndim:
        raise GridError("point dimension does not match grid")
    lead = pts.shape[:-1]
    extra = values.shape[grid.ndim :]

    idx = np.empty(lead + (grid.ndim,), dtype=np.intp)
    frac = np.empty(lead + (grid.ndim,), dtype=float)
    for axis in range(grid.ndim):
        lo, hi = grid.extents[axis]
        h = grid.spacings[axis]
        tol = 1e-9 * max(1.0, abs(hi - lo))
        p = pts[..., axis]
        if (p < lo - tol).any() or (p > hi + tol).any():
            raise GridError(f"interpolation point outside grid extent on axis {axis}")
        s = np.clip((p - lo) / h, 0.0, grid.counts[axis] - 1.0)
        cell = np.minimum(s.astype(np.intp), grid.counts[axis] - 2)
        idx[..., axis] = cell
        frac[..., axis] = s - cell

    out = np.zeros(lead + extra, dtype=values.dtype)
    for corner in np.ndindex(*(2,) * grid.ndim):
        w = np.ones(lead, dtype=float)
        gather = []
        for axis, bit in enumerate(corner):
            w = w * (frac[..., axis] if bit else 1.0 - frac[..., axis])
            gather.append(idx[..., axis] + bit)
        out += w.reshape(lead + (1,) * len(extra)) * values[tuple(gather)]
    return out


@dataclass(frozen=True)
class ChartMap:
    """User-supplied chart u(x, t) from a lab-frame grid into parameter space.

    grid -- uniform grid over (t, x_1, x_2, x_3); axis 0 is lab time
    u    -- parameter values at chart nodes, shape (*grid.counts, m+1)
    c    -- speed constant; the gauge condition u_0(x, t) = c*t must hold
    """

    grid: ParameterGrid
    u: np.ndarray
    c: float

    def derivatives(self) -> np.ndarray:
        """du/dx_i at chart nodes, shape (*counts, 4, m+1) with x_0 = t."""
        return np.stack(
            [finite_difference(self.u, self.grid, axis=i) for i in range(self.grid.ndim)],
            axis=-2,
        )


def make_chart(chart_grid: ParameterGrid, u: np.ndarray, c: float, gauge_tol: float = 1e-12) -> ChartMap:
    """Validate and wrap chart data; enforces the u_0 = c*t gauge."""
    if chart_grid.ndim != 4:
        raise GridError("chart grid must have four axes (t, x_1, x_2, x_3)")
    if u.shape[: chart_grid.ndim] != chart_grid.counts:
        raise GridError("chart sample shape does not match chart grid")
    t = chart_grid.coordinates[..., 0]
    scale = max(1.0, float(np.abs(c * t).max()))
    if np.max(np.abs(u[..., 0] - c * t)) > gauge_tol * scale:
        raise GridError("chart violates the gauge condition u_0(x, t) = c*t")
    return ChartMap(grid=chart_grid, u=np.asarray(u, dtype=float), c=float(c))
