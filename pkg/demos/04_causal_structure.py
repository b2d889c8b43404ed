"""Causal structure on a finite event set.

Events on a flat (t, x) grid are wired into a typed causal graph: a
future-directed edge is time-like or null by the sign of its Minkowski
interval.  Chronological and causal futures become graph reachability, the
future boundary becomes the causally-but-not-chronologically reachable shell,
and domains of dependence become a dynamic program over maximal backward
paths.  Everything is validated against the exact flat-space cone.
"""

import numpy as np

import worldsheet.causal as causal

print(__doc__)

# --- a covering-radius grid and the light cone of one event -----------------
events = causal.flat_grid_events((0, 8), (0, 10), 9, 11, c=1.0)
graph = causal.build_graph(events, radius=1.01 * float(np.hypot(8, 10)))
origin = 5  # the event (t, x) = (0, 5)
I = causal.chronological_future([origin], graph)
J = causal.causal_future([origin], graph)
print(f"from event {tuple(events.events[origin])}: |I+| = {len(I)}, |J+| = {len(J)}")

agree = all(
    causal.flat_cone_oracle(events.events[origin], events.events[q], 1.0) == "chronological"
    for q in I
)
print("every chronologically reached event lies strictly inside the exact cone:", agree)

shell = causal.future_boundary([origin], graph)
intervals = [
    (events.events[q] - events.events[origin]) for q in sorted(shell - {origin})
]
print("future boundary = the null shell; max |interval| on it:",
      max(abs(d[0] ** 2 - d[1] ** 2) for d in intervals))
print("the boundary is achronal:", causal.is_achronal(shell, graph))

# --- null geodesics stay in the boundary -------------------------------------
path = [t * 11 + 5 + t for t in range(6)]  # the right-going null ray from (0,5)
print("radial null path max |interval|:", causal.null_boundary_check(path, graph))
print("path inside the boundary:", set(path) <= shell)

# --- domains of dependence and a Cauchy surface ------------------------------
dt, dx = 1.25, 1.0
events = causal.flat_grid_events((0, dt * 6), (0, dx * 8), 7, 9, c=1.0)
graph = causal.build_graph(events, radius=1.1 * float(np.hypot(dt, dx)))
mid = [3 * 9 + j for j in range(9)]
verdict = causal.is_cauchy_surface(mid, graph)
print("\nfull middle slice is a Cauchy surface:", verdict.is_cauchy)

holed = [i for i in mid if i != 3 * 9 + 4]
verdict = causal.is_cauchy_surface(holed, graph)
print("with one event removed:", verdict.is_cauchy, "| witness:", verdict.witness_kind, verdict.witness)

report = causal.intercept_check(mid, graph)
print(f"every maximal causal path ({report.paths_checked} of them) meets the surface,"
      f" its chronological future, and its past: {report.ok}")
