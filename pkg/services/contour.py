import logging
import numpy as np
from collections import defaultdict
from typing import Callable, Dict, List, Tuple

from errors import ArgumentError

logger = logging.getLogger("mh.contour")

LEVEL_TOL = 1e-7
MAX_BISECTIONS = 80

# marching squares: corner bits (0,0)=1, (1,0)=2, (1,1)=4, (0,1)=8 in (i, j) order;
# edges 0: bottom (0,0)-(1,0), 1: right (1,0)-(1,1), 2: top (0,1)-(1,1), 3: left (0,0)-(0,1)
CASES = {
    1: [(3, 0)], 2: [(0, 1)], 3: [(3, 1)], 4: [(1, 2)], 6: [(0, 2)], 7: [(3, 2)],
    8: [(2, 3)], 9: [(2, 0)], 11: [(2, 1)], 12: [(1, 3)], 13: [(1, 0)], 14: [(0, 3)],
}
# saddles: (center above, center below)
SADDLES = {5: ([(0, 1), (2, 3)], [(3, 0), (1, 2)]), 10: ([(3, 0), (1, 2)], [(0, 1), (2, 3)])}


def bisect_crossings(fun: Callable[[np.ndarray], np.ndarray], below: np.ndarray, above: np.ndarray,
                     level: float, tol: float = LEVEL_TOL) -> Tuple[np.ndarray, np.ndarray]:
    """Locate f = level on each segment [below_i, above_i] with f(below) <= level < f(above); batched"""
    lo, hi = np.array(below, dtype=float), np.array(above, dtype=float)
    mid = 0.5 * (lo + hi)
    residual = np.full(len(lo), np.inf)
    for _ in range(MAX_BISECTIONS):
        mid = 0.5 * (lo + hi)
        values = np.asarray(fun(mid), dtype=float) - level
        residual = np.abs(values)
        if np.all(residual <= tol):
            break
        up = values > 0
        hi = np.where(up[:, None], mid, hi)
        lo = np.where(up[:, None], lo, mid)
        if np.all(np.linalg.norm(hi - lo, axis=1) < 1e-13):
            break
    return mid, residual


def _edge_key(i: int, j: int, edge: int) -> Tuple[int, int, int]:
    # canonical id shared by the two cells that touch the edge: (i, j, axis)
    if edge == 0:
        return (i, j, 0)
    if edge == 1:
        return (i + 1, j, 1)
    if edge == 2:
        return (i, j + 1, 0)
    return (i, j, 1)


def _chain(segments: List[Tuple[tuple, tuple]]) -> List[List[tuple]]:
    """Join segments sharing edge ids into polylines"""
    neighbours: Dict[tuple, List[tuple]] = defaultdict(list)
    for a, b in segments:
        neighbours[a].append(b)
        neighbours[b].append(a)
    seen = set()
    lines = []
    # open chains start at degree-one nodes; what is left afterwards is closed loops
    starts = [k for k, v in neighbours.items() if len(v) == 1] + list(neighbours)
    for start in starts:
        if start in seen:
            continue
        line = [start]
        seen.add(start)
        current = start
        while True:
            nxt = [k for k in neighbours[current] if k not in seen]
            if not nxt:
                if len(line) > 2 and start in neighbours[current]:
                    line.append(start)
                break
            current = nxt[0]
            seen.add(current)
            line.append(current)
        lines.append(line)
    return lines


def marching_squares(fun: Callable[[np.ndarray], np.ndarray], xs: np.ndarray, ys: np.ndarray, values: np.ndarray,
                     level: float) -> Tuple[np.ndarray, List[np.ndarray], float]:
    """Level set of a planar function on the grid xs x ys.

    `values` holds f on the grid ('ij' indexing). Crossing points on cell
    edges are refined by bisection on f itself. Returns the crossing points,
    the assembled polylines and the worst residual |f - level|.
    """
    above = values > level
    corners = (above[:-1, :-1].astype(int) | (above[1:, :-1].astype(int) << 1) |
               (above[1:, 1:].astype(int) << 2) | (above[:-1, 1:].astype(int) << 3))
    segments: List[Tuple[tuple, tuple]] = []
    saddle_cells = []
    for i, j in zip(*np.nonzero((corners > 0) & (corners < 15))):
        case = int(corners[i, j])
        if case in SADDLES:
            saddle_cells.append((i, j, case))
            continue
        for e1, e2 in CASES[case]:
            segments.append((_edge_key(i, j, e1), _edge_key(i, j, e2)))
    if saddle_cells:
        centers = np.array([[0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1])] for i, j, _ in saddle_cells])
        center_above = np.asarray(fun(centers), dtype=float) > level
        for (i, j, case), up in zip(saddle_cells, center_above):
            for e1, e2 in SADDLES[case][0 if up else 1]:
                segments.append((_edge_key(i, j, e1), _edge_key(i, j, e2)))
    if not segments:
        return np.empty((0, 2)), [], 0.0

    keys = sorted({k for seg in segments for k in seg})
    lo, hi = [], []
    for i, j, axis in keys:
        a = (i, j)
        b = (i + 1, j) if axis == 0 else (i, j + 1)
        pa = np.array([xs[a[0]], ys[a[1]]])
        pb = np.array([xs[b[0]], ys[b[1]]])
        if above[a]:
            pa, pb = pb, pa
        lo.append(pa)
        hi.append(pb)
    points, residual = bisect_crossings(fun, np.array(lo), np.array(hi), level)
    index = {k: n for n, k in enumerate(keys)}
    polylines = [points[[index[k] for k in line]] for line in _chain(segments)]
    logger.debug(f"marching squares: {len(keys)} crossings, {len(polylines)} polylines at level {level:g}")
    return points, polylines, float(np.max(residual))


def edge_crossings(fun: Callable[[np.ndarray], np.ndarray], axes: Tuple[np.ndarray, ...], values: np.ndarray,
                   level: float) -> Tuple[np.ndarray, float]:
    """Sign changes of f - level along every grid edge, any dimension"""
    if values.ndim != len(axes):
        raise ArgumentError("edge crossings: value array does not match the grid")
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    above = values > level
    lo, hi = [], []
    for axis in range(values.ndim):
        first = [slice(None)] * values.ndim
        second = [slice(None)] * values.ndim
        first[axis] = slice(None, -1)
        second[axis] = slice(1, None)
        a, b = above[tuple(first)], above[tuple(second)]
        change = a != b
        pa, pb = mesh[tuple(first)][change], mesh[tuple(second)][change]
        flip = a[change]
        lo.append(np.where(flip[:, None], pb, pa))
        hi.append(np.where(flip[:, None], pa, pb))
    lo, hi = np.vstack(lo), np.vstack(hi)
    if len(lo) == 0:
        return np.empty((0, values.ndim)), 0.0
    points, residual = bisect_crossings(fun, lo, hi, level)
    return points, float(np.max(residual))
