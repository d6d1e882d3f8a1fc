"""Slow, independent re-implementations used as test oracles.

Nothing here imports the package's grid, removal or codec internals.
"""

import math

import numpy as np

TOL = 1e-9


def reference_pillars(xyz, res):
    """Dict-based pillar assignment: cell -> list of point indices."""
    cells = {}
    for i, (x, y, _) in enumerate(np.asarray(xyz, dtype=np.float64)):
        cells.setdefault((math.floor(x / res), math.floor(y / res)), []).append(i)
    return cells


def reference_pgr(xyz, cfg):
    """All-pairs evaluation of the removal and restoration rules.

    Returns per-point ``(phi, restored)`` flags.
    """
    xyz = np.asarray(xyz, dtype=np.float64)
    res = cfg.resolution
    cells = reference_pillars(xyz, res)
    keys = list(cells)
    m = len(keys)
    if m == 0:
        return np.zeros(0, dtype=np.uint8), np.zeros(0, dtype=np.uint8)
    z = xyz[:, 2]
    zmin = np.array([min(z[cells[k]]) for k in keys])
    zmax = np.array([max(z[cells[k]]) for k in keys])
    # centers through the frame anchor, as the grid defines them
    bx = min(k[0] for k in keys)
    by = min(k[1] for k in keys)
    ox, oy = bx * res, by * res
    cx = np.array([ox + (k[0] - bx + 0.5) * res for k in keys])
    cy = np.array([oy + (k[1] - by + 0.5) * res for k in keys])
    cheb = np.maximum(np.abs(cx[:, None] - cx[None, :]), np.abs(cy[:, None] - cy[None, :]))

    # removal: window = pillars within er in chessboard distance
    in_env = cheb <= cfg.er + TOL
    b = np.where(in_env, zmin[None, :], np.inf).min(axis=1)
    ground = ((zmax - zmin) <= cfg.delta_minmax) & ((zmin - b) < cfg.delta_env)
    phi = (~ground).astype(np.uint8)

    # restoration: any retained pillar within delta_res of the pillar's own range rule
    restored = np.zeros(m, dtype=np.uint8)
    if cfg.restoration:
        rng2d = np.hypot(cx, cy)
        for i in range(m):
            if phi[i]:
                continue
            dres = next(d for r, d in cfg.restore_rules if rng2d[i] < r)
            if np.any(phi.astype(bool) & (cheb[i] <= dres + TOL)):
                restored[i] = 1

    point_phi = np.zeros(len(xyz), dtype=np.uint8)
    point_res = np.zeros(len(xyz), dtype=np.uint8)
    for j, k in enumerate(keys):
        point_phi[cells[k]] = phi[j]
        point_res[cells[k]] = restored[j]
    return point_phi, point_res


def reference_quantize(xyz, factor):
    """Per-point rounding with a dict keeping the last point per cell.

    Returns ``{integer cell: original index}`` and the per-axis offset.
    """
    xyz = np.asarray(xyz, dtype=np.float64)
    if len(xyz) == 0:
        return {}, np.zeros(3)
    offset = xyz.min(axis=0)
    out = {}
    for i, p in enumerate(xyz):
        q = tuple(int(v) for v in np.floor((p - offset) * factor + 0.5))
        out[q] = i
    return out, offset


def reference_in_box(p, box, scale):
    """Rotate one point into the box frame with an explicit matrix."""
    c, s = math.cos(-box.yaw), math.sin(-box.yaw)
    rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    local = rot @ (np.asarray(p, dtype=np.float64) - box.center)
    half = 0.5 * scale * box.dims
    return bool(np.all(np.abs(local) <= half))


def random_pillar_cloud(rng, max_cells=50, res=0.4):
    """Random frame over an ``nx x ny`` (<= 50 x 50) patch of cells.

    Mixes gently undulating ground, tall blocks, flat raised slabs (roof
    like) and isolated spikes so every branch of both rules is exercised.
    """
    nx, ny = rng.integers(1, max_cells + 1, size=2)
    x0, y0 = rng.uniform(-40, 40, size=2)
    n = int(rng.integers(1, 3 * nx * ny + 2))
    x = x0 + rng.uniform(0, nx * res, n)
    y = y0 + rng.uniform(0, ny * res, n)
    z = -1.7 + 0.05 * np.sin(x) + rng.normal(0, rng.uniform(0, 0.15), n)
    for _ in range(rng.integers(0, 6)):
        cx, cy = rng.uniform(x0, x0 + nx * res), rng.uniform(y0, y0 + ny * res)
        hw = rng.uniform(0.2, 2.5)
        inside = (np.abs(x - cx) < hw) & (np.abs(y - cy) < hw)
        kind = rng.integers(3)
        if kind == 0:
            z[inside] += rng.uniform(0, 2.0, inside.sum())
        elif kind == 1:
            z[inside] = -1.7 + rng.uniform(0.2, 1.6)
        else:
            z[inside] += rng.uniform(0.3, 0.5)
    return np.column_stack([x, y, z])
