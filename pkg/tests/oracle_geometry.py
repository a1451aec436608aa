"""Independent re-implementation of the projection pipeline for oracle
checks.

Deliberately structured differently from the package: spherical-coordinate
camera basis built from cross products, per-vertex python loops, interval
clipping, and an O(n^2) occlusion scan. Used to generate the frozen golden
file and to cross-check visible_objects live.
"""

import math

import numpy as np

VFOV = math.pi / 3.0
WIDTH, HEIGHT = 640, 480
NEAR = 0.05


def camera_rows(heading, elevation):
    f = np.array([
        math.sin(heading) * math.cos(elevation),
        math.cos(heading) * math.cos(elevation),
        math.sin(elevation),
    ])
    world_up = np.array([0.0, 0.0, 1.0])
    left = np.cross(world_up, f)
    left = left / np.linalg.norm(left)
    up = np.cross(f, left)
    return left, up, f


def oracle_project(center, axes, radii, cam_pos, heading, elevation):
    """Returns (bbox [x, y, w, h], depth) or None."""
    left, up, fwd = camera_rows(heading, elevation)
    corners = []
    for sx in (-1, 1):
        for sy in (-1, 1):
            for sz in (-1, 1):
                p = np.array(center, dtype=float)
                for s, axis, r in zip((sx, sy, sz), axes, radii):
                    p = p + s * r * np.array(axis, dtype=float)
                corners.append(p)
    focal = (HEIGHT / 2.0) / math.tan(VFOV / 2.0)
    us, vs = [], []
    for p in corners:
        d = p - np.array(cam_pos, dtype=float)
        x, y, z = float(np.dot(d, left)), float(np.dot(d, up)), float(np.dot(d, fwd))
        if z <= NEAR:
            continue
        us.append(WIDTH / 2.0 - focal * x / z)
        vs.append(HEIGHT / 2.0 - focal * y / z)
    if not us:
        return None
    x1, x2 = max(min(us), 0.0), min(max(us), float(WIDTH))
    y1, y2 = max(min(vs), 0.0), min(max(vs), float(HEIGHT))
    if x1 > x2 or y1 > y2:
        return None
    d = np.array(center, dtype=float) - np.array(cam_pos, dtype=float)
    depth = math.sqrt(float(np.dot(d, d)))
    return [x1, y1, x2 - x1, y2 - y1], depth


def oracle_visible(env, viewpoint_id, heading, elevation):
    """[(object_id, bbox, depth)] after the 3 m gate and occlusion."""
    pos = env.viewpoint_by_id[viewpoint_id].position
    hits = []
    for obj in env.objects:
        c = np.array(obj.box.center, dtype=float) - np.array(pos, dtype=float)
        if math.sqrt(float(np.dot(c, c))) > 3.0:
            continue
        hit = oracle_project(obj.box.center, obj.box.axes, obj.box.radii,
                             pos, heading, elevation)
        if hit is not None:
            hits.append((obj.id, hit[0], hit[1]))
    survivors = []
    for i, (oid, bbox, depth) in enumerate(hits):
        covered = False
        for j, (_, other, other_depth) in enumerate(hits):
            if i == j:
                continue
            inside = (
                other[0] <= bbox[0]
                and other[1] <= bbox[1]
                and bbox[0] + bbox[2] <= other[0] + other[2]
                and bbox[1] + bbox[3] <= other[1] + other[3]
            )
            if inside and depth > other_depth:
                covered = True
                break
        if not covered:
            survivors.append((oid, bbox, depth))
    survivors.sort(key=lambda t: (t[2], t[0]))
    return survivors
