"""File formats: arc and result JSON, histogram CSV, plane JSON, Levi DIMACS.

Arc files carry coordinates rather than point indices, so they stay readable
and survive any change to the internal point order.  Every writer here has a
matching reader or is line-oriented text meant for external tools.
"""

from __future__ import annotations

import csv
import io
import json

import numpy as np

from .chain_ring import parse_ring_descriptor
from .plane import affine_plane, projective_plane


def plane_for(ring, space):
    if space == "affine":
        return affine_plane(ring)
    if space == "projective":
        return projective_plane(ring)
    raise ValueError(f"unknown space {space!r}")


# -- arcs ---------------------------------------------------------------------


def arc_record(plane, points, w=2):
    coords = [tuple(int(v) for v in plane.coords[int(p)]) for p in points]
    return {
        "ring": plane.ring.descriptor,
        "space": plane.kind,
        "w": int(w),
        "n": len(coords),
        "points": coords,
    }


def write_arc_json(path, plane, points, w=2):
    with open(path, "w") as fh:
        json.dump(arc_record(plane, points, w), fh, indent=1)
        fh.write("\n")


def read_arc_json(path):
    """Returns (ring, plane, point index list, w)."""
    with open(path) as fh:
        rec = json.load(fh)
    for key in ("ring", "space", "w", "points"):
        if key not in rec:
            raise ValueError(f"arc file is missing the {key!r} field")
    ring = parse_ring_descriptor(rec["ring"])
    plane = plane_for(ring, rec["space"])
    pts = [plane.point_index(tuple(c)) for c in rec["points"]]
    if len(set(pts)) != len(pts):
        raise ValueError("arc file repeats a point")
    return ring, plane, pts, int(rec["w"])


def arc_text(plane, points):
    """Coordinate display, affine pairs (x,y) or projective columns (a:b:c)."""
    sep = "," if plane.kind == "affine" else ":"
    rows = []
    for p in points:
        c = plane.coords[int(p)]
        rows.append("(" + sep.join(str(int(v)) for v in c) + ")")
    return "{" + ", ".join(rows) + "}\n"


# -- classification results -----------------------------------------------------


def result_record(res):
    groups = {}
    for name, summ in res.by_group.items():
        groups[name] = {
            "count": int(summ.count),
            "histogram": {str(k): int(v) for k, v in sorted(summ.histogram.items())},
            "arcs": ([[list(map(int, pts)), int(stab)] for pts, stab in summ.arcs]
                     if summ.arcs is not None else None),
        }
    return {
        "ring": res.ring,
        "space": res.space,
        "n": int(res.n),
        "w": int(res.w),
        "groups": groups,
        "stats": {k: int(v) for k, v in res.stats.items()},
    }


def write_result_json(path, res):
    with open(path, "w") as fh:
        json.dump(result_record(res), fh, indent=1)
        fh.write("\n")


def read_result_json(path):
    with open(path) as fh:
        rec = json.load(fh)
    for key in ("ring", "space", "n", "w", "groups"):
        if key not in rec:
            raise ValueError(f"result file is missing the {key!r} field")
    return rec


_GROUP_ROW_ORDER = ("agl2", "agammal2", "pgl3_down", "pgammal3_down",
                    "pgl3", "pgammal3")


def result_csv(res):
    """Histogram pivot, one row per group, stabilizer orders as columns."""
    names = [g for g in _GROUP_ROW_ORDER if g in res.by_group]
    names += sorted(set(res.by_group) - set(names))
    orders = sorted({k for g in names for k in res.by_group[g].histogram})
    buf = io.StringIO()
    wr = csv.writer(buf)
    wr.writerow(["group"] + [f"s{k}" for k in orders] + ["total"])
    for g in names:
        hist = res.by_group[g].histogram
        wr.writerow([g] + [hist.get(k, 0) for k in orders]
                    + [res.by_group[g].count])
    return buf.getvalue()


def table_csv(rows):
    """Multi-size pivot: rows of (n, histogram dict, total), orders as columns."""
    orders = sorted({k for _, hist, _ in rows for k in hist})
    buf = io.StringIO()
    wr = csv.writer(buf)
    wr.writerow(["n"] + [f"s{k}" for k in orders] + ["total"])
    for n, hist, total in rows:
        wr.writerow([n] + [hist.get(k, 0) for k in orders] + [total])
    return buf.getvalue()


# -- planes ----------------------------------------------------------------------


def plane_record(plane):
    return {
        "ring": plane.ring.descriptor,
        "space": plane.kind,
        "n_points": int(plane.n_points),
        "n_lines": int(plane.n_lines),
        "points": [list(map(int, row)) for row in plane.coords],
        "lines": [list(map(int, plane.lines_points[m]))
                  for m in range(plane.n_lines)],
        "point_class": [int(c) for c in plane.point_class],
        "line_class": [int(c) for c in plane.line_class],
    }


def write_plane_json(path, plane):
    with open(path, "w") as fh:
        json.dump(plane_record(plane), fh)
        fh.write("\n")


def levi_graph_dimacs(plane, with_classes=False):
    """Bipartite incidence graph, 1-based DIMACS with vertex colour lines.

    Point vertices come first, then line vertices.  Colours separate points
    from lines; with_classes refines them by neighbour class, which restricts
    external isomorphism tools to class-preserving maps (collineations
    preserve classes anyway, so the refinement loses nothing on planes of
    the same shape).
    """
    np_, nl = plane.n_points, plane.n_lines
    lines = []
    edges = []
    for m in range(nl):
        for p in plane.lines_points[m]:
            edges.append((int(p) + 1, np_ + m + 1))
    lines.append(f"c levi graph of {plane.kind} plane over {plane.ring.descriptor}")
    lines.append(f"p edge {np_ + nl} {len(edges)}")
    if with_classes:
        n_pc = plane.factor.n_points
        for p in range(np_):
            lines.append(f"n {p + 1} {1 + int(plane.point_class[p])}")
        for m in range(nl):
            lines.append(f"n {np_ + m + 1} {1 + n_pc + int(plane.line_class[m])}")
    else:
        for p in range(np_):
            lines.append(f"n {p + 1} 1")
        for m in range(nl):
            lines.append(f"n {np_ + m + 1} 2")
    for u, v in edges:
        lines.append(f"e {u} {v}")
    return "\n".join(lines) + "\n"


def parse_levi_dimacs(text):
    """Inverse of levi_graph_dimacs up to comments: (nv, colours, edge set)."""
    nv = ne = None
    colours = {}
    edges = set()
    for ln in text.splitlines():
        parts = ln.split()
        if not parts or parts[0] == "c":
            continue
        if parts[0] == "p":
            nv, ne = int(parts[2]), int(parts[3])
        elif parts[0] == "n":
            colours[int(parts[1])] = int(parts[2])
        elif parts[0] == "e":
            edges.add((int(parts[1]), int(parts[2])))
    if nv is None or len(edges) != ne:
        raise ValueError("malformed DIMACS graph")
    return nv, colours, edges
