"""Batch front-end: plane facts, arc verification, classification, exports.

Exit codes: 0 success, 1 verification failure, 2 usage error (also what
argparse uses for malformed flags).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass

from .canonical import canonize_affine_arc, canonize_projective_arc
from .chain_ring import parse_ring_descriptor
from .collineation import GROUP_NAMES, collineation_group, group_order
from .constraints import distribution_shape
from .exports import (arc_record, arc_text, levi_graph_dimacs, plane_for,
                      result_csv, result_record, write_arc_json,
                      write_result_json, read_arc_json)
from .plane import affine_plane, projective_plane
from .search import (SearchConfig, brute_force_classify, classify_affine,
                     classify_projective, classify_projective_by_extension,
                     enumerate_distributions, export_blp, extend_to_projective,
                     prove_maximum, verify_arc)

_PIPELINES = {"factor-lift": "factor_lift", "affine-bb": "affine_bb",
              "brute": "brute_force"}


@dataclass
class JobSpec:
    """Parsed job: subcommand plus the search configuration it implies."""

    subcommand: str
    cfg: SearchConfig

    def validate(self, plane=None):
        self.cfg.validate(plane)


def _emit(args, text):
    if getattr(args, "out", None):
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_json(args, obj):
    _emit(args, json.dumps(obj, indent=1) + "\n")


def _ring(args):
    return parse_ring_descriptor(args.ring)


def _iso_sizes(text):
    return tuple(int(x) for x in text.split(",") if x)


def _search_config(args, ring):
    cfg = SearchConfig(
        ring=ring.descriptor,
        space=args.space,
        n=args.n,
        w=args.w,
        pipeline=_PIPELINES[args.pipeline],
        u_cap=args.u_cap,
        threads=args.threads,
        seed_prefix=args.seed_prefix,
        iso_check_sizes=_iso_sizes(args.iso_sizes) if args.iso_sizes else None,
        checkpoint=args.checkpoint,
    )
    return cfg


# -- subcommand bodies ---------------------------------------------------------


def _cmd_ring_info(args):
    ring = _ring(args)
    rec = {
        "descriptor": ring.descriptor,
        "size": int(ring.size),
        "q": int(ring.q),
        "m": int(ring.m),
        "radical": [int(z) for z in ring.radical],
        "units": int(ring.is_unit.sum()),
        "automorphisms": len(ring.automorphisms),
        "group_orders": {name: group_order(ring, name) for name in GROUP_NAMES
                         if ring.m == 2 or not name.endswith("_down")},
    }
    _emit_json(args, rec)
    return 0


def _cmd_plane_stats(args):
    ring = _ring(args)
    plane = plane_for(ring, args.space)
    per_line = {int(len(plane.lines_points[m])) for m in range(plane.n_lines)}
    per_point = {int(len(plane.point_lines[p])) for p in range(plane.n_points)}
    rec = {
        "ring": ring.descriptor,
        "space": plane.kind,
        "n_points": int(plane.n_points),
        "n_lines": int(plane.n_lines),
        "points_per_line": sorted(per_line),
        "lines_per_point": sorted(per_point),
        "point_classes": int(plane.factor.n_points),
        "line_classes": int(plane.factor.n_lines),
        "class_size": int(len(plane.class_members[0])),
    }
    _emit_json(args, rec)
    return 0


def _default_group(space):
    return "pgl3" if space == "projective" else "agl2"


def _canonize(ring, space, pts, group):
    if space == "projective":
        return canonize_projective_arc(ring, pts, group)
    return canonize_affine_arc(ring, pts, group)


def _cmd_verify(args):
    ring, plane, pts, w = read_arc_json(args.arc)
    if args.ring and args.ring != ring.descriptor:
        raise ValueError(f"arc file is over {ring.descriptor}, not {args.ring}")
    if args.space and args.space != plane.kind:
        raise ValueError(f"arc file is {plane.kind}, not {args.space}")
    if args.w is not None:
        w = args.w
    report = verify_arc(plane, pts, w)
    group = args.group or _default_group(plane.kind)
    if report["valid"]:
        res = _canonize(ring, plane.kind, pts, group)
        report["stabilizer_group"] = group
        report["stabilizer_order"] = int(res.stab_order)
    _emit_json(args, report)
    return 0 if report["valid"] else 1


def _cmd_canonize(args):
    ring, plane, pts, w = read_arc_json(args.arc)
    group = args.group or _default_group(plane.kind)
    res = _canonize(ring, plane.kind, pts, group)
    form = list(res.form)
    rec = arc_record(plane, form, w)
    rec["group"] = group
    rec["stabilizer_order"] = int(res.stab_order)
    rec["canonical_points"] = form
    _emit_json(args, rec)
    return 0


def _cmd_distributions(args):
    dists = enumerate_distributions(args.q, args.n, args.w, u_cap=args.u_cap)
    items = []
    for d in dists:
        entry = {"mult": [int(v) for v in d.mult], "u": d.u}
        shape = distribution_shape(d)
        if shape is not None:
            entry["shape"] = shape
        items.append(entry)
    _emit_json(args, {"q": args.q, "n": args.n, "w": args.w,
                      "count": len(items), "distributions": items})
    return 0


def _cmd_classify(args):
    ring = _ring(args)
    job = JobSpec("classify", _search_config(args, ring))
    plane = plane_for(ring, args.space)
    job.validate(plane)
    cfg = job.cfg
    if cfg.pipeline == "brute_force":
        res = brute_force_classify(plane, args.n, args.w)
    elif args.space == "affine":
        res = classify_affine(ring, args.n, args.w, cfg)
    elif cfg.pipeline == "factor_lift":
        res = classify_projective(ring, args.n, args.w, cfg)
    else:
        res = classify_projective_by_extension(ring, args.n, args.w, cfg)
    if args.out and args.out.endswith(".csv"):
        _emit(args, result_csv(res))
    elif args.out:
        write_result_json(args.out, res)
    else:
        _emit_json(args, result_record(res))
    return 0


def _cmd_prove_max(args):
    ring = _ring(args)
    cfg = SearchConfig(ring=ring.descriptor, space=args.space, w=args.w,
                       mode="prove_max", u_cap=args.u_cap,
                       threads=args.threads, checkpoint=args.checkpoint)
    m, res, certs = prove_maximum(ring, args.space, args.w, cfg)
    group = _default_group(args.space)
    count = res.count(group)
    print(f"maximum {args.w}-arc size in the {args.space} plane over "
          f"{ring.descriptor}: {m} ({count} classes)")
    summ = res.by_group[group]
    plane = plane_for(ring, args.space)
    if summ.arcs:
        print("witness:", arc_text(plane, summ.arcs[0][0]).strip())
    for size, cert in sorted(certs.items(), reverse=True):
        print(f"size {size}: empty, {cert} nodes searched")
    if args.out:
        write_result_json(args.out, res)
    return 0


def _cmd_extend(args):
    ring, plane, pts, w = read_arc_json(args.arc)
    if plane.kind != "affine":
        raise ValueError("extend expects an affine arc file")
    if args.w is not None:
        w = args.w
    classes = extend_to_projective(ring, pts, args.n, w)
    proj = projective_plane(ring)
    items = [{"points": [int(p) for p in form],
              "coords": arc_record(proj, form, w)["points"],
              "stabilizer_order": int(stab)} for form, stab in classes]
    _emit_json(args, {"ring": ring.descriptor, "n": args.n, "w": w,
                      "count": len(items), "extensions": items})
    return 0


def _cmd_export_lp(args):
    ring = _ring(args)
    plane = plane_for(ring, args.space)
    seed = ()
    if args.seed:
        _, seed_plane, seed, _ = read_arc_json(args.seed)
        if seed_plane is not plane:
            raise ValueError("seed arc lives in a different plane")
    cuts = {}
    if args.u_cap is not None:
        cuts["class_caps"] = args.u_cap
    text = export_blp(plane, args.n, args.w, seed=seed, cuts=cuts)
    _emit(args, text)
    return 0


def _cmd_export_graph(args):
    ring = _ring(args)
    plane = plane_for(ring, args.space)
    _emit(args, levi_graph_dimacs(plane, with_classes=args.classes))
    return 0


# -- argument wiring -------------------------------------------------------------


def _add_common(p, ring=True, space=True, n=False, w=True):
    if ring:
        p.add_argument("--ring", required=False, help="ring descriptor, e.g. z25")
    if space:
        p.add_argument("--space", choices=("affine", "projective"),
                       default=None)
    if n:
        p.add_argument("-n", type=int, required=True)
    if w:
        p.add_argument("-w", type=int, default=None)
    p.add_argument("--out", default=None, help="write the artifact here")


def build_parser():
    ap = argparse.ArgumentParser(prog="hjarc",
                                 description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("ring-info", help="ring facts and group orders")
    p.add_argument("--ring", required=True)
    p.add_argument("--out", default=None)

    p = sub.add_parser("plane-stats", help="incidence and class geometry")
    p.add_argument("--ring", required=True)
    p.add_argument("--space", choices=("affine", "projective"), required=True)
    p.add_argument("--out", default=None)

    p = sub.add_parser("verify", help="check an arc file, report stabilizer")
    p.add_argument("--arc", required=True)
    _add_common(p)
    p.add_argument("--group", choices=GROUP_NAMES, default=None)

    p = sub.add_parser("canonize", help="canonical form of an arc file")
    p.add_argument("--arc", required=True)
    p.add_argument("--group", choices=GROUP_NAMES, default=None)
    p.add_argument("--out", default=None)

    p = sub.add_parser("distributions", help="feasible class distributions")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("-n", type=int, required=True)
    p.add_argument("-w", type=int, default=2)
    p.add_argument("--u-cap", type=int, default=None)
    p.add_argument("--out", default=None)

    p = sub.add_parser("classify", help="isomorph-free classification")
    p.add_argument("--ring", required=True)
    p.add_argument("--space", choices=("affine", "projective"), required=True)
    p.add_argument("-n", type=int, required=True)
    p.add_argument("-w", type=int, default=2)
    p.add_argument("--pipeline", choices=sorted(_PIPELINES), default="factor-lift")
    p.add_argument("--u-cap", type=int, default=None)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--seed-prefix", type=int, default=5)
    p.add_argument("--iso-sizes", default=None,
                   help="comma list of sizes for full isomorphism rechecks")
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--out", default=None,
                   help=".json for the full result, .csv for the histogram")

    p = sub.add_parser("prove-max", help="maximum arc size with certificates")
    p.add_argument("--ring", required=True)
    p.add_argument("--space", choices=("affine", "projective"), required=True)
    p.add_argument("-w", type=int, default=2)
    p.add_argument("--u-cap", type=int, default=None)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--out", default=None)

    p = sub.add_parser("extend", help="projective completions of an affine arc")
    p.add_argument("--arc", required=True)
    p.add_argument("-n", type=int, required=True)
    p.add_argument("-w", type=int, default=None)
    p.add_argument("--out", default=None)

    p = sub.add_parser("export-lp", help="feasibility model in CPLEX LP text")
    p.add_argument("--ring", required=True)
    p.add_argument("--space", choices=("affine", "projective"), required=True)
    p.add_argument("-n", type=int, required=True)
    p.add_argument("-w", type=int, default=2)
    p.add_argument("--seed", default=None, help="arc file fixed to 1")
    p.add_argument("--u-cap", type=int, default=None,
                   help="emit per-class cap cuts at this value")
    p.add_argument("--out", default=None)

    p = sub.add_parser("export-graph", help="Levi graph in DIMACS text")
    p.add_argument("--ring", required=True)
    p.add_argument("--space", choices=("affine", "projective"), required=True)
    p.add_argument("--classes", action="store_true",
                   help="colour vertices by neighbour class")
    p.add_argument("--out", default=None)

    return ap


_DISPATCH = {
    "ring-info": _cmd_ring_info,
    "plane-stats": _cmd_plane_stats,
    "verify": _cmd_verify,
    "canonize": _cmd_canonize,
    "distributions": _cmd_distributions,
    "classify": _cmd_classify,
    "prove-max": _cmd_prove_max,
    "extend": _cmd_extend,
    "export-lp": _cmd_export_lp,
    "export-graph": _cmd_export_graph,
}


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    if getattr(args, "w", None) is not None and args.w != 2 and \
            args.subcommand in ("distributions",):
        print("only w = 2 distributions are supported", file=sys.stderr)
        return 2
    try:
        return _DISPATCH[args.subcommand](args)
    except (ValueError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
