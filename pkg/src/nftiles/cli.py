"""Command-line interface: ``nft classify | attach-table | realize | minimize``.

Exit codes: 0 ok, 2 validation failure, 3 numerical failure, 64 usage.
Set ``NFT_LOG`` (e.g. ``INFO`` or ``DEBUG``) for log output on stderr.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import attach, config, energy, tiles
from .errors import ConvergenceError, DegenerateError, DomainError, NftError
from .geom_core import VALIDATED_THETA_MIN, bond_angle, cell_constants

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERIC, EXIT_USAGE = 0, 2, 3, 64

logger = logging.getLogger("nftiles.cli")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# deterministic output


def fnum(x: float) -> str:
    return format(float(x), ".17g")


def to_json(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with every float printed to 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return json.dumps(obj)
    if isinstance(obj, (float, np.floating)):
        return fnum(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {to_json(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple)) for v in obj):
            return "[" + ", ".join(to_json(v, indent, _level + 1) for v in obj) + "]"
        items = [pad + to_json(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _theta(value: Optional[float], default: float = 1.40) -> float:
    theta = default if value is None else value
    if not VALIDATED_THETA_MIN <= theta < math.pi / 2:
        raise UsageError(f"--theta must lie in [{VALIDATED_THETA_MIN}, pi/2), got {theta}")
    if theta <= tiles.ORIENTATION_THETA_MIN:
        logger.warning("theta %.6g is at or below arccos(1/3); boundary orientations flip there", theta)
    return theta


# ---------------------------------------------------------------------------
# classify

SIDE_LABELS = ("R", "B", "L", "T")


def classification_rows(theta: Optional[float] = None) -> List[dict]:
    consts = cell_constants(theta) if theta is not None else None
    rows = []
    for t in sorted(tiles.all_types(), key=lambda x: (tiles.classify(x).value, x.code)):
        row = {"type": t.code, "class": tiles.classify(t).value, "marks": tiles.corner_marks(t)}
        kinds, orients = [], []
        for side in tiles.TABLE_SIDES:
            k = tiles.boundary_kind(t, side)
            kinds.append(k.value)
            orients.append("-" if k is tiles.BoundaryKind.Eb else
                           ("^" if tiles.boundary_orientation(t, side) is tiles.Orientation.UP else "v"))
        row["kinds"] = "".join(kinds) if all(len(k) == 1 for k in kinds) else " ".join(kinds)
        row["orientations"] = "".join(orients)
        if consts is not None:
            ref = tiles.reference_tile(t, consts)
            e_angles = [bond_angle(*ref.boundary_triple(s)) for s in tiles.TABLE_SIDES
                        if tiles.boundary_kind(t, s) is tiles.BoundaryKind.Eb]
            row["delta_theta"] = consts.delta_theta
            row["e_angle"] = min(e_angles) if e_angles else None
        rows.append(row)
    return rows


def partition_matches_table() -> Tuple[bool, Dict[str, int]]:
    """Orbits under rotation and reflection against the transcribed classes."""
    computed = {}
    for t in tiles.all_types():
        computed.setdefault(tiles.orbit(t), set()).add(tiles.classify(t))
    sizes = {}
    ok = True
    for orb, classes in computed.items():
        if len(classes) != 1:
            ok = False
            continue
        cls = next(iter(classes))
        sizes[cls.value] = len(orb)
        ok &= frozenset(tiles.TABLE_CLASSES[cls]) == orb
    ok &= len(computed) == len(tiles.TABLE_CLASSES)
    return ok, dict(sorted(sizes.items()))


def cmd_classify(args) -> int:
    if args.boundaries and args.theta is None:
        raise UsageError("--boundaries needs --theta")
    theta = _theta(args.theta) if args.theta is not None else None
    rows = classification_rows(theta if args.boundaries else None)
    ok, sizes = partition_matches_table()
    if args.format == "json":
        _emit(to_json({"classes": sizes, "matches_table": ok, "types": rows}) + "\n", args.out)
    else:
        buf = io.StringIO()
        cols = list(rows[0].keys())
        buf.write("\t".join(cols) + "\n")
        for r in rows:
            buf.write("\t".join("" if r[c] is None else (fnum(r[c]) if isinstance(r[c], float) else str(r[c]))
                                for c in cols) + "\n")
        buf.write("# classes " + " ".join(f"{k}={v}" for k, v in sizes.items()) + "\n")
        _emit(buf.getvalue(), args.out)
    if not ok:
        print("computed classification deviates from the transcribed table", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


# ---------------------------------------------------------------------------
# attach-table

TABLE_COLUMNS = ("left_type", "right_type", "direction", "ok", "reason", "middle_type")


def table_records(rows: Sequence[attach.TableRow]) -> List[dict]:
    return [
        {
            "left_type": r.left_type.code,
            "right_type": r.right_type.code,
            "direction": r.direction,
            "ok": r.verdict.ok,
            "reason": r.verdict.reason.value,
            "middle_type": r.verdict.middle_type.code if r.verdict.middle_type else "",
        }
        for r in rows
    ]


def cmd_attach_table(args) -> int:
    theta = _theta(args.theta)
    consts = cell_constants(theta)
    records = table_records(attach.pairwise_table(consts))
    if args.format == "json":
        text = to_json({"theta": theta, "rows": records}) + "\n"
    else:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=TABLE_COLUMNS, lineterminator="\n")
        w.writeheader()
        for rec in records:
            w.writerow({**rec, "ok": "true" if rec["ok"] else "false"})
        text = buf.getvalue()
    _emit(text, args.out)
    if args.check_paper:
        bad = [c for c in attach.check_case_tables(consts) if not c.ok]
        for c in bad:
            print(f"{c.table} row {c.row} {c.column}: expected {c.expected}, got {c.computed}", file=sys.stderr)
        if bad:
            return EXIT_VALIDATION
        print("case tables reproduced", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------
# pattern files and meshes


@dataclass
class PatternSpec:
    theta: Optional[float] = None
    family: config.Family = config.Family.FAMILY_A
    extent: Optional[Tuple[int, int]] = None
    section: List[config.SectionSymbol] = field(default_factory=list)
    diagonal: List[tiles.TileType] = field(default_factory=list)
    text: str = ""


def parse_extent(value: str) -> Tuple[int, int]:
    try:
        w, h = (int(x) for x in value.lower().split("x"))
    except ValueError:
        raise UsageError(f"extent must look like WxH, got {value!r}") from None
    if w < 1 or h < 1:
        raise UsageError(f"extent must be positive, got {value!r}")
    return w, h


def parse_pattern(text: str) -> PatternSpec:
    """Headers ``key = value`` (theta, family, extent); then either section
    tokens F/U/D or one tile code per line listing the rolling diagonal."""
    spec = PatternSpec(text=text)
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line and not line.startswith("["):
            key, _, value = (s.strip() for s in line.partition("="))
            if key == "theta":
                spec.theta = float(value)
            elif key == "family":
                spec.family = config.Family(value.upper())
            elif key == "extent":
                spec.extent = parse_extent(value)
            else:
                raise DomainError(f"line {n}: unknown header {key!r}")
        elif line.startswith("["):
            spec.diagonal.append(tiles.TileType.parse(line))
        else:
            spec.section.extend(config.SectionSymbol.parse(tok) for tok in line.split())
    if bool(spec.section) == bool(spec.diagonal):
        raise DomainError("a pattern needs either section tokens or diagonal tile codes, not both")
    return spec


def build_pattern(spec: PatternSpec) -> config.TypePattern:
    if spec.section:
        return config.pattern_from_section(spec.section, spec.family, spec.extent)
    return config.pattern_from_types(spec.diagonal, spec.family, spec.extent)


@dataclass
class MeshExport:
    vertices: np.ndarray
    quads: List[Tuple[int, int, int, int]]
    sites: List[Tuple[int, int]]
    metadata: Dict[str, object]


def mesh_from_deformation(y: config.Deformation, metadata: Optional[dict] = None) -> MeshExport:
    """One quad per reference cell, corners counterclockwise in the lattice."""
    sites = sorted(y.points, key=lambda s: (s[1], s[0]))
    index = {s: k for k, s in enumerate(sites)}
    quads = []
    for (s, t) in sites:
        corners = [(s, t), (s + 1, t), (s + 1, t + 1), (s, t + 1)]
        if all(c in index for c in corners):
            quads.append(tuple(index[c] for c in corners))
    verts = np.array([y.points[s] for s in sites])
    return MeshExport(verts, quads, sites, dict(metadata or {}))


def write_obj(mesh: MeshExport) -> str:
    out = [f"# {k} {v}" for k, v in mesh.metadata.items()]
    out += ["v " + " ".join(fnum(c) for c in v) for v in mesh.vertices]
    out += ["f " + " ".join(str(i + 1) for i in q) for q in mesh.quads]
    return "\n".join(out) + "\n"


def read_obj(text: str) -> Tuple[np.ndarray, List[Tuple[int, ...]]]:
    verts, faces = [], []
    for line in text.splitlines():
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        if parts[0] == "v":
            verts.append([float(x) for x in parts[1:4]])
        elif parts[0] == "f":
            faces.append(tuple(int(x.split("/")[0]) - 1 for x in parts[1:]))
    return np.array(verts), faces


def write_ply(mesh: MeshExport) -> str:
    head = ["ply", "format ascii 1.0"]
    head += [f"comment {k} {v}" for k, v in mesh.metadata.items()]
    head += [f"element vertex {len(mesh.vertices)}", "property double x", "property double y", "property double z",
             f"element face {len(mesh.quads)}", "property list uchar int vertex_indices", "end_header"]
    body = [" ".join(fnum(c) for c in v) for v in mesh.vertices]
    body += ["4 " + " ".join(str(i) for i in q) for q in mesh.quads]
    return "\n".join(head + body) + "\n"


def incidence_summary(y: config.Deformation, gamma_star: float, tol: float = 1e-9) -> dict:
    inc = config.incidence_angles(y)

    def counts(values):
        out = {"-1": 0, "0": 0, "+1": 0, "other": 0}
        for v in values:
            k = config.classify_gamma(v, gamma_star, tol)
            out["other" if k is None else {-1: "-1", 0: "0", 1: "+1"}[k]] += 1
        return out

    def drift(g, step):
        worst = 0.0
        for (u, w), v in g.items():
            nb = (u + step[0], w + step[1])
            if nb in g:
                worst = max(worst, abs(g[nb] - v))
        return worst

    return {
        "gamma_star": gamma_star,
        "bonds": len(inc.gamma1),
        "gamma1_max_abs": max((abs(v) for v in inc.gamma1.values()), default=0.0),
        "gamma2_max_abs": max((abs(v) for v in inc.gamma2.values()), default=0.0),
        "gamma1_classes": counts(inc.gamma1.values()),
        "gamma2_classes": counts(inc.gamma2.values()),
        "gamma1_drift_along_d2": drift(inc.gamma1, (-0.5, 0.5)),
        "gamma2_drift_along_d1": drift(inc.gamma2, (0.5, 0.5)),
    }


def cmd_realize(args) -> int:
    try:
        text = Path(args.pattern).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read pattern file: {exc}") from None
    try:
        spec = parse_pattern(text)
        if args.extent:
            spec.extent = parse_extent(args.extent)
        pattern = build_pattern(spec)
    except (DomainError, ValueError) as exc:
        print(to_json({"valid": False, "violations": [{"rule": "PARSE", "sites": [], "detail": str(exc)}]}))
        return EXIT_VALIDATION
    report = config.validate_pattern(pattern)
    if not report.valid:
        print(to_json({"valid": False, "violations": [
            {"rule": v.rule, "sites": [list(s) for s in v.sites], "detail": v.detail} for v in report.violations
        ]}))
        return EXIT_VALIDATION
    theta = _theta(args.theta if args.theta is not None else spec.theta)
    consts = tiles.with_gamma_star(cell_constants(theta))
    y = config.realize(pattern, consts)
    adm = config.verify_admissible(y, consts, args.tolerance)
    digest = hashlib.sha256(spec.text.encode("utf-8")).hexdigest()[:16]
    summary = {
        "theta": theta,
        "family": pattern.family.value,
        "shape": list(pattern.shape),
        "pattern_hash": digest,
        "points": len(y.points),
        "admissible": adm.ok,
        "max_bond_residual": adm.max_bond,
        "max_right_angle_residual": adm.max_right,
        "max_straight_angle_residual": adm.max_straight,
        "incidence": incidence_summary(y, consts.gamma_star),
    }
    mesh = mesh_from_deformation(y, {"theta": fnum(theta), "pattern_hash": digest})
    summary["faces"] = len(mesh.quads)
    if args.out:
        fmt = args.format or ("ply" if args.out.endswith(".ply") else "obj")
        if fmt not in ("obj", "ply"):
            raise UsageError("realize writes obj or ply meshes")
        Path(args.out).write_text(write_obj(mesh) if fmt == "obj" else write_ply(mesh), encoding="utf-8")
        report_path = args.report or str(Path(args.out).with_suffix(".json"))
        Path(report_path).write_text(to_json(summary) + "\n", encoding="utf-8")
    print(to_json(summary))
    return EXIT_OK if adm.ok else EXIT_VALIDATION


# ---------------------------------------------------------------------------
# minimize


def cmd_minimize(args) -> int:
    try:
        p = energy.load_potential(args.potential) if args.potential else energy.PotentialParams()
    except OSError as exc:
        raise UsageError(f"cannot read potential file: {exc}") from None
    except DomainError as exc:
        print(f"nft: invalid potential file: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    audit = energy.check_assumptions(p)
    try:
        seeds = range(args.seed, args.seed + args.starts)
        runs = energy.minimize_starts(p, seeds, workers=args.workers)
    except (ConvergenceError, DegenerateError) as exc:
        print(f"minimisation failed: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    best = min(runs, key=lambda r: r.breakdown.total)
    b = best.breakdown
    result = {
        "ell_bar": b.ell_bar,
        "theta_bar": b.theta_bar,
        "delta13": b.delta13,
        "delta24": b.delta24,
        "delta_theta_bar": (energy.f_theta_fixed_point(b.theta_bar) if b.theta_bar < math.pi / 2 else None),
        "energy": b.total,
        "lengths": list(b.lengths),
        "thetas": list(b.thetas),
        "iterations": best.iterations,
        "gradient_norm": best.gradient_norm,
        "starts": args.starts,
        "energy_spread": max(r.breakdown.total for r in runs) - min(r.breakdown.total for r in runs),
        "assumptions": {k: {"passed": r.passed, "margin": r.margin, "where": r.where}
                        for k, r in audit.results.items()},
        "assumptions_passed": audit.passed,
    }
    _emit(to_json(result) + "\n", args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="nft", description="Tiles of rigid unit cells: classification, attachment, realisation.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("classify", help="all 32 tile types with class, boundary kinds and orientations")
    c.add_argument("--format", choices=("text", "json"), default="text")
    c.add_argument("--theta", type=float)
    c.add_argument("--boundaries", action="store_true", help="add delta_theta and E-boundary angle columns")
    c.add_argument("--out")
    c.set_defaults(func=cmd_classify)

    a = sub.add_parser("attach-table", help="pairwise attachment verdicts for Z/D/I types")
    a.add_argument("--theta", type=float)
    a.add_argument("--format", choices=("csv", "json"), default="csv")
    a.add_argument("--check-paper", action="store_true", help="compare with the transcribed case tables")
    a.add_argument("--out")
    a.set_defaults(func=cmd_attach_table)

    r = sub.add_parser("realize", help="realise a pattern file and export a mesh")
    r.add_argument("pattern_file", nargs="?")
    r.add_argument("--pattern", dest="pattern_opt")
    r.add_argument("--theta", type=float)
    r.add_argument("--extent")
    r.add_argument("--out")
    r.add_argument("--report")
    r.add_argument("--format", choices=("obj", "ply"))
    r.add_argument("--tolerance", type=float)
    r.set_defaults(func=cmd_realize)

    m = sub.add_parser("minimize", help="audit the potentials and minimise the cell energy")
    m.add_argument("potential", nargs="?")
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--starts", type=int, default=1)
    m.add_argument("--workers", type=int, default=1, help="processes for the independent starts")
    m.add_argument("--out")
    m.set_defaults(func=cmd_minimize)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    level = os.environ.get("NFT_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    if args.command == "realize":
        args.pattern = args.pattern_opt or args.pattern_file
        if not args.pattern:
            print("nft realize: a pattern file is required", file=sys.stderr)
            return EXIT_USAGE
    if getattr(args, "starts", 1) < 1:
        print("nft: --starts must be positive", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"nft: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConvergenceError as exc:
        print(f"nft: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except NftError as exc:
        print(f"nft: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
