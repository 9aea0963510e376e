"""Command-line front end.

Exit codes: 0 success / inside, 1 separated or failed check, 2 input error,
3 enumeration guard exceeded.
"""
from __future__ import annotations

import argparse
import random
import sys

from .core import VARIANTS, EnumerationTooLarge, InvalidInstance, QMatchError, format_rational, set_enum_guard
from .decomposition import DecompositionError, lemma_down_decompose, lemma_up_decompose, tight_face_point
from .formats import ParseError, ProblemSpec, edge_name, parse_point, parse_problem, write_point
from .inequalities import FamilyInstance, Kind, build
from .separation import separate_down, separate_exact, separate_up

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_GUARD = 0, 1, 2, 3


def render_instance(inst: FamilyInstance, p) -> str:
    """Tag plus identifying data, e.g. ``DOWN S={w1,w2,u3}``."""
    tag = inst.kind.value.upper()
    if inst.S is not None:
        text = f"{tag} S={{{','.join(p.display_order(inst.S))}}}"
        if inst.F:
            text += " F={" + ",".join(edge_name(e) for e in sorted(inst.F)) + "}"
        return text
    if inst.edge is not None:
        return f"{tag} {edge_name(inst.edge)}"
    if inst.node is not None:
        return f"{tag} {inst.node}"
    if inst.index is not None:
        return f"{tag} i={inst.index}"
    return tag


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _load(args, with_point=True):
    spec = parse_problem(_read(args.problem), args.problem)
    pt = parse_point(_read(args.point), spec.problem, args.point) if with_point else None
    return spec, pt


def cmd_separate(args, out) -> int:
    spec, pt = _load(args)
    p = spec.problem
    oracle = {"down": separate_down, "up": separate_up, "exact": separate_exact}[args.variant]
    hit = oracle(p, pt)
    if hit is None:
        print("inside", file=out)
        return EXIT_OK
    inst, viol = hit
    print(f"{render_instance(inst, p)} violation={format_rational(viol)}", file=out)
    if args.show:
        print(build(inst, p).render(p), file=out)
    return EXIT_FAIL


def _term_line(m, y, lam) -> str:
    edges = " ".join(edge_name(e) for e in sorted(m)) or "-"
    return f"mult {format_rational(lam)} ; {edges} ; y={y}"


def cmd_decompose(args, out) -> int:
    spec, pt = _load(args)
    p = spec.problem
    fn = lemma_down_decompose if args.lemma == "down" else lemma_up_decompose
    trace: dict = {}
    try:
        comb = fn(p, pt, trace=trace)
    except DecompositionError as exc:
        print(f"hypothesis failed: {exc}", file=out)
        return EXIT_FAIL
    if comb.point(p) != pt:  # already checked inside, kept as a last guard
        print("internal error: terms do not reproduce the point", file=out)
        return EXIT_FAIL
    for m, y, lam in comb.terms:
        print(_term_line(m, y, lam), file=out)
    if args.verbose:
        print(f"# k={trace['k']} exchange steps={len(trace['steps'])} "
              f"tight={'; '.join(render_instance(i, p) for i in trace['tight'])}", file=out)
    return EXIT_OK


def _verify_bmatching(spec: ProblemSpec, args, out) -> bool:
    from .bmatching import verify_bmatching_description

    bp = spec.bmatching()
    max_f = None if args.all_f else args.max_f
    report = verify_bmatching_description(bp, max_f=max_f if bp.capacitated else None)
    print("b-matching:", file=out)
    for line in report.lines():
        print("  " + line, file=out)
    return report.ok


def cmd_verify(args, out) -> int:
    from . import verify as V

    spec = parse_problem(_read(args.problem), args.problem)
    p = spec.problem
    if args.bmatching:
        if not spec.is_bmatching:
            print("problem file has no 'b' or 'cap' line", file=out)
            return EXIT_INPUT
        return EXIT_OK if _verify_bmatching(spec, args, out) else EXIT_FAIL
    variants = VARIANTS if args.variant == "all" else (args.variant,)
    variants = [v for v in variants if not (v.startswith("perfect_") and p.m != p.n)]
    everything = not (args.validity or args.facets or args.completeness or args.monotonization)
    ok = True
    for variant in variants:
        if args.list:
            for k, inst in enumerate(V.description_instances(p, variant)):
                print(f"[{variant}] {k}: {render_instance(inst, p)} : {build(inst, p).render(p)}", file=out)
        if everything or args.validity or args.corrupt_rhs is not None:
            shift = None
            if args.corrupt_rhs is not None:
                insts = V.description_instances(p, variant)
                if not 0 <= args.corrupt_rhs < len(insts):
                    print(f"--corrupt-rhs index out of range 0..{len(insts) - 1}", file=out)
                    return EXIT_INPUT
                shift = {insts[args.corrupt_rhs]: -1}
            rep = V.check_validity(p, variant, shift)
            ok &= rep.ok
            for line in rep.lines(p):
                print(line, file=out)
        if everything or args.completeness:
            rep = V.check_completeness(p, variant)
            ok &= rep.ok
            for line in rep.lines():
                print(line, file=out)
        if (everything or args.facets) and not variant.startswith("perfect_"):
            table = V.facet_table(p, variant)
            print(f"facets [{variant}]: dimension {table[0].dim if table else '?'}", file=out)
            for verdict in table:
                word = "facet" if verdict.facet else f"not_facet ({verdict.reason})"
                print(f"  {render_instance(verdict.instance, p)}: {word}", file=out)
    if everything or args.monotonization:
        rep = V.check_monotonization_identity(p)
        ok &= rep.ok
        for line in rep.lines():
            print(line, file=out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_tight_point(args, out) -> int:
    spec = parse_problem(_read(args.problem), args.problem)
    p = spec.problem
    rng = random.Random(args.seed)
    pt, cert = tight_face_point(p, args.lemma, rng, pieces=args.pieces)
    print(f"# tight for {render_instance(cert, p)}", file=out)
    out.write(write_point(pt, p))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qmatch", description="Exact tools for matching polytopes with one quadratic term.")
    ap.add_argument("--enum-guard", type=int, metavar="N",
                    help="largest edge count for brute-force enumeration (default 24 or $QMATCH_ENUM_GUARD)")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("separate", help="separate a point from the down, up or exact polytope")
    s.add_argument("problem")
    s.add_argument("point")
    s.add_argument("--variant", choices=("down", "up", "exact"), default="exact")
    s.add_argument("--show", action="store_true", help="also print the violated inequality")
    s.set_defaults(func=cmd_separate)

    d = sub.add_parser("decompose", help="write a tight point as a convex combination of vertices")
    d.add_argument("problem")
    d.add_argument("point")
    d.add_argument("--lemma", choices=("down", "up"), required=True)
    d.add_argument("-v", "--verbose", action="store_true")
    d.set_defaults(func=cmd_decompose)

    v = sub.add_parser("verify", help="validity, facet, completeness and monotonization checks")
    v.add_argument("problem")
    v.add_argument("--variant", choices=VARIANTS + ("all",), default="all")
    v.add_argument("--validity", action="store_true")
    v.add_argument("--facets", action="store_true")
    v.add_argument("--completeness", action="store_true")
    v.add_argument("--monotonization", action="store_true")
    v.add_argument("--bmatching", action="store_true", help="check the b-matching description instead")
    v.add_argument("--max-f", type=int, default=3, help="largest F in capacitated families (default 3)")
    v.add_argument("--all-f", action="store_true", help="enumerate every F")
    v.add_argument("--corrupt-rhs", type=int, metavar="K", help="lower the rhs of description row K by 1")
    v.add_argument("--list", action="store_true", help="print the description rows")
    v.set_defaults(func=cmd_verify)

    t = sub.add_parser("tight-point", help="sample a point on a tight face")
    t.add_argument("problem")
    t.add_argument("--lemma", choices=("down", "up"), required=True)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--pieces", type=int, default=3)
    t.set_defaults(func=cmd_tight_point)
    return ap


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    if args.enum_guard is not None:
        set_enum_guard(args.enum_guard)
    try:
        return args.func(args, out)
    except EnumerationTooLarge as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (ParseError, InvalidInstance, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except QMatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    finally:
        if args.enum_guard is not None:
            set_enum_guard(None)


if __name__ == "__main__":
    sys.exit(main())
