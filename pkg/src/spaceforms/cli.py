"""Batch command-line entry point.

Subcommands: ``check`` (compatibility verdict), ``integrate``
(reconstruct an immersion and export meshes plus a verification report),
``family`` (theta sweep of minimal-surface companions), ``s2xs2``
(classification, Kaehler functions and the curvature-formula discrepancy
report), ``fixtures`` (golden dataset dumps).

Exit codes: 0 success, 2 verdict failure, 3 invalid input, 4 internal
error.  All outputs are deterministic for a fixed configuration.
"""

import argparse
import os
import sys

import numpy as np

from . import fixtures as fixture_registry
from .compat import compatibility_verdict
from .dataset import dumps_dataset, dumps_json, load_dataset, save_dataset
from .errors import SpaceformsError, ValidationError
from .family import generate_family
from .immersion import export_csv, export_obj, reconstruct
from .s2xs2 import (
    decompose_complex,
    export_classification_csv,
    export_kahler_csv,
    gauss_curvature_s2s2,
)

EXIT_OK = 0
EXIT_VERDICT = 2
EXIT_INPUT = 3
EXIT_INTERNAL = 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _build_parser():
    parser = _Parser(prog="spaceforms",
                     description="compatibility checks and immersion synthesis "
                                 "for products of space forms")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_input=True):
        if needs_input:
            p.add_argument("--input", help="dataset JSON file")
            p.add_argument("--fixture", help="analytic fixture name")
            p.add_argument("--grid", default="33x33",
                           help="fixture grid as NUxNV (default 33x33)")
            p.add_argument("--kappa1", type=float, default=0.5)
            p.add_argument("--kappa2", type=float, default=-0.3)
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--profile", choices=["default", "strict"],
                       default="default")

    p_check = sub.add_parser("check", help="run the compatibility verdict")
    common(p_check)

    p_int = sub.add_parser("integrate", help="reconstruct the immersion")
    common(p_int)
    p_int.add_argument("--base", default=None, help="base node as IU,IV")
    p_int.add_argument("--export", default="obj,csv,json",
                       help="comma list from {obj,csv,json}")

    p_fam = sub.add_parser("family", help="associated family sweep")
    common(p_fam)
    p_fam.add_argument("--theta", required=True, help="comma list of angles")
    p_fam.add_argument("--base", default=None, help="base node as IU,IV")

    p_cx = sub.add_parser("s2xs2", help="complex-structure reports")
    common(p_cx)
    p_cx.add_argument("--base", default=None, help="base node as IU,IV")

    p_fix = sub.add_parser("fixtures", help="dump golden fixture datasets")
    common(p_fix)
    return parser


def _parse_grid(text):
    try:
        nu, nv = (int(x) for x in text.lower().split("x"))
        return nu, nv
    except Exception:
        raise ValidationError(f"bad --grid value {text!r}; expected NUxNV") from None


def _parse_base(text, chart):
    if text is None:
        return (chart.nu // 2, chart.nv // 2)
    try:
        iu, iv = (int(x) for x in text.split(","))
    except Exception:
        raise ValidationError(f"bad --base value {text!r}; expected IU,IV") from None
    if not (0 <= iu < chart.nu and 0 <= iv < chart.nv):
        raise ValidationError(f"base node ({iu}, {iv}) outside the chart")
    return iu, iv


def _load_input(args):
    if args.input and args.fixture:
        raise ValidationError("give either --input or --fixture, not both")
    if args.input:
        return load_dataset(args.input), None
    if args.fixture:
        nu, nv = _parse_grid(args.grid)
        params = {}
        if args.fixture == "product_of_curves":
            params = {"kappa1": args.kappa1, "kappa2": args.kappa2}
        bundle = fixture_registry.generate(args.fixture, nu=nu, nv=nv, **params)
        return bundle.dataset, bundle
    raise ValidationError("an input is required: --input FILE or --fixture NAME")


def _write(path, text):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
        if not text.endswith("\n"):
            fh.write("\n")


def _cmd_check(args):
    ds, _ = _load_input(args)
    report = compatibility_verdict(ds, args.profile)
    os.makedirs(args.out, exist_ok=True)
    _write(os.path.join(args.out, "check_report.json"), report.to_json())
    print(f"verdict: {'pass' if report.verdict else 'fail'}")
    for key in sorted(report.equations):
        stat = report.equations[key]
        flag = "ok " if stat.max <= report.tolerances[key] else "FAIL"
        print(f"  [{flag}] {key}: max {stat.max:.3e} mean {stat.mean:.3e} "
              f"at node {stat.argmax_node}")
    if not report.verdict:
        print("violated: " + ", ".join(report.failing()))
        return EXIT_VERDICT
    return EXIT_OK


def _cmd_integrate(args):
    ds, bundle = _load_input(args)
    base = _parse_base(args.base, ds.chart)
    ground = bundle.ground_truth if bundle is not None else None
    gate = compatibility_verdict(ds, args.profile)
    if not gate.verdict:
        print("compatibility gate failed: " + ", ".join(gate.failing()),
              file=sys.stderr)
        return EXIT_VERDICT
    im, report, alignment = reconstruct(ds, base_node=base, profile=args.profile,
                                        ground_truth=ground, check_compat=False)
    os.makedirs(args.out, exist_ok=True)
    formats = {x.strip() for x in args.export.split(",") if x.strip()}
    if "obj" in formats:
        export_obj(im, os.path.join(args.out, "immersion.obj"))
    if "csv" in formats:
        export_csv(im, os.path.join(args.out, "immersion.csv"))
    if "json" in formats:
        doc = report.to_dict()
        if alignment is not None:
            doc["alignment_residual"] = alignment.residual
        _write(os.path.join(args.out, "verification.json"), dumps_json(doc))
    print(f"verification: {'pass' if report.verdict else 'fail'}")
    if alignment is not None:
        print(f"alignment residual vs ground truth: {alignment.residual:.3e}")
    return EXIT_OK if report.verdict else EXIT_VERDICT


def _cmd_family(args):
    ds, _ = _load_input(args)
    base = _parse_base(args.base, ds.chart)
    try:
        thetas = [float(x) for x in args.theta.split(",") if x.strip()]
    except Exception:
        raise ValidationError(f"bad --theta value {args.theta!r}") from None
    results = generate_family(ds, thetas, base_node=base, profile=args.profile)
    os.makedirs(args.out, exist_ok=True)
    manifest = []
    ok = True
    for idx, (theta, im, report) in enumerate(results):
        name = f"family_{idx:03d}.obj"
        export_obj(im, os.path.join(args.out, name))
        ok = ok and report.verdict
        manifest.append({
            "theta": theta,
            "obj": name,
            "verification": report.to_dict(),
        })
    _write(os.path.join(args.out, "family_manifest.json"), dumps_json(manifest))
    print(f"family: {len(results)} samples, verification "
          f"{'pass' if ok else 'fail'}")
    return EXIT_OK if ok else EXIT_VERDICT


def _cmd_s2xs2(args):
    ds, bundle = _load_input(args)
    base = _parse_base(args.base, ds.chart)
    if bundle is not None:
        im = bundle.ground_truth
    else:
        im, _, _ = reconstruct(ds, base_node=base, profile=args.profile)
    cd = decompose_complex(im)
    curv = gauss_curvature_s2s2(cd, ds)
    os.makedirs(args.out, exist_ok=True)
    export_classification_csv(cd, os.path.join(args.out, "classification.csv"))
    export_kahler_csv(cd, os.path.join(args.out, "kahler.csv"))
    disc = curv["K_discrepancy"]
    doc = {
        "K_general": {"min": float(np.min(curv["K"])), "max": float(np.max(curv["K"]))},
        "K_printed": {"min": float(np.min(curv["K_printed"])),
                      "max": float(np.max(curv["K_printed"]))},
        "discrepancy_max_abs": float(np.max(np.abs(disc))),
        "codazzi_residual_max": float(np.max(curv["codazzi_residual"])),
        "ricci_residual_max": float(np.max(curv["ricci_residual"])),
    }
    _write(os.path.join(args.out, "k_discrepancy.json"), dumps_json(doc))
    print(f"K discrepancy (printed vs general): {doc['discrepancy_max_abs']:.6g}")
    return EXIT_OK


def _cmd_fixtures(args):
    if not args.fixture:
        raise ValidationError("--fixture NAME is required")
    nu, nv = _parse_grid(args.grid)
    params = {}
    if args.fixture == "product_of_curves":
        params = {"kappa1": args.kappa1, "kappa2": args.kappa2}
    bundle = fixture_registry.generate(args.fixture, nu=nu, nv=nv, **params)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, f"{args.fixture}_{nu}x{nv}.json")
    save_dataset(bundle.dataset, path)
    print(f"wrote {path}")
    return EXIT_OK


_HANDLERS = {
    "check": _cmd_check,
    "integrate": _cmd_integrate,
    "family": _cmd_family,
    "s2xs2": _cmd_s2xs2,
    "fixtures": _cmd_fixtures,
}


def run(argv):
    """Parse and run; returns the exit status without calling sys.exit."""
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SpaceformsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
