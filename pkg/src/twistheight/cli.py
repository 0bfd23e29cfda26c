"""Command-line entry point: ``twistheight <command> [options]``.

Exit codes: 0 ok, 2 bad configuration, 3 precision not attainable,
4 domain error (off-curve point, non-squarefree d), 5 internal invariant failure.
"""

from __future__ import annotations

import argparse
import json
import os
import shutil
import sys
from fractions import Fraction
from typing import Optional

from . import __version__, arith, census, heights, quartic, rootnum
from .curve import BaseCurve, CurveError, TwistPoint, load_curve, on_curve

EXIT_OK, EXIT_CONFIG, EXIT_PRECISION, EXIT_DOMAIN, EXIT_INVARIANT = 0, 2, 3, 4, 5

CENSUS_COLUMNS = ["d", "eta_log", "eta_err", "witness_X_num", "witness_X_den",
                  "witness_Y_num", "witness_Y_den", "omega", "predicted_rank"]
MOMENT_COLUMNS = ["Z", "total_pairs", "R_Q", "R_Q_over_Z2", "S_plus", "S_minus", "S_unknown",
                  "distinct_plus", "distinct_minus", "distinct_unknown", "unknown_frac"]


class ConfigError(Exception):
    pass


class DomainError(Exception):
    pass


def fmt(x) -> str:
    """Reals with 12 significant digits; integers and None verbatim."""
    if x is None:
        return "unknown"
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def _signed(w: Optional[int]) -> str:
    return "unknown" if w is None else f"{w:+d}"


def header(command: str, curve: BaseCurve, config: dict) -> str:
    # thread count and file locations are left out so outputs compare byte for byte
    return (f"# twistheight {__version__} {command} curve={curve.label()} "
            f"params={json.dumps(curve.to_dict(), sort_keys=True)} "
            f"config={json.dumps(config, sort_keys=True)}")


def _open_out(path: Optional[str]):
    if path is None:
        return sys.stdout
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    return open(path, "w", newline="")


def _emit(path: Optional[str], lines: list[str]) -> None:
    fh = _open_out(path)
    try:
        fh.write("\n".join(lines) + "\n")
    finally:
        if fh is not sys.stdout:
            fh.close()


def _summary_path(output: str) -> str:
    root, ext = os.path.splitext(output)
    return (root if ext.lower() == ".csv" else output) + ".summary.json"


# -- census --------------------------------------------------------------------


def census_lines(report: census.CensusReport, head: str) -> list[str]:
    lines = [head, ",".join(CENSUS_COLUMNS)]
    for e in report.entries:
        X, Y = e.witness.X, e.witness.Y
        lines.append(",".join([
            str(e.d), fmt(e.eta_log.value), fmt(e.eta_log.error_bound),
            str(X.numerator), str(X.denominator), str(Y.numerator), str(Y.denominator),
            _signed(e.omega), fmt(e.predicted_rank),
        ]))
    return lines


def _json_real(v):
    if isinstance(v, float):
        return None if v != v else float(fmt(v))
    return v


def summary_line(report: census.CensusReport, head: str) -> str:
    s = report.summary()
    out = {"header": head}
    for key in ("Y", "mode", "bound", "count", "omega_minus_frac", "omega_plus_frac",
                "omega_unknown_frac", "ar_predicted", "boundary_count"):
        out[key] = _json_real(s[key])
    out["boundary_d"] = [e.d for e in report.boundary]
    return json.dumps(out)


def _write_census(args, curve, report, head) -> None:
    lines = census_lines(report, head)
    summary = summary_line(report, head)
    _emit(args.output, lines)
    if args.output:
        _emit(_summary_path(args.output), [summary])
    else:
        print(summary, file=sys.stderr)


def cmd_census(args) -> int:
    curve = _curve(args)
    if args.Y is None:
        raise ConfigError("--Y is required")
    if not args.Y > 0:
        raise ConfigError("--Y must be positive")
    cfg = census.CensusConfig(mode=args.mode, kappa=args.kappa, target_error=args.target_error,
                              max_doublings=args.max_doublings, workers=args.threads,
                              d_max=args.D_max)
    head = header("census", curve, {"Y": args.Y, **cfg.to_dict(),
                                    "max_boundary": args.max_boundary})
    cached = _cache_lookup(args, curve, cfg)
    if cached is not None:
        _copy_cached(args, cached)
        return EXIT_OK
    report = census.build_census(curve, args.Y, cfg)
    _write_census(args, curve, report, head)
    _cache_store(args, curve, cfg, report, head)
    if args.max_boundary is not None and report.boundary_count > args.max_boundary:
        print(f"{report.boundary_count} entries unresolved at the precision cap",
              file=sys.stderr)
        return EXIT_PRECISION
    return EXIT_OK


def _cache_files(args, curve, cfg):
    key = census.cache_key(curve, args.Y, cfg)
    return (os.path.join(args.cache, f"census-{key}.csv"),
            os.path.join(args.cache, f"census-{key}.summary.json"))


def _cache_lookup(args, curve, cfg):
    if not args.cache:
        return None
    csv_path, json_path = _cache_files(args, curve, cfg)
    if os.path.exists(csv_path) and os.path.exists(json_path):
        return csv_path, json_path
    return None


def _copy_cached(args, cached) -> None:
    csv_path, json_path = cached
    if args.output:
        os.makedirs(os.path.dirname(os.path.abspath(args.output)), exist_ok=True)
        shutil.copyfile(csv_path, args.output)
        shutil.copyfile(json_path, _summary_path(args.output))
    else:
        with open(csv_path) as fh:
            sys.stdout.write(fh.read())
        with open(json_path) as fh:
            sys.stderr.write(fh.read())


def _cache_store(args, curve, cfg, report, head) -> None:
    if not args.cache:
        return
    os.makedirs(args.cache, exist_ok=True)
    csv_path, json_path = _cache_files(args, curve, cfg)
    for path, lines in ((csv_path, census_lines(report, head)),
                        (json_path, [summary_line(report, head)])):
        tmp = path + ".tmp"
        with open(tmp, "w", newline="") as fh:
            fh.write("\n".join(lines) + "\n")
        os.replace(tmp, path)


def cmd_oracle_census(args) -> int:
    curve = _curve(args)
    if args.Y is None or args.D_max is None:
        raise ConfigError("--Y and --D-max are required")
    if not args.Y > 0 or args.D_max < 1:
        raise ConfigError("--Y must be positive and --D-max at least 1")
    head = header("oracle-census", curve, {
        "Y": args.Y, "D_max": args.D_max, "naive_bound": args.naive_bound,
        "target_error": args.target_error, "max_doublings": args.max_doublings})
    report = census.brute_force_census(curve, args.Y, args.D_max, args.naive_bound,
                                       args.target_error, args.max_doublings)
    _write_census(args, curve, report, head)
    return EXIT_OK


# -- moments and Cauchy-Schwarz ------------------------------------------------


def parse_sweep(text: str) -> list[int]:
    """'100,200,400' or '1:20' (inclusive) or a mix of both."""
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            if ":" in part:
                lo, hi = part.split(":")
                out.extend(range(int(lo), int(hi) + 1))
            else:
                out.append(int(part))
        except ValueError:
            raise ConfigError(f"bad Z value {part!r}") from None
    if not out:
        raise ConfigError("empty Z sweep")
    if any(z < 1 for z in out):
        raise ConfigError("Z must be a positive integer")
    return out


def cmd_moments(args) -> int:
    curve = _curve(args)
    if args.Z is None:
        raise ConfigError("--Z is required")
    zs = parse_sweep(args.Z)
    rule = rootnum.rule_for(curve)
    form = quartic.QuarticForm.from_curve(curve)
    head = header("moments", curve, {"Z": zs, "method": args.method, "rule": rule.source
                                     if rule.source == "derived" else os.path.basename(rule.source)})
    lines = [head, ",".join(MOMENT_COLUMNS)]
    for Z in zs:
        rep = quartic.moment_report(form, Z, rule, args.method, args.threads)
        lines.append(",".join(fmt(v) for v in (
            Z, rep.total_pairs, rep.R_Q, rep.R_Q / Z**2, rep.S_plus, rep.S_minus, rep.S_unknown,
            rep.distinct_plus, rep.distinct_minus, rep.distinct_unknown, rep.unknown_fraction)))
    _emit(args.output, lines)
    return EXIT_OK


def cmd_csbound(args) -> int:
    curve = _curve(args)
    if args.Z is None or args.nu is None:
        raise ConfigError("--Z and --nu are required")
    zs = parse_sweep(args.Z)
    if args.nu not in (-1, 1):
        raise ConfigError("--nu must be +1 or -1")
    rule = rootnum.rule_for(curve)
    form = quartic.QuarticForm.from_curve(curve)
    lines = [header("csbound", curve, {"Z": zs, "nu": args.nu}), "Z,nu,lhs,rhs,holds"]
    ok = True
    for Z in zs:
        lhs, rhs, holds = quartic.cauchy_schwarz_check(form, Z, args.nu, rule)
        ok &= holds
        lines.append(f"{Z},{args.nu:+d},{lhs},{rhs},{str(holds).lower()}")
    _emit(args.output, lines)
    return EXIT_OK if ok else EXIT_INVARIANT


# -- heights and root numbers --------------------------------------------------


def parse_rational(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"not an exact rational: {text!r}") from None


def cmd_height(args) -> int:
    curve = _curve(args)
    if args.d is None or args.point is None:
        raise ConfigError("--d and --point are required")
    parts = args.point.split(",")
    if len(parts) != 2:
        raise ConfigError("--point must be X,Y")
    X, Y = (parse_rational(p) for p in parts)
    if args.d == 0 or not arith.is_squarefree(args.d):
        raise DomainError(f"d={args.d} is not a squarefree nonzero integer")
    P = TwistPoint.from_affine(args.d, X, Y)
    if not on_curve(curve, args.d, P):
        raise DomainError(f"({X}, {Y}) is not on E_{args.d}")
    hv = heights.canonical_height(curve, P, args.target_error, args.max_doublings)
    const = heights.comparison_constant(curve)
    lines = [header("height", curve, {"d": args.d, "point": f"{X},{Y}",
                                      "target_error": args.target_error,
                                      "max_doublings": args.max_doublings}),
             "d,X,Y,value,error_bound,naive_height,C",
             f"{args.d},{X},{Y},{fmt(hv.value)},{fmt(hv.error_bound)},"
             f"{fmt(heights.naive_height(P))},{fmt(const.C)}"]
    _emit(args.output, lines)
    return EXIT_OK


def cmd_rootnum(args) -> int:
    curve = _curve(args)
    if args.d:
        ds = [int(v) for v in args.d.split(",") if v.strip()]
    elif args.D_max:
        ds = [v for v in range(-args.D_max, args.D_max + 1) if v and arith.is_squarefree(v)]
    else:
        raise ConfigError("--d or --D-max is required")
    rule = rootnum.derive_rule(curve) if args.derived else rootnum.rule_for(curve)
    source = "derived" if rule.source == "derived" else "override"
    lines = [header("rootnum", curve, {"d": args.d, "D_max": args.D_max, "rule": source}),
             "d,omega"]
    for d in ds:
        if d == 0 or not arith.is_squarefree(d):
            raise DomainError(f"d={d} is not squarefree")
        lines.append(f"{d},{_signed(rootnum.omega(rule, d))}")
    _emit(args.output, lines)
    return EXIT_OK


# -- plumbing ------------------------------------------------------------------


def _curve(args) -> BaseCurve:
    try:
        return load_curve(args.curve)
    except FileNotFoundError:
        raise ConfigError(f"curve file not found: {args.curve}") from None
    except (CurveError, ValueError, json.JSONDecodeError) as exc:
        raise ConfigError(f"bad curve {args.curve}: {exc}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="twistheight", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"twistheight {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--curve", default="congruent",
                        help="bundled curve name or curve file (JSON or key=value)")
        sp.add_argument("--output", help="output file (default: stdout)")
        sp.add_argument("--threads", type=int, default=os.cpu_count() or 1)

    def precision(sp):
        sp.add_argument("--target-error", type=float, default=heights.DEFAULT_TARGET_ERROR)
        sp.add_argument("--max-doublings", type=int, default=heights.DEFAULT_MAX_DOUBLINGS)

    sp = sub.add_parser("census", help="build H(Y) with witnesses")
    common(sp), precision(sp)
    sp.add_argument("--Y", type=float)
    sp.add_argument("--mode", choices=["fast", "rigorous"], default="fast")
    sp.add_argument("--kappa", type=float, default=4.0)
    sp.add_argument("--D-max", dest="D_max", type=int, help="restrict to |d| <= D_MAX")
    sp.add_argument("--max-boundary", type=int,
                    help="exit 3 when more entries than this stay unresolved")
    sp.add_argument("--cache", help="cache directory")
    sp.set_defaults(func=cmd_census)

    sp = sub.add_parser("oracle-census", help="brute-force reference census")
    common(sp), precision(sp)
    sp.add_argument("--Y", type=float)
    sp.add_argument("--D-max", dest="D_max", type=int)
    sp.add_argument("--naive-bound", type=int)
    sp.set_defaults(func=cmd_oracle_census)

    sp = sub.add_parser("moments", help="second moment and sign-restricted counts of Q")
    common(sp)
    sp.add_argument("--Z", help="sweep, e.g. 100,200,400 or 1:20")
    sp.add_argument("--method", choices=["sort", "hash"], default="sort")
    sp.set_defaults(func=cmd_moments)

    sp = sub.add_parser("csbound", help="exact Cauchy-Schwarz check")
    common(sp)
    sp.add_argument("--Z")
    sp.add_argument("--nu", type=int)
    sp.set_defaults(func=cmd_csbound)

    sp = sub.add_parser("height", help="canonical height of a point on E_d")
    common(sp), precision(sp)
    sp.add_argument("--d", type=int)
    sp.add_argument("--point", help="X,Y as exact rationals, e.g. 2,1 or -1/9,4/27")
    sp.set_defaults(func=cmd_height)

    sp = sub.add_parser("rootnum", help="root numbers of twists")
    common(sp)
    sp.add_argument("--d", help="comma-separated list of d")
    sp.add_argument("--D-max", dest="D_max", type=int, help="all squarefree |d| <= D_MAX")
    sp.add_argument("--derived", action="store_true", help="ignore the curve's override table")
    sp.set_defaults(func=cmd_rootnum)
    return p


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with status 2
        return int(exc.code or 0)
    if getattr(args, "threads", 1) < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DomainError, CurveError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except heights.PrecisionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECISION
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
