"""Command-line entry point: ``bcclab <subcommand> [options]``.

Results go to ``--output`` (or stdout) as JSON or CSV.  Every output embeds
the tool version, seed and the configuration that produced it; wall time is
written to stderr only, so identical (config, seed) runs produce identical
bytes regardless of ``--workers``.

Exit codes: 0 success, 1 validation error, 2 budget error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time

import numpy as np

from . import __version__
from .errors import BudgetError, ValidationError

EXIT_OK, EXIT_INVALID, EXIT_BUDGET = 0, 1, 2
SUBCOMMANDS = ("exponent", "region", "simulate", "verify-pa", "leakage",
               "verify-types", "selftest")


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad usage; we need 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise ValidationError(f"{self.prog}: {message}")


# ----------------------------------------------------------------- input JSON


def load_json(path: str):
    """Read a JSON file; syntax errors report line and column."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(
            f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def _field(obj, name, default=...):
    if not isinstance(obj, dict):
        raise ValidationError("top-level JSON value must be an object")
    if name not in obj:
        if default is ...:
            raise ValidationError(f"missing field '{name}'")
        return default
    return obj[name]


def _wrap(name, fn, value):
    try:
        return fn(value)
    except ValidationError as exc:
        raise ValidationError(f"field '{name}': {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"field '{name}': {exc}") from None


def _channel(obj, name, default=...):
    from .prob import Channel

    val = _field(obj, name, default)
    if val is None:
        return None
    if isinstance(val, dict):
        return _wrap(name, Channel.from_json, val)
    return _wrap(name, Channel, val)


def _dist(obj, name, default=...):
    from .prob import Dist

    val = _field(obj, name, default)
    return None if val is None else _wrap(name, Dist, val)


def _float(obj, name, default=...):
    return _wrap(name, float, _field(obj, name, default))


# ---------------------------------------------------------------- output


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    return x


def render(payload: dict, rows: list[dict] | None, columns, fmt: str) -> str:
    meta = payload["metadata"]
    if fmt == "json":
        return json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n"
    if rows is None:
        raise ValidationError("this subcommand has no tabular output; use --format json")
    buf = io.StringIO()
    for key in sorted(meta):
        buf.write(f"# {key}={json.dumps(_jsonable(meta[key]), sort_keys=True)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in columns])
    return buf.getvalue()


def _emit(text: str, output: str | None):
    if output is None or output == "-":
        sys.stdout.write(text)
    else:
        with open(output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


# ------------------------------------------------------------- subcommands


def _cmd_exponent(args, cfg):
    from .exponents import ExponentQuery, evaluate, rho_sweep

    q = load_json(args.input)
    query = ExponentQuery(
        w_z=_channel(q, "w_z"), q_u=_dist(q, "q_u"),
        q_v_given_u=_channel(q, "q_v_given_u"), r_s=_float(q, "r_s"),
        r_p=_float(q, "r_p"), r_c=_float(q, "r_c"), xi=_channel(q, "xi", None),
        w_y=_channel(q, "w_y", None))
    cfg["query"] = q
    report = evaluate(query)
    rows = rho_sweep(query, args.points)
    return {"report": report.to_json(), "sweep": rows}, rows, \
        ["rho", "phi_avg", "integrand", "log_eps1"]


def _cmd_region(args, cfg):
    from .region import RegionQuery, convex_hull_points, region_boundary

    q = load_json(args.input)
    cfg["channels"] = q
    query = RegionQuery(
        w_y=_channel(q, "w_y"), w_z=_channel(q, "w_z"),
        card_u=args.card_u if args.card_u is not None else _field(q, "card_u", None),
        card_v=args.card_v if args.card_v is not None else _field(q, "card_v", None),
        resolution=args.resolution, mode=args.mode, xi=_channel(q, "xi", None),
        budget=args.budget if args.budget is not None else 10**8)
    points = region_boundary(query)
    if args.hull:
        points = convex_hull_points(points, args.mode)
    rows = []
    for p in points:
        row = {"r_s": p.r_s, "r_e": p.r_e, "r_c": p.r_c}
        row.update({"certificate": json.dumps(p.certificate_json(), sort_keys=True)})
        rows.append(row)
    summary = {"points": len(rows), "mode": args.mode, "hull": args.hull,
               "max_r_s": max((r["r_s"] for r in rows), default=0.0),
               "max_r_e": max((r["r_e"] for r in rows), default=0.0),
               "max_r_c": max((r["r_c"] for r in rows), default=0.0)}
    return {"summary": summary, "boundary": rows}, rows, \
        ["r_s", "r_e", "r_c", "certificate"]


def _cmd_simulate(args, cfg):
    from .codec import estimate_errors, make_code_spec, sample_codebook
    from .seeding import derive

    q = load_json(args.input)
    cfg["code"] = q
    n = _wrap("n", int, _field(q, "n"))
    xi = _channel(q, "xi")
    spec = make_code_spec(n, _float(q, "r_p"), _float(q, "r_s"), _float(q, "r_c"),
                          np.asarray(_field(q, "q_uv"), dtype=float), xi,
                          seed=derive(args.seed, "hash"))
    book = sample_codebook(spec, derive(args.seed, "codebook"),
                           distinct=bool(_field(q, "distinct", False)))
    est = estimate_errors(spec, book, _channel(q, "w_y"), _channel(q, "w_z"),
                          trials=args.trials, seed=args.seed, workers=args.workers,
                          mode="mc" if args.force_mc else "auto")
    rows = [{"s": s, "e": e, "error_bob": est.per_message_s[s, e],
             "error_eve": est.per_message_c[s, e]}
            for s in range(spec.n_s) for e in range(book.n_e)]
    summary = {"e_s": est.e_s, "e_c": est.e_c, "radius_s": est.radius_s,
               "radius_c": est.radius_c, "exact": est.exact, "trials": est.trials,
               "code": spec.to_json(), "realized_rates": spec.realized_rates()}
    return {"summary": summary, "messages": rows}, rows, \
        ["s", "e", "error_bob", "error_eve"]


def _random_pa_instance(rng, k_max=4, z_max=8):
    from .hashing import HashFamily
    from .prob import Channel, Dist

    k = int(rng.integers(1, k_max + 1))
    m = int(rng.integers(1, k + 1))
    n_z = int(rng.integers(1, z_max + 1))
    p_l = Dist.normalized(rng.dirichlet(np.full(1 << k, 0.5)))
    w = Channel.normalized(rng.dirichlet(np.full(n_z, 0.5), size=1 << k))
    return p_l, w, HashFamily(k, m)


def _cmd_verify_pa(args, cfg):
    from .hashing import HashFamily
    from .leakage import verify_pa_bound
    from .seeding import derive

    rows = []
    if args.input:
        q = load_json(args.input)
        cfg["instance"] = q
        p_l, w = _dist(q, "p_l"), _channel(q, "w")
        k = int(round(math.log2(p_l.size)))
        if 1 << k != p_l.size:
            raise ValidationError("field 'p_l': size must be a power of two")
        m = _wrap("m", int, _field(q, "m"))
        instances = [(p_l, w, HashFamily(k, m))]
    else:
        rng = derive(args.seed, "verify-pa")
        instances = [_random_pa_instance(rng) for _ in range(args.instances)]
    rhos = [args.rho] if args.rho is not None else [round(0.1 * i, 1) for i in range(1, 11)]
    for idx, (p_l, w, fam) in enumerate(instances):
        for rho in rhos:
            rec = verify_pa_bound(p_l, w, fam, rho, precision=args.precision)
            rows.append({"instance": idx, "k": fam.k, "m": fam.m, "n_z": w.n_outputs,
                         "rho": rho, "lhs": rec.lhs, "rhs": rec.rhs, "holds": rec.holds,
                         "jensen_ok": rec.jensen_lhs <= rec.lhs * (1 + 1e-12)})
    violations = sum(not r["holds"] for r in rows)
    summary = {"checks": len(rows), "violations": violations}
    return {"summary": summary, "records": rows}, rows, \
        ["instance", "k", "m", "n_z", "rho", "lhs", "rhs", "holds", "jensen_ok"]


def _cmd_leakage(args, cfg):
    from .leakage import LEAKAGE_BUDGET, leakage_decay_curve

    q = load_json(args.input)
    cfg["code"] = q
    n_list = _wrap("n_list", lambda v: [int(x) for x in v], _field(q, "n_list"))
    rows = leakage_decay_curve(
        n_list, _float(q, "r_p"), _float(q, "r_s"), _float(q, "r_c", 0.0),
        np.asarray(_field(q, "q_uv"), dtype=float), _channel(q, "xi"), _channel(q, "w_z"),
        pairs=_wrap("pairs", int, _field(q, "pairs", 8)), seed=args.seed,
        delta=args.delta, workers=args.workers,
        budget=args.budget if args.budget is not None else LEAKAGE_BUDGET)
    return {"curve": rows}, rows, \
        ["n", "rho", "leakage_nats", "equivocation_nats", "bound_plus", "bound_minus", "seed"]


def _cmd_verify_types(args, cfg):
    from .typeclasses import exhaustive_bound_sweep

    summary = exhaustive_bound_sweep(args.n_max)
    ok = not summary["uniform_violations"] and not summary["conditional_violations"]
    return {"summary": summary, "passed": ok}, None, None


def selftest_checks() -> list[tuple[str, bool]]:
    """Closed-form sanity checks; each entry is (name, passed)."""
    from .codec import make_code_spec, sample_codebook
    from .exponents import leakage_exponent, phi, psi
    from .hashing import HashFamily
    from .leakage import check_uniform_identity, exact_leakage, verify_pa_bound
    from .prob import Channel, Dist

    out = []
    useless = Channel.constant(4, Dist.uniform(3))
    u4 = Dist.uniform(4)
    out.append(("psi of a useless channel is 0", abs(psi(0.5, useless, u4)) < 1e-12))
    out.append(("phi of a useless channel is 0", abs(phi(0.5, useless, u4)) < 1e-12))
    rec = verify_pa_bound(u4, useless, HashFamily(2, 1), 0.7)
    out.append(("PA bound, useless channel: LHS = 1", abs(rec.lhs - 1) < 1e-12 and rec.holds))
    rec = verify_pa_bound(u4, Channel.identity(4), HashFamily(2, 1), 1.0)
    out.append(("PA bound, identity channel: LHS 2, RHS 3",
                abs(rec.lhs - 2) < 1e-12 and abs(rec.rhs - 3) < 1e-12))
    ident = check_uniform_identity(u4, useless, 2, 0.5)
    out.append(("uniform identity, useless channel = (|M|/|L|)^rho",
                ident.holds and abs(ident.direct - 0.5**0.5) < 1e-12))
    val, rho = leakage_exponent(Channel.identity(2), Channel([[0.5, 0.5]]), Dist([1.0]), 1.0)
    out.append(("identity eavesdropper exponent 1 - ln 2",
                abs(val - (1 - math.log(2))) < 1e-6 and abs(rho - 1) < 1e-4))
    spec = make_code_spec(4, math.log(2), 0.5 * math.log(2), 0.0, np.array([[0.5, 0.5]]),
                          Channel.identity(2), seed=0)
    book = sample_codebook(spec, 0)
    rep = exact_leakage(spec, book, Channel.constant(2, [0.5, 0.5]))
    out.append(("exact leakage, useless Eve channel is 0",
                rep.leakage < 1e-12 and abs(rep.equivocation - rep.ln_s) < 1e-9))
    rep = exact_leakage(spec, book, Channel.bsc(0.2))
    out.append(("leakage + equivocation = ln|S|",
                abs(rep.leakage + rep.equivocation - rep.ln_s) < 1e-9))
    return out


def _cmd_selftest(args, cfg):
    checks = selftest_checks()
    rows = [{"check": name, "passed": ok} for name, ok in checks]
    return {"checks": rows, "passed": all(ok for _, ok in checks)}, rows, ["check", "passed"]


_HANDLERS = {"exponent": _cmd_exponent, "region": _cmd_region, "simulate": _cmd_simulate,
             "verify-pa": _cmd_verify_pa, "leakage": _cmd_leakage,
             "verify-types": _cmd_verify_types, "selftest": _cmd_selftest}


# ------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    common.add_argument("--output", "-o", default=None, help="output path (default stdout)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--budget", type=int, default=None,
                        help="override the enumeration budget")
    common.add_argument("--workers", type=int, default=1,
                        help="worker threads; results do not depend on this")

    p = _Parser(prog="bcclab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"bcclab {__version__}")
    sub = p.add_subparsers(dest="command", metavar="SUBCOMMAND", parser_class=_Parser)

    s = sub.add_parser("exponent", parents=[common], help="leakage exponents for a query")
    s.add_argument("input", help="query JSON")
    s.add_argument("--points", type=int, default=101, help="rho grid points for CSV")

    s = sub.add_parser("region", parents=[common], help="grid search of the rate region")
    s.add_argument("input", help="JSON with w_y, w_z and optional xi, card_u, card_v")
    s.add_argument("--resolution", type=int, default=16)
    s.add_argument("--mode", default="bcc", choices=("bcc", "bcc_equal", "bcd", "no_split"))
    s.add_argument("--card-u", type=int, default=None)
    s.add_argument("--card-v", type=int, default=None)
    s.add_argument("--hull", action="store_true", help="keep convex-hull vertices only")

    s = sub.add_parser("simulate", parents=[common], help="error probabilities of a random code")
    s.add_argument("input", help="code JSON: n, r_p, r_s, r_c, q_uv, xi, w_y, w_z")
    s.add_argument("--trials", type=int, default=1000)
    s.add_argument("--force-mc", action="store_true",
                   help="simulate even when exact enumeration fits")

    s = sub.add_parser("verify-pa", parents=[common], help="check the hashing leakage bound")
    s.add_argument("--input", default=None, help="instance JSON: p_l, w, m")
    s.add_argument("--instances", type=int, default=100)
    s.add_argument("--rho", type=float, default=None, help="default: 0.1, 0.2, ..., 1.0")
    s.add_argument("--precision", choices=("float", "mp"), default="float")

    s = sub.add_parser("leakage", parents=[common], help="exact leakage against n")
    s.add_argument("input", help="JSON: n_list, r_p, r_s, r_c, q_uv, xi, w_z, pairs")
    s.add_argument("--delta", type=float, default=0.05)

    s = sub.add_parser("verify-types", parents=[common], help="exhaustive type-bound sweep")
    s.add_argument("--n-max", type=int, default=8)

    sub.add_parser("selftest", parents=[common], help="closed-form sanity checks")
    return p


def _config(args) -> dict:
    skip = {"command", "output", "format", "workers", "input"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def run(argv=None) -> int:
    parser = build_parser()
    start = time.perf_counter()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            raise ValidationError("a subcommand is required")
        if args.workers < 1:
            raise ValidationError("--workers must be at least 1")
        cfg = _config(args)
        result, rows, columns = _HANDLERS[args.command](args, cfg)
        payload = {"metadata": {"tool": "bcclab", "version": __version__,
                                "subcommand": args.command, "seed": args.seed,
                                "config": cfg},
                   "result": result}
        _emit(render(payload, rows, columns, args.format), args.output)
    except BudgetError as exc:
        print(f"budget error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    print(f"wall time {time.perf_counter() - start:.3f} s", file=sys.stderr)
    if args.command in ("selftest", "verify-types") and not result["passed"]:
        return EXIT_INVALID
    return EXIT_OK


def main():
    sys.exit(run())
