"""Command line interface: ``ncconc <command> [options]``.

Every command writes ``report.json`` (sorted keys, floats at 12
significant digits, the effective configuration echoed) plus command
specific CSV files into ``--out-dir``.  Exit status is 0 when all checks
pass, 1 when a check fails and 2 for configuration errors.

Options may also come from an INI file given by ``--config``; keys in
the ``[ncconc]`` section and in a section named after the command use
the long option names (``out_dir`` or ``out-dir``).  Flags given on the
command line win.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import algebra as alg
from . import concentration as conc
from . import transport as tr
from .curvature import (
    IndefiniteFormError,
    cocycle_zn_certificate,
    gamma2_criterion_check,
    gromov_form,
    haagerup_gram_certificate,
    sharp_alpha,
)
from .groups import (
    GroupError,
    LengthFunction,
    build_cyclic,
    build_heisenberg,
    check_cn_length,
    delta_length,
    free_ball,
    heisenberg_length,
)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
#: Options that locate files rather than describe the run; not echoed.
NOT_ECHOED = ("out_dir", "config", "command", "handler")
SIG_DIGITS = 12
HEISENBERG_CLI_MAX_ORDER = 2000


class ConfigError(ValueError):
    """Invalid or inconsistent options."""


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------


def clean(obj):
    """JSON-ready copy: rounded floats, ``"inf"``/``"nan"`` strings, string keys."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return float(f"{x:.{SIG_DIGITS}g}")
    return obj


def dumps(report: dict) -> str:
    return json.dumps(clean(report), sort_keys=True, indent=2) + "\n"


def write_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([f"{v:.{SIG_DIGITS}g}" if isinstance(v, float) else v for v in row])
    path.write_text(buf.getvalue())


def _parse_floats(text: str) -> list[float]:
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}") from exc


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _curvature_form(args):
    """Gromov form, expected sharp constant (or None) and extra certificates."""
    extra: dict = {}
    g = args.group
    if g == "zn":
        grp = build_cyclic(args.n)
        psi = delta_length(grp)
        form = gromov_form(None, psi, grp)
        expected = (args.n + 2) / (2 * args.n) if args.n >= 2 else None
        if args.n >= 2:
            extra["cocycle"] = cocycle_zn_certificate(args.n)
        cn = check_cn_length(None, psi, grp)
    elif g == "heisenberg":
        grp = build_heisenberg(args.n, max_order=HEISENBERG_CLI_MAX_ORDER)
        psi = heisenberg_length(args.n)
        form = gromov_form(None, psi, grp)
        expected = (args.n + 2) / (2 * args.n)
        cn = check_cn_length(None, psi, grp)
    elif g == "free":
        arena = free_ball(args.gens, args.radius)
        form = gromov_form(arena.ball(), arena.length, arena)
        expected = None
        extra["haagerup"] = haagerup_gram_certificate(arena, args.radius)
        cn = check_cn_length(arena.ball(), arena.length, arena)
    else:
        a = alg.build_model(g, args.n, args.m)
        form = a.gromov
        expected = (args.n + 2) / (2 * args.n) if g == "mn" else None
        cn = check_cn_length(None, LengthFunction(a.multipliers), a.index_group)
    return form, expected, extra, cn


def cmd_curvature(args, out: Path) -> dict:
    form, expected, extra, cn = _curvature_form(args)
    cert = sharp_alpha(form)
    results = {"size": form.size, "cn": {"is_cn": cn.is_cn, "min_eig": cn.min_eig}, **cert.to_dict(), **extra}
    ok = cn.is_cn and cert.witness_min_eig >= -args.tol * (1 + float(np.abs(form.K).max(initial=0.0)))
    if not math.isinf(cert.alpha_star):
        above = gamma2_criterion_check(form, cert.alpha_star + 1e-6)
        results["sharp_above"] = {"alpha": above.alpha, "min_eig": above.min_pencil_eig, "holds": above.holds}
        ok &= not above.holds
    if expected is not None:
        results["expected_alpha"] = expected
        results["abs_error"] = abs(cert.alpha_star - expected)
        ok &= results["abs_error"] <= args.tol
    if "haagerup" in extra:
        ok &= extra["haagerup"]["max_abs_residual"] <= 1e-12
    if "cocycle" in extra:
        ok &= extra["cocycle"]["max_abs_residual"] <= 1e-12
    (out / "gromov_form.csv").write_text(form.to_csv())
    return {"results": results, "pass": bool(ok)}


def cmd_decompose(args, out: Path) -> dict:
    dec = alg.heisenberg_decompose(args.n, t=args.t, seed=args.seed, tol=args.tol)
    n = args.n
    ok = (
        all(d == n * n for d in dec.block_dims)
        and dec.total_dim == n**3
        and dec.m0_commutative
        and dec.m1_full_matrix
        and dec.invariance_mass <= args.tol
    )
    write_csv(out / "blocks.csv", ["block", "dim"], [(x, d) for x, d in enumerate(dec.block_dims)])
    return {"results": dec.to_dict(), "pass": bool(ok)}


def _deviation_model(args):
    if args.model == "rademacher":
        rng = np.random.default_rng(args.seed)
        return conc.random_rademacher_model(args.k, args.d, rng)
    m = args.m
    if args.function == "sum":
        return conc.walsh_function_model(lambda x: x.sum(axis=1) / math.sqrt(x.shape[1]), m=m)
    if args.function == "majority":
        return conc.walsh_function_model(lambda x: np.sign(x.sum(axis=1) + 0.5), m=m)
    rng = np.random.default_rng(args.seed)
    f = rng.standard_normal(1 << m)
    return conc.walsh_function_model(f / np.abs(f).max(), m=m)


def cmd_deviation(args, out: Path) -> dict:
    model = _deviation_model(args)
    ch = model.characteristics()
    D = math.sqrt(ch.D2)
    steps = int(round(args.t_max / args.t_step))
    t_grid = [i * args.t_step * D for i in range(steps + 1)]
    eps_grid = conc.EPS_GRID[::4] if args.quick else conc.EPS_GRID
    rep = conc.deviation_report(model, t_grid, eps_grid, trials=args.trials, seed=args.seed)
    (out / "deviation.csv").write_text(rep.to_csv())
    moments = {}
    if model.enumerable:
        for p in (2, 4, 8):
            norm = conc.exact_moment(model, p)
            bound = min(conc.pmom_bound(p, ch.D2, ch.M, e) for e in eps_grid)
            moments[p] = {"norm": norm, "bound": bound}
    ok = rep.passed and all(v["norm"] <= v["bound"] for v in moments.values())
    return {"results": {**rep.summary, "moments": moments, "rows": len(rep.rows)}, "pass": bool(ok)}


def _model_from_args(args) -> alg.StarAlgebra:
    return alg.build_model(args.model, args.n, args.m)


def cmd_poincare(args, out: Path) -> dict:
    a = _model_from_args(args)
    alpha = args.alpha if args.alpha is not None else sharp_alpha(a.gromov).alpha_star
    if not alpha > 0 or math.isinf(alpha):
        raise ConfigError(f"curvature constant {alpha} is not a positive finite number")
    samples = min(args.samples, 50) if args.quick else args.samples
    scan = tr.poincare_ratio_scan(a, alpha, args.p, samples, args.seed)
    expint = tr.exp_integrability_check(a, alpha, samples, args.seed)
    results = {
        "model": a.name,
        "alpha": alpha,
        "samples": samples,
        "p": list(args.p),
        "max_ratio_sa": scan.max_ratio_sa,
        "max_ratio_general": scan.max_ratio_general,
        "constant_sa": tr.POINCARE_C_SA,
        "constant_general": tr.POINCARE_C_GENERAL,
        "pcr2_fitted": scan.pcr2_fitted,
        "parseval_residual": scan.parseval_residual,
        "expint_min_log_margin_sa": expint.min_margin_sa,
        "expint_min_log_margin_general": expint.min_margin_general,
        "tail_min_margin": expint.min_tail_margin,
    }
    write_csv(
        out / "poincare.csv",
        ["quantity", "value"],
        [(k, float(results[k])) for k in ("max_ratio_sa", "max_ratio_general", "pcr2_fitted", "parseval_residual")],
    )
    return {"results": results, "pass": bool(scan.passed and expint.passed)}


def cmd_transport(args, out: Path) -> dict:
    a = _model_from_args(args)
    c = tr.subgaussian_c_estimate(a, samples=args.samples, seed=args.seed)
    c_use = args.safety * c.c_half
    rng = np.random.default_rng(np.random.SeedSequence([args.seed, a.size]))
    rows, ok = [], True
    for i in range(args.densities):
        rho = alg.random_density(a, rng)
        chk = tr.transport_check(a, rho, c_use, restarts=args.restarts, seed=args.seed + i)
        ok &= chk.passed
        rows.append((i, chk.entropy, chk.lhs, chk.rhs, int(chk.passed)))
    write_csv(out / "transport.csv", ["density", "entropy", "w1_lower_bound", "bound", "pass"], rows)
    results = {
        "model": a.name,
        "c_half": c.c_half,
        "c_full": c.c_full,
        "c_used": c_use,
        "max_lhs_over_rhs": max((r[2] / r[3] for r in rows if r[3] > 0), default=0.0),
        "densities": args.densities,
    }
    return {"results": results, "pass": bool(ok)}


def cmd_suite(args, out: Path, stdout=sys.stdout) -> dict:
    from .acceptance import run_all

    results = run_all(quick=args.quick, seed=args.seed)
    for r in results:
        if stdout is not None:
            print(r.line(), file=stdout)
    write_csv(out / "suite.csv", ["criterion", "title", "pass"], [(r.number, r.title, int(r.passed)) for r in results])
    return {"results": {str(r.number): r.to_dict() for r in results}, "pass": all(r.passed for r in results)}


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=0, help="master RNG seed")
    g.add_argument("--out-dir", type=Path, default=Path("ncconc-out"), help="directory for report files")
    g.add_argument("--quick", action="store_true", help="reduced sample sizes")
    g.add_argument("--tol", type=float, default=1e-9, help="tolerance for asserted checks")
    g.add_argument("--config", type=Path, default=None, help="INI file with option defaults")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ncconc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    common = [_common()]

    p = sub.add_parser("curvature", parents=common, help="sharp curvature constant of a Gromov form")
    p.add_argument("--group", choices=["zn", "heisenberg", "free", "mn", "walsh"], default="zn")
    p.add_argument("--n", type=int, default=4, help="order parameter (Z_n, H3(Z_n), M_n, Walsh Z_n^m)")
    p.add_argument("--m", type=int, default=1, help="number of Walsh factors")
    p.add_argument("--gens", type=int, default=2, help="free-group generators")
    p.add_argument("--radius", type=int, default=2, help="free-group ball radius")
    p.set_defaults(handler=cmd_curvature)

    p = sub.add_parser("decompose", parents=common, help="block decomposition of L(H3(Z_n))")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--t", type=float, default=1.0, help="semigroup time for the invariance test")
    p.set_defaults(handler=cmd_decompose)

    p = sub.add_parser("deviation", parents=common, help="martingale tail bound against exact tails")
    p.add_argument("--model", choices=["rademacher", "walsh"], default="rademacher")
    p.add_argument("--k", type=int, default=10, help="Rademacher steps")
    p.add_argument("--d", type=int, default=4, help="matrix size")
    p.add_argument("--m", type=int, default=9, help="Walsh cube dimension")
    p.add_argument("--function", choices=["sum", "gauss", "majority"], default="sum")
    p.add_argument("--t-max", type=float, default=3.0, help="largest t in units of sqrt(D2)")
    p.add_argument("--t-step", type=float, default=0.25)
    p.add_argument("--trials", type=int, default=20000, help="Monte Carlo trials for large models")
    p.set_defaults(handler=cmd_deviation)

    for name, helptext in (("poincare", "Poincare ratios and exponential integrability"), ("transport", "W1 against entropy")):
        p = sub.add_parser(name, parents=common, help=helptext)
        p.add_argument("--model", choices=["zn", "heisenberg", "mn", "walsh"], default="mn")
        p.add_argument("--n", type=int, default=3)
        p.add_argument("--m", type=int, default=1)
        p.add_argument("--samples", type=int, default=500 if name == "poincare" else 200)
        if name == "poincare":
            p.add_argument("--p", type=_parse_floats, default=[2.0, 4.0, 8.0], help="comma separated exponents")
            p.add_argument("--alpha", type=float, default=None, help="curvature constant (default: computed)")
            p.set_defaults(handler=cmd_poincare)
        else:
            p.add_argument("--densities", type=int, default=20)
            p.add_argument("--restarts", type=int, default=32)
            p.add_argument("--safety", type=float, default=1.2, help="factor applied to the estimated constant")
            p.set_defaults(handler=cmd_transport)

    p = sub.add_parser("suite", parents=common, help="run the acceptance matrix")
    p.set_defaults(handler=cmd_suite)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str], ns: argparse.Namespace) -> argparse.Namespace:
    cfg = configparser.ConfigParser()
    try:
        if not cfg.read(ns.config):
            raise ConfigError(f"cannot read config file {ns.config}")
    except configparser.Error as exc:
        raise ConfigError(f"malformed config file: {exc}") from exc
    values = {}
    for section in ("ncconc", ns.command):
        if cfg.has_section(section):
            values.update({k.replace("-", "_"): v for k, v in cfg.items(section)})
    subparser = parser._subparsers._group_actions[0].choices[ns.command]
    actions = {a.dest: a for a in subparser._actions}
    defaults = {}
    for key, raw in values.items():
        act = actions.get(key)
        if act is None or key in ("config", "help"):
            raise ConfigError(f"unknown option {key!r} in config for {ns.command}")
        try:
            if isinstance(act, argparse._StoreTrueAction):
                defaults[key] = cfg.BOOLEAN_STATES[raw.lower()]
            else:
                value = act.type(raw) if act.type else raw
                if act.choices is not None and value not in act.choices:
                    raise ValueError(f"{value!r} not in {sorted(act.choices)}")
                defaults[key] = value
        except (KeyError, ValueError, argparse.ArgumentTypeError) as exc:
            raise ConfigError(f"bad value for {key}: {raw!r} ({exc})") from exc
    subparser.set_defaults(**defaults)
    return parser.parse_args(argv)


def _validate(ns: argparse.Namespace) -> None:
    for key in ("n", "m", "k", "d", "gens", "samples", "densities", "restarts", "trials"):
        v = getattr(ns, key, None)
        if v is not None and v < 1:
            raise ConfigError(f"--{key} must be positive")
    if getattr(ns, "radius", 0) < 0:
        raise ConfigError("--radius must be nonnegative")
    if ns.tol <= 0:
        raise ConfigError("--tol must be positive")
    if ns.command == "deviation" and (ns.t_step <= 0 or ns.t_max < 0):
        raise ConfigError("--t-step must be positive and --t-max nonnegative")
    if ns.command == "poincare" and (not ns.p or min(ns.p) < 2):
        raise ConfigError("--p needs exponents >= 2")


def echo_config(ns: argparse.Namespace) -> dict:
    return {k: (list(v) if isinstance(v, (list, tuple)) else v) for k, v in sorted(vars(ns).items()) if k not in NOT_ECHOED}


def main(argv=None, stdout=sys.stdout) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        if ns.config is not None:
            ns = _apply_config(parser, argv, ns)
        _validate(ns)
        out = Path(ns.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        if ns.command == "suite":
            body = cmd_suite(ns, out, stdout)
        else:
            body = ns.handler(ns, out)
    except (ConfigError, GroupError, IndefiniteFormError, ValueError) as exc:
        print(f"ncconc: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    report = {"command": ns.command, "version": __version__, "config": echo_config(ns), **body}
    (out / "report.json").write_text(dumps(report))
    if stdout is not None and ns.command != "suite":
        print(f"{ns.command}: {'PASS' if body['pass'] else 'FAIL'} ({out / 'report.json'})", file=stdout)
    return EXIT_OK if body["pass"] else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
