"""Command-line entry point: ``bergman-lab <command> [flags]``.

Parameter precedence is: built-in defaults, then ``--config FILE`` (JSON, or
TOML when the name ends in ``.toml``), then explicit flags.  Exit status is 0 on success, 1 when a check or certificate
fails (or a computation does not converge), 2 on usage and I/O errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import __version__, asymptotics, fuchsian, kernel, oracle, verify
from .model_core import (
    DEFAULT_B,
    DEFAULT_GAMMA,
    DEFAULT_R,
    DomainError,
    ModelParams,
    delta_p,
    lemma2_constants,
    log_coeff_sq,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

TABLE_FIELDS = ("p", "region", "quantity", "sup_log", "argmax_t")

# keys a config file may set, and the flag each one stands for
CONFIG_KEYS = {
    "p", "r", "b", "gamma", "radius", "log_radius", "format", "out", "tol_nats",
    "l_max", "delta", "cert", "tau", "p_list", "quantity", "region", "samples",
    "preset", "check", "l", "h", "L", "basis", "x", "y", "mode", "n_samples", "seed", "tol",
}


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# output


def _clean(obj):
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        obj = float(obj)
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def render(payload: dict, fmt: str) -> str:
    """JSON (whole payload) or CSV (its ``rows``, or ``tables`` for reports)."""
    payload = _clean(payload)
    if fmt == "json":
        return json.dumps(payload, indent=2, allow_nan=False) + "\n"
    rows = payload.get("tables") if "tables" in payload else payload.get("rows", [payload])
    if "tables" in payload:
        fields = TABLE_FIELDS
    else:
        fields = list(rows[0].keys()) if rows else []
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for row in rows:
        w.writerow({k: ("" if row.get(k) is None else (repr(row[k]) if isinstance(row[k], float) else row[k]))
                    for k in fields})
    return buf.getvalue()


def write_report(payload: dict, path: str | None, fmt: str):
    text = render(payload, fmt)
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    target = Path(path)
    if not target.parent.exists():
        raise OSError(f"output directory {str(target.parent)!r} does not exist")
    with open(target, "w", newline="") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# argument handling


def _add_common(sp: argparse.ArgumentParser, radius: bool = False):
    sp.add_argument("--p", type=int, help="weight parameter p >= 2")
    sp.add_argument("--r", type=float, help=f"frequency cutoff radius (default {DEFAULT_R:.6g})")
    sp.add_argument("--b", type=float, help=f"outer radius factor (default {DEFAULT_B})")
    sp.add_argument("--gamma", type=float, help=f"region exponent (default {DEFAULT_GAMMA})")
    sp.add_argument("--tol-nats", dest="tol_nats", type=float, help="series truncation depth in nats")
    sp.add_argument("--config", help="JSON or .toml file of parameters; flags override it")
    sp.add_argument("--format", choices=("csv", "json"), help="output format (default json)")
    sp.add_argument("--out", help="output file (default stdout)")
    if radius:
        g = sp.add_mutually_exclusive_group()
        g.add_argument("--radius", type=float, help="|z| in (0, 1)")
        g.add_argument("--log-radius", dest="log_radius", type=float, help="ln|z| < 0")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bergman-lab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", metavar="command")
    sub.required = True

    sp = sub.add_parser("coeffs", help="orthonormal coefficients, cutoff and lemma constants")
    _add_common(sp)
    sp.add_argument("--l-max", dest="l_max", type=int, help="largest index listed (default 10)")

    sp = sub.add_parser("eval", help="Bergman density and power sums at one radius")
    _add_common(sp, radius=True)

    sp = sub.add_parser("quotient", help="Fubini-Study / Poincare quotient at one radius")
    _add_common(sp, radius=True)

    sp = sub.add_parser("split", help="four-block split of the variance numerator")
    _add_common(sp, radius=True)
    sp.add_argument("--delta", type=int, help="override the cutoff index")

    sp = sub.add_parser("certify", help="evaluate one bound inequality (LHS / RHS)")
    _add_common(sp, radius=True)
    sp.add_argument("--cert", help=f"one of {', '.join(kernel.CERTIFICATES)}")
    sp.add_argument("--tau", type=int, help="coefficient index for EQ48")

    sp = sub.add_parser("sweep", help="per-p suprema over a region and a growth fit")
    _add_common(sp)
    sp.add_argument("--p-list", dest="p_list", type=int, nargs="+", help="increasing p values")
    sp.add_argument("--quantity", help=f"one of {', '.join(asymptotics.QUANTITIES)} or CERT:ID")
    sp.add_argument("--region", choices=asymptotics.REGIONS)
    sp.add_argument("--samples", type=int, help="grid points per region (>= 16, default 256)")

    sp = sub.add_parser("verify", help="run the verification suite")
    _add_common(sp)
    sp.add_argument("--preset", choices=sorted(verify.PRESETS), help="default or quick")

    sp = sub.add_parser("oracle", help="compare the kernel against an independent oracle")
    _add_common(sp, radius=True)
    sp.add_argument("--check", choices=("norm", "fd", "brute", "lgamma"), help="which oracle")
    sp.add_argument("--l", type=int, help="monomial index for --check norm")
    sp.add_argument("--h", type=float, help="finite-difference step for --check fd")
    sp.add_argument("--L", type=int, help="index cutoff for --check brute")
    sp.add_argument("--delta", type=int, help="block split index for --check brute")
    sp.add_argument("--tol", type=float, help="relative tolerance deciding the exit status (default depends on --check)")

    sp = sub.add_parser("fuchsian", help="cusp-form Bergman function and ratio")
    _add_common(sp)
    sp.add_argument("--basis", help="basis JSON file or bundled name (weight12, weight24)")
    sp.add_argument("--x", type=float, help="Re z")
    sp.add_argument("--y", type=float, help="Im z > 0")
    sp.add_argument("--mode", choices=("analytic-derivative", "finite-difference"))
    sp.add_argument("--h", type=float, help="finite-difference step")
    sp.add_argument("--n-samples", dest="n_samples", type=int,
                    help="also report the ratio over this many fundamental-domain samples")
    sp.add_argument("--seed", type=int, help="seed for --n-samples")
    return ap


DEFAULTS = {
    "r": DEFAULT_R, "b": DEFAULT_B, "gamma": DEFAULT_GAMMA, "format": "json", "out": None,
    "tol_nats": kernel.DEFAULT_TOL_NATS, "l_max": 10, "tau": 1, "samples": 256,
    "preset": "default", "check": "norm", "l": 1, "h": None, "L": 200, "mode": "analytic-derivative",
    "basis": "weight12", "seed": 0, "n_samples": 0,
}

# default relative tolerance of each oracle comparison; the FD stencil is only O(h^2)
ORACLE_TOL = {"norm": 1e-8, "fd": 1e-4, "brute": 1e-9, "lgamma": 1e-10}


def merge_config(args: argparse.Namespace) -> argparse.Namespace:
    cfg = {}
    if getattr(args, "config", None):
        is_toml = Path(args.config).suffix.lower() == ".toml"
        try:
            if is_toml:
                with open(args.config, "rb") as fh:
                    cfg = tomllib.load(fh)
            else:
                with open(args.config) as fh:
                    cfg = json.load(fh)
        except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
            kind = "TOML" if is_toml else "JSON"
            raise UsageError(f"--config: {args.config} is not valid {kind} ({exc})") from None
        if not isinstance(cfg, dict):
            raise UsageError("--config must hold a JSON object or TOML table")
        unknown = sorted(set(cfg) - CONFIG_KEYS)
        if unknown:
            raise UsageError(f"--config: unknown keys {unknown}")
    for key in CONFIG_KEYS | set(DEFAULTS):
        if not hasattr(args, key):
            continue
        if getattr(args, key) is None:
            if key in cfg:
                setattr(args, key, cfg[key])
            elif key in DEFAULTS:
                setattr(args, key, DEFAULTS[key])
    if getattr(args, "radius", None) is not None and getattr(args, "log_radius", None) is not None:
        raise UsageError("--radius and --log-radius are mutually exclusive")
    return args


def _require(args, *names):
    for n in names:
        if getattr(args, n, None) is None:
            raise UsageError(f"missing required flag --{n.replace('_', '-')}")


def _model(args) -> ModelParams:
    _require(args, "p")
    return ModelParams(args.p, args.r, args.b, args.gamma)


def _radius_kw(args) -> dict:
    if args.radius is None and args.log_radius is None:
        raise UsageError("one of --radius or --log-radius is required")
    return {"radius": args.radius} if args.radius is not None else {"log_radius": args.log_radius}


def _t(args) -> float:
    return kernel.t_from_radius(**_radius_kw(args))


def _slv(v) -> dict:
    return {"log_mag": v.log_mag if v.sign else None, "sign": v.sign, "value": v.to_float()}


# ---------------------------------------------------------------------------
# commands


def cmd_coeffs(args):
    m = _model(args)
    lc = lemma2_constants(m.r)
    rows = [{"l": l, "log_coeff_sq": log_coeff_sq(m.p, l)} for l in range(1, args.l_max + 1)]
    return {
        "params": m.as_dict(),
        "delta": delta_p(m.p, m.r),
        "alpha_prime": lc.alpha_prime,
        "A_prime": lc.a_prime,
        "c_prime": lc.c_prime,
        "rows": rows,
    }


def cmd_eval(args):
    m = _model(args)
    t = _t(args)
    mt = kernel.moments_t(m.p, t, args.tol_nats)
    b = kernel.bergman_density_t(m.p, t, args.tol_nats)
    row = {
        "p": m.p, "t": t,
        "log_bergman": b.log_mag,
        "bergman": b.to_float(),
        "plateau": (m.p - 1) / (2.0 * math.pi),
        "log_s0": mt.s0.log_mag, "log_s1": mt.s1.log_mag, "log_s2": mt.s2.log_mag,
        "mean": mt.mean, "variance": mt.variance, "terms_used": mt.terms_used,
    }
    return {"rows": [row]}


def cmd_quotient(args):
    m = _model(args)
    t = _t(args)
    q = kernel.fs_quotient_t(m.p, t, args.tol_nats).quotient
    qf = q.to_float()
    row = {"p": m.p, "t": t, "radius": math.exp(-0.5 * t), "Q": qf, "log_Q": q.log_mag,
           "abs_dev_plateau": abs(qf - 1.0 / (2.0 * math.pi))}
    return {"rows": [row]}


def cmd_split(args):
    m = _model(args)
    t = _t(args)
    delta = args.delta if args.delta is not None else m.delta
    sq = kernel.split_detail_t(m.p, t, delta, tol_nats=args.tol_nats).split
    row = {"p": m.p, "t": t, "delta": delta}
    for name, v in zip(("I1", "I2", "I3", "I4"), sq.as_tuple()):
        row[name] = v.to_float()
        row[f"log_abs_{name}"] = v.log_mag if v.sign else None
    return {"rows": [row]}


def cmd_certify(args):
    m = _model(args)
    _require(args, "cert")
    cid = args.cert.upper()
    if cid == "EQ48":
        ratio = kernel.certificate_eval(cid, m.p, r=m.r, tau=args.tau)
        t = None
    else:
        t = _t(args)
        ratio = kernel.certificate_eval(cid, m.p, r=m.r, log_radius=-0.5 * t, b=m.b,
                                        gamma=m.gamma, tol_nats=args.tol_nats)
    holds = (not ratio.sign) or ratio.log_mag <= 0.0
    row = {"cert": cid, "p": m.p, "t": t, "log_ratio": ratio.log_mag if ratio.sign else None,
           "ratio": ratio.to_float(), "holds": holds, "label": kernel.CERTIFICATE_LABELS[cid]}
    return {"rows": [row]}, holds


def cmd_sweep(args):
    _require(args, "p_list", "quantity")
    model = ModelParams(args.p_list[0], args.r, args.b, args.gamma)
    cfg = asymptotics.SweepConfig(tuple(args.p_list), args.quantity, model, args.samples,
                                  args.region, args.tol_nats)
    rep = asymptotics.sweep(cfg)
    return {
        "meta": {"version": __version__, "params": {**model.as_dict(), "p_list": list(cfg.p_values),
                                                    "samples_per_region": cfg.samples_per_region}},
        "fit": {"mode": rep.fit_mode, "slope": rep.fit_slope, "intercept": rep.fit_intercept,
                "residual": rep.fit_residual, "epsilon": rep.fitted_epsilon},
        "tables": rep.table_rows(),
    }


def cmd_verify(args):
    model = ModelParams(2, args.r, args.b, args.gamma)
    rep = verify.verify_suite(args.preset, model)
    return rep.as_dict(), rep.passed


def cmd_oracle(args):
    m = _model(args)
    tol = args.tol if args.tol is not None else ORACLE_TOL[args.check]
    if args.check == "norm":
        quad = oracle.norm_by_quadrature(m.p, args.l)
        closed = math.exp(-log_coeff_sq(m.p, args.l))
        rel = abs(quad / closed - 1.0)
        row = {"check": "norm", "p": m.p, "l": args.l, "quadrature": quad, "kernel": closed, "rel_diff": rel}
    elif args.check == "fd":
        t = _t(args)
        rad = math.exp(-0.5 * t)
        h = args.h if args.h is not None else oracle.default_fd_step(rad)
        fd = oracle.fd_quotient(m.p, rad, 0.0, h)
        q = kernel.fs_quotient_t(m.p, t).quotient.to_float()
        rel = abs(fd / q - 1.0)
        row = {"check": "fd", "p": m.p, "radius": rad, "h": h, "fd": fd, "kernel": q, "rel_diff": rel}
    elif args.check == "brute":
        t = _t(args)
        delta = args.delta if args.delta is not None else m.delta
        s = math.exp(-t)
        fast = kernel.split_detail_t(m.p, t, delta, max_index=args.L).split
        slow = oracle.brute_double_sum(m.p, s, args.L, delta)
        row = {"check": "brute", "p": m.p, "s": s, "L": args.L, "delta": delta}
        rel = 0.0
        for name, a, b in zip(("I1", "I2", "I3", "I4"), fast.as_tuple(), slow.as_tuple()):
            af, bf = a.to_float(), b.to_float()
            row[f"kernel_{name}"], row[f"brute_{name}"] = af, bf
            scale = max(abs(af), abs(bf))
            if scale:
                rel = max(rel, abs(af - bf) / scale)
        row["rel_diff"] = rel
    else:
        err = oracle.lgamma_factorial_error()
        rel = err
        row = {"check": "lgamma", "max_abs_error": err, "stirling_ratio_p": oracle.lgamma_stirling_check(m.p),
               "rel_diff": err}
    row["tol"] = tol
    ok = rel <= tol
    row["status"] = "pass" if ok else "fail"
    return {"rows": [row]}, ok


def cmd_fuchsian(args):
    basis = fuchsian.load_basis(args.basis)
    gram = fuchsian.petersson_gram(basis)
    out = {
        "basis": {"label": basis.label, "weight": basis.weight, "dim": basis.dim,
                  "truncation": basis.q_truncation},
        "gram": {"eigenvalues": [float(e) for e in gram.eigenvalues],
                 "quadrature_error_estimate": gram.quadrature_error_estimate, "y_max": gram.y_max},
        "rows": [],
    }
    if args.x is not None or args.y is not None:
        _require(args, "x", "y")
        z = complex(args.x, args.y)
        h = args.h if args.h is not None else 1e-4
        smp = fuchsian.bergman_ratio_sample(basis, gram, z, args.mode, h)
        out["rows"].append({
            "x": args.x, "y": args.y, "S": fuchsian.bergman_function(basis, gram, z),
            "ratio": smp.ratio, "fs_ratio": smp.fs_ratio, "mode": smp.mode,
        })
    if args.n_samples:
        zs = fuchsian.fundamental_domain_samples(args.n_samples, args.seed)
        mags = [abs(fuchsian.bergman_ratio(basis, gram, z)) for z in zs]
        out["ratio_summary"] = {"n": len(mags), "seed": args.seed, "min_abs": min(mags), "max_abs": max(mags)}
    return out


HANDLERS = {
    "coeffs": cmd_coeffs, "eval": cmd_eval, "quotient": cmd_quotient, "split": cmd_split,
    "certify": cmd_certify, "sweep": cmd_sweep, "verify": cmd_verify, "oracle": cmd_oracle,
    "fuchsian": cmd_fuchsian,
}


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        args = merge_config(args)
        result = HANDLERS[args.command](args)
        ok = True
        if isinstance(result, tuple):
            result, ok = result
        if args.format == "csv" and args.command == "fuchsian" and not result["rows"]:
            raise UsageError("csv output for fuchsian needs --x and --y")
        write_report(result, args.out, args.format)
        return EXIT_OK if ok else EXIT_FAIL
    except UsageError as exc:
        print(f"bergman-lab {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, fuchsian.BasisError, OSError, ValueError, TypeError) as exc:
        print(f"bergman-lab {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ArithmeticError as exc:
        print(f"bergman-lab {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


def main() -> int:
    return run(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
