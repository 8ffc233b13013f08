"""Experiment harness: estimators, convergence studies, and check suites.

Commands
--------
estimate    Monte Carlo correlator estimate, rows to CSV/JSON
converge    normalized correlator vs its limit over a list of n
check       named verification suites (oracle, identity, landscape, hciz,
            representation); exit code 1 on any failure
theory      pointwise closed-form evaluation
hciz-check  unitary-integral ratio-constancy experiment

Every run embeds its fully resolved configuration, outputs carry no
timestamps, and floats are serialized with 17 significant digits in both
CSV and JSON, so a rerun with the same config and seed is byte-identical.
A JSON config file may supply any flag (CLI flags win); the `config` block
of a previous output file is accepted as-is.

Exit codes: 0 success, 1 check failure, 2 config error, 3 numerical
non-convergence.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import oracle
from .detmc import SpectralConfig, estimate_correlator
from .ensembles import RngStream, make_diag_law, make_entry_law
from .hciz import ratio_constancy_report
from .saddle import (
    ContourSpec,
    QuadratureError,
    cauchy_det_identity_check,
    f2_contour_normalized,
    f2_exact_integral,
    saddle_configuration_sum,
    verify_landscape,
)
from .signedlog import SignedLog
from .theory import (
    TheoryParams,
    diagonal_normalizer,
    exponent_drift,
    f2_pair_asymptotic,
    limit_ratio,
    semicircle_density,
    sine_kernel_ratio,
)

__all__ = ["main"]


class ConfigError(ValueError):
    pass


# ----------------------------------------------------------------------
# deterministic serialization (17 significant digits in CSV and JSON)
# ----------------------------------------------------------------------

def _fmt_float(x):
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _pyify(obj):
    """Coerce numpy scalars/containers to plain Python for serialization."""
    if isinstance(obj, dict):
        return {k: _pyify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_pyify(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


class _Float17Encoder(json.JSONEncoder):
    def iterencode(self, o, _one_shot=False):
        markers = {} if self.check_circular else None

        def floatstr(x, _fmt=_fmt_float):
            if not math.isfinite(x):
                return f'"{_fmt(x)}"'
            return _fmt(x)

        indent = self.indent
        if isinstance(indent, int):
            indent = " " * indent
        walker = json.encoder._make_iterencode(
            markers,
            self.default,
            json.encoder.py_encode_basestring_ascii,
            indent,
            floatstr,
            self.key_separator,
            self.item_separator,
            self.sort_keys,
            self.skipkeys,
            _one_shot,
        )
        return walker(o, 0)


def _doc_to_json(doc):
    return json.dumps(doc, cls=_Float17Encoder, indent=2) + "\n"


def _rows_to_csv(rows):
    buf = io.StringIO()
    if not rows:
        return ""
    writer = csv.writer(buf, lineterminator="\n")
    header = list(rows[0].keys())
    writer.writerow(header)
    for row in rows:
        out = []
        for key in header:
            v = row[key]
            if isinstance(v, bool):
                out.append("true" if v else "false")
            elif isinstance(v, float):
                out.append(_fmt_float(v))
            else:
                out.append("" if v is None else str(v))
        writer.writerow(out)
    return buf.getvalue()


def _emit(doc, out, fmt):
    doc = _pyify(doc)
    if out is None:
        sys.stdout.write(_doc_to_json(doc))
        return
    if fmt in ("json", "both"):
        with open(out + ".json", "w") as fh:
            fh.write(_doc_to_json(doc))
    if fmt in ("csv", "both"):
        with open(out + ".csv", "w") as fh:
            fh.write(_rows_to_csv(doc["rows"]))


def _linear_value(sl: SignedLog):
    """Best-effort plain float of a signed-log quantity, None if unrepresentable."""
    if sl.sign == 0:
        return 0.0
    if sl.logmag > 700.0 or sl.logmag < -745.0:
        return None
    return sl.value


# ----------------------------------------------------------------------
# argument plumbing
# ----------------------------------------------------------------------

def _csv_floats(text):
    try:
        return tuple(float(tok) for tok in str(text).split(",") if tok != "")
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad float list {text!r}") from exc


def _csv_ints(text):
    try:
        return tuple(int(float(tok)) for tok in str(text).split(",") if tok != "")
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad int list {text!r}") from exc


def _count(text):
    # accepts 1e6-style counts
    return int(float(text))


def _law_from_args(name, mu4, p):
    return make_entry_law(name, mu4=mu4, p=p) if name == "two_point" else make_entry_law(name)


def _apply_config_file(args, argv):
    """Fill args from a JSON config file; explicit CLI flags take precedence."""
    if not getattr(args, "config", None):
        return args
    try:
        with open(args.config) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config file {args.config}: {exc}") from exc
    if isinstance(raw, dict) and "config" in raw and isinstance(raw["config"], dict):
        raw = raw["config"]
    if not isinstance(raw, dict):
        raise ConfigError("config file must hold a JSON object")
    explicit = {tok.split("=", 1)[0].lstrip("-").replace("-", "_")
                for tok in argv if tok.startswith("--")}
    for key, value in raw.items():
        attr = key.replace("-", "_")
        if attr in ("command", "config"):
            continue
        if not hasattr(args, attr):
            raise ConfigError(f"config field {key!r} is not valid for this command")
        if attr in explicit:
            continue
        if attr in ("xi", "lambdas") and value is not None:
            value = tuple(float(v) for v in (
                value if isinstance(value, (list, tuple)) else _csv_floats(value)
            ))
        if attr in ("n_list",) and value is not None:
            value = tuple(int(v) for v in (
                value if isinstance(value, (list, tuple)) else _csv_ints(value)
            ))
        setattr(args, attr, value)
    return args


def _resolved(args, fields):
    """The echoed configuration: exactly the mathematical inputs of the run."""
    out = {}
    for f in fields:
        v = getattr(args, f)
        if isinstance(v, tuple):
            v = list(v)
        out[f] = v
    return out


# ----------------------------------------------------------------------
# commands
# ----------------------------------------------------------------------

_CONFIG_FIELDS = {
    "estimate": ["n", "m", "lambda0", "xi", "law", "mu4", "mixture_p",
                 "diag_law", "samples", "seed", "format"],
    "converge": ["backend", "n_list", "m", "lambda0", "kappa4", "xi", "law",
                 "mu4", "mixture_p", "samples", "seed", "tol", "format"],
    "check": ["suite", "n_list", "lambda0", "samples", "trials", "seed",
              "tol", "format"],
    "theory": ["n", "m", "lambda0", "kappa4", "xi", "format"],
    "hciz-check": ["n_list", "trials", "samples", "seed", "format"],
}


def _cmd_estimate(args):
    config = SpectralConfig(args.n, args.m, args.lambda0, tuple(args.xi))
    law = _law_from_args(args.law, args.mu4, args.mixture_p)
    diag = make_diag_law(args.diag_law)
    est = estimate_correlator(
        config,
        law,
        args.samples,
        RngStream(args.seed),
        diag_law=diag,
        workers=args.workers,
    )
    row = {
        "n": config.n,
        "m": config.m,
        "law": args.law,
        "mu4": law.mu4,
        "kappa4": law.kappa4,
        "lambda0": config.lambda0,
        "xi": ",".join(_fmt_float(x) for x in config.xi),
        "mean_sign": est.mean.sign,
        "mean_logmag": est.mean.logmag,
        "mean_value": _linear_value(est.mean),
        "stderr_rel": est.stderr_rel,
        "sign_stable": est.sign_stable,
        "samples": est.count,
        "seed": args.seed,
    }
    doc = {
        "command": "estimate",
        "config": _resolved(args, _CONFIG_FIELDS["estimate"]),
        "rows": [row],
    }
    _emit(doc, args.out, args.format)
    return 0


def _normalized_pair(n, lambda0, kappa4, xi1, xi2, tol):
    """(leading-normalized, self-normalized) contour values for one n."""
    rho = semicircle_density(lambda0)
    s12 = f2_contour_normalized(n, lambda0, kappa4, xi1, xi2, rtol=tol)
    s11 = f2_contour_normalized(n, lambda0, kappa4, xi1, xi1, rtol=tol)
    s22 = f2_contour_normalized(n, lambda0, kappa4, xi2, xi2, rtol=tol)
    leading = (s12 / SignedLog.from_value(n * rho)).value
    self_norm = (s12 / (s11 * s22).sqrt()).value
    return leading, self_norm


def _cmd_converge(args):
    if len(args.xi) != 2 * args.m:
        raise ConfigError("xi must have length 2m")
    rows = []
    params = TheoryParams(args.lambda0, max(args.n_list or (1,)), args.m,
                          args.kappa4, tuple(args.xi))
    target = limit_ratio(params)
    if args.backend == "config-sum":
        value = saddle_configuration_sum(args.m, args.lambda0, args.kappa4, args.xi)
        rows.append(_converge_row(args, 0, value, value, target))
    elif args.backend == "contour":
        if args.m != 1:
            raise ConfigError("contour backend supports m = 1 only")
        for n in args.n_list:
            leading, self_norm = _normalized_pair(
                n, args.lambda0, args.kappa4, args.xi[0], args.xi[1], args.tol
            )
            rows.append(_converge_row(args, n, leading, self_norm, target))
    elif args.backend == "mc":
        law = _law_from_args(args.law, args.mu4, args.mixture_p)
        if abs(law.kappa4 - args.kappa4) > 1e-12:
            raise ConfigError(
                f"law {args.law!r} has kappa4={law.kappa4}, but --kappa4 "
                f"{args.kappa4} was requested"
            )
        for n in args.n_list:
            rows.append(_mc_converge_row(args, n, law, target))
    else:
        raise ConfigError(f"unknown backend {args.backend!r}")
    doc = {
        "command": "converge",
        "config": _resolved(args, _CONFIG_FIELDS["converge"]),
        "rows": rows,
    }
    _emit(doc, args.out, args.format)
    return 0


def _converge_row(args, n, leading, self_norm, target):
    return {
        "backend": args.backend,
        "n": n,
        "m": args.m,
        "lambda0": args.lambda0,
        "kappa4": args.kappa4,
        "xi": ",".join(_fmt_float(x) for x in args.xi),
        "normalized_leading": leading,
        "normalized_self": self_norm,
        "target": target,
        "deviation": abs(self_norm - target),
        "ratio_to_target": self_norm / target if target != 0 else math.inf,
    }


def _mc_converge_row(args, n, law, target):
    m = args.m
    rho = semicircle_density(args.lambda0)
    config = SpectralConfig(n, m, args.lambda0, tuple(args.xi))
    seed = RngStream(args.seed)
    est = estimate_correlator(config, law, args.samples, seed, workers=args.workers)
    # leading normalizer: (n rho)^{m^2} prod_l sqrt(D_leading(xi_l))
    params = TheoryParams(args.lambda0, n, m, args.kappa4, tuple(args.xi))
    lead = SignedLog.from_value((n * rho) ** (m * m))
    for x in args.xi:
        lead = lead * diagonal_normalizer(x, params).sqrt()
    leading = (est.mean / lead).value
    # self normalizer: (n rho)^{m^2 - m} prod_l sqrt(F_2(xi_l, xi_l))
    norm = SignedLog.from_value((n * rho) ** (m * m - m))
    for k, x in enumerate(args.xi):
        diag_cfg = SpectralConfig(n, 1, args.lambda0, (x, x))
        diag_est = estimate_correlator(
            config=diag_cfg,
            law=law,
            samples=args.samples,
            rng=seed.shifted(1000 * (k + 1)),
            workers=args.workers,
        )
        norm = norm * diag_est.mean.sqrt()
    self_norm = (est.mean / norm).value
    return _converge_row(args, n, leading, self_norm, target)


def _cmd_theory(args):
    params = TheoryParams(args.lambda0, args.n, args.m, args.kappa4,
                          tuple(args.xi))
    skv = sine_kernel_ratio(args.xi)
    dn = diagonal_normalizer(args.xi[0], params)
    pair = f2_pair_asymptotic(params, args.xi[0], args.xi[1])
    row = {
        "lambda0": args.lambda0,
        "n": args.n,
        "m": args.m,
        "kappa4": args.kappa4,
        "xi": ",".join(_fmt_float(x) for x in args.xi),
        "rho_sc": semicircle_density(args.lambda0),
        "exponent_drift": exponent_drift(args.lambda0),
        "normalizer_logmag": dn.logmag,
        "normalizer_value": _linear_value(dn),
        "sine_kernel_ratio": skv.value,
        "confluent": skv.confluent,
        "limit_ratio": limit_ratio(params),
        "pair_asymptotic_sign": pair.sign,
        "pair_asymptotic_logmag": pair.logmag,
    }
    doc = {
        "command": "theory",
        "config": _resolved(args, _CONFIG_FIELDS["theory"]),
        "rows": [row],
    }
    _emit(doc, args.out, args.format)
    return 0


def _cmd_hciz(args):
    rows = []
    ok = True
    for idx, n in enumerate(args.n_list):
        rep = ratio_constancy_report(
            n, args.trials, args.samples, RngStream(args.seed).shifted(10000 * idx)
        )
        ok &= rep.passed
        rows.append({
            "n": n,
            "trials": args.trials,
            "samples": args.samples,
            "fitted_constant": rep.fitted_constant,
            "rel_spread": rep.rel_spread,
            "spread_tolerance": rep.spread_tolerance,
            "passed": rep.passed,
        })
    doc = {
        "command": "hciz-check",
        "config": _resolved(args, _CONFIG_FIELDS["hciz-check"]),
        "rows": rows,
    }
    _emit(doc, args.out, args.format)
    return 0 if ok else 1


# ---- check suites ----------------------------------------------------

_ORACLE_GRID = [(1, (0.0, 0.0)), (1, (0.5, 0.5)), (1, (0.3, 0.7)),
                (2, (0.0, 0.0)), (2, (0.5, 0.5)), (2, (0.3, 0.7)),
                (3, (0.0, 0.0)), (3, (0.5, 0.5)), (3, (0.3, 0.7))]


def _suite_oracle(args):
    rows = []
    for law_name in ("gaussian", "rademacher"):
        law = make_entry_law(law_name)
        for idx, (n, lambdas) in enumerate(_ORACLE_GRID):
            exact = oracle.exact_correlator(n, lambdas, law)
            config = SpectralConfig.from_lambdas(n, lambdas)
            est = estimate_correlator(
                config, law, args.samples,
                RngStream(args.seed).shifted(100 * idx), workers=args.workers,
            )
            mean = est.mean.value
            stderr = abs(mean) * est.stderr_rel if est.mean.sign else math.inf
            z = abs(mean - exact) / stderr if stderr > 0 else math.inf
            rows.append({
                "suite": "oracle", "name": f"{law_name} n={n} lambdas={lambdas}",
                "exact": exact, "mc_mean": mean, "mc_stderr": stderr,
                "z": z, "passed": z < 4.0,
            })
    return rows


def _suite_identity(args):
    gen = RngStream(args.seed).generator()
    rows = []
    worst = 0.0
    for _ in range(100):
        m = int(gen.integers(1, 5))
        a = np.sort(gen.uniform(-3, 3, m))
        b = np.sort(gen.uniform(4, 9, m))
        worst = max(worst, cauchy_det_identity_check(a, b))
    rows.append({
        "suite": "identity", "name": "cauchy determinant (100 draws, m<=4)",
        "max_deviation": worst, "tolerance": 1e-10, "passed": worst < 1e-10,
    })
    worst_cfg = 0.0
    for m in (1, 2, 3):
        for _ in range(20):
            xi = np.round(np.sort(gen.uniform(-1.5, 1.5, 2 * m)), 6)
            if len(set(xi.tolist())) < 2 * m:
                continue
            lam0 = float(gen.uniform(-1.2, 1.2))
            kap4 = float(gen.uniform(-0.5, 0.5))
            cfg = saddle_configuration_sum(m, lam0, kap4, xi)
            tgt = limit_ratio(TheoryParams(lam0, 1, m, kap4, tuple(xi)))
            denom = max(abs(tgt), 1e-12)
            worst_cfg = max(worst_cfg, abs(cfg - tgt) / denom)
    rows.append({
        "suite": "identity",
        "name": "saddle configuration sum vs limit ratio (m<=3)",
        "max_deviation": worst_cfg, "tolerance": 1e-8,
        "passed": worst_cfg < 1e-8,
    })
    return rows


def _suite_landscape(args):
    rows = []
    lambda0s = (args.lambda0,) if args.lambda0 is not None else (0.0, 0.5, 1.0, 1.5)
    for lam0 in lambda0s:
        for n in args.n_list or (64, 256):
            rep = verify_landscape(lam0, n)
            rows.append({
                "suite": "landscape", "name": f"lambda0={lam0} n={n}",
                "minima_offset": max(rep.minima_offsets),
                "re_phase_at_saddles": max(abs(v) for v in rep.re_phase_at_saddles),
                "curvature_fd_error": rep.curvature_fd_error,
                "re_curvature_fd_error": rep.re_curvature_fd_error,
                "inequality_constant": rep.inequality_constant,
                "passed": rep.passed,
            })
    return rows


def _suite_hciz(args):
    rows = []
    for idx, n in enumerate(args.n_list or (2, 3)):
        rep = ratio_constancy_report(
            n, args.trials, args.samples,
            RngStream(args.seed).shifted(10000 * idx),
        )
        rows.append({
            "suite": "hciz", "name": f"ratio constancy n={n}",
            "fitted_constant": rep.fitted_constant,
            "rel_spread": rep.rel_spread,
            "spread_tolerance": rep.spread_tolerance,
            "passed": rep.passed,
        })
    return rows


def _suite_representation(args):
    rows = []
    for law_name, kap4 in (("gaussian", 0.0), ("rademacher", -0.5)):
        law = make_entry_law(law_name)
        for n, lambdas in _ORACLE_GRID:
            exact = oracle.exact_correlator(n, lambdas, law)
            quad = f2_exact_integral(n, lambdas, law=law)
            rel = abs(quad - exact) / max(abs(exact), 1e-300)
            rows.append({
                "suite": "representation",
                "name": f"{law_name} kappa4={kap4} n={n} lambdas={lambdas}",
                "oracle": exact, "quadrature": quad, "rel_error": rel,
                "tolerance": args.tol, "passed": rel < args.tol,
            })
    return rows


_SUITES = {
    "oracle": _suite_oracle,
    "identity": _suite_identity,
    "landscape": _suite_landscape,
    "hciz": _suite_hciz,
    "representation": _suite_representation,
}


def _cmd_check(args):
    if args.suite not in _SUITES:
        raise ConfigError(f"unknown suite {args.suite!r}; choose from {sorted(_SUITES)}")
    rows = _SUITES[args.suite](args)
    ok = all(r["passed"] for r in rows)
    doc = {
        "command": "check",
        "config": _resolved(args, _CONFIG_FIELDS["check"]),
        "rows": rows,
        "passed": ok,
    }
    _emit(doc, args.out, args.format)
    for r in rows:
        status = "PASS" if r["passed"] else "FAIL"
        sys.stderr.write(f"[{status}] {r['suite']}: {r['name']}\n")
    return 0 if ok else 1


# ----------------------------------------------------------------------
# parser
# ----------------------------------------------------------------------

def _add_common(sub):
    sub.add_argument("--config", help="JSON config file; CLI flags override")
    sub.add_argument("--out", help="output base path (writes .csv/.json)")
    sub.add_argument("--format", choices=("csv", "json", "both"), default="both")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--workers", type=int, default=1,
                     help="worker threads; results are worker-count invariant")


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="wigcorr",
        description="Characteristic-polynomial correlators of Wigner matrices",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    est = subs.add_parser("estimate", help="Monte Carlo correlator estimate")
    est.add_argument("--n", type=int, default=2)
    est.add_argument("--m", type=int, default=1)
    est.add_argument("--lambda0", type=float, default=0.0)
    est.add_argument("--xi", type=_csv_floats, default=(0.0, 0.0))
    est.add_argument("--law", default="gaussian",
                     choices=("gaussian", "rademacher", "uniform", "two_point"))
    est.add_argument("--mu4", type=float, default=None)
    est.add_argument("--mixture-p", type=float, default=0.25)
    est.add_argument("--diag-law", default="gaussian")
    est.add_argument("--samples", type=_count, default=100000)
    _add_common(est)
    est.set_defaults(func=_cmd_estimate)

    conv = subs.add_parser("converge", help="normalized correlator vs its limit")
    conv.add_argument("--backend", default="contour",
                      choices=("contour", "mc", "config-sum"))
    conv.add_argument("--n", dest="n_list", type=_csv_ints, default=(32, 64, 128))
    conv.add_argument("--m", type=int, default=1)
    conv.add_argument("--lambda0", type=float, default=0.0)
    conv.add_argument("--kappa4", type=float, default=0.0)
    conv.add_argument("--xi", type=_csv_floats, default=(0.25, -0.25))
    conv.add_argument("--law", default="gaussian",
                      choices=("gaussian", "rademacher", "uniform", "two_point"))
    conv.add_argument("--mu4", type=float, default=None)
    conv.add_argument("--mixture-p", type=float, default=0.25)
    conv.add_argument("--samples", type=_count, default=100000)
    conv.add_argument("--tol", type=float, default=1e-6)
    _add_common(conv)
    conv.set_defaults(func=_cmd_converge)

    chk = subs.add_parser("check", help="verification suites")
    chk.add_argument("suite", choices=sorted(_SUITES))
    chk.add_argument("--n", dest="n_list", type=_csv_ints, default=None)
    chk.add_argument("--lambda0", type=float, default=None)
    chk.add_argument("--samples", type=_count, default=200000)
    chk.add_argument("--trials", type=int, default=8)
    chk.add_argument("--tol", type=float, default=1e-3)
    _add_common(chk)
    chk.set_defaults(func=_cmd_check)

    th = subs.add_parser("theory", help="pointwise closed-form evaluation")
    th.add_argument("--n", type=int, default=32)
    th.add_argument("--m", type=int, default=1)
    th.add_argument("--lambda0", type=float, default=0.0)
    th.add_argument("--kappa4", type=float, default=0.0)
    th.add_argument("--xi", type=_csv_floats, default=(0.25, -0.25))
    _add_common(th)
    th.set_defaults(func=_cmd_theory)

    hz = subs.add_parser("hciz-check", help="unitary-integral ratio constancy")
    hz.add_argument("--n", dest="n_list", type=_csv_ints, default=(2, 3))
    hz.add_argument("--trials", type=int, default=8)
    hz.add_argument("--samples", type=_count, default=200000)
    _add_common(hz)
    hz.set_defaults(func=_cmd_hciz)

    return parser


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad usage, matching the config-error code
        return int(exc.code or 0)
    try:
        args = _apply_config_file(args, argv)
        return args.func(args)
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 2
    except (ValueError, KeyError) as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 2
    except QuadratureError as exc:
        sys.stderr.write(f"numerical non-convergence: {exc}\n")
        return 3


if __name__ == "__main__":
    sys.exit(main())
