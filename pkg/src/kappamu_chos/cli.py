"""Command line interface.

Exit codes: 0 success, 2 partial failure (some grid points failed, or a
cross-check / MC validation did not agree), 1 fatal error.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings

import numpy as np

from .channel import CONFIG_SCHEMA_HELP, ChannelConfig, ConfigError, derive_params
from .mc import SamplerUnsupportedError, empirical_chos, sample_batch
from .statistics import (
    AccuracyWarning,
    Method,
    capacity_stats,
    context_for_method,
    make_context,
    mgf,
    pdf,
)
from .sweep import (
    COMPARE_HEADER,
    DEFAULT_POINTS,
    DEFAULT_SNR_RANGE,
    SharedSettings,
    compare_models,
    find_min_reliability,
    fmt,
    reliability_sweep,
    write_csv,
)

EXIT_OK, EXIT_FATAL, EXIT_PARTIAL = 0, 1, 2
VERIFY_TOL = 1e-4
MC_Z_MAX = 4.0


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def parse_range(text, with_count=True):
    """'lo:hi:n' (or 'lo:hi' when ``with_count`` is False)."""
    parts = text.split(":")
    try:
        if len(parts) != (3 if with_count else 2):
            raise ValueError
        lo, hi = float(parts[0]), float(parts[1])
        if not with_count:
            return lo, hi
        n = int(parts[2])
        if n < 1:
            raise ValueError
        return np.linspace(lo, hi, n)
    except (ValueError, IndexError):
        form = "lo:hi:n" if with_count else "lo:hi"
        raise argparse.ArgumentTypeError(f"expected {form}, got {text!r}") from None


def parse_values(text):
    """Comma-separated numbers or a lo:hi:n range."""
    if ":" in text:
        return parse_range(text)
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected numbers, got {text!r}") from None


def load_config(path) -> ChannelConfig:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    return ChannelConfig.from_document(doc)


def _method(args):
    return Method(f"approx_{args.approx}") if getattr(args, "approx", None) else Method.EXACT_MGF


def _open_out(args):
    if getattr(args, "out", None):
        return open(args.out, "w", encoding="utf-8", newline="")
    return sys.stdout


def _emit(args, text):
    fh = _open_out(args)
    try:
        fh.write(text)
    finally:
        if fh is not sys.stdout:
            fh.close()


def _kv(pairs):
    return "".join(f"{k}={v}\n" for k, v in pairs)


# ---------------------------------------------------------------- subcommands


def cmd_derive(args):
    p = derive_params(load_config(args.config))
    _emit(args, _kv([
        ("A", fmt(p.A)), ("eta", fmt(p.eta)), ("U", fmt(p.U)), ("lambda", fmt(p.lambda_min)),
        ("lambda_i", ",".join(fmt(v) for v in p.lambda_all)), ("alpha", fmt(p.alpha)),
        ("alpha_bar", fmt(p.alpha_bar)),
    ]))
    return EXIT_OK


def cmd_pdf(args):
    ctx = make_context(load_config(args.config))
    g = args.gamma
    _emit(args, write_csv(("gamma", "pdf"), zip(g, pdf(g, ctx))))
    return EXIT_OK


def cmd_mgf(args):
    ctx = make_context(load_config(args.config))
    p = args.p
    _emit(args, write_csv(("p", "mgf"), zip(p, mgf(p, ctx))))
    return EXIT_OK


def _verify_pair(ex, di):
    diffs = [abs(a / b - 1.0) for a, b in ((ex.lambda1, di.lambda1), (ex.lambda2, di.lambda2))]
    return max(diffs)


def cmd_chos(args):
    cfg = load_config(args.config)
    method = _method(args)
    st = capacity_stats(context_for_method(cfg, method), method)
    pairs = [("method", method.value), ("lambda1", fmt(st.lambda1)), ("lambda2", fmt(st.lambda2)),
             ("aod", fmt(st.aod)), ("reliability", fmt(st.reliability))]
    code = EXIT_OK
    if args.verify:
        di = capacity_stats(context_for_method(cfg, Method.DIRECT_PDF), Method.DIRECT_PDF)
        rel = _verify_pair(st, di)
        pairs += [("direct_lambda1", fmt(di.lambda1)), ("direct_lambda2", fmt(di.lambda2)),
                  ("max_rel_diff", fmt(rel))]
        if method is Method.EXACT_MGF and rel >= VERIFY_TOL:
            code = EXIT_PARTIAL
    _emit(args, _kv(pairs))
    return code


def cmd_sweep(args):
    cfg = load_config(args.config)
    grid = args.snr
    method = _method(args)
    res = reliability_sweep(cfg, float(grid[0]), float(grid[-1]), len(grid), method,
                            workers=args.workers)
    code = EXIT_OK
    if args.verify:
        ref = reliability_sweep(cfg, float(grid[0]), float(grid[-1]), len(grid),
                                Method.DIRECT_PDF, workers=args.workers)
        a = np.array([res.lambda1, res.lambda2])
        b = np.array([ref.lambda1, ref.lambda2])
        rel = np.abs(a / b - 1.0)
        if not np.all(rel < VERIFY_TOL):
            print(f"verify: max relative difference {np.nanmax(rel):.3g}", file=sys.stderr)
            code = EXIT_PARTIAL
    _emit(args, res.to_csv())
    for msg in res.failures:
        print(f"failed: {msg}", file=sys.stderr)
    if res.failures:
        print(f"{len(res.failures)} of {len(grid)} points failed", file=sys.stderr)
        code = EXIT_PARTIAL
    return code


def cmd_min_reliability(args):
    cfg = load_config(args.config)
    lo, hi = args.snr
    pt = find_min_reliability(cfg, lo, hi, _method(args))
    _emit(args, _kv([("snr_db", fmt(pt.snr_db)), ("reliability_min", fmt(pt.reliability_min)),
                     ("aod_max", fmt(1.0 - pt.reliability_min)),
                     ("boundary", str(pt.boundary_flag).lower())]))
    return EXIT_OK


def cmd_compare_models(args):
    shared = SharedSettings(n_branches=args.nr, k_factor_db=args.k_db, kappa_db=args.kappa_db,
                            mu=args.mu, m=args.m, nakagami_m=args.nakagami_m,
                            snr_lo_db=args.snr[0], snr_hi_db=args.snr[1])
    res = compare_models(args.rho, shared, method=_method(args), workers=args.workers)
    # two tables with the same columns: model-major rows (R_min curves) and
    # rho-major rows (SNR-at-minimum comparison per rho)
    by_model = list(res.table())
    by_rho = sorted(by_model, key=lambda r: r[0])
    text = write_csv(COMPARE_HEADER, by_model) + "\n" + write_csv(COMPARE_HEADER, by_rho)
    if args.out:
        stem = args.out[:-4] if args.out.endswith(".csv") else args.out
        for suffix, body in (("_rmin.csv", by_model), ("_snr.csv", by_rho)):
            with open(stem + suffix, "w", encoding="utf-8", newline="") as fh:
                write_csv(COMPARE_HEADER, body, fh)
    else:
        sys.stdout.write(text)
    for msg in res.failures:
        print(f"failed: {msg}", file=sys.stderr)
    return EXIT_PARTIAL if res.failures else EXIT_OK


def cmd_mc_validate(args):
    cfg = load_config(args.config)
    batch = sample_batch(cfg, args.seed, args.samples, workers=args.workers)
    ref = capacity_stats(context_for_method(cfg, Method.DIRECT_PDF), Method.DIRECT_PDF)
    pairs = [("samples", str(batch.count)), ("seed", str(batch.seed))]
    worst = 0.0
    for n, analytic in ((1, ref.lambda1), (2, ref.lambda2)):
        emp = empirical_chos(batch, n)
        z = emp.z_score(analytic)
        worst = max(worst, abs(z))
        pairs += [(f"lambda{n}_empirical", fmt(emp.estimate)), (f"lambda{n}_std_error",
                  fmt(emp.std_error)), (f"lambda{n}_analytic", fmt(analytic)),
                  (f"lambda{n}_z", f"{z:.3f}")]
    if args.export:
        with open(args.export, "w", encoding="utf-8", newline="") as fh:
            batch.to_csv(fh)
    _emit(args, _kv(pairs))
    return EXIT_OK if worst < MC_Z_MAX else EXIT_PARTIAL


# ---------------------------------------------------------------- parser


def build_parser():
    p = _Parser(prog="kappamu-chos", description=__doc__.splitlines()[0],
                epilog=CONFIG_SCHEMA_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, fn, config=True, out=True, approx=False, help=None):
        sp = sub.add_parser(name, help=help, epilog=CONFIG_SCHEMA_HELP,
                            formatter_class=argparse.RawDescriptionHelpFormatter)
        if config:
            sp.add_argument("--config", required=True, help="JSON config document")
        if out:
            sp.add_argument("--out", help="write output here instead of stdout")
        if approx:
            sp.add_argument("--approx", choices=("a", "b", "c"),
                            help="use an asymptotic approximation instead of the exact route")
        sp.set_defaults(fn=fn)
        return sp

    add("derive", cmd_derive, help="print derived channel parameters")
    sp = add("pdf", cmd_pdf, help="evaluate the SNR density")
    sp.add_argument("--gamma", type=parse_values, required=True,
                    help="linear SNR values: comma list or lo:hi:n")
    sp = add("mgf", cmd_mgf, help="evaluate the MGF E[exp(p gamma)]")
    sp.add_argument("--p", type=parse_values, required=True, help="comma list or lo:hi:n")
    sp = add("chos", cmd_chos, approx=True, help="capacity moments, AoD and reliability")
    sp.add_argument("--verify", action="store_true", help="cross-check against PDF quadrature")
    sp = add("sweep", cmd_sweep, approx=True, help="reliability versus mean SNR")
    sp.add_argument("--snr", type=parse_range,
                    default=np.linspace(*DEFAULT_SNR_RANGE, DEFAULT_POINTS),
                    help="dB grid lo:hi:n (default -10:40:101)")
    sp.add_argument("--verify", action="store_true", help="cross-check against PDF quadrature")
    sp.add_argument("--workers", type=int, default=1)
    sp = add("min-reliability", cmd_min_reliability, approx=True,
             help="minimum reliability and the SNR where it occurs")
    sp.add_argument("--snr", type=lambda t: parse_range(t, False), default=DEFAULT_SNR_RANGE,
                    help="dB search range lo:hi (default -10:40)")
    sp = add("compare-models", cmd_compare_models, config=False, approx=True,
             help="minimum reliability of the four models across rho")
    sp.add_argument("--rho", type=parse_range, default=np.linspace(0.0, 0.9, 10),
                    help="rho grid lo:hi:n (default 0:0.9:10)")
    sp.add_argument("--nr", type=int, default=2)
    sp.add_argument("--k-db", type=float, default=5.0, help="Rician K-factor in dB")
    sp.add_argument("--kappa-db", type=float, default=10.0)
    sp.add_argument("--mu", type=float, default=2.5)
    sp.add_argument("--m", type=float, default=2.0)
    sp.add_argument("--nakagami-m", type=float, default=2.0)
    sp.add_argument("--snr", type=lambda t: parse_range(t, False), default=DEFAULT_SNR_RANGE)
    sp.add_argument("--workers", type=int, default=1)
    sp = add("mc-validate", cmd_mc_validate, help="Monte Carlo check of the capacity moments")
    sp.add_argument("--samples", type=int, default=1_000_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--export", help="also write the SNR samples as CSV")
    return p


_VALUE_OPTIONS = {"--snr", "--rho", "--gamma", "--p"}


def _glue_negative_values(argv):
    # "--snr -10:40:101" would otherwise be read as an unknown option
    out, it = [], iter(argv)
    for tok in it:
        if tok in _VALUE_OPTIONS:
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def run_cli(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parser.parse_args(_glue_negative_values(argv))
    except UsageError as exc:
        print(f"usage error: {exc}\n", file=sys.stderr)
        print(parser.format_usage() + "\n" + CONFIG_SCHEMA_HELP, file=sys.stderr)
        return EXIT_FATAL
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always", AccuracyWarning)
            return args.fn(args)
    except (ConfigError, json.JSONDecodeError, KeyError) as exc:
        if isinstance(exc, SamplerUnsupportedError):
            print(f"error: {exc}", file=sys.stderr)
        else:
            print(f"config error: {exc}\n\n{CONFIG_SCHEMA_HELP}", file=sys.stderr)
        return EXIT_FATAL
    except (OSError, ArithmeticError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FATAL


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
