"""Relative error of the three closed-form approximations of Lambda_1 against
the exact MGF route, over mean SNR, for a chosen configuration."""

import argparse

import numpy as np

from kappamu_chos.channel import ChannelConfig, Variant, db_to_linear
from kappamu_chos.statistics import chos_approx, chos_exact, make_context
from kappamu_chos.sweep import write_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--nr", type=int, default=1)
    ap.add_argument("--mu", type=float, default=1.0)
    ap.add_argument("--kappa", type=float, default=0.5)
    ap.add_argument("--m", type=float, default=0.5)
    ap.add_argument("--rho", type=float, default=0.1)
    ap.add_argument("--snr", default="-10:60:15", help="lo:hi:n in dB")
    args = ap.parse_args()

    lo, hi, n = args.snr.split(":")
    rows = []
    for s in np.linspace(float(lo), float(hi), int(n)):
        cfg = ChannelConfig(args.nr, args.mu, args.kappa, args.m, args.rho, float(db_to_linear(s)))
        exact = chos_exact(1, make_context(cfg))
        bar = make_context(cfg, Variant.BAR)
        rows.append([s, exact] + [chos_approx(1, v, bar) / exact - 1 for v in "abc"])
    print(write_csv(("snr_db", "lambda1_exact", "rel_err_a", "rel_err_b", "rel_err_c"), rows), end="")


if __name__ == "__main__":
    main()
