#!/usr/bin/env python3
"""Rebuild data/regions.tsv from the published regional weights and growth curve.

The original regional population survey is not redistributed with this
project. This script produces a model-consistent stand-in: every region
follows N_i(t) = w_i * N0 * g_j exactly, where ln g_j is the published quartic
plus a correction orthogonal to the quartic space that pins ln g = 0 at the
1BCE census point. A least-squares refit therefore recovers the published
weights, scale and polynomial, but the stand-in has no scatter (R^2 = 1).
"""
import argparse
import pathlib

import numpy as np

N0 = 14600.0
COEFFS = [-0.0127, -2.00e-4, 2.13e-7, 2.04e-10, 2.55e-14]
# Census years (calendar, negative = BCE); -1 is the 1BCE reference point.
YEARS = [-5000, -4000, -3000, -2000, -1000, -500, -200, -1, 200, 400, 600,
         800, 1000, 1100, 1200, 1300, 1400, 1500, 1600, 1700, 1750, 1800,
         1850, 1900, 1950, 1975]


def years_since_1bce(year):
    return year if year > 0 else year + 1


def main():
    here = pathlib.Path(__file__).resolve().parent.parent / "data"
    ap = argparse.ArgumentParser()
    ap.add_argument("--weights", default=str(here / "region_weights.tsv"))
    ap.add_argument("--out", default=str(here / "regions.tsv"))
    args = ap.parse_args()

    weights = []
    for line in open(args.weights, encoding="utf-8"):
        if not line.strip() or line.startswith("#"):
            continue
        name, w = line.rstrip("\n").split("\t")
        weights.append((name, float(w)))

    t = np.array([years_since_1bce(y) for y in YEARS], dtype=float)
    poly = sum(c * t**k for k, c in enumerate(COEFFS))
    u = t / 1000.0
    V = np.vander(u, 5, increasing=True)
    P = V @ np.linalg.pinv(V)
    j0 = int(np.argmin(np.abs(t)))
    e0 = np.zeros(len(t))
    e0[j0] = 1.0
    direction = e0 - P @ e0
    delta = direction * (-poly[j0] / direction[j0])
    lng = poly + delta

    with open(args.out, "w", encoding="utf-8") as out:
        out.write("# Regional population sizes (persons).\n")
        out.write("# Model-consistent reconstruction, see tools/reconstruct_regions.py.\n")
        out.write("# region\tyear\tsize\n")
        for name, w in weights:
            for year, b in zip(YEARS, lng):
                out.write(f"{name}\t{year}\t{w * N0 * np.exp(b):.6g}\n")


if __name__ == "__main__":
    main()
