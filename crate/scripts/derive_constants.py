#!/usr/bin/env python3
"""Arbitrary-precision evaluation of the closed-form constants frozen into
the Rust tests. Run with `python3 scripts/derive_constants.py`."""

from fractions import Fraction

from mpmath import mp, mpf, sqrt, log, ceil, pi, exp

mp.dps = 30

C_MU = mpf("14.14214")


def welch(n, p):
    return sqrt(mpf(p - n) / (n * (p - 1)))


def mu_threshold(p, c_mu=C_MU):
    return 1 / (c_mu * sqrt(log(p)))


def b_subgaussian(n, p, ratio=1):
    return sqrt(8 * log(p) / n) * ratio


def gaussian_mu_bound(n, p):
    return sqrt(15 * log(p)) / (sqrt(n) - sqrt(12 * log(p)))


def gaussian_nu_bound(n, p):
    return sqrt(15 * log(p)) / (n - sqrt(12 * n * log(p)))


rows = [
    ("welch(500, 2000)", welch(500, 2000)),
    ("welch(3000, 21345)", welch(3000, 21345)),
    ("mu_threshold(p=2000, c=14.14214)", mu_threshold(2000)),
    ("mu_threshold(p=21345, c=14.14214)", mu_threshold(21345)),
    ("10*sqrt(2)", 10 * sqrt(2)),
    ("b_subgaussian(800, 1000, 1)", b_subgaussian(800, 1000)),
    ("subgaussian precondition rhs n=800: (n/16)(1/4)^4", mpf(800) / 16 / 256),
    ("ln(1000)", log(1000)),
    ("ln(2000)", log(2000)),
    ("ln(21345)", log(21345)),
    ("500/ln(2000)", 500 / log(2000)),
    ("ceil(500/ln(2000))", ceil(500 / log(2000))),
    ("3000/ln(21345)", 3000 / log(21345)),
    ("ceil(3000/ln(21345))", ceil(3000 / log(21345))),
    ("ceil(sqrt(500))", ceil(sqrt(500))),
    ("gaussian mu bound (500, 2000)", gaussian_mu_bound(500, 2000)),
    ("gaussian nu bound (500, 2000)", gaussian_nu_bound(500, 2000)),
    ("sqrt(8 ln 2000 / 500)", b_subgaussian(500, 2000)),
    ("noise event failure bound 2/(p sqrt(2 pi ln p)), p=1000", 2 / (1000 * sqrt(2 * pi * log(1000)))),
    ("noise event failure bound, p=2000", 2 / (2000 * sqrt(2 * pi * log(2000)))),
    ("half-normal shifted mean 2+sqrt(2/pi)", 2 + sqrt(2 / pi)),
    ("k-cap mu=0.01, c=14.14214, ln p=10", mpf("0.01") ** -2 / (C_MU ** 2 * 10)),
    ("k-cap mu=0.01, c=14.14214, p=22027 (first integer with ln p > 10)", mpf("0.01") ** -2 / (C_MU ** 2 * log(22027))),
    ("exp(5)", exp(5)),
]

exact = [
    ("d_general k=4 msr=1/2 b=1/20 noise=0", Fraction(2) / (Fraction(1, 2) - 2 * Fraction(1, 20))),
    ("d_general k=4 msr=1/2 b=1/20 noise=1/10", Fraction(2) / (Fraction(1, 2) - 2 * Fraction(1, 20) - Fraction(1, 10))),
    ("d_mu mu=1/10 k=9 msr=4/5", Fraction(3) / (Fraction(4, 5) - 2 * Fraction(1, 10) * 3)),
]

if __name__ == "__main__":
    for name, value in rows:
        print(f"{name:60s} {mp.nstr(value, 20)}")
    for name, value in exact:
        print(f"{name:60s} {value} (ceil {-(-value.numerator // value.denominator)})")
