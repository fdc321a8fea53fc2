"""Regenerate the high-precision constants frozen in tests/test_specfun.py.

E_b(-x) via mpmath: the power series where its cancellation is affordable,
otherwise Talbot inversion of s^(b-1) / (s^b + x) at t = 1. P_5 via sympy's
Rodrigues formula.
"""

import math

import mpmath as mp
import sympy as sp

ML_POINTS = [(0.5, -1.0), (0.5, -4.0), (0.3, -2.0), (0.7, -3.0), (0.9, -10.0),
             (0.6, -8.0), (0.8, -25.0), (0.3, -20.0), (0.2, -6.0), (0.5, -30.0)]


def ml_series(beta, z, digits):
    with mp.workdps(digits):
        b, zz = mp.mpf(beta), mp.mpf(z)
        total, k = mp.mpf(0), 0
        while True:
            term = zz**k / mp.gamma(b * k + 1)
            total += term
            if k > 10 and abs(term) < mp.mpf(10) ** (-40):
                return total
            k += 1


def ml_talbot(beta, z):
    with mp.workdps(60):
        b, x = mp.mpf(beta), -mp.mpf(z)
        return mp.invertlaplace(lambda s: s ** (b - 1) / (s**b + x), 1, method="talbot")


def ml_value(beta, z):
    # largest series term is about exp(|z|^(1/b)); budget digits for that cancellation
    digits = int(abs(z) ** (1 / beta) / math.log(10)) + 60
    if digits <= 600:
        return ml_series(beta, z, digits)
    return ml_talbot(beta, z)


def main():
    print("FROZEN_ML = {")
    for beta, z in ML_POINTS:
        print(f"    ({beta}, {z}): {mp.nstr(ml_value(beta, z), 20)},")
    print("}")
    x = sp.symbols("x")
    p5 = sp.diff((x**2 - 1) ** 5, x, 5) / (2**5 * sp.factorial(5))
    grid = [sp.Rational(k, 10) for k in (-9, -7, -5, -3, -1, 1, 3, 5, 7, 9)]
    print("FROZEN_P5 =", [(float(g), float(p5.subs(x, g))) for g in grid])


if __name__ == "__main__":
    main()
