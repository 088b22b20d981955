"""High-precision reference values for the bound calculators.

Run directly (``python tests/golden_oracle.py``) to regenerate the numbers
pinned in test_theory.py and test_acceptance.py.  Uses sympy/mpmath only;
nothing from the mdpu package is imported.
"""

import mpmath as mp
import sympy as sp

mp.mp.dps = 60


def ceil_exact(expr):
    return int(sp.ceiling(sp.nsimplify(expr) if isinstance(expr, float) else expr))


def k1_rmax(S, A, T, rmax, eps, delta):
    S, A, T = sp.Integer(S), sp.Integer(A), sp.Integer(T)
    rmax, eps, delta = sp.Rational(rmax), sp.Rational(eps), sp.Rational(delta)
    first = sp.ceiling(4 * S * T * rmax / eps) ** 3
    second = sp.ceiling(sp.N(-6 * sp.log(delta / (6 * S * A**2)) ** 3, 50))
    return int(max(first, second) + 1)


def k1_urmax(N, k, T, rmax, eps, delta):
    N, k, T = sp.Integer(N), sp.Integer(k), sp.Integer(T)
    rmax, eps, delta = sp.Rational(rmax), sp.Rational(eps), sp.Rational(delta)
    first = sp.ceiling(4 * N * T * rmax / eps) ** 3
    second = sp.ceiling(sp.N(8 * sp.log(8 * N * k / delta) ** 3, 50))
    return int(max(first, second) + 1)


def k2(N, k, T, rmax, eps, delta, k0):
    x = sp.Integer(N * k * max(k1_urmax(N, k, T + 1, rmax, eps, delta), k0))
    val = 2 * x ** sp.Rational(3, 2) * sp.Rational(rmax) / sp.Rational(eps)
    return int(sp.ceiling(sp.N(val, 60)))


def k3(rmax, eps, delta):
    rmax, eps, delta = sp.Rational(rmax), sp.Rational(eps), sp.Rational(delta)
    val = (2 * rmax + 1) * sp.Max((2 * rmax / eps) ** 3, 8 * sp.log(4 / delta) ** 3) / eps
    return int(sp.ceiling(sp.N(val, 60)))


def k0_by_terms(term, threshold, limit=10**6):
    total = mp.mpf(0)
    for t in range(1, limit):
        total += term(t)
        if total >= threshold:
            return t
    raise RuntimeError("not reached")


def main():
    print("k1_rmax(2,2,1,1,1,0.25) =", k1_rmax(2, 2, 1, 1, 1, sp.Rational(1, 4)))
    print("k1_urmax(2,2,1,1,1,0.25) =", k1_urmax(2, 2, 1, 1, 1, sp.Rational(1, 4)))
    print("k1_urmax(2,2,2,1,1,0.25) =", k1_urmax(2, 2, 2, 1, 1, sp.Rational(1, 4)))
    print("k2(2,2,1,1,1,0.25,K0=10) =", k2(2, 2, 1, 1, 1, sp.Rational(1, 4), 10))
    print("k3(1,1,0.25) =", k3(1, 1, sp.Rational(1, 4)))
    thr = lambda N, d: mp.log(4 * N / mp.mpf(d))
    print("k0(constant .5, N=4, d=.1) =", k0_by_terms(lambda t: mp.mpf("0.5"), thr(4, "0.1")))
    print("k0(constant .3, N=4, d=.2) =", k0_by_terms(lambda t: mp.mpf("0.3"), thr(4, "0.2")))
    print("k0(1/(t+1), N=1, d=.5) =", k0_by_terms(lambda t: 1 / mp.mpf(t + 1), thr(1, "0.5")))
    for d in ("0.2", "0.1", "0.05", "0.02"):
        print(f"k0(1/(t+1), N=1, d={d}) =", k0_by_terms(lambda t: 1 / mp.mpf(t + 1), thr(1, d)))
    for d in ("0.2", "0.1", "0.05", "0.02"):
        term = lambda t: min(mp.mpf(1), 3 / (t * (mp.log(t) + 1)))
        print(f"k0(log_harmonic(3), N=1, d={d}) =", k0_by_terms(term, thr(1, d)))
    mass = mp.zeta(2) - 1
    d = (1 - mp.mpf(1) / 4) ** (mass / (mp.mpf(1) / 4))
    print("power(2) total mass =", mass, " gap d =", d)
    print("power(2) partial sum T=10^4 =", mp.fsum(1 / mp.mpf(t + 1) ** 2 for t in range(1, 10**4 + 1)))


if __name__ == "__main__":
    main()
