"""Independent reference computations used to freeze and check expected values."""

import math
from fractions import Fraction

import numpy as np


def exact_tail(T, F, t, f) -> Fraction:
    """P(X >= f) for X ~ Hypergeometric(T, F, t) by exact enumeration."""
    num = sum(math.comb(F, k) * math.comb(T - F, t - k) for k in range(f, min(F, t) + 1))
    return Fraction(num, math.comb(T, t))


def exact_tails(T, F, t) -> list[float]:
    """All tails P(X >= f), f = 0..min(F, t), correctly rounded to float."""
    kmax = min(F, t)
    terms = [math.comb(F, k) * math.comb(T - F, t - k) for k in range(kmax + 1)]
    denom = math.comb(T, t)
    out, acc = [0.0] * (kmax + 1), 0
    for k in range(kmax, -1, -1):
        acc += terms[k]
        out[k] = float(Fraction(acc, denom))
    return out


def finite_difference_grads(loss_fn, params: list[np.ndarray], eps=1e-4):
    """Central differences of ``loss_fn()`` w.r.t. every entry of every array in ``params``."""
    grads = []
    for p in params:
        g = np.zeros_like(p)
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            i = it.multi_index
            old = p[i]
            p[i] = old + eps
            up = loss_fn()
            p[i] = old - eps
            down = loss_fn()
            p[i] = old
            g[i] = (up - down) / (2 * eps)
        grads.append(g)
    return grads


def brute_cosine(u, v) -> float:
    nu = math.sqrt(sum(x * x for x in u))
    nv = math.sqrt(sum(x * x for x in v))
    if nu == 0 or nv == 0:
        return 0.0
    return sum(a * b for a, b in zip(u, v)) / (nu * nv)


def brute_specificity(T, F, t, f) -> float:
    """-log10 of the exact tail, via high-precision logs of the rational value."""
    tail = exact_tail(T, F, t, f)
    return -(math.log10(tail.numerator) - math.log10(tail.denominator))
