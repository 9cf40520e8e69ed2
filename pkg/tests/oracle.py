"""Reference transcriptions of the update rules, one function per rule.

Written with explicit per-coordinate loops over Python floats so they share
nothing with the vectorized package code.
"""
import math


def sgn(v):
    if v > 0:
        return 1.0
    if v < 0:
        return -1.0
    return 0.0


def dot(a, b):
    return math.fsum(ai * bi for ai, bi in zip(a, b))


def lp_direction(h, p, eps):
    if p == 0:
        scale = float(sum(1 for v in h if v != 0.0))
    else:
        norm = math.fsum(abs(v) ** p for v in h) ** (1.0 / p)
        scale = norm ** (1.0 - p)
    return [scale * sgn(v) / (eps + abs(v) ** (1.0 - p)) for v in h]


def j_function(h, beta):
    out = []
    for v in h:
        if abs(v) <= 1.0 / beta:
            out.append(2.0 * beta * beta * v - 2.0 * beta * sgn(v))
        else:
            out.append(0.0)
    return out


def lms_data(h, x, y, mu):
    # h + mu e x
    e = y - dot(h, x)
    return [mu * e * xi for xi in x]


def nlms_data(h, x, y, mu):
    # h + mu e x / ||x||^2
    e = y - dot(h, x)
    xx = dot(x, x)
    return [mu * e * xi / xx for xi in x]


def lmf_data(h, x, y, mu):
    # h + mu e^3 x
    e = y - dot(h, x)
    return [mu * e * e * e * xi for xi in x]


def nlmf_data(h, x, y, mu):
    # h + mu e^3 x / (||x||^2 (||x||^2 + e^2))
    e = y - dot(h, x)
    xx = dot(x, x)
    return [mu * e ** 3 * xi / (xx * (xx + e * e)) for xi in x]


DATA_TERMS = {"LMS": lms_data, "NLMS": nlms_data, "LMF": lmf_data, "NLMF": nlmf_data}


def update(h, x, y, family, penalty, mu_s, mu_f, lam, p=0.5, eps=0.05, beta=5.0,
           literal_l0_sign=False):
    """One update of any of the twelve variants; returns the new estimate."""
    mu = mu_f if family in ("LMF", "NLMF") else mu_s
    data = DATA_TERMS[family](h, x, y, mu)
    rho = mu * lam
    if penalty == "LP":
        pen = [rho * d for d in lp_direction(h, p, eps)]
    elif penalty == "L0":
        j = j_function(h, beta)
        # attracting form subtracts rho*(-J); literal form subtracts rho*J
        pen = [rho * v for v in j] if literal_l0_sign else [-rho * v for v in j]
    else:
        pen = [0.0] * len(h)
    return [hi + di - pi for hi, di, pi in zip(h, data, pen)]
