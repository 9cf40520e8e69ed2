"""
Self-checks run by ``sparse-adapt validate``.

The update rules are re-derived here coordinate by coordinate in plain
Python, without touching the vectorized code in
:mod:`sparse_adapt.filters`, and compared against :func:`filters.step`.
"""
from __future__ import annotations

import tempfile
from pathlib import Path

import numpy as np

from .filters import AlgorithmSpec, Family, FilterState, Penalty, nlmf_step_size, step
from .harness import build_config, run_experiment
from .report import write_csv


def _sgn(v):
    return 1.0 if v > 0 else (-1.0 if v < 0 else 0.0)


def reference_update(h, x, y, spec):
    """Plain-Python transcription of all twelve update rules."""
    e = y - sum(a * b for a, b in zip(h, x))
    xx = sum(b * b for b in x)
    fam = spec.base_family
    if fam is Family.LMS:
        data = [spec.mu_s * e * b for b in x]
    elif fam is Family.NLMS:
        data = [spec.mu_s * e * b / xx for b in x]
    elif fam is Family.LMF:
        data = [spec.mu_f * e**3 * b for b in x]
    else:
        mu_n = spec.mu_f * e * e / (xx + e * e)
        data = [mu_n * e * b / xx for b in x]

    if spec.penalty is Penalty.LP:
        rho = spec.step_size * spec.lambda_reg
        p = spec.p
        if p == 0:
            norm_factor = float(sum(1 for a in h if a != 0))
        else:
            norm = sum(abs(a) ** p for a in h) ** (1 / p)
            norm_factor = norm ** (1 - p)
        pen = [rho * norm_factor * _sgn(a) / (spec.eps_lp + abs(a) ** (1 - p)) for a in h]
    elif spec.penalty is Penalty.L0:
        rho = spec.step_size * spec.lambda_reg
        b = spec.beta
        sign = 1.0 if spec.paper_sign_l0 else -1.0
        pen = [sign * rho * ((2 * b * b * a - 2 * b * _sgn(a)) if abs(a) <= 1 / b else 0.0)
               for a in h]
    else:
        pen = [0.0] * len(h)
    return [a + d - q for a, d, q in zip(h, data, pen)]


def random_spec(rng, family, penalty):
    return AlgorithmSpec(
        base_family=family,
        penalty=penalty,
        mu_s=float(rng.uniform(0.05, 1.0)),
        mu_f=float(rng.uniform(0.05, 1.95)),
        lambda_reg=float(rng.uniform(0.0, 0.05)),
        p=float(rng.choice([0.0, rng.uniform(0.05, 0.95)])),
        eps_lp=float(rng.uniform(0.01, 0.5)),
        beta=float(rng.uniform(0.5, 10.0)),
    )


def check_oracle(count=1000, seed=0):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for family in Family:
        for penalty in Penalty:
            for _ in range(count):
                m = int(rng.integers(1, 9))
                spec = random_spec(rng, family, penalty)
                h = rng.normal(0, 0.5, m)
                h[rng.random(m) < 0.3] = 0.0
                x = rng.normal(0, 1, m)
                y = float(rng.normal(0, 1))
                got, _ = step(FilterState(h), spec, x, y)
                want = np.array(reference_update(list(h), list(x), y, spec))
                scale = max(np.linalg.norm(want), 1e-300)
                worst = max(worst, np.linalg.norm(got.estimate - want) / scale)
    return worst <= 1e-12, f"max relative error {worst:.2e}"


def check_scale_invariance(seed=0):
    rng = np.random.default_rng(seed)
    h = rng.normal(0, 0.3, 8)
    x = rng.normal(0, 1, 8)
    y = float(rng.normal())
    worst_norm, worst_lms = 0.0, 0.0
    for c in (0.01, 1.0, 100.0):
        for fam in (Family.NLMS, Family.NLMF):
            spec = AlgorithmSpec(base_family=fam)
            a, _ = step(FilterState(h), spec, x, y)
            b, _ = step(FilterState(h), spec, c * x, c * y)
            d = np.linalg.norm((b.estimate - h) - (a.estimate - h))
            worst_norm = max(worst_norm, d / np.linalg.norm(a.estimate - h))
        # zero start: the output is the increment, free of rounding against h
        spec = AlgorithmSpec(base_family=Family.LMS)
        zero = FilterState(np.zeros_like(h))
        da, _ = step(zero, spec, x, y)
        db, _ = step(zero, spec, c * x, c * y)
        da, db = da.estimate, db.estimate
        worst_lms = max(worst_lms, np.linalg.norm(db - c * c * da) / np.linalg.norm(c * c * da))
    ok = worst_norm <= 1e-12 and worst_lms <= 1e-10
    return ok, f"normalized {worst_norm:.2e}, LMS c^2 scaling {worst_lms:.2e}"


def check_nlmf_bound(count=10**6, seed=0):
    rng = np.random.default_rng(seed)
    e = rng.normal(0, 1, count) * 10.0 ** rng.uniform(-3, 3, count)
    energy = rng.uniform(1e-3, 100, count)
    mu = nlmf_step_size(e, energy, 1.5)
    half = nlmf_step_size(e, e * e, 1.5)
    ok = bool(np.all((mu >= 0) & (mu < 1.5))) and bool(np.all(half == 0.75))
    return ok, f"range [{mu.min():.3g}, {mu.max():.17g}]"


def check_zero_attraction(count=10**4, seed=0):
    rng = np.random.default_rng(seed)
    beta = 5.0
    h = rng.uniform(1e-3, 1 / beta, count) * rng.choice([-1.0, 1.0], count)
    spec = AlgorithmSpec(base_family=Family.LMS, penalty=Penalty.L0, mu_s=1.0,
                         lambda_reg=1e-5, beta=beta)
    x = np.zeros(count)
    attracted, _ = step(FilterState(h), spec, x, 0.0)
    repelled, _ = step(FilterState(h), spec.with_(paper_sign_l0=True), x, 0.0)
    ok = bool(np.all(np.abs(attracted.estimate) < np.abs(h))) and bool(
        np.all(np.abs(repelled.estimate) > np.abs(h)))
    return ok, "corrected sign attracts, literal sign repels"


def check_determinism():
    cfg = build_config(trials=6, iterations=200, t_dominant=1)
    with tempfile.TemporaryDirectory() as d:
        paths = []
        for i, workers in enumerate((1, 3)):
            p = Path(d) / f"{i}.csv"
            write_csv(run_experiment(cfg, workers=workers), p)
            paths.append(p.read_bytes())
    return paths[0] == paths[1], "1 vs 3 workers"


CHECKS = [
    ("single-step oracle equivalence", check_oracle),
    ("joint-scale invariance", check_scale_invariance),
    ("NLMF step bound", check_nlmf_bound),
    ("L0 zero attraction", check_zero_attraction),
    ("parallel determinism", check_determinism),
]


def run_all(echo=print):
    all_ok = True
    for name, fn in CHECKS:
        ok, detail = fn()
        all_ok &= ok
        echo(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return all_ok
