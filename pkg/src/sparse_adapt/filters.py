"""
Sparse adaptive filters
=======================

Single-step update rules for the LMS, NLMS, LMF and NLMF gradient filters,
each optionally combined with an Lp-norm or an approximate L0-norm
zero-attracting penalty (twelve variants in total).

Every rule has the form::

    h(n+1) = h(n) + g(n) * x(n) - rho * penalty(h(n))

where the data gain ``g(n)`` depends on the base family and ``rho`` is the
step size times the regularization parameter.  The update functions are pure:
they never mutate their inputs.

The batched kernel :func:`update_batch` works on stacks of estimates (one row
per independent run) and is what the Monte-Carlo harness drives; :func:`step`
is the single-sample public entry point built on the same kernel.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    DegenerateRegressorError,
    DimensionError,
    DivergenceError,
    NonFiniteInputError,
    ParameterError,
)

__all__ = [
    "Family",
    "Penalty",
    "AlgorithmSpec",
    "FilterState",
    "StepRecord",
    "compute_error",
    "lp_penalty_term",
    "l0_penalty_term",
    "nlmf_step_size",
    "step",
    "update_batch",
    "parse_label",
    "flops_per_step",
]

# Largest float strictly below one; keeps the NLMF gain ratio < 1 even when
# e**2 swamps ||x||**2 in floating point.
_BELOW_ONE = np.nextafter(1.0, 0.0)


class Family(enum.Enum):
    LMS = "LMS"
    NLMS = "NLMS"
    LMF = "LMF"
    NLMF = "NLMF"

    @property
    def normalized(self):
        return self in (Family.NLMS, Family.NLMF)

    @property
    def fourth_order(self):
        return self in (Family.LMF, Family.NLMF)


class Penalty(enum.Enum):
    NONE = "none"
    LP = "LP"
    L0 = "L0"


@dataclass(frozen=True)
class AlgorithmSpec:
    """
    Choice of filter variant plus all of its hyperparameters.

    Parameters
    ----------
    base_family: Family
        LMS, NLMS, LMF or NLMF.
    penalty: Penalty
        No penalty, Lp-norm penalty or approximate L0-norm penalty.
    mu_s: float
        Step size of the LMS/NLMS families (default 0.5).
    mu_f: float
        Step size of the LMF/NLMF families, must lie in [0, 2) (default 1.5).
    lambda_reg: float
        Regularization weight of the penalty. The effective penalty weight
        ``rho`` is always derived as step size times ``lambda_reg``.
    p: float
        Exponent of the Lp penalty, in [0, 1) (default 0.5).
    eps_lp: float
        Denominator guard of the Lp penalty (default 0.05).
    beta: float
        Sharpness of the exponential L0 surrogate (default 5).
    paper_sign_l0: bool
        Subtract ``rho * J(h)`` literally instead of adding it. The literal
        sign pushes small taps away from zero; it exists for comparison only.
    """

    base_family: Family = Family.NLMS
    penalty: Penalty = Penalty.NONE
    mu_s: float = 0.5
    mu_f: float = 1.5
    lambda_reg: float = 0.0
    p: float = 0.5
    eps_lp: float = 0.05
    beta: float = 5.0
    paper_sign_l0: bool = False

    def __post_init__(self):
        object.__setattr__(self, "base_family", Family(self.base_family))
        object.__setattr__(self, "penalty", Penalty(self.penalty))
        checks = [
            ("mu_s", np.isfinite(self.mu_s) and self.mu_s >= 0, "must be >= 0"),
            ("mu_f", 0 <= self.mu_f < 2, "must lie in [0, 2)"),
            ("lambda_reg", np.isfinite(self.lambda_reg) and self.lambda_reg >= 0,
             "must be >= 0"),
            ("p", 0 <= self.p < 1, "must lie in [0, 1)"),
            ("eps_lp", np.isfinite(self.eps_lp) and self.eps_lp > 0, "must be > 0"),
            ("beta", np.isfinite(self.beta) and self.beta > 0, "must be > 0"),
        ]
        for name, ok, msg in checks:
            if not ok:
                raise ParameterError(name, f"{msg}, got {getattr(self, name)!r}")

    @property
    def step_size(self):
        """mu_s for the LMS/NLMS families, mu_f for LMF/NLMF."""
        return self.mu_f if self.base_family.fourth_order else self.mu_s

    @property
    def rho(self):
        return self.step_size * self.lambda_reg

    @property
    def label(self):
        if self.penalty is Penalty.NONE:
            return self.base_family.value
        return f"{self.penalty.value}-{self.base_family.value}"

    def with_(self, **changes):
        return replace(self, **changes)


@dataclass(frozen=True)
class FilterState:
    """Current estimate h(n) and the iteration counter n."""

    estimate: np.ndarray
    iteration: int = 0

    @classmethod
    def zeros(cls, length):
        return cls(np.zeros(length), 0)


@dataclass(frozen=True)
class StepRecord:
    """Diagnostics of one update: a-priori error and effective step size."""

    error: float
    effective_step: float


def _as_vector(v, name):
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise DimensionError(f"{name} must be one-dimensional, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise NonFiniteInputError(f"{name} contains non-finite entries")
    return v


def _check_pair(h, x):
    h = _as_vector(h, "estimate")
    x = _as_vector(x, "regressor")
    if h.shape != x.shape:
        raise DimensionError(
            f"regressor length {x.size} does not match estimate length {h.size}"
        )
    return h, x


def compute_error(state, x, y):
    """A-priori error ``e(n) = y - h(n)^T x(n)``."""
    h, x = _check_pair(state.estimate, x)
    if not np.isfinite(y):
        raise NonFiniteInputError("observation is not finite")
    return float(y - h @ x)


def _lp_term(h, p, eps_lp):
    # works on (..., M); rows of zeros give zeros
    mag = np.abs(h)
    if p == 0:
        norm_pow = np.count_nonzero(h, axis=-1).astype(float)
    else:
        norm_pow = np.sum(mag**p, axis=-1) ** ((1.0 - p) / p)
    return norm_pow[..., None] * np.sign(h) / (eps_lp + mag ** (1.0 - p))


def _l0_term(h, beta):
    inside = np.abs(h) <= 1.0 / beta
    return np.where(inside, 2.0 * beta**2 * h - 2.0 * beta * np.sign(h), 0.0)


def lp_penalty_term(h, p, eps_lp):
    """
    Gradient-like direction of the Lp-norm penalty.

    Returns ``||h||_p**(1-p) * sgn(h_i) / (eps_lp + |h_i|**(1-p))`` for every
    coordinate. With ``p = 0`` the count of nonzero taps stands in for
    ``||h||_0``.
    """
    h = _as_vector(h, "h")
    if not 0 <= p < 1:
        raise ParameterError("p", f"must lie in [0, 1), got {p!r}")
    if not eps_lp > 0:
        raise ParameterError("eps_lp", f"must be > 0, got {eps_lp!r}")
    return _lp_term(h, p, eps_lp)


def l0_penalty_term(h, beta):
    """
    Piecewise-linear derivative ``J(h)`` of the approximate L0 norm.

    ``J(h_i) = 2 beta**2 h_i - 2 beta sgn(h_i)`` on ``|h_i| <= 1/beta`` and 0
    elsewhere. Note that ``-J`` is the zero-attracting direction.
    """
    h = _as_vector(h, "h")
    if not beta > 0:
        raise ParameterError("beta", f"must be > 0, got {beta!r}")
    return _l0_term(h, beta)


def nlmf_step_size(error, energy, mu_f):
    """
    Variable NLMF step ``mu_f * e**2 / (||x||**2 + e**2)``.

    Vectorized over ``error`` and ``energy``. The result lies in
    ``[0, mu_f)``; it equals exactly ``mu_f / 2`` when ``e**2 == ||x||**2``.
    """
    e2 = np.square(error)
    with np.errstate(invalid="ignore"):
        ratio = e2 / (energy + e2)
    return mu_f * np.minimum(ratio, _BELOW_ONE)


def update_batch(h, x, y, spec):
    """
    Apply one update to a stack of independent estimates.

    Parameters
    ----------
    h: ndarray, shape (B, M)
        Current estimates, one per row.
    x: ndarray, shape (B, M)
        Regressors.
    y: ndarray, shape (B,)
        Observations.
    spec: AlgorithmSpec

    Returns
    -------
    new_h: ndarray (B, M)
    error: ndarray (B,)
    effective_step: ndarray (B,)

    Rows whose regressor energy is zero are left unchanged by the data term
    of the normalized families. No finiteness checks are made here.
    """
    fam = spec.base_family
    error = y - np.sum(h * x, axis=-1)
    if fam.normalized:
        energy = np.sum(x * x, axis=-1)
        usable = energy > 0
        safe_energy = np.where(usable, energy, 1.0)
    if fam is Family.LMS:
        eff = np.full_like(error, spec.mu_s)
        gain = spec.mu_s * error
    elif fam is Family.NLMS:
        eff = np.full_like(error, spec.mu_s)
        gain = np.where(usable, spec.mu_s * error / safe_energy, 0.0)
    elif fam is Family.LMF:
        e2 = error * error
        eff = spec.mu_f * e2
        gain = eff * error
    else:
        eff = nlmf_step_size(error, safe_energy, spec.mu_f)
        gain = np.where(usable, eff * error / safe_energy, 0.0)

    new_h = h + gain[:, None] * x
    rho = spec.rho
    if spec.penalty is Penalty.LP and rho != 0:
        new_h = new_h - rho * _lp_term(h, spec.p, spec.eps_lp)
    elif spec.penalty is Penalty.L0 and rho != 0:
        j = _l0_term(h, spec.beta)
        new_h = new_h - rho * j if spec.paper_sign_l0 else new_h + rho * j
    return new_h, error, eff


def step(state, spec, x, y):
    """
    Advance the filter by one training sample.

    Returns the new :class:`FilterState` and a :class:`StepRecord`.

    Raises
    ------
    DimensionError
        If ``x`` and the estimate differ in length.
    DegenerateRegressorError
        If ``x`` is all zeros and the family is normalized; callers are
        expected to skip such samples.
    DivergenceError
        If the new estimate contains a non-finite entry.
    """
    h, x = _check_pair(state.estimate, x)
    if not np.isfinite(y):
        raise NonFiniteInputError("observation is not finite")
    if spec.base_family.normalized and not x @ x > 0:
        raise DegenerateRegressorError("regressor has zero energy")
    with np.errstate(over="ignore", invalid="ignore"):
        new_h, error, eff = update_batch(h[None, :], x[None, :], np.array([y]), spec)
    nxt = state.iteration + 1
    if not np.all(np.isfinite(new_h)):
        raise DivergenceError(nxt)
    return (
        FilterState(new_h[0], nxt),
        StepRecord(float(error[0]), float(eff[0])),
    )


def parse_label(label, **params):
    """
    Build an :class:`AlgorithmSpec` from a label such as ``"L0-NLMF"``.

    >>> parse_label("LP-NLMS", lambda_reg=1e-3).penalty
    <Penalty.LP: 'LP'>
    """
    text = label.strip().upper()
    penalty = Penalty.NONE
    if "-" in text:
        head, text = text.split("-", 1)
        try:
            penalty = {"LP": Penalty.LP, "L0": Penalty.L0}[head]
        except KeyError:
            raise ParameterError("algorithm", f"unknown penalty in {label!r}") from None
    try:
        family = Family(text)
    except ValueError:
        raise ParameterError("algorithm", f"unknown family in {label!r}") from None
    return AlgorithmSpec(base_family=family, penalty=penalty, **params)


def flops_per_step(spec, m):
    """Rough count of floating-point operations for one update of length m.

    Only meant for comparing the relative cost of the variants.
    """
    ops = 2 * m + 2 * m  # error inner product, data update
    if spec.base_family.normalized:
        ops += 2 * m + 1
    if spec.base_family is Family.NLMF:
        ops += 4
    elif spec.base_family is Family.LMF:
        ops += 2
    if spec.penalty is Penalty.LP:
        ops += 6 * m
    elif spec.penalty is Penalty.L0:
        ops += 5 * m
    return ops
