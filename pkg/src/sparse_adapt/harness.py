"""
Monte-Carlo harness for average-MSE convergence experiments.

Every trial draws one channel and one training stream from a seed derived
from ``(master_seed, trial_index)``. All algorithms of an experiment see the
same channel and stream for a given trial index (paired comparison).

Trials are simulated in blocks with a vectorized kernel; blocks may run in
separate processes. Per-trial squared errors are reassembled in trial order
before averaging, so results do not depend on the number of workers.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channel import NoiseSpec, generate_channel, training_stream
from .errors import DivergenceError, ParameterError
from .filters import AlgorithmSpec, Family, Penalty, parse_label, update_batch

__all__ = [
    "TABLE1_COEFFICIENTS",
    "PAPER_ALGORITHMS",
    "ExperimentConfig",
    "MseTrajectory",
    "table1_lambda",
    "paper_algorithm",
    "build_config",
    "trial_seeds",
    "run_trial",
    "run_experiment",
    "terminal_mse",
    "terminal_mse_db",
]

# Regularization coefficients keyed by (uses mu_f, penalty). The LMS/LMF
# families borrow the coefficients of their normalized counterparts.
TABLE1_COEFFICIENTS = {
    (False, Penalty.LP): 2e-4,
    (True, Penalty.LP): 2e-6,
    (False, Penalty.L0): 2e-3,
    (True, Penalty.L0): 2e-5,
}

LOG_FUNCTIONS = {"e": np.log, "10": np.log10, "2": np.log2}

PAPER_ALGORITHMS = ("NLMS", "LP-NLMS", "L0-NLMS", "NLMF", "LP-NLMF", "L0-NLMF")


def table1_lambda(family, penalty, sigma_n2, n, t_dominant, log_base="e",
                  coefficients=None):
    """
    Regularization weight ``c * sigma_n2 * log(N / T)``.

    ``c`` comes from ``coefficients`` (default :data:`TABLE1_COEFFICIENTS`);
    the penalty-free variants get 0.

    >>> round(table1_lambda(Family.NLMS, Penalty.LP, 1.0, 16, 1), 10)
    0.0005545177
    """
    family, penalty = Family(family), Penalty(penalty)
    if not t_dominant >= 1:
        raise ParameterError("t_dominant", f"must be >= 1, got {t_dominant!r}")
    if not n > t_dominant:
        raise ParameterError("n", f"must exceed t_dominant ({n} <= {t_dominant})")
    if not sigma_n2 > 0:
        raise ParameterError("sigma_n2", f"must be > 0, got {sigma_n2!r}")
    if penalty is Penalty.NONE:
        return 0.0
    table = TABLE1_COEFFICIENTS if coefficients is None else coefficients
    try:
        log = LOG_FUNCTIONS[str(log_base)]
    except KeyError:
        raise ParameterError("log_base", f"must be one of e, 10, 2; got {log_base!r}") from None
    c = table[(family.fourth_order, penalty)]
    return float(c * sigma_n2 * log(n / t_dominant))


@dataclass(frozen=True)
class ExperimentConfig:
    """Dimensions, noise level, Monte-Carlo sizes and the algorithms to compare."""

    n: int = 16
    n_t: int = 2
    t_dominant: int = 3
    snr_db: float = 3.0
    trials: int = 200
    iterations: int = 2000
    algorithms: tuple = ()
    master_seed: int = 1
    e0: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        for name, lo in (("n", 1), ("n_t", 1), ("t_dominant", 1),
                         ("trials", 1), ("iterations", 1)):
            v = getattr(self, name)
            if int(v) != v or v < lo:
                raise ParameterError(name, f"must be an integer >= {lo}, got {v!r}")
        if self.t_dominant > self.n:
            raise ParameterError("t_dominant", f"must not exceed n={self.n}")
        if not math.isfinite(self.snr_db):
            raise ParameterError("snr_db", "must be finite")
        if self.master_seed < 0:
            raise ParameterError("master_seed", "must be >= 0")
        labels = [a.label for a in self.algorithms]
        if len(set(labels)) != len(labels):
            raise ParameterError("algorithms", f"duplicate labels in {labels}")

    @property
    def noise(self):
        return NoiseSpec(self.snr_db, self.e0)

    @property
    def sigma_n2(self):
        return self.noise.sigma_n2

    @property
    def m(self):
        return self.n * self.n_t


@dataclass
class MseTrajectory:
    """Average squared error per iteration for one algorithm."""

    algorithm_label: str
    per_iteration_mse: np.ndarray
    diverged_trials: int = 0
    trials: int = 0
    per_trial: np.ndarray | None = field(default=None, repr=False)

    @property
    def per_iteration_mse_db(self):
        return 10.0 * np.log10(self.per_iteration_mse)

    @property
    def all_diverged(self):
        return self.per_iteration_mse.size == 0


def paper_algorithm(label, config, log_base="e", **params):
    """AlgorithmSpec for ``label`` with lambda taken from the default lambda schedule (:func:`table1_lambda`)."""
    spec = parse_label(label, **params)
    if "lambda_reg" not in params and spec.penalty is not Penalty.NONE:
        lam = table1_lambda(spec.base_family, spec.penalty, config.sigma_n2,
                            config.n, config.t_dominant, log_base)
        spec = spec.with_(lambda_reg=lam)
    return spec


def build_config(algos=PAPER_ALGORITHMS, log_base="e", algo_params=None, **kw):
    """
    ExperimentConfig with algorithms resolved from labels.

    ``algo_params`` maps a label to extra AlgorithmSpec keyword arguments;
    any missing ``lambda_reg`` is filled from the default lambda schedule (:func:`table1_lambda`).
    """
    base = ExperimentConfig(**kw)
    algo_params = algo_params or {}
    specs = []
    for a in algos:
        if isinstance(a, AlgorithmSpec):
            specs.append(a)
        else:
            specs.append(paper_algorithm(a, base, log_base, **algo_params.get(a, {})))
    return ExperimentConfig(**{**kw, "algorithms": tuple(specs)})


def trial_seeds(master_seed, trial_index):
    """
    Seeds for one trial's channel and training stream.

    The trial's seed sequence is ``SeedSequence(master_seed,
    spawn_key=(trial_index,))``, so trial ``k`` is unaffected by the total
    number of trials.
    """
    ss = np.random.SeedSequence(master_seed, spawn_key=(trial_index,))
    return ss.spawn(2)


def _trial_data(config, trial_index):
    channel_seed, stream_seed = trial_seeds(config.master_seed, trial_index)
    channel = generate_channel(config.n, config.n_t, config.t_dominant, channel_seed)
    stream = training_stream(channel, config.noise, config.iterations, stream_seed)
    return channel, stream


def _simulate_block(config, specs, trial_indices):
    """
    Run every spec on the given trials.

    Returns a list (one per spec) of ``(sq_err, diverged_at)`` where ``sq_err``
    has shape (B, iterations) with NaN rows for diverged trials and
    ``diverged_at`` holds the divergence iteration (0 if none).
    """
    data = [_trial_data(config, k) for k in trial_indices]
    h_true = np.stack([c.stacked for c, _ in data])
    padded = np.stack([s.padded_symbols for _, s in data])
    obs = np.stack([s.observations for _, s in data])
    b, n, iters = len(trial_indices), config.n, config.iterations

    estimates = [np.zeros((b, config.m)) for _ in specs]
    sq_err = [np.empty((b, iters)) for _ in specs]
    diverged_at = [np.zeros(b, dtype=int) for _ in specs]

    with np.errstate(all="ignore"):
        for k in range(iters):
            x = padded[:, :, k : k + n][:, :, ::-1].reshape(b, -1)
            y = obs[:, k]
            for j, spec in enumerate(specs):
                new, _, _ = update_batch(estimates[j], x, y, spec)
                bad = ~np.all(np.isfinite(new), axis=1)
                dead = diverged_at[j] > 0
                fresh = bad & ~dead
                if fresh.any():
                    diverged_at[j][fresh] = k + 1
                    dead = dead | fresh
                if dead.any():
                    new[dead] = 0.0
                estimates[j] = new
                d = h_true - new
                sq_err[j][:, k] = np.sum(d * d, axis=1)
    out = []
    for j in range(len(specs)):
        e = sq_err[j]
        e[diverged_at[j] > 0] = np.nan
        out.append((e, diverged_at[j]))
    return out


def run_trial(config, spec, trial_index):
    """
    Squared error ``||h - h(n)||^2`` after each step of one trial.

    Raises
    ------
    DivergenceError
        If the estimate becomes non-finite; carries the iteration index.
    """
    [(err, div)] = _simulate_block(config, [spec], [trial_index])
    if div[0]:
        raise DivergenceError(int(div[0]))
    return err[0]


def _block_job(args):
    config, lo, hi = args
    return _simulate_block(config, config.algorithms, range(lo, hi))


def _blocks(trials, workers, block_size):
    size = block_size or max(1, math.ceil(trials / max(1, workers)))
    return [(lo, min(lo + size, trials)) for lo in range(0, trials, size)]


def run_experiment(config, workers=1, block_size=None, keep_trials=False):
    """
    Average MSE trajectories over ``config.trials`` Monte-Carlo trials.

    Parameters
    ----------
    config: ExperimentConfig
        Must list at least one algorithm.
    workers: int
        Number of worker processes; 1 runs in-process.
    block_size: int, optional
        Trials per vectorized block (defaults to an even split over workers).
    keep_trials: bool
        Attach the per-trial squared-error matrix to each trajectory.

    Returns
    -------
    list of MseTrajectory, in the order of ``config.algorithms``.
    Diverged trials are excluded from the average and counted; an algorithm
    whose trials all diverged gets an empty MSE vector.
    """
    if not config.algorithms:
        raise ParameterError("algorithms", "at least one algorithm is required")
    if workers < 1:
        raise ParameterError("workers", f"must be >= 1, got {workers!r}")
    jobs = [(config, lo, hi) for lo, hi in _blocks(config.trials, workers, block_size)]
    if workers == 1 or len(jobs) == 1:
        results = [_block_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_block_job, jobs))

    trajectories = []
    for j, spec in enumerate(config.algorithms):
        err = np.concatenate([r[j][0] for r in results], axis=0)
        div = np.concatenate([r[j][1] for r in results])
        ok = div == 0
        mse = err[ok].mean(axis=0) if ok.any() else np.empty(0)
        trajectories.append(MseTrajectory(
            algorithm_label=spec.label,
            per_iteration_mse=mse,
            diverged_trials=int((~ok).sum()),
            trials=config.trials,
            per_trial=err if keep_trials else None,
        ))
    return trajectories


def terminal_mse(values, fraction=0.1):
    """Mean of the last ``fraction`` of a linear MSE trajectory."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return math.nan
    k = max(1, int(round(values.size * fraction)))
    return float(values[-k:].mean())


def terminal_mse_db(values, fraction=0.1):
    return 10.0 * math.log10(terminal_mse(values, fraction))
