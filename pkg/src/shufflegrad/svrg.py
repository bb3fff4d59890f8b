"""Variance-reduced stochastic gradient descent (SVRG-style epochs).

An epoch anchored at snapshot ws starts from w = ws, computes the full
gradient anchor  n = grad F(ws)  once, then performs ``epoch_len`` inner
steps

    w <- w - eta * (grad f_i(w) - grad f_i(ws) + n)

drawing i from the configured sampler.  The next snapshot is the average
of the epoch's iterates w_1..w_T (w_1 = ws; the post-step iterate w_{T+1}
is excluded), or one of them drawn uniformly at random.  The domain is
unconstrained; no projection is applied.

The default sampling discipline is a single shuffle for the whole run,
which requires epoch_len * n_epochs <= m: every inner step consumes a
fresh data point, never revisiting one.

A runtime safety bound guards against divergence: with probability one
over the shuffle, the log suboptimality of any iterate stays below
``log_suboptimality_bound``; a run aborts if an iterate crosses it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DivergenceError, InvalidParameter
from .rng import Rng
from .sampling import SINGLE_SHUFFLE, SAMPLER_KINDS, make_sampler

AUX_STREAM_BIT = 1 << 63  # auxiliary draws live on the high-bit stream lane
RATIO_FLOOR = 1e-14

AVERAGE = "average"
RANDOM_ITERATE = "random_iterate"


@dataclass(frozen=True)
class SVRGConfig:
    step_size: float
    epoch_len: int
    n_epochs: int
    epoch_output: str = AVERAGE
    sampler: str = SINGLE_SHUFFLE
    seed: int = 0
    stream: int = 0

    def __post_init__(self):
        if self.step_size <= 0:
            raise InvalidParameter("step_size must be positive")
        if self.epoch_len < 1 or self.n_epochs < 1:
            raise InvalidParameter("epoch_len and n_epochs must be >= 1")
        if self.epoch_output not in (AVERAGE, RANDOM_ITERATE):
            raise InvalidParameter("epoch_output must be 'average' or 'random_iterate'")
        if self.sampler not in SAMPLER_KINDS:
            raise InvalidParameter(f"sampler must be one of {SAMPLER_KINDS}")


@dataclass
class EpochTrace:
    """Per-epoch record; entry s describes epoch s+1 (0-based arrays)."""

    suboptimality: np.ndarray  # F(snapshot after the epoch) - F*
    max_suboptimality: np.ndarray  # worst iterate seen inside the epoch
    stochastic_grad_evals: np.ndarray  # epoch_len per epoch
    full_grad_point_evals: np.ndarray  # m per epoch (one anchor gradient)
    initial_suboptimality: float
    final_snapshot: np.ndarray

    @property
    def n_epochs(self) -> int:
        return self.suboptimality.size


def log_suboptimality_bound(epoch_len: int, n_epochs: int, strong_convexity: float) -> float:
    """Probability-one cap on log(F(w_t) - F*) for any iterate of a run.

    Equals 2 * n_epochs * ln(5 * epoch_len) + ln(4 / strong_convexity);
    valid for the regularized squared loss on normalized data with
    strong convexity in (0, 1).  Monotone increasing in both epoch
    counts and decreasing in the strong convexity.
    """
    if epoch_len < 1 or n_epochs < 1:
        raise InvalidParameter("epoch_len and n_epochs must be >= 1")
    if not 0.0 < strong_convexity < 1.0:
        raise InvalidParameter("strong_convexity must lie in (0, 1)")
    return 2.0 * n_epochs * math.log(5.0 * epoch_len) + math.log(4.0 / strong_convexity)


def _run_epoch(problem, w_start, anchor_grad, indices, eta, epoch_output, pick, guard):
    """Shared inner loop for the single-machine and distributed drivers.

    Returns (next_snapshot, max_suboptimality_seen).  ``pick`` is the
    pre-drawn iterate index used when epoch_output is random_iterate.
    ``guard`` is the suboptimality abort threshold (may be inf).
    """
    X, y = problem.data.X, problem.data.y
    alpha = problem.alpha
    snapshot_pred = X @ w_start

    w = w_start.copy()
    accum = np.zeros_like(w)
    chosen = None
    max_sub = 0.0
    T = len(indices)
    for j in range(T):
        sub = problem.suboptimality(w)
        if not math.isfinite(sub) or sub > guard:
            raise DivergenceError(
                f"suboptimality {sub:.3g} crossed the safety bound at inner step "
                f"{j + 1}; try a smaller step size"
            )
        if sub > max_sub:
            max_sub = sub
        accum += w
        if pick is not None and j == pick:
            chosen = w.copy()

        i = indices[j]
        xi = X[i]
        grad_now = (xi @ w - y[i]) * xi + alpha * w
        grad_ref = (snapshot_pred[i] - y[i]) * xi + alpha * w_start
        w = w - eta * (grad_now - grad_ref + anchor_grad)

    # The post-step iterate is produced and immediately replaced by the
    # next snapshot; it still counts toward the in-epoch maximum.
    sub = problem.suboptimality(w)
    if not math.isfinite(sub) or sub > guard:
        raise DivergenceError(
            "suboptimality crossed the safety bound at the epoch boundary; "
            "try a smaller step size"
        )
    if sub > max_sub:
        max_sub = sub

    if epoch_output == AVERAGE:
        return accum / T, max_sub
    return chosen, max_sub


def run_svrg(problem, config: SVRGConfig, sigma=None) -> EpochTrace:
    """Run ``n_epochs`` epochs on a ridge problem.

    ``sigma`` optionally fixes the inner-step index sequence (length at
    least epoch_len * n_epochs), bypassing the sampler.  The anchor
    gradient uses the package's fixed pairwise reduction so distributed
    runs can reproduce it bit for bit.
    """
    lam = problem.strong_convexity
    if lam <= 0:
        raise InvalidParameter("problem must be strongly convex (lambda > 0)")
    T, S = config.epoch_len, config.n_epochs
    m = problem.m
    if sigma is None and config.sampler == SINGLE_SHUFFLE and T * S > m:
        raise InvalidParameter(
            f"single-shuffle mode needs epoch_len * n_epochs <= m "
            f"({T} * {S} > {m})"
        )

    if sigma is not None:
        sigma = np.asarray(sigma, dtype=np.int64)
        if sigma.size < T * S:
            raise InvalidParameter(f"sigma provides {sigma.size} indices, need {T * S}")
        if sigma.size and (sigma.min() < 0 or sigma.max() >= m):
            raise InvalidParameter("sigma contains out-of-range indices")
        sampler = None
    else:
        sampler = make_sampler(
            config.sampler, m, Rng(config.seed, config.stream), epoch_len=min(T, m)
        )
    picker = (
        Rng(config.seed, config.stream ^ AUX_STREAM_BIT)
        if config.epoch_output == RANDOM_ITERATE
        else None
    )

    bound = log_suboptimality_bound(T, S, lam) if lam < 1.0 else None
    guard = math.exp(min(bound, 700.0)) if bound is not None else math.inf

    snapshot = np.zeros(problem.d)
    subopt = np.empty(S)
    max_sub = np.empty(S)
    initial = problem.suboptimality(snapshot)
    for s in range(S):
        anchor = problem.full_gradient(snapshot)
        if sigma is not None:
            indices = sigma[s * T : (s + 1) * T]
        else:
            indices = sampler.take(T)
        pick = int(picker.below(T)) if picker is not None else None
        snapshot, worst = _run_epoch(
            problem, snapshot, anchor, indices, config.step_size,
            config.epoch_output, pick, guard,
        )
        subopt[s] = problem.suboptimality(snapshot)
        max_sub[s] = worst

    return EpochTrace(
        suboptimality=subopt,
        max_suboptimality=max_sub,
        stochastic_grad_evals=np.full(S, T),
        full_grad_point_evals=np.full(S, m),
        initial_suboptimality=initial,
        final_snapshot=snapshot,
    )


def run_svrg_over_streams(problem, config: SVRGConfig, n_seeds: int, n_jobs: int = 1):
    """Traces for streams 0..n_seeds-1 of the config's seed, in stream
    order regardless of how many worker threads run them."""
    if n_seeds < 1:
        raise InvalidParameter("n_seeds must be >= 1")

    def one(k: int):
        return run_svrg(problem, replace(config, stream=k))

    if n_jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            return list(pool.map(one, range(n_seeds)))
    return [one(k) for k in range(n_seeds)]


@dataclass
class RecommendedParams:
    step_size: float
    epoch_len: int
    n_epochs: int
    m_required: int


def recommended_params(problem, epsilon: float, c: float = 10.0) -> RecommendedParams:
    """Parameter rule for geometric convergence to accuracy ``epsilon``.

    step_size = 1/c, epoch_len = ceil(9 / (step_size * lambda)),
    n_epochs = ceil(log4(9 / epsilon)), and the data-size requirement
    m >= 2 * n_epochs * epoch_len for a single-shuffle run.  Emits a
    warning when the problem is too small for that requirement.
    """
    if not 0.0 < epsilon < 1.0:
        raise InvalidParameter("epsilon must lie in (0, 1)")
    if c < 1.0:
        raise InvalidParameter("c must be >= 1")
    lam = problem.strong_convexity
    if lam <= 0:
        raise InvalidParameter("problem must be strongly convex (lambda > 0)")
    eta = 1.0 / c
    # Guard the ceilings against values that are exact up to rounding.
    epoch_len = math.ceil(9.0 / (eta * lam) - 1e-9)
    n_epochs = math.ceil(math.log(9.0 / epsilon) / math.log(4.0) - 1e-12)
    m_required = 2 * n_epochs * epoch_len
    if problem.m < m_required:
        import warnings

        warnings.warn(
            f"dataset has m={problem.m} points but the single-shuffle rule "
            f"needs m >= 2*S*T = {m_required}",
            stacklevel=2,
        )
    return RecommendedParams(
        step_size=eta, epoch_len=epoch_len, n_epochs=n_epochs, m_required=m_required
    )


def epoch_decrease_ratio(trace: EpochTrace, floor: float = RATIO_FLOOR) -> np.ndarray:
    """Per-epoch contraction factors subopt_{s+1} / max(subopt_s, floor).

    The first entry compares epoch 1 against the starting point.  The
    floor only guards the division when a trajectory reaches exact zero.
    """
    if trace.n_epochs < 2:
        raise InvalidParameter("need at least two epochs to form ratios")
    chain = np.concatenate([[trace.initial_suboptimality], trace.suboptimality])
    return chain[1:] / np.maximum(chain[:-1], floor)
