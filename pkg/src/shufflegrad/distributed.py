"""Simulated multi-machine variance-reduced descent with communication accounting.

The cluster is simulated in one process: machines hold disjoint shards of
a randomly permuted dataset, each epoch one machine advances through its
current batch of inner steps, and the two per-epoch communication rounds
(a reduce that assembles the anchor gradient, a broadcast that
distributes the new snapshot) are recorded as explicit messages.  Only
d-float vectors ever travel; data points stay put.

Message schema (version 1): ``round_id`` (1-based), ``sender`` (machine
id), ``kind`` ("reduce" or "broadcast"), ``payload`` (d 64-bit floats).
A broadcast round is modeled as one delivery per machine in the cluster,
so every round moves exactly n_machines * d floats.

Equivalence contract: with one machine the simulation reproduces the
single-machine driver bit for bit (the reduce of a lone shard is the
same pairwise mean over ascending indices as the full gradient).  With
several machines the inner steps are bitwise identical given the same
snapshot and anchor; only the anchor's reduce tree differs, so per-epoch
suboptimalities agree to rounding (tested at 1e-12).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import BatchesExhausted, InvalidParameter
from .problem import Dataset, pairwise_sum
from .rng import Rng
from .sampling import SINGLE_SHUFFLE, shuffle
from .svrg import AUX_STREAM_BIT, RANDOM_ITERATE, EpochTrace, SVRGConfig, _run_epoch, log_suboptimality_bound

SCHEMA_VERSION = 1

REDUCE = "reduce"
BROADCAST = "broadcast"


@dataclass(frozen=True)
class Shard:
    """One machine's slice of the permuted data."""

    machine: int
    indices: np.ndarray

    def batches(self, epoch_len: int) -> list[np.ndarray]:
        """Consecutive full batches of ``epoch_len`` local indices.

        A trailing remainder shorter than a batch is never used for
        inner steps (it still contributes to every anchor gradient,
        which ranges over the entire dataset).
        """
        n_full = len(self.indices) // epoch_len
        return [
            self.indices[b * epoch_len : (b + 1) * epoch_len] for b in range(n_full)
        ]


@dataclass(frozen=True)
class Message:
    round_id: int
    sender: int
    kind: str
    payload: np.ndarray


@dataclass
class CommLog:
    rounds: int = 0
    messages: list[Message] = field(default_factory=list)
    epoch_rounds: list[tuple[int, int]] = field(default_factory=list)
    schema_version: int = SCHEMA_VERSION

    @property
    def payload_floats(self) -> int:
        return int(sum(msg.payload.size for msg in self.messages))

    def _record_round(self, kind: str, senders_and_payloads) -> int:
        self.rounds += 1
        rid = self.rounds
        for sender, payload in senders_and_payloads:
            self.messages.append(
                Message(round_id=rid, sender=sender, kind=kind, payload=np.array(payload))
            )
        return rid


def partition(dataset: Dataset, n_machines: int, rng: Rng) -> list[Shard]:
    """Randomly split point indices into ``n_machines`` balanced shards.

    A uniform permutation is dealt into contiguous blocks whose sizes
    differ by at most one; block j becomes machine j's shard.
    """
    m = dataset.m
    if n_machines < 1:
        raise InvalidParameter("need at least one machine")
    if n_machines > m:
        raise InvalidParameter(f"cannot split {m} points across {n_machines} machines")
    order = shuffle(m, rng)
    base, extra = divmod(m, n_machines)
    shards = []
    start = 0
    for j in range(n_machines):
        size = base + (1 if j < extra else 0)
        shards.append(Shard(machine=j, indices=order[start : start + size]))
        start += size
    return shards


def batch_schedule(shards: list[Shard], epoch_len: int, n_epochs: int) -> list[np.ndarray]:
    """The batch consumed at each epoch: machines in id order, each
    machine's batches in local order.  Raises when the cluster holds too
    few batches to finish."""
    per_machine = [shard.batches(epoch_len) for shard in shards]
    flat = [batch for batches in per_machine for batch in batches]
    if len(flat) < n_epochs:
        raise BatchesExhausted(
            f"cluster holds {len(flat)} batches of size {epoch_len} but the run "
            f"needs {n_epochs}; the total batch count must be at least the "
            f"epoch count"
        )
    return flat[:n_epochs]


def matched_permutation(shards: list[Shard], epoch_len: int, n_epochs: int) -> np.ndarray:
    """Single-machine index order that replays a distributed run exactly:
    the consumed batches in consumption order, then everything else."""
    schedule = batch_schedule(shards, epoch_len, n_epochs)
    consumed = np.concatenate(schedule) if schedule else np.empty(0, dtype=np.int64)
    m = sum(len(s.indices) for s in shards)
    rest_mask = np.ones(m, dtype=bool)
    rest_mask[consumed] = False
    return np.concatenate([consumed, np.flatnonzero(rest_mask)])


def run_distributed_svrg(
    problem,
    n_machines: int,
    config: SVRGConfig,
    shards: list[Shard] | None = None,
    threaded: bool = False,
):
    """Simulate the distributed driver; returns (EpochTrace, CommLog).

    ``shards`` defaults to a fresh random partition drawn on the config's
    auxiliary stream lane.  ``threaded=True`` computes machine-local
    gradient means concurrently; they are still combined in machine-id
    order, so results are identical to the sequential mode.
    """
    if config.sampler != SINGLE_SHUFFLE:
        raise InvalidParameter(
            "the distributed driver realizes single-shuffle sampling; "
            f"got config.sampler={config.sampler!r}"
        )
    lam = problem.strong_convexity
    if lam <= 0:
        raise InvalidParameter("problem must be strongly convex (lambda > 0)")
    if shards is None:
        shards = partition(
            problem.data, n_machines, Rng(config.seed, config.stream ^ AUX_STREAM_BIT)
        )
    if len(shards) != n_machines:
        raise InvalidParameter(f"expected {n_machines} shards, got {len(shards)}")

    m, d = problem.m, problem.d
    T, S = config.epoch_len, config.n_epochs
    schedule = batch_schedule(shards, T, S)
    sorted_locals = [np.sort(shard.indices) for shard in shards]
    weights = np.array([len(shard.indices) / m for shard in shards])

    picker = (
        Rng(config.seed, (config.stream ^ AUX_STREAM_BIT) + 1)
        if config.epoch_output == RANDOM_ITERATE
        else None
    )
    bound = log_suboptimality_bound(T, S, lam) if lam < 1.0 else None
    guard = float(np.exp(min(bound, 700.0))) if bound is not None else np.inf

    log = CommLog()
    snapshot = np.zeros(d)
    subopt = np.empty(S)
    max_sub = np.empty(S)
    initial = problem.suboptimality(snapshot)

    def local_mean(j: int) -> np.ndarray:
        return problem.point_gradient_mean(snapshot, sorted_locals[j])

    for s in range(S):
        if threaded:
            with ThreadPoolExecutor(max_workers=n_machines) as pool:
                means = list(pool.map(local_mean, range(n_machines)))
        else:
            means = [local_mean(j) for j in range(n_machines)]
        reduce_rid = log._record_round(REDUCE, [(j, means[j]) for j in range(n_machines)])
        anchor = pairwise_sum(np.stack([weights[j] * means[j] for j in range(n_machines)]))

        batch = schedule[s]
        active = _owner_of_batch(shards, T, s)
        pick = int(picker.below(T)) if picker is not None else None
        snapshot, worst = _run_epoch(
            problem, snapshot, anchor, batch, config.step_size,
            config.epoch_output, pick, guard,
        )
        bcast_rid = log._record_round(
            BROADCAST, [(active, snapshot) for _ in range(n_machines)]
        )
        log.epoch_rounds.append((reduce_rid, bcast_rid))
        subopt[s] = problem.suboptimality(snapshot)
        max_sub[s] = worst

    trace = EpochTrace(
        suboptimality=subopt,
        max_suboptimality=max_sub,
        stochastic_grad_evals=np.full(S, T),
        full_grad_point_evals=np.full(S, m),
        initial_suboptimality=initial,
        final_snapshot=snapshot,
    )
    return trace, log


def _owner_of_batch(shards: list[Shard], epoch_len: int, epoch: int) -> int:
    """Machine id whose batch is consumed at the given (0-based) epoch."""
    remaining = epoch
    for shard in shards:
        n_batches = len(shard.indices) // epoch_len
        if remaining < n_batches:
            return shard.machine
        remaining -= n_batches
    raise BatchesExhausted("epoch index beyond the cluster's batch supply")


@dataclass
class CommReport:
    rounds: int
    floats_moved: int
    rounds_per_decade: float | None


def comm_cost_report(comm_log: CommLog, dim: int, suboptimality=None) -> CommReport:
    """Totals for a finished run.

    Every message must carry exactly ``dim`` floats.  When the per-epoch
    suboptimality trajectory is supplied, the report includes rounds per
    decade of accuracy gained (None when no decade was gained or the
    trajectory is too short).
    """
    for msg in comm_log.messages:
        if msg.payload.size != dim:
            raise InvalidParameter(
                f"message in round {msg.round_id} carries {msg.payload.size} floats, "
                f"expected {dim}"
            )
    floats = comm_log.payload_floats
    rpd = None
    if suboptimality is not None:
        traj = np.asarray(suboptimality, dtype=np.float64)
        if traj.size >= 2 and traj[0] > 0 and traj[-1] > 0:
            decades = np.log10(traj[0] / traj[-1])
            if decades > 0:
                rpd = float(comm_log.rounds / decades)
    return CommReport(rounds=comm_log.rounds, floats_moved=floats, rounds_per_decade=rpd)
