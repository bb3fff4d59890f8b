"""Simulated cluster run: equivalence to one machine plus comm accounting.

Partitions the data across four virtual machines, runs the distributed
driver, and replays the same schedule on a single machine through the
matched permutation.  The two trajectories agree to rounding, two
communication rounds happen per epoch, and the only payloads are
d-dimensional vectors: data points never move.
"""

import numpy as np

from shufflegrad import (
    GenSpec,
    RidgeProblem,
    Rng,
    SVRGConfig,
    comm_cost_report,
    generate,
    matched_permutation,
    partition,
    run_distributed_svrg,
    run_svrg,
)

data = generate(GenSpec(m=8000, d=10, spectrum="uniform", noise=0.1,
                        signal_norm=0.9, seed=13))
problem = RidgeProblem(data, alpha=0.1)
K, T, S = 4, 200, 8
config = SVRGConfig(step_size=0.1, epoch_len=T, n_epochs=S, seed=41)

shards = partition(problem.data, K, Rng(41, 5))
print(f"{K} machines, shard sizes: {[len(s.indices) for s in shards]}")
print(f"batches of {T} per machine: {[len(s.indices) // T for s in shards]}\n")

dist_trace, log = run_distributed_svrg(problem, K, config, shards=shards)
solo_trace = run_svrg(problem, config, sigma=matched_permutation(shards, T, S))

print("epoch   distributed      single machine   |difference|")
for s in range(S):
    a, b = dist_trace.suboptimality[s], solo_trace.suboptimality[s]
    print(f"{s + 1:>5}   {a:12.4e}    {b:12.4e}    {abs(a - b):.1e}")

traj = np.concatenate([[dist_trace.initial_suboptimality], dist_trace.suboptimality])
report = comm_cost_report(log, problem.d, suboptimality=traj)
print(f"\ncommunication rounds: {report.rounds} (2 per epoch)")
print(f"floats moved: {report.floats_moved} = 2 * k * d * S = {2 * K * problem.d * S}")
print(f"rounds per decade of accuracy: {report.rounds_per_decade:.2f}")
print(f"message kinds: {sorted(set(m.kind for m in log.messages))}; "
      f"every payload has {problem.d} floats")

# the degenerate one-machine cluster reproduces the solo driver bit for bit
shard1 = partition(problem.data, 1, Rng(42, 0))
one_trace, _ = run_distributed_svrg(problem, 1, config, shards=shard1)
replay = run_svrg(problem, config, sigma=matched_permutation(shard1, T, S))
print(f"\nk=1 snapshot bitwise equal to single machine: "
      f"{np.array_equal(one_trace.final_snapshot, replay.final_snapshot)}")
