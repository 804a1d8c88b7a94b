import time

import numpy as np

from causalforge.dataset import CorpusBuilder
from causalforge.discovery import IndependenceOracle, pc
from causalforge.graphs import canonical_key, enumerate_dags
from causalforge.independence import ci_signature, d_separated, d_separated_by_paths


def measure(fn, *args, **kwargs):
    start = time.perf_counter()
    result = fn(*args, **kwargs)
    return time.perf_counter() - start, result


def run__enumeration(n_max=6):
    """Times DAG enumeration, class grouping and corpus building per node count."""
    print()
    print("---  Running enumeration() ---")
    builder = CorpusBuilder(max_nodes=n_max)
    for n in range(2, n_max + 1):
        t_enum, dags = measure(enumerate_dags, n, max_nodes=n_max)
        t_group, mecs = measure(builder.mecs, n)
        t_build, records = measure(builder.build, n, n)
        print(
            f"n = {n}: {len(dags)} DAGs in {t_enum:.3g} s, {len(mecs)} classes in {t_group:.3g} s, "
            f"{len(records)} records in {t_build:.3g} s"
        )
    print(f"build_stats: {builder.build_stats}")


def run__canonical_key(n=6, repeat=2000, seed=42):
    print()
    print("---  Running canonical_key() ---")
    rng = np.random.RandomState(seed)
    dags = enumerate_dags(n)
    picked = [dags[k].relabel(rng.permutation(n).tolist()) for k in rng.randint(0, len(dags), repeat)]
    duration, _ = measure(lambda: [canonical_key(g) for g in picked])
    print(f"{repeat} keys on {n} nodes: {1e6 * duration / repeat:.3g} us per key")


def run__d_separation(n=6, repeat=5000, seed=42):
    """Compares the reachability decider with the path-enumeration decider."""
    print()
    print("---  Running d_separation() ---")
    rng = np.random.RandomState(seed)
    dags = enumerate_dags(n)
    queries = []
    for _ in range(repeat):
        g = dags[rng.randint(len(dags))]
        i, j = rng.choice(n, 2, replace=False).tolist()
        z = [v for v in range(n) if v not in (i, j) and rng.random_sample() < 0.5]
        queries.append((g, i, j, z))
    t_fast, _ = measure(lambda: [d_separated(*q) for q in queries])
    t_paths, _ = measure(lambda: [d_separated_by_paths(*q) for q in queries])
    print(f"reachability: {1e6 * t_fast / repeat:.3g} us per query")
    print(f"path enumeration: {1e6 * t_paths / repeat:.3g} us per query")


def run__pc(n=6, repeat=200, seed=42):
    print()
    print("---  Running pc() ---")
    rng = np.random.RandomState(seed)
    dags = enumerate_dags(n)
    queries = []
    durations = []
    for _ in range(repeat):
        g = dags[rng.randint(len(dags))]
        oracle = IndependenceOracle(ci_signature(g))
        duration, _ = measure(pc, oracle)
        durations.append(duration)
        queries.append(oracle.query_count)
    print(f"time = {np.mean(durations):.4f} +- {np.std(durations):.4f} s per graph")
    print(f"oracle queries = {np.mean(queries):.1f} (max {max(queries)})")


def profile__build(n=5):
    """Profiles one corpus build with yappi (install with `poetry install --with profiling`)."""
    import yappi

    print()
    print("---  Profiling CorpusBuilder.build() ---")
    yappi.set_clock_type("cpu")
    yappi.start()
    CorpusBuilder(max_nodes=n).build(2, n)
    yappi.stop()
    stats = yappi.get_func_stats()
    stats.sort("ttot", "desc")
    stats.print_all(
        columns={0: ("name", 60), 1: ("ncall", 10), 2: ("tsub", 8), 3: ("ttot", 8), 4: ("tavg", 8)}
    )
    yappi.clear_stats()


if __name__ == "__main__":
    # profile__build()
    # run__canonical_key()
    # run__d_separation()
    # run__pc()
    run__enumeration(n_max=5)
