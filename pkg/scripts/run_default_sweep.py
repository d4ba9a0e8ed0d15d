#!/usr/bin/env python3
"""Run the headline benchmark sweep and write raw/aggregate tables.

Sweeps n in {20, 40, 60, 80, 100} VMs on m=20 servers, 10 repetitions per
cell, comparing LAMOCS against the GA and PSO baselines. Seeds are derived
per cell, so reruns with the same base seed reproduce every run except the
measured wall times.

Usage
-----
$ python3 scripts/run_default_sweep.py --out-dir results
$ python3 scripts/run_default_sweep.py --out-dir results --jobs 4 --reps 3
"""

import argparse
import time
from pathlib import Path

from vmplace import bench


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out-dir", type=Path, default=Path("results"),
                        help="directory for output tables (created if missing)")
    parser.add_argument("--base-seed", type=int, default=0)
    parser.add_argument("--reps", type=int, default=10, help="repetitions per (n, algorithm) cell")
    parser.add_argument("--jobs", type=int, default=1, help="worker processes")
    parser.add_argument("--algorithms", nargs="+", default=["lamocs", "ga", "pso"])
    args = parser.parse_args()

    cfg = bench.SweepConfig(
        reps=args.reps,
        algorithms=tuple(args.algorithms),
        base_seed=args.base_seed,
        jobs=args.jobs,
    )
    args.out_dir.mkdir(parents=True, exist_ok=True)

    start = time.perf_counter()
    records = bench.run_sweep(cfg)
    elapsed = time.perf_counter() - start

    rows = bench.aggregate(records, by="n")
    raw_path = args.out_dir / "sweep.raw.csv"
    agg_path = args.out_dir / "sweep.csv"
    meta_path = args.out_dir / "sweep.meta.json"
    bench.write_raw_csv(records, raw_path)
    bench.write_aggregate_csv(rows, agg_path)
    bench.write_metadata(cfg, meta_path, extra={"mode": "sweep", "elapsed_s": round(elapsed, 3)})

    print(f"{len(records)} runs in {elapsed:.1f}s -> {raw_path}, {agg_path}, {meta_path}")
    header = f"{'algorithm':<8} {'n':>4} {'util_mean':>10} {'lb_mean':>10} {'active_mean':>12} {'ms_mean':>10}"
    print(header)
    for row in rows:
        print(f"{row['algorithm']:<8} {row['n']:>4} {row['utilization_mean']:>10.4f} "
              f"{row['load_balance_mean']:>10.4f} {row['active_servers_mean']:>12.2f} "
              f"{row['wall_time_ms_mean']:>10.1f}")


if __name__ == "__main__":
    main()
