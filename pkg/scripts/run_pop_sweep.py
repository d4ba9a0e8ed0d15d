#!/usr/bin/env python3
"""Sweep population size at fixed problem size and report its effect.

Holds the instance family fixed (n=100 VMs on m=20 servers by default) and
varies the swarm/population size, mirroring the protocol used to study how
population size trades solution quality against run time.

Usage
-----
$ python3 scripts/run_pop_sweep.py --out-dir results
$ python3 scripts/run_pop_sweep.py --out-dir results --pop-sizes 25 50 100 200
"""

import argparse
import time
from pathlib import Path

from vmplace import bench


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out-dir", type=Path, default=Path("results"),
                        help="directory for output tables (created if missing)")
    parser.add_argument("--pop-sizes", nargs="+", type=int, default=[10, 25, 50, 100, 150])
    parser.add_argument("--vms", type=int, default=100, help="VM count for every run")
    parser.add_argument("--base-seed", type=int, default=0)
    parser.add_argument("--reps", type=int, default=10, help="repetitions per (pop, algorithm) cell")
    parser.add_argument("--jobs", type=int, default=1, help="worker processes")
    parser.add_argument("--algorithms", nargs="+", default=["lamocs"])
    args = parser.parse_args()

    cfg = bench.SweepConfig(
        vm_counts=(args.vms,),
        reps=args.reps,
        algorithms=tuple(args.algorithms),
        base_seed=args.base_seed,
        jobs=args.jobs,
    )
    args.out_dir.mkdir(parents=True, exist_ok=True)

    start = time.perf_counter()
    records = bench.run_pop_sweep(cfg, tuple(args.pop_sizes), vm_count=args.vms)
    elapsed = time.perf_counter() - start

    rows = bench.aggregate(records, by="pop")
    raw_path = args.out_dir / "pop_sweep.raw.csv"
    agg_path = args.out_dir / "pop_sweep.csv"
    meta_path = args.out_dir / "pop_sweep.meta.json"
    bench.write_raw_csv(records, raw_path, include_pop=True)
    bench.write_aggregate_csv(rows, agg_path)
    bench.write_metadata(cfg, meta_path, extra={
        "mode": "pop_sweep",
        "pop_sizes": list(args.pop_sizes),
        "pop_sweep_vms": args.vms,
        "elapsed_s": round(elapsed, 3),
    })

    print(f"{len(records)} runs in {elapsed:.1f}s -> {raw_path}, {agg_path}, {meta_path}")
    header = f"{'algorithm':<8} {'pop':>5} {'util_mean':>10} {'lb_mean':>10} {'ms_mean':>10}"
    print(header)
    for row in rows:
        print(f"{row['algorithm']:<8} {row['pop']:>5} {row['utilization_mean']:>10.4f} "
              f"{row['load_balance_mean']:>10.4f} {row['wall_time_ms_mean']:>10.1f}")


if __name__ == "__main__":
    main()
