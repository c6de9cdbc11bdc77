"""
Runtime: exact MCI against UMFI
===============================

Exact MCI fits a model on every non-empty feature subset, UMFI fits two
per feature. The gap widens quickly with p.
"""

from umfi.benchmark import run_benchmark, synthetic_dataset
from umfi.forest import ForestConfig

d = synthetic_dataset(n=200, p=20, seed=42)

# the first forest fit compiles the numba kernels; keep that out of the timings
run_benchmark(d, [2], seed=0, forest=ForestConfig(n_trees=5))

res = run_benchmark(d, range(4, 11), seed=42, forest=ForestConfig(n_trees=20),
                    progress=lambda r: print(f"p={r.p:2d}  umfi {r.wall_time_umfi:6.2f}s "
                                             f"({r.trainings_umfi} fits)  mci "
                                             f"{r.wall_time_mci:6.2f}s ({r.trainings_mci} fits)  "
                                             f"ratio {r.ratio:6.1f}"))
