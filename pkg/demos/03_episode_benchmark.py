"""Evaluate baselines and noHub with SimpleShot on synthetic few-shot episodes."""
from nohub import NoHubConfig, run_benchmark, synthetic_source

# 5-way 1-shot, 15 queries per class, 512-d features
source = synthetic_source(K=5, N_S=1, N_Q=15, dim=512, separation=7.0)
episodes = 50

for method in ("none", "l2", "cl2", "zn", "nohub", "nohub-s"):
    stats = run_benchmark(source, method, episodes, NoHubConfig(), seed=0)
    print(f"{method:8s} acc {stats.mean_accuracy:.3f} +- {stats.ci95_halfwidth:.3f}"
          f"  Sk {stats.mean_skewness:.3f}  HO {stats.mean_hub_occurrence:.3f}")

# the same numbers come out of the command line:
#   nohub eval --methods none,l2,nohub --shots 1 --episodes 50 -o results.csv
