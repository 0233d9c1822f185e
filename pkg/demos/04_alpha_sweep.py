"""How the LSP / uniformity weight alpha trades accuracy against hubness."""
import numpy as np

from nohub import NoHubConfig, run_benchmark, synthetic_source

source = synthetic_source(K=5, N_S=1, N_Q=15, dim=512, separation=7.0)

print(" alpha   acc     Sk      HO")
for alpha in (0.0, 0.1, 0.2, 0.5, 1.0):
    stats = run_benchmark(source, "nohub", 30, NoHubConfig(alpha=alpha), seed=1)
    print(f" {alpha:4.1f}  {stats.mean_accuracy:.3f}  {stats.mean_skewness:.3f}  {stats.mean_hub_occurrence:.3f}")

# alpha=0 ignores the input affinities entirely, so accuracy drops toward chance;
# alpha=1 keeps only neighborhood preservation.
# CLI equivalent: nohub sweep --param alpha --values 0,0.1,0.2,0.5,1 --episodes 30 -o sweep.csv
