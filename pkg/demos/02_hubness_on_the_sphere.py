"""Uniform points on the sphere have little hubness; skewed clouds have more."""
import numpy as np

from nohub import hubness, k_occurrence, sample_uniform_sphere

n, d, k = 500, 64, 5

sphere = sample_uniform_sphere(n, d, seed=0)
print("sample mean norm on the sphere:", np.linalg.norm(sphere.mean(axis=0)))

rep = hubness(sphere, k=k)
print(f"uniform sphere     Sk={rep.skewness:.3f}  HO={rep.hub_occurrence:.3f}")

# anisotropic Gaussian with a shifted mean, compared in Euclidean distance
scales = np.geomspace(1.0, 0.01, d)
cloud = np.random.default_rng(1).standard_normal((n, d)) * scales + 3.0 * scales
rep = hubness(cloud, k=k, metric="euclidean")
print(f"anisotropic cloud  Sk={rep.skewness:.3f}  HO={rep.hub_occurrence:.3f}")

# hubs are the points that show up in many k-NN lists
occ = k_occurrence(cloud, k=k, metric="euclidean")
print("largest k-occurrences:", np.sort(occ.counts)[-5:], "(hub threshold", 2 * k, ")")
