"""Walk through the pieces of the noHub loss on a tiny problem."""
import numpy as np

from nohub import NoHubConfig, affinity_matrix, cosine_matrix, sample_uniform_sphere
from nohub.objective import kl_divergence, loss_lsp, loss_nohub, loss_unif, renyi2_entropy

rng = np.random.default_rng(0)
X = rng.standard_normal((12, 6))  # 12 raw feature vectors

# input affinities: perplexity-calibrated softmax rows, symmetrized
P, kappas = affinity_matrix(cosine_matrix(X), perplexity=4)
print("sum of P:", P.sum())
print("rows converged:", kappas.converged.sum(), "of", len(kappas.values))

# a random starting embedding on the sphere
Z = sample_uniform_sphere(12, 3, seed=1)
kappa = 0.5

lsp = loss_lsp(P, Z, kappa)
unif = loss_unif(Z, kappa)
print("L_LSP  =", lsp)
print("L_Unif =", unif)

# KL(P||Q) minus the (constant) negative entropy of P is exactly the sum of the two terms
neg_entropy = np.sum(P[P > 0] * np.log(P[P > 0]))
print("KL - sum p ln p =", kl_divergence(P, Z, kappa) - neg_entropy)
print("L_LSP + L_Unif  =", lsp + unif)

# the uniformity term is a shifted negative Renyi-2 entropy of the embedding
n = len(Z)
print("2 ln n + kappa - H2 =", 2 * np.log(n) + kappa - renyi2_entropy(Z, kappa))

# the full objective blends both terms with alpha
print("(lsp, unif, total) at alpha=0.2:", loss_nohub(P, Z, NoHubConfig(alpha=0.2, kappa=kappa)))
