# Recovering a planted fuzzy lagged cluster
#
# We hide a cluster in a uniform random matrix, mine it back and compare.
# Run from the repository root:  python3 demos/planted_recovery.py

import numpy as np

from flagmine import MinerConfig, mine, verify_cluster
from flagmine.evaluation import cell_set, cells_of, recovers_planted, rnia_complement
from flagmine.postprocess import max_nonintersecting_columns, restrict_columns
from flagmine.synth import PlantSpec, gen_random_matrix, plant_cluster

# A 100 x 100 matrix with entries in [100, 1100).

M = gen_random_matrix(100, 100, seed=4)

# Plant 30 rows x 30 columns with lags up to 5, noise of +-10 (1% of the
# range) and fuzz up to 1 on a quarter of the columns.

M2, truth = plant_cluster(M, PlantSpec(0.3, 0.3, w=10.0, F=1, seed=8))
gt = truth.cluster
print("planted rows:", gt.rows[:8], "...")
print("planted lags:", gt.lags[:8], "...")
print("fuzzy entries:", len(gt.fuzz))

# Mine with the same error and fuzz bounds, |S| = 5 and |S0| = 3.  A single
# run at the theorem count for p = 0.408 finds a fuzzy plant about half the
# time; assuming p = 0.1 runs four times as many iterations.

cfg = MinerConfig(w=10.0, beta_i=0.3, beta_j=0.3, max_fuzz=1, disc_set_size=5, disc_prob=0.1, seed=1)
print("iterations:", cfg.resolve(100, 100).iterations)
found = mine(M2, cfg)
print("clusters found:", len(found))

# Every cluster is certified at error 2w.

for c in found:
    assert verify_cluster(M2, c, 2 * cfg.w).valid

best = found[0]
print("best cluster shape:", best.shape, "error:", round(best.achieved_error, 3))
print("recovers planted rows, lags and columns:", recovers_planted(best, gt))

# A fuzz-free column is often admitted again one step to the side, reading
# the same cells.  Keeping a maximum set of non-intersecting columns drops
# such copies without losing cells.

clean = restrict_columns(best, max_nonintersecting_columns(best, M2))
print("columns before / after bridge selection:", len(best.cols), len(clean.cols))
print("1 - RNIA against the planted cells:", round(rnia_complement(cells_of([clean], 100), cell_set(gt)), 3))
