# How likely is a noise-made cluster?
#
# The bound grows with the error and the fuzz and shrinks quickly with the
# cluster size.  We print a small table, write a grid to CSV and compare
# the bound with simulated 8 x 8 matrices.  Run:  python3 demos/artifact_surface.py

import csv

import numpy as np

from flagmine.synth import artifact_frequency, artifact_probability

m = n = 1000
print("1000 x 1000, w = 0.05 of the range")
print("size    F=0        F=1        F=2")
for k in (5, 10, 20, 40):
    row = [artifact_probability(m, n, k, k, 0.05, F) for F in range(3)]
    print(f"{k:>4}  " + "  ".join(f"{p:9.3g}" for p in row))

# The full grid behind a probability surface, one line per (|I|, |J|).

with open("artifact_grid.csv", "w", newline="") as fh:
    out = csv.writer(fh, lineterminator="\n")
    out.writerow(["size_i", "size_j", "w", "F", "probability"])
    for size_i in range(2, 41, 2):
        for size_j in range(2, 41, 2):
            out.writerow([size_i, size_j, 0.05, 1, artifact_probability(m, n, size_i, size_j, 0.05, 1)])
print("wrote artifact_grid.csv")

# Simulation: a matrix and a profile drawn at random; an artifact is two
# rows that each match the same two profile columns within w.

for F, w in ((0, 0.01), (1, 0.004), (1, 0.006)):
    freq = artifact_frequency(8, 8, 2, 2, w, F, trials=300, seed=1)
    print(f"8x8, 2x2, F={F}, w={w}: simulated {freq:.3f}, bound {artifact_probability(8, 8, 2, 2, w, F):.3f}")
