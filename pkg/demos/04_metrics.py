"""
Comparing structures
====================

Perturb a reference cell in a few controlled ways and watch how the
matching, translation-minimized distances, graph edit distance and the
box-plot summary respond.
"""

import argparse

import numpy as np

from pccd.crystal import CrystalStructure, lattice_from_parameters
from pccd.evaluation import (
    CorpusIndex,
    evaluate_pair,
    error_series,
    novelty_check,
    rms_anonymous_distance,
    summary_csv,
    summary_table,
    superpose_distance,
)

parser = argparse.ArgumentParser(description=__doc__.strip().splitlines()[0])
parser.add_argument("--n-pairs", type=int, default=40)
parser.add_argument("--sigma", type=float, default=0.01, help="fractional coordinate noise")
parser.add_argument("--seed", type=int, default=0)
args = parser.parse_args()
rng = np.random.default_rng(args.seed)

lattice = lattice_from_parameters(3.75, 3.75, 3.75, np.pi / 2, np.pi / 2, np.pi / 2)
frac = np.array([[0, 0, 0], [0.5, 0.5, 0.5], [0, 0.5, 0.5], [0.5, 0, 0.5], [0.5, 0.5, 0]])
ref = CrystalStructure(lattice, ["Mg", "Mn", "O", "O", "O"], frac)

# a rigid translation costs nothing
moved = CrystalStructure(lattice, ref.species, frac + [0.3, 0.1, 0.7])
print("translated copy: superpose", superpose_distance(ref, moved), "rms_anon", rms_anonymous_distance(ref, moved))

# swapping Mg and Mn only matters when species are respected
swapped = CrystalStructure(lattice, ["Mn", "Mg", "O", "O", "O"], frac)
print("Mg/Mn swapped: superpose", round(superpose_distance(ref, swapped), 4), "rms_anon", rms_anonymous_distance(ref, swapped))

# dropping a site changes the node count of the bonding graph
four = CrystalStructure(lattice, ref.species[:4], frac[:4])
r = evaluate_pair("missing O", ref, four)
print("missing O: matched", r.matched, "graph edit distance", r.ged, "(exact)" if r.ged_exact else "(upper bound)")

# a batch of noisy copies summarized like a results table
reports = []
for k in range(args.n_pairs):
    scale = rng.uniform(0.97, 1.03, 3)
    lat = lattice_from_parameters(*(3.75 * scale), np.pi / 2, np.pi / 2, np.pi / 2)
    noisy = CrystalStructure(lat, ref.species, frac + rng.normal(0, args.sigma, frac.shape))
    reports.append(evaluate_pair(f"pair{k}", ref, noisy, distances=False))
print(summary_csv(summary_table(error_series(reports))))

# novelty against a one-entry corpus
corpus = CorpusIndex([("mgmno3", ref)])
print("noisy copy novel?", novelty_check(CrystalStructure(lattice, ref.species, frac + 0.002), corpus).novel)
other = CrystalStructure(lattice, ["Ca", "Ti", "O", "O", "O"], frac)
print("CaTiO3 novel?", novelty_check(other, corpus).novel)
