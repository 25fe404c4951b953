"""
Memorizing one structure
========================

Train the tiny denoiser on sixteen copies of MgMnO3, then noise the
structure to step T and let the network bring it back. With enough steps
the model memorizes the training tensor and the decoded atom count comes
out right on most seeds.
"""

import argparse
import time

import numpy as np

from pccd.codec import ElementSlots, decode, encode
from pccd.crystal import CrystalStructure, lattice_from_parameters
from pccd.denoiser import PRESETS, TrainConfig, train
from pccd.diffusion import cosine_schedule, reconstruct
from pccd.errors import PCCDError
from pccd.evaluation import evaluate_pair

parser = argparse.ArgumentParser(description=__doc__.strip().splitlines()[0])
parser.add_argument("--steps", type=int, default=5000)
parser.add_argument("--learning-rate", type=float, default=1e-2)
parser.add_argument("--trials", type=int, default=10)
parser.add_argument("--seed", type=int, default=0)
args = parser.parse_args()

lattice = lattice_from_parameters(3.75, 3.75, 3.75, np.pi / 2, np.pi / 2, np.pi / 2)
frac = [[0, 0, 0], [0.5, 0.5, 0.5], [0, 0.5, 0.5], [0.5, 0, 0.5], [0.5, 0.5, 0]]
s = CrystalStructure(lattice, ["Mg", "Mn", "O", "O", "O"], frac)
slots = ElementSlots.for_structure(s)
data = [encode(s, slots)] * 16

sch = cosine_schedule()
cfg = TrainConfig(learning_rate=args.learning_rate, batch_size=16, training_steps=args.steps, seed=args.seed)
t0 = time.perf_counter()
result = train(data, sch, PRESETS["tiny"], cfg)
losses = np.array(result.losses)
print(f"trained {args.steps} steps in {time.perf_counter() - t0:.1f}s, {result.checkpoint.n_parameters()} parameters")
for k in range(0, len(losses), max(1, len(losses) // 10)):
    print(f"  step {k + 1:5d}  loss {losses[k]:.4f}")
print(f"  last 20 steps mean loss {losses[-20:].mean():.4f}")

predictor = result.checkpoint.predictor(sch)
hits = 0
for seed in range(args.trials):
    x = reconstruct(data[0], predictor, sch, seed=seed)
    try:
        p, _ = decode(x, slots)
    except PCCDError as exc:
        print(f"seed {seed}: decode failed ({exc})")
        continue
    r = evaluate_pair(f"seed{seed}", s, p, distances=p.num_sites == s.num_sites)
    hits += r.matched
    extra = f", superpose {r.superpose:.3f} A" if r.matched else ""
    print(f"seed {seed}: {p.num_sites} sites, formula {p.formula()}{extra}")
print(f"atom count recovered on {hits}/{args.trials} seeds")
