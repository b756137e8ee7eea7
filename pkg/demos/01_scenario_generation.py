"""Damage scenarios: fragility sampling and fast-forward reduction.

Samples a large Monte Carlo set of line-failure outcomes from a logistic
fragility curve, then thins it to a handful of probability-weighted
representatives.  Everything is seeded, so rerunning prints the same
numbers.
"""

import numpy as np

import gridshield as gs
from feeder import build_network

net = build_network()
print(f"feeder: {len(net.buses)} buses, {len(net.existing_lines())} existing lines, "
      f"{len(net.candidate_lines())} candidate ties")

curve = gs.FragilityCurve(intensity_50=10.0, steepness=0.6)
line = net.existing_lines()[0]
print("\nfailure probability vs. hazard intensity (overhead line):")
for intensity in (0, 5, 10, 15, 20):
    p = gs.damage_probability(curve, line, intensity)
    print(f"  intensity {intensity:>2}: {p:.3f}")

full = gs.monte_carlo(net, curve, intensity=12.0, n=1000, seed=42)
sizes = np.array([len(s.damaged_lines()) for s in full.scenarios])
print(f"\nsampled {len(full)} scenarios at intensity 12.0 "
      f"(damaged lines per scenario: mean {sizes.mean():.2f}, max {sizes.max()})")

reduced = gs.reduce_scenarios(full, 8, net)
print(f"\nreduced to {len(reduced)} representatives "
      "(length-weighted fast-forward selection):")
for s in reduced.scenarios:
    print(f"  {s.id}: pr={s.probability:.3f} damaged={s.damaged_lines() or 'none'}")
print(f"  probability total: {sum(s.probability for s in reduced.scenarios):.9f}")

text = gs.emit_scenarios(reduced)
again = gs.emit_scenarios(gs.reduce_scenarios(
    gs.monte_carlo(net, curve, intensity=12.0, n=1000, seed=42), 8, net))
print(f"\nbyte-identical on rerun with the same seed: {text == again}")
