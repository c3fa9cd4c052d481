"""Chaos game on the thirds Cantor IFS and its box-counting dimension.

Run: python3 demos/cantor_dimension.py
"""
import numpy as np

from qifs import classical as cl

ifs = cl.cantor_ifs()
res = cl.chaos_game(ifs, 0.5, n=1_000_000, seed=1, resolution=729)
bc = cl.box_counting_dimension(res.measure, [3.0 ** -k for k in range(1, 7)])
print("boxes per scale:", bc.counts)
print(f"dimension {bc.dimension:.5f}  (ln2/ln3 = {np.log(2) / np.log(3):.5f})")

# the Markov operator reaches the same measure without sampling
pushed = cl.iterate_measure(ifs, cl.EmpiricalMeasure.uniform(cl.INTERVAL, 729), 20)
print(f"L1 between sampled and pushed measures: {res.measure.l1_distance(pushed):.4f}")

# place-dependent weights p1(x) = x vanish at 0, so the system is not hyperbolic
print("weighted maps:", cl.classify_hyperbolic(cl.weighted_cantor_ifs()))
