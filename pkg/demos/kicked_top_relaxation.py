"""Relaxation of a spin coherent state under the randomly kicked top.

Run: python3 demos/kicked_top_relaxation.py
"""
import numpy as np

from qifs.qstate import trace_distance
from qifs.spin import husimi_sphere, kicked_top_qifs, spin_coherent

j = 3
ch = kicked_top_qifs(np.pi / 4, 2.0, 0.05, j).channel
k = spin_coherent(j, 1.0, 0.5)
rho = np.outer(k, k.conj())
mixed = np.eye(2 * j + 1) / (2 * j + 1)

dist = []
for n in range(500):
    rho = ch(rho)
    dist.append(trace_distance(rho, mixed))
slope = np.polyfit(np.arange(1, 501), np.log(dist), 1)[0]
print(f"D(1)={dist[0]:.4f}  D(500)={dist[-1]:.4f}  log slope {slope:.3e}")
print("non-increasing:", bool(np.all(np.diff(dist) <= 0)))

grid = husimi_sphere(rho, j, resolution=16)
print(f"Husimi after 500 kicks: min {grid.values.min():.3f}, max {grid.values.max():.3f}")
