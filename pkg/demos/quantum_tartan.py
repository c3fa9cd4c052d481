"""Invariant state of the quantum tartan and its approach to the Cantor product.

Run: python3 demos/quantum_tartan.py
"""
import numpy as np

from qifs.classical import cantor_profile
from qifs.torus import (
    excluded_mass,
    husimi_torus,
    matched_cantor_level,
    position_profile,
    tartan_invariant,
    tartan_operators,
)

for L in (9, 27, 81):
    inv = tartan_invariant(tartan_operators(L))
    n = 3 * L
    grid = husimi_torus(inv.state, 27)
    level = matched_cantor_level(n)
    r = np.corrcoef(position_profile(inv.state), cantor_profile(level, n))[0, 1]
    print(f"N={n:3d}  {inv.method:9s}  excluded Husimi mass {excluded_mass(grid):.4f}  "
          f"position profile vs Cantor level {level}: r={r:.3f}")

ch = tartan_operators(9)
lin = tartan_invariant(ch, "linear-spectral")
non = tartan_invariant(ch, "nonlinear-normalized")
diff = np.abs(husimi_torus(lin.state, 27).mass() - husimi_torus(non.state, 27).mass()).sum()
print(f"N=27 linear vs nonlinear invariant states: Husimi L1 {diff:.1e} ({non.steps} damped steps)")
