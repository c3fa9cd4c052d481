"""Unique invariant states of random external fields and the commutant test.

A family of unitaries with all p_i > 0 has a unique invariant state exactly
when the only matrices commuting with every member are multiples of 1.

Run: python3 demos/uniqueness_criterion.py
"""
import numpy as np

from qifs.channels import PAULI, random_external_field
from qifs.invariant import block_diagonal_invariant_state, commutant, uniqueness_verdict
from qifs.qstate import haar_unitary
from qifs.spin import kicked_top_qifs, rotation_qifs

cases = {
    "sigma_x, sigma_y": ([0.5, 0.5], [PAULI[0], PAULI[1]]),
    "two diagonal phases": ([0.5, 0.5], [np.diag([1, 1j, -1]), np.diag([1, -1, 1j])]),
    "Haar pair, N=4": ([0.3, 0.7], [haar_unitary(4, 1), haar_unitary(4, 2)]),
}
rot = rotation_qifs(1.0, 0.7, 2)
cases["spin-2 rotations"] = (rot.weights, rot.unitaries)
top = kicked_top_qifs(np.pi / 4, 2.0, 0.05, 3)
cases["kicked top, j=3"] = (top.weights, top.unitaries)

for name, (p, us) in cases.items():
    v = uniqueness_verdict(p, us)
    print(f"{name:22s} commutant dim {v.commutant_dim}  fixed multiplicity {v.multiplicity}  "
          f"unique {v.unique}")

# the kicked top commutes with the parity exp(i pi J_x); the blocks carry their own invariant states
rep = commutant(top.unitaries)
sigma = block_diagonal_invariant_state(rep, [0.2, 0.8])
ch = random_external_field(top.weights, top.unitaries)
print("kicked top blocks:", [len(b) for b in rep.blocks],
      f"direct-sum state residual {np.max(np.abs(ch(sigma) - sigma)):.1e}")
