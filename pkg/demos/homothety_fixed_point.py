"""Two homotheties of the qubit state space and their common fixed point.

Run: python3 demos/homothety_fixed_point.py
"""
import numpy as np

from qifs.channels import barycenter_estimate, homothety_qifs, qifs_trajectory
from qifs.invariant import power_iteration
from qifs.qstate import trace_distance

up, down = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])
q = homothety_qifs(up, down)

res = power_iteration(q, up)
print(f"power iteration: {res.steps} steps, residual {res.residual:.2e}")
print(np.round(res.state.real, 12))

traj = qifs_trajectory(q, up, 100_000, seed=8)
bary = barycenter_estimate(traj, burn_in=100)
print(f"trajectory barycenter is {trace_distance(bary, np.eye(2) / 2):.4f} from 1/2")
