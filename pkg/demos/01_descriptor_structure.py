"""Structure of a descriptor system: slow and fast parts, simulation, state recovery.

Run with ``python demos/01_descriptor_structure.py``.
"""

# %%
import numpy as np

from ddpc import quasi_weierstrass, reconstruct_state, simulate
from ddpc.descriptor import observability_index, r_controllable, r_observable
from ddpc.presets import paper_system

np.set_printoptions(precision=4, suppress=True)

# %% The 4-state example. E is singular, so part of the state is algebraic.
sys = paper_system()
print("rank E =", np.linalg.matrix_rank(sys.E), "of", sys.n)

# %% Wong sequences give P, S with S E P = diag(I, N) and S A P = diag(A1, I).
qw = quasi_weierstrass(sys)
print(f"q = {qw.q} slow states, r = {qw.r} fast states, nilpotency index s = {qw.s}")
print("S E P =\n", qw.S @ sys.E @ qw.P)
print("S A P =\n", qw.S @ sys.A @ qw.P)
print("residuals:", qw.residuals())
print("R-controllable:", r_controllable(qw), " R-observable:", r_observable(qw),
      " observability index:", observability_index(qw))

# %% The fast state looks ahead: z2(t) depends on u(t), ..., u(t+s-1).
# A single input pulse at t = 3 therefore shows up in x(2) already.
u = np.zeros((8, 1))
u[3] = 1.0
traj = simulate(qw, np.zeros(qw.q), u)
print("x(t) for a pulse at t = 3:")
for t, x in enumerate(traj.x):
    print(f"  t={t}  {x}")

# %% A window of q + s - 1 input/output samples pins down the state.
rng = np.random.default_rng(0)
traj = simulate(qw, rng.normal(size=qw.q), rng.uniform(-1, 1, (12, 1)))
w = qw.q + qw.s - 1
rec = reconstruct_state(qw, traj.segment(4, 4 + w - 1))
print("true x(4):         ", traj.x[4])
print("reconstructed x(4):", rec.x)
