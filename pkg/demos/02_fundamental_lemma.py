"""One recorded experiment spans every short trajectory of the system.

Run with ``python demos/02_fundamental_lemma.py``.
"""

# %%
import numpy as np

from ddpc import build_hankel_representation, is_persistently_exciting, membership, quasi_weierstrass, simulate
from ddpc.descriptor import Trajectory
from ddpc.experiment import collect_data, minimal_data_length
from ddpc.presets import paper_system

qw = quasi_weierstrass(paper_system())
L = 20
order = L + qw.q + qw.s - 1

# %% How long must the experiment be? A Hankel matrix with m*order rows needs
# at least as many columns.
print("excitation order", order, "needs T >=", minimal_data_length(qw.m, order))
short = np.random.default_rng(1).uniform(-1, 1, (30, 1))
print("T = 30:", is_persistently_exciting(short, order))

# %% Record 60 samples and build depth-20 Hankel matrices from them.
data, pe = collect_data(qw, 60, order, seed=0)
print("T = 60:", pe)
rep = build_hankel_representation(data, L, qw.s)
print("Hankel matrices:", rep.Hu.shape, rep.Hy.shape)

# %% A fresh simulated trajectory lies in the column span...
rng = np.random.default_rng(2)
fresh = simulate(qw, rng.normal(size=qw.q), rng.uniform(-1, 1, (L + qw.s - 1, 1))).manifest()
res = membership(rep, fresh)
print("fresh trajectory: member =", res.verdict, " residual =", f"{res.residual:.2e}")

# %% ...and a single wrong output sample takes it out.
y = fresh.y.copy()
y[7, 2] += 0.1
res = membership(rep, Trajectory(fresh.u, y))
print("corrupted sample: member =", res.verdict, " residual =", f"{res.residual:.2e}")

# %% The last output depends on the next, unseen input, so some changes there
# are still trajectories.
y = fresh.y.copy()
y[-1] += qw.C2 @ qw.N @ qw.B2[:, 0]
print("shifted last sample: member =", membership(rep, Trajectory(fresh.u, y)).verdict)
