"""Receding-horizon control from data only, with two setpoint changes.

Run with ``python demos/03_predictive_control.py``. If matplotlib is
installed the outputs are also plotted to ``closed_loop.png``.
"""

# %%
import numpy as np

from ddpc.experiment import ExperimentConfig, run_experiment

cfg = ExperimentConfig.paper()
log, report, summary, mpc_cfg = run_experiment(cfg)
t, u, y = log.arrays()

# %% Ten random priming steps, then one OCP per step. The setpoint jumps at t = 10 and t = 30.
print(" t      u        y_0       y_3      cost")
for k in range(0, len(t), 3):
    print(f"{t[k]:2d} {u[k, 0]:8.3f} {y[k, 0]:9.4f} {y[k, 3]:9.4f} {log.cost[k]:9.3g}")

# %% Every OCP was feasible and its optimal cost never grew within a segment.
for seg in report.segments:
    print(f"segment [{seg.start}, {seg.stop}]: cost non-increasing = {seg.cost_non_increasing}, "
          f"within 1e-3 from t = {seg.settling_index}")
print("all steps feasible:", report.all_feasible)

# %% The predicted output at each step is exactly what the plant produced.
pred = np.array(log.y_pred[mpc_cfg.priming_steps:])
print("max |y_pred - y| =", np.max(np.abs(pred - y[mpc_cfg.priming_steps:])))

# %%
try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    plt = None
if plt is not None:
    fig, axes = plt.subplots(2, 1, sharex=True, figsize=(7, 5))
    axes[0].plot(t, y)
    axes[0].plot(t, np.array(log.y_ref), "k--", lw=0.8)
    axes[0].set_ylabel("y")
    axes[1].step(t, u[:, 0], where="post")
    axes[1].set_ylabel("u")
    axes[1].set_xlabel("t")
    fig.savefig("closed_loop.png", dpi=120)
    print("wrote closed_loop.png")
