"""
Damped least-squares network training
=====================================

Trains the small sigmoid network two ways: on XOR, where plain gradient
descent struggles, and on a noisy curve with a held-out validation part so
early stopping can pick the best epoch.
"""

import numpy as np

from curbprice.mlp import LmConfig, forward, init_network, train_lm

# --- 1. XOR in a handful of epochs -------------------------------------------
# Each epoch solves (J'J + lambda I) d = -J'r, retrying with a larger lambda
# until the step reduces training error; small lambda acts like Gauss-Newton,
# large lambda like cautious gradient descent.
X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
y = np.array([0.1, 0.9, 0.9, 0.1])
model = init_network(2, seed=1)
model, hist = train_lm(model, (X, y), (X, y), LmConfig(max_epochs=200, seed=1))
print(f"XOR: stopped after {len(hist.train_mse)} epochs ({hist.stop_reason}), "
      f"final MSE {hist.train_mse[-1]:.2e}")
print(f"outputs: {np.round(forward(model, X), 3)}  (targets {y})")

# --- 2. Early stopping on noisy data -----------------------------------------
rng = np.random.default_rng(2)
Xc = np.sort(rng.uniform(0, 1, 80))[:, None]
yc = 0.5 + 0.35 * np.sin(2.5 * np.pi * Xc.ravel()) + rng.normal(0, 0.08, 80)
order = rng.permutation(80)
tr, va = order[:56], order[56:]

model = init_network(1, seed=3)
model, hist = train_lm(model, (Xc[tr], yc[tr]), (Xc[va], yc[va]),
                       LmConfig(max_epochs=400, patience=6, seed=3))
print(f"\ncurve fit: {len(hist.train_mse)} epochs, stop reason: {hist.stop_reason}")
print(f"best validation epoch: {hist.best_epoch} "
      f"(val MSE {hist.val_mse[hist.best_epoch - 1]:.4f}); "
      f"the returned weights are that epoch's snapshot")

# The history records every epoch even when the step was rejected, so the
# accepted flags line up with strictly decreasing training error.
accepted = sum(hist.accepted)
print(f"accepted steps: {accepted} of {len(hist.accepted)}")
print("\nepoch  train_mse  val_mse   accepted")
for k in range(0, len(hist.train_mse), max(1, len(hist.train_mse) // 8)):
    print(f"{k + 1:5d}  {hist.train_mse[k]:9.5f}  {hist.val_mse[k]:8.5f}  "
          f"{str(hist.accepted[k]).lower()}")
