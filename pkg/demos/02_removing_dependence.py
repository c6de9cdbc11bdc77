"""
Removing a feature's information from the others
=================================================

Two ways to make x independent of a protected feature z: least-squares
residuals (removes linear dependence only) and binned quantile transport
(removes dependence of any shape while keeping x's marginal).
"""

import numpy as np
from scipy import stats

from umfi.info import mic_approx
from umfi.removal import RemovalBackend, lr_remove, ot_remove

rng = np.random.default_rng(0)
n = 2000
z = rng.normal(size=n)

# x depends on z through its mean and its spread
x = z ** 2 + (1 + np.abs(z)) * rng.normal(size=n)

x_lr, model = lr_remove(x, z, RemovalBackend("lr"))
x_ot = ot_remove(x, z, RemovalBackend("ot", ot_bin_target=100))

print(f"slope p-value {model.slope_p_value:.3g}, residuals applied: {model.applied}")
for label, v in [("original", x), ("lr", x_lr), ("ot", x_ot)]:
    print(f"{label:9s} corr(v, z)={np.corrcoef(v, z)[0, 1]:+.3f}  "
          f"MIC(v, z)={mic_approx(v, z):.3f}  KS(v, x)={stats.ks_2samp(v, x).statistic:.3f}")

# the quadratic dependence survives residualization but not transport;
# only transport keeps the marginal of x (KS near 0)
