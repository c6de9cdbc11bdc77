"""
The supermodularity property behind UMFI
========================================

For mutually independent S, f, X, adding f helps predict Y at least as
much in the presence of X as without it:

    I(Y; S,f,X) - I(Y; S,X)  >=  I(Y; S,f) - I(Y; S)

We check this on random discrete joints, then show it can fail once f and
X are dependent.
"""

import numpy as np

from umfi.info import DiscreteJoint, supermodularity_gap, verify_supermodularity

for k in (2, 3, 4):
    print(f"alphabet {k}: violation rate {verify_supermodularity(2000, k, seed=1):.4f}")

# counterexample without independence: X is a copy of f, Y = f
p = np.zeros((2, 2, 2, 2))
for f in (0, 1):
    p[0, f, f, f] = 0.5
gap = supermodularity_gap(DiscreteJoint(p))
print(f"X = f, Y = f: gap = {gap:+.3f} bits (negative: the inequality fails)")
