"""
When the pointwise maximum is steeper than both sections
========================================================

On a small enumerated quotient of the real line the maximum of two
sections can have a larger constant than either of them.  The hunter finds
such cases; this one is small enough to check by hand.
"""

import numpy as np

from intrinsic_lipschitz import Section
from intrinsic_lipschitz.hunt import hunt
from intrinsic_lipschitz.models import make_explicit_model
from intrinsic_lipschitz.verify import check_maxmin

# fibers {-2, -1}, {1, 3}, {2}
model = make_explicit_model(np.array([[-2.0], [-1.0], [1.0], [3.0], [2.0]]), [0, 0, 1, 1, 2],
                            np.array([[0.0], [1.0], [2.0]]))
phi = Section(model, [0, 3, 4])  # values -2, 3, 2
psi = Section(model, [1, 2, 4])  # values -1, 1, 2
r = check_maxmin(phi, psi)
print({k: r.info[k] for k in ("L_phi", "L_psi", "L_max", "L_min")}, r.verdict)
print("extremal pairs:", r.info["extremal_pairs"])

res = hunt("explicit", "maxmin", 100, 11)
print(res.summary())
