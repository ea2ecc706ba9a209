"""
Slope calculus on sampled sections
==================================

Convex combinations of two graphs that meet at a point have a slope there
bounded by the weighted slopes.  For real-valued quotients the slope of a
product is bounded by sup norms times slopes, provided squaring does not
pull the common value closer to other fibers.
"""

import numpy as np

from intrinsic_lipschitz import GridSpec, Section, WeightFunction
from intrinsic_lipschitz.models import make_circle_model, make_linear_projection_model
from intrinsic_lipschitz.verify import check_affine, check_leibniz, check_product

model = make_linear_projection_model(2, 1, 2, GridSpec(((-1.0, 1.0, 1e-3),)))
y = model.base[:, 0]
phi, psi = Section(model, y), Section(model, -y)

r = check_leibniz(phi, psi, WeightFunction.constant(model, 0.5), [0.0])
print("half and half:", r.lhs, "<=", r.rhs, r.verdict)

r = check_affine(phi, Section(model, 0 * y), 2.0, -1.0, [0.0])
print("extrapolated:", r.lhs, "<=", r.rhs, r.verdict)

f = WeightFunction(model, 0.5 + 0.4 * np.cos(5 * y))
r = check_leibniz(Section(model, np.sin(3 * y)), Section(model, y * y), f, [0.0])
for row in r.scale_table:
    print(f"  r={row['radius']:.5f} lhs={row['lhs']:.5f} rhs={row['rhs']:.5f} "
          f"remainder={row['allowance']:.2e}")

# circle R -> R/Z, representatives in [0, 1)
circle = make_circle_model(GridSpec(((0.0, 0.9, 0.1),)))
rep = Section.canonical(circle)
for at in ([0.0], [0.5]):
    r = check_product(rep, rep, at)
    print("product at", at, r.verdict, r.lhs, r.rhs,
          [h.name for h in r.hypotheses if not h.satisfied])
