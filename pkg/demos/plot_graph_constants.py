"""
Intrinsic constants of graphs over a line
=========================================

Sections of the projection R^2 -> R that forgets the second coordinate are
graphs y -> (y, u(y)).  For a straight line of slope a the global constant
is sqrt(1 + a^2); for a curve the local slope at z tends to sqrt(1 + u'(z)^2).
"""

import math

import numpy as np

from intrinsic_lipschitz import GridSpec, ScaleSchedule, Section, global_constant, slope_at
from intrinsic_lipschitz.models import make_linear_projection_model

grid = GridSpec(((0.0, 1.0, 1e-3),))
model = make_linear_projection_model(2, 1, 2, grid)
y = model.base[:, 0]

for a in (0.0, 1.0, 3.0):
    phi = Section(model, a * y)
    print(f"slope {a:g}: constant {global_constant(phi):.12f}  closed form {math.sqrt(1 + a * a):.12f}")

# a parabola, refined around z = 1 so the small balls are populated
fine = GridSpec(((0.0, 2.0, 0.01),)).refined(1.0, 0.1, 16)
model = make_linear_projection_model(2, 1, 2, fine)
phi = Section(model, model.base[:, 0] ** 2)
est = slope_at(phi, [1.0], ScaleSchedule.geometric(0.1, 6))
for row in est.table():
    print(f"  r={row['radius']:.5f}  sup={row['sup']:.6f}  samples={row['count']}")
print("slope at 1:", est.value, " target sqrt(5) =", math.sqrt(5))
