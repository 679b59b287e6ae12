"""Inverse-branch continuation along paths.

Lifts are Newton continuations with a displacement safeguard against branch
jumps; closed-curve lifts detect monodromy, which is exactly the degree-1
criterion the Levy machinery needs.
"""

import cmath
import math

from pullbacklab import (Path, RationalMap, concatenate, lift_closed_curve,
                         lift_path)

SQUARE = RationalMap([0, 0, 1])
CHEB = RationalMap([-2, 0, 1])


def circle(center, radius, n=128):
    return Path([center + radius * cmath.exp(2j * math.pi * t / n)
                 for t in range(n + 1)])


res = lift_path(SQUARE, Path([1, 4]), 1 + 0j)
print("Lifting [1, 4] under z^2 from 1 gives the principal root branch:")
print("   endpoint %s, residual %.2e" % (res.lifted.end, res.max_residual))

print("\nThe unit circle under z^2 has square-root monodromy:")
res, closes = lift_closed_curve(SQUARE, circle(0j, 1.0), 1 + 0j,
                                check_clearance=False)
print("   lift runs from %s to %s; closes: %s"
      % (res.lifted.start, res.lifted.end, closes))

print("\nA loop around the repelling fixed point 2 of z^2 - 2 lifts closed:")
loop = circle(2 + 0j, 0.5)
res, closes = lift_closed_curve(CHEB, loop, cmath.sqrt(loop.start + 2),
                                check_clearance=False)
print("   closes: %s, residual %.2e" % (closes, res.max_residual))

print("\nConcatenation chains lifts through preimages (the sigma step):")
delta = Path([0, math.sqrt(2)])
lifted = lift_path(CHEB, delta, math.sqrt(2) + 0j).lifted
joined = concatenate(delta, lifted)
print("   delta . lift(delta): %s -> %s -> %s"
      % (joined.start, math.sqrt(2), joined.end))
