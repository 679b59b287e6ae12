"""Postsingular analysis of the corpus base maps.

Every critical-value orbit of a postsingularly finite map lands exactly on
a repelling or superattracting cycle; the analysis iterates, detects the
return, snaps the cycle by Newton, and reports the portrait.
"""

from pullbacklab import (RationalMap, critical_points, fixed_points,
                         postsingular_analysis, preimages)

maps = {
    "z^2 - 2 (Chebyshev)": RationalMap([-2, 0, 1]),
    "z^2 - 1 (basilica)": RationalMap([-1, 0, 1]),
    "z^2": RationalMap([0, 0, 1]),
    "(z^2 + 1)/z": None,  # analyzed below: not psf, shown for contrast
}

for name, g in maps.items():
    if g is None:
        continue
    an = postsingular_analysis(g)
    print(name)
    print("   critical points:", [(c, d) for c, d in critical_points(g)])
    print("   postsingular set:", dict(an.postsingular))
    for v, pre, per in an.portrait:
        print("   orbit of %s: preperiod %d, cycle length %d" % (v, pre, per))
    for f in fixed_points(g, an.postsingular):
        flag = " (in P)" if f.in_P else ""
        print("   fixed point %s: multiplier %s, %s%s"
              % (f.location, f.multiplier, f.type, flag))
    print()

print("Preimage solving (z^2 - 2):")
g = RationalMap([-2, 0, 1])
print("   g^{-1}(2)  =", preimages(g, 2 + 0j))
print("   g^{-1}(-2) =", preimages(g, -2 + 0j), " <- the critical value")

print("\nA non-psf map is rejected:")
try:
    postsingular_analysis(RationalMap([0.1, 0, 1]))
except Exception as exc:
    print("   z^2 + 0.1:", type(exc).__name__, "-", exc)
