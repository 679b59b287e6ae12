"""Sphere arithmetic and moduli coordinates.

A marked configuration is reduced to coordinates by the unique Mobius map
sending three chosen anchors to (0, 1, oo); forgetting marked points is then
a plain projection, and the two operations commute.
"""

from pullbacklab import (INF, Configuration, forget_coordinates,
                         mobius_apply, mobius_from_triples,
                         normalize_configuration)

M = mobius_from_triples((-2 + 0j, 2 + 0j, INF), (0j, 1 + 0j, INF))
print("The map sending (-2, 2, oo) to (0, 1, oo) is z -> (z+2)/4:")
for z in (-2 + 0j, 2 + 0j, 0j, 6 + 0j):
    print("   %6s -> %s" % (z, mobius_apply(M, z)))

config = Configuration("abcde", [-2 + 0j, 2 + 0j, INF, 0j, 1j])
coords = normalize_configuration(config, ("a", "b", "c"))
print("\nCoordinates of {-2, 2, oo, 0, i} with anchors (a, b, c):")
for lab, c in zip(coords.labels, coords.coords):
    print("   %s -> %s" % (lab, c))

print("\nForgetting the point e and re-normalizing agree:")
projected = forget_coordinates(coords, ["d"])
direct = normalize_configuration(
    Configuration("abcd", [-2 + 0j, 2 + 0j, INF, 0j]), ("a", "b", "c"))
print("   forget-then-project:", projected.coords[0])
print("   drop-then-normalize:", direct.coords[0])
