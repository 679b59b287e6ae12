import cmath
import math

import numpy as np
import pytest

from pullbacklab.errors import (EndpointMismatch, NearCriticalValue)
from pullbacklab.lifting import (Path, cancel_retraces, concatenate,
                                 lift_closed_curve, lift_path,
                                 path_clearance, simplify_path)
from pullbacklab.ratmap import RationalMap, critical_values
from pullbacklab.sphere import INF, chordal

CHEB = RationalMap([-2, 0, 1])
SQUARE = RationalMap([0, 0, 1])


def circle(center, radius, n=64):
    return Path([center + radius * cmath.exp(2j * math.pi * t / n)
                 for t in range(n + 1)])


def test_path_basics():
    p = Path([0, 1, 1, 2])       # exact duplicate dropped
    assert p.nodes == (0j, 1 + 0j, 2 + 0j)
    assert p.start == 0 and p.end == 2
    assert p.reverse().nodes == (2 + 0j, 1 + 0j, 0j)
    assert len(p.refine(2)) == 5
    with pytest.raises(ValueError):
        Path([])


def test_path_clearance():
    p = Path([0, 1 + 0j])
    q = 0.5 + 1j
    dense = min(chordal(t / 1000 + 0j, q) for t in range(1001))
    got = path_clearance(p, [q])
    assert abs(got - dense) < 0.05 * dense
    assert path_clearance(p, [INF]) == 2 / math.hypot(1, 1)


def test_lift_segment_principal_root():
    # z^2 over [1, 4] from 1: the lift is the principal square root
    res = lift_path(SQUARE, Path([1, 4]), 1 + 0j)
    assert abs(res.lifted.end - 2) < 1e-9
    assert res.max_residual < 1e-9


def test_lift_monodromy_square():
    res, closes = lift_closed_curve(SQUARE, circle(0j, 1.0), 1 + 0j,
                                    check_clearance=False)
    assert not closes
    assert abs(res.lifted.end + 1) < 1e-6  # ends at the other root


def test_lift_chebyshev_branch_derived():
    # w = +sqrt(z + 2) evaluated at the endpoints: 0 -> sqrt(2) lifts to
    # sqrt(sqrt(2) + 2)
    res = lift_path(CHEB, Path([0, math.sqrt(2)]), math.sqrt(2) + 0j)
    assert abs(res.lifted.end - 1.8477590650225735) < 1e-9


def test_lift_closed_curve_chebyshev_oracle():
    # independent oracle: continue the branch of sqrt(z+2) through the
    # fixed point 2 around |z-2| = 0.5 by dense nearest-root selection;
    # the continuation returns to its start (trivial monodromy)
    n = 4096
    w0 = cmath.sqrt(2.5 + 2)  # branch value over the loop start 2.5
    w = w0
    for i in range(1, n + 1):
        z = 2 + 0.5 * cmath.exp(2j * math.pi * i / n)
        roots = [cmath.sqrt(z + 2), -cmath.sqrt(z + 2)]
        w = min(roots, key=lambda r: abs(r - w))
    assert abs(w - w0) < 1e-6  # oracle: trivial monodromy

    res, closes = lift_closed_curve(CHEB, circle(2 + 0j, 0.5), w0,
                                    check_clearance=False)
    assert closes and res.max_residual < 1e-9


def test_lift_closed_curve_away_from_branch_point():
    # |z-4| = 1 under z^2: a sqrt branch exists on a disk avoiding 0
    loop = circle(4 + 0j, 1.0)
    res, closes = lift_closed_curve(SQUARE, loop, cmath.sqrt(loop.start),
                                    check_clearance=False)
    assert closes


def test_lift_requires_matching_start():
    with pytest.raises(EndpointMismatch):
        lift_path(SQUARE, Path([1, 4]), 3 + 0j)


def test_lift_near_critical_value_rejected():
    path = Path([1e-8 + 0j, 1 + 0j])  # starts on top of the critical value 0
    with pytest.raises(NearCriticalValue):
        lift_path(SQUARE, path, 1e-4 + 0j)


def test_lift_determinism():
    path = Path([1, 2 + 1j, 4])
    a = lift_path(SQUARE, path, 1 + 0j)
    b = lift_path(SQUARE, path, 1 + 0j)
    assert a.lifted.nodes == b.lifted.nodes  # bitwise reproducible


def test_lift_refined_residual_invariant():
    # 10x refined sampling still satisfies the residual bound
    rng = np.random.default_rng(17)
    for g in (CHEB, SQUARE):
        cv = critical_values(g)
        for _ in range(10):
            nodes = 3 + 1j + 0.4 * rng.normal(size=4).view(np.complex128)
            path = Path(nodes.tolist())
            if path_clearance(path, cv) < 0.05:
                continue
            from pullbacklab.ratmap import preimages
            start = next(p for p, _ in preimages(g, path.start)
                         if not isinstance(p, type(INF)))
            fine = path.refine(10)
            res = lift_path(g, fine, start)
            assert res.max_residual < 1e-8


def test_lift_homotopy_invariance_at_endpoints():
    # two polylines with the same endpoints bounding a puncture- and
    # critical-value-free quadrilateral lift to the same endpoint
    upper = Path([1, 2 + 0.5j, 4])
    lower = Path([1, 2 - 0.3j, 4])
    a = lift_path(SQUARE, upper, 1 + 0j)
    b = lift_path(SQUARE, lower, 1 + 0j)
    assert abs(a.lifted.end - b.lifted.end) < 1e-8


def test_null_homotopic_circles_close():
    rng = np.random.default_rng(29)
    for _ in range(20):
        center = complex(3 + rng.uniform(-1, 1), rng.uniform(-1, 1))
        radius = rng.uniform(0.1, 0.5)
        if abs(center) - radius < 0.7:
            continue  # keep the disk clear of the critical value 0
        loop = circle(center, radius)
        from pullbacklab.ratmap import preimages
        start = max((p for p, _ in preimages(SQUARE, loop.start)),
                    key=lambda p: p.real)
        res, closes = lift_closed_curve(SQUARE, loop, start,
                                        check_clearance=False)
        assert closes


def test_concatenate_and_retraces():
    p = concatenate(Path([0, 1]), Path([1, 2]))
    assert p.nodes == (0j, 1 + 0j, 2 + 0j)
    with pytest.raises(EndpointMismatch):
        concatenate(Path([0, 1]), Path([5, 6]))
    loop = concatenate(Path([0, 1, 2]), Path([2, 1, 0]))
    assert cancel_retraces(loop).nodes == (0j,)


def test_concatenate_lift_example():
    head = Path([0, math.sqrt(2)])
    lift = lift_path(CHEB, head, math.sqrt(2) + 0j).lifted
    joined = concatenate(head, lift)
    assert joined.start == 0
    assert abs(joined.end - 1.8477590650225735) < 1e-9


def test_simplify_preserves_endpoints_and_avoids_obstacles():
    zig = Path([0, 0.5 + 0.01j, 1 + 0j, 1.5 - 0.01j, 2 + 0j])
    out = simplify_path(zig, [10 + 0j], margin=2e-8)
    assert out.start == zig.start and out.end == zig.end
    assert len(out) == 2  # everything collapses: no obstacle anywhere near

    # an obstacle inside the swept corridor blocks the shortcut
    detour = Path([0, 1 + 1j, 2 + 0j])
    kept = simplify_path(detour, [1 + 0.5j], margin=2e-8)
    assert len(kept) == 3


def test_simplify_keeps_homotopy_class_around_puncture():
    # a path winding over the top of the puncture must not be flattened
    # through it
    arc = Path([-1, -0.7 + 0.8j, 0.7 + 0.8j, 1 + 0j])
    out = simplify_path(arc, [0j], margin=2e-8)
    # the straight chord [-1, 1] passes through the puncture; simplification
    # must keep at least one waypoint above
    assert len(out) >= 3


def test_anchored_chart_lift():
    # lifting in a translated chart: same branch, tiny scale
    anchor = 2.0
    tiny = Path([1e-30, 2e-30], anchor=anchor)  # segment near the fixed point
    res = lift_path(CHEB, tiny, 0.25e-30)
    assert res.lifted.anchor == anchor
    # the p-fixing branch contracts by ~1/4
    assert abs(res.lifted.end - 0.5e-30) < 1e-32
