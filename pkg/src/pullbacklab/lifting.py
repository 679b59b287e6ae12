"""Numerical covering-space machinery: continuation of inverse branches of
the base map along polyline paths, closed-curve lifts and monodromy
detection, concatenation and corridor-based simplification.

Continuation is Newton seeded at the previous lift node; a step is accepted
only when the displacement stays below eta times the distance from the
previous node to the nearest critical point, otherwise the target segment
is bisected (up to a fixed depth). This safeguard is what prevents silent
branch jumps near critical points.

A Path may carry an ``anchor``: its nodes are then offsets from that point.
Lifting an anchored path uses the translated map g(anchor + w) - anchor,
which lets curves live at scales far below the anchor's own magnitude.
"""

import cmath
import math

from .errors import (BranchJumpSuspected, ChartOverflow, EndpointMismatch,
                     NearCriticalValue)
from .ratmap import critical_points, critical_values
from .sphere import CHART_LIMIT, chordal, is_inf

EPS_LIFT = 1e-9    # chordal residual allowed for accepted lift nodes
EPS_CV = 1e-6      # required path clearance to critical values
EPS_CLEAR = 1e-8   # required path clearance to punctures
ETA_SAFE = 0.25    # Newton displacement
MAX_DEPTH = 40     # bisection depth before giving up


class Path:
    """Polyline with flagged endpoints; immutable after construction.

    Nodes are finite complex numbers; exact consecutive duplicates are
    dropped. When ``anchor`` is set the nodes are offsets from it.
    """

    __slots__ = ("nodes", "anchor")

    def __init__(self, nodes, anchor=None):
        cleaned = []
        for z in nodes:
            z = complex(z)
            if not cmath.isfinite(z):
                raise ValueError("path nodes must be finite")
            if cleaned and z == cleaned[-1]:
                continue
            cleaned.append(z)
        if not cleaned:
            raise ValueError("path needs at least one node")
        self.nodes = tuple(cleaned)
        self.anchor = None if anchor is None else complex(anchor)

    @property
    def start(self):
        return self.nodes[0]

    @property
    def end(self):
        return self.nodes[-1]

    def is_closed(self, tol=EPS_LIFT):
        if len(self.nodes) == 1:
            return True
        scale = max(abs(z) for z in self.nodes)
        return abs(self.start - self.end) <= max(tol, 1e-12 * scale)

    def reverse(self):
        return Path(tuple(reversed(self.nodes)), anchor=self.anchor)

    def euclidean_length(self):
        return sum(abs(b - a) for a, b in zip(self.nodes, self.nodes[1:]))

    def refine(self, k):
        """Insert k-1 evenly spaced nodes on every segment."""
        if k < 2:
            return self
        out = [self.nodes[0]]
        for a, b in zip(self.nodes, self.nodes[1:]):
            for j in range(1, k + 1):
                out.append(a + (b - a) * (j / k))
        return Path(out, anchor=self.anchor)

    def absolute_nodes(self):
        if self.anchor is None:
            return self.nodes
        return tuple(self.anchor + z for z in self.nodes)

    def to_json(self):
        obj = {"nodes": [[z.real, z.imag] for z in self.nodes]}
        if self.anchor is not None:
            obj["anchor"] = [self.anchor.real, self.anchor.imag]
        return obj

    @classmethod
    def from_json(cls, obj):
        anchor = obj.get("anchor")
        return cls([complex(a, b) for a, b in obj["nodes"]],
                   anchor=None if anchor is None else complex(*anchor))

    def __len__(self):
        return len(self.nodes)

    def __repr__(self):
        body = "%d nodes, %r -> %r" % (len(self.nodes), self.start, self.end)
        if self.anchor is not None:
            body += ", anchor %r" % self.anchor
        return "Path(%s)" % body


class LiftResult:
    """Outcome of a continuation: the lifted path, the matching target
    subdivision, the worst chordal residual and the subdivision count."""

    __slots__ = ("lifted", "targets", "max_residual", "subdivisions")

    def __init__(self, lifted, targets, max_residual, subdivisions):
        self.lifted = lifted
        self.targets = targets
        self.max_residual = max_residual
        self.subdivisions = subdivisions

    def __repr__(self):
        return "LiftResult(%r, residual %.3g, %d subdivisions)" % (
            self.lifted, self.max_residual, self.subdivisions)


# ---------------------------------------------------------------------------
# geometry helpers

def _seg_closest(a, b, q):
    """Point of segment [a, b] closest to q (euclidean)."""
    d = b - a
    L2 = (d * d.conjugate()).real
    if L2 == 0.0:
        return a
    t = ((q - a) * d.conjugate()).real / L2
    t = min(1.0, max(0.0, t))
    return a + t * d


def segment_point_distance(a, b, q):
    return abs(_seg_closest(a, b, q) - q)


def _chordal_seg_to_point(a, b, q):
    if is_inf(q):
        return 2.0 / math.hypot(1.0, max(abs(a), abs(b)))
    zc = _seg_closest(a, b, q)
    return min(chordal(a, q), chordal(b, q), chordal(zc, q))


def path_clearance(path, points):
    """Minimum chordal distance from the polyline to the given points."""
    nodes = path.absolute_nodes()
    best = math.inf
    for q in points:
        if len(nodes) == 1:
            best = min(best, chordal(nodes[0], q))
            continue
        for a, b in zip(nodes, nodes[1:]):
            best = min(best, _chordal_seg_to_point(a, b, q))
    return best


# ---------------------------------------------------------------------------
# continuation

def _chart_map(g, anchor):
    if anchor is None:
        return g, None
    return g.shifted(anchor), anchor


def _finite_critical_points(g, anchor=None):
    pts = []
    for c, _ in critical_points(g):
        if is_inf(c):
            continue
        pts.append(c if anchor is None else c - anchor)
    return pts


def _newton_preimage(gm, target, seed, max_iter=60):
    """Newton solve of gm(w) = target; returns the best iterate found (the
    caller judges it by its residual) or None if nothing was usable."""
    w = seed
    best, best_res = None, math.inf
    for _ in range(max_iter):
        gv, gd = gm.evaluate_with_derivative(w)
        if is_inf(gv) or gd == 0:
            break
        res = abs(gv - target)
        if res < best_res:
            best, best_res = w, res
        if res == 0.0:
            break
        step = (gv - target) / gd
        if not cmath.isfinite(step):
            break
        w = w - step
        if abs(step) <= 4e-16 * max(abs(w), 1e-300):
            gv2, _ = gm.evaluate_with_derivative(w)
            if not is_inf(gv2) and abs(gv2 - target) <= best_res:
                best = w
            break
    return best


def _chordal_in_chart(anchor, u, v):
    if anchor is None:
        return chordal(u, v)
    # both points sit near the anchor; translate back for the metric factor
    return 2.0 * abs(u - v) / (1.0 + abs(anchor) ** 2)


def lift_path(g, path, start_lift, eps_lift=EPS_LIFT, eps_cv=EPS_CV,
              eta=ETA_SAFE, max_depth=MAX_DEPTH, check_clearance=True):
    """Unique continuation of the inverse branch of g along ``path`` from
    ``start_lift`` (with g(start_lift) = path.start).

    For an anchored path, ``start_lift`` is an offset in the same chart and
    the result keeps the anchor.
    """
    gm, anchor = _chart_map(g, path.anchor)
    crit = _finite_critical_points(g, anchor)
    start_res = _chordal_in_chart(anchor, gm(complex(start_lift)), path.start)
    if start_res > eps_lift:
        raise EndpointMismatch(
            "g(start_lift) misses path start by chordal %.3g" % start_res)
    if check_clearance and anchor is None:
        cv = critical_values(g)
        clr = path_clearance(path, cv)
        if clr <= eps_cv:
            raise NearCriticalValue(
                "path clearance %.3g to a critical value" % clr)

    lifted = [complex(start_lift)]
    targets = [path.start]
    max_res = start_res
    subdivisions = 0

    def crit_distance(w):
        if not crit:
            return math.inf
        return min(abs(w - c) for c in crit)

    for seg_a, seg_b in zip(path.nodes, path.nodes[1:]):
        # stack of pending targets along this segment (LIFO of (z, depth))
        pending = [(seg_b, 0)]
        z_from = seg_a
        while pending:
            z_to, depth = pending.pop()
            w_prev = lifted[-1]
            w = _newton_preimage(gm, z_to, w_prev)
            ok = False
            if w is not None:
                allowed = eta * crit_distance(w_prev)
                ok = abs(w - w_prev) < allowed
            if ok:
                res = _chordal_in_chart(anchor, gm(w), z_to)
                if res > eps_lift:
                    ok = False
            if ok and anchor is None and abs(w) > CHART_LIMIT:
                raise ChartOverflow(
                    "lift reached |w| = %.3g; transport the chart" % abs(w))
            if not ok:
                if depth >= max_depth:
                    raise BranchJumpSuspected(
                        "safeguard violated at depth %d near %r" % (depth, z_to))
                mid = 0.5 * (z_from + z_to)
                subdivisions += 1
                pending.append((z_to, depth + 1))
                pending.append((mid, depth + 1))
                continue
            max_res = max(max_res, res)
            z_from = z_to
            if w == lifted[-1] or z_to == targets[-1]:
                continue  # keep the node lists aligned pairwise
            lifted.append(w)
            targets.append(z_to)

    return LiftResult(Path(lifted, anchor=anchor),
                      Path(targets, anchor=anchor), max_res, subdivisions)


def lift_closed_curve(g, loop, start_lift, **kw):
    """Lift a closed loop; closes = True means trivial monodromy, i.e. the
    lift is again a closed curve mapped with degree 1."""
    if not loop.is_closed(kw.get("eps_lift", EPS_LIFT)):
        raise EndpointMismatch("loop is not closed")
    res = lift_path(g, loop, start_lift, **kw)
    end, start = res.lifted.end, res.lifted.start
    diam = max(abs(z - start) for z in res.lifted.nodes)
    tol = max(kw.get("eps_lift", EPS_LIFT), 1e-9 * diam)
    closes = abs(end - start) <= tol
    return res, closes


# ---------------------------------------------------------------------------
# concatenation and simplification

def concatenate(p1, p2, tol=EPS_LIFT):
    """Join two polylines, snapping p2's start onto p1's end."""
    if (p1.anchor is None) != (p2.anchor is None) or (
            p1.anchor is not None and p1.anchor != p2.anchor):
        raise EndpointMismatch("paths live in different charts")
    scale = max(abs(p1.end), abs(p2.start), 1e-300)
    if abs(p1.end - p2.start) > max(tol, 1e-12 * scale):
        raise EndpointMismatch(
            "p1 ends at %r but p2 starts at %r" % (p1.end, p2.start))
    return Path(p1.nodes + p2.nodes[1:], anchor=p1.anchor)


def cancel_retraces(path, rel_tol=1e-14):
    """Remove immediate back-tracking (a, b, a patterns), which is always a
    homotopy along the path itself."""
    stack = [path.nodes[0]]
    for z in path.nodes[1:]:
        if len(stack) >= 2:
            prev2 = stack[-2]
            scale = max(abs(z), abs(prev2), 1e-300)
            if abs(z - prev2) <= rel_tol * scale:
                stack.pop()
                continue
        stack.append(z)
    return Path(stack, anchor=path.anchor)


def _point_in_triangle(q, a, b, c):
    def cross(u, v):
        return u.real * v.imag - u.imag * v.real
    d1 = cross(b - a, q - a)
    d2 = cross(c - b, q - b)
    d3 = cross(a - c, q - c)
    neg = d1 < 0 or d2 < 0 or d3 < 0
    pos = d1 > 0 or d2 > 0 or d3 > 0
    return not (neg and pos)


def _triangle_clear(a, b, c, obstacles, margin):
    for q in obstacles:
        if is_inf(q):
            far = max(abs(a), abs(b), abs(c))
            if 2.0 / math.hypot(1.0, far) <= margin:
                return False
            continue
        if _point_in_triangle(q, a, b, c):
            return False
        d = min(_chordal_seg_to_point(a, b, q),
                _chordal_seg_to_point(b, c, q),
                _chordal_seg_to_point(a, c, q))
        if d <= margin:
            return False
    return True


def simplify_path(path, obstacles, margin=2 * EPS_CLEAR):
    """Drop interior nodes whose corridor (the swept triangle) stays clear
    of the obstacle points by the margin; endpoints and homotopy class are
    preserved by the corridor check."""
    path = cancel_retraces(path)
    if path.anchor is not None:
        obstacles = [q if is_inf(q) else q - path.anchor for q in obstacles]
    nodes = list(path.nodes)
    changed = True
    passes = 0
    while changed and passes <= len(path.nodes):
        changed = False
        passes += 1
        i = 1
        while i < len(nodes) - 1:
            a, b, c = nodes[i - 1], nodes[i], nodes[i + 1]
            if a == c or _triangle_clear(a, b, c, obstacles, margin):
                del nodes[i]
                changed = True
            else:
                i += 1
    return Path(nodes, anchor=path.anchor)
