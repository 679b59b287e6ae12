"""Annulus moduli, geodesic-length bounds, and upper bounds for hyperbolic
quantities on punctured spheres.

Everything here is one-sided on purpose: only *upper* bounds on lengths and
distances are produced (via punctured-disk comparison densities and upper
Riemann sums), which is exactly what the certificate threshold needs. No
lower-bound machinery exists, so certificates stay sound.
"""

import math
from cmath import phase as cmath_phase

from .errors import NoApplicableComparison
from .sphere import Configuration, is_inf

ELL_STAR = math.log(3.0 + 2.0 * math.sqrt(2.0))

TWO_PI = 2.0 * math.pi

_REFINE_TOL = 0.01   # stop refining when successive estimates agree to 1%
_ROUND_UP = 1.01     # reported bounds carry this upward pad


def ell_star():
    """Short-geodesic threshold log(3 + 2*sqrt(2))."""
    return ELL_STAR


class LengthBound:
    """An upper bound for a hyperbolic length, tagged with its subject."""

    __slots__ = ("value", "kind", "subject")

    def __init__(self, value, subject=""):
        value = float(value)
        if not (value >= 0.0 and math.isfinite(value)):
            raise ValueError("length bound must be finite and >= 0")
        self.value = value
        self.kind = "upper"
        self.subject = subject

    def __float__(self):
        return self.value

    def to_json(self):
        return {"value": self.value, "kind": self.kind, "subject": self.subject}

    def __repr__(self):
        return "LengthBound(%.6g, %s)" % (self.value, self.subject or "-")


class RoundAnnulus:
    """Round annulus r_in < |z - center| < r_out, kept in log-radius form so
    extreme moduli survive; ``anchor`` marks a translated working chart
    (absolute center = anchor + center)."""

    __slots__ = ("center", "log_rin", "log_rout", "anchor")

    def __init__(self, center, log_rin, log_rout, anchor=None):
        if not (math.isfinite(log_rin) and math.isfinite(log_rout)):
            raise ValueError("log radii must be finite")
        if not log_rin < log_rout:
            raise ValueError("need r_in < r_out")
        self.center = complex(center)
        self.log_rin = float(log_rin)
        self.log_rout = float(log_rout)
        self.anchor = None if anchor is None else complex(anchor)

    @classmethod
    def from_radii(cls, center, r_in, r_out, anchor=None):
        if not (r_in > 0 and r_out > r_in):
            raise ValueError("need 0 < r_in < r_out")
        return cls(center, math.log(r_in), math.log(r_out), anchor=anchor)

    @property
    def r_in(self):
        return math.exp(self.log_rin)

    @property
    def r_out(self):
        return math.exp(self.log_rout)

    def core_radius(self):
        return math.exp(0.5 * (self.log_rin + self.log_rout))

    def to_json(self):
        obj = {"center": [self.center.real, self.center.imag],
               "log_rin": self.log_rin, "log_rout": self.log_rout}
        if self.anchor is not None:
            obj["anchor"] = [self.anchor.real, self.anchor.imag]
        return obj

    @classmethod
    def from_json(cls, obj):
        anchor = obj.get("anchor")
        return cls(complex(*obj["center"]), obj["log_rin"], obj["log_rout"],
                   anchor=None if anchor is None else complex(*anchor))

    def __repr__(self):
        return "RoundAnnulus(center=%r, log radii %.4g..%.4g%s)" % (
            self.center, self.log_rin, self.log_rout,
            "" if self.anchor is None else ", anchored at %r" % self.anchor)


def annulus_modulus(annulus):
    """log(r_out/r_in) / (2 pi); conformally invariant, chart independent."""
    return (annulus.log_rout - annulus.log_rin) / TWO_PI


def geodesic_length_bound(mod, subject="core"):
    """pi / mod bounds the core-geodesic length in any hyperbolic surface
    containing the annulus essentially."""
    if not mod > 0:
        raise ValueError("modulus must be positive")
    return LengthBound(math.pi / mod, subject=subject)


# ---------------------------------------------------------------------------
# punctured-disk comparison densities

class DiskComparisons:
    """Per-puncture comparison disks D(p, R_p) - {p} for a finite puncture
    set; R_p is the distance from p to its nearest other finite puncture,
    so each punctured disk embeds in the complement of the full set and its
    density dominates by domain monotonicity."""

    __slots__ = ("pairs",)

    def __init__(self, points):
        if isinstance(points, Configuration):
            points = points.points
        finite = [complex(p) for p in points if not is_inf(p)]
        pairs = []
        for i, p in enumerate(finite):
            others = [abs(q - p) for j, q in enumerate(finite) if j != i]
            if others:
                pairs.append((p, min(others)))
        self.pairs = tuple(pairs)

    def density(self, z):
        """min over applicable punctures of 1/(d log(R/d)), d = |z - p|."""
        best = math.inf
        for p, R in self.pairs:
            d = abs(z - p)
            if d <= 0.0 or d >= R:
                continue
            best = min(best, 1.0 / (d * math.log(R / d)))
        if not math.isfinite(best):
            raise NoApplicableComparison(
                "point %r lies in no punctured-disk comparison region" % (z,))
        return best


def density_upper_bound(P, z):
    """Upper bound for the hyperbolic density of the puncture complement."""
    return DiskComparisons(P).density(complex(z))


def _segment_upper_sum(density, a, b):
    """Adaptive upper Riemann sum of ``density`` along the segment [a, b]:
    per-subinterval max of sampled densities, refined until successive
    estimates agree to 1%, then rounded up by the same margin."""
    L = abs(b - a)
    if L == 0.0:
        return 0.0
    prev = None
    n = 4
    while True:
        total = 0.0
        samples = [density(a + (b - a) * (i / (2 * n))) for i in range(2 * n + 1)]
        for i in range(n):
            rho = max(samples[2 * i], samples[2 * i + 1], samples[2 * i + 2])
            total += rho * (L / n)
        if prev is not None and abs(total - prev) <= _REFINE_TOL * total:
            return max(total, prev) * _ROUND_UP
        prev = total
        n *= 2
        if n > 4096:
            return prev * _ROUND_UP


def path_length_upper_bound(P, path, subject="path"):
    """Upper Riemann sum of the comparison density along the polyline."""
    comp = DiskComparisons(P)
    nodes = path.absolute_nodes() if hasattr(path, "absolute_nodes") else \
        [complex(z) for z in path]
    total = 0.0
    for a, b in zip(nodes, nodes[1:]):
        total += _segment_upper_sum(comp.density, a, b)
    return LengthBound(total, subject=subject)


# ---------------------------------------------------------------------------
# scaled bounds near a single puncture (deep anchored steps)

def punctured_disk_radial_bound(R, log_r_from, log_r_to):
    """Exact punctured-disk distance between radii on a common ray:
    |log( log(R/r_to) / log(R/r_from) )| with radii given as logs."""
    lR = math.log(R)
    u, v = lR - log_r_from, lR - log_r_to
    if u <= 0 or v <= 0:
        raise NoApplicableComparison("radius outside the comparison disk")
    return abs(math.log(v / u))


def anchored_step_bound(R, eta_a, eta_b):
    """Upper bound for the punctured-disk distance between two scaled
    deviations from the puncture.

    Uses the length of the circular-arc-then-radial path (principal angle
    difference): in polar coordinates the punctured-disk metric is
    |dz| / (r log(R/r)), so the arc costs dtheta / log(R/r_a) and the
    radial leg has the exact log-log closed form. This path never crosses
    the puncture and its cost vanishes with depth, unlike a straight chord
    between nearly opposite rays."""
    ln2 = math.log(2.0)
    la = math.log(abs(eta_a.m)) + eta_a.e * ln2
    lb = math.log(abs(eta_b.m)) + eta_b.e * ln2
    lR = math.log(R)
    if la >= lR or lb >= lR:
        raise NoApplicableComparison("deviation outside the comparison disk")
    dtheta = abs(cmath_phase(eta_b.m / eta_a.m))
    # turn at whichever radius makes the arc cheaper; both orders are paths
    arc = dtheta / max(lR - la, lR - lb)
    return (arc + punctured_disk_radial_bound(R, la, lb)) * _ROUND_UP


def teich_step_bound(run, n):
    """Upper bound for the Teichmueller distance between fiber points n-1
    and n of a pullback run.

    The fiber inclusion is holomorphic, so the fiber hyperbolic metric
    dominates the Teichmueller metric; the bound integrates the comparison
    density along each marked coordinate's connecting path (coordinates are
    moved one at a time, other marked positions joining the punctures).
    """
    total = 0.0
    for kind, payload in run.step_connectors(n):
        if kind == "zero":
            continue
        if kind == "path":
            path, punctures = payload
            total += float(path_length_upper_bound(punctures, path))
        elif kind == "anchored":
            R, eta_a, eta_b = payload
            total += anchored_step_bound(R, eta_a, eta_b)
        else:  # pragma: no cover
            raise ValueError("unknown connector kind %r" % kind)
    return total
