"""Analysis of the rational base map: evaluation with derivatives, critical
points and values, postsingular orbits, fixed points, preimage solving.

Polynomials are coefficient tuples in ascending degree. Roots come from the
companion matrix (``numpy.roots``) and are polished by Newton; multiple
roots are recovered by clustering, which is robust at the low degrees
(<= 8) this engine targets.
"""

import cmath
import math

import numpy as np

from .errors import (AmbiguousCycle, NotPostsingularlyFinite,
                     RootFindingFailure)
from .sphere import INF, Configuration, chordal, is_inf

EPS_FIX = 1e-9          # fixed-point residual |g(x) - x|
REPELLING_MARGIN = 1e-9  # repelling means |multiplier| > 1 + this
_CLUSTER_TOL = 1e-6     # root clustering scale for multiplicity detection


# ---------------------------------------------------------------------------
# polynomial helpers (ascending coefficients)

def _trim(coeffs, rel=1e-13):
    coeffs = [complex(c) for c in coeffs]
    top = max((abs(c) for c in coeffs), default=0.0)
    if top == 0.0:
        return (0j,)
    while len(coeffs) > 1 and abs(coeffs[-1]) <= rel * top:
        coeffs.pop()
    return tuple(coeffs)


def _peval(coeffs, z):
    acc = 0j
    for c in reversed(coeffs):
        acc = acc * z + c
    return acc


def _pderiv(coeffs):
    if len(coeffs) <= 1:
        return (0j,)
    return tuple(k * c for k, c in enumerate(coeffs) if k > 0)


def _pmul(p, q):
    out = [0j] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        for j, b in enumerate(q):
            out[i + j] += a * b
    return tuple(out)


def _padd(p, q, sign=1):
    n = max(len(p), len(q))
    out = [0j] * n
    for i, a in enumerate(p):
        out[i] += a
    for i, b in enumerate(q):
        out[i] += sign * b
    return tuple(out)


def _pshift(coeffs, p):
    """Coefficients of z -> poly(p + z) via repeated synthetic division."""
    work = list(coeffs)
    out = []
    while work:
        rem = 0j
        for i in range(len(work) - 1, -1, -1):
            rem = rem * p + work[i]
            work[i] = rem
        out.append(work[0])
        work = work[1:]
    return _trim(out, rel=0.0)


def _proots(coeffs):
    coeffs = _trim(coeffs)
    if len(coeffs) == 1:
        return []
    arr = np.array(list(reversed(coeffs)), dtype=complex)
    try:
        roots = np.roots(arr)
    except Exception as exc:  # pragma: no cover - numpy failure path
        raise RootFindingFailure(str(exc))
    if not np.all(np.isfinite(roots)):
        raise RootFindingFailure("non-finite roots from companion matrix")
    polished = []
    dcoeffs = _pderiv(coeffs)
    for r in roots:
        r = complex(r)
        for _ in range(4):
            fv = _peval(coeffs, r)
            dv = _peval(dcoeffs, r)
            if abs(dv) < 1e-14 * max(1.0, abs(fv)):
                break
            step = fv / dv
            if not cmath.isfinite(step):
                break
            r2 = r - step
            if abs(_peval(coeffs, r2)) <= abs(fv):
                r = r2
            else:
                break
        polished.append(r)
    return polished


def _cluster(points, tol):
    """Greedy clustering: list of (centroid, count)."""
    clusters = []
    for z in points:
        for idx, (c, n) in enumerate(clusters):
            if abs(z - c) <= tol * max(1.0, abs(c)):
                clusters[idx] = ((c * n + z) / (n + 1), n + 1)
                break
        else:
            clusters.append((z, 1))
    return clusters


# ---------------------------------------------------------------------------

class RationalMap:
    """g = N/D of degree >= 2 with no common roots."""

    __slots__ = ("numerator", "denominator", "_dnum", "_dden", "degree",
                 "_cache")

    def __init__(self, numerator, denominator=(1.0,), check=True):
        N = _trim(numerator)
        D = _trim(denominator)
        if D == (0j,):
            raise ValueError("zero denominator")
        self.numerator = N
        self.denominator = D
        self._dnum = _pderiv(N)
        self._dden = _pderiv(D)
        self.degree = max(len(N), len(D)) - 1
        self._cache = {}
        if check:
            if self.degree < 2:
                raise ValueError("degree must be at least 2")
            if len(N) > 1 and len(D) > 1:
                for rn in _proots(N):
                    for rd in _proots(D):
                        if chordal(rn, rd) <= 1e-8:
                            raise ValueError(
                                "numerator and denominator share a root near %r" % rn)

    # -- basic evaluation ---------------------------------------------------

    def __call__(self, z):
        return self.evaluate_with_derivative(z)[0]

    def evaluate_with_derivative(self, z):
        """(g(z), chart derivative). The derivative is taken between the
        standard affine charts, swapping to w = 1/z at either end as needed,
        so chaining the returned values along an orbit gives cycle
        multipliers that are correct through oo."""
        if is_inf(z):
            return self._eval_at_infinity()
        Nv = _peval(self.numerator, z)
        Dv = _peval(self.denominator, z)
        dNv = _peval(self._dnum, z)
        dDv = _peval(self._dden, z)
        if Dv == 0:
            # pole: value oo; derivative of 1/g = (D/N)' at z
            der = (dDv * Nv - Dv * dNv) / (Nv * Nv)
            return INF, der
        w = Nv / Dv
        if not cmath.isfinite(w):
            return INF, (dDv * Nv - Dv * dNv) / (Nv * Nv)
        der = (dNv * Dv - Nv * dDv) / (Dv * Dv)
        return w, der

    def _eval_at_infinity(self):
        N, D = self.numerator, self.denominator
        n, m = len(N) - 1, len(D) - 1
        revN = tuple(reversed(N))  # revN(w) = w^n N(1/w)
        revD = tuple(reversed(D))
        if n > m:
            # g(oo) = oo; chart map w -> w^{n-m} revD(w)/revN(w)
            if n - m == 1:
                return INF, revD[0] / revN[0]
            return INF, 0j
        if n < m:
            # g(oo) = 0
            if m - n == 1:
                return 0j, revN[0] / revD[0]
            return 0j, 0j
        value = revN[0] / revD[0]
        q = _padd(_pmul(_pderiv(revN), revD), _pmul(revN, _pderiv(revD)), sign=-1)
        return value, _peval(q, 0j) / (revD[0] * revD[0])

    def fixes_infinity(self):
        return len(self.numerator) - 1 > len(self.denominator) - 1

    # -- derived maps ---------------------------------------------------------

    def shifted(self, p):
        """T with T(w) = g(p + w) - p, as a rational map (unchecked)."""
        Nsh = _pshift(self.numerator, p)
        Dsh = _pshift(self.denominator, p)
        A = _padd(Nsh, tuple(p * c for c in Dsh), sign=-1)
        return RationalMap(A, Dsh, check=False)

    def reciprocal_conjugate(self):
        """h with h(w) = 1/g(1/w) (anchor oo becomes anchor 0)."""
        N, D = self.numerator, self.denominator
        n, m = len(N) - 1, len(D) - 1
        k = max(n, m)
        # 1/g(1/w) = w^{k-m} revD(w) / (w^{k-n} revN(w))
        hN = (0j,) * (k - m) + tuple(reversed(D))
        hD = (0j,) * (k - n) + tuple(reversed(N))
        return RationalMap(hN, hD, check=False)

    def to_json(self):
        return {
            "numerator": [[c.real, c.imag] for c in self.numerator],
            "denominator": [[c.real, c.imag] for c in self.denominator],
        }

    @classmethod
    def from_json(cls, obj):
        return cls([complex(a, b) for a, b in obj["numerator"]],
                   [complex(a, b) for a, b in obj["denominator"]])

    def __repr__(self):
        return "RationalMap(%r, %r)" % (self.numerator, self.denominator)


def compose(g1, g2):
    """g1 o g2 as a rational map."""
    N1, D1 = g1.numerator, g1.denominator
    N2, D2 = g2.numerator, g2.denominator
    K = max(len(N1), len(D1)) - 1

    def plug(coeffs):
        # sum_i c_i N2^i D2^{K-i}
        acc = (0j,)
        powN = [(1 + 0j,)]
        powD = [(1 + 0j,)]
        for _ in range(K):
            powN.append(_pmul(powN[-1], N2))
            powD.append(_pmul(powD[-1], D2))
        for i, c in enumerate(coeffs):
            term = tuple(c * x for x in _pmul(powN[i], powD[K - i]))
            acc = _padd(acc, term)
        return acc

    return RationalMap(plug(N1), plug(D1))


def iterate(g, m):
    """m-fold composition g^{om}."""
    if m < 1:
        raise ValueError("m must be >= 1")
    out = g
    for _ in range(m - 1):
        out = compose(g, out)
    return out


# ---------------------------------------------------------------------------

def critical_points(g):
    """All critical points with local degrees; total count 2d-2."""
    if "crit" in g._cache:
        return g._cache["crit"]
    W = _trim(_padd(_pmul(g._dnum, g.denominator),
                    _pmul(g.numerator, g._dden), sign=-1))
    finite = _proots(W) if len(W) > 1 else []
    out = [(c, n + 1) for c, n in _cluster(finite, _CLUSTER_TOL)]
    used = sum(n - 1 for _, n in out)
    at_inf = 2 * g.degree - 2 - used
    if at_inf < 0:
        raise RootFindingFailure("critical multiplicities exceed 2d-2")
    if at_inf > 0:
        out.append((INF, at_inf + 1))
    g._cache["crit"] = out
    return out


def critical_values(g):
    if "cv" in g._cache:
        return g._cache["cv"]
    vals = []
    for c, _ in critical_points(g):
        v = g(c)
        if not any(chordal(v, w) <= 1e-9 for w in vals):
            vals.append(v)
    g._cache["cv"] = vals
    return vals


def preimages(g, w):
    """All d solutions of g(z) = w, as (point, multiplicity) pairs."""
    d = g.degree
    if is_inf(w):
        poly = g.denominator
    else:
        poly = _padd(g.numerator, tuple(w * c for c in g.denominator), sign=-1)
    poly = _trim(poly)
    roots = _proots(poly) if len(poly) > 1 else []
    # polish against the map itself
    polished = []
    for r in roots:
        for _ in range(3):
            gv, gd = g.evaluate_with_derivative(r)
            if is_inf(gv) or is_inf(w) or gd == 0:
                break
            step = (gv - w) / gd
            if not cmath.isfinite(step):
                break
            r2 = r - step
            gv2 = g(r2)
            if not is_inf(gv2) and abs(gv2 - w) <= abs(gv - w):
                r = r2
            else:
                break
        polished.append(r)
    out = list(_cluster(polished, _CLUSTER_TOL))
    missing = d - len(poly) + 1
    if missing > 0:
        out.append((INF, missing))
    if sum(n for _, n in out) != d:
        raise RootFindingFailure("preimage multiplicities do not sum to d")
    return out


# ---------------------------------------------------------------------------

class FixedPointData:
    """Location, multiplier, stability type and membership in P."""

    __slots__ = ("location", "multiplier", "type", "in_P")

    def __init__(self, location, multiplier, in_P=False):
        self.location = location
        self.multiplier = multiplier
        self.in_P = in_P
        m = abs(multiplier)
        if m <= 1e-9:
            self.type = "superattracting"
        elif m < 1.0 - 1e-9:
            self.type = "attracting"
        elif m <= 1.0 + REPELLING_MARGIN:
            self.type = "indifferent"
        else:
            self.type = "repelling"

    def __repr__(self):
        return "FixedPointData(%r, mult=%r, %s%s)" % (
            self.location, self.multiplier, self.type,
            ", in P" if self.in_P else "")


def fixed_points(g, P=None):
    """Solutions of g(z) = z, including oo when fixed, with multipliers."""
    poly = _padd(g.numerator, (0j,) + g.denominator, sign=-1)
    poly = _trim(poly)
    roots = _proots(poly) if len(poly) > 1 else []
    pts = [c for c, _ in _cluster(roots, _CLUSTER_TOL)]
    out = []
    for z in pts:
        # Newton polish on g(z) - z
        for _ in range(4):
            gv, gd = g.evaluate_with_derivative(z)
            if is_inf(gv) or abs(gd - 1.0) < 1e-14:
                break
            z2 = z - (gv - z) / (gd - 1.0)
            gv2 = g(z2)
            if not is_inf(gv2) and abs(gv2 - z2) <= abs(gv - z):
                z = z2
            else:
                break
        _, mult = g.evaluate_with_derivative(z)
        out.append(FixedPointData(z, mult, _in_config(z, P)))
    if g.fixes_infinity():
        _, mult = g.evaluate_with_derivative(INF)
        out.append(FixedPointData(INF, mult, _in_config(INF, P)))
    return out


def _in_config(z, P):
    if P is None:
        return False
    pts = P.points if isinstance(P, Configuration) else P
    return any(chordal(z, p) <= 1e-6 for p in pts)


# ---------------------------------------------------------------------------

class PostsingularAnalysis:
    """Critical data, orbit portrait and the snapped postsingular set."""

    __slots__ = ("critical", "critical_values", "postsingular", "portrait",
                 "transitions", "is_psf")

    def __init__(self, critical, crit_values, postsingular, portrait,
                 transitions):
        self.critical = critical
        self.critical_values = crit_values
        self.postsingular = postsingular
        self.portrait = portrait
        self.transitions = transitions
        self.is_psf = True

    @property
    def P(self):
        return self.postsingular

    def to_json(self):
        return {
            "critical": [[_enc(c), n] for c, n in self.critical],
            "critical_values": [_enc(v) for v in self.critical_values],
            "postsingular": self.postsingular.to_json(),
            "portrait": [{"value": _enc(v), "preperiod": a, "period": b}
                         for v, a, b in self.portrait],
            "transitions": {a: b for a, b in self.transitions.items()},
            "is_psf": self.is_psf,
        }


def _enc(p):
    if is_inf(p):
        return "inf"
    return [p.real, p.imag]


def _refine_cycle(g, seed, period):
    """Newton on g^{op}(z) - z; returns the refined length-p cycle."""
    if is_inf(seed):
        return [INF]
    z = seed
    for _ in range(60):
        w, deriv = z, 1 + 0j
        hit_inf = False
        for _ in range(period):
            w, dw = g.evaluate_with_derivative(w)
            if is_inf(w):
                hit_inf = True
                break
            deriv *= dw
        if hit_inf:
            break
        if abs(w - z) < 1e-14 * max(1.0, abs(z)):
            break
        denom = deriv - 1.0
        if abs(denom) < 1e-12:
            break
        z = z - (w - z) / denom
    cycle = [z]
    for _ in range(period - 1):
        cycle.append(g(cycle[-1]))
    return cycle


def _cycle_multiplier(g, cycle):
    mult = 1 + 0j
    for z in cycle:
        _, d = g.evaluate_with_derivative(z)
        mult *= d
    return mult


def postsingular_analysis(g, max_orbit=200, eps_cycle=1e-6):
    """Iterate the critical values until every orbit lands on a repelling or
    superattracting cycle; snap cycles by Newton and assemble P.

    Raises NotPostsingularlyFinite when an orbit fails to close, or closes
    only onto an attracting/indifferent cycle (which a psf map cannot have,
    so the orbit is converging without landing).
    """
    crit = critical_points(g)
    cvals = critical_values(g)
    crit_pts = [c for c, _ in crit]

    points = []        # snapped P under construction
    portrait = []

    def register(p):
        for q in points:
            if chordal(p, q) <= 1e-9:
                return points.index(q)
        points.append(p)
        return len(points) - 1

    for v in cvals:
        orbit = [v]
        closed = False
        for _ in range(max_orbit):
            z = orbit[-1]
            w = g(z)
            hit = None
            for i, prev in enumerate(orbit):
                if chordal(w, prev) < eps_cycle:
                    hit = i
                    break
            orbit.append(w)
            if hit is None:
                continue
            preperiod, period = hit, len(orbit) - 1 - hit
            cycle = _refine_cycle(g, orbit[hit], period)
            check = _refine_cycle(g, orbit[hit + period], period)
            if chordal(cycle[0], check[0]) > 1e-7:
                raise AmbiguousCycle(
                    "orbit points within eps_cycle refine to different cycles")
            mult = _cycle_multiplier(g, cycle)
            super_ = any(chordal(z0, c) <= 1e-6
                         for z0 in cycle for c in crit_pts)
            if not super_ and abs(mult) <= 1.0 + REPELLING_MARGIN:
                raise NotPostsingularlyFinite(
                    "orbit of %r approaches a non-repelling, non-super cycle "
                    "(|mult| = %.6g); map is not postsingularly finite"
                    % (v, abs(mult)))
            for p in orbit[:preperiod]:
                register(p)
            for p in cycle:
                register(p)
            portrait.append((v, preperiod, period))
            closed = True
            break
        if not closed:
            raise NotPostsingularlyFinite(
                "orbit of %r did not close within %d steps" % (v, max_orbit))

    # deterministic labels: finite points lexicographically, oo last
    order = sorted(range(len(points)),
                   key=lambda i: (1, 0.0, 0.0) if is_inf(points[i])
                   else (0, points[i].real, points[i].imag))
    pts = [points[i] for i in order]
    labels = ["p%d" % i for i in range(len(pts))]
    config = Configuration(labels, pts, min_size=1)

    transitions = {}
    for i, p in enumerate(pts):
        w = g(p)
        best, dist = None, math.inf
        for j, q in enumerate(pts):
            dd = chordal(w, q)
            if dd < dist:
                best, dist = j, dd
        if dist > 1e-7:
            raise NotPostsingularlyFinite(
                "snapped postsingular set is not forward invariant at %r" % p)
        transitions[i] = best

    return PostsingularAnalysis(crit, cvals, config, portrait, transitions)
