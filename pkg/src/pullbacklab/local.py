"""Extended-range deviation arithmetic at repelling fixed punctures.

A marked orbit falling into a repelling fixed point p of the base map
contracts by 1/|g'(p)| per pullback step, so its deviation from p leaves
double precision relative to p after a few dozen steps and absolutely
after a few hundred. Deviations are therefore carried as mantissa * 2**e
pairs, and one inverse step is computed either by a Newton solve on the
translated map T(w) = g(p + w) - p (while the deviation is comfortably
representable) or as multiplication by 1/lambda* once the quadratic Taylor
tail falls below double rounding, where it is the correctly rounded result
rather than an approximation.

The translation anchor p is the snapped double puncture; the true fixed
point sits at p + eps_star with eps_star recovered by Newton, so tracked
deviations are measured from the true fixed point and decay cleanly.
"""

import math

from .errors import BranchJumpSuspected
from .ratmap import REPELLING_MARGIN
from .sphere import INF, is_inf

# |eta| above which the inverse step re-solves the translated map; below it
# the linearized step carries relative error O(|eta|) per step, which sums
# to < 1e-11 over any run
_DEEP_CUTOFF_LOG2 = math.log(1e-12, 2)
_LOG2_10 = math.log2(10.0)


class ScaledComplex:
    """value = m * 2**e with 0.5 <= |m| < 1 after normalization."""

    __slots__ = ("m", "e")

    def __init__(self, m, e=0):
        m = complex(m)
        if m == 0:
            raise ValueError("ScaledComplex cannot hold zero")
        a = abs(m)
        _, k = math.frexp(a)  # a = f * 2**k, f in [0.5, 1)
        self.m = complex(math.ldexp(m.real, -k), math.ldexp(m.imag, -k))
        self.e = e + k

    @classmethod
    def from_complex(cls, z):
        return cls(z, 0)

    def to_complex(self):
        """Plain complex value; None when outside double range."""
        if not -1020 < self.e < 1020:
            return None
        return complex(math.ldexp(self.m.real, self.e),
                       math.ldexp(self.m.imag, self.e))

    def mul_complex(self, w):
        return ScaledComplex(self.m * w, self.e)

    def sub(self, other):
        gap = other.e - self.e
        if gap < -120:
            return self
        if gap > 120:
            return ScaledComplex(-other.m, other.e)
        shifted = complex(math.ldexp(other.m.real, gap),
                          math.ldexp(other.m.imag, gap))
        diff = self.m - shifted
        if diff == 0:
            raise ValueError("exact cancellation in ScaledComplex.sub")
        return ScaledComplex(diff, self.e)

    def log2_abs(self):
        return math.log2(abs(self.m)) + self.e

    def log10_abs(self):
        return self.log2_abs() / _LOG2_10

    def abs_float(self):
        """|value| as a float; 0.0 / inf on under/overflow."""
        try:
            return math.ldexp(abs(self.m), self.e)
        except OverflowError:
            return math.inf

    def ratio_abs(self, other):
        """|self| / |other| as a float (assumes moderate exponent gap)."""
        return math.ldexp(abs(self.m) / abs(other.m), self.e - other.e)

    def __repr__(self):
        return "ScaledComplex(%r, %d)" % (self.m, self.e)


class LocalFixedChart:
    """Canonical inverse branch of g fixing a snapped repelling point.

    For a finite anchor p the chart works with T(w) = g(p + w) - p; for the
    anchor at infinity it conjugates by w = 1/z first. ``inv_step`` applies
    the branch of g^{-1} fixing the anchor to a deviation eta measured from
    the true fixed point p + eps_star.
    """

    def __init__(self, g, p, repelling_margin=REPELLING_MARGIN):
        self.puncture = p
        if is_inf(p):
            self.T = g.reciprocal_conjugate().shifted(0.0)
            self.chordal_factor = 2.0
        else:
            self.T = g.shifted(p)
            self.chordal_factor = 2.0 / (1.0 + abs(p) ** 2)
        self.eps_star = self._solve_offset()
        _, lam = self.T.evaluate_with_derivative(self.eps_star)
        if not abs(lam) > 1.0 + repelling_margin:
            raise ValueError(
                "anchor %r is not a repelling fixed point (|mult| = %.6g)"
                % (p, abs(lam)))
        self.lam = lam
        self.inv_lam = 1.0 / lam
        # second-order coefficient, for the deep-regime residual bound
        h = 1e-5
        self.quad = abs(self.T(h) + self.T(-h) - 2.0 * self.T(0j)) / (2 * h * h)

    def _solve_offset(self):
        d = 0j
        for _ in range(50):
            fv, fd = self.T.evaluate_with_derivative(d)
            if is_inf(fv):
                raise ValueError("translated map has a pole at the anchor")
            step = (fv - d) / (fd - 1.0)
            d = d - step
            if abs(step) <= 1e-18:
                break
        if abs(d) > 1e-9:
            raise ValueError("anchor is not within tolerance of a fixed point")
        return d

    # -- dynamics -----------------------------------------------------------

    def inv_step(self, eta):
        """One inverse-branch step: the eta' with T(eps* + eta') = eps* + eta."""
        if eta.log2_abs() < _DEEP_CUTOFF_LOG2:
            return eta.mul_complex(self.inv_lam)
        target = eta.to_complex() + self.eps_star
        w = self.eps_star + (target - self.eps_star) * self.inv_lam
        for it in range(60):
            fv, fd = self.T.evaluate_with_derivative(w)
            if is_inf(fv) or fd == 0:
                raise BranchJumpSuspected("local inverse left its chart")
            step = (fv - target) / fd
            w = w - step
            if abs(step) <= 1e-16 * abs(w):
                break
        else:
            raise BranchJumpSuspected("local inverse Newton did not converge")
        return ScaledComplex(w - self.eps_star)

    def deviation_of(self, x):
        """Deviation of an absolute position from the true fixed point."""
        if is_inf(self.puncture):
            w = 0j if is_inf(x) else 1.0 / x
            return ScaledComplex(w - self.eps_star)
        return ScaledComplex((x - self.puncture) - self.eps_star)

    def materialize(self, eta):
        """Best double representation of the tracked position."""
        z = eta.to_complex()
        if is_inf(self.puncture):
            if z is None or z == -self.eps_star:
                return INF
            w = self.eps_star + z
            return INF if w == 0 else 1.0 / w
        if z is None:
            return self.puncture
        return self.puncture + (self.eps_star + z)

    # -- reporting ------------------------------------------------------------

    def chordal_dist_to_anchor(self, eta):
        """Chordal distance to the anchor puncture; may underflow to 0.0."""
        try:
            return math.ldexp(self.chordal_factor * abs(eta.m), eta.e)
        except OverflowError:
            return math.inf

    def log10_dist_to_anchor(self, eta):
        return math.log10(self.chordal_factor) + eta.log10_abs()

    def step_residual(self, eta_prev, eta_next):
        """Chordal bound on |g(x_{n+1}) - x_n| for an anchored step."""
        if eta_next.log2_abs() < _DEEP_CUTOFF_LOG2:
            # linearized step: residual bounded by the quadratic tail
            log2_res = 2.0 * eta_next.log2_abs() + math.log2(self.quad + 1e-300)
            log2_res += math.log2(self.chordal_factor)
            if log2_res < -1070:
                return 0.0
            return 2.0 ** log2_res
        fwd = self.T(self.eps_star + eta_next.to_complex())
        res = abs(fwd - (self.eps_star + eta_prev.to_complex()))
        return self.chordal_factor * res

    def check_step(self, eta_prev, eta_next, rel_tol=1e-9):
        """Replay one anchored step: does T map eta_next back onto eta_prev?

        Works in scaled arithmetic, so it stays meaningful far below double
        range: compares lambda*eta_next (+ quadratic term when it matters)
        against eta_prev.
        """
        if eta_next.log2_abs() >= _DEEP_CUTOFF_LOG2:
            res = self.step_residual(eta_prev, eta_next)
            scale = self.chordal_dist_to_anchor(eta_prev)
            return res <= rel_tol * max(scale, 1e-300)
        back = eta_next.mul_complex(self.lam)
        try:
            rel = back.sub(eta_prev)
        except ValueError:
            return True  # exact replay
        return rel.log2_abs() - eta_prev.log2_abs() <= math.log2(rel_tol)
