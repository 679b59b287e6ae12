"""Classification of pullback runs per the unit-disk dichotomy, and
emission/verification of quantitative Levy-multicurve certificates.

A certificate witnesses the short-geodesic pigeonhole: a round annulus
separating a collapsing cluster from the rest of the marked configuration,
whose modulus exceeds (k+4) pi e^{k d0} / ell* for an upper bound d0 of the
first Teichmueller step. Emission additionally records injectivity
evidence for the k-fold forward advance of the annulus and the chain of
degree-1 inverse lifts of its core curve. All checks are floating point:
certificates are numerical evidence, with every tolerance embedded.
"""

import math

import numpy as np

from .errors import InjectivityUndetermined, NoSeparatingAnnulus
from .hyperbolic import ELL_STAR, RoundAnnulus, annulus_modulus
from .lifting import Path, lift_closed_curve, _newton_preimage
from .ratmap import critical_points
from .sphere import chordal, encode_point, is_inf

TWO_PI = 2.0 * math.pi
N_SAMP = 512        # boundary sampling for the injectivity test
N_CURVE = 256       # node count of stored representative curves
ANNULUS_MARGIN = 0.05


# ---------------------------------------------------------------------------
# classification

class Classification:
    """Verdict of a finished run: realized, obstructed, or undecided."""

    def __init__(self, verdict, **fields):
        self.verdict = verdict  # "realized" | "obstructed" | "undecided"
        self.x_star = fields.get("x_star")
        self.residual = fields.get("residual")
        self.multiplier = fields.get("multiplier")
        self.puncture = fields.get("puncture")
        self.puncture_label = fields.get("puncture_label")
        self.rate_estimate = fields.get("rate_estimate")
        self.certificate = fields.get("certificate")
        self.reason = fields.get("reason", "")

    def to_json(self):
        enc = lambda v: None if v is None else encode_point(v)
        return {
            "verdict": self.verdict,
            "x_star": enc(self.x_star),
            "residual": self.residual,
            "multiplier": enc(self.multiplier),
            "puncture": enc(self.puncture),
            "puncture_label": self.puncture_label,
            "rate_estimate": self.rate_estimate,
            "certificate": (self.certificate.to_json()
                            if self.certificate is not None else None),
            "reason": self.reason,
        }

    def __repr__(self):
        if self.verdict == "realized":
            return "Realized(x*=%r, residual=%.3g)" % (self.x_star, self.residual)
        if self.verdict == "obstructed":
            return "Obstructed(%r, rate~%.4g)" % (self.puncture, self.rate_estimate)
        return "Undecided(%s)" % self.reason


def classify_run(trace, g, punctures, tol=None):
    """Finalize the dichotomy verdict for a finished run trace."""
    from .fiber import Tolerances
    tol = tol or Tolerances()
    status = trace.status
    records = trace.records
    if status is None or not records:
        return Classification("undecided", reason="empty trace")

    if status.kind == "candidate_realized":
        final = records[-1]
        worst_res, x_star, mult = 0.0, None, None
        for label, entry in final["points"].items():
            if entry.get("type", "fixed") == "trivial":
                continue  # stabilized preimages are not fixed points of g
            if entry["mode"] != "free":
                return Classification("undecided",
                                      reason="anchored point in realized candidate")
            x = complex(*entry["value"])
            gx, gdx = g.evaluate_with_derivative(x)
            res = chordal(gx, x)
            worst_res = max(worst_res, res)
            if x_star is None:
                x_star, mult = x, gdx
            dmin = min(chordal(x, p) for p in punctures.points)
            if dmin <= 10 * tol.eps_P:
                return Classification("undecided",
                                      reason="limit too close to a puncture")
        if worst_res >= tol.eps_fix:
            return Classification(
                "undecided", reason="fixed-point residual %.3g" % worst_res)
        return Classification("realized", x_star=x_star, residual=worst_res,
                              multiplier=mult)

    if status.kind == "candidate_puncture":
        p = status.puncture
        gp, mult = g.evaluate_with_derivative(p)
        if chordal(gp, p) >= tol.eps_fix:
            return Classification(
                "undecided",
                reason="limit puncture is not fixed -- likely lifting fault")
        if not abs(mult) > 1.0 + 1e-9:
            return Classification(
                "undecided",
                reason="limit at a non-repelling puncture -- likely lifting fault")
        rate = _decay_rate(records, status.puncture_label)
        expected = 1.0 / abs(mult)
        if rate is not None and not 0.5 * expected < rate < 2.0 * expected:
            return Classification(
                "undecided",
                reason="decay rate %.4g far from 1/|g'(p)| = %.4g"
                       % (rate, expected))
        return Classification("obstructed", puncture=p,
                              puncture_label=status.puncture_label,
                              rate_estimate=rate, multiplier=mult)

    return Classification("undecided", reason=status.reason or "max_iters")


def _decay_rate(records, p_label, window=8):
    drops = []
    prev = None
    for rec in records[-(window + 1):]:
        best = None
        for entry in rec["points"].values():
            d = entry["dist_log10"].get(p_label)
            if d is not None and (best is None or d < best):
                best = d
        if prev is not None and best is not None:
            drops.append(best - prev)
        prev = best
    if not drops:
        return None
    return 10.0 ** (sum(drops) / len(drops))


# ---------------------------------------------------------------------------
# separating annuli

def find_separating_annulus(config, b_labels, cluster_labels,
                            margin=ANNULUS_MARGIN):
    """Round annulus centered at the cluster centroid, inner radius just
    past the cluster, outer radius just inside the nearest complement point
    (finite points only; oo always sits in the outer component)."""
    cluster_labels = list(cluster_labels)
    if len(cluster_labels) < 2:
        raise NoSeparatingAnnulus("cluster needs at least two points")
    cluster = [config.point(lab) for lab in cluster_labels]
    if any(is_inf(p) for p in cluster):
        raise NoSeparatingAnnulus("cluster containing oo needs a re-chart")
    center = sum(cluster) / len(cluster)
    r_in = (1.0 + margin) * max(abs(p - center) for p in cluster)
    rest = [p for lab, p in config
            if lab not in cluster_labels and not is_inf(p)]
    if not rest:
        raise NoSeparatingAnnulus("no finite complement point")
    r_out = (1.0 - margin) * min(abs(p - center) for p in rest)
    if r_in <= 0 or r_out <= r_in:
        raise NoSeparatingAnnulus(
            "cluster is not separated (r_in=%.3g, r_out=%.3g)" % (r_in, r_out))
    return RoundAnnulus.from_radii(center, r_in, r_out)


# ---------------------------------------------------------------------------
# injectivity evidence

def _circle(center, radius, n):
    th = np.linspace(0.0, TWO_PI, n + 1)
    return center + radius * np.exp(1j * th)


def _apply_map(gm, zs):
    out = np.empty(len(zs), dtype=complex)
    for i, z in enumerate(zs):
        w = gm(complex(z))
        if is_inf(w) or abs(w) > 1e12:
            raise InjectivityUndetermined(
                "tracked boundary image leaves the working chart")
        out[i] = w
    return out


def _winding(zs, q):
    rel = zs - q
    if np.any(rel == 0):
        return None
    ang = np.angle(rel[1:] / rel[:-1])
    return int(round(float(np.sum(ang)) / TWO_PI))


def _poly_min_dist(zs, q):
    a, b = zs[:-1], zs[1:]
    d = b - a
    L2 = (d * d.conjugate()).real
    t = np.zeros_like(L2)
    mask = L2 > 0
    t[mask] = ((q - a[mask]) * d[mask].conjugate()).real / L2[mask]
    t = np.clip(t, 0.0, 1.0)
    proj = a + t * d
    return float(np.min(np.abs(proj - q)))


def _segments_intersect_any(z1, z2, skip_adjacent):
    """Any proper crossing or collinear overlap between segment families."""
    a, b = z1[:-1], z1[1:]
    c, d = z2[:-1], z2[1:]
    n, m = len(a), len(c)
    A = a[:, None]
    B = b[:, None]
    C = c[None, :]
    D = d[None, :]

    def cross(u, v):
        return u.real * v.imag - u.imag * v.real

    d1 = cross(D - C, A - C)
    d2 = cross(D - C, B - C)
    d3 = cross(B - A, C - A)
    d4 = cross(B - A, D - A)
    proper = ((d1 * d2) < 0) & ((d3 * d4) < 0)

    scale = max(float(np.max(np.abs(b - a))), float(np.max(np.abs(d - c))), 1e-300)
    eps = (1e-10 * scale) ** 2
    collinear = (np.abs(d1) < eps) & (np.abs(d2) < eps) & \
                (np.abs(d3) < eps) & (np.abs(d4) < eps)
    # collinear segments only count when their boxes actually overlap
    lo1 = np.minimum(A.real, B.real) - 1e-12 * scale
    hi1 = np.maximum(A.real, B.real) + 1e-12 * scale
    lo2 = np.minimum(C.real, D.real)
    hi2 = np.maximum(C.real, D.real)
    overlap_x = (lo1 <= hi2) & (lo2 <= hi1)
    lo1i = np.minimum(A.imag, B.imag) - 1e-12 * scale
    hi1i = np.maximum(A.imag, B.imag) + 1e-12 * scale
    lo2i = np.minimum(C.imag, D.imag)
    hi2i = np.maximum(C.imag, D.imag)
    overlap_y = (lo1i <= hi2i) & (lo2i <= hi1i)
    hits = proper | (collinear & overlap_x & overlap_y)

    if skip_adjacent:
        idx = np.arange(n)
        jdx = np.arange(m)
        same = idx[:, None] == jdx[None, :]
        nbr = (np.abs(idx[:, None] - jdx[None, :]) == 1) | \
              (np.abs(idx[:, None] - jdx[None, :]) == n - 1)
        hits = hits & ~(same | nbr)
    return bool(np.any(hits))


def _is_simple(zs):
    return not _segments_intersect_any(zs, zs, skip_adjacent=True)


def injectivity_test(g, annulus, k, n_samp=N_SAMP, eps_cv=1e-6):
    """Conservative sufficient evidence that g^{ok} is injective on the
    annulus: for each forward stage, no critical point inside the tracked
    region (with clearance), simple and mutually disjoint boundary images,
    and a degree-1 closing inverse lift of the core curve.

    Raises InjectivityUndetermined on any failed check (which is not a
    proof of non-injectivity)."""
    anchor = annulus.anchor
    gm = g if anchor is None else g.shifted(anchor)
    crit = [c if anchor is None else c - anchor
            for c, _ in critical_points(g) if not is_inf(c)]
    inner = _circle(annulus.center, annulus.r_in, n_samp)
    outer = _circle(annulus.center, annulus.r_out, n_samp)
    core = _circle(annulus.center, annulus.core_radius(), n_samp)
    stages = []
    for j in range(k):
        clear = math.inf
        for c in crit:
            w_out = _winding(outer, c)
            w_in = _winding(inner, c)
            if w_out is None or w_in is None:
                raise InjectivityUndetermined("critical point on a boundary")
            if w_out != 0 and w_in == 0:
                raise InjectivityUndetermined(
                    "critical point %r inside tracked region at stage %d"
                    % (c, j))
            clear = min(clear, _poly_min_dist(inner, c),
                        _poly_min_dist(outer, c))
        if not clear > eps_cv:
            raise InjectivityUndetermined(
                "critical clearance %.3g at stage %d" % (clear, j))
        img_inner = _apply_map(gm, inner)
        img_outer = _apply_map(gm, outer)
        img_core = _apply_map(gm, core)
        if not _is_simple(img_inner):
            raise InjectivityUndetermined(
                "inner boundary image not simple at stage %d" % j)
        if not _is_simple(img_outer):
            raise InjectivityUndetermined(
                "outer boundary image not simple at stage %d" % j)
        if _segments_intersect_any(img_inner, img_outer, skip_adjacent=False):
            raise InjectivityUndetermined(
                "boundary images intersect at stage %d" % j)
        loop = Path(img_core.tolist(), anchor=anchor)
        res, closes = lift_closed_curve(g, loop, complex(core[0]),
                                        check_clearance=False)
        if not closes:
            raise InjectivityUndetermined(
                "core-curve inverse lift has monodromy at stage %d" % j)
        stages.append({
            "stage": j,
            "critical_clearance": clear if math.isfinite(clear) else None,
            "boundaries_simple": True,
            "boundaries_disjoint": True,
            "core_lift_residual": res.max_residual,
        })
        inner, outer, core = img_inner, img_outer, img_core
    return {"samples": n_samp, "stages": stages, "k": k}


# ---------------------------------------------------------------------------
# certificates

class LevyCertificate:
    """Quantitative witness of a degenerate Levy multicurve, built from one
    separating annulus at one recorded step of an obstructed run."""

    FIELDS = ("step", "k", "d0_bound", "modulus", "threshold", "length_bound",
              "inner_count_A", "inner_count_B", "outer_count_A",
              "outer_count_B", "promotion_flag")

    def __init__(self, step, annulus, k, d0_bound, modulus, threshold,
                 injectivity_evidence, length_bound, inner_count_A,
                 inner_count_B, outer_count_A, outer_count_B,
                 representative_curves, cluster_labels, curve_windings,
                 curve_enclosed_labels, engine_version="", tolerances=None,
                 trace_digest=None):
        if not modulus > threshold:
            raise ValueError("certificate gate: modulus must exceed threshold")
        if not length_bound < ELL_STAR:
            raise ValueError("certificate gate: length bound must beat ell*")
        if inner_count_A < 2 or outer_count_A < 2 or inner_count_B > 1:
            raise ValueError("certificate gate: side point counts")
        self.step = step
        self.annulus = annulus
        self.k = k
        self.d0_bound = d0_bound
        self.modulus = modulus
        self.threshold = threshold
        self.injectivity_evidence = injectivity_evidence
        self.length_bound = length_bound
        self.inner_count_A = inner_count_A
        self.inner_count_B = inner_count_B
        self.outer_count_A = outer_count_A
        self.outer_count_B = outer_count_B
        self.representative_curves = tuple(representative_curves)
        self.cluster_labels = tuple(cluster_labels)
        self.curve_windings = tuple(curve_windings)
        self.curve_enclosed_labels = tuple(tuple(sorted(lbls))
                                           for lbls in curve_enclosed_labels)
        if len(set(self.curve_enclosed_labels)) > k:
            raise ValueError("certificate gate: short-curve budget (at most "
                             "|A| - 3 distinct classes)")
        self.promotion_flag = length_bound < ELL_STAR * math.exp(-k * d0_bound)
        self.engine_version = engine_version
        self.tolerances = tolerances or {}
        self.trace_digest = trace_digest

    def distinct_curve_classes(self):
        """Simple closed curves on a finitely punctured sphere are homotopic
        rel the marked set iff they separate the labels the same way, so the
        budget counts distinct enclosed-label sets."""
        return len(set(self.curve_enclosed_labels))

    def to_json(self):
        obj = {name: getattr(self, name) for name in self.FIELDS}
        obj["annulus"] = self.annulus.to_json()
        obj["injectivity_evidence"] = self.injectivity_evidence
        obj["representative_curves"] = [c.to_json()
                                        for c in self.representative_curves]
        obj["cluster_labels"] = list(self.cluster_labels)
        obj["curve_windings"] = list(self.curve_windings)
        obj["curve_enclosed_labels"] = [list(t)
                                        for t in self.curve_enclosed_labels]
        obj["engine_version"] = self.engine_version
        obj["tolerances"] = self.tolerances
        obj["trace_digest"] = self.trace_digest
        obj["ell_star"] = ELL_STAR
        return obj

    @classmethod
    def from_json(cls, obj):
        cert = cls.__new__(cls)
        for name in cls.FIELDS:
            setattr(cert, name, obj[name])
        cert.annulus = RoundAnnulus.from_json(obj["annulus"])
        cert.injectivity_evidence = obj["injectivity_evidence"]
        cert.representative_curves = tuple(
            Path.from_json(c) for c in obj["representative_curves"])
        cert.cluster_labels = tuple(obj["cluster_labels"])
        cert.curve_windings = tuple(obj["curve_windings"])
        cert.curve_enclosed_labels = tuple(
            tuple(t) for t in obj["curve_enclosed_labels"])
        cert.engine_version = obj.get("engine_version", "")
        cert.tolerances = obj.get("tolerances", {})
        cert.trace_digest = obj.get("trace_digest")
        return cert


def _step_chart_entries(run, n, shift):
    """(label, kind, chart position) of every configuration point at step n,
    translated by ``shift``; oo maps to None (always in the outer part)."""
    entries = []
    for lab, p in run.punctures:
        entries.append((lab, "P", None if is_inf(p) else p - shift))
    for track in list(run.marked) + list(run.trivial):
        mode, value = track.history[n] if n < len(track.history) else track.history[-1]
        if mode == "free":
            entries.append((track.label, "marked", value - shift))
        else:
            chart = track.anchor.chart
            eta = value.to_complex()
            if eta is None:
                raise NoSeparatingAnnulus(
                    "deviation below double range; certificate chart cannot "
                    "represent the cluster at step %d" % n)
            pos = (track.anchor.puncture - shift) + chart.eps_star + eta
            entries.append((track.label, "marked", pos))
    return entries


def _log_euclid_dist(run, n, e1, e2):
    """Natural-log plane distance between two step-n configuration entries;
    +inf for pairs involving oo (a cluster at oo needs a re-chart)."""
    _LN2 = math.log(2.0)

    def resolve(label, kind):
        if kind == "P":
            return ("point", run.punctures.point(label))
        for track in run.marked:
            if track.label == label:
                mode, value = track.history[n]
                if mode == "anchored":
                    return ("anchored", (track.anchor, value))
                return ("point", value)
        for track in run.trivial:
            if track.label == label:
                return ("point", track.history[n][1])
        raise KeyError(label)

    r1, r2 = resolve(e1[0], e1[1]), resolve(e2[0], e2[1])
    if r1[0] == "anchored" and r2[0] == "anchored":
        a1, eta1 = r1[1]
        a2, eta2 = r2[1]
        if a1.index == a2.index:
            try:
                gap = eta1.sub(eta2)
            except ValueError:
                return -math.inf
            return gap.log2_abs() * _LN2
        if is_inf(a1.puncture) or is_inf(a2.puncture):
            return math.inf
        return math.log(max(abs(a1.puncture - a2.puncture), 1e-300))
    if r1[0] == "anchored" or r2[0] == "anchored":
        (a, eta), other = (r1[1], r2) if r1[0] == "anchored" else (r2[1], r1)
        q = other[1]
        if is_inf(q) or is_inf(a.puncture):
            return math.inf
        if chordal(a.puncture, q) <= 1e-12:
            return eta.log2_abs() * _LN2
        return math.log(max(abs(a.puncture - q), 1e-300))
    p, q = r1[1], r2[1]
    if is_inf(p) or is_inf(q):
        return math.inf
    d = abs(p - q)
    return math.log(d) if d > 0 else -math.inf


def emit_levy_certificate(run, n=None, engine_version="", n_samp=N_SAMP):
    """Attempt certificate emission at step n (default: the current step).

    Returns None when no cluster at the threshold scale yields a qualifying
    annulus; raises nothing on ordinary failure paths."""
    n = run.n if n is None else n
    if n > run.n or n < 1:
        raise ValueError("run has no step %d" % n)
    k = run.k
    if k < 1:
        return None
    d0 = run.d0_bound()
    threshold = (k + 4) * math.pi * math.exp(k * d0) / ELL_STAR
    log_r_cluster = -TWO_PI * threshold

    raw = [(lab, "P", run.punctures.point(lab)) for lab in run.punctures.labels]
    raw += [(t.label, "marked", None) for t in list(run.marked) + list(run.trivial)]

    # single-linkage clustering at the threshold scale
    parent = list(range(len(raw)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(raw)):
        for j in range(i + 1, len(raw)):
            d = _log_euclid_dist(run, n, raw[i], raw[j])
            if d <= log_r_cluster:
                parent[find(i)] = find(j)

    clusters = {}
    for i in range(len(raw)):
        clusters.setdefault(find(i), []).append(i)

    for members in clusters.values():
        if len(members) < 2:
            continue
        labels = [raw[i][0] for i in members]
        cert = _try_cluster(run, n, labels, k, d0, threshold,
                            engine_version, n_samp)
        if cert is not None:
            return cert
    return None


def _try_cluster(run, n, cluster_labels, k, d0, threshold, engine_version,
                 n_samp):
    # translate to the chart of the cluster's puncture (or first member)
    shift = None
    for lab in cluster_labels:
        if lab in run.punctures.labels:
            p = run.punctures.point(lab)
            if not is_inf(p):
                shift = p
                break
    try:
        entries = _step_chart_entries(run, n, shift if shift is not None else 0j)
    except NoSeparatingAnnulus:
        return None
    pos = {lab: z for lab, _, z in entries}
    cluster_pts = [pos[lab] for lab in cluster_labels]
    if any(z is None for z in cluster_pts):
        return None
    center = sum(cluster_pts) / len(cluster_pts)
    r_in = (1.0 + ANNULUS_MARGIN) * max(abs(z - center) for z in cluster_pts)
    rest = [z for lab, _, z in entries
            if lab not in cluster_labels and z is not None]
    if not rest or r_in <= 0:
        return None
    r_out = (1.0 - ANNULUS_MARGIN) * min(abs(z - center) for z in rest)
    # keep the forward advance critical-point free: cap by the critical set
    crit = [c - (shift if shift is not None else 0j)
            for c, _ in critical_points(run.g) if not is_inf(c)]
    if crit:
        r_out = min(r_out, (1.0 - ANNULUS_MARGIN) *
                    min(abs(c - center) for c in crit))
    if r_out <= r_in:
        return None
    annulus = RoundAnnulus(center, math.log(r_in), math.log(r_out),
                           anchor=shift)
    modulus = annulus_modulus(annulus)
    if not modulus > threshold:
        return None

    inner_A = inner_B = outer_A = outer_B = 0
    for lab, kind, z in entries:
        inside = z is not None and abs(z - center) <= r_in
        outside = z is None or abs(z - center) >= r_out
        if not inside and not outside:
            return None  # a configuration point sits inside the ring
        if inside:
            inner_A += 1
            inner_B += kind == "P"
        else:
            outer_A += 1
            outer_B += kind == "P"
    if inner_A < 2 or outer_A < 2 or inner_B > 1:
        return None

    try:
        evidence = injectivity_test(run.g, annulus, k, n_samp=n_samp,
                                    eps_cv=run.tol.eps_cv)
    except InjectivityUndetermined:
        return None

    curves, windings = _representative_curves(run, annulus, k)
    if curves is None:
        return None
    enclosed = [_enclosed_labels(curve, entries) for curve in curves]

    length_bound = (k + 4) * math.pi * math.exp(k * d0) / modulus
    return LevyCertificate(
        step=n, annulus=annulus, k=k, d0_bound=d0, modulus=modulus,
        threshold=threshold, injectivity_evidence=evidence,
        length_bound=length_bound, inner_count_A=inner_A,
        inner_count_B=inner_B, outer_count_A=outer_A, outer_count_B=outer_B,
        representative_curves=curves, cluster_labels=cluster_labels,
        curve_windings=windings, curve_enclosed_labels=enclosed,
        engine_version=engine_version, tolerances=run.tol.to_json())


def _enclosed_labels(curve, entries):
    """Labels of the step configuration enclosed by a closed curve (same
    chart); oo entries are never enclosed."""
    zs = np.array(curve.nodes + (curve.nodes[0],))
    out = []
    for lab, _, z in entries:
        if z is None:
            continue
        w = _winding(zs, z)
        if w is not None and w != 0:
            out.append(lab)
    return out


def _representative_curves(run, annulus, k):
    """Core circle plus k successive degree-1 inverse-branch lifts."""
    anchor = annulus.anchor
    gm = run.g if anchor is None else run.g.shifted(anchor)
    core = _circle(annulus.center, annulus.core_radius(), N_CURVE)
    curves = [Path(core.tolist(), anchor=anchor)]
    windings = [_winding(core, annulus.center)]
    current = curves[0]
    for _ in range(k):
        seed = _newton_preimage(gm, complex(current.nodes[0]),
                                complex(current.nodes[0]))
        if seed is None:
            return None, None
        try:
            res, closes = lift_closed_curve(run.g, current, seed,
                                            check_clearance=False)
        except Exception:
            return None, None
        if not closes:
            return None, None
        lifted = res.lifted
        curves.append(lifted)
        windings.append(_winding(np.array(lifted.nodes + (lifted.nodes[0],)),
                                 annulus.center))
        current = lifted
    return curves, windings


# certificate clusters and curves live in a translated double chart; below
# this scale the engine declines to emit rather than degrade silently
_EMISSION_FLOOR_LOG = math.log(1e-290)


def certify_obstructed(run, engine_version="", max_steps=None,
                       with_reason=False):
    """Step the run forward until a certificate is emitted (or the cap).

    The annulus modulus grows like log|g'(p)| / 2 pi per step, so emission
    happens within O(threshold) further steps of an obstructed run. When the
    cluster scale e^{-2 pi threshold} falls below double range the engine
    returns None immediately: the certificate chart cannot represent the
    collapsing cluster at that depth."""
    cap = run.tol.max_iters if max_steps is None else max_steps

    def done(cert, note):
        return (cert, note) if with_reason else cert

    while True:
        if run.n >= 1:
            try:
                d0 = run.d0_bound()
            except Exception as exc:
                return done(None, "no certified first-step bound: %s" % exc)
            threshold = (run.k + 4) * math.pi * math.exp(run.k * d0) / ELL_STAR
            if -TWO_PI * threshold < _EMISSION_FLOOR_LOG:
                return done(None,
                            "cluster scale exp(-2 pi * %.4g) is below the "
                            "double-range certificate chart" % threshold)
            cert = emit_levy_certificate(run, engine_version=engine_version)
            if cert is not None:
                return done(cert, "emitted at step %d" % cert.step)
        if run.n >= cap:
            return done(None, "no qualifying annulus within %d steps" % cap)
        run.pullback_step()


# ---------------------------------------------------------------------------
# verification

class VerifyResult:
    def __init__(self, ok, mismatches):
        self.ok = ok
        self.mismatches = list(mismatches)

    def __bool__(self):
        return self.ok

    def __repr__(self):
        if self.ok:
            return "VerifyResult(ok)"
        return "VerifyResult(failed: %s)" % "; ".join(self.mismatches)


def verify_certificate(cert, run, n_samp=N_SAMP):
    """Independently recompute every certificate ingredient against the run;
    False (with a mismatch report) on any deviation."""
    bad = []

    def check(cond, msg):
        if not cond:
            bad.append(msg)

    check(cert.k == run.k, "k mismatch: %r vs run %r" % (cert.k, run.k))
    try:
        d0 = run.d0_bound()
        check(abs(d0 - cert.d0_bound) <= 1e-9 * (1.0 + abs(d0)),
              "d0 bound mismatch: %r vs %r" % (cert.d0_bound, d0))
    except Exception as exc:
        bad.append("d0 recomputation failed: %s" % exc)
        d0 = cert.d0_bound
    thr = (cert.k + 4) * math.pi * math.exp(cert.k * cert.d0_bound) / ELL_STAR
    check(abs(thr - cert.threshold) <= 1e-12 * thr, "threshold formula")
    mod = annulus_modulus(cert.annulus)
    check(abs(mod - cert.modulus) <= 1e-12 * max(1.0, abs(mod)),
          "modulus mismatch: stored %r, annulus gives %r" % (cert.modulus, mod))
    check(mod > cert.threshold, "modulus does not exceed threshold")
    lb = (cert.k + 4) * math.pi * math.exp(cert.k * cert.d0_bound) / mod
    check(abs(lb - cert.length_bound) <= 1e-9 * max(1.0, lb),
          "length bound formula")
    check(cert.length_bound < ELL_STAR, "length bound not below ell*")

    # side counts against the recorded step configuration
    entries = None
    try:
        shift = cert.annulus.anchor if cert.annulus.anchor is not None else 0j
        entries = _step_chart_entries(run, cert.step, shift)
        r_in, r_out = cert.annulus.r_in, cert.annulus.r_out
        center = cert.annulus.center
        iA = iB = oA = oB = 0
        for lab, kind, z in entries:
            inside = z is not None and abs(z - center) <= r_in
            outside = z is None or abs(z - center) >= r_out
            check(inside or outside,
                  "configuration point %s inside the annulus ring" % lab)
            if inside:
                iA += 1
                iB += kind == "P"
            else:
                oA += 1
                oB += kind == "P"
        check((iA, iB, oA, oB) == (cert.inner_count_A, cert.inner_count_B,
                                   cert.outer_count_A, cert.outer_count_B),
              "side counts mismatch: stored %r, recomputed %r"
              % ((cert.inner_count_A, cert.inner_count_B,
                  cert.outer_count_A, cert.outer_count_B), (iA, iB, oA, oB)))
        check(iA >= 2 and oA >= 2, "essential-in-A side condition")
        check(iB <= 1, "non-essential-in-B side condition")
    except Exception as exc:
        bad.append("count recomputation failed: %s" % exc)

    try:
        injectivity_test(run.g, cert.annulus, cert.k, n_samp=n_samp,
                         eps_cv=run.tol.eps_cv)
    except InjectivityUndetermined as exc:
        bad.append("injectivity evidence did not reproduce: %s" % exc)

    # representative curves: closure, degree 1, and the lift chain
    check(len(cert.representative_curves) == cert.k + 1,
          "curve count %d != k+1" % len(cert.representative_curves))
    anchor = cert.annulus.anchor
    for idx, curve in enumerate(cert.representative_curves):
        check(curve.is_closed(1e-6 * max(abs(z) for z in curve.nodes)),
              "curve %d is not closed" % idx)
        w = _winding(np.array(curve.nodes + (curve.nodes[0],)),
                     cert.annulus.center)
        check(w is not None and abs(w) == 1,
              "curve %d does not wind once around the annulus core" % idx)
    for idx in range(len(cert.representative_curves) - 1):
        cur = cert.representative_curves[idx]
        nxt = cert.representative_curves[idx + 1]
        try:
            res, closes = lift_closed_curve(run.g, cur, nxt.start,
                                            check_clearance=False)
            check(closes, "re-lift of curve %d has monodromy" % idx)
            scale = max(abs(z) for z in nxt.nodes)
            check(abs(res.lifted.end - nxt.start) <= 1e-6 * max(scale, 1e-300),
                  "re-lift of curve %d does not return to curve %d"
                  % (idx, idx + 1))
        except Exception as exc:
            bad.append("curve %d re-lift failed: %s" % (idx, exc))

    # enclosed labels reproduce, and the short-curve budget holds
    if entries is not None:
        for idx, curve in enumerate(cert.representative_curves):
            got = tuple(sorted(_enclosed_labels(curve, entries)))
            check(got == cert.curve_enclosed_labels[idx],
                  "curve %d enclosed labels mismatch: %r vs %r"
                  % (idx, got, cert.curve_enclosed_labels[idx]))
    check(cert.distinct_curve_classes() <= cert.k,
          "short-curve budget exceeded")
    return VerifyResult(not bad, bad)
