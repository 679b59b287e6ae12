"""The pullback engine on the Bers fiber: marked-point states, the
inverse-branch step, trivial marked points, iterate composition, run
orchestration.

A fiber point over the base structure is realized concretely as a position
in the puncture complement plus a homotopy-tracking polyline from the
basepoint. The path at step n+1 is delta followed by the lift of the path
at step n started at the branch point; since the lift of a concatenation is
the concatenation of lifts with chained starts, the engine advances
incrementally, lifting only the newest connecting block each step (bitwise
the same nodes, O(last block) work).

Marked orbits falling into a repelling fixed puncture are handed to a
LocalFixedChart and tracked as scaled deviations (module ``local``); the
distinctness requirement is then certified in the anchored chart, where a
nonzero separation from the puncture is exact rather than limited by the
absolute chart's resolution.
"""

import json
import math

from .errors import (CollisionDetected, InvalidBranchDatum,
                     NoApplicableComparison, NotPostsingularlyFinite)
from .hyperbolic import teich_step_bound
from .lifting import (EPS_CLEAR, EPS_CV, EPS_LIFT, ETA_SAFE, MAX_DEPTH, Path,
                      lift_path, path_clearance, simplify_path)
from .local import LocalFixedChart
from .ratmap import (REPELLING_MARGIN, critical_points, critical_values,
                     iterate, postsingular_analysis, preimages)
from .sphere import Configuration, chordal, encode_point, is_inf


class Tolerances:
    """All engine tolerances, overridable per run."""

    __slots__ = ("eps_sep", "eps_lift", "eps_cv", "eps_clear", "eps_conv",
                 "eps_P", "eps_fix", "K", "max_iters", "eta", "max_depth",
                 "max_orbit", "eps_cycle")

    def __init__(self, **kw):
        self.eps_sep = 1e-9
        self.eps_lift = EPS_LIFT
        self.eps_cv = EPS_CV
        self.eps_clear = EPS_CLEAR
        self.eps_conv = 1e-10
        self.eps_P = 1e-8
        self.eps_fix = 1e-9
        self.K = 5
        self.max_iters = 5000
        self.eta = ETA_SAFE
        self.max_depth = MAX_DEPTH
        self.max_orbit = 200
        self.eps_cycle = 1e-6
        for name, value in kw.items():
            if name not in self.__slots__:
                raise ValueError("unknown tolerance %r" % name)
            setattr(self, name, type(getattr(self, name))(value))

    def to_json(self):
        return {name: getattr(self, name) for name in self.__slots__}


class BranchDatum:
    """Basepoint b, chosen preimage b' with g(b') = b, and the reference
    path delta from b to b'; this is the homotopy class of the marking."""

    __slots__ = ("basepoint", "branch_point", "delta")

    def __init__(self, basepoint, branch_point, delta=None):
        self.basepoint = complex(basepoint)
        self.branch_point = complex(branch_point)
        if delta is None:
            delta = Path([self.basepoint, self.branch_point])
        self.delta = delta

    def validate(self, g, punctures, tol):
        if chordal(g(self.branch_point), self.basepoint) > tol.eps_lift:
            raise InvalidBranchDatum("g(branch_point) misses the basepoint")
        if self.delta.start != self.basepoint or self.delta.end != self.branch_point:
            raise InvalidBranchDatum("delta must run from b to b'")
        clr = path_clearance(self.delta, punctures.points)
        if clr <= tol.eps_clear:
            raise InvalidBranchDatum(
                "delta clearance %.3g to the punctures" % clr)

    def to_json(self):
        return {"basepoint": encode_point(self.basepoint),
                "branch_point": encode_point(self.branch_point),
                "delta": self.delta.to_json()}


class TrivialMarkedSpec:
    """A strictly preperiodic marked point: image q in P and the chosen
    preimage q' with g(q') = q; its pullback position is q' from step 1 on."""

    __slots__ = ("image", "preimage", "start")

    def __init__(self, image, preimage, start=None):
        self.image = image if is_inf(image) else complex(image)
        self.preimage = complex(preimage)
        self.start = self.preimage if start is None else complex(start)

    def validate(self, g, punctures, tol):
        if chordal(g(self.preimage), self.image) > tol.eps_lift:
            raise InvalidBranchDatum("g(q') misses the trivial image q")
        if not any(chordal(self.image, p) <= 1e-9 for p in punctures.points):
            raise InvalidBranchDatum("trivial image q must lie in P")
        for z, name in ((self.preimage, "q'"), (self.start, "start")):
            if min(chordal(z, p) for p in punctures.points) <= tol.eps_sep:
                raise CollisionDetected(
                    "trivial %s collides with a puncture" % name)

    def to_json(self):
        return {"image": encode_point(self.image),
                "preimage": encode_point(self.preimage),
                "start": encode_point(self.start)}


class _AnchorChart:
    """Precomputed anchoring data for one repelling fixed puncture."""

    __slots__ = ("index", "puncture", "chart", "rho", "r_anchor", "disk_R")

    def __init__(self, index, puncture, chart, rho, disk_R):
        self.index = index
        self.puncture = puncture
        self.chart = chart
        self.rho = rho
        self.r_anchor = rho / 8.0
        self.disk_R = disk_R

    def chart_distance(self, x):
        """Distance to the anchor in its working chart."""
        if is_inf(self.puncture):
            if is_inf(x):
                return 0.0
            return math.inf if x == 0 else abs(1.0 / x)
        if is_inf(x):
            return math.inf
        return abs(x - self.puncture)


class _MarkedTrack:
    """Mutable per-marked-point state inside a run."""

    __slots__ = ("label", "datum", "blocks", "history", "connectors",
                 "anchor", "last_residual", "last_subdivisions")

    def __init__(self, label, datum):
        self.label = label
        self.datum = datum
        self.blocks = []
        self.history = [("free", datum.basepoint)]
        self.connectors = [("zero", None)]
        self.anchor = None
        self.last_residual = 0.0
        self.last_subdivisions = 0

    @property
    def mode(self):
        return self.history[-1][0]

    def position(self):
        mode, value = self.history[-1]
        if mode == "free":
            return value
        return self.anchor.chart.materialize(value)

    def eta(self):
        return self.history[-1][1] if self.mode == "anchored" else None

    def full_path(self):
        nodes = [self.datum.basepoint]
        for block in self.blocks:
            nodes.extend(block.nodes[1:])
        return Path(nodes)

    def node_count(self):
        return 1 + sum(len(b) - 1 for b in self.blocks)


class _TrivialTrack:
    __slots__ = ("label", "spec", "history", "connectors")

    def __init__(self, label, spec):
        self.label = label
        self.spec = spec
        self.history = [("free", spec.start)]
        self.connectors = [("zero", None)]

    def position(self):
        return self.history[-1][1]


class FiberPointState:
    """Snapshot of one marked coordinate: position, homotopy-tracking path
    from the basepoint, and the step index. Positions deep in an anchored
    chart materialize to the puncture itself; ``deviation`` then carries
    the exact scaled offset."""

    __slots__ = ("label", "position", "path", "step_index", "deviation",
                 "anchor_label")

    def __init__(self, label, position, path, step_index, deviation=None,
                 anchor_label=None):
        self.label = label
        self.position = position
        self.path = path
        self.step_index = step_index
        self.deviation = deviation
        self.anchor_label = anchor_label

    def __repr__(self):
        extra = "" if self.anchor_label is None else \
            ", anchored at %s" % self.anchor_label
        return "FiberPointState(%s, n=%d, %r%s)" % (
            self.label, self.step_index, self.position, extra)


class RunStatus:
    """Outcome of run_until; classification is finalized in certify."""

    __slots__ = ("kind", "puncture_label", "puncture", "reason", "steps")

    def __init__(self, kind, puncture_label=None, puncture=None, reason="",
                 steps=0):
        self.kind = kind  # candidate_realized | candidate_puncture | undecided
        self.puncture_label = puncture_label
        self.puncture = puncture
        self.reason = reason
        self.steps = steps

    def to_json(self):
        return {"kind": self.kind, "puncture_label": self.puncture_label,
                "puncture": None if self.puncture is None
                else encode_point(self.puncture),
                "reason": self.reason, "steps": self.steps}

    def __repr__(self):
        extra = self.puncture_label or self.reason
        return "RunStatus(%s%s, %d steps)" % (
            self.kind, ", %s" % extra if extra else "", self.steps)


class Trace:
    """Per-step records plus the stopping status."""

    def __init__(self, records, status=None):
        self.records = records
        self.status = status

    def jsonl_lines(self):
        for rec in self.records:
            yield json.dumps(rec, sort_keys=True, separators=(",", ":"))


class PullbackRun:
    """Sequential pullback iteration state; step n+1 consumes step n."""

    def __init__(self, g, analysis, punctures, marked, trivial, tol):
        self.g = g
        self.analysis = analysis
        self.punctures = punctures
        self.marked = marked
        self.trivial = trivial
        self.tol = tol
        self.n = 0
        self._d0 = None
        self._anchors = self._prepare_anchor_charts()
        self._crit_values = critical_values(g)
        self._obstacles = list(punctures.points) + [
            v for v in self._crit_values
            if min(chordal(v, p) for p in punctures.points) > 1e-9]
        self._check_distinct()

    # -- setup ---------------------------------------------------------------

    def _prepare_anchor_charts(self):
        anchors = {}
        pts = self.punctures.points
        crit_finite = [c for c, _ in critical_points(self.g) if not is_inf(c)]
        for idx, p in enumerate(pts):
            if chordal(self.g(p), p) > self.tol.eps_fix:
                continue
            _, mult = self.g.evaluate_with_derivative(p)
            if not abs(mult) > 1.0 + REPELLING_MARGIN:
                continue
            chart = LocalFixedChart(self.g, p)
            if is_inf(p):
                def dist(q):
                    return math.inf if (is_inf(q) or q == 0) else abs(1.0 / q)
            else:
                def dist(q, p=p):
                    return math.inf if is_inf(q) else abs(q - p)
            cands = [dist(q) for j, q in enumerate(pts) if j != idx]
            cands += [dist(c) for c in crit_finite]
            cands += [dist(b) for b, _ in preimages(self.g, p)
                      if chordal(b, p) > 1e-9]
            rho = min(d for d in cands if d > 0)
            disk_R = min(dist(q) for j, q in enumerate(pts)
                         if j != idx and not is_inf(q)) if not is_inf(p) else rho
            anchors[idx] = _AnchorChart(idx, p, chart, rho, disk_R)
        return anchors

    @property
    def k(self):
        return len(self.punctures) + len(self.marked) + len(self.trivial) - 3

    def marked_labels(self):
        return [t.label for t in self.marked] + [t.label for t in self.trivial]

    # -- the sigma step -------------------------------------------------------

    def pullback_step(self):
        self.n += 1
        n = self.n
        for track in self.marked:
            if track.anchor is not None:
                eta_prev = track.history[-1][1]
                eta_next = track.anchor.chart.inv_step(eta_prev)
                track.history.append(("anchored", eta_next))
                track.connectors.append(
                    ("anchored", (self._anchored_disk_radius(track),
                                  eta_prev, eta_next)))
                track.last_residual = track.anchor.chart.step_residual(
                    eta_prev, eta_next)
                track.last_subdivisions = 0
                continue
            if not track.blocks:
                new_block = track.datum.delta
                track.last_residual = 0.0
                track.last_subdivisions = 0
            else:
                prev = track.blocks[-1]
                res = lift_path(self.g, prev, prev.end,
                                eps_lift=self.tol.eps_lift,
                                eps_cv=self.tol.eps_cv, eta=self.tol.eta,
                                max_depth=self.tol.max_depth)
                new_block = simplify_path(res.lifted, self._obstacles,
                                          margin=2 * self.tol.eps_clear)
                track.last_residual = res.max_residual
                track.last_subdivisions = res.subdivisions
            track.blocks.append(new_block)
            x_new = new_block.end
            track.history.append(("free", x_new))
            track.connectors.append(
                self._path_connector(track, new_block))
            self._maybe_anchor(track, new_block)
        for triv in self.trivial:
            if n == 1:
                triv.history.append(("free", triv.spec.preimage))
                triv.connectors.append(self._path_connector(
                    triv, Path([triv.spec.start, triv.spec.preimage])))
            else:
                # bitwise-constant from step 1 on
                triv.history.append(("free", triv.spec.preimage))
                triv.connectors.append(("zero", None))
        self._check_distinct()
        return self

    def _path_connector(self, track, block):
        """Connector descriptor for one coordinate's move. The sequential
        one-at-a-time decomposition is only a valid fiber path when the
        block avoids the other coordinates' frozen positions; a crossing
        leaves configuration space, so the step bound is then uncertified
        rather than fabricated."""
        others = self._other_positions(track)
        if len(block) > 1 and others and \
                path_clearance(block, others) <= 2 * self.tol.eps_clear:
            return ("uncertified",
                    "connector of %s crosses another marked coordinate"
                    % track.label)
        return ("path", (block, self._density_punctures(track)))

    def _other_positions(self, moving):
        """Positions of the other coordinates at this instant of the step.

        Coordinates move one at a time in processing order, so the correct
        exclusion set for the moving one is each other's current history
        head: already-stepped tracks contribute their new position, not yet
        stepped ones their old."""
        out = []
        for other in list(self.marked) + list(self.trivial):
            if other is moving:
                continue
            mode, value = other.history[-1]
            out.append(value if mode == "free"
                       else other.anchor.chart.materialize(value))
        return out

    def _density_punctures(self, moving):
        pts = list(self.punctures.points)
        for x in self._other_positions(moving):
            if min(chordal(x, p) for p in pts) > 1e-9:
                pts.append(x)
        return pts

    def _anchored_disk_radius(self, track):
        """Comparison-disk radius at the anchor: must clear the other
        punctures and every other marked position."""
        anchor = track.anchor
        R = anchor.disk_R
        for x in self._other_positions(track):
            R = min(R, anchor.chart_distance(x))
        return R

    def _maybe_anchor(self, track, block):
        x_new = track.history[-1][1]
        x_prev = track.history[-2][1] if track.history[-2][0] == "free" else None
        if x_prev is None:
            return
        for anchor in self._anchors.values():
            if anchor.chart_distance(x_new) < anchor.r_anchor and \
               anchor.chart_distance(x_prev) < anchor.r_anchor and \
               all(anchor.chart_distance(z) < 2 * anchor.r_anchor
                   for z in block.absolute_nodes()):
                track.anchor = anchor
                eta = anchor.chart.deviation_of(x_new)
                track.history[-1] = ("anchored", eta)
                return

    # -- invariants ------------------------------------------------------------

    def _check_distinct(self):
        entries = [(lab, "P", p, None) for lab, p in self.punctures]
        for track in self.marked:
            if track.anchor is not None:
                entries.append((track.label, "anchored", track.position(),
                                (track.anchor, track.eta())))
            else:
                entries.append((track.label, "free", track.position(), None))
        for triv in self.trivial:
            entries.append((triv.label, "free", triv.position(), None))
        for i in range(len(entries)):
            for j in range(i + 1, len(entries)):
                li, ki, pi, ai = entries[i]
                lj, kj, pj, aj = entries[j]
                if ki == "P" and kj == "P":
                    continue
                if kj == "anchored" and ki == "P":
                    # separation from the own anchor is certified in-chart
                    if aj[0].index == self._puncture_index(li):
                        continue
                if ki == "anchored" and kj == "anchored":
                    if ai[0].index == aj[0].index:
                        try:
                            gap = ai[1].sub(aj[1])
                        except ValueError:
                            raise CollisionDetected(
                                "marked points %s, %s merged" % (li, lj),
                                pair=(li, lj))
                        rel = gap.log2_abs() - max(ai[1].log2_abs(),
                                                   aj[1].log2_abs())
                        if rel <= math.log2(self.tol.eps_sep):
                            raise CollisionDetected(
                                "marked points %s, %s closer than eps_sep "
                                "relative" % (li, lj), pair=(li, lj))
                        continue
                if chordal(pi, pj) <= self.tol.eps_sep:
                    raise CollisionDetected(
                        "positions %s and %s closer than eps_sep" % (li, lj),
                        pair=(li, lj))

    def _puncture_index(self, label):
        return self.punctures.labels.index(label)

    # -- bounds / reporting ------------------------------------------------------

    def step_connectors(self, n):
        """Connector descriptors for the move tau_{n-1} -> tau_n."""
        if not 1 <= n <= self.n:
            raise ValueError("run has no step %d" % n)
        out = []
        for track in list(self.marked) + list(self.trivial):
            kind, payload = track.connectors[n]
            if kind == "uncertified":
                raise NoApplicableComparison(
                    "step %d bound not certified: %s" % (n, payload))
            if kind in ("path", "anchored"):
                out.append((kind, payload))
        return out

    def d0_bound(self):
        """Upper bound for the first step distance, reused for all later
        steps (the pullback map is 1-Lipschitz)."""
        if self._d0 is None:
            if self.n < 1:
                raise ValueError("run has not stepped yet")
            self._d0 = teich_step_bound(self, 1)
        return self._d0

    def fiber_state(self, track_label):
        """Current FiberPointState of one marked coordinate."""
        for track in self.marked:
            if track.label == track_label:
                if track.anchor is not None:
                    return FiberPointState(
                        track.label, track.position(), track.full_path(),
                        self.n, deviation=track.eta(),
                        anchor_label=self.punctures.labels[track.anchor.index])
                return FiberPointState(track.label, track.position(),
                                       track.full_path(), self.n)
        for track in self.trivial:
            if track.label == track_label:
                return FiberPointState(track.label, track.position(),
                                       Path([track.position()]), self.n)
        raise KeyError(track_label)

    def dist_log10(self, track, p_label):
        """log10 chordal distance from a marked track to one puncture."""
        idx = self._puncture_index(p_label)
        p = self.punctures.points[idx]
        if getattr(track, "anchor", None) is not None:
            if track.anchor.index == idx:
                return track.anchor.chart.log10_dist_to_anchor(track.eta())
            return math.log10(max(chordal(track.anchor.puncture, p), 1e-300))
        d = chordal(track.position(), p)
        return math.log10(max(d, 1e-300))

    def trace_record(self):
        points = {}
        diag = 0.0
        residual = 0.0
        nodes = 0
        for track in self.marked:
            if track.anchor is not None:
                eta = track.eta()
                points[track.label] = {
                    "mode": "anchored", "type": "fixed",
                    "anchor": self.punctures.labels[track.anchor.index],
                    "eta": [eta.m.real, eta.m.imag], "exp2": eta.e,
                }
            else:
                x = track.position()
                points[track.label] = {"mode": "free", "type": "fixed",
                                       "value": [x.real, x.imag]}
            points[track.label]["dist_log10"] = {
                lab: self.dist_log10(track, lab)
                for lab in self.punctures.labels}
            residual = max(residual, track.last_residual)
            diag = max(diag, self._diagram_residual(track))
            nodes += track.node_count()
        for triv in self.trivial:
            x = triv.position()
            points[triv.label] = {
                "mode": "free", "type": "trivial", "value": [x.real, x.imag],
                "dist_log10": {lab: math.log10(max(chordal(x, p), 1e-300))
                               for lab, p in self.punctures}}
        if self.n >= 1:
            try:
                step_bound = teich_step_bound(self, self.n)
            except NoApplicableComparison:
                step_bound = None  # no certified bound for this step
        else:
            step_bound = 0.0
        min_dist = {lab: min(entry["dist_log10"][lab]
                             for entry in points.values())
                    for lab in self.punctures.labels}
        return {"n": self.n, "points": points, "lift_residual": residual,
                "path_nodes": nodes, "step_bound": step_bound,
                "diagram_residual": diag, "min_dist_log10": min_dist}

    def _diagram_residual(self, track):
        """Chordal |g(x_n) - x_{n-1}| for the most recent step."""
        if self.n < 1 or len(track.history) < 2:
            return 0.0
        mode_new, val_new = track.history[-1]
        mode_old, val_old = track.history[-2]
        if mode_new == "anchored":
            chart = track.anchor.chart
            if mode_old == "anchored":
                return chart.step_residual(val_old, val_new)
            eta_old = chart.deviation_of(val_old)
            return chart.step_residual(eta_old, val_new)
        # covers step 1 as well: x_1 = b' with g(b') = b
        return chordal(self.g(val_new), val_old)


# ---------------------------------------------------------------------------

def init_run(g, marked, trivial=(), extra_punctures=(), tol=None,
             analysis=None):
    """Validate inputs and build the step-0 run state.

    ``extra_punctures`` extends the postsingular set by forward-invariant
    points (the marked set B of the base structure may be larger than P,
    e.g. z -> z^2 needs a third puncture)."""
    tol = tol or Tolerances()
    if analysis is None:
        analysis = postsingular_analysis(g, max_orbit=tol.max_orbit,
                                         eps_cycle=tol.eps_cycle)
    if not analysis.is_psf:
        raise NotPostsingularlyFinite("base map is not psf")
    pts = list(analysis.postsingular.points)
    for q in extra_punctures:
        q = q if is_inf(q) else complex(q)
        if min(chordal(q, p) for p in pts) <= 1e-9:
            continue
        w = g(q)
        if min(chordal(w, p) for p in pts + [q]) > 1e-9:
            raise InvalidBranchDatum(
                "extra puncture %r is not forward invariant" % (q,))
        pts.append(q)
    order = sorted(range(len(pts)),
                   key=lambda i: (1, 0.0, 0.0) if is_inf(pts[i])
                   else (0, pts[i].real, pts[i].imag))
    pts = [pts[i] for i in order]
    if len(pts) < 3:
        raise InvalidBranchDatum(
            "need |P| >= 3 punctures (got %d); add extra_punctures" % len(pts))
    punctures = Configuration(["p%d" % i for i in range(len(pts))], pts)

    marked = list(marked)
    trivial = list(trivial)
    if len(pts) + len(marked) + len(trivial) < 4:
        raise InvalidBranchDatum("need |A| >= 4 (punctures plus marked)")
    tracks = []
    for i, datum in enumerate(marked):
        for z, what in ((datum.basepoint, "basepoint"),
                        (datum.branch_point, "branch point")):
            if min(chordal(z, p) for p in punctures.points) <= tol.eps_sep:
                raise CollisionDetected("%s lies on a puncture" % what)
        datum.validate(g, punctures, tol)
        tracks.append(_MarkedTrack("m%d" % i, datum))
    trivial_tracks = []
    for i, spec in enumerate(trivial):
        spec.validate(g, punctures, tol)
        seg = Path([spec.start, spec.preimage])
        if spec.start != spec.preimage and \
           path_clearance(seg, punctures.points) <= tol.eps_clear:
            raise InvalidBranchDatum("trivial settling segment hits P")
        trivial_tracks.append(_TrivialTrack("t%d" % i, spec))
    return PullbackRun(g, analysis, punctures, tracks, trivial_tracks, tol)


def pullback_step(run):
    """Advance one sigma-step (mutates and returns the run)."""
    return run.pullback_step()


def run_until(run, max_iters=None, sink=None):
    """Iterate until interior convergence, puncture convergence, or the
    iteration cap; returns (Trace, RunStatus)."""
    tol = run.tol
    cap = tol.max_iters if max_iters is None else max_iters
    records = [run.trace_record()]
    if sink is not None:
        sink(records[-1])
    conv_streak = 0
    dist_series = {t.label: [_nearest_from_record(records[-1], t.label)]
                   for t in run.marked}
    while run.n < cap:
        prev_positions = {t.label: t.history[-1] for t in run.marked}
        run.pullback_step()
        rec = run.trace_record()
        records.append(rec)
        if sink is not None:
            sink(rec)

        # (b) puncture convergence with geometric trend
        for track in run.marked:
            series = dist_series[track.label]
            series.append(_nearest_from_record(rec, track.label))
            p_label, logd = series[-1]
            if 10.0 ** logd < tol.eps_P and len(series) >= 6:
                tail = series[-6:]
                if all(x[0] == p_label for x in tail):
                    drops = [tail[i + 1][1] - tail[i][1] for i in range(5)]
                    if all(d < math.log10(0.98) for d in drops):
                        status = RunStatus(
                            "candidate_puncture", puncture_label=p_label,
                            puncture=run.punctures.point(p_label),
                            steps=run.n)
                        return Trace(records, status), status

        # (a) interior Cauchy convergence, all marked free
        if all(t.anchor is None for t in run.marked):
            step_small = True
            for track in run.marked:
                old = prev_positions[track.label][1]
                new = track.history[-1][1]
                if chordal(old, new) >= tol.eps_conv:
                    step_small = False
            conv_streak = conv_streak + 1 if step_small else 0
            if conv_streak >= tol.K:
                clear = all(
                    min(chordal(t.position(), p) for p in run.punctures.points)
                    > 10 * tol.eps_P for t in run.marked)
                if clear:
                    status = RunStatus("candidate_realized", steps=run.n)
                    return Trace(records, status), status
        else:
            conv_streak = 0
    status = RunStatus("undecided", reason="max_iters", steps=run.n)
    return Trace(records, status), status


def _nearest_from_record(rec, label):
    """(nearest puncture label, log10 distance) for one marked point."""
    dl = rec["points"][label]["dist_log10"]
    lab = min(dl, key=dl.get)
    return lab, dl[lab]


def compose_iterate_run(g, m, datum, trivial=(), extra_punctures=(),
                        tol=None):
    """Run for the m-th iterate with the m-fold composed branch datum:
    delta_m = delta . lift(delta) . lift^2(delta) ... with starts chained
    through preimages; its positions at step n match the base run's
    positions at step m*n."""
    tol = tol or Tolerances()
    if m < 1:
        raise ValueError("m must be >= 1")
    base_analysis = postsingular_analysis(g, max_orbit=tol.max_orbit,
                                          eps_cycle=tol.eps_cycle)
    if m == 1:
        return init_run(g, [datum], trivial=trivial,
                        extra_punctures=extra_punctures, tol=tol,
                        analysis=base_analysis)
    blocks = [datum.delta]
    for _ in range(m - 1):
        res = lift_path(g, blocks[-1], blocks[-1].end, eps_lift=tol.eps_lift,
                        eps_cv=tol.eps_cv, eta=tol.eta,
                        max_depth=tol.max_depth)
        blocks.append(res.lifted)
    nodes = list(blocks[0].nodes)
    for block in blocks[1:]:
        nodes.extend(block.nodes[1:])
    delta_m = Path(nodes)
    G = iterate(g, m)
    datum_m = BranchDatum(datum.basepoint, delta_m.end, delta_m)
    extra = list(extra_punctures) + list(base_analysis.postsingular.points)
    return init_run(G, [datum_m], trivial=trivial, extra_punctures=extra,
                    tol=tol)
