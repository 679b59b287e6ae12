"""Command-line front end: config ingestion, run orchestration, trace and
certificate persistence, corpus demos.

Subcommands: analyze | run | classify | certify | check | demo.
Exit codes: 0 done, 2 invalid config/usage, 3 numerical failure;
``check`` exits 1 when a stored artifact fails verification.
"""

import argparse
import glob as globmod
import hashlib
import json
import math
import os
import sys
import time

from . import __version__
from .certify import (LevyCertificate, certify_obstructed, classify_run,
                      verify_certificate)
from .errors import PullbackLabError
from .fiber import (BranchDatum, Tolerances, Trace, TrivialMarkedSpec,
                    compose_iterate_run, init_run, run_until)
from .lifting import Path
from .local import LocalFixedChart
from .ratmap import RationalMap, postsingular_analysis
from .sphere import chordal, decode_point


def _point(obj):
    return decode_point(obj)


def load_config(path, tol_overrides=(), max_iters=None):
    """Parse and validate a run config; raises ValueError on schema issues."""
    with open(path) as fh:
        cfg = json.load(fh)
    if "map" not in cfg:
        raise ValueError("config needs a 'map' record")
    g = RationalMap.from_json(cfg["map"])
    tols = dict(cfg.get("tolerances", {}))
    for name, value in tol_overrides:
        tols[name] = float(value)
    tol = Tolerances(**tols)
    if max_iters is not None:
        tol.max_iters = int(max_iters)
    elif "max_iters" in cfg:
        tol.max_iters = int(cfg["max_iters"])
    marked, trivial = [], []
    for spec in cfg.get("marked", []):
        kind = spec.get("type", "fixed")
        if kind == "fixed":
            b = _point(spec["basepoint"])
            bp = _point(spec["branch_point"])
            delta = None
            if "delta" in spec:
                delta = Path([complex(a, b2) for a, b2 in spec["delta"]])
            marked.append(BranchDatum(b, bp, delta))
        elif kind == "trivial":
            trivial.append(TrivialMarkedSpec(
                _point(spec["image"]), _point(spec["preimage"]),
                _point(spec["start"]) if "start" in spec else None))
        else:
            raise ValueError("unknown marked type %r" % kind)
    if not marked and not trivial:
        raise ValueError("config needs at least one marked point")
    extra = [_point(p) for p in cfg.get("extra_punctures", [])]
    return {
        "name": cfg.get("name", os.path.splitext(os.path.basename(path))[0]),
        "g": g, "marked": marked, "trivial": trivial, "extra": extra,
        "tol": tol, "compose_iterate": cfg.get("compose_iterate"),
        "raw": cfg,
    }


def _build_run(cfg):
    m = cfg.get("compose_iterate")
    if m and m > 1:
        if len(cfg["marked"]) != 1 or cfg["trivial"]:
            raise ValueError("compose_iterate runs take exactly one fixed "
                             "marked point")
        return compose_iterate_run(cfg["g"], int(m), cfg["marked"][0],
                                   extra_punctures=cfg["extra"],
                                   tol=cfg["tol"])
    return init_run(cfg["g"], cfg["marked"], trivial=cfg["trivial"],
                    extra_punctures=cfg["extra"], tol=cfg["tol"])


def _out_dir(args):
    out = getattr(args, "out", None) or os.environ.get("PULLBACK_LAB_OUT") \
        or "."
    os.makedirs(out, exist_ok=True)
    return out


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, sort_keys=True, indent=1)
        fh.write("\n")


def _write_trace(path, trace):
    with open(path, "w") as fh:
        for line in trace.jsonl_lines():
            fh.write(line)
            fh.write("\n")


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


# ---------------------------------------------------------------------------
# subcommands

def cmd_analyze(args):
    cfg = load_config(args.config, args.tol, args.max_iters)
    an = postsingular_analysis(cfg["g"], max_orbit=cfg["tol"].max_orbit,
                               eps_cycle=cfg["tol"].eps_cycle)
    out = os.path.join(_out_dir(args), cfg["name"] + ".analysis.json")
    _write_json(out, an.to_json())
    print("analysis written to", out)
    return 0


def cmd_run(args, force_certificate=False):
    cfg = load_config(args.config, args.tol, args.max_iters)
    t_start = time.perf_counter()
    run = _build_run(cfg)
    trace, status = run_until(run)
    cls = classify_run(trace, run.g, run.punctures, tol=cfg["tol"])

    out = _out_dir(args)
    name = cfg["name"]
    cert = None
    cert_note = None
    if cls.verdict == "obstructed":
        cert, cert_note = certify_obstructed(run, engine_version=__version__,
                                             with_reason=True)
        if cert is None and force_certificate:
            raise PullbackLabError("no certificate emitted: %s" % cert_note)
        # extend the stored trace over the certification tail
        trace = Trace(trace.records + [
            _replay_record(run, n) for n in
            range(len(trace.records), run.n + 1)], status)
    elif force_certificate:
        raise PullbackLabError("run is not obstructed; nothing to certify")

    trace_path = os.path.join(out, name + ".trace.jsonl")
    _write_trace(trace_path, trace)
    digest = _sha256(trace_path)

    cert_path = None
    if cert is not None:
        cert.trace_digest = digest
        cert_path = os.path.join(out, name + ".certificate.json")
        payload = cert.to_json()
        payload["run_config"] = cfg["raw"]
        _write_json(cert_path, payload)

    report = {
        "name": name,
        "engine_version": __version__,
        "classification": cls.to_json(),
        "status": status.to_json(),
        "steps": run.n,
        "trace": os.path.basename(trace_path),
        "trace_digest": digest,
        "certificate": None if cert_path is None
        else os.path.basename(cert_path),
        "certificate_note": cert_note,
        "run_config": cfg["raw"],
        "timing_s": time.perf_counter() - t_start,
    }
    report_path = os.path.join(out, name + ".report.json")
    _write_json(report_path, report)
    print("%s: %s (%d steps) -> %s" % (name, cls, run.n, report_path))
    return 0


def _replay_record(run, n):
    """Trace record for an already-performed step (certification tail)."""
    saved = run.n
    # records are cheap to rebuild from history: positions and distances
    rec = {"n": n, "points": {}, "lift_residual": None, "path_nodes": None,
           "step_bound": None, "diagram_residual": None, "tail": True}
    for track in list(run.marked) + list(run.trivial):
        kind = "trivial" if track.label.startswith("t") else "fixed"
        mode, value = track.history[n]
        if mode == "anchored":
            entry = {"mode": "anchored", "type": kind,
                     "anchor": run.punctures.labels[track.anchor.index],
                     "eta": [value.m.real, value.m.imag], "exp2": value.e}
            entry["dist_log10"] = {
                lab: (track.anchor.chart.log10_dist_to_anchor(value)
                      if lab == run.punctures.labels[track.anchor.index]
                      else math.log10(max(chordal(
                          track.anchor.puncture, run.punctures.point(lab)),
                          1e-300)))
                for lab in run.punctures.labels}
        else:
            entry = {"mode": "free", "type": kind,
                     "value": [value.real, value.imag],
                     "dist_log10": {
                         lab: math.log10(max(chordal(
                             value, run.punctures.point(lab)), 1e-300))
                         for lab in run.punctures.labels}}
        rec["points"][track.label] = entry
    rec["min_dist_log10"] = {
        lab: min(entry["dist_log10"][lab] for entry in rec["points"].values())
        for lab in run.punctures.labels}
    assert run.n == saved
    return rec


def cmd_classify(args):
    cfg = load_config(args.config, args.tol, args.max_iters)
    records = _read_trace(args.trace)
    status_obj = _status_from_report(args)
    run = _build_run(cfg)  # punctures only; no stepping
    if status_obj is None:
        status_obj = _infer_status(records, run.punctures, cfg["tol"])
    trace = Trace(records, status_obj)
    cls = classify_run(trace, run.g, run.punctures, tol=cfg["tol"])
    print(json.dumps(cls.to_json(), sort_keys=True, indent=1))
    return 0


def _infer_status(records, punctures, tol):
    """Reconstruct the stopping rule from the stored records: a geometric
    fall into one puncture, interior Cauchy convergence, or neither."""
    from .fiber import RunStatus
    if len(records) < tol.K + 2:
        return RunStatus("undecided", reason="trace too short",
                         steps=records[-1]["n"] if records else 0)
    last = records[-1]
    for lab in punctures.labels:
        series = [rec["min_dist_log10"][lab] for rec in records[-6:]
                  if "min_dist_log10" in rec]
        if len(series) == 6 and 10.0 ** series[-1] < tol.eps_P and \
                all(b - a < math.log10(0.98)
                    for a, b in zip(series, series[1:])):
            return RunStatus("candidate_puncture", puncture_label=lab,
                             puncture=punctures.point(lab), steps=last["n"])
    deltas = []
    for prev, rec in zip(records[-(tol.K + 1):], records[-tol.K:]):
        worst = 0.0
        for lab, entry in rec["points"].items():
            before = prev["points"].get(lab)
            if entry["mode"] != "free" or before is None or \
                    before["mode"] != "free":
                worst = math.inf
                break
            worst = max(worst, chordal(complex(*entry["value"]),
                                       complex(*before["value"])))
        deltas.append(worst)
    if deltas and all(d < tol.eps_conv for d in deltas):
        return RunStatus("candidate_realized", steps=last["n"])
    return RunStatus("undecided", reason="max_iters", steps=last["n"])


def _read_trace(path):
    records = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records


def _status_from_report(args):
    from .fiber import RunStatus
    if not getattr(args, "report", None):
        return None
    with open(args.report) as fh:
        rep = json.load(fh)
    s = rep["status"]
    return RunStatus(s["kind"], puncture_label=s.get("puncture_label"),
                     puncture=None if s.get("puncture") in (None,)
                     else decode_point(s["puncture"]),
                     reason=s.get("reason", ""), steps=s.get("steps", 0))


def cmd_certify(args):
    return cmd_run(args, force_certificate=True)


def cmd_check(args):
    failures = []
    with open(args.cert) as fh:
        payload = json.load(fh)
    cert = LevyCertificate.from_json(payload)
    digest = _sha256(args.trace)
    if cert.trace_digest != digest:
        failures.append("trace digest mismatch: certificate says %s, file is %s"
                        % (cert.trace_digest, digest))

    run_cfg = payload.get("run_config")
    if run_cfg is None:
        failures.append("certificate does not embed its run config")
    else:
        cfg = _config_from_raw(run_cfg)
        records = _read_trace(args.trace)
        failures.extend(_trace_invariant_suite(records, cfg))
        run = _build_run(cfg)
        while run.n < cert.step:
            run.pullback_step()
        result = verify_certificate(cert, run)
        if not result:
            failures.extend(result.mismatches)
        base = getattr(args, "base_trace", None)
        if base:
            failures.extend(_functoriality_suite(records, base,
                                                 cfg.get("compose_iterate")))
        report_path = getattr(args, "report", None)
        if report_path:
            failures.extend(_report_reproducible(records, run, cfg,
                                                 report_path))
    if failures:
        for f in failures:
            print("CHECK FAIL:", f)
        return 1
    print("all checks passed")
    return 0


def _report_reproducible(records, run, cfg, report_path):
    """A report's verdict must be reproducible from its stored trace."""
    with open(report_path) as fh:
        rep = json.load(fh)
    status = _infer_status(records, run.punctures, cfg["tol"])
    cls = classify_run(Trace(records, status), run.g, run.punctures,
                       tol=cfg["tol"])
    want = rep["classification"]["verdict"]
    if cls.verdict != want:
        return ["report verdict %r not reproduced from the trace (got %r)"
                % (want, cls.verdict)]
    return []


def _config_from_raw(raw):
    import tempfile
    with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as fh:
        json.dump(raw, fh)
        path = fh.name
    try:
        return load_config(path)
    finally:
        os.unlink(path)


def _trace_invariant_suite(records, cfg):
    """Diagram invariants recomputed from the stored records alone (an
    edited position breaks |g(x_{n+1}) - x_n| at that step)."""
    from .local import ScaledComplex
    ref = _build_run(cfg)
    g = ref.g  # the composed map for iterate configs
    punctures = ref.punctures
    failures = []
    charts = {}

    def chart_for(label):
        if label not in charts:
            charts[label] = LocalFixedChart(g, punctures.point(label))
        return charts[label]

    prev = None
    for rec in records:
        for lab, entry in rec["points"].items():
            if prev is None or lab not in prev["points"]:
                continue
            before = prev["points"][lab]
            if entry["mode"] == "free" and before["mode"] == "free":
                x_new = complex(*entry["value"])
                x_old = complex(*before["value"])
                if rec["n"] >= 1:
                    res = chordal(g(x_new), x_old)
                    if res >= 1e-8:
                        failures.append(
                            "diagram invariant fails at n=%d, %s: %.3g"
                            % (rec["n"], lab, res))
            elif entry["mode"] == "anchored":
                chart = chart_for(entry["anchor"])
                eta_new = ScaledComplex(complex(*entry["eta"]), entry["exp2"])
                if before["mode"] == "anchored":
                    eta_old = ScaledComplex(complex(*before["eta"]),
                                            before["exp2"])
                else:
                    eta_old = chart.deviation_of(complex(*before["value"]))
                if not chart.check_step(eta_old, eta_new, rel_tol=1e-8):
                    failures.append(
                        "anchored diagram invariant fails at n=%d, %s"
                        % (rec["n"], lab))
        prev = rec
    return failures


def _functoriality_suite(records, base_trace_path, m):
    """Composed-run positions must subsample the base run's."""
    failures = []
    if not m or m < 2:
        return ["functoriality check needs a compose_iterate config"]
    base = _read_trace(base_trace_path)
    for j, rec in enumerate(records):
        if m * j >= len(base):
            break
        for lab, entry in rec["points"].items():
            b_entry = base[m * j]["points"].get(lab)
            if b_entry is None:
                continue
            if entry["mode"] == "free" and b_entry["mode"] == "free":
                d = abs(complex(*entry["value"]) - complex(*b_entry["value"]))
                if d >= 1e-8:
                    failures.append(
                        "functoriality: step %d differs from base step %d "
                        "by %.3g" % (j, m * j, d))
    return failures


def cmd_demo(args):
    from importlib import resources
    out = _out_dir(args)
    names = []
    pkg_files = resources.files("pullbacklab") / "demo_configs"
    for item in sorted(pkg_files.iterdir(), key=lambda p: p.name):
        if not item.name.endswith(".json"):
            continue
        target = os.path.join(out, item.name)
        with open(target, "w") as fh:
            fh.write(item.read_text())
        names.append(target)
    status = 0
    for path in names:
        ns = argparse.Namespace(config=path, out=out, tol=args.tol,
                                max_iters=args.max_iters)
        try:
            cmd_run(ns)
        except PullbackLabError as exc:
            print("demo %s failed: %s" % (path, exc))
            status = 3
    return status


# ---------------------------------------------------------------------------

def _tol_pair(text):
    if "=" not in text:
        raise argparse.ArgumentTypeError("--tol needs NAME=VALUE")
    name, value = text.split("=", 1)
    return name.strip(), value.strip()


def build_parser():
    ap = argparse.ArgumentParser(
        prog="pullback-lab",
        description="Pullback iteration on Bers fibers: realized/obstructed "
                    "classification with Levy-multicurve certificates.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", required=False)
        p.add_argument("--out", default=None)
        p.add_argument("--max-iters", dest="max_iters", type=int, default=None)
        p.add_argument("--tol", action="append", type=_tol_pair, default=[])
        p.add_argument("--batch", default=None,
                       help="glob of config files to run in sequence")

    p = sub.add_parser("analyze", help="postsingular analysis of the map")
    common(p)
    p = sub.add_parser("run", help="execute a pullback run end to end")
    common(p)
    p = sub.add_parser("classify", help="re-classify a stored trace")
    common(p)
    p.add_argument("--trace", required=True)
    p.add_argument("--report", default=None)
    p = sub.add_parser("certify", help="run and require a Levy certificate")
    common(p)
    p = sub.add_parser("check", help="verify a stored trace + certificate")
    p.add_argument("--trace", required=True)
    p.add_argument("--cert", required=True)
    p.add_argument("--base-trace", dest="base_trace", default=None)
    p.add_argument("--report", default=None,
                   help="also re-derive this report's verdict from the trace")
    p.add_argument("--out", default=None)
    p.add_argument("--tol", action="append", type=_tol_pair, default=[])
    p.add_argument("--max-iters", dest="max_iters", type=int, default=None)
    p = sub.add_parser("demo", help="run the shipped demo corpus")
    common(p, config=False)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    handlers = {"analyze": cmd_analyze, "run": cmd_run,
                "classify": cmd_classify, "certify": cmd_certify,
                "check": cmd_check, "demo": cmd_demo}
    handler = handlers[args.command]
    try:
        if getattr(args, "batch", None):
            status = 0
            for path in sorted(globmod.glob(args.batch)):
                args.config = path
                status = max(status, handler(args))
            return status
        if args.command in ("analyze", "run", "classify", "certify") \
                and not args.config:
            print("error: --config is required", file=sys.stderr)
            return 2
        return handler(args)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print("invalid config/input: %s" % exc, file=sys.stderr)
        return 2
    except PullbackLabError as exc:
        print("numerical failure: %s" % exc, file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
