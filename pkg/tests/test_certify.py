import copy
import math

import pytest

from pullbacklab.certify import (certify_obstructed, classify_run,
                                 emit_levy_certificate,
                                 find_separating_annulus, injectivity_test,
                                 verify_certificate, LevyCertificate)
from pullbacklab.errors import (InjectivityUndetermined, NoSeparatingAnnulus)
from pullbacklab.fiber import BranchDatum, init_run, pullback_step, run_until
from pullbacklab.hyperbolic import (ELL_STAR, RoundAnnulus, annulus_modulus)
from pullbacklab.ratmap import RationalMap
from pullbacklab.sphere import Configuration, INF

CHEB = RationalMap([-2, 0, 1])
BASILICA = RationalMap([-1, 0, 1])
SQUARE = RationalMap([0, 0, 1])


def finished(g, datum, extra=(), max_iters=400):
    run = init_run(g, [datum], extra_punctures=extra)
    trace, status = run_until(run, max_iters=max_iters)
    return run, trace, status


def test_classify_obstructed_chebyshev():
    run, trace, status = finished(CHEB, BranchDatum(0.0, math.sqrt(2)))
    cls = classify_run(trace, CHEB, run.punctures)
    assert cls.verdict == "obstructed"
    assert cls.puncture == 2 + 0j
    assert 0.24 < cls.rate_estimate < 0.26
    assert abs(cls.multiplier - 4) < 1e-9


def test_classify_realized_basilica():
    run, trace, status = finished(BASILICA, BranchDatum(-0.6, -math.sqrt(0.4)))
    cls = classify_run(trace, BASILICA, run.punctures)
    assert cls.verdict == "realized"
    assert abs(cls.x_star - (1 - math.sqrt(5)) / 2) < 1e-8
    assert cls.residual < 1e-9
    assert abs(cls.multiplier - (1 - math.sqrt(5))) < 1e-6


def test_classify_squaring_rate():
    run, trace, status = finished(SQUARE, BranchDatum(0.5, math.sqrt(0.5)),
                                  extra=(1.0,))
    cls = classify_run(trace, SQUARE, run.punctures)
    assert cls.verdict == "obstructed"
    assert cls.puncture == 1 + 0j
    assert 0.49 < cls.rate_estimate < 0.51


def test_classify_undecided():
    run, trace, status = finished(CHEB, BranchDatum(0.0, math.sqrt(2)),
                                  max_iters=3)
    cls = classify_run(trace, CHEB, run.punctures)
    assert cls.verdict == "undecided"


def test_classify_anomaly_non_repelling_limit():
    # a candidate limit at a superattracting puncture is flagged as a
    # likely lifting fault, never silently classified
    from pullbacklab.fiber import RunStatus, Trace
    run, trace, status = finished(CHEB, BranchDatum(0.0, math.sqrt(2)))
    forged = Trace(trace.records,
                   RunStatus("candidate_puncture", puncture_label="p2",
                             puncture=INF, steps=status.steps))
    cls = classify_run(forged, CHEB, run.punctures)
    assert cls.verdict == "undecided"
    assert "non-repelling" in cls.reason


def test_find_separating_annulus_derived():
    cfg = Configuration("abcd", [-2 + 0j, 2 + 0j, INF, 1.999 + 0j])
    ann = find_separating_annulus(cfg, ["a", "b", "c"], ["b", "d"])
    assert abs(ann.center - 1.9995) < 1e-12
    assert abs(ann.r_in - 1.05 * 0.0005) < 1e-9
    assert abs(ann.r_out - 0.95 * 3.9995) < 1e-9
    assert abs(annulus_modulus(ann) - 1.4144) < 0.001

    cfg2 = Configuration("abcd", [0j, 1 + 0j, INF, 0.5 + 0j])
    ann2 = find_separating_annulus(cfg2, ["a", "b", "c"], ["a", "d"])
    assert abs(ann2.r_in - 0.2625) < 1e-12
    assert abs(ann2.r_out - 0.7125) < 1e-12
    assert abs(annulus_modulus(ann2) - 0.159) < 0.001


def test_find_separating_annulus_errors():
    cfg = Configuration("abcd", [-2 + 0j, 2 + 0j, INF, 1.999 + 0j])
    with pytest.raises(NoSeparatingAnnulus):
        find_separating_annulus(cfg, ["a"], ["b"])  # one-point cluster
    wide = Configuration("abcd", [0j, 1 + 0j, INF, 0.5 + 0j])
    with pytest.raises(NoSeparatingAnnulus):
        # cluster {0, 1} leaves 0.5 inside: r_out < r_in
        find_separating_annulus(wide, ["a", "b", "c"], ["a", "b"])


def test_injectivity_passes_chebyshev_annulus():
    ann = RoundAnnulus.from_radii(2 + 0j, 0.01, 1.5)
    evidence = injectivity_test(CHEB, ann, 1)
    assert evidence["k"] == 1 and len(evidence["stages"]) == 1
    assert evidence["stages"][0]["critical_clearance"] > 1e-6


def test_injectivity_fails_doubly_covered_boundary():
    # 0.5 < |z| < 2 under z^2: the annulus surrounds the critical point,
    # its boundary image is traversed twice
    ann = RoundAnnulus.from_radii(0j, 0.5, 2.0)
    with pytest.raises(InjectivityUndetermined):
        injectivity_test(SQUARE, ann, 1)


def test_injectivity_k0_vacuous():
    ann = RoundAnnulus.from_radii(0j, 0.5, 2.0)
    evidence = injectivity_test(SQUARE, ann, 0)
    assert evidence["stages"] == []


def test_emit_and_verify_certificate():
    run, trace, status = finished(CHEB, BranchDatum(0.0, math.sqrt(2)),
                                  max_iters=2000)
    cert = certify_obstructed(run, engine_version="test")
    assert cert is not None
    thr = 5 * math.pi * math.exp(run.d0_bound()) / ELL_STAR
    assert cert.step <= math.ceil((thr + 3) / 0.22)
    assert cert.modulus > cert.threshold
    assert cert.length_bound < ELL_STAR
    assert cert.inner_count_A >= 2 and cert.outer_count_A >= 2
    assert cert.inner_count_B <= 1 and cert.outer_count_B >= 2
    assert len(cert.representative_curves) == cert.k + 1
    assert cert.distinct_curve_classes() <= cert.k
    assert verify_certificate(cert, run).ok


def test_certificate_modulus_growth():
    run, _, _ = finished(CHEB, BranchDatum(0.0, math.sqrt(2)), max_iters=2000)
    cert = certify_obstructed(run)
    for _ in range(4):
        pullback_step(run)
    nxt = emit_levy_certificate(run)
    per_step = (nxt.modulus - cert.modulus) / (nxt.step - cert.step)
    target = math.log(4) / (2 * math.pi)
    assert abs(per_step - target) < 0.1 * target


def test_certificate_tamper_detection():
    run, _, _ = finished(CHEB, BranchDatum(0.0, math.sqrt(2)), max_iters=2000)
    cert = certify_obstructed(run)
    bad = copy.copy(cert)
    bad.modulus = cert.modulus * 0.5
    assert not verify_certificate(bad, run)
    forged = copy.copy(cert)
    forged.inner_count_B = 2
    assert not verify_certificate(forged, run)
    moved = copy.copy(cert)
    moved.annulus = RoundAnnulus(cert.annulus.center,
                                 cert.annulus.log_rin - 5.0,
                                 cert.annulus.log_rout,
                                 anchor=cert.annulus.anchor)
    assert not verify_certificate(moved, run)


def test_certificate_json_roundtrip():
    run, _, _ = finished(CHEB, BranchDatum(0.0, math.sqrt(2)), max_iters=2000)
    cert = certify_obstructed(run)
    back = LevyCertificate.from_json(cert.to_json())
    assert back.modulus == cert.modulus
    assert back.curve_enclosed_labels == cert.curve_enclosed_labels
    assert verify_certificate(back, run).ok


def test_no_emission_on_early_step():
    run = init_run(CHEB, [BranchDatum(0.0, math.sqrt(2))])
    pullback_step(run)
    assert emit_levy_certificate(run) is None  # configuration well separated


def test_emission_floor_reason():
    # a run whose threshold pushes the cluster scale below double range
    # declines to certify, with an explicit reason
    b = -1 / 3 + 0.5j
    run = init_run(SQUARE, [BranchDatum(b, b ** 0.5)], extra_punctures=[1.0])
    cert, note = certify_obstructed(run, with_reason=True, max_steps=50)
    assert cert is None
    assert "below the double-range" in note
