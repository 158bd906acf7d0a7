"""Smoke test for the hyperharm extension module.

Build first:  pip install --no-build-isolation -e crates/hyperharm-py
Run:          python3 -m pytest python/smoke_test.py
"""
import json
import math

import pytest

import hyperharm as hh


def test_closed_forms_at_origin():
    for n in (3, 4, 7):
        assert hh.poisson_euclid(n, 0.0, 0.3) == pytest.approx(1.0, abs=1e-15)
        assert hh.poisson_hyp(n, 0.0, -0.8) == pytest.approx(1.0, abs=1e-15)


def test_series_interpolates_between_kernels():
    r, t = 0.6, 0.25
    e, _ = hh.poisson_series(4, r, 0.0, t)
    h, terms = hh.poisson_series(4, r, 1.0, t)
    assert e == pytest.approx(hh.poisson_euclid(4, r, t), rel=1e-10)
    assert h == pytest.approx(hh.poisson_hyp(4, r, t), rel=1e-10)
    assert terms > 10


def test_truncated_series_warns():
    with pytest.warns(RuntimeWarning):
        hh.poisson_series(3, 0.99, 1.0, 1.0, cap=20)


def test_lemma3_and_transfer():
    r, t = 0.4, -0.3
    assert hh.lemma3_kernel(4, r, t) == pytest.approx(hh.poisson_hyp(4, r, t), abs=1e-12)
    eta = hh.EtaKernel(3)
    assert eta.c == pytest.approx(2 / math.pi, rel=1e-12)
    assert eta.transfer_kernel(r, t) == pytest.approx(hh.poisson_euclid(3, r, t), abs=1e-9)


def test_harmonic_function_roundtrip():
    u = hh.HarmonicFunction.zonal(3, [0.0, 0.0, 1.0], [0.5, 1.0, -0.25])
    assert u.n == 3 and u.lmax == 2
    assert u([0.0, 0.0, 0.0]) == pytest.approx(0.5)
    assert u.apply_d([0.1, 0.2, 0.3]) == pytest.approx(0.0, abs=1e-12)
    xi = [0.0, 0.6, 0.8]
    near = u([0.0, 0.6 * 0.9999, 0.8 * 0.9999])
    assert near == pytest.approx(u.boundary_value(xi), abs=1e-3)
    assert abs(u.fd_residual([0.1, 0.2, 0.3], 1e-3, 1.0)) < 1e-5


def test_from_json_and_errors():
    u = hh.HarmonicFunction.from_json('{"n":3,"kind":"zonal-coeffs","pole":[0,0,1],"coeffs":[1]}')
    values, norms = u.functional("M", ps=[0.5, 2.0], grid_degree=4)
    assert all(v == pytest.approx(1.0) for v in values)
    assert norms == pytest.approx([1.0, 1.0])
    with pytest.raises(ValueError):
        hh.HarmonicFunction.from_json('{"n":3,"kind":"zonal-coeffs","pole":[0,0,1]}')
    with pytest.raises(ValueError):
        u.functional("bogus")


def test_verify_suite_report():
    reports = json.loads(hh.run_verify("operator-identities", seed=7))
    assert reports[0]["suite"] == "operator-identities"
    assert reports[0]["status"] == "pass"
    assert "operator-identities" in hh.SUITES
