from fractions import Fraction

import mpmath
import pytest

import qfb

mpmath.mp.dps = 60


def test_origin_value():
    r = qfb.evaluate("0.5", "0", "0")
    assert mpmath.mpf(r["value"]["value"]) == 1
    assert r["derivative"] is None


def test_value_against_mpmath_series():
    q, nu, z = mpmath.mpf("0.5"), mpmath.mpf("0.5"), mpmath.mpf("1.3")
    b = q * q
    prefactor = mpmath.qp(b ** (nu + 1), b) / mpmath.qp(b, b)
    series = mpmath.nsum(
        lambda k: (-1) ** int(k) * b ** (k * (k + 1) / 2) * z ** (2 * k) / (mpmath.qp(b ** (nu + 1), b, k) * mpmath.qp(b, b, k)),
        [0, mpmath.inf],
    )
    expected = z**nu * prefactor * series
    got = mpmath.mpf(qfb.evaluate("0.5", "0.5", "1.3", digits=60)["value"]["value"])
    assert abs(got - expected) < mpmath.mpf("1e-50") * abs(expected)


def test_q_integral_of_power():
    value = mpmath.mpf(qfb.qintegral_power("0.8", "3", digits=60))
    exact = Fraction(2, 10) / (1 - Fraction(8, 10) ** 4)
    assert abs(value - mpmath.mpf(exact.numerator) / exact.denominator) < mpmath.mpf("1e-55")


def test_zero_table():
    table = qfb.zeros("0.5", "0", 6, digits=60)
    js = [mpmath.mpf(r["j"]) for r in table["zeros"]]
    assert len(js) == 6
    assert js == sorted(js)


def test_verify_subset():
    report = qfb.verify("0.5", "0", k_max=6, digits=60, checks=["gram"])
    assert {row["check"] for row in report["rows"]} == {"gram"}
    assert all(row["status"] != "fail" for row in report["rows"])


def test_expand_mode():
    result = qfb.expand("0.5", "0", f="mode:2", K=4, k_max=6, points=8, digits=60)
    a = [mpmath.mpf(m["a"]) for m in result["modes"]]
    assert abs(a[1] - 1) < mpmath.mpf("1e-30")
    assert all(abs(x) < mpmath.mpf("1e-30") for i, x in enumerate(a) if i != 1)


def test_invalid_parameters():
    with pytest.raises(ValueError, match=r"q must lie strictly inside \(0,1\)"):
        qfb.evaluate("1.2", "0", "1")
    with pytest.raises(ValueError):
        qfb.verify("0.5", "0", checks=["nonsense"])


def test_check_ids_have_anchors():
    ids = qfb.check_ids()
    assert ids == sorted(ids)
    assert all(qfb.check_anchor(i) for i in ids)
