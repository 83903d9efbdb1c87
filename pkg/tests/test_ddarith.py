import mpmath
import numpy as np

from klshell.ddarith import DD, dd_sum, residual_dd, two_prod, two_sum

mpmath.mp.prec = 200


def mpf_of(x: DD):
    return [mpmath.mpf(float(h)) + mpmath.mpf(float(l))
            for h, l in zip(np.atleast_1d(x.hi), np.atleast_1d(x.lo))]


def test_two_sum_exact():
    rng = np.random.default_rng(0)
    a = rng.standard_normal(1000) * 10.0**rng.integers(-20, 20, 1000)
    b = rng.standard_normal(1000) * 10.0**rng.integers(-20, 20, 1000)
    s, e = two_sum(a, b)
    for av, bv, sv, ev in zip(a, b, s, e):
        assert mpmath.mpf(sv) + mpmath.mpf(ev) == mpmath.mpf(av) + mpmath.mpf(bv)


def test_two_prod_exact():
    rng = np.random.default_rng(1)
    a = rng.standard_normal(500)
    b = rng.standard_normal(500)
    p, e = two_prod(a, b)
    for av, bv, pv, ev in zip(a, b, p, e):
        assert mpmath.mpf(pv) + mpmath.mpf(ev) == mpmath.mpf(av) * mpmath.mpf(bv)


def _relative_err(got: DD, want):
    vals = mpf_of(got)
    return max(abs((v - w) / w) for v, w in zip(vals, want) if w != 0)


def test_dd_arithmetic_accuracy():
    rng = np.random.default_rng(2)
    a = rng.standard_normal(200)
    b = rng.standard_normal(200) + 2.0
    xa, xb = DD(a), DD(b)
    ma = [mpmath.mpf(v) for v in a]
    mb = [mpmath.mpf(v) for v in b]
    assert _relative_err(xa + xb, [p + q for p, q in zip(ma, mb)]) < 1e-31
    assert _relative_err(xa * xb, [p * q for p, q in zip(ma, mb)]) < 1e-31
    assert _relative_err(xa / xb, [p / q for p, q in zip(ma, mb)]) < 1e-30
    assert _relative_err((xb * xb).sqrt(), [abs(q) for q in mb]) < 1e-30


def test_dd_keeps_sub_ulp_residue():
    x = DD(np.array([1.0])) + DD(np.array([1e-17]))
    assert (x - 1.0).to_float()[0] == 1e-17


def test_dd_sum_tree_matches_mpmath():
    rng = np.random.default_rng(3)
    v = rng.standard_normal(1537) * 10.0**rng.integers(-8, 8, 1537)
    s = dd_sum(DD(v))
    want = sum(mpmath.mpf(x) for x in v)
    got = mpmath.mpf(float(s.hi)) + mpmath.mpf(float(s.lo))
    assert abs(got - want) <= abs(want) * mpmath.mpf(2) ** -95


def test_residual_dd_matches_mpmath():
    rng = np.random.default_rng(4)
    n = 40
    K = rng.standard_normal((n, n))
    x = rng.standard_normal(n)
    F = K @ x
    r = residual_dd(K, x, F)
    for i in range(n):
        want = mpmath.mpf(F[i]) - sum(mpmath.mpf(K[i, j]) * mpmath.mpf(x[j])
                                      for j in range(n))
        got = mpmath.mpf(float(r.hi[i])) + mpmath.mpf(float(r.lo[i]))
        assert abs(got - want) < mpmath.mpf(10) ** -25
