import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rcqme.errors import DomainError, ParameterError
from rcqme.spectra import (BathSpec, BrownianParams, OhmicParams, bose_einstein, brownian_j,
                           brownian_rate, ohmic_j, rc_rate)

from oracles import brownian_j_ref

CUTOFF = 1000 * math.pi

pos = st.floats(1e-3, 1e2, allow_nan=False)
betas = st.floats(0.05, 20.0)


def ohmic_bath(gamma=0.1, beta=2.0, cutoff=CUTOFF):
    return BathSpec(beta, OhmicParams(gamma, cutoff))


# --- brownian_j -------------------------------------------------------------

def test_brownian_zero_frequency():
    assert brownian_j(0.0, BrownianParams(3.0, 0.1, 1.0)) == 0.0


@pytest.mark.parametrize("om, g, lam, expected", [
    (3.0, 0.1, 1.0, 1.061033),
    (5.0, 0.071, 1.0, 0.896648),
])
def test_brownian_at_peak(om, g, lam, expected):
    # J(W) = lam^2 / (pi gamma W)
    val = brownian_j(om, BrownianParams(om, g, lam))
    assert val == pytest.approx(expected, abs=5e-7)
    assert val == pytest.approx(lam**2 / (math.pi * g * om), rel=1e-14)


def test_brownian_rejects_negative():
    with pytest.raises(DomainError):
        brownian_j(-1.0, BrownianParams(3.0, 0.1, 1.0))


def test_brownian_array_and_scalar():
    p = BrownianParams(3.0, 0.1, 1.0)
    w = np.linspace(0, 10, 7)
    out = brownian_j(w, p)
    assert isinstance(out, np.ndarray) and out.shape == w.shape
    assert isinstance(brownian_j(1.0, p), float)
    np.testing.assert_allclose(out, brownian_j_ref(w, 3.0, 0.1, 1.0), rtol=1e-14)


@given(w=st.floats(0, 1e4), om=pos, g=st.floats(1e-3, 2.0), lam=st.floats(0, 10))
def test_brownian_nonnegative(w, om, g, lam):
    assert brownian_j(w, BrownianParams(om, g, lam)) >= 0.0


@given(om=st.floats(0.1, 10), g=st.floats(1e-3, 1.0), lam=st.floats(0.01, 5),
       k=st.floats(100, 1e4))
def test_brownian_cubic_tail(om, g, lam, k):
    p = BrownianParams(om, g, lam)
    w = k * om
    asym = 4 * om**2 * lam**2 * g / math.pi
    assert w**3 * brownian_j(w, p) == pytest.approx(asym, rel=0.05)


@pytest.mark.parametrize("kwargs", [
    dict(omega_rc=0.0, gamma=0.1, lam=1.0),
    dict(omega_rc=3.0, gamma=0.0, lam=1.0),
    dict(omega_rc=3.0, gamma=0.1, lam=-1.0),
])
def test_brownian_params_validated(kwargs):
    with pytest.raises(ParameterError):
        BrownianParams(**kwargs)


# --- ohmic_j ----------------------------------------------------------------

def test_ohmic_values():
    p = OhmicParams(0.1, CUTOFF)
    assert ohmic_j(0.0, p) == 0.0
    assert ohmic_j(CUTOFF, p) == pytest.approx(0.1 / math.pi * CUTOFF / math.e, rel=1e-14)
    eps = 1e-9
    assert ohmic_j(eps, p) / eps == pytest.approx(0.1 / math.pi, rel=1e-9)
    with pytest.raises(DomainError):
        ohmic_j(-0.1, p)


@given(w=st.floats(0, 1e5), g=pos, cut=pos)
def test_ohmic_nonnegative(w, g, cut):
    assert ohmic_j(w, OhmicParams(g, cut)) >= 0.0


# --- bose_einstein -----------------------------------------------------------

def test_bose_einstein_values():
    assert bose_einstein(math.log(2), 1.0) == pytest.approx(1.0, rel=1e-14)
    assert bose_einstein(1e4, 1.0) == 0.0
    # direct evaluation: 1/(e^0.01 - 1); the series 1/x - 1/2 + x/12 gives the same
    assert bose_einstein(0.01, 1.0) == pytest.approx(99.50083333194443, rel=1e-13)
    assert bose_einstein(0.01, 1.0) == pytest.approx(1 / 0.01 - 0.5 + 0.01 / 12, rel=1e-9)


@pytest.mark.parametrize("w", [0.0, -1.0])
def test_bose_einstein_domain(w):
    with pytest.raises(DomainError):
        bose_einstein(w, 1.0)


def test_infinite_beta_rejected():
    with pytest.raises(ParameterError):
        BathSpec(math.inf, OhmicParams(0.1, 1.0))
    with pytest.raises(ParameterError):
        BathSpec(0.0, OhmicParams(0.1, 1.0))


# --- rc_rate -----------------------------------------------------------------

def test_rc_rate_zero_limit():
    assert rc_rate(0.0, ohmic_bath(0.071, 2.0)) == pytest.approx(0.0355, rel=1e-14)
    assert rc_rate(5e-10, ohmic_bath(0.071, 2.0)) == pytest.approx(0.0355, rel=1e-14)


def test_rc_rate_example():
    # pi * (0.1/pi) * 3 e^{-3/cutoff} / (e^6 - 1)
    val = rc_rate(3.0, ohmic_bath(0.1, 2.0))
    assert val == pytest.approx(0.3 * math.exp(-3 / CUTOFF) / math.expm1(6.0), rel=1e-14)
    assert val == pytest.approx(7.447619620883661e-4, rel=1e-12)


def test_rc_rate_continuous_at_zero():
    b = ohmic_bath(0.1, 2.0)
    assert rc_rate(1e-6, b) == pytest.approx(0.1 / 2.0, rel=1e-4)
    assert rc_rate(-1e-6, b) == pytest.approx(0.1 / 2.0, rel=1e-4)


@given(w=st.floats(1e-6, 50), g=pos, beta=betas)
def test_rc_rate_detailed_balance(w, g, beta):
    b = ohmic_bath(g, beta)
    fwd = rc_rate(w, b)
    if fwd > 1e-280:
        assert rc_rate(-w, b) / fwd == pytest.approx(math.exp(beta * w), rel=1e-9)


def test_rc_rate_requires_ohmic():
    with pytest.raises(TypeError):
        rc_rate(1.0, BathSpec(2.0, BrownianParams(3.0, 0.1, 1.0)))
    with pytest.raises(TypeError):
        brownian_rate(1.0, ohmic_bath())


def test_rc_rate_vectorized():
    b = ohmic_bath()
    w = np.array([-3.0, 0.0, 3.0])
    out = rc_rate(w, b)
    np.testing.assert_allclose(out, [rc_rate(x, b) for x in w], rtol=0)


@settings(max_examples=50)
@given(w=st.floats(1e-5, 30), beta=betas, lam=st.floats(0.01, 5), g=st.floats(0.005, 0.5))
def test_brownian_rate_detailed_balance(w, beta, lam, g):
    b = BathSpec(beta, BrownianParams(3.0, g, lam))
    fwd = brownian_rate(w, b)
    if fwd > 1e-280:
        assert brownian_rate(-w, b) / fwd == pytest.approx(math.exp(beta * w), rel=1e-9)


def test_brownian_rate_zero_limit():
    b = BathSpec(2.0, BrownianParams(3.0, 0.1, 1.0))
    zero = 4 * 0.1 * 1.0 / (9.0 * 2.0)
    assert brownian_rate(0.0, b) == pytest.approx(zero, rel=1e-14)
    assert brownian_rate(1e-6, b) == pytest.approx(zero, rel=1e-5)
