import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rcqme.errors import ConvergenceError, DomainError, ParameterError
from rcqme.exact import (DecoherenceTrace, bmr_coherence, decoherence_closed_form,
                         decoherence_exact, exact_evolve, exact_trace, longtime_rate, tau_d_json)
from rcqme.spectra import BrownianParams

from oracles import gamma_riemann

BETA, OM = 2.0, 3.0

# (t, lam, gamma, Gamma) from oracles.gamma_riemann: trapezoid rule, 1e7 uniform
# nodes on [1e-8, 1e3]; omega_rc = 3, beta = 2
RIEMANN_FROZEN = [
    (1.0, 0.1, 0.1, -0.00852901838877791),
    (0.5, 0.1, 0.01, -0.004120995165904622),
    (2.0, 0.5, 0.03, -0.03813673687736925),
    (5.0, 1.0, 0.1, -0.953217650972451),
    (10.0, 1.0, 0.01, -0.4929727103853127),
    (20.0, 2.0, 0.3, -23.03731162648124),
    (35.0, 5.0, 0.1, -89.11681760374564),
    (50.0, 0.1, 0.01, -0.00824747959120376),
    (3.0, 5.0, 0.01, -21.075818605848117),
    (7.5, 0.3, 0.3, -0.2183598649316044),
    (12.0, 1.5, 0.05, -2.2618699765293475),
    (0.1, 2.0, 0.1, -0.07600820923170527),
    (25.0, 0.5, 0.2, -1.2227378456497064),
    (40.0, 1.0, 0.03, -1.5062014551495555),
    (1.5, 3.0, 0.01, -5.03883239380918),
    (8.0, 0.2, 0.02, -0.01942501876170874),
    (15.0, 4.0, 0.08, -24.171191974720987),
    (30.0, 0.7, 0.5, -6.70279489572341),
    (45.0, 2.5, 0.015, -6.918951787756328),
    (4.2, 1.2, 0.25, -1.9564888086887993),
]


def bp(lam, gamma):
    return BrownianParams(OM, gamma, lam)


@pytest.mark.parametrize("t, lam, g, ref", RIEMANN_FROZEN)
def test_quadrature_matches_dense_grid_oracle(t, lam, g, ref):
    assert decoherence_exact(t, bp(lam, g), BETA) == pytest.approx(ref, rel=1e-6)


@pytest.mark.parametrize("t, lam, g, ref", RIEMANN_FROZEN)
def test_closed_form_matches_dense_grid_oracle(t, lam, g, ref):
    assert decoherence_closed_form(t, bp(lam, g), BETA) == pytest.approx(ref, rel=1e-6)


def test_oracle_live_recomputation():
    # guards the frozen table against drift in the oracle itself
    t, lam, g, ref = RIEMANN_FROZEN[0]
    assert gamma_riemann(t, OM, g, lam, BETA, n=2 * 10**6) == pytest.approx(ref, rel=1e-6)


def test_gamma_zero_at_origin():
    assert decoherence_exact(0.0, bp(1.0, 0.1), BETA) == 0.0
    assert decoherence_closed_form(0.0, bp(1.0, 0.1), BETA) == 0.0


@settings(max_examples=25)
@given(t=st.floats(0.0, 60.0), lam=st.floats(0.05, 5.0), g=st.floats(0.005, 0.6))
def test_closed_form_agrees_with_quadrature(t, lam, g):
    p = bp(lam, g)
    q = decoherence_exact(t, p, BETA)
    c = decoherence_closed_form(t, p, BETA)
    assert c == pytest.approx(q, rel=1e-7, abs=1e-12)


@settings(max_examples=25)
@given(t=st.floats(0.0, 200.0), lam=st.floats(0.01, 5.0), g=st.floats(0.005, 0.6),
       beta=st.floats(0.2, 10.0))
def test_gamma_nonpositive(t, lam, g, beta):
    assert decoherence_closed_form(t, bp(lam, g), beta) <= 1e-12


@settings(max_examples=15)
@given(t=st.floats(0.01, 50.0), lam=st.floats(0.05, 3.0), g=st.floats(0.01, 0.5))
def test_quadratic_in_lambda(t, lam, g):
    one = decoherence_exact(t, bp(lam, g), BETA)
    two = decoherence_exact(t, bp(2 * lam, g), BETA)
    assert two == pytest.approx(4 * one, rel=1e-7)


@pytest.mark.parametrize("lam, g", [(0.1, 0.01), (0.1, 0.1), (1.0, 0.01), (1.0, 0.1)])
def test_long_time_slope(lam, g):
    p = bp(lam, g)
    rate, tau = longtime_rate(p, BETA)
    t = 10 * tau
    assert abs(decoherence_closed_form(t, p, BETA) / t + rate) / rate <= 0.05


def test_longtime_rate_values():
    assert longtime_rate(bp(0.1, 0.01), BETA).tau_d == pytest.approx(11250.0, rel=1e-14)
    assert longtime_rate(bp(1.0, 0.01), BETA).tau_d == pytest.approx(112.5, rel=1e-14)
    r = longtime_rate(bp(0.0, 0.01), BETA)
    assert r.rate == 0.0 and math.isinf(r.tau_d)
    assert tau_d_json(r.tau_d) == "no_decoherence"
    assert tau_d_json(112.5) == 112.5


def test_stitching_is_explicit():
    p = bp(1.0, 0.1)
    rate, tau = longtime_rate(p, BETA)
    t = 25 * tau
    stitched = decoherence_exact(t, p, BETA, stitch=True)
    direct = decoherence_closed_form(t, p, BETA)
    assert stitched == pytest.approx(direct, rel=1e-8)
    # stitching off by default: short t unaffected either way
    assert decoherence_exact(5.0, p, BETA, stitch=True) == decoherence_exact(5.0, p, BETA)


def test_quadrature_errors():
    p = bp(1.0, 0.1)
    with pytest.raises(DomainError):
        decoherence_exact(-1.0, p, BETA)
    with pytest.raises(DomainError):
        decoherence_exact(1.0, p, BETA, tol=0.5)
    with pytest.raises(ConvergenceError) as info:
        decoherence_exact(1000.0, bp(1.0, 0.01), BETA, max_panels=100)
    assert info.value.estimate is None or info.value.estimate >= 0


def test_closed_form_rejects_critical_damping_but_trace_falls_back():
    p = BrownianParams(OM, 1.0, 0.5)
    with pytest.raises(ParameterError):
        decoherence_closed_form(1.0, p, BETA)
    tr = exact_trace([0.0, 1.0, 2.0], p, BETA)
    assert tr.meta["evaluation"] == "quadrature"
    assert tr.gamma_values[0] == 0.0 and np.all(tr.gamma_values <= 0)


# --- state evolution ------------------------------------------------------------

PLUS = 0.5 * np.ones((2, 2), dtype=complex)


def test_exact_evolve_example():
    rho = exact_evolve(PLUS, math.pi, 1.0, -1.0)
    assert rho[0, 1] == pytest.approx(-0.5 * math.exp(-1), abs=1e-15)
    assert rho[0, 1].real == pytest.approx(-0.18394, abs=5e-6)
    np.testing.assert_array_equal(exact_evolve(PLUS, 0.0, 1.0, 0.0), PLUS)


@given(t=st.floats(0, 100), g=st.floats(-50, 0), theta=st.floats(0, math.pi),
       phi=st.floats(0, 2 * math.pi), r=st.floats(0, 1))
def test_exact_evolve_keeps_state_valid(t, g, theta, phi, r):
    n = r * np.array([math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi),
                      math.cos(theta)])
    rho0 = 0.5 * np.array([[1 + n[2], n[0] - 1j * n[1]], [n[0] + 1j * n[1], 1 - n[2]]])
    rho = exact_evolve(rho0, t, 1.0, g)
    assert np.allclose(rho, rho.conj().T, atol=1e-15)
    assert np.trace(rho).real == pytest.approx(1.0, abs=1e-14)
    assert np.linalg.eigvalsh(rho).min() >= -1e-12
    assert rho[0, 0] == rho0[0, 0] and rho[1, 1] == rho0[1, 1]


def test_exact_evolve_rejects_positive_gamma():
    with pytest.raises(DomainError):
        exact_evolve(PLUS, 1.0, 1.0, 0.1)


def test_bmr_coherence():
    p = bp(1.0, 0.1)
    tau = longtime_rate(p, BETA).tau_d
    assert bmr_coherence(0.0, 1.0, p, BETA) == 1.0
    assert abs(bmr_coherence(tau, 1.0, p, BETA)) == pytest.approx(math.exp(-1), rel=1e-12)
    t = np.linspace(0, 3, 31)
    c = bmr_coherence(t, 1.0, p, BETA)
    np.testing.assert_allclose(np.angle(c * np.exp(1j * t)), 0, atol=1e-12)
    assert np.all(np.diff(np.abs(c)) <= 0)


def test_trace_csv_round_trip(tmp_path):
    tr = exact_trace(np.linspace(0, 5, 11), bp(1.0, 0.1), BETA)
    tr.to_csv(tmp_path / "g.csv")
    back = DecoherenceTrace.from_csv(tmp_path / "g.csv")
    np.testing.assert_array_equal(back.times, tr.times)
    np.testing.assert_array_equal(back.gamma_values, tr.gamma_values)
    assert back.source == "exact"
    text = (tmp_path / "g.csv").read_text()
    assert "time,gamma,abs_coherence" in text


def test_trace_validation():
    with pytest.raises(ParameterError):
        DecoherenceTrace([0, 1, 1], [0, 0, 0], "exact")
    with pytest.raises(ParameterError):
        DecoherenceTrace([0, 1], [0, 0], "other")
