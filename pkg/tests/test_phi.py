"""Phi generators, entropies, decomposition and duality identities."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from twoscale import phi
from twoscale.errors import DomainError, UnsupportedPhiError

SQ = phi.PhiFunction.square()
XL = phi.PhiFunction.xlogx()


# ---------------------------------------------------------------------------
# Evaluations and conjugates

def test_phi_eval_square():
    assert phi.phi_eval(SQ, 3.0) == (9.0, 6.0, 2.0)


def test_phi_eval_xlogx_at_one():
    v, d1, d2 = phi.phi_eval(XL, 1.0)
    assert (v, d1, d2) == (0.0, 1.0, 1.0)


def test_power_p2_matches_square_up_to_shift():
    p2 = phi.PhiFunction.power(2.0)
    for t in (0.3, 1.0, 2.5, 7.0):
        v, d1, d2 = phi.phi_eval(p2, t)
        assert v == pytest.approx(t * t - 1.0, rel=1e-15)
        assert d1 == pytest.approx(2.0 * t, rel=1e-15)
        assert d2 == 2.0


def test_power_exponent_range():
    with pytest.raises(DomainError):
        phi.PhiFunction.power(1.0)
    with pytest.raises(DomainError):
        phi.PhiFunction.power(2.5)
    phi.PhiFunction.power(2.0)  # boundary included


def test_conjugate_square():
    assert phi.conjugate_eval(SQ, 6.0) == 9.0
    # identity at t = 3: Phi(3) + Phi*(Phi'(3)) = 3 * Phi'(3)
    assert 9.0 + phi.conjugate_eval(SQ, 6.0) == 3.0 * 6.0


def test_conjugate_xlogx():
    assert phi.conjugate_eval(XL, 1.0) == 1.0
    v, d1, _ = phi.phi_eval(XL, 1.0)
    assert v + phi.conjugate_eval(XL, d1) == pytest.approx(1.0 * d1, abs=1e-15)


def test_conjugate_power_unsupported():
    with pytest.raises(UnsupportedPhiError):
        phi.conjugate_eval(phi.PhiFunction.power(1.5), 1.0)
    with pytest.raises(UnsupportedPhiError):
        phi.PhiFunction.power(1.5).conjugate_d1(1.0)


def test_conjugate_identity_on_grids():
    for t in np.linspace(-100.0, 100.0, 401):
        v, d1, _ = phi.phi_eval(SQ, t)
        assert abs(v + phi.conjugate_eval(SQ, d1) - t * d1) <= 1e-12
    for t in np.logspace(-2, 2, 401):
        v, d1, _ = phi.phi_eval(XL, t)
        assert abs(v + phi.conjugate_eval(XL, d1) - t * d1) <= 1e-12


def test_xlogx_domain_errors():
    with pytest.raises(DomainError):
        phi.phi_eval(XL, -1.0)
    with pytest.raises(DomainError):
        phi.phi_eval(XL, 0.0)
    with pytest.raises(DomainError):
        phi.phi_eval(XL, 1e-305)  # below the positive floor: rejected, not clamped


def test_convexity_and_inverse_d2_concavity_midpoints():
    rng = np.random.default_rng(3)
    for pf in (SQ, XL, phi.PhiFunction.power(1.3), phi.PhiFunction.power(2.0)):
        lo = 1e-3 if pf.kind != phi.SQUARE else -50.0
        t1 = rng.uniform(lo, 50.0, 200)
        t2 = rng.uniform(lo, 50.0, 200)
        mid = (t1 + t2) / 2.0
        assert np.all(pf.value(mid) <= (pf.value(t1) + pf.value(t2)) / 2.0 + 1e-9)
        inv = lambda t: 1.0 / pf.d2(t)
        assert np.all(inv(mid) >= (inv(t1) + inv(t2)) / 2.0 - 1e-9)


# ---------------------------------------------------------------------------
# Finite distributions and entropies

def test_weights_validation():
    with pytest.raises(DomainError):
        phi.FiniteDistribution.from_weights([0.5, 0.6])
    with pytest.raises(DomainError):
        phi.FiniteDistribution.from_weights([-0.1, 1.1])
    with pytest.raises(DomainError):
        phi.FiniteDistribution(("a",), np.array([1.0, 0.0]))


def test_phi_entropy_square_uniform():
    d = phi.FiniteDistribution.uniform(("a", "b"))
    assert phi.phi_entropy(SQ, d, {"a": 1.0, "b": 3.0}) == pytest.approx(1.0, abs=1e-14)


def test_phi_entropy_point_mass_is_zero():
    d = phi.FiniteDistribution.point_mass("x")
    assert phi.phi_entropy(XL, d, {"x": 2.7}) == 0.0
    assert phi.phi_entropy(SQ, d, {"x": -5.0}) == 0.0


def test_phi_entropy_weighted_example():
    # weights (.75, .25) on values (1, 3): E[f^2] - (E f)^2 = 3 - 2.25
    d = phi.FiniteDistribution.from_weights([0.75, 0.25])
    assert phi.phi_entropy(SQ, d, [1.0, 3.0]) == pytest.approx(0.75, abs=1e-15)


def test_phi_entropy_domain_error():
    d = phi.FiniteDistribution.uniform((0, 1))
    with pytest.raises(DomainError):
        phi.phi_entropy(XL, d, [-1.0, 2.0])


def test_square_phi_entropy_equals_power2():
    rng = np.random.default_rng(11)
    p2 = phi.PhiFunction.power(2.0)
    for _ in range(50):
        n = rng.integers(2, 9)
        w = rng.random(n) + 0.05
        d = phi.FiniteDistribution.from_weights(w / w.sum())
        f = rng.uniform(0.2, 4.0, n)
        assert phi.phi_entropy(p2, d, f) == pytest.approx(
            phi.phi_entropy(SQ, d, f), rel=1e-12, abs=1e-13)


def test_power_interpolates_to_entropy():
    # J^{Phi_p} -> ent pointwise as p -> 1+
    rng = np.random.default_rng(12)
    pf = phi.PhiFunction.power(1.001)
    for _ in range(20):
        n = rng.integers(2, 9)
        w = rng.random(n) + 0.05
        d = phi.FiniteDistribution.from_weights(w / w.sum())
        f = rng.uniform(0.2, 4.0, n)
        ent = phi.phi_entropy(XL, d, f)
        jp = phi.phi_entropy(pf, d, f)
        if ent > 1e-6:
            assert jp == pytest.approx(ent, rel=1e-2)


# ---------------------------------------------------------------------------
# Decomposition

def _model_example():
    mix = phi.FiniteDistribution.uniform(("y1", "y2"))
    comps = {
        "y1": phi.FiniteDistribution(("x1", "x2"), np.array([0.5, 0.5])),
        "y2": phi.FiniteDistribution(("x1", "x2"), np.array([1.0, 0.0])),
    }
    return phi.DiscreteMixtureModel(mix, comps)


def test_decomposition_frozen_example():
    model = _model_example()
    f = {("x1", "y1"): 1.0, ("x2", "y1"): 3.0, ("x1", "y2"): 1.0, ("x2", "y2"): 3.0}
    total, within, between = phi.entropy_decomposition(SQ, model, f)
    # brute-force oracle over the 4 joint atoms gives 0.75 = 0.5 + 0.25
    assert total == pytest.approx(0.75, abs=1e-15)
    assert within == pytest.approx(0.5, abs=1e-15)
    assert between == pytest.approx(0.25, abs=1e-15)


def test_decomposition_constant_f():
    model = _model_example()
    total, within, between = phi.entropy_decomposition(XL, model, lambda x, y: 1.7)
    assert abs(total) <= 1e-14 and abs(within) <= 1e-14 and abs(between) <= 1e-14


def test_decomposition_point_mass_mixing():
    mix = phi.FiniteDistribution.point_mass("y")
    comps = {"y": phi.FiniteDistribution(("a", "b"), np.array([0.3, 0.7]))}
    model = phi.DiscreteMixtureModel(mix, comps)
    total, within, between = phi.entropy_decomposition(SQ, model, lambda x, y: 1.0 if x == "a" else 4.0)
    assert between == 0.0
    assert total == pytest.approx(within, abs=1e-15)


def _fsum_joint_entropy(pf, model, fgrid):
    """Independent oracle: brute-force joint Phi-entropy via math.fsum."""
    terms_w, terms_phi, terms_mean = [], [], []
    for iy, y in enumerate(model.mixing.labels):
        comp = model.components[y]
        for ix in range(comp.size):
            w = model.mixing.weights[iy] * comp.weights[ix]
            t = fgrid[iy, ix]
            terms_w.append(w)
            terms_mean.append(w * t)
            terms_phi.append(w * float(pf.value(t)))
    ef = math.fsum(terms_mean)
    return math.fsum(terms_phi) - float(pf.value(ef))


@pytest.mark.parametrize("pf", [SQ, XL], ids=["square", "xlogx"])
def test_decomposition_random_models(pf):
    rng = np.random.default_rng(99)
    for _ in range(300):
        ny, nx = rng.integers(1, 9), rng.integers(1, 9)
        mw = rng.random(ny) + 0.05
        mix = phi.FiniteDistribution.from_weights(mw / mw.sum())
        comps = {}
        for y in mix.labels:
            cw = rng.random(nx) + 0.05
            comps[y] = phi.FiniteDistribution.from_weights(cw / cw.sum())
        model = phi.DiscreteMixtureModel(mix, comps)
        fgrid = rng.uniform(0.1, 5.0, (ny, nx))
        total, within, between = phi.entropy_decomposition(pf, model, fgrid)
        assert abs(total - (within + between)) <= 1e-12
        assert total == pytest.approx(_fsum_joint_entropy(pf, model, fgrid), abs=1e-12)
        assert within >= -1e-14 and between >= -1e-14


def test_decomposition_x_only_f_matches_mixture():
    rng = np.random.default_rng(5)
    for _ in range(50):
        ny, nx = rng.integers(1, 6), rng.integers(1, 6)
        mw = rng.random(ny) + 0.05
        mix = phi.FiniteDistribution.from_weights(mw / mw.sum())
        comps = {}
        for y in mix.labels:
            cw = rng.random(nx) + 0.05
            comps[y] = phi.FiniteDistribution.from_weights(cw / cw.sum())
        model = phi.DiscreteMixtureModel(mix, comps)
        fx = rng.uniform(0.1, 5.0, nx)
        total, _, _ = phi.entropy_decomposition(SQ, model, np.tile(fx, (ny, 1)))
        mu = model.mixture()
        assert total == pytest.approx(phi.phi_entropy(SQ, mu, fx), abs=1e-12)


# ---------------------------------------------------------------------------
# Duality

def test_duality_gap_f_equals_g_square():
    # symbolic expansion: LHS = 2 var(f), RHS = var(f) + 0 + var(f)
    d = phi.FiniteDistribution.from_weights([0.2, 0.3, 0.5])
    f = [1.0, -2.0, 0.5]
    assert abs(phi.duality_gap(SQ, d, f, f)) <= 1e-12


def test_duality_gap_constant_g():
    d = phi.FiniteDistribution.from_weights([0.4, 0.6])
    gap = phi.duality_gap(SQ, d, [1.0, 5.0], [2.0, 2.0])
    # centred factor kills the LHS; gap = J[g] + E[g](...) + J*[f] >= 0
    assert gap >= -1e-10


def test_duality_gap_unsupported_power():
    d = phi.FiniteDistribution.from_weights([0.5, 0.5])
    with pytest.raises(UnsupportedPhiError):
        phi.duality_gap(phi.PhiFunction.power(1.5), d, [1.0, 2.0], [1.0, 2.0])


@pytest.mark.parametrize("pf", [SQ, XL], ids=["square", "xlogx"])
def test_duality_gap_randomised(pf):
    rng = np.random.default_rng(101)
    for _ in range(1000):
        n = rng.integers(2, 6)
        w = rng.random(n) + 0.05
        d = phi.FiniteDistribution.from_weights(w / w.sum())
        if pf.kind == phi.SQUARE:
            f = rng.uniform(-4.0, 4.0, n)
            g = rng.uniform(-4.0, 4.0, n)
        else:
            f = rng.uniform(0.05, 4.0, n)
            g = rng.uniform(0.05, 4.0, n)
        assert phi.duality_gap(pf, d, f, g) >= -1e-10


# ---------------------------------------------------------------------------
# Hypothesis property tests

def _weights(n):
    return st.lists(st.floats(0.01, 1.0), min_size=n, max_size=n)


@st.composite
def dist_and_values(draw, positive):
    n = draw(st.integers(2, 8))
    w = np.array(draw(_weights(n)))
    d = phi.FiniteDistribution.from_weights(w / w.sum())
    lo = 0.05 if positive else -5.0
    vals = np.array(draw(st.lists(st.floats(lo, 5.0), min_size=n, max_size=n)))
    return d, vals


@settings(max_examples=200, deadline=None)
@given(dist_and_values(positive=False))
def test_hyp_nonnegativity_square(dv):
    d, v = dv
    assert phi.phi_entropy(SQ, d, v) >= -1e-12


@settings(max_examples=200, deadline=None)
@given(dist_and_values(positive=True))
def test_hyp_nonnegativity_xlogx(dv):
    d, v = dv
    assert phi.phi_entropy(XL, d, v) >= -1e-12


@settings(max_examples=150, deadline=None)
@given(dist_and_values(positive=True), dist_and_values(positive=True))
def test_hyp_duality_xlogx(dv1, dv2):
    d, f = dv1
    _, g2 = dv2
    g = g2[: d.size] if g2.size >= d.size else np.resize(g2, d.size)
    assert phi.duality_gap(XL, d, f, np.abs(g) + 0.05) >= -1e-10
