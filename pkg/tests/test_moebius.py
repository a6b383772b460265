"""Unit tests for the PSL(2,R) arithmetic layer."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import hypflow as hf
from hypflow.errors import DegenerateDecomposition, NotHyperbolic

RNG = np.random.default_rng(20240811)


def random_element(rng=RNG, scale=2.0):
    t = rng.uniform(-scale, scale)
    s = rng.uniform(-scale, scale)
    u = rng.uniform(-scale, scale)
    phi = rng.uniform(-math.pi, math.pi)
    return hf.unstable_shear(u) * hf.stable_shear(s) * hf.geodesic_flow(t) * hf.rotation(phi)


class TestCompose:
    def test_identity_law(self):
        g = random_element()
        assert hf.local_distance(hf.compose(hf.IDENTITY, g), g) < 1e-14
        assert hf.local_distance(hf.compose(g, hf.IDENTITY), g) < 1e-14

    def test_flow_subgroup(self):
        lhs = hf.compose(hf.geodesic_flow(1.0), hf.geodesic_flow(2.0))
        assert hf.local_distance(lhs, hf.geodesic_flow(3.0)) < 1e-14

    def test_half_turn_squares_to_identity(self):
        sq = hf.compose(hf.HALF_TURN, hf.HALF_TURN)
        assert hf.local_distance(sq, hf.IDENTITY) == 0.0

    def test_det_preserved_over_long_chains(self):
        # bounded-entry chain: small random steps keep the running product tame
        rng = np.random.default_rng(29)
        g = hf.IDENTITY
        for _ in range(10_000):
            g = g * random_element(rng, scale=0.01)
        det = g.rep[0, 0] * g.rep[1, 1] - g.rep[0, 1] * g.rep[1, 0]
        assert abs(det - 1.0) < 1e-8
        assert np.abs(g.rep).max() < 50.0


class TestOneParam:
    def test_flow_at_zero_is_identity(self):
        assert hf.local_distance(hf.one_param("A", 0.0), hf.IDENTITY) == 0.0

    def test_rotation_pi_matrix(self):
        target = hf.PSLElement([[0.0, 1.0], [-1.0, 0.0]])
        assert hf.local_distance(hf.one_param("D", math.pi), target) < 1e-15

    def test_flow_two_log_two(self):
        got = hf.one_param("A", 2.0 * math.log(2.0))
        assert np.allclose(got.rep, [[2.0, 0.0], [0.0, 0.5]], atol=1e-15)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            hf.one_param("E", 1.0)


class TestNSADecompose:
    def test_identity(self):
        assert hf.nsa_decompose(hf.IDENTITY) == (0.0, 0.0, 0.0)

    def test_known_matrix(self):
        t, s, u = hf.nsa_decompose(hf.PSLElement([[2.0, 1.0], [1.0, 1.0]]))
        assert abs(t - 2.0 * math.log(2.0)) < 1e-15
        assert abs(s - 2.0) < 1e-15
        assert abs(u - 0.5) < 1e-15

    def test_degenerate(self):
        with pytest.raises(DegenerateDecomposition):
            hf.nsa_decompose(hf.PSLElement([[0.0, 1.0], [-1.0, 0.0]]))

    @given(
        t=st.floats(-4, 4),
        s=st.floats(-3, 3),
        u=st.floats(-3, 3),
    )
    @settings(max_examples=200, deadline=None)
    def test_round_trip(self, t, s, u):
        g = hf.unstable_shear(u) * hf.stable_shear(s) * hf.geodesic_flow(t)
        tt, ss, uu = hf.nsa_decompose(g)
        back = hf.unstable_shear(uu) * hf.stable_shear(ss) * hf.geodesic_flow(tt)
        assert hf.local_distance(back, g) < 1e-9

    def test_round_trip_random_thousand(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            g = random_element(rng)
            if abs(g.rep[0, 0]) <= 0.01:
                continue
            t, s, u = hf.nsa_decompose(g)
            back = hf.unstable_shear(u) * hf.stable_shear(s) * hf.geodesic_flow(t)
            assert hf.local_distance(back, g) < 1e-9


class TestRotationDecompose:
    # reference values computed with 60-digit arithmetic from the closed forms
    CASES = [
        (0.0, (0.0, 0.0, 0.0)),
        (math.pi / 3, (-0.28768207245178093, 0.57735026918962576, -0.43301270189221932)),
        (0.2, (-0.010016711246470618, 0.10033467208545055, -0.099334665397530608)),
    ]

    @pytest.mark.parametrize("phi,expected", CASES)
    def test_reference_values(self, phi, expected):
        t, u, s = hf.rotation_decompose(phi)
        assert abs(t - expected[0]) < 1e-15
        assert abs(u - expected[1]) < 1e-15
        assert abs(s - expected[2]) < 1e-15

    @given(phi=st.floats(-3.1, 3.1))
    @settings(max_examples=200, deadline=None)
    def test_reconstructs_rotation(self, phi):
        t, u, s = hf.rotation_decompose(phi)
        back = hf.unstable_shear(u) * hf.stable_shear(s) * hf.geodesic_flow(t)
        assert hf.local_distance(back, hf.rotation(phi)) < 1e-12

    def test_thousand_random_angles(self):
        rng = np.random.default_rng(11)
        for phi in rng.uniform(-math.pi + 1e-6, math.pi - 1e-6, size=1000):
            t, u, s = hf.rotation_decompose(phi)
            back = hf.unstable_shear(u) * hf.stable_shear(s) * hf.geodesic_flow(t)
            assert hf.local_distance(back, hf.rotation(phi)) < 1e-12

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            hf.rotation_decompose(math.pi)


class TestReversalConjugate:
    def test_flow_reverses(self):
        got = hf.reversal_conjugate(hf.geodesic_flow(0.7))
        assert hf.local_distance(got, hf.geodesic_flow(-0.7)) < 1e-15

    def test_shears_swap(self):
        got = hf.reversal_conjugate(hf.stable_shear(0.3))
        assert hf.local_distance(got, hf.unstable_shear(-0.3)) < 1e-15
        got = hf.reversal_conjugate(hf.unstable_shear(0.3))
        assert hf.local_distance(got, hf.stable_shear(-0.3)) < 1e-15

    def test_identity_fixed(self):
        assert hf.local_distance(hf.reversal_conjugate(hf.IDENTITY), hf.IDENTITY) == 0.0

    def test_commutation_identities_thousand(self):
        # a_t d = d a_{-t},  b_t d = d c_{-t},  c_t d = d b_{-t}
        rng = np.random.default_rng(3)
        d = hf.HALF_TURN
        for t in rng.uniform(-5, 5, size=1000):
            for make, swapped in [
                (hf.geodesic_flow, hf.geodesic_flow),
                (hf.stable_shear, hf.unstable_shear),
                (hf.unstable_shear, hf.stable_shear),
            ]:
                assert hf.local_distance(make(t) * d, d * swapped(-t)) < 1e-12


class TestClassify:
    def test_flow_is_hyperbolic(self):
        g = hf.geodesic_flow(1.0)
        assert hf.classify(g) is hf.ElementClass.HYPERBOLIC
        assert abs(abs(g.trace()) - 2.0 * math.cosh(0.5)) < 1e-14

    def test_shear_is_parabolic(self):
        assert hf.classify(hf.stable_shear(1.0)) is hf.ElementClass.PARABOLIC

    def test_rotation_is_elliptic(self):
        assert hf.classify(hf.rotation(0.5)) is hf.ElementClass.ELLIPTIC

    def test_identity(self):
        assert hf.classify(hf.IDENTITY) is hf.ElementClass.IDENTITY


class TestTranslationLength:
    def test_flow(self):
        assert abs(hf.translation_length(hf.geodesic_flow(3.0)) - 3.0) < 1e-12

    def test_octagon_generator_trace(self):
        # |tr| = 2 + 2 sqrt(2); length frozen from high-precision acosh
        lam = 1 + math.sqrt(2) + math.sqrt(2 + 2 * math.sqrt(2))
        g = hf.PSLElement([[lam, 0.0], [0.0, 1.0 / lam]])
        assert abs(abs(g.trace()) - (2 + 2 * math.sqrt(2))) < 1e-12
        assert abs(hf.translation_length(g) - 3.0571418389619963) < 1e-12

    def test_parabolic_rejected(self):
        with pytest.raises(NotHyperbolic):
            hf.translation_length(hf.stable_shear(1.0))

    def test_conjugation_invariant(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            g = hf.geodesic_flow(rng.uniform(0.5, 4.0))
            rho = random_element(rng)
            conj = rho * g * rho.inv()
            assert abs(hf.translation_length(conj) - hf.translation_length(g)) < 1e-9


class TestAxisFrame:
    def test_diagonal_gives_identity(self):
        f = hf.axis_frame(hf.geodesic_flow(2.0))
        assert hf.local_distance(f, hf.IDENTITY) < 1e-12

    def test_conjugated_flow(self):
        g = hf.unstable_shear(0.5) * hf.geodesic_flow(2.0) * hf.unstable_shear(-0.5)
        f = hf.axis_frame(g)
        target = hf.geodesic_flow(hf.translation_length(g))
        assert hf.local_distance(f.inv() * g * f, target) < 1e-9

    def test_random_hyperbolics(self):
        rng = np.random.default_rng(13)
        for _ in range(200):
            g = random_element(rng)
            if hf.classify(g) is not hf.ElementClass.HYPERBOLIC:
                continue
            f = hf.axis_frame(g)
            target = hf.geodesic_flow(hf.translation_length(g))
            assert hf.local_distance(f.inv() * g * f, target) < 1e-9

    def test_rejects_elliptic(self):
        with pytest.raises(NotHyperbolic):
            hf.axis_frame(hf.rotation(0.5))


class TestLocalDistance:
    def test_zero_on_equal(self):
        g = random_element()
        assert hf.local_distance(g, g) < 1e-13

    def test_small_shear(self):
        assert abs(hf.local_distance(hf.IDENTITY, hf.stable_shear(0.01)) - 0.01) < 1e-15

    def test_symmetry(self):
        rng = np.random.default_rng(17)
        for _ in range(100):
            g, h = random_element(rng), random_element(rng)
            assert abs(hf.local_distance(g, h) - hf.local_distance(h, g)) < 1e-12

    def test_sign_quotient(self):
        g = hf.rotation(3.0)
        h = hf.PSLElement(-np.asarray(g.rep))
        assert hf.local_distance(g, h) == 0.0

    def test_left_invariance(self):
        rng = np.random.default_rng(19)
        for _ in range(50):
            g = random_element(rng)
            d0 = hf.local_distance(hf.IDENTITY, hf.stable_shear(0.05))
            d1 = hf.local_distance(g, g * hf.stable_shear(0.05))
            assert abs(d0 - d1) < 1e-12


class TestCanonicalization:
    def test_idempotent(self):
        g = hf.PSLElement([[-1.0, 0.5], [0.0, -1.0]])
        h = hf.PSLElement(g.rep)
        assert np.array_equal(g.rep, h.rep)
        assert g.rep[0, 0] > 0

    def test_rejects_garbage(self):
        with pytest.raises(ValueError):
            hf.PSLElement([[1.0, 0.0], [0.0, 2.0]])
