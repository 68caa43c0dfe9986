import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import gwmaxdeg as g
from gwmaxdeg.errors import LawError, RegimeError
from gwmaxdeg.offspring import Criticality, law_from_json


class TestConstruction:
    def test_two_point_law(self):
        law = g.ExplicitLaw([0.5, 0, 0.5])
        assert law.mean == 1.0
        assert law.is_bounded
        assert law.support_sup == 2
        assert law.classify() is Criticality.CRITICAL

    def test_geometric_mean(self):
        law = g.GeometricLaw(1 / 3)
        assert law.mean == pytest.approx(0.5, abs=1e-15)
        assert law.is_unbounded
        assert law.classify() is Criticality.SUBCRITICAL

    def test_poisson_critical(self):
        law = g.PoissonLaw(1.0)
        assert law.mean == 1.0
        assert law.is_unbounded
        assert law.classify() is Criticality.CRITICAL

    def test_supercritical_explicit(self):
        law = g.ExplicitLaw([0.2, 0, 0.8])
        assert law.mean == pytest.approx(1.6)
        assert law.classify() is Criticality.SUPERCRITICAL

    def test_rejects_unnormalized(self):
        with pytest.raises(LawError):
            g.ExplicitLaw([0.5, 0.4])

    def test_rejects_negative_mass(self):
        with pytest.raises(LawError):
            g.ExplicitLaw([1.5, -0.5])

    def test_rejects_zero_mean(self):
        with pytest.raises(LawError):
            g.ExplicitLaw([1.0])

    def test_rejects_bad_geometric(self):
        for a in (0.0, 1.0, -0.2, 1.3):
            with pytest.raises(LawError):
                g.GeometricLaw(a)

    def test_rejects_infinite_mean_powerlaw(self):
        with pytest.raises(LawError):
            g.PowerLawLaw(0.5, 2.0)

    def test_rejects_negative_p0_powerlaw(self):
        # c zeta(4) > 1 leaves nothing for p_0
        with pytest.raises(LawError):
            g.PowerLawLaw(1.0, 4.0)

    def test_powerlaw_values(self):
        law = g.PowerLawLaw(0.5, 4.0)
        zeta4 = float(np.pi**4 / 90)
        assert law.pmf(0) == pytest.approx(1 - 0.5 * zeta4, rel=1e-14)
        assert law.pmf(2) == pytest.approx(0.5 * 2.0**-4, rel=1e-15)
        assert law.classify() is Criticality.SUBCRITICAL

    def test_pmf_array_matches_pointwise(self, test_laws):
        for law in test_laws:
            arr = law.pmf_array(30)
            for k in range(31):
                assert arr[k] == pytest.approx(law.pmf(k), rel=1e-13, abs=1e-300)


class TestTails:
    def test_geometric_tail_closed_form(self, geometric13):
        assert geometric13.tail(5) == pytest.approx((1 / 3) ** 6, rel=1e-15)

    def test_bounded_tail_is_zero(self, binary):
        assert binary.tail(2) == 0.0
        assert binary.tail(100) == 0.0

    def test_poisson_tail_at_zero(self, poisson1):
        assert poisson1.tail(0) == pytest.approx(1 - math.exp(-1), rel=1e-13)

    def test_partial_sum_plus_tail_is_one(self, test_laws):
        for law in test_laws:
            for n in (0, 1, 3, 10, 40, 120):
                head = math.fsum(law.pmf(k) for k in range(n + 1))
                assert abs(head + law.tail(n) - 1.0) < 1e-12

    def test_tail_first_moment_brute_force(self, test_laws):
        # independent check by direct summation; the 5e4 horizon leaves a
        # remainder ~1e-10 for the power law (integral bound c J^{2-a}/(a-2))
        for law in test_laws:
            for n in (0, 2, 7):
                direct = math.fsum(j * law.pmf(j) for j in range(n + 1, 50_000))
                assert law.tail_first_moment(n) == pytest.approx(direct, rel=1e-8, abs=1e-9)

    def test_n_tail_eventually_decreases(self, geometric13, poisson1, powerlaw):
        # finite mean forces tail(n) = o(1/n); check the diagnostic reflection
        for law in (geometric13, poisson1, powerlaw):
            assert 200 * law.tail(200) < 20 * law.tail(20)

    def test_partial_plus_expect_brute_force(self, geometric13, powerlaw):
        for law in (geometric13, powerlaw):
            for ell in (0, 1, 3):
                for k in (0, 2, 5):
                    direct = math.fsum(
                        (j - ell) * law.pmf(j) for j in range(max(ell + 1, k), 50_000)
                    )
                    assert law.partial_plus_expect(ell, k) == pytest.approx(
                        direct, rel=1e-8, abs=1e-9
                    )


class TestClassifyAndBias:
    def test_classify_examples(self, geometric13, poisson1):
        assert geometric13.classify() is Criticality.SUBCRITICAL
        assert poisson1.classify() is Criticality.CRITICAL
        assert g.ExplicitLaw([0.2, 0, 0.8]).classify() is Criticality.SUPERCRITICAL

    def test_bias_poisson(self, poisson1):
        b = poisson1.bias()
        assert b.atom_inf == 0.0
        for k in range(1, 8):
            assert b.atom(k) == pytest.approx(math.exp(-1) / math.factorial(k - 1), rel=1e-12)

    def test_bias_geometric(self, geometric13):
        b = geometric13.bias()
        assert b.atom_inf == pytest.approx(0.5, abs=1e-15)
        assert b.atom(1) == pytest.approx(2 / 9, rel=1e-15)
        assert b.atom(2) == pytest.approx(4 / 27, rel=1e-15)

    def test_bias_two_point(self):
        b = g.ExplicitLaw([0.5, 0.5]).bias()
        assert b.atom(1) == 0.5
        assert b.atom_inf == pytest.approx(0.5, abs=1e-15)

    def test_bias_rejects_supercritical(self):
        with pytest.raises(RegimeError):
            g.ExplicitLaw([0.2, 0, 0.8]).bias()

    def test_bias_atoms_sum_to_one(self, test_laws):
        for law in test_laws:
            if law.classify() is Criticality.SUPERCRITICAL:
                continue
            b = law.bias()
            finite = math.fsum(b.atom(k) for k in range(1, 50_000))
            # summation horizon leaves ~1e-10 for the power-law tail
            assert abs(finite + b.atom_inf - 1.0) < 1e-8

    def test_bias_inf_atom_zero_iff_critical(self, test_laws):
        for law in test_laws:
            if law.classify() is Criticality.SUPERCRITICAL:
                continue
            b = law.bias()
            assert (b.atom_inf == 0.0) == (law.classify() is Criticality.CRITICAL)

    def test_bias_sampling_matches_atoms(self, geometric13):
        cfg = g.SampleConfig(seed=99)
        gen = cfg.generator()
        b = geometric13.bias()
        n = 40_000
        draws = [b.sample(gen) for _ in range(n)]
        f_inf = sum(1 for d in draws if d == math.inf) / n
        f_1 = sum(1 for d in draws if d == 1) / n
        assert abs(f_inf - 0.5) < 3 * math.sqrt(0.25 / n)
        p1 = 2 / 9
        assert abs(f_1 - p1) < 3 * math.sqrt(p1 * (1 - p1) / n)


class TestInversionTables:
    def test_last_entry_is_one(self, test_laws):
        for law in test_laws:
            cdf = law.inversion_cdf()
            assert cdf[-1] == 1.0
            assert np.all(np.diff(cdf) >= 0)

    def test_atoms_match_pmf(self, test_laws):
        for law in test_laws:
            cdf = law.inversion_cdf()
            prev = 0.0
            for k in range(min(len(cdf), 30)):
                assert cdf[k] - prev == pytest.approx(law.pmf(k), rel=1e-10, abs=1e-13)
                prev = cdf[k]


class TestCustomLaw:
    def test_wrapping_geometric_closed_forms(self, geometric13):
        a = 1 / 3
        law = g.CustomLaw(
            lambda k: (1 - a) * a**k,
            mean=a / (1 - a),
            tail=lambda n: a ** (n + 1),
            tail_first_moment=lambda n: a ** (n + 1) * ((n + 1) * (1 - a) + a) / (1 - a),
        )
        assert law.mean == geometric13.mean
        assert law.tail(7) == geometric13.tail(7)
        assert law.classify() is Criticality.SUBCRITICAL

    def test_finite_support_custom(self):
        law = g.CustomLaw(lambda k: [0.5, 0.25, 0.25][k], support_sup=2)
        assert law.mean == pytest.approx(0.75)
        assert law.tail(0) == pytest.approx(0.5)

    def test_unbounded_custom_needs_closed_forms(self):
        with pytest.raises(LawError):
            g.CustomLaw(lambda k: (2 / 3) * (1 / 3) ** k)

    def test_inconsistent_tail_rejected(self):
        with pytest.raises(LawError):
            g.CustomLaw(
                lambda k: (2 / 3) * (1 / 3) ** k,
                mean=0.5,
                tail=lambda n: 0.3,  # grossly wrong survival function
                tail_first_moment=lambda n: 0.0,
            )


class TestJson:
    def test_round_trip(self, test_laws):
        for law in test_laws:
            spec = g.law_to_json(law)
            again = law_from_json(spec)
            assert type(again) is type(law)
            assert again.mean == law.mean

    def test_rejects_unknown_family(self):
        with pytest.raises(LawError):
            law_from_json({"family": "zeta-mixture"})

    def test_rejects_missing_family(self):
        with pytest.raises(LawError):
            law_from_json({"a": 0.5})


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=2, max_size=8).filter(
        lambda w: sum(w) > 0 and sum(w[1:]) > 0
    )
)
def test_random_explicit_law_invariants(weights):
    total = math.fsum(weights)
    law = g.ExplicitLaw([w / total for w in weights])
    # normalization within tolerance and consistent tails
    for n in range(len(weights) + 2):
        head = math.fsum(law.pmf(k) for k in range(n + 1))
        assert abs(head + law.tail(n) - 1.0) < 1e-12
    if law.classify() is not Criticality.SUPERCRITICAL:
        b = law.bias()
        finite = math.fsum(b.atom(k) for k in range(1, len(weights) + 1))
        assert abs(finite + b.atom_inf - 1.0) < 1e-12
