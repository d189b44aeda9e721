import math
from fractions import Fraction

import pytest
from hypothesis import assume, given, strategies as st

from riccicone.spectra import CrossSection, builtin_table, find_row, make_round_sphere
from riccicone.stability import (InsufficientSpectralData, admissible_weights, analyze, build_V3_matrix,
                                 build_V4_matrix, check_strong, check_tangential, classify_table_row,
                                 det_identities_check, indicial_data, mu_exponents, nu, oneform_threshold,
                                 scalar_polynomial, scalar_root_bound, scalar_sector_condition,
                                 strong_assumption_check, tangential_spectrum, v3_shifted_B, v4_gram,
                                 weight_inequalities)

F = Fraction
lam_st = st.fractions(min_value=0, max_value=400, max_denominator=30)


def det_gauss(m):
    """Determinant by exact Gaussian elimination (independent of the cofactor expansion)."""
    a = [list(map(Fraction, r)) for r in m]
    size, det = len(a), Fraction(1)
    for c in range(size):
        piv = next((r for r in range(c, size) if a[r][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            a[c], a[piv] = a[piv], a[c]
            det = -det
        det *= a[c][c]
        for r in range(c + 1, size):
            f = a[r][c] / a[c][c]
            for k in range(c, size):
                a[r][k] -= f * a[c][k]
    return det


def factored_P(n, lam):
    return n * n * (lam - n) * (lam - 3 * n - 6) * (lam + n - 2)


# ---------------------------------------------------------------------------
# indicial exponents and weights


def test_nu_examples():
    assert nu(3, 0) == 1
    assert nu(5, 0) == 2


@pytest.mark.parametrize("n", range(2, 51))
def test_nu_at_n(n):
    assert math.isclose(nu(n, n), (n + 1) / 2, rel_tol=0, abs_tol=1e-12)


def test_nu_negative_radicand():
    with pytest.raises(ValueError):
        nu(3, -2)


def test_mu_examples():
    assert math.isclose(mu_exponents(3, 4, 4, "printed")[0], math.sqrt(5) - 1, abs_tol=1e-15)
    assert mu_exponents(3, 3, 3, "squared") == (1.0, 1.0)


@pytest.mark.parametrize("n", range(2, 20))
def test_mu_tends_to_one_from_above(n):
    vals = [mu_exponents(n, n + F(1, 10 ** k), n + F(1, 10 ** k))[0] for k in range(1, 8)]
    assert all(v > 1 for v in vals)
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[-1] - 1 < 1e-6


def test_mu_rejects_nonpositive():
    with pytest.raises(ValueError):
        mu_exponents(3, 0, 4)
    with pytest.raises(ValueError):
        mu_exponents(3, 4, 4, "other")


def test_weights_example_feasible():
    w = admissible_weights(3, 2, 2, 3)
    assert w.feasible
    assert all(weight_inequalities(w.sample, 2, 2, 3).values())


def test_weights_grid_search_agrees():
    # brute-force: some grid point satisfies every inequality
    found = any(all(weight_inequalities((F(a, 20), F(b, 20), F(c, 100)), 2, 2, 3).values())
                for a in range(1, 40) for b in range(1, 40) for c in range(1, 30))
    assert found


def test_weights_mu_zero_infeasible():
    w = admissible_weights(3, 0, 2, 3)
    assert not w.feasible and w.sample is None


def test_weights_above_one():
    w = admissible_weights(3, 1.5, 1.5, 3, floor=1)
    assert w.feasible
    g0, g1, _ = w.sample
    assert g0 > 1 and g1 > 1
    assert all(weight_inequalities(w.sample, 1.5, 1.5, 3).values())


pos = st.floats(min_value=1e-3, max_value=50, allow_nan=False)


@given(pos, pos, pos)
def test_weights_sample_satisfies_inequalities(m0, m1, g):
    w = admissible_weights(3, m0, m1, g)
    assert w.feasible
    assert all(weight_inequalities(w.sample, m0, m1, g).values())
    lo, hi = w.gamma0_interval
    assert lo <= float(w.sample[0]) <= hi


@given(st.integers(2, 40), st.fractions(min_value=0, max_value=60, max_denominator=40),
       st.fractions(min_value=0, max_value=60, max_denominator=40))
def test_strong_assumption_gives_mu_above_one(n, a, b):
    u0, u1 = n + a, n + b
    assume(a > 0 and b > 0)
    assert strong_assumption_check(u0, u1, n)
    m0, m1 = mu_exponents(n, u0, u1)
    assert m0 > 1 and m1 > 1
    assert admissible_weights(n, m0, m1, 2, floor=1).feasible


def test_strong_assumption_examples():
    for n in range(2, 12):
        assert strong_assumption_check(n + 1, n + 1, n)
        assert not strong_assumption_check(n, n + 1, n)
        cs = make_round_sphere(n)
        assert not strong_assumption_check(n + 1, cs.first_nonzero_scalar, n)


# ---------------------------------------------------------------------------
# tangential / strict


@pytest.mark.parametrize("n", range(2, 11))
def test_round_sphere_tangential_not_strict(n):
    v = check_tangential(make_round_sphere(n))
    assert v.tangential is True and v.strict is False


def test_negative_tt_fails():
    cs = CrossSection("neg", 3, (0, 9), (-1, 5), (), 20)
    v = check_tangential(cs)
    assert v.tangential is False
    assert v.conditions["tt_nonnegative"].witness == "-1"


def test_scalar_in_open_interval_fails():
    cs = CrossSection("hit", 3, (0, 4), (5,), (), 20)
    v = check_tangential(cs)
    assert v.tangential is False
    assert v.conditions["scalar_outside_open"].witness == "4"


def test_insufficient_data():
    with pytest.raises(InsufficientSpectralData, match="insufficient spectral data"):
        check_tangential(CrossSection("short", 3, (0, 9), (5,), (), 7))


def test_strict_needs_data_above_threshold():
    # everything listed is fine but an eigenvalue at 2(n+1) could not be excluded
    with pytest.raises(InsufficientSpectralData):
        check_tangential(CrossSection("edge", 3, (0, 9), (5,), (), 8))


# ---------------------------------------------------------------------------
# sector matrices and the cubic


def test_oneform_threshold_examples():
    assert oneform_threshold(3) == 7
    assert oneform_threshold(10) == 21
    for n in range(2, 200):
        assert oneform_threshold(n) == 2 * n + 1


@pytest.mark.parametrize("n", range(2, 20))
def test_v3_at_mu_n_minus_1(n):
    assert build_V3_matrix(n, n - 1) == ((0, 0), (0, 4 * n + 4))


def test_v3_shifted_example():
    (a, b), (c, d) = v3_shifted_B(3, 8)
    assert a * d - b * c == 9
    assert F(1, 2) * 3 * 22 - 4 * 6 == 9


@given(st.integers(2, 30), st.fractions(min_value=0, max_value=200, max_denominator=20))
def test_v3_shifted_B_matches_shift(n, mu):
    # the rescaled matrix has the determinant of (V3 - n Gram) up to the positive column factor
    m = build_V3_matrix(n, mu)
    g = ((mu - (n - 1)) / 2, F(2))
    shifted = ((m[0][0] - n * g[0], m[0][1]), (m[1][0], m[1][1] - n * g[1]))
    b = v3_shifted_B(n, mu)
    d = mu - (n - 1)
    assume(d != 0)
    assert det_gauss(shifted) == d * det_gauss(b)


@pytest.mark.parametrize("n", range(2, 31))
def test_v4_entries_at_lambda_n(n):
    a = build_V4_matrix(n, n)
    assert a[0][0] == 0 and a[0][1] == 0


@given(st.integers(2, 30), lam_st)
def test_v4_a33_simplified(n, lam):
    assert build_V4_matrix(n, lam)[2][2] == n * ((n + 1) * lam + n * n + 3 * n + 2)
    assert build_V4_matrix(n, lam)[2][2] > 0


@given(st.integers(2, 60), lam_st)
def test_cubic_factorisation(n, lam):
    p, ok = scalar_sector_condition(n, lam)
    assert p == factored_P(n, lam)
    assert ok == (p > 0)


@given(st.integers(2, 60), lam_st)
def test_polynomial_coefficients_match_evaluation(n, lam):
    coeffs = scalar_polynomial(n)
    val = sum(c * lam ** (len(coeffs) - 1 - i) for i, c in enumerate(coeffs))
    assert val == scalar_sector_condition(n, lam)[0]


@pytest.mark.parametrize("n", range(2, 31))
def test_cubic_vanishes_at_n(n):
    assert scalar_sector_condition(n, n)[0] == 0


@pytest.mark.parametrize("n", range(2, 31))
def test_largest_root(n):
    assert scalar_root_bound(n) == 3 * n + 6


def test_cubic_table_examples():
    p, ok = scalar_sector_condition(64, 63 * F(28, 9))
    assert not ok and -3e8 < p < -2.5e8
    assert scalar_sector_condition(112, 111 * F(16, 5))[1]


@pytest.mark.parametrize("n,lam", [(5, 7), (3, 4), (4, 4), (7, F(22, 3))])
def test_det_identity_examples(n, lam):
    assert det_identities_check(n, lam)


@given(st.integers(2, 30), lam_st)
def test_det_identity_against_elimination(n, lam):
    a = build_V4_matrix(n, lam)
    assert det_gauss(a) == (n - 1) * lam * (lam - n) * 2 * lam * (n + 1) * factored_P(n, lam)
    minor = det_gauss([r[1:] for r in a[1:]])
    assert minor == lam * (2 * n * (n + 1) * lam ** 2 - 4 * (n + 1) * (n + 4) * lam
                           - 2 * n * (n - 4) * (n * n + 3 * n + 2))


def test_v4_gram_positive_above_n():
    for n in range(2, 10):
        assert all(g > 0 for g in v4_gram(n, n + 1))
        assert v4_gram(n, n)[0] == 0


# ---------------------------------------------------------------------------
# strong stability


def test_strong_fails_on_tt_equal_n():
    cs = CrossSection("tt", 3, (0, 20), (3, 30), (10,), 100)
    v = check_strong(cs)
    assert v.strong is False
    assert "TT <= n" in v.conditions["tt_gt_n"].witness


def test_strong_fails_on_oneform_threshold():
    v = check_strong(CrossSection("one", 3, (0, 20), (5,), (7,), 100))
    assert v.strong is False
    assert not v.conditions["oneform_gt_2n+1"].passed


def test_strong_synthetic_yes():
    cs = CrossSection("syn", 10, (0, 60), (15,), (25,), 61)
    assert factored_P(10, 60) > 0
    v = check_strong(cs)
    assert v.strong is True


def test_strong_insufficient_threshold():
    cs = CrossSection("syn", 10, (0, 60), (15,), (25,), 36)
    with pytest.raises(InsufficientSpectralData):
        check_strong(cs)


def test_strong_listed_failure_wins_over_short_data():
    cs = CrossSection("short", 3, (0, 3), (2,), (2,), 1)
    assert check_strong(cs).strong is False


def test_sphere_not_strong():
    for n in range(2, 11):
        assert analyze(make_round_sphere(n)).strong is False


@pytest.mark.parametrize("query,verdict", [("E_8", True), ("E VI", False), ("E VIII", True), ("G_2", False)])
def test_table_rows(query, verdict):
    assert classify_table_row(find_row(query)).strong is verdict


def test_e6_row_witness():
    v = classify_table_row(find_row("E VI"))
    assert v.conditions["scalar_cubic_positive"].detail == "scalar sector P < 0"


def test_every_row_reproduced():
    for r in builtin_table():
        assert classify_table_row(r).strong == r.sts_verdict, r.label


# ---------------------------------------------------------------------------
# tangential spectrum / indicial data


def test_sphere_tangential_spectrum_nonnegative():
    for n in range(3, 8):
        spec = tangential_spectrum(make_round_sphere(n))
        assert min(min(v) for v in spec.values() if v) >= -1e-9


def test_indicial_data_sphere():
    d = indicial_data(make_round_sphere(3))
    assert d.u1 == 3 and d.mu1 == 1.0
    assert d.u0 > 0


def test_indicial_data_needs_scalar():
    with pytest.raises(InsufficientSpectralData):
        indicial_data(CrossSection("flat", 3, (0,), (5,), (), 20))
