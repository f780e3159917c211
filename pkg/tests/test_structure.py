"""Structure matrices: two independent constructions, band confinement,
compatibility with the Jacobi operator, lattice shift equations, and the
dressed Pascal calculus."""

from mpmath import mpf

from conftest import by_id, fmax
from lfcheck.structure import (
    band_degrees,
    build_pascal,
    build_psi_closed_form,
    build_psi_definitional,
    compare_structure,
    default_shift_samples,
    dress_pascal,
    structure_suite,
)
from lfcheck.weights import SIGMA_DEGREE

COMMON_IDS = {
    "eq:pis",
    "eq:piss",
    "eq:pis2",
    "pascal_shift_plus",
    "pascal_shift_minus",
    "psi_two_route_agreement",
    "psi_band_structure",
    "eq:diagonals_Psi",
    "psi_closed_form_agreement",
    "eq:compatibility_Jacobi_structure_a",
    "eq:compatibility_Jacobi_structure_b",
    "eq:P_shift_theta",
    "eq:P_shift_sigma",
}
EXTRA_IDS = {
    "charlier": {"eq:Pascal_Jacobi_Charlier", "eq:Pascal_Charlier",
                 "eq:Pascal_Chirstoffel", "charlier_zero_evaluation"},
    "meixner": set(),
    "hahn1": {"hahn_psi0_ratio_form"},
}
SHIFT_IDS = {"eq:P_shift_theta", "eq:P_shift_sigma"}


def test_suite_identity_sets_and_levels(ctx, all_pipelines):
    for key, (spec, _, fact, table) in all_pipelines.items():
        reports = by_id(structure_suite(spec, fact, table, ctx))
        assert set(reports) == COMMON_IDS | EXTRA_IDS[key], key
        for ident, r in reports.items():
            assert r.gating, (key, ident)
            # shift equations run through explicit lattice evaluation and
            # carry a slightly higher floor than the pure matrix identities
            bound = 1e-80 if ident in SHIFT_IDS else 1e-100
            assert fmax(r) < bound, (key, ident)


def test_two_route_window_is_wide_enough(ctx, all_pipelines):
    for key, (spec, _, fact, table) in all_pipelines.items():
        reports = by_id(structure_suite(spec, fact, table, ctx))
        assert len(reports["psi_two_route_agreement"].residuals) >= 10, key


def test_band_structure_matches_pearson_degrees(ctx, all_pipelines):
    # sub band = deg sigma, super band = deg theta: the matrix confines the
    # Pearson data
    for key, (spec, _, fact, table) in all_pipelines.items():
        pd = dress_pascal(fact, build_pascal(26), ctx)
        pair = build_psi_definitional(spec, fact, pd, table, ctx)
        want = (SIGMA_DEGREE[spec.family], 2)
        assert band_degrees(spec, ctx) == want
        assert (pair.primary.sub_band, pair.primary.super_band) == want, key
        closed = build_psi_closed_form(spec, table, ctx)
        assert (closed.sub_band, closed.super_band) == want, key
        assert (closed.psi.lower_band, closed.psi.upper_band) == want, key
        reports = by_id(structure_suite(spec, fact, table, ctx))
        assert fmax(reports["psi_band_structure"]) < 1e-100, key


def test_definitional_routes_and_windows(ctx, all_pipelines):
    for key, (spec, _, fact, table) in all_pipelines.items():
        pd = dress_pascal(fact, build_pascal(26), ctx)
        pair = build_psi_definitional(spec, fact, pd, table, ctx)
        assert pair.primary.route == "Pi^-1 H theta(J^T)"
        assert pair.alternate.route == "sigma(J) H Pi^T"
        assert pair.primary.psi.valid_window >= 15
        assert pair.alternate.psi.valid_window >= 15
        assert {r.identity for r in pair.reports} == {
            "psi_two_route_agreement", "psi_band_structure",
            "eq:diagonals_Psi"}


def test_closed_form_diagonal_coverage(ctx, all_pipelines):
    spans = {"charlier": [0, 1, 2], "meixner": [-1, 0, 1, 2],
             "hahn1": [-2, -1, 0, 1, 2]}
    for key, (spec, _, fact, table) in all_pipelines.items():
        closed = build_psi_closed_form(spec, table, ctx)
        assert sorted(closed.diag_coeffs) == spans[key], key


def test_compare_structure_reports_disagreement(ctx, charlier):
    spec, _, fact, table = charlier
    pd = dress_pascal(fact, build_pascal(26), ctx)
    pair = build_psi_definitional(spec, fact, pd, table, ctx)
    closed = build_psi_closed_form(spec, table, ctx)
    agree = compare_structure(pair.primary, closed, ctx, "probe")
    assert agree.identity == "probe"
    assert fmax(agree) < 1e-100
    # corrupt one diagonal coefficient and the comparison must say so
    bumped = build_psi_closed_form(spec, table, ctx)
    with ctx.working():
        seq = list(bumped.diag_coeffs[0])
        seq[5] = seq[5] * (1 + mpf(2) ** -30)
        bumped.diag_coeffs[0] = tuple(seq)
    flagged = compare_structure(pair.primary, bumped, ctx, "probe")
    assert fmax(flagged) > 1e-11


def test_dressed_pascal_is_unit_triangular(ctx, charlier):
    _, _, fact, _ = charlier
    pd = dress_pascal(fact, build_pascal(26), ctx)
    assert pd.Pi is not None and pd.Pi_inv is not None
    assert pd.Pi.upper_band == 0
    # dressing trims one row relative to the factorization size
    assert pd.Pi.size == 25
    assert all(pd.Pi.entry(i, i) == 1 for i in range(pd.Pi.size))
    with ctx.working():
        worst = mpf(0)
        for i in range(pd.Pi.valid_window):
            for j in range(max(0, i - 3), i + 1):
                acc = mpf(0)
                for k in range(j, i + 1):
                    acc += pd.Pi.entry(i, k) * pd.Pi_inv.entry(k, j)
                want = mpf(1) if i == j else mpf(0)
                worst = max(worst, abs(acc - want))
    assert float(worst) < 1e-130


def test_pascal_matrix_is_binomial(ctx):
    pd = build_pascal(8)
    import math
    assert all(pd.B.entry(i, j) == math.comb(i, j)
               for i in range(8) for j in range(8) if j <= i)
    # B^-1 carries alternating signs on the same binomial skeleton
    assert all(pd.B_inv.entry(i, j) == (-1) ** (i - j) * math.comb(i, j)
               for i in range(8) for j in range(8) if j <= i)


def test_shift_sample_points(ctx, all_pipelines):
    for key, (spec, _, _, _) in all_pipelines.items():
        samples = default_shift_samples(spec, ctx)
        assert len(samples) >= 6, key
        assert len(set(float(z) for z in samples)) == len(samples), key
