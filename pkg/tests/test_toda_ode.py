"""Deformation-flow tests: grid construction, the Euler operator
eta d/d eta, the per-family flow identity suites, step-halving
convergence, and the a = 1 analytic flow.

Flow residuals are discretization-limited, not rounding-limited: the
5-point stencils put the floor near h^4 ~ 1e-12 at the default step,
two orders below the shipped 1e-8 bound.
"""

import pytest
from mpmath import mpf

from conftest import by_id, fmax
from lfcheck.toda_ode import (
    build_eta_grid,
    eta_suite,
    meixner_a1_flow_exact,
    order_annotated_suite,
    vartheta,
)
from lfcheck.weights import Family, make_spec

TODA_IDS = {
    "eq:Toda_system",
    "eq:Toda_equation_gamma",
    "eq:Toda_equation",
    "eq:equationsH",
    "eq:equations",
}

FLOW_IDS = {
    "charlier": TODA_IDS | {
        "eq:Charlier_system_gamma_beta_1",
        "eq:Charlier_system_gamma_beta_2",
        "eq:eta_compatibility_charlier_1",
        "eq:eta_compatibility_charlier_2",
        "eq:edo_Charlier_2",
        "eq:edo_Charlier_2[as-printed]",
        "eq:ode_gamma_2",
    },
    "meixner": TODA_IDS | {"eq:1", "eq:2", "eq:3"},
    "hahn1": TODA_IDS | {
        "eq:Hahn_compatibiliyII_1",
        "eq:Hahn_compatibiliyII_2",
        "eq:Hahn_compatibiliyII_3",
        "eq:Hahn_compatibiliyII_4",
    },
}

INFO_IDS = {
    "charlier": {"eq:edo_Charlier_2[as-printed]"},
    "meixner": set(),
    "hahn1": set(),
}


def test_grid_shape(ctx, charlier):
    spec = charlier[0]
    grid = build_eta_grid(spec, 6, ctx)
    assert grid.node_count == 7
    assert len(grid.etas) == 7 and len(grid.tables) == 7
    assert grid.etas[3] == spec.eta
    assert grid.center is grid.tables[3]
    assert grid.truncation_index > 0
    assert all(len(t.beta) == 6 for t in grid.tables)


def test_grid_center_matches_direct_table(ctx, charlier):
    # the shared forced truncation must not move the center coefficients
    spec, _, _, table = charlier
    grid = build_eta_grid(spec, 8, ctx)
    c = grid.center
    with ctx.working():
        worst = mpf(0)
        for n in range(8):
            worst = max(worst, ctx.rel_diff(c.beta[n], table.beta[n]))
            worst = max(worst, ctx.rel_diff(c.H[n], table.H[n]))
        for n in range(1, 8):
            worst = max(worst, ctx.rel_diff(c.gamma[n], table.gamma[n]))
    assert float(worst) < 1e-125


def test_grid_rejects_bad_node_count(ctx, charlier):
    with pytest.raises(ValueError, match="node count must be 5 or 7"):
        build_eta_grid(charlier[0], 6, ctx, node_count=9)


def test_grid_rejects_large_step(ctx, charlier):
    with pytest.raises(ValueError, match="relative step too large"):
        build_eta_grid(charlier[0], 6, ctx, h=0.4)


def test_grid_revalidates_node_etas(ctx):
    # eta = 0.8 with h = 0.1 pushes the top node to 1.04, past the
    # convergence ceiling this family enforces
    spec = make_spec(Family.HAHN1, ctx, a=1.2, b=0.7, c=0.4, eta=0.8)
    with pytest.raises(ValueError, match="eta < 1"):
        build_eta_grid(spec, 6, ctx, h=0.1)


def test_vartheta_exact_on_dyadic_cubes(ctx, charlier):
    # eta = 1 and h = 2^-10 keep eta^3 and the stencil weights exact,
    # so the Euler chain (eta d)^k eta^3 = 3^k eta^3 comes out bit-true
    grid = build_eta_grid(charlier[0], 4, ctx)
    with ctx.working():
        for order, want in ((1, 3), (2, 9), (3, 27)):
            got = vartheta(grid, lambda t, e: (e ** 3,), ctx, order=order)
            assert len(got) == 1
            assert got[0] == want, order


def test_vartheta_five_node_grid(ctx, charlier):
    grid = build_eta_grid(charlier[0], 4, ctx, node_count=5)
    with ctx.working():
        for order, want in ((1, 2), (2, 4)):
            got = vartheta(grid, lambda t, e: (e ** 2,), ctx, order=order)
            assert got[0] == want, order
    with pytest.raises(ValueError, match="third derivative needs a 7-node"):
        vartheta(grid, lambda t, e: (e,), ctx, order=3)
    with pytest.raises(ValueError, match="order must be 1, 2 or 3"):
        vartheta(grid, lambda t, e: (e,), ctx, order=4)


def test_vartheta_tracks_table_length(ctx, charlier):
    grid = build_eta_grid(charlier[0], 4, ctx)
    got = vartheta(grid, lambda t, e: t.gamma, ctx)
    assert len(got) == 4


@pytest.mark.parametrize("key", ["charlier", "meixner", "hahn1"])
def test_flow_identity_sets(ctx, all_pipelines, key):
    spec = all_pipelines[key][0]
    reports = eta_suite(spec, 12, ctx)
    assert {r.identity for r in reports} == FLOW_IDS[key]
    for r in reports:
        ns = [n for n, _ in r.residuals]
        assert min(ns) <= 1 and max(ns) >= 8, r.identity
        if r.identity in INFO_IDS[key]:
            assert not r.gating
            assert fmax(r) > 0.1, r.identity
        else:
            assert r.gating
            assert fmax(r) < 1e-8, r.identity


@pytest.mark.parametrize("key", ["charlier", "meixner", "hahn1"])
def test_step_halving_shrinks_residuals(ctx, all_pipelines, key):
    spec = all_pipelines[key][0]
    with ctx.working():
        h = mpf(2) ** -10
    coarse = by_id(eta_suite(spec, 12, ctx, h=h))
    fine = by_id(eta_suite(spec, 12, ctx, h=h / 2))
    for ident, r in coarse.items():
        if not r.gating:
            continue
        ratio = fmax(r) / fmax(fine[ident])
        assert ratio >= 12, (ident, ratio)


def test_order_annotation_notes(ctx, charlier):
    reports = order_annotated_suite(charlier[0], 12, ctx)
    assert {r.identity for r in reports} == FLOW_IDS["charlier"]
    for r in reports:
        if r.gating:
            assert "order ~4.0" in r.note, r.identity
        else:
            assert "shrink 1.0x" in r.note, r.identity
    notes = {r.identity: r.note for r in reports}
    assert "analytically" in notes["eq:edo_Charlier_2"]
    assert "analytically" in notes["eq:ode_gamma_2"]


def test_a1_analytic_flow_is_exact(ctx, meixner_a1):
    reports = meixner_a1_flow_exact(meixner_a1[0], 12, ctx)
    assert {r.identity for r in reports} == {
        "eq:Toda_system[a1-exact]",
        "eq:Toda_equation_gamma[a1-exact]",
        "eq:1[a1-exact]",
        "eq:2[a1-exact]",
        "eq:3[a1-exact]",
    }
    for r in reports:
        assert r.gating
        assert fmax(r) < 1e-140, r.identity
        assert "analytic" in r.note


def test_a1_analytic_flow_rejects_other_specs(ctx, charlier, meixner):
    for spec in (charlier[0], meixner[0]):
        with pytest.raises(ValueError, match="meixner family at a = 1"):
            meixner_a1_flow_exact(spec, 8, ctx)
