"""Moment tables against exact rational sums, hypergeometric partition
values against brute series, and Euler-derivative identities."""

from fractions import Fraction

import pytest
from mpmath import mpf

from lfcheck import PrecisionContext, compute_moments, make_spec
from lfcheck.moments import (
    eta_neighbors,
    hankel_determinants,
    rho0_hypergeometric,
    vartheta_rho,
)
from lfcheck.numerics import fd_first_5pt
from lfcheck.weights import weight_table


def test_partition_function_matches_brute_series(ctx, all_pipelines):
    # the series tail bounds the achievable agreement; eta = 0.5 decays
    # slowest of the three defaults
    floors = {"charlier": 1e-150, "meixner": 1e-150, "hahn1": 1e-115}
    for key, (spec, _, _, _) in all_pipelines.items():
        w = weight_table(spec, 400, ctx)
        with ctx.working():
            rel = ctx.rel_diff(rho0_hypergeometric(spec, ctx), sum(w))
        assert float(rel) < floors[key], key


def test_moments_match_exact_rational_sums(ctx, charlier):
    # b = 1/2, eta = 1: every lattice weight is rational, so the truncated
    # moment sums have exact Fraction counterparts
    spec, moments, _, _ = charlier
    K = moments.truncation_index
    w = Fraction(1)
    sums = [Fraction(0)] * 7
    b = Fraction(1, 2)
    for k in range(K + 1):
        for n in range(7):
            sums[n] += Fraction(k) ** n * w
        w *= Fraction(1) / ((b + 1 + k) * (k + 1))
    with ctx.working():
        worst = mpf(0)
        for n in range(7):
            exact = mpf(sums[n].numerator) / mpf(sums[n].denominator)
            worst = max(worst, ctx.rel_diff(moments.rho[n], exact))
    assert float(worst) < 1e-140


def test_meixner_moments_match_exact_rational_sums(ctx, meixner):
    spec, moments, _, _ = meixner
    K = moments.truncation_index
    a, b, eta = Fraction(5, 2), Fraction(2, 5), Fraction(3, 5)
    w = Fraction(1)
    sums = [Fraction(0)] * 5
    for k in range(K + 1):
        for n in range(5):
            sums[n] += Fraction(k) ** n * w
        w *= (a + k) * eta / ((b + 1 + k) * (k + 1))
    with ctx.working():
        worst = mpf(0)
        for n in range(5):
            exact = mpf(sums[n].numerator) / mpf(sums[n].denominator)
            worst = max(worst, ctx.rel_diff(moments.rho[n], exact))
    assert float(worst) < 1e-140


def test_truncation_metadata(ctx, all_pipelines):
    for key, (_, moments, _, _) in all_pipelines.items():
        assert moments.truncation_index > 10
        assert float(moments.tail_bound) >= 0
        assert moments.precision_bits == 512
        assert len(moments.rho) == 53


def test_forced_truncation_respected(ctx, charlier):
    spec, moments, _, _ = charlier
    forced = compute_moments(spec, 10, ctx, forced_k=60)
    assert forced.truncation_index == 60
    with ctx.working():
        worst = max(ctx.rel_diff(forced.rho[n], moments.rho[n])
                    for n in range(11))
    assert float(worst) < 1e-100
    # cutting the series short must be reported as a larger tail bound
    short = compute_moments(spec, 10, ctx, forced_k=10)
    assert float(short.tail_bound) > float(forced.tail_bound)


def test_euler_derivative_of_moments(ctx, charlier):
    # eta d/d eta of rho_n equals rho_{n+1}: each lattice weight carries
    # eta^k, so the Euler operator inserts one factor of k
    spec, moments, _, _ = charlier
    estimates = vartheta_rho(spec, 6, ctx)
    with ctx.working():
        worst = max(ctx.rel_diff(estimates[n], moments.rho[n + 1])
                    for n in range(7))
    assert float(worst) < 1e-8


def test_hankel_conventions(ctx, charlier):
    _, moments, _, _ = charlier
    hk = hankel_determinants(moments, 6, ctx)
    assert hk.delta[0] == 1
    assert hk.delta_tilde[0] == 0
    assert hk.delta[1] == moments.rho[0]
    assert len(hk.delta) == len(hk.delta_tilde) == 7
    assert all(float(d) > 0 for d in hk.delta)


def test_euler_derivative_of_hankel_determinants(ctx, charlier):
    # eta d/d eta of Delta_k equals the row-shifted determinant
    spec, moments, _, _ = charlier
    with ctx.working():
        h_rel = mpf(2) ** -10
        dx = spec.eta * h_rel
    center = hankel_determinants(moments, 5, ctx)
    nodes = eta_neighbors(spec, h_rel, ctx, (-2, -1, 1, 2))
    tables = [hankel_determinants(compute_moments(s, 10, ctx), 5, ctx)
              for s in nodes]
    with ctx.working():
        worst = mpf(0)
        for k in range(1, 6):
            d = fd_first_5pt(tables[0].delta[k], tables[1].delta[k],
                             tables[2].delta[k], tables[3].delta[k], dx)
            worst = max(worst, ctx.rel_diff(spec.eta * d, center.delta_tilde[k]))
    assert float(worst) < 1e-8


def test_precision_doubling_stabilizes_moments(ctx, charlier):
    spec512, moments512, _, _ = charlier
    ctx2 = PrecisionContext(1024)
    spec2 = make_spec("charlier", ctx2, b="0.5", eta="1")
    moments2 = compute_moments(spec2, 20, ctx2)
    with ctx2.working():
        worst = max(ctx2.rel_diff(moments512.rho[n], moments2.rho[n])
                    for n in range(21))
    assert float(worst) < 1e-100
