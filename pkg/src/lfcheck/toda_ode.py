"""Eta-derivative identities checked with high-order finite differences.

The recursion data of every family flows in eta: beta_n and log H_n move
under the semi-infinite Toda lattice, and the Charlier gamma_n satisfies
second and third order nonlinear ODEs. This module samples the moment
route on a short uniform eta-grid and differences it with 4th-order
central stencils, realizing the operator t = eta d/d(eta) through

    t f = eta f',  t^2 f = eta^2 f'' + eta f',
    t^3 f = eta^3 f''' + 3 eta^2 f'' + eta f'.

All grid nodes share one weight-sum truncation index, so the differences
never see truncation jitter, only the smooth eta-dependence.
"""

from __future__ import annotations

from dataclasses import dataclass

import mpmath
from mpmath import mpf

from .numerics import (PrecisionContext, fd_first_5pt, fd_second_5pt,
                       fd_third_7pt)
from .weights import Family, WeightSpec, make_spec
from .moments import compute_moments
from .chol_core import CoefficientTable, factorize, recursion_coefficients
from .lf_engines import IdentityResiduals, _zero_form


@dataclass(frozen=True)
class EtaGrid:
    """Moment-route coefficient tables on eta*(1 + j*h), j = -half..half.

    All tables share the length n_len, the working precision of the
    context that built them, and the truncation index.
    """

    spec: WeightSpec
    h: mpf
    node_count: int
    etas: tuple
    tables: tuple
    n_len: int
    truncation_index: int

    @property
    def center(self) -> CoefficientTable:
        return self.tables[self.node_count // 2]


def build_eta_grid(spec: WeightSpec, n_len: int, ctx: PrecisionContext,
                   h=None, node_count: int = 7) -> EtaGrid:
    """Grid of moment-route tables around spec.eta.

    Node etas are revalidated against the family domain, so a grid that
    would step outside it raises rather than silently extrapolating. The
    truncation index is probed at both endpoints (the weight is pointwise
    monotone in eta, so the cut index peaks at an endpoint) and the
    larger value is forced on every node.
    """
    if node_count not in (5, 7):
        raise ValueError("node count must be 5 or 7")
    half = node_count // 2
    with ctx.working():
        hh = mpf(2) ** -10 if h is None else ctx.to_mpf(h)
        if not 0 < hh * half < 1:
            raise ValueError("relative step too large for the node count")
        etas = tuple(spec.eta * (1 + j * hh) for j in range(-half, half + 1))
    allow = spec.family is Family.HAHN1 and spec.eta > 1
    specs = [make_spec(spec.family, ctx, a=spec.a, b=spec.b, c=spec.c,
                       eta=e, allow_large_eta=allow) for e in etas]
    n_top = 2 * n_len
    k_shared = max(compute_moments(s, n_top, ctx).truncation_index
                   for s in (specs[0], specs[-1]))
    tables = []
    for s in specs:
        m = compute_moments(s, n_top, ctx, forced_k=k_shared)
        f = factorize(m, n_len + 1, ctx)
        tables.append(recursion_coefficients(f, ctx))
    return EtaGrid(spec, hh, node_count, etas, tuple(tables), n_len, k_shared)


def vartheta(grid: EtaGrid, select, ctx: PrecisionContext,
             order: int = 1) -> tuple:
    """(eta d/d eta)^order of a per-n quantity, sampled across the grid.

    select(table, eta) returns one value per index; the result keeps the
    common index range of all nodes. Third derivatives need 7 nodes.
    """
    if order not in (1, 2, 3):
        raise ValueError("order must be 1, 2 or 3")
    if order == 3 and grid.node_count < 7:
        raise ValueError("third derivative needs a 7-node grid")
    c = grid.node_count // 2
    with ctx.working():
        cols = [tuple(select(t, e)) for t, e in zip(grid.tables, grid.etas)]
        m = min(len(col) for col in cols)
        eta = grid.spec.eta
        dx = eta * grid.h
        out = []
        for n in range(m):
            f = [cols[j][n] for j in range(grid.node_count)]
            d1 = fd_first_5pt(f[c - 2], f[c - 1], f[c + 1], f[c + 2], dx)
            if order == 1:
                out.append(eta * d1)
                continue
            d2 = fd_second_5pt(f[c - 2], f[c - 1], f[c], f[c + 1], f[c + 2], dx)
            if order == 2:
                out.append(eta * eta * d2 + eta * d1)
                continue
            d3 = fd_third_7pt(f[0], f[1], f[2], f[4], f[5], f[6], dx)
            out.append(eta ** 3 * d3 + 3 * eta * eta * d2 + eta * d1)
    return tuple(out)


def _first_order(grid, ctx, ident, select, rhs_fn, n_range, offset=0,
                 note="4th-order stencil"):
    """Report for an identity of the shape (eta d/d eta)(X_n) = rhs(n)."""
    th = vartheta(grid, select, ctx, order=1)
    pairs = []
    with ctx.working():
        for n in n_range:
            i = n - offset
            if not 0 <= i < len(th):
                continue
            pairs.append((n, ctx.rel_diff(th[i], rhs_fn(n))))
    return IdentityResiduals(ident, tuple(pairs), note=note)


def toda_residuals(grid: EtaGrid, ctx: PrecisionContext) -> list:
    """The family-independent flow identities.

    beta_n and gamma_n obey the Toda system, log gamma_n its second-order
    consequence, q_n = log H_n the exponential-form lattice equation, and
    H_n, p^1_n the two first-order flows that seed them.
    """
    table = grid.center
    beta, gamma, hseq, p1 = table.beta, table.gamma, table.H, table.p1
    n_len = grid.n_len
    top = n_len - 1  # residuals reported for n <= n_len - 2
    out = []

    th_beta = vartheta(grid, lambda t, e: t.beta, ctx)
    th_loggam = vartheta(
        grid, lambda t, e: [mpmath.log(g) for g in t.gamma[1:]], ctx)
    with ctx.working():
        merged = {}
        for n in range(top):
            merged[n] = ctx.rel_diff(th_beta[n], gamma[n + 1] - gamma[n])
        for n in range(1, top):
            r = ctx.rel_diff(th_loggam[n - 1], beta[n] - beta[n - 1])
            merged[n] = max(merged[n], r)
        out.append(IdentityResiduals("eq:Toda_system",
                                     tuple(sorted(merged.items())),
                                     note="4th-order stencil"))

    th2_loggam = vartheta(
        grid, lambda t, e: [mpmath.log(g) for g in t.gamma[1:]], ctx, order=2)
    th2_logh = vartheta(
        grid, lambda t, e: [mpmath.log(hh) for hh in t.H], ctx, order=2)
    with ctx.working():
        pairs = []
        for n in range(1, top):
            lhs = th2_loggam[n - 1] + 2 * gamma[n]
            rhs = gamma[n + 1] + gamma[n - 1]
            pairs.append((n, ctx.rel_diff(lhs, rhs)))
        out.append(IdentityResiduals("eq:Toda_equation_gamma", tuple(pairs),
                                     note="4th-order stencil"))

        q = [mpmath.log(hh) for hh in hseq]
        pairs = []
        for n in range(1, top):
            rhs = mpmath.exp(q[n + 1] - q[n]) - mpmath.exp(q[n] - q[n - 1])
            pairs.append((n, ctx.rel_diff(th2_logh[n], rhs)))
        out.append(IdentityResiduals("eq:Toda_equation", tuple(pairs),
                                     note="4th-order stencil"))

    out.append(_first_order(
        grid, ctx, "eq:equationsH",
        lambda t, e: [mpmath.log(hh) for hh in t.H],
        lambda n: beta[n], range(top)))
    out.append(_first_order(
        grid, ctx, "eq:equations",
        lambda t, e: t.p1,
        lambda n: -gamma[n], range(top)))
    return out


def charlier_ode_residuals(grid: EtaGrid, ctx: PrecisionContext,
                           n_hi: int = 8) -> list:
    """First-order system, eta-compatibilities, and the two nonlinear ODEs.

    The second- and third-order equations are evaluated with all outer
    derivatives expanded analytically into first/second/third derivatives
    of gamma_n and log gamma_n, so every report converges at 4th order.
    """
    if grid.spec.family is not Family.CHARLIER:
        raise ValueError("these identities hold for the Charlier family only")
    table = grid.center
    beta, gamma = table.beta, table.gamma
    eta, b = grid.spec.eta, grid.spec.b
    n_hi = min(n_hi, grid.n_len - 2)
    rng = range(1, n_hi + 1)
    out = []

    th_beta = vartheta(grid, lambda t, e: t.beta, ctx)
    th_gamma = vartheta(grid, lambda t, e: t.gamma[1:], ctx)
    th2_gamma = vartheta(grid, lambda t, e: t.gamma[1:], ctx, order=2)
    th2_loggam = vartheta(
        grid, lambda t, e: [mpmath.log(g) for g in t.gamma[1:]], ctx, order=2)
    th3_loggam = vartheta(
        grid, lambda t, e: [mpmath.log(g) for g in t.gamma[1:]], ctx, order=3)

    with ctx.working():
        safe = mpf(2) ** (-(ctx.working_bits // 2))
        pairs, skipped = [], []
        for n in rng:
            den = eta - gamma[n]
            if abs(den) <= safe * max(mpf(1), eta):
                skipped.append(n)
                continue
            rhs = (eta * (eta + (b - n) * n + (2 * n - b - beta[n]) * beta[n]
                          - gamma[n]) / den - gamma[n])
            pairs.append((n, ctx.rel_diff(th_beta[n], rhs)))
        note = "4th-order stencil"
        if skipped:
            note += f"; skipped n={skipped} (eta - gamma_n below safe threshold)"
        out.append(IdentityResiduals("eq:Charlier_system_gamma_beta_1",
                                     tuple(pairs), note=note))

        pairs = []
        for n in rng:
            rhs = (b - n + 1 + 2 * beta[n]) * gamma[n] - n * eta
            pairs.append((n, ctx.rel_diff(th_gamma[n - 1], rhs)))
        out.append(IdentityResiduals("eq:Charlier_system_gamma_beta_2",
                                     tuple(pairs), note="4th-order stencil"))

    out.append(_first_order(
        grid, ctx, "eq:eta_compatibility_charlier_1",
        lambda t, e: [n * (e / t.gamma[n]) for n in range(1, len(t.gamma))],
        lambda n: gamma[n + 1] - gamma[n - 1],
        range(1, min(n_hi, grid.n_len - 2) + 1), offset=1))
    out.append(_first_order(
        grid, ctx, "eq:eta_compatibility_charlier_2",
        lambda t, e: [t.gamma[i] * t.gamma[i + 1] / e
                      for i in range(len(t.gamma) - 1)],
        lambda n: (n + 1) * gamma[n] - n * gamma[n + 1], rng))

    with ctx.working():
        # the constant term carries a 1/2 that the display drops: doubling
        # (2n-b)beta_n - beta_n^2 = -A^2/4 + (n+1)A/2 + (n-b-1)(3n-b+1)/4
        # with A = 2beta_n + b - n + 1 gives the halved form
        pairs, printed = [], []
        for n in rng:
            g = gamma[n]
            tg = th_gamma[n - 1]
            t2g = th2_gamma[n - 1]
            big_a = tg / g + n * eta / g
            th_a = t2g / g - (tg / g) ** 2 + n * eta / g - n * eta * tg / g ** 2
            lhs = (1 - g / eta) * (th_a + 2 * g) + 2 * (g - eta + (n - b) * n)
            base = -big_a ** 2 / 2 + (n + 1) * big_a
            const = (-b + n - 1) * (-b + 3 * n + 1)
            pairs.append((n, _zero_form(lhs - base - const / 2,
                                        (lhs, base, const / 2))))
            printed.append((n, _zero_form(lhs - base - const,
                                          (lhs, base, const))))
        out.append(IdentityResiduals(
            "eq:edo_Charlier_2", tuple(pairs),
            note="4th-order stencil; derivatives of the log-derivative "
                 "combination expanded analytically"))
        out.append(IdentityResiduals(
            "eq:edo_Charlier_2[as-printed]", tuple(printed), gating=False,
            note="constant term (-b+n-1)(-b+3n+1) without the 1/2"))

        pairs = []
        for n in rng:
            g = gamma[n]
            tg = th_gamma[n - 1]
            t2lg = th2_loggam[n - 1]
            t3lg = th3_loggam[n - 1]
            flow = ((tg / eta - g / eta) * (t2lg + 2 * g)
                    + (g / eta) * (t3lg + 2 * tg)
                    + n * n * (eta / g - eta * tg / g ** 2))
            pairs.append((n, _zero_form(flow - 2 * g, (flow, 2 * g))))
        out.append(IdentityResiduals(
            "eq:ode_gamma_2", tuple(pairs),
            note="4th-order stencil; outer derivative expanded analytically "
                 "before differencing"))
    return out


def meixner_hahn_eta_residuals(grid: EtaGrid, ctx: PrecisionContext) -> list:
    """The flow identities specific to the two eta-differentiable families
    with nonconstant sigma."""
    table = grid.center
    beta, gamma = table.beta, table.gamma
    spec = grid.spec
    a, b, c, eta = spec.a, spec.b, spec.c, spec.eta
    n_len = grid.n_len
    out = []

    if spec.family is Family.MEIXNER:
        out.append(_first_order(
            grid, ctx, "eq:1",
            lambda t, e: [e * g for g in t.gamma[1:]],
            lambda n: eta * gamma[n] * (beta[n] - beta[n - 1] + 1),
            range(1, n_len - 1), offset=1))
        out.append(_first_order(
            grid, ctx, "eq:2",
            lambda t, e: [t.beta[i] + t.beta[i + 1] + b - i
                          for i in range(len(t.beta) - 1)],
            lambda n: gamma[n + 2] - gamma[n], range(n_len - 2)))
        out.append(_first_order(
            grid, ctx, "eq:3",
            lambda t, e: [e * (t.beta[i] + a + i) for i in range(len(t.beta))],
            lambda n: (gamma[n + 1] * (beta[n] + beta[n + 1] + b - n)
                       - gamma[n] * (beta[n - 1] + beta[n] + b - (n - 1))),
            range(1, n_len - 1)))
        return out

    if spec.family is not Family.HAHN1:
        raise ValueError("flow identities exist for meixner and hahn1 only")

    def sel_ii2(t, e):
        vals = []
        for n in range(len(t.gamma) - 1):
            vals.append((e / (e + 1))
                        * (2 * (t.gamma[n + 1] + t.gamma[n] + t.beta[n] ** 2)
                           + c * (t.beta[n] - n) + n * (n - 1)
                           + (a + b) * (t.beta[n] + n) + a * b))
        return vals

    def rhs_ii2(n):
        return (gamma[n + 1] * (beta[n] + beta[n + 1] + c - n)
                - gamma[n] * (beta[n - 1] + beta[n] + c - (n - 1)))

    def rhs_ii3(n):
        return ((eta / (eta + 1)) * gamma[n + 1]
                * (2 * (gamma[n + 2] - gamma[n]
                        + beta[n + 1] ** 2 - beta[n] ** 2)
                   + (a + b + c) * (beta[n + 1] - beta[n])
                   + 2 * n + (a + b - c)))

    out.append(_first_order(
        grid, ctx, "eq:Hahn_compatibiliyII_1",
        lambda t, e: [t.beta[i] + t.beta[i + 1] + c - i
                      for i in range(len(t.beta) - 1)],
        lambda n: gamma[n + 2] - gamma[n], range(n_len - 2)))
    out.append(_first_order(grid, ctx, "eq:Hahn_compatibiliyII_2", sel_ii2,
                            rhs_ii2, range(1, n_len - 1)))
    out.append(_first_order(
        grid, ctx, "eq:Hahn_compatibiliyII_3",
        lambda t, e: [e * t.gamma[i + 1] * (i + a + b + t.beta[i] + t.beta[i + 1])
                      for i in range(len(t.beta) - 1)],
        rhs_ii3, range(n_len - 2)))
    out.append(_first_order(
        grid, ctx, "eq:Hahn_compatibiliyII_4",
        lambda t, e: [e * t.gamma[i + 1] * t.gamma[i + 2]
                      for i in range(len(t.gamma) - 2)],
        lambda n: (eta * gamma[n + 1] * gamma[n + 2]
                   * (beta[n + 2] - beta[n] + 1)),
        range(n_len - 2)))
    return out


def eta_suite(spec: WeightSpec, n_len: int, ctx: PrecisionContext,
              h=None, node_count: int = 7) -> list:
    """All flow reports applicable to one family at one parameter point."""
    grid = build_eta_grid(spec, n_len, ctx, h=h, node_count=node_count)
    reports = toda_residuals(grid, ctx)
    if spec.family is Family.CHARLIER:
        reports.extend(charlier_ode_residuals(grid, ctx))
    else:
        reports.extend(meixner_hahn_eta_residuals(grid, ctx))
    return reports


def order_annotated_suite(spec: WeightSpec, n_len: int, ctx: PrecisionContext,
                          h=None, node_count: int = 7) -> list:
    """eta_suite at h, annotated with the shrink measured at h/2.

    The empirical convergence order is log2(max_h / max_half); 4th-order
    identities land near 16x shrink per halving.
    """
    with ctx.working():
        h0 = mpf(2) ** -10 if h is None else ctx.to_mpf(h)
        h1 = h0 / 2
    coarse = eta_suite(spec, n_len, ctx, h=h0, node_count=node_count)
    fine = {r.identity: r for r in
            eta_suite(spec, n_len, ctx, h=h1, node_count=node_count)}
    out = []
    for r in coarse:
        other = fine[r.identity]
        if r.max_residual > 0 and other.max_residual > 0:
            with mpmath.workprec(64):
                shrink = r.max_residual / other.max_residual
                order = mpmath.log(shrink, 2)
            extra = (f"shrink {mpmath.nstr(shrink, 4)}x at h/2 "
                     f"(order ~{mpmath.nstr(order, 3)})")
        else:
            extra = "residual at rounding floor; order fit skipped"
        note = f"{r.note}; {extra}" if r.note else extra
        out.append(IdentityResiduals(r.identity, r.residuals, r.gating, note))
    return out


def meixner_a1_flow_exact(spec: WeightSpec, n_len: int,
                          ctx: PrecisionContext) -> list:
    """Scalar check of every flow identity on beta_n = n - b + eta,
    gamma_n = n eta (the a = 1 closed form), with the eta-derivatives
    taken analytically: t beta_n = eta, t gamma_n = gamma_n, t(eta
    gamma_n) = 2 eta gamma_n. Pure arithmetic, no differencing."""
    if spec.family is not Family.MEIXNER or spec.a != 1:
        raise ValueError("closed form requires the meixner family at a = 1")
    b, eta = spec.b, spec.eta
    out = []
    with ctx.working():
        beta = [n - b + eta for n in range(n_len + 2)]
        gamma = [n * eta for n in range(n_len + 2)]
        sys_pairs, teq_pairs, e1, e2, e3 = [], [], [], [], []
        for n in range(1, n_len):
            r = ctx.rel_diff(eta, gamma[n + 1] - gamma[n])
            r = max(r, ctx.rel_diff(mpf(1), beta[n] - beta[n - 1]))
            sys_pairs.append((n, r))
            # t^2 log gamma_n = 0 analytically
            teq_pairs.append((n, ctx.rel_diff(2 * gamma[n],
                                              gamma[n + 1] + gamma[n - 1])))
            e1.append((n, ctx.rel_diff(2 * eta * gamma[n],
                                       eta * gamma[n]
                                       * (beta[n] - beta[n - 1] + 1))))
            e2.append((n, ctx.rel_diff(2 * eta, gamma[n + 2] - gamma[n])))
            lhs = eta * (beta[n] + 1 + n) + eta * eta
            rhs = (gamma[n + 1] * (beta[n] + beta[n + 1] + b - n)
                   - gamma[n] * (beta[n - 1] + beta[n] + b - (n - 1)))
            e3.append((n, ctx.rel_diff(lhs, rhs)))
    note = "closed form substituted as scalars; derivatives analytic"
    out.append(IdentityResiduals("eq:Toda_system[a1-exact]", tuple(sys_pairs),
                                 note=note))
    out.append(IdentityResiduals("eq:Toda_equation_gamma[a1-exact]",
                                 tuple(teq_pairs), note=note))
    out.append(IdentityResiduals("eq:1[a1-exact]", tuple(e1), note=note))
    out.append(IdentityResiduals("eq:2[a1-exact]", tuple(e2), note=note))
    out.append(IdentityResiduals("eq:3[a1-exact]", tuple(e3), note=note))
    return out
