"""Moments of the weight, Hankel determinants, and eta-derivatives of both.

Moments rho_j = sum_k k^j w(k) for all j up to the requested top index are
accumulated in a single pass over the lattice. The summation cut requires
the tail to be provably negligible at working precision both relative to
the largest-index moment and relative to rho_0.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import mpmath
from mpmath import mp, mpf

from .numerics import PrecisionContext, fd_first_5pt, lu_determinant
from .weights import Family, WeightSpec, pearson_data, polyval


@dataclass(frozen=True)
class MomentTable:
    rho: tuple
    truncation_index: int
    tail_bound: mpf
    precision_bits: int

    def __len__(self):
        return len(self.rho)


@dataclass(frozen=True)
class HankelTable:
    """delta[k] is the k x k leading minor (delta[0] = 1); delta_tilde[k]
    replaces its last column with moments rho_k ... rho_{2k-1}."""

    delta: tuple
    delta_tilde: tuple
    max_precision_bits: int


def compute_moments(spec: WeightSpec, n_top: int, ctx: PrecisionContext,
                    forced_k: int | None = None) -> MomentTable:
    """All moments rho_0 .. rho_{n_top} in one pass.

    The cut fires only in the decreasing regime, once the top-index term is
    below 2^-(working+guard) of its partial sum and the geometric tail
    estimate is below 2^-working of rho_0.
    """
    pearson = pearson_data(spec, ctx)
    with ctx.working():
        cut_rel = mpf(2) ** (-(ctx.working_bits + ctx.guard_bits))
        cut_abs = mpf(2) ** (-ctx.working_bits)
        sums = [mpf(0)] * (n_top + 1)
        w = mpf(1)
        k = 0
        prev_top = None
        tail_bound = mpf(0)
        while True:
            kf = mpf(k)
            p = mpf(1)
            for j in range(n_top + 1):
                sums[j] += p * w
                if j < n_top:
                    p *= kf
            top_term = p * w
            if forced_k is not None:
                if k >= forced_k:
                    if prev_top is not None and prev_top > 0 and top_term < prev_top:
                        r = top_term / prev_top
                        tail_bound = top_term * r / (1 - r)
                    break
            elif (prev_top is not None and prev_top > 0 and top_term < prev_top
                  and k > n_top):
                r = top_term / prev_top
                tail_est = top_term * r / (1 - r)
                if top_term <= cut_rel * sums[n_top] and tail_est <= cut_abs * sums[0]:
                    tail_bound = tail_est
                    break
            prev_top = top_term
            w = w * polyval(pearson.sigma, kf) / polyval(pearson.theta, kf + 1)
            k += 1
        return MomentTable(tuple(sums), k, tail_bound, ctx.working_bits)


def rho0_hypergeometric(spec: WeightSpec, ctx: PrecisionContext) -> mpf:
    """Independent oracle for rho_0 via the classified hypergeometric sums."""
    with mp.workprec(ctx.working_bits + ctx.guard_bits):
        if spec.family is Family.CHARLIER:
            return mpmath.hyper([], [spec.b + 1], spec.eta)
        if spec.family is Family.MEIXNER:
            return mpmath.hyper([spec.a], [spec.b + 1], spec.eta)
        return mpmath.hyper([spec.a, spec.b], [spec.c + 1], spec.eta)


def _hankel_matrix(rho, k: int) -> list:
    return [[rho[i + j] for j in range(k)] for i in range(k)]


def _hankel_matrix_tilde(rho, k: int) -> list:
    m = [[rho[i + j] for j in range(k)] for i in range(k)]
    for i in range(k):
        m[i][k - 1] = rho[k + i]
    return m


def _det_escalated(matrix, ctx: PrecisionContext) -> tuple:
    """Determinant with doubling precision until two runs agree to half the
    working bits; returns (value, bits_used)."""
    base = ctx.working_bits + ctx.guard_bits
    cap = 8 * base
    agree = mpf(2) ** (-(ctx.working_bits // 2))
    bits = base
    prev = lu_determinant(matrix, bits)
    while bits < cap:
        bits *= 2
        cur = lu_determinant(matrix, bits)
        scale = max(abs(prev), abs(cur), mpf(1))
        if abs(cur - prev) / scale <= agree:
            return cur, bits
        prev = cur
    return prev, bits


def hankel_determinants(moments: MomentTable, k_max: int, ctx: PrecisionContext) -> HankelTable:
    rho = moments.rho
    if 2 * k_max - 1 >= len(rho) and k_max > 0:
        raise ValueError(f"need moments up to rho_{2 * k_max - 1}, have {len(rho) - 1}")
    delta = [mpf(1)]
    delta_tilde = [mpf(0)]
    bits_used = ctx.working_bits + ctx.guard_bits
    with ctx.working():
        for k in range(1, k_max + 1):
            d, b1 = _det_escalated(_hankel_matrix(rho, k), ctx)
            dt, b2 = _det_escalated(_hankel_matrix_tilde(rho, k), ctx)
            delta.append(d)
            delta_tilde.append(dt)
            bits_used = max(bits_used, b1, b2)
    return HankelTable(tuple(delta), tuple(delta_tilde), bits_used)


def eta_neighbors(spec: WeightSpec, h_rel, ctx: PrecisionContext, offsets) -> list:
    """Specs at eta(1 + j*h) for j in offsets."""
    out = []
    with ctx.working():
        for j in offsets:
            out.append(replace(spec, eta=spec.eta * (1 + mpf(j) * h_rel)))
    return out


def vartheta_rho(spec: WeightSpec, n_top: int, ctx: PrecisionContext,
                 h_rel=None) -> tuple:
    """eta d/deta of each moment by the 4th-order central stencil.

    All four nodes share the largest natural truncation index so the
    difference quotient never sees truncation jitter.
    """
    with ctx.working():
        h_rel = mpf(2) ** -10 if h_rel is None else mpf(h_rel)
        step = spec.eta * h_rel
        nodes = eta_neighbors(spec, h_rel, ctx, (-2, -1, 1, 2))
        natural = [compute_moments(s, n_top, ctx) for s in nodes]
        k_shared = max(t.truncation_index for t in natural)
        tables = [compute_moments(s, n_top, ctx, forced_k=k_shared) for s in nodes]
        out = []
        for j in range(n_top + 1):
            d = fd_first_5pt(tables[0].rho[j], tables[1].rho[j],
                             tables[2].rho[j], tables[3].rho[j], step)
            out.append(spec.eta * d)
        return tuple(out)
