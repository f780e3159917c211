"""Moment route: Cholesky factorization of the moment section and the
recursion coefficients read off from it.

G = S^-1 H S^-T with S unit lower triangular and H positive diagonal.
The classical LDL^T pass produces L = S^-1 directly; S follows by forward
substitution. First subdiagonal entries of S are the subleading polynomial
coefficients p^1_n, the diagonal of H gives squared norms, and

    gamma_n = H_n / H_{n-1},     beta_n = p^1_n - p^1_{n+1}.
"""

from __future__ import annotations

from dataclasses import dataclass

from mpmath import mpf

from .numerics import (BandedOperator, NumericalBreakdown, PrecisionContext,
                       unit_lower_inverse)
from .moments import MomentTable
from .weights import WeightSpec


@dataclass(frozen=True)
class CholeskyFactorization:
    """S, H and the moment section they factor.

    L is the raw unit lower factor (S's inverse); it is kept because the
    reconstruction check L H L^T = G is conditioning-free, whereas
    re-inverting S would pay the Hankel section's condition number twice.
    """

    S: BandedOperator
    H: tuple
    G_section: list
    L: BandedOperator

    @property
    def size(self) -> int:
        return self.S.size


@dataclass(frozen=True)
class CoefficientTable:
    """Recursion data for n = 0 .. N-1 with gamma_0 = 0 and p1_0 = 0."""

    beta: tuple
    gamma: tuple
    H: tuple
    p1: tuple
    provenance: str

    def __len__(self):
        return len(self.beta)


def moment_section(moments: MomentTable, size: int) -> list:
    if 2 * (size - 1) >= len(moments.rho):
        raise ValueError(f"need moments up to rho_{2 * (size - 1)}, have {len(moments.rho) - 1}")
    return [[moments.rho[i + j] for j in range(size)] for i in range(size)]


def factorize(moments: MomentTable, size: int, ctx: PrecisionContext) -> CholeskyFactorization:
    """Pivot-free LDL^T of the Hankel section; fails on loss of positivity."""
    g = moment_section(moments, size)
    with ctx.working():
        lower = [[mpf(0)] * size for _ in range(size)]
        h = []
        for i in range(size):
            for j in range(i):
                acc = g[i][j]
                for k in range(j):
                    acc -= lower[i][k] * lower[j][k] * h[k]
                lower[i][j] = acc / h[j]
            acc = g[i][i]
            for k in range(i):
                acc -= lower[i][k] * lower[i][k] * h[k]
            if not acc > 0:
                partial = None
                if i >= 1:
                    # rows and pivots before i are complete, so the leading
                    # i x i factorization is valid on its own
                    rows_i = [row[:i] for row in lower[:i]]
                    l_i = BandedOperator(i, i - 1, 0, rows_i, i)
                    partial = CholeskyFactorization(
                        unit_lower_inverse(l_i), tuple(h),
                        [row[:i] for row in g[:i]], l_i)
                raise NumericalBreakdown(
                    f"moment section not positive definite at {i}",
                    index=i, partial=partial)
            lower[i][i] = mpf(1)
            h.append(acc)
        l_op = BandedOperator(size, size - 1, 0, lower, size)
        s_op = unit_lower_inverse(l_op)
        return CholeskyFactorization(s_op, tuple(h), g, l_op)


def reconstruction_residual(f: CholeskyFactorization, ctx: PrecisionContext) -> mpf:
    """max scaled defect of S^-1 H S^-T against the moment section.

    Evaluated through the stored factor L = S^-1, so the result reflects
    the factorization itself rather than the round trip through two
    triangular inversions."""
    size = f.size
    with ctx.working():
        worst = mpf(0)
        for i in range(size):
            for j in range(size):
                acc = mpf(0)
                for k in range(min(i, j) + 1):
                    acc += f.L.rows[i][k] * f.H[k] * f.L.rows[j][k]
                r = abs(acc - f.G_section[i][j]) / max(mpf(1), abs(f.G_section[i][j]))
                if r > worst:
                    worst = r
        return worst


def inversion_roundtrip_residual(f: CholeskyFactorization,
                                 ctx: PrecisionContext) -> mpf:
    """Same defect with L re-derived from S by forward substitution.

    This pays the section's condition number through the inversion and is
    reported (not gated) as a conditioning gauge; it shrinks with added
    precision while a structural bug would not."""
    size = f.size
    with ctx.working():
        s_inv = unit_lower_inverse(f.S)
        worst = mpf(0)
        for i in range(size):
            for j in range(size):
                acc = mpf(0)
                for k in range(min(i, j) + 1):
                    acc += s_inv.rows[i][k] * f.H[k] * s_inv.rows[j][k]
                r = abs(acc - f.G_section[i][j]) / max(mpf(1), abs(f.G_section[i][j]))
                if r > worst:
                    worst = r
        return worst


def recursion_coefficients(f: CholeskyFactorization, ctx: PrecisionContext,
                           provenance: str = "MomentRoute") -> CoefficientTable:
    """Table of length size-1 (the last S row only feeds beta_{N-1})."""
    size = f.size
    n_len = size - 1
    with ctx.working():
        p1 = [mpf(0)]
        for n in range(1, size):
            p1.append(f.S.rows[n][n - 1])
        beta = tuple(p1[n] - p1[n + 1] for n in range(n_len))
        gamma = [mpf(0)]
        for n in range(1, n_len):
            gamma.append(f.H[n] / f.H[n - 1])
        return CoefficientTable(beta, tuple(gamma), tuple(f.H[:n_len]),
                                tuple(p1[:n_len]), provenance)


def second_subdiagonal(f: CholeskyFactorization) -> tuple:
    """p^2_{n+2} = S_{n+2,n}; p^2_0 = p^2_1 = 0."""
    out = [mpf(0), mpf(0)]
    for n in range(2, f.size):
        out.append(f.S.rows[n][n - 2])
    return tuple(out)


def polynomial_eval(table: CoefficientTable, z, n_max: int, ctx: PrecisionContext) -> list:
    """P_0(z) .. P_{n_max}(z) by the three-term recurrence (monic)."""
    if n_max >= len(table.beta) + 1:
        raise ValueError(f"n_max {n_max} needs beta up to {n_max - 1}")
    with ctx.working():
        z = ctx.to_mpf(z)
        values = [mpf(1)]
        prev = mpf(0)
        for n in range(n_max):
            nxt = (z - table.beta[n]) * values[-1] - table.gamma[n] * prev
            prev = values[-1]
            values.append(nxt)
        return values


def jacobi_matrix(table: CoefficientTable, size: int) -> BandedOperator:
    """Tridiagonal section with rows (gamma_n, beta_n, 1)."""
    if size > len(table.beta):
        raise ValueError("table too short for requested section")
    # row size-1 lacks the superdiagonal 1 of the infinite operator
    j = BandedOperator.zeros(size, 1, 1, size - 1)
    for n in range(size):
        j.rows[n][n] = table.beta[n]
        if n + 1 < size:
            j.rows[n][n + 1] = mpf(1)
            j.rows[n + 1][n] = table.gamma[n + 1]
    return j


def coefficients_from_moments(spec: WeightSpec, moments: MomentTable, n_len: int,
                              ctx: PrecisionContext) -> CoefficientTable:
    """Convenience pipeline: factorize a section of size n_len+1 and read
    the coefficients off it."""
    f = factorize(moments, n_len + 1, ctx)
    return recursion_coefficients(f, ctx)
