"""Arbitrary-precision scalars and banded semi-infinite operator sections.

Everything downstream works on finite N x N sections of semi-infinite
matrices. Truncation is handled by window bookkeeping: each section carries
a ``valid_window`` counting how many leading rows are provably identical to
the rows of the true semi-infinite operator, and every product shrinks the
window by the left factor's upper bandwidth. Inside the window, truncation
error is exactly zero; rounding is the only error source.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from mpmath import mp, mpf


class NumericalBreakdown(Exception):
    """Raised when a computation cannot continue (division by ~0, loss of
    positive definiteness, recurrence breakdown)."""

    def __init__(self, message: str, index: int | None = None, partial=None):
        super().__init__(message)
        self.index = index
        self.partial = partial


class PrecisionContext:
    """Binary working precision plus guard bits for comparisons.

    Arithmetic runs at ``working_bits``; two quantities are considered equal
    when their difference is below max(|x|,|y|,1) * 2**(guard - working).
    """

    def __init__(self, working_bits: int = 512, guard_bits: int = 32):
        if working_bits < 128:
            raise ValueError("working_bits must be >= 128")
        if guard_bits < 32:
            raise ValueError("guard_bits must be >= 32")
        self.working_bits = working_bits
        self.guard_bits = guard_bits

    def working(self):
        return mp.workprec(self.working_bits)

    @property
    def tolerance(self) -> mpf:
        # exact power of two, representable at any precision
        with mp.workprec(64):
            return mpf(2) ** (self.guard_bits - self.working_bits)

    def to_mpf(self, x) -> mpf:
        with self.working():
            if isinstance(x, Fraction):
                return mpf(x.numerator) / mpf(x.denominator)
            if isinstance(x, str):
                return mpf(x)
            return mpf(x)

    def rel_diff(self, x, y) -> mpf:
        with self.working():
            scale = max(abs(x), abs(y), mpf(1))
            return abs(x - y) / scale

    def close(self, x, y) -> bool:
        return self.rel_diff(x, y) <= self.tolerance

    def __repr__(self):
        return f"PrecisionContext(working_bits={self.working_bits}, guard_bits={self.guard_bits})"


def shift_minus(d: tuple) -> tuple:
    """Drop the leading entry of a diagonal sequence: (T_- f)_n = f_{n+1}."""
    if len(d) == 0:
        raise ValueError("shift_minus of empty sequence")
    return tuple(d[1:])


def shift_plus(d: tuple) -> tuple:
    """Prepend a zero: (T_+ f)_n = f_{n-1} with (T_+ f)_0 = 0."""
    return (mpf(0),) + tuple(d)


def natural_diagonal(size: int) -> tuple:
    """D = diag(1, 2, 3, ...)."""
    return tuple(mpf(n + 1) for n in range(size))


def binomial_diagonal(size: int, k: int) -> tuple:
    """D^[k]_n = binom(n+k, k), the k-th subdiagonal of the Pascal matrix."""
    out = []
    fact = math.factorial(k)
    for n in range(size):
        num = 1
        for j in range(1, k + 1):
            num *= n + j
        # product of k consecutive integers, always divisible by k!
        out.append(mpf(num // fact))
    return tuple(out)


@dataclass
class BandedOperator:
    """Finite section of a semi-infinite banded operator.

    ``rows[i][j]`` stores entry (i, j); entries outside the band are exact
    zeros. ``valid_window`` = number of leading rows that coincide with the
    semi-infinite operator (on the stored column range).
    """

    size: int
    lower_band: int
    upper_band: int
    rows: list = field(repr=False)
    valid_window: int = 0

    @classmethod
    def zeros(cls, size: int, lower_band: int, upper_band: int, valid_window: int | None = None):
        rows = [[mpf(0)] * size for _ in range(size)]
        return cls(size, min(lower_band, size - 1), min(upper_band, size - 1),
                   rows, size if valid_window is None else valid_window)

    @classmethod
    def identity(cls, size: int):
        op = cls.zeros(size, 0, 0)
        for i in range(size):
            op.rows[i][i] = mpf(1)
        return op

    @classmethod
    def from_diagonal(cls, values, size: int | None = None):
        values = tuple(values)
        size = len(values) if size is None else size
        op = cls.zeros(size, 0, 0)
        for i in range(size):
            op.rows[i][i] = mpf(values[i])
        return op

    def entry(self, i: int, j: int) -> mpf:
        return self.rows[i][j]

    def set_entry(self, i: int, j: int, v):
        if j - i > self.upper_band or i - j > self.lower_band:
            raise ValueError(f"entry ({i},{j}) outside declared band")
        self.rows[i][j] = mpf(v)

    def superdiagonal(self, k: int) -> tuple:
        """Entries (n, n+k) for n = 0 .. size-1-k."""
        return tuple(self.rows[n][n + k] for n in range(self.size - k))

    def subdiagonal(self, m: int) -> tuple:
        """Entries (n+m, n) for n = 0 .. size-1-m."""
        return tuple(self.rows[n + m][n] for n in range(self.size - m))

    def copy(self) -> "BandedOperator":
        return BandedOperator(self.size, self.lower_band, self.upper_band,
                              [row[:] for row in self.rows], self.valid_window)

    def transpose(self) -> "BandedOperator":
        # A fully valid section transposes to a fully valid section; a
        # partially valid one loses its lower bandwidth (row i of A^T reads
        # A rows up to i + lower_band).
        if self.valid_window == self.size:
            window = self.size
        else:
            window = max(0, self.valid_window - self.lower_band)
        rows = [[self.rows[j][i] for j in range(self.size)] for i in range(self.size)]
        return BandedOperator(self.size, self.upper_band, self.lower_band, rows, window)

    def max_abs(self, rows_limit: int | None = None) -> mpf:
        limit = self.valid_window if rows_limit is None else rows_limit
        best = mpf(0)
        for i in range(min(limit, self.size)):
            for j in range(self.size):
                a = abs(self.rows[i][j])
                if a > best:
                    best = a
        return best

    def matvec(self, v: list) -> list:
        """Product A v; entries 0 .. valid_window-1 of the result are exact."""
        out = []
        for i in range(self.size):
            lo = max(0, i - self.lower_band)
            hi = min(self.size - 1, i + self.upper_band)
            acc = mpf(0)
            for j in range(lo, hi + 1):
                acc += self.rows[i][j] * v[j]
            out.append(acc)
        return out


def band_add(a: BandedOperator, b: BandedOperator, coeff_a=1, coeff_b=1) -> BandedOperator:
    if a.size != b.size:
        raise ValueError("size mismatch")
    out = BandedOperator.zeros(a.size,
                               max(a.lower_band, b.lower_band),
                               max(a.upper_band, b.upper_band),
                               min(a.valid_window, b.valid_window))
    ca, cb = mpf(coeff_a), mpf(coeff_b)
    for i in range(a.size):
        for j in range(a.size):
            v = ca * a.rows[i][j] + cb * b.rows[i][j]
            if v != 0:
                out.rows[i][j] = v
    return out


def band_scale(a: BandedOperator, coeff) -> BandedOperator:
    out = a.copy()
    c = mpf(coeff)
    for i in range(a.size):
        for j in range(a.size):
            if out.rows[i][j] != 0:
                out.rows[i][j] = c * out.rows[i][j]
    return out


def band_multiply(a: BandedOperator, b: BandedOperator) -> BandedOperator:
    """Product of sections with window tracking.

    Row i of AB reads A row i and B rows k <= i + a.upper_band, so the
    result's row i is exact when i < a.valid_window and those B rows are
    exact. A fully valid right factor therefore imposes no constraint (all
    its section rows are exact); otherwise the window shrinks by the left
    factor's upper bandwidth.
    """
    if a.size != b.size:
        raise ValueError("size mismatch")
    size = a.size
    lower = min(size - 1, a.lower_band + b.lower_band)
    upper = min(size - 1, a.upper_band + b.upper_band)
    if b.valid_window >= size:
        window = a.valid_window
    else:
        window = max(0, min(a.valid_window, b.valid_window - a.upper_band))
    out = BandedOperator.zeros(size, lower, upper, window)
    for i in range(size):
        jlo = max(0, i - lower)
        jhi = min(size - 1, i + upper)
        klo_a = max(0, i - a.lower_band)
        khi_a = min(size - 1, i + a.upper_band)
        for j in range(jlo, jhi + 1):
            klo = max(klo_a, j - b.upper_band)
            khi = min(khi_a, j + b.lower_band)
            acc = mpf(0)
            for k in range(klo, khi + 1):
                acc += a.rows[i][k] * b.rows[k][j]
            out.rows[i][j] = acc
    return out


def band_commutator(a: BandedOperator, b: BandedOperator) -> BandedOperator:
    return band_add(band_multiply(a, b), band_multiply(b, a), 1, -1)


def poly_of_operator(coeffs, a: BandedOperator) -> BandedOperator:
    """p(A) for p given by ascending coefficients, via Horner."""
    coeffs = [mpf(c) for c in coeffs]
    if not coeffs:
        return BandedOperator.zeros(a.size, 0, 0)
    acc = band_scale(BandedOperator.identity(a.size), coeffs[-1])
    for c in reversed(coeffs[:-1]):
        acc = band_multiply(acc, a)
        acc = band_add(acc, BandedOperator.identity(a.size), 1, c)
    return acc


def unit_lower_inverse(s: BandedOperator) -> BandedOperator:
    """Inverse of a unit lower triangular section by forward substitution.

    Exact in the window sense: row i of the inverse reads only rows <= i.
    """
    if s.upper_band != 0:
        raise ValueError("expected lower triangular operator")
    size = s.size
    out = BandedOperator.zeros(size, size - 1, 0, s.valid_window)
    for i in range(size):
        if s.rows[i][i] != 1:
            raise ValueError(f"diagonal entry at {i} is not 1")
        for j in range(i + 1):
            if i == j:
                out.rows[i][j] = mpf(1)
                continue
            acc = mpf(0)
            lo = max(j, i - s.lower_band)
            for k in range(lo, i):
                acc += s.rows[i][k] * out.rows[k][j]
            out.rows[i][j] = -acc
    return out


def lu_determinant(matrix: list, precision_bits: int) -> mpf:
    """Determinant via LU with full pivoting at the given binary precision."""
    n = len(matrix)
    if n == 0:
        return mpf(1)
    with mp.workprec(precision_bits):
        m = [[mpf(x) for x in row] for row in matrix]
        sign = 1
        det = mpf(1)
        for col in range(n):
            # full pivot: largest remaining entry
            pi, pj, best = col, col, abs(m[col][col])
            for i in range(col, n):
                for j in range(col, n):
                    a = abs(m[i][j])
                    if a > best:
                        pi, pj, best = i, j, a
            if best == 0:
                return mpf(0)
            if pi != col:
                m[col], m[pi] = m[pi], m[col]
                sign = -sign
            if pj != col:
                for row in m:
                    row[col], row[pj] = row[pj], row[col]
                sign = -sign
            piv = m[col][col]
            det *= piv
            for i in range(col + 1, n):
                f = m[i][col] / piv
                if f == 0:
                    continue
                for j in range(col + 1, n):
                    m[i][j] -= f * m[col][j]
        return sign * det


def fd_first_5pt(fm2, fm1, fp1, fp2, h) -> mpf:
    """Central 4th-order first derivative from f(x-2h), f(x-h), f(x+h), f(x+2h)."""
    return (fm2 - 8 * fm1 + 8 * fp1 - fp2) / (12 * h)


def fd_second_5pt(fm2, fm1, f0, fp1, fp2, h) -> mpf:
    """Central 4th-order second derivative."""
    return (-fm2 + 16 * fm1 - 30 * f0 + 16 * fp1 - fp2) / (12 * h * h)


def fd_third_7pt(fm3, fm2, fm1, fp1, fp2, fp3, h) -> mpf:
    """Central 4th-order third derivative from the 7-point stencil."""
    return (fm3 - 8 * fm2 + 13 * fm1 - 13 * fp1 + 8 * fp2 - fp3) / (8 * h ** 3)


def fraction_determinant(matrix: list) -> Fraction:
    """Exact rational determinant (test oracle), Bareiss elimination."""
    n = len(matrix)
    if n == 0:
        return Fraction(1)
    m = [[Fraction(x) for x in row] for row in matrix]
    sign = 1
    for col in range(n):
        piv_row = None
        for i in range(col, n):
            if m[i][col] != 0:
                piv_row = i
                break
        if piv_row is None:
            return Fraction(0)
        if piv_row != col:
            m[col], m[piv_row] = m[piv_row], m[col]
            sign = -sign
        piv = m[col][col]
        for i in range(col + 1, n):
            f = m[i][col] / piv
            for j in range(col, n):
                m[i][j] -= f * m[col][j]
    det = Fraction(sign)
    for i in range(n):
        det *= m[i][i]
    return det
