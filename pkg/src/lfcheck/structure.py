"""Pascal matrices, their dressed forms, and the banded structure matrix.

The shift x -> x+1 acts on monomials through the lower Pascal matrix B;
conjugating by the Cholesky factor S transfers that action to the
orthogonal-polynomial basis (Pi = S B S^-1, so P(z+1) = Pi P(z)). The
structure matrix Psi encodes both first-order difference equations of the
polynomial sequence and is band-limited: deg(sigma) subdiagonals and
deg(theta) superdiagonals around the main diagonal.

Everything is computed on finite sections, so each product carries a
valid window and identities are asserted only inside it.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import mpmath
from mpmath import mp, mpf

from .numerics import (BandedOperator, PrecisionContext, band_add,
                       band_commutator, band_multiply, band_scale,
                       binomial_diagonal, poly_of_operator,
                       unit_lower_inverse)
from .weights import Family, WeightSpec, pearson_data
from .moments import MomentTable
from .chol_core import (CholeskyFactorization, CoefficientTable,
                        jacobi_matrix, polynomial_eval, recursion_coefficients,
                        second_subdiagonal)
from .lf_engines import IdentityResiduals, _zero_form


@dataclass(frozen=True)
class PascalData:
    """Plain and dressed Pascal sections.

    B and B_inv are exact integer sections. Pi, Pi_inv and the pi
    subdiagonal sequences are present once dress_pascal has run.
    pi_diagonals maps k in {1,2,3} to the k-th subdiagonal of Pi and
    -k to the k-th subdiagonal of Pi_inv.
    """

    B: BandedOperator
    B_inv: BandedOperator
    Pi: BandedOperator | None = None
    Pi_inv: BandedOperator | None = None
    pi_diagonals: dict | None = None


@dataclass(frozen=True)
class StructureMatrix:
    """Banded section of Psi with its diagonal coefficient sequences.

    diag_coeffs[k] for k >= 0 is (psi^(k)_n)_n read along entries
    (n, n+k); diag_coeffs[-m] is read along entries (n+m, n).
    """

    family: Family
    psi: BandedOperator
    sub_band: int
    super_band: int
    diag_coeffs: dict
    route: str


@dataclass(frozen=True)
class PsiPair:
    """Both definitional builds of Psi plus the directly-built transpose.

    primary comes from Pi^-1 H theta(J^T) (best window); alternate from
    sigma(J) H Pi^T; transpose_direct is Pi H sigma(J^T), which preserves
    a wide window where transposing primary would not.
    """

    primary: StructureMatrix
    alternate: StructureMatrix
    transpose_direct: BandedOperator
    reports: tuple


def band_degrees(spec: WeightSpec, ctx: PrecisionContext) -> tuple:
    """(M, N+1) = (deg sigma, deg theta) for the family."""
    data = pearson_data(spec, ctx)
    return len(data.sigma) - 1, len(data.theta) - 1


def _crop(op: BandedOperator, m: int) -> BandedOperator:
    """Leading m x m section; exact rows stay exact."""
    if m > op.size:
        raise ValueError("cannot grow a section")
    rows = [op.rows[i][:m] for i in range(m)]
    return BandedOperator(m, min(op.lower_band, m - 1),
                          min(op.upper_band, m - 1), rows,
                          min(op.valid_window, m))


def build_pascal(size: int) -> PascalData:
    """Exact lower Pascal section and its inverse.

    B[n][m] = binom(n, m); B_inv[n][m] = (-1)^(n+m) binom(n, m). Entries
    are integers below 2^size, so size+8 bits keep the mpf conversion
    exact.
    """
    if size < 1:
        raise ValueError("size must be >= 1")
    with mp.workprec(max(64, size + 8)):
        b = BandedOperator.zeros(size, size - 1, 0)
        binv = BandedOperator.zeros(size, size - 1, 0)
        for n in range(size):
            for m in range(n + 1):
                coef = mpf(comb(n, m))
                b.rows[n][m] = coef
                binv.rows[n][m] = coef if (n + m) % 2 == 0 else -coef
    return PascalData(b, binv)


def dress_pascal(f: CholeskyFactorization, pascal: PascalData,
                 ctx: PrecisionContext, size: int | None = None) -> PascalData:
    """Pi = S B S^-1 and Pi_inv = S B^-1 S^-1 on a common section.

    size defaults to f.size - 1 so the dressed sections align with the
    coefficient table read off the same factorization.
    """
    size = f.size - 1 if size is None else size
    if size > f.size or size > pascal.B.size:
        raise ValueError("requested section exceeds available factors")
    with ctx.working():
        s = _crop(f.S, size)
        s_inv = _crop(f.L, size)
        b = _crop(pascal.B, size)
        b_inv = _crop(pascal.B_inv, size)
        pi = band_multiply(band_multiply(s, b), s_inv)
        pi_inv = band_multiply(band_multiply(s, b_inv), s_inv)
        diags = {}
        for k in (1, 2, 3):
            if size > k:
                diags[k] = pi.subdiagonal(k)
                diags[-k] = pi_inv.subdiagonal(k)
    return PascalData(b, b_inv, pi, pi_inv, diags)


def pascal_residuals(pd: PascalData, f: CholeskyFactorization,
                     table: CoefficientTable, ctx: PrecisionContext,
                     z_values=("0", "0.5", "3")) -> list:
    """Subdiagonal coefficient identities and the shift property of Pi."""
    size = pd.Pi.size
    p1 = table.p1
    p2 = second_subdiagonal(f)
    out = []
    with ctx.working():
        merged = {}
        for n in range(size - 1):
            merged[n] = max(ctx.rel_diff(pd.pi_diagonals[1][n], n + 1),
                            ctx.rel_diff(pd.pi_diagonals[-1][n], -(n + 1)))
        # second subdiagonal against the p^1 expression
        for n in range(size - 2):
            if n + 2 >= len(p1):
                break
            want = (mpf((n + 2) * (n + 1)) / 2 + (n + 1) * p1[n + 2]
                    - (n + 2) * p1[n + 1])
            merged[n] = max(merged.get(n, mpf(0)),
                            ctx.rel_diff(pd.pi_diagonals[2][n], want))
        out.append(IdentityResiduals("eq:pis", tuple(sorted(merged.items()))))

        pairs = []
        for n in range(size - 3):
            if n + 3 >= len(p1) or n + 3 >= len(p2):
                break
            want = (mpf((n + 3) * (n + 2) * (n + 1)) / 6
                    + mpf((n + 2) * (n + 1)) / 2 * p1[n + 3]
                    - mpf((n + 3) * (n + 2)) / 2 * p1[n + 1]
                    + (n + 1) * p2[n + 3] - (n + 3) * p2[n + 2]
                    + (n + 3) * p1[n + 2] * p1[n + 1]
                    - (n + 2) * p1[n + 3] * p1[n + 1])
            pairs.append((n, ctx.rel_diff(pd.pi_diagonals[3][n], want)))
        out.append(IdentityResiduals("eq:piss", tuple(pairs)))

        d2 = binomial_diagonal(size, 2)
        pairs = []
        for n in range(size - 2):
            s1 = pd.pi_diagonals[1][n] + pd.pi_diagonals[-1][n]
            s2 = pd.pi_diagonals[2][n] + pd.pi_diagonals[-2][n]
            r = max(_zero_form(s1, (pd.pi_diagonals[1][n],)),
                    ctx.rel_diff(s2, 2 * d2[n]))
            if n < size - 3 and n + 3 < len(p1):
                s3 = pd.pi_diagonals[3][n] + pd.pi_diagonals[-3][n]
                want = 2 * (p1[n + 3] * d2[n] - d2[n + 1] * p1[n + 1])
                r = max(r, ctx.rel_diff(s3, want))
            pairs.append((n, r))
        out.append(IdentityResiduals("eq:pis2", tuple(pairs)))

        for op, shift, ident in ((pd.Pi, 1, "pascal_shift_plus"),
                                 (pd.Pi_inv, -1, "pascal_shift_minus")):
            rows = {}
            for z_raw in z_values:
                z = ctx.to_mpf(z_raw)
                p_here = polynomial_eval(table, z, size - 1, ctx)
                p_there = polynomial_eval(table, z + shift, size - 1, ctx)
                got = op.matvec(p_here)
                for n in range(min(op.valid_window, size)):
                    r = ctx.rel_diff(got[n], p_there[n])
                    rows[n] = max(rows.get(n, mpf(0)), r)
            out.append(IdentityResiduals(ident, tuple(sorted(rows.items()))))
    return out


def _theta_of_jt(spec: WeightSpec, j: BandedOperator,
                 ctx: PrecisionContext) -> BandedOperator:
    data = pearson_data(spec, ctx)
    return poly_of_operator(data.theta, j.transpose())


def _sigma_of(spec: WeightSpec, op: BandedOperator,
              ctx: PrecisionContext) -> BandedOperator:
    data = pearson_data(spec, ctx)
    return poly_of_operator(data.sigma, op)


def _diag_coeffs(psi: BandedOperator, sub_band: int, super_band: int) -> dict:
    out = {}
    w = psi.valid_window
    for k in range(super_band + 1):
        out[k] = tuple(psi.rows[n][n + k]
                       for n in range(max(0, min(w, psi.size - k))))
    for m in range(1, sub_band + 1):
        out[-m] = tuple(psi.rows[n + m][n]
                        for n in range(max(0, min(w - m, psi.size - m))))
    return out


def build_psi_definitional(spec: WeightSpec, f: CholeskyFactorization,
                           pd: PascalData, table: CoefficientTable,
                           ctx: PrecisionContext) -> PsiPair:
    """Psi by both defining products, with agreement/band/edge reports."""
    size = pd.Pi.size
    if size < 8:
        raise ValueError("section too small for interior checks")
    sub_band, super_band = band_degrees(spec, ctx)
    with ctx.working():
        h_op = BandedOperator.from_diagonal(table.H[:size])
        j = jacobi_matrix(table, size)
        psi_a = band_multiply(pd.Pi_inv,
                              band_multiply(h_op, _theta_of_jt(spec, j, ctx)))
        psi_b = band_multiply(_sigma_of(spec, j, ctx),
                              band_multiply(h_op, pd.Pi.transpose()))
        psi_t = band_multiply(pd.Pi,
                              band_multiply(h_op, _sigma_of(spec, j.transpose(), ctx)))

        reports = []
        scale = psi_a.max_abs()
        w = min(psi_a.valid_window, psi_b.valid_window)
        pairs = []
        for i in range(w):
            worst = mpf(0)
            for jcol in range(size):
                num = abs(psi_a.rows[i][jcol] - psi_b.rows[i][jcol])
                worst = max(worst, num / scale)
            pairs.append((i, worst))
        reports.append(IdentityResiduals("psi_two_route_agreement", tuple(pairs)))

        # Band limits. The sigma(J) H Pi^T product is structurally limited
        # to sub_band subdiagonals and the Pi^-1 H theta(J^T) product to
        # super_band superdiagonals, so each route checks the other's side
        # numerically.
        structural_ok = (psi_b.lower_band == sub_band
                         and psi_a.upper_band == super_band)
        pairs = []
        for i in range(psi_a.valid_window):
            worst = mpf(0)
            for jcol in range(size):
                if i - jcol > sub_band:
                    worst = max(worst, abs(psi_a.rows[i][jcol]) / scale)
            pairs.append((i, worst if structural_ok else mpf(1)))
        reports.append(IdentityResiduals(
            "psi_band_structure", tuple(pairs),
            note=f"sub={sub_band} super={super_band}; "
                 f"structural bands {'confirmed' if structural_ok else 'VIOLATED'}"))

        eta = spec.eta
        gamma, hseq = table.gamma, table.H
        pairs = []
        for n in range(psi_a.valid_window - sub_band):
            prod_low = eta * hseq[n]
            ok = True
            for k in range(1, sub_band + 1):
                if n + k >= len(gamma):
                    ok = False
                    break
                prod_low *= gamma[n + k]
            if not ok:
                break
            prod_high = hseq[n]
            for k in range(1, super_band + 1):
                if n + k >= len(gamma):
                    ok = False
                    break
                prod_high *= gamma[n + k]
            if not ok:
                break
            r = ctx.rel_diff(psi_a.rows[n + sub_band][n], prod_low)
            r = max(r, ctx.rel_diff(psi_a.rows[n][n + super_band], prod_high))
            pairs.append((n, r))
        reports.append(IdentityResiduals("eq:diagonals_Psi", tuple(pairs)))

        primary = StructureMatrix(spec.family, psi_a, sub_band, super_band,
                                  _diag_coeffs(psi_a, sub_band, super_band),
                                  "Pi^-1 H theta(J^T)")
        alternate = StructureMatrix(spec.family, psi_b, sub_band, super_band,
                                    _diag_coeffs(psi_b, sub_band, super_band),
                                    "sigma(J) H Pi^T")
    return PsiPair(primary, alternate, psi_t, tuple(reports))


def build_psi_closed_form(spec: WeightSpec, table: CoefficientTable,
                          ctx: PrecisionContext,
                          size: int | None = None) -> StructureMatrix:
    """Psi assembled from the per-family theorem displays (beta, gamma, H)."""
    size = len(table) if size is None else size
    if size > len(table):
        raise ValueError("table too short for requested section")
    sub_band, super_band = band_degrees(spec, ctx)
    beta, gamma, hseq = table.beta, table.gamma, table.H
    a_p, b_p, c_p, eta = spec.a, spec.b, spec.c, spec.eta
    with ctx.working():
        psi = BandedOperator.zeros(size, sub_band, super_band, size - 2)
        diags = {}
        if spec.family is Family.CHARLIER:
            diags[0] = tuple(eta * hseq[n] for n in range(size))
            diags[1] = tuple(eta * (n + 1) * hseq[n] for n in range(size - 1))
            diags[2] = tuple(hseq[n + 2] for n in range(size - 2))
        elif spec.family is Family.MEIXNER:
            diags[-1] = tuple(eta * hseq[n + 1] for n in range(size - 1))
            diags[0] = tuple(eta * (beta[n] + a_p + n) * hseq[n]
                             for n in range(size))
            diags[1] = tuple((beta[n] + beta[n + 1] + b_p - n) * hseq[n + 1]
                             for n in range(size - 1))
            diags[2] = tuple(hseq[n + 2] for n in range(size - 2))
        else:
            diags[-2] = tuple(eta * hseq[n + 2] for n in range(size - 2))
            diags[-1] = tuple(eta * (beta[n] + beta[n + 1] + a_p + b_p + n)
                              * hseq[n + 1] for n in range(size - 1))
            main = [eta * (gamma[1] + (beta[0] + a_p) * (beta[0] + b_p))
                    * hseq[0]]
            if size > 1:
                main.append(eta * (gamma[1] + gamma[2]
                                   + (beta[1] + a_p) * (beta[1] + b_p)
                                   + beta[0] + beta[1] + a_p + b_p) * hseq[1])
            for n in range(2, size - 2):
                pi2 = _hahn_pi2(spec, table, n - 2, ctx)
                main.append(eta * (gamma[n] + gamma[n + 1]
                                   + (beta[n] + a_p) * (beta[n] + b_p)
                                   + n * (beta[n - 1] + beta[n] + a_p + b_p)
                                   + pi2) * hseq[n])
            diags[0] = tuple(main)
            diags[1] = tuple((beta[n] + beta[n + 1] + c_p - n) * hseq[n + 1]
                             for n in range(size - 1))
            diags[2] = tuple(hseq[n + 2] for n in range(size - 2))
        for k, seq in diags.items():
            for n, v in enumerate(seq):
                if k >= 0:
                    psi.rows[n][n + k] = v
                else:
                    psi.rows[n - k][n] = v
    return StructureMatrix(spec.family, psi, sub_band, super_band, diags,
                           "closed-form")


def _hahn_pi2(spec: WeightSpec, table: CoefficientTable, n: int,
              ctx: PrecisionContext) -> mpf:
    """pi^[2]_n purely from beta, gamma (needs gamma up to n+3)."""
    a_p, b_p, c_p, eta = spec.a, spec.b, spec.c, spec.eta
    beta, gamma = table.beta, table.gamma
    return (((n + 2) * (n + 1) - eta * a_p * b_p
             - (eta * (a_p + b_p) - c_p) * beta[n + 2]
             - (eta * (a_p + b_p) + c_p) * (n + 2)) / (1 + eta)
            + (1 - eta) / (1 + eta)
            * (gamma[n + 3] + gamma[n + 2] + beta[n + 2] ** 2)
            - (n + 2) * (beta[n + 2] + beta[n + 1]))


def hahn_main_diagonal_ratio_form(spec: WeightSpec, table: CoefficientTable,
                                  psi: StructureMatrix,
                                  ctx: PrecisionContext) -> IdentityResiduals:
    """Cross-check of the eta/(1+eta) expression for the Hahn main diagonal.

    psi^(0)_n = eta/(1+eta) (2(gamma_n + gamma_{n+1} + beta_n^2)
    + (a+b+c) beta_n + ab + n(a+b-c) + n(n-1)) H_n, checked on every
    available index including the two special head rows.
    """
    a_p, b_p, c_p, eta = spec.a, spec.b, spec.c, spec.eta
    beta, gamma, hseq = table.beta, table.gamma, table.H
    got = psi.diag_coeffs[0]
    pairs = []
    with ctx.working():
        coef = eta / (1 + eta)
        for n in range(min(len(got), len(table) - 1)):
            want = coef * (2 * (gamma[n] + gamma[n + 1] + beta[n] ** 2)
                           + (a_p + b_p + c_p) * beta[n] + a_p * b_p
                           + n * (a_p + b_p - c_p) + n * (n - 1)) * hseq[n]
            pairs.append((n, ctx.rel_diff(got[n], want)))
    return IdentityResiduals("hahn_psi0_ratio_form", tuple(pairs))


def compare_structure(reference: StructureMatrix, candidate: StructureMatrix,
                      ctx: PrecisionContext,
                      identity: str = "psi_closed_form_agreement") -> IdentityResiduals:
    """Per-index agreement across every declared diagonal."""
    pairs = []
    with ctx.working():
        for k, ref_seq in reference.diag_coeffs.items():
            cand_seq = candidate.diag_coeffs.get(k, ())
            for n in range(min(len(ref_seq), len(cand_seq))):
                pairs.append((n, ctx.rel_diff(ref_seq[n], cand_seq[n])))
        merged = {}
        for n, r in pairs:
            merged[n] = max(merged.get(n, mpf(0)), r)
    return IdentityResiduals(identity, tuple(sorted(merged.items())),
                             note=f"{reference.route} vs {candidate.route}")


def compatibility_residual(psi: StructureMatrix, psi_t: BandedOperator,
                           table: CoefficientTable,
                           ctx: PrecisionContext) -> list:
    """[Psi H^-1, J] = Psi H^-1 and [J, Psi^T H^-1] = Psi^T H^-1."""
    size = psi.psi.size
    out = []
    with ctx.working():
        h_inv = BandedOperator.from_diagonal(
            [1 / h for h in table.H[:size]])
        j = jacobi_matrix(table, size)
        for op, ident, flip in (
                (psi.psi, "eq:compatibility_Jacobi_structure_a", False),
                (psi_t, "eq:compatibility_Jacobi_structure_b", True)):
            aa = band_multiply(op, h_inv)
            comm = (band_commutator(j, aa) if flip
                    else band_commutator(aa, j))
            defect = band_add(comm, aa, 1, -1)
            scale = aa.max_abs(defect.valid_window)
            pairs = []
            for i in range(defect.valid_window):
                worst = mpf(0)
                for jc in range(size):
                    worst = max(worst, abs(defect.rows[i][jc]) / scale)
                pairs.append((i, worst))
            out.append(IdentityResiduals(ident, tuple(pairs)))
    return out


def default_shift_samples(spec: WeightSpec, ctx: PrecisionContext) -> tuple:
    """Rational, irrational and theta-root sample points."""
    with ctx.working():
        golden = (1 + mpmath.sqrt(5)) / 2
        theta_root = -spec.c if spec.family is Family.HAHN1 else -spec.b
        vals = [mpf(0), mpf("0.5"), mpf("-0.5"), mpf(1), mpf(-1), golden,
                theta_root]
    seen, out = set(), []
    for v in vals:
        key = mpmath.nstr(v, 30)
        if key not in seen:
            seen.add(key)
            out.append(v)
    return tuple(out)


def shift_equation_check(psi: StructureMatrix, psi_t: BandedOperator,
                         table: CoefficientTable, spec: WeightSpec,
                         ctx: PrecisionContext, z_values=None) -> list:
    """theta(z) P(z-1) = Psi H^-1 P(z) and sigma(z) P(z+1) = Psi^T H^-1 P(z)."""
    size = psi.psi.size
    data = pearson_data(spec, ctx)
    if z_values is None:
        z_values = default_shift_samples(spec, ctx)
    out = []
    with ctx.working():
        h_inv = BandedOperator.from_diagonal([1 / h for h in table.H[:size]])
        a_theta = band_multiply(psi.psi, h_inv)
        a_sigma = band_multiply(psi_t, h_inv)
        n_max = size - 1
        for op, poly, shift, ident in (
                (a_theta, data.theta, -1, "eq:P_shift_theta"),
                (a_sigma, data.sigma, 1, "eq:P_shift_sigma")):
            merged = {}
            for z_raw in z_values:
                z = ctx.to_mpf(z_raw)
                factor = mpf(0)
                for coef in reversed(poly):
                    factor = factor * z + coef
                p_here = polynomial_eval(table, z, n_max, ctx)
                p_shift = polynomial_eval(table, z + shift, n_max, ctx)
                got = op.matvec(p_here)
                rows = min(op.valid_window, size - op.upper_band)
                for n in range(rows):
                    lhs = factor * p_shift[n]
                    r = _zero_form(lhs - got[n], (lhs, got[n]))
                    merged[n] = max(merged.get(n, mpf(0)), r)
            out.append(IdentityResiduals(ident, tuple(sorted(merged.items()))))
    return out


def charlier_structure_residuals(spec: WeightSpec, f: CholeskyFactorization,
                                 pd: PascalData, table: CoefficientTable,
                                 ctx: PrecisionContext) -> list:
    """Identities special to the simplest family.

    J^2 + bJ = eta Pi H Pi^T H^-1; Pi's explicit three-band closed form;
    the Cholesky refactorization of H theta(J^T) recovering Pi; and the
    two-point vanishing rows at z = 0 and z = -b.
    """
    if spec.family is not Family.CHARLIER:
        raise ValueError("these identities are specific to the Charlier family")
    size = pd.Pi.size
    b_p, eta = spec.b, spec.eta
    beta, gamma, hseq = table.beta, table.gamma, table.H
    out = []
    with ctx.working():
        h_op = BandedOperator.from_diagonal(hseq[:size])
        h_inv = BandedOperator.from_diagonal([1 / h for h in hseq[:size]])
        j = jacobi_matrix(table, size)

        lhs = poly_of_operator((0, b_p, 1), j)
        rhs = band_scale(
            band_multiply(band_multiply(pd.Pi, band_multiply(h_op, pd.Pi.transpose())),
                          h_inv), eta)
        defect = band_add(lhs, rhs, 1, -1)
        scale = rhs.max_abs(defect.valid_window)
        pairs = []
        for i in range(defect.valid_window):
            worst = mpf(0)
            for jc in range(size):
                worst = max(worst, abs(defect.rows[i][jc]) / scale)
            pairs.append((i, worst))
        out.append(IdentityResiduals("eq:Pascal_Jacobi_Charlier", tuple(pairs)))

        # Pi = I + Lambda^T D + eta^-1 (Lambda^T)^2 (T_- gamma) gamma:
        # exactly three bands, everything below the second must vanish.
        pairs = []
        pi_scale = pd.Pi.max_abs()
        for n in range(size - 2):
            want = gamma[n + 1] * gamma[n + 2] / eta if n + 2 < len(gamma) else None
            if want is None:
                break
            r = ctx.rel_diff(pd.pi_diagonals[2][n], want)
            for depth in range(3, size - n):
                r = max(r, abs(pd.Pi.rows[n + depth][n]) / pi_scale)
            pairs.append((n, r))
        out.append(IdentityResiduals("eq:Pascal_Charlier", tuple(pairs)))

        # H theta(J^T) = eta Pi H Pi^T: refactorize and match the unit
        # lower factor to Pi and the pivots to eta H.
        m_op = band_multiply(h_op, _theta_of_jt(spec, j, ctx))
        m = min(m_op.valid_window, size - 2)
        lower = [[mpf(0)] * m for _ in range(m)]
        piv = []
        for i in range(m):
            for jc in range(i):
                acc = m_op.rows[i][jc]
                for k in range(jc):
                    acc -= lower[i][k] * lower[jc][k] * piv[k]
                lower[i][jc] = acc / piv[jc]
            acc = m_op.rows[i][i]
            for k in range(i):
                acc -= lower[i][k] * lower[i][k] * piv[k]
            lower[i][i] = mpf(1)
            piv.append(acc)
        pairs = []
        for i in range(m):
            r = ctx.rel_diff(piv[i], eta * hseq[i])
            for jc in range(i):
                r = max(r, ctx.rel_diff(lower[i][jc], pd.Pi.rows[i][jc]))
            pairs.append((i, r))
        out.append(IdentityResiduals("eq:Pascal_Chirstoffel", tuple(pairs)))

        merged = {}
        for z_raw in (mpf(0), -b_p):
            vals = polynomial_eval(table, z_raw, size - 1, ctx)
            for n in range(size - 3):
                t0 = vals[n] / hseq[n]
                t1 = (n + 1) * vals[n + 1] / hseq[n + 1]
                t2 = (gamma[n + 1] * gamma[n + 2] / eta) * vals[n + 2] / hseq[n + 2]
                r = _zero_form(t0 + t1 + t2, (t0, t1, t2))
                merged[n] = max(merged.get(n, mpf(0)), r)
        out.append(IdentityResiduals("charlier_zero_evaluation",
                                     tuple(sorted(merged.items()))))
    return out


def structure_suite(spec: WeightSpec, f: CholeskyFactorization,
                    table: CoefficientTable, ctx: PrecisionContext) -> list:
    """Every structure-level report for one family at one parameter point."""
    pascal = build_pascal(f.size)
    pd = dress_pascal(f, pascal, ctx)
    reports = pascal_residuals(pd, f, table, ctx)
    pair = build_psi_definitional(spec, f, pd, table, ctx)
    reports.extend(pair.reports)
    closed = build_psi_closed_form(spec, table, ctx, size=pd.Pi.size)
    reports.append(compare_structure(pair.primary, closed, ctx))
    if spec.family is Family.HAHN1:
        reports.append(hahn_main_diagonal_ratio_form(spec, table, pair.primary, ctx))
    reports.extend(compatibility_residual(pair.primary, pair.transpose_direct,
                                          table, ctx))
    reports.extend(shift_equation_check(pair.primary, pair.transpose_direct,
                                        table, spec, ctx))
    if spec.family is Family.CHARLIER:
        reports.extend(charlier_structure_residuals(spec, f, pd, table, ctx))
    return reports
