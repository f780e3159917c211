"""Discrete semiclassical weight families on the lattice 0, 1, 2, ...

A family is fixed by two polynomials sigma, theta with theta(0) = 0; the
weight solves theta(k+1) w(k+1) = sigma(k) w(k) with w(0) = 1. Supported
families:

  charlier  sigma(z) = eta,              theta(z) = z(z+b)
  meixner   sigma(z) = eta(z+a),         theta(z) = z(z+b)
  hahn1     sigma(z) = eta(z+a)(z+b),    theta(z) = z(z+c)

Parameters must keep every w(k) finite and positive; terminating cases
(nonpositive-integer numerator parameters) are out of scope and rejected.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from mpmath import mp, mpf

from .numerics import PrecisionContext


class Family(str, Enum):
    CHARLIER = "charlier"
    MEIXNER = "meixner"
    HAHN1 = "hahn1"


# degree of sigma; theta is always degree 2 here
SIGMA_DEGREE = {Family.CHARLIER: 0, Family.MEIXNER: 1, Family.HAHN1: 2}


@dataclass(frozen=True)
class WeightSpec:
    family: Family
    a: mpf | None
    b: mpf | None
    c: mpf | None
    eta: mpf

    def params(self) -> dict:
        out = {}
        if self.a is not None:
            out["a"] = self.a
        if self.b is not None:
            out["b"] = self.b
        if self.c is not None:
            out["c"] = self.c
        out["eta"] = self.eta
        return out


@dataclass(frozen=True)
class PearsonData:
    """Coefficient tuples (ascending) for sigma, theta and tau = sigma + theta."""

    sigma: tuple
    theta: tuple
    tau: tuple


def _is_nonpositive_integer(x: mpf) -> bool:
    return x <= 0 and x == mp.floor(x)


def make_spec(family, ctx: PrecisionContext, a=None, b=None, c=None, eta=None,
              allow_large_eta: bool = False) -> WeightSpec:
    """Validate parameters and build a WeightSpec.

    Domain errors are raised as ValueError with the violated condition named.
    """
    family = Family(family)
    with ctx.working():
        eta = ctx.to_mpf(eta) if eta is not None else None
        a = ctx.to_mpf(a) if a is not None else None
        b = ctx.to_mpf(b) if b is not None else None
        c = ctx.to_mpf(c) if c is not None else None

        if eta is None or not eta > 0:
            raise ValueError(f"{family.value}: eta > 0 violated")

        if family is Family.CHARLIER:
            if b is None or not b > -1:
                raise ValueError("charlier: b > -1 violated")
            if a is not None or c is not None:
                raise ValueError("charlier: takes parameters b, eta only")
            return WeightSpec(family, None, b, None, eta)

        if family is Family.MEIXNER:
            if a is None or b is None:
                raise ValueError("meixner: requires a, b, eta")
            if c is not None:
                raise ValueError("meixner: takes parameters a, b, eta only")
            if not a * (b + 1) > 0:
                raise ValueError("meixner: a(b+1) > 0 violated")
            if _is_nonpositive_integer(a):
                raise ValueError("meixner: a is a nonpositive integer (terminating weight)")
            if _is_nonpositive_integer(b + 1):
                raise ValueError("meixner: b+1 is a nonpositive integer")
            return WeightSpec(family, a, b, None, eta)

        # hahn1
        if a is None or b is None or c is None:
            raise ValueError("hahn1: requires a, b, c, eta")
        if not a > 0:
            raise ValueError("hahn1: a > 0 violated")
        if not b > 0:
            raise ValueError("hahn1: b > 0 violated")
        if not c > -1:
            raise ValueError("hahn1: c > -1 violated")
        if not eta < 1 and not allow_large_eta:
            raise ValueError("hahn1: eta < 1 violated (pass allow_large_eta to override)")
        return WeightSpec(family, a, b, c, eta)


def pearson_data(spec: WeightSpec, ctx: PrecisionContext) -> PearsonData:
    # coefficient products must round at working precision, not ambient
    with ctx.working():
        zero, one = mpf(0), mpf(1)
        if spec.family is Family.CHARLIER:
            sigma = (spec.eta,)
            theta = (zero, spec.b, one)
        elif spec.family is Family.MEIXNER:
            sigma = (spec.eta * spec.a, spec.eta)
            theta = (zero, spec.b, one)
        else:
            sigma = (spec.eta * spec.a * spec.b, spec.eta * (spec.a + spec.b),
                     spec.eta)
            theta = (zero, spec.c, one)
        tau = []
        for i in range(max(len(sigma), len(theta))):
            s = sigma[i] if i < len(sigma) else zero
            t = theta[i] if i < len(theta) else zero
            tau.append(s + t)
        return PearsonData(sigma, theta, tuple(tau))


def polyval(coeffs, z) -> mpf:
    acc = mpf(0)
    for c in reversed(coeffs):
        acc = acc * z + c
    return acc


def weight_table(spec: WeightSpec, k_max: int, ctx: PrecisionContext) -> list:
    """w(0), ..., w(k_max) by the multiplicative Pearson recursion.

    Ratios of rising factorials are built step by step; no Gamma quotients,
    so there is no intermediate overflow or cancellation.
    """
    pearson = pearson_data(spec, ctx)
    with ctx.working():
        out = [mpf(1)]
        w = mpf(1)
        for k in range(k_max):
            denom = polyval(pearson.theta, mpf(k + 1))
            if denom == 0:
                raise ValueError(f"theta({k + 1}) = 0; weight undefined")
            w = w * polyval(pearson.sigma, mpf(k)) / denom
            out.append(w)
        return out


def weight_at(spec: WeightSpec, k: int, ctx: PrecisionContext) -> mpf:
    return weight_table(spec, k, ctx)[k]


def pearson_residual(spec: WeightSpec, k_max: int, ctx: PrecisionContext,
                     weights: list | None = None) -> mpf:
    """max over 0 <= k <= k_max of the scaled Pearson equation defect."""
    pearson = pearson_data(spec, ctx)
    with ctx.working():
        w = weight_table(spec, k_max + 1, ctx) if weights is None else weights
        worst = mpf(0)
        for k in range(k_max + 1):
            lhs = polyval(pearson.theta, mpf(k + 1)) * w[k + 1]
            rhs = polyval(pearson.sigma, mpf(k)) * w[k]
            r = abs(lhs - rhs) / max(mpf(1), abs(rhs))
            if r > worst:
                worst = r
        return worst
