"""Session-wide pipelines: one 512-bit context and one computed pipeline
per weight family.

The moment route at 512 bits dominates test runtime, so specs, moments,
factorizations and coefficient tables are built once here and shared
read-only across test modules.
"""

import pytest

from lfcheck import PrecisionContext, compute_moments, make_spec
from lfcheck.chol_core import factorize, recursion_coefficients

SIZE = 26      # factorization size; coefficient tables carry SIZE - 1 rows
N_TOP = 52     # moments needed for a SIZE x SIZE Hankel section


def build_pipeline(ctx, family, **params):
    spec = make_spec(family, ctx, **params)
    moments = compute_moments(spec, N_TOP, ctx)
    fact = factorize(moments, SIZE, ctx)
    return spec, moments, fact, recursion_coefficients(fact, ctx)


def fmax(report):
    """Residual maximum as a float (tiny values may underflow to 0.0)."""
    return float(report.max_residual)


def by_id(reports):
    return {r.identity: r for r in reports}


@pytest.fixture(scope="session")
def ctx():
    return PrecisionContext(512)


@pytest.fixture(scope="session")
def charlier(ctx):
    return build_pipeline(ctx, "charlier", b="0.5", eta="1")


@pytest.fixture(scope="session")
def meixner(ctx):
    return build_pipeline(ctx, "meixner", a="2.5", b="0.4", eta="0.6")


@pytest.fixture(scope="session")
def meixner_a1(ctx):
    return build_pipeline(ctx, "meixner", a="1", b="0.3", eta="0.7")


@pytest.fixture(scope="session")
def hahn(ctx):
    return build_pipeline(ctx, "hahn1", a="1.2", b="0.7", c="0.4", eta="0.5")


@pytest.fixture(scope="session")
def all_pipelines(charlier, meixner, hahn):
    return {"charlier": charlier, "meixner": meixner, "hahn1": hahn}
