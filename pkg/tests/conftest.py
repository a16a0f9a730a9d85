import pytest

from pacqe import kernels
from pacqe.terms import LinearTerm


def T(*monomials, const=0):
    """Shorthand term builder: ``T((2, "y"), (-1, "x"), const=1)``."""
    return LinearTerm(((v, a) for a, v in monomials), const)


def V(name, coef=1):
    return LinearTerm.var(name, coef)


def C(value):
    return LinearTerm.const(value)


@pytest.fixture(params=kernels.available_backends())
def backend(request):
    return request.param
