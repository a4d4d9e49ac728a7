import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from majorant.quadrature import line_rule, triangle_rule


def monomial_exact(a, b):
    """Integral of x^a y^b over the reference triangle."""
    return math.factorial(a) * math.factorial(b) / math.factorial(a + b + 2)


@pytest.mark.parametrize("degree", range(0, 21))
def test_triangle_rule_exact(degree):
    bary, w = triangle_rule(degree)
    assert w.sum() == pytest.approx(0.5, abs=1e-15)
    assert np.all(w > 0)
    x, y = bary[:, 1], bary[:, 2]
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            assert np.dot(w, x**a * y**b) == pytest.approx(monomial_exact(a, b), rel=1e-12, abs=1e-16)


def test_triangle_points_inside():
    bary, _ = triangle_rule(12)
    assert np.all(bary > 0) and np.allclose(bary.sum(axis=1), 1)


@given(st.integers(0, 30))
def test_line_rule_exact(degree):
    t, w = line_rule(degree)
    assert np.all((t > 0) & (t < 1))
    for k in range(degree + 1):
        assert np.dot(w, t**k) == pytest.approx(1 / (k + 1), rel=1e-12)


def test_rejects_negative():
    with pytest.raises(ValueError):
        triangle_rule(-1)
    with pytest.raises(ValueError):
        line_rule(-1)
