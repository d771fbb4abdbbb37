import math

import numpy as np
import pytest
from scipy import integrate

from additive_levy.analysis import (
    BOUNDARY_NOTE,
    POTENTIAL_DENSITY_ASSUMPTION,
    expected_range_scale,
    hausdorff_dimension_range,
    multiple_points_exist,
    multipoint_dimension,
    range_positivity,
    stable_oracle,
    subordinator_intersection,
)
from additive_levy.exponent import (
    AdditiveProcess,
    UsageError,
    brownian,
    custom,
    isotropic_stable,
    stable_subordinator,
    zero_exponent,
)
from additive_levy.quadrature import CONVERGES, CRITICAL, DIVERGES


def proc(alpha, N, d):
    return AdditiveProcess([isotropic_stable(alpha, d)] * N)


def test_range_positivity_examples():
    assert range_positivity(proc(2.0, 1, 1)).verdict == CONVERGES
    planar = range_positivity(proc(2.0, 1, 2))
    assert planar.verdict != CONVERGES
    assert planar.verdict == CRITICAL and BOUNDARY_NOTE in planar.flags
    assert range_positivity(proc(0.6, 2, 1)).verdict == CONVERGES
    assert range_positivity(proc(0.6, 2, 2)).verdict == DIVERGES


@pytest.mark.parametrize("alpha,N,d,expected", [(0.6, 2, 2, 1.2), (1.5, 1, 2, 1.5), (2.0, 2, 2, 2.0)])
def test_range_dimension(alpha, N, d, expected):
    res = hausdorff_dimension_range(proc(alpha, N, d))
    assert res.dim == pytest.approx(expected, abs=0.05)
    assert res.method == "slope_direct"
    assert abs(res.slope_dim - res.bisection_dim) <= 0.1
    assert 0 <= res.dim <= d
    assert res.bracket[1] - res.bracket[0] <= res.uncertainty + 1e-12
    assert res.trail and "methods_disagree" not in res.flags


def test_dimension_of_a_point_is_flagged_zero():
    res = hausdorff_dimension_range(AdditiveProcess([zero_exponent(1)]))
    assert res.dim == 0.0
    assert "no_convergent_beta" in res.flags


def test_multipoint_examples():
    assert multiple_points_exist(brownian(3), k=2).verdict == CONVERGES
    triple = multiple_points_exist(brownian(3), k=3)
    assert triple.verdict != CONVERGES
    assert POTENTIAL_DENSITY_ASSUMPTION in triple.assumptions
    for k in (2, 3):
        assert multiple_points_exist(brownian(2), k=k).verdict == CONVERGES


def test_multipoint_argument_handling():
    # k exponents given explicitly, or one exponent and k
    exps = [isotropic_stable(1.5, 1), brownian(1)]
    assert multiple_points_exist(exps).verdict == CONVERGES
    with pytest.raises(UsageError):
        multiple_points_exist(exps, k=3)
    with pytest.raises(UsageError):
        multiple_points_exist(brownian(1))


def test_multipoint_dimension_brownian_d3():
    res = multipoint_dimension(brownian(3), k=2)
    assert res.dim == pytest.approx(1.0, abs=0.1)
    assert POTENTIAL_DENSITY_ASSUMPTION in res.assumptions


def test_subordinator_examples():
    s = stable_subordinator
    assert subordinator_intersection(s(0.6), s(0.6)).verdict == CONVERGES
    assert subordinator_intersection(s(0.4), s(0.4)).verdict == DIVERGES
    boundary = subordinator_intersection(s(0.5), s(0.5))
    assert boundary.verdict == CRITICAL and BOUNDARY_NOTE in boundary.flags


def test_subordinator_preconditions():
    with pytest.raises(UsageError):
        subordinator_intersection(zero_exponent(1), stable_subordinator(0.5))
    with pytest.raises(UsageError):
        subordinator_intersection(brownian(2), brownian(2))
    # Re(1/Psi_1) = 1/x^2 is not integrable at the origin
    v = subordinator_intersection(brownian(1), stable_subordinator(0.9))
    assert v.verdict == DIVERGES
    assert "transience check failed" in v.flags


def test_range_scale_brownian_line():
    def q(x):
        return 2 * (x * x - 1 + math.exp(-x * x)) / x ** 4 if x > 1e-3 else 1.0 - x * x / 3

    total = 2 * integrate.quad(q, 0, np.inf, limit=400, epsabs=1e-11)[0]
    lo, hi = expected_range_scale(AdditiveProcess([brownian(1)]), 1.0)
    assert lo == hi
    assert lo == pytest.approx(1 / total, rel=0.01)


def test_range_scale_null_range():
    res = expected_range_scale(AdditiveProcess([brownian(2)]), 1.0)
    assert tuple(res) == (0.0, 0.0)
    assert res.integral is None and "not finite" in res.diagnostic


def test_stable_oracle():
    o = stable_oracle(0.6, N=2, d=1, k=2)
    assert o["range_positive"] and o["dim_range"] == pytest.approx(1.0)
    assert o["multipoints"] is True  # d(k-1) = 1 < alpha k = 1.2
    assert o["dim_multipoints"] == pytest.approx(0.2)
    assert stable_oracle(2.0, d=3, k=2) == {"multipoints": True, "dim_multipoints": 1.0}
    assert stable_oracle(1.0, d=3, k=3)["dim_multipoints"] == 0.0
    with pytest.raises(UsageError):
        stable_oracle(2.5, N=1)
