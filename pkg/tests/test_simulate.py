import math

import numpy as np
import pytest

from additive_levy.exponent import (
    AdditiveProcess,
    UsageError,
    brownian,
    conjugate,
    drift,
    isotropic_stable,
    stable_subordinator,
    zero_exponent,
)
from additive_levy.simulate import (
    ResourceError,
    SimulationConfig,
    box_counting_dimension,
    component_path,
    occupation_fourier,
    range_volume,
    sample_increments,
)


def cf_check(exp, xi, n=100_000, seed=0):
    x = sample_increments(exp, 1.0, n, seed=seed)
    phase = x @ np.atleast_1d(xi)
    emp = np.mean(np.exp(1j * phase))
    se = math.hypot(np.std(np.cos(phase)), np.std(np.sin(phase))) / math.sqrt(n)
    target = np.exp(-exp(xi))
    return abs(emp - target), se


@pytest.mark.parametrize("exp,xi", [
    (brownian(1), 1.0),
    (isotropic_stable(1.2, 2), np.array([0.6, 0.8])),
    (isotropic_stable(0.5, 1), 1.0),
    (isotropic_stable(1.9, 3), np.array([0.3, -0.4, 0.5])),
    (stable_subordinator(0.5), 1.0),
    (stable_subordinator(0.8), -2.0),
])
def test_increments_have_the_right_law(exp, xi):
    err, se = cf_check(exp, xi)
    assert err < 3 * se + 1e-12


def test_subordinator_laplace_transform():
    s = sample_increments(stable_subordinator(0.5), 1.0, 100_000, seed=2)[:, 0]
    v = np.exp(-s)
    assert abs(v.mean() - math.exp(-1)) < 3 * v.std() / math.sqrt(v.size)
    assert np.all(s >= 0)


def test_time_scaling():
    a = sample_increments(isotropic_stable(1.5, 1), 0.25, 50_000, seed=1)
    err = abs(np.mean(np.cos(a[:, 0])) - math.exp(-0.25))
    assert err < 3 * np.std(np.cos(a[:, 0])) / math.sqrt(a.shape[0])


def test_subordinator_paths_are_nondecreasing():
    p = component_path(stable_subordinator(0.7), 0.01, 1000, 0, 1, 2)
    assert p[0, 0] == 0 and np.all(np.diff(p[:, 0]) >= 0)


def test_unsupported_family():
    with pytest.raises(UsageError):
        SimulationConfig(AdditiveProcess([conjugate(stable_subordinator(0.5))]))
    with pytest.raises(UsageError):
        sample_increments(conjugate(stable_subordinator(0.5)), 1.0, 10)


def test_config_validation():
    p = AdditiveProcess([brownian(1)])
    assert SimulationConfig(p).h == pytest.approx(8 / 128)
    with pytest.raises(UsageError):
        SimulationConfig(p, r=1.0, h=0.3).range_steps
    for kw in ({"replicates": 0}, {"voxel_delta": 0.0}, {"h": -1.0}):
        with pytest.raises(UsageError):
            SimulationConfig(p, **kw)


def test_occupation_mass_at_zero():
    p = AdditiveProcess([brownian(1), isotropic_stable(0.7)])
    s = occupation_fourier(SimulationConfig(p, replicates=5, seed=1), [0.0])
    # killed mass per axis is exactly 1 - e^-T on the grid
    assert np.allclose(s.values, (1 - math.exp(-8.0)) ** 4, rtol=1e-12)


def discrete_brownian(h, xi):
    # E|sum_i c a^i exp(i xi X_{ih})|^2 with c = 1 - a, a = e^-h, b = e^{-h xi^2}
    a, b = math.exp(-h), math.exp(-h * xi * xi)
    return (1 - a) / (1 + a) * (1 + a * b) / (1 - a * b)


@pytest.mark.parametrize("h", [1.0, 0.5, 0.25])
def test_occupation_matches_discrete_expectation(h):
    s = occupation_fourier(SimulationConfig(AdditiveProcess([brownian(1)]), h=h,
                                            replicates=2000, seed=7), [1.0])
    assert abs(s.estimate - discrete_brownian(h, 1.0)) < 3 * s.stderr
    assert 0 <= s.values.min() and s.values.max() <= 1


def test_occupation_bias_shrinks():
    p = AdditiveProcess([brownian(1)])
    coarse = occupation_fourier(SimulationConfig(p, h=1.0, replicates=2000, seed=3), [1.0])
    fine = occupation_fourier(SimulationConfig(p, h=0.5, replicates=2000, seed=3), [1.0])
    assert abs(fine.estimate - 0.5) < abs(coarse.estimate - 0.5)


def test_occupation_two_parameter_stable():
    p = AdditiveProcess([isotropic_stable(1.0)] * 2)
    s = occupation_fourier(SimulationConfig(p, h=1 / 32, replicates=1000, seed=2), [2.0])
    assert s.target == pytest.approx(1 / 9)
    assert abs(s.estimate - 1 / 9) < 3 * s.stderr


def test_occupation_hermitian_symmetry():
    p = AdditiveProcess([stable_subordinator(0.6), isotropic_stable(1.3)])
    cfg = SimulationConfig(p, h=1 / 16, replicates=300, seed=4)
    a, b = occupation_fourier(cfg, [1.5]), occupation_fourier(cfg, [-1.5])
    assert np.allclose(a.values, b.values, rtol=1e-10)
    with pytest.raises(UsageError):
        occupation_fourier(cfg, [1.0, 2.0])


def test_occupation_csv(tmp_path):
    s = occupation_fourier(SimulationConfig(AdditiveProcess([brownian(1)]), replicates=4), [1.0])
    s.to_csv(tmp_path / "o.csv")
    rows = (tmp_path / "o.csv").read_text().splitlines()
    assert rows[0] == "replicate,abs_O_squared" and len(rows) == 5


def test_range_volume_of_a_point():
    cfg = SimulationConfig(AdditiveProcess([zero_exponent(2)]), h=1 / 16, replicates=3, voxel_delta=0.05)
    rv = range_volume(cfg)
    assert rv.volume == pytest.approx(0.05 ** 2) and rv.stderr == 0


def test_planar_brownian_volume_shrinks_with_voxels():
    vols = [range_volume(SimulationConfig(AdditiveProcess([brownian(2)]), h=2 ** -10,
                                          voxel_delta=dl, replicates=30)).volume
            for dl in (0.1, 0.05, 0.025)]
    assert vols[0] > vols[1] > vols[2]
    assert vols[2] < 0.5 * vols[0]


def test_two_parameter_stable_volume_stabilises():
    vols = [range_volume(SimulationConfig(AdditiveProcess([isotropic_stable(0.8)] * 2), h=2 ** -7,
                                          voxel_delta=dl, replicates=30, seed=1)).volume
            for dl in (0.1, 0.05, 0.025)]
    assert vols[2] > 0.7 * vols[0]


def test_range_volume_is_monotone_in_r():
    p = AdditiveProcess([isotropic_stable(1.2), brownian(1)])
    small = range_volume(SimulationConfig(p, r=0.5, h=1 / 64, replicates=10, seed=8))
    big = range_volume(SimulationConfig(p, r=1.0, h=1 / 64, replicates=10, seed=8))
    assert np.all(big.values >= small.values)


def test_range_guards():
    with pytest.raises(ResourceError):
        range_volume(SimulationConfig(AdditiveProcess([brownian(1)] * 3), h=1 / 512, replicates=1))
    with pytest.raises(UsageError):
        range_volume(SimulationConfig(AdditiveProcess([brownian(4)]), replicates=1))


def test_box_dimension_of_a_point():
    b = box_counting_dimension(SimulationConfig(AdditiveProcess([zero_exponent(2)]), h=1 / 256,
                                                replicates=1))
    assert b.dim == 0.0


def test_box_dimension_stable():
    cfg = SimulationConfig(AdditiveProcess([isotropic_stable(0.6)]), h=2 ** -18, replicates=2, seed=5)
    dim, resid = box_counting_dimension(cfg)
    assert dim == pytest.approx(0.6, abs=0.15)
    assert resid < 0.1
    again = box_counting_dimension(cfg)
    assert again.dim == dim


def test_box_dimension_of_a_segment():
    # a straight line in the plane has dimension one
    cfg = SimulationConfig(AdditiveProcess([drift([1.0, 0.5])]), h=2 ** -16, replicates=1)
    assert box_counting_dimension(cfg).dim == pytest.approx(1.0, abs=0.02)


def test_box_dimension_two_parameter_sheet():
    # two independent planar drifts sweep a parallelogram
    # the perimeter term 2^j biases the pooled slope down; the local slope settles
    cfg = SimulationConfig(AdditiveProcess([drift([1.0, 0.0]), drift([0.3, 1.0])]), h=2 ** -11,
                           replicates=1)
    b = box_counting_dimension(cfg)
    assert b.dim == pytest.approx(2.0, abs=0.1)
    fitted = b.counts[np.isin(b.levels, b.fit_levels)]
    assert np.log2(fitted[-1] / fitted[-2]) == pytest.approx(2.0, abs=0.03)


def test_box_dimension_needs_levels():
    with pytest.raises(UsageError):
        box_counting_dimension(SimulationConfig(AdditiveProcess([brownian(2)]), h=0.25, replicates=1))
