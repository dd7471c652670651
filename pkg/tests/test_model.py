import math

import numpy as np
import pytest
from scipy import integrate

from jumpforms.errors import NonIntegrable, TailBoundUnavailable
from jumpforms.model import (
    KernelKind,
    LinearPotential,
    LogWeightedPotential,
    ModelSpec,
    PolyTailPotential,
    PowerPotential,
    ScaledPotential,
    TabulatedPotential,
    eval_potential,
    kernel_density,
    normalizing_constant,
    potential_from_config,
    rescale_potential,
    surface_measure,
)


def test_eval_potential_families():
    assert eval_potential(LinearPotential(2.0), 1.5) == pytest.approx(3.0)
    assert eval_potential(PowerPotential(2.0), (0.0, 0.0)) == pytest.approx(1.0)
    # log(1+|x|) = 1 at |x| = e-1, so V = (e-1)*1
    assert eval_potential(LogWeightedPotential(1.0), math.e - 1.0) == pytest.approx(
        math.e - 1.0, rel=1e-12
    )


def test_eval_potential_is_radial():
    p = PowerPotential(1.3)
    assert eval_potential(p, (3.0, 4.0)) == pytest.approx(p.value(5.0))


def test_kernel_density_values():
    m = ModelSpec(d=1, alpha=1.0, kernel=KernelKind.FINITE_RANGE)
    assert kernel_density(m, 0.5) == pytest.approx(4.0)
    assert kernel_density(m, 1.5) == 0.0
    m2 = ModelSpec(d=2, alpha=0.5, kernel=KernelKind.LARGE_JUMP)
    assert kernel_density(m2, 2.0) == pytest.approx(2.0 ** (-2.5))
    assert kernel_density(m2, 0.9) == 0.0


def test_kernel_additivity_pointwise():
    r = np.linspace(0.05, 3.0, 101)
    r = r[np.abs(r - 1.0) > 1e-9]
    kinds = {
        k: kernel_density(ModelSpec(d=1, alpha=0.7, kernel=k), r)
        for k in (KernelKind.FINITE_RANGE, KernelKind.LARGE_JUMP, KernelKind.FULL)
    }
    np.testing.assert_allclose(
        kinds[KernelKind.FINITE_RANGE] + kinds[KernelKind.LARGE_JUMP],
        kinds[KernelKind.FULL],
        rtol=0.0,
    )


def test_tempered_dominated_by_full():
    m_t = ModelSpec(d=2, alpha=1.2, kernel=KernelKind.TEMPERED, delta=0.4)
    m_f = ModelSpec(d=2, alpha=1.2, kernel=KernelKind.FULL)
    r = np.logspace(-2, 2, 50)
    assert np.all(kernel_density(m_t, r) <= kernel_density(m_f, r))


def test_model_spec_validation():
    with pytest.raises(ValueError):
        ModelSpec(d=0, alpha=1.0)
    with pytest.raises(ValueError):
        ModelSpec(d=1, alpha=2.0)
    with pytest.raises(ValueError):
        ModelSpec(d=1, alpha=1.0, delta=-0.1)


def test_normalizing_constant_linear_closed_form():
    # int exp(-lam |x|) dx = 2/lam in d = 1
    meas = normalizing_constant(LinearPotential(2.0), d=1, tol=1e-12)
    assert meas.c_v == pytest.approx(1.0, rel=1e-9)
    meas1 = normalizing_constant(LinearPotential(1.0), d=1, tol=1e-12)
    assert meas1.c_v == pytest.approx(0.5, rel=1e-9)


def test_normalizing_constant_gaussian_like():
    # d=2 power delta=2: int exp(-1-|x|^2) dx = pi/e
    meas = normalizing_constant(PowerPotential(2.0), d=2, tol=1e-12)
    assert meas.c_v == pytest.approx(math.e / math.pi, rel=1e-9)


def test_normalizing_constant_rejects_nonintegrable():
    with pytest.raises(NonIntegrable):
        normalizing_constant(PolyTailPotential(-0.5, d=1), d=1)
    with pytest.raises(NonIntegrable):
        normalizing_constant(LinearPotential(0.0), d=1)


def test_measure_self_consistency():
    meas = normalizing_constant(PolyTailPotential(1.5, d=1), d=1, tol=1e-10)
    total, R = 0.0, 1.0
    prev = 0.0
    while R < 1e9:
        seg, _ = integrate.quad(
            lambda r: math.exp(-meas.potential.value(r)), prev, R, limit=200
        )
        total += seg
        prev, R = R, R * 4.0
    # remaining tail of (1+r)^{-2.5} beyond prev
    total += (1.0 + prev) ** (-1.5) / 1.5
    total *= surface_measure(1)
    assert abs(meas.c_v * total - 1.0) < 1e-7


def test_normalization_stable_under_tail_doubling():
    p = LogWeightedPotential(1.0)
    meas = normalizing_constant(p, d=1, tol=1e-10)
    R = meas.r_tail
    vals = []
    for Rt in (R, 2 * R):
        body, _ = integrate.quad(
            lambda r: math.exp(-p.value(r)), 0.0, Rt, limit=400
        )
        vals.append(1.0 / (surface_measure(1) * body))
    assert abs(vals[0] - vals[1]) <= 2e-10 * abs(vals[1]) + 1e-15


def test_ball_and_tail_mass():
    meas = normalizing_constant(LinearPotential(2.0), d=1, tol=1e-12)
    # mu(B(0,r)) = 1 - exp(-2r)
    assert meas.ball_mass(1.0) == pytest.approx(1.0 - math.exp(-2.0), rel=1e-8)
    assert meas.tail_mass(3.0) == pytest.approx(math.exp(-6.0), rel=1e-6)
    assert meas.interval_mass(-1.0, 1.0) == pytest.approx(
        1.0 - math.exp(-2.0), rel=1e-8
    )


def test_rescale_linear_and_power():
    p = rescale_potential(LinearPotential(3.0), 2.0)
    assert isinstance(p, LinearPotential) and p.lam == pytest.approx(6.0)
    q = rescale_potential(PowerPotential(2.0), 3.0)
    assert isinstance(q, PowerPotential)
    assert q.value(1.0) == pytest.approx(1.0 + 9.0)
    r = LogWeightedPotential(1.0)
    assert rescale_potential(r, 1.0) is r


def test_rescale_roundtrip_pointwise():
    grid = np.linspace(0.0, 20.0, 41)
    for p in (
        LinearPotential(1.7),
        PowerPotential(2.5, coeff=0.3),
        LogWeightedPotential(2.0),
        PolyTailPotential(1.2, d=1),
    ):
        back = rescale_potential(rescale_potential(p, 3.0), 1.0 / 3.0)
        np.testing.assert_allclose(back.value(grid), p.value(grid), rtol=1e-12)


def test_scaled_potential_metadata():
    s = rescale_potential(LogWeightedPotential(1.0), 4.0)
    assert isinstance(s, ScaledPotential)
    meas = normalizing_constant(s, d=1, tol=1e-9)
    # substitution check: c_v scales by a^(-d) relative to the base measure
    base = normalizing_constant(LogWeightedPotential(1.0), d=1, tol=1e-9)
    assert meas.c_v == pytest.approx(base.c_v * 4.0, rel=1e-6)


def test_stable_diff_matches_closed_form_at_huge_radius():
    p = PowerPotential(2.0)
    r = 1e12
    # 1+r^2 - (1+(r-1/2)^2) = r - 1/4
    assert p.diff(r, 0.5) == pytest.approx(r - 0.25, rel=1e-12)
    lin = LinearPotential(5.0)
    assert lin.diff(1e15, 0.5) == pytest.approx(2.5)


def test_stable_diff_log_weighted_against_mpmath():
    import mpmath

    mpmath.mp.dps = 50
    p = LogWeightedPotential(2.0)
    for r in (10.0, 1e6, 1e12):
        exact = float(
            mpmath.mpf(r) * mpmath.log1p(r) ** 2
            - (mpmath.mpf(r) - mpmath.mpf("0.5")) * mpmath.log1p(mpmath.mpf(r) - mpmath.mpf("0.5")) ** 2
        )
        assert p.diff(r, 0.5) == pytest.approx(exact, rel=1e-10)


def test_tail_moment_bound_dominates_truth():
    cases = [
        (LinearPotential(1.5), 6.0),
        (PowerPotential(1.7), 4.0),
        (LogWeightedPotential(-0.5), 50.0),
        (PolyTailPotential(2.0, d=1), 10.0),
    ]
    for p, R in cases:
        bound = p.tail_moment_bound(R, 0.0)
        partial, _ = integrate.quad(
            lambda r: math.exp(-p.value(r)), R, 50.0 * R, limit=400
        )
        # the linear bound is exact, so allow quadrature-level slack
        assert bound >= partial * (1.0 - 1e-9) and partial > 0.0


def test_tabulated_potential_contract():
    radii = np.linspace(0.0, 10.0, 201)
    vals = 1.0 + radii**2
    tab = TabulatedPotential(radii, vals, tail_rate=2.0)
    assert tab.value(3.0) == pytest.approx(10.0, rel=1e-3)
    assert tab.value(12.0) == pytest.approx(101.0 + 2.0 * 2.0)
    no_tail = TabulatedPotential(radii, vals)
    with pytest.raises(TailBoundUnavailable):
        normalizing_constant(no_tail, d=1)
    # dipping samples move the monotonicity onset past the dip
    dip = np.cos(radii) + 0.3 * radii
    est = TabulatedPotential(radii, dip)
    assert est.eventually_monotone_from > 2.0


def test_potential_from_config():
    p = potential_from_config({"family": "power", "params": {"delta_pow": 2.0}})
    assert isinstance(p, PowerPotential)
    with pytest.raises(ValueError):
        potential_from_config({"family": "cubic"})
