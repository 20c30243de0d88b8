import logging

import numpy as np
import pytest

from diffwillmore import spectral
from diffwillmore.energies import perimeter_ag, radius_from_perimeter, willmore_ag
from diffwillmore.exceptions import FixedPointDiverged
from diffwillmore.flows import (FlowParams, GradientFreeStepper, SimulationError, dt_guidance,
                                project_perimeter, project_volume, run_simulation,
                                step_gradient_free, step_standard)
from diffwillmore.geometry import Ball, Cuboid, Union, initialize
from diffwillmore.profile import profile_model
from diffwillmore.reference import RadiusState, integrate_radius, stationary_radius
from diffwillmore.spectral import TorusGrid

SIGMA = profile_model().sigma


def disk(m, eps, radius):
    g = TorusGrid(2, m, eps)
    return initialize(g, Ball((0.0, 0.0), radius)), g


def radius(u, g):
    return radius_from_perimeter(perimeter_ag(u, g), 2)


def area_radius(u):
    return np.sqrt((np.mean(u) + 1) / (2 * np.pi))


def d4_shape():
    arms = [Ball((0.2 * c, 0.2 * s), 0.08) for c, s in ((1, 0), (-1, 0), (0, 1), (0, -1))]
    return Union((Cuboid((0.0, 0.0), (0.15, 0.15)), *arms))


# parameters ---------------------------------------------------------------

@pytest.mark.parametrize("l1, l2", [(1.0, 0.0), (0.3, 7.0), (2.5, 50.0)])
def test_rescaled_weights(l1, l2):
    p = FlowParams(eps=1 / 16, lambda1_o=l1, lambda2_o=l2, dt=1e-6)
    assert p.lambda1 * p.sigma ** 2 == pytest.approx(l1, rel=1e-14, abs=1e-300)
    assert p.lambda2 * p.sigma == pytest.approx(l2, rel=1e-14, abs=1e-300)
    assert p.sigma == SIGMA


@pytest.mark.parametrize("kwargs", [
    dict(eps=0.0), dict(lambda1_o=-1.0), dict(lambda2_o=-0.5), dict(dt=0.0), dict(solver="anderson"),
])
def test_params_validation(kwargs):
    base = dict(eps=1 / 16, lambda1_o=1.0, lambda2_o=0.0, dt=1e-6)
    with pytest.raises(ValueError):
        FlowParams(**{**base, **kwargs})


def test_dt_guidance_warning(caplog):
    eps = 1 / 32
    assert dt_guidance(eps, 0.0) == eps ** 2
    assert dt_guidance(eps, 1.0) == 16 * eps ** 4
    with caplog.at_level(logging.WARNING, logger="diffwillmore.flows"):
        FlowParams(eps=eps, lambda1_o=1.0, lambda2_o=0.0, dt=16 * eps ** 4)
        assert not caplog.records
        FlowParams(eps=eps, lambda1_o=1.0, lambda2_o=0.0, dt=eps ** 2)
    assert "guidance" in caplog.text


# gradient-free step -------------------------------------------------------

@pytest.mark.parametrize("solver", ["newton", "picard"])
def test_pure_phase_is_fixed(solver):
    g = TorusGrid(2, 32, 1 / 16)
    p = FlowParams(eps=g.eps, lambda1_o=1, lambda2_o=3, dt=16 * g.eps ** 4, solver=solver)
    u, h, diag = step_gradient_free(np.ones(g.shape), g, p)
    np.testing.assert_array_equal(u, 1.0)
    np.testing.assert_array_equal(h, 0.0)
    assert diag.fp_iterations == 1


@pytest.mark.parametrize("l1, l2, dt_factor", [(0, 1, "mcf"), (1, 0, "will"), (1, 20, "will")])
def test_fixed_point_consistency(l1, l2, dt_factor):
    u0, g = disk(64, 1 / 16, 0.25)
    dt = g.eps ** 2 / 8 if dt_factor == "mcf" else 10 * g.eps ** 4
    p = FlowParams(eps=g.eps, lambda1_o=l1, lambda2_o=l2, dt=dt)
    u, h, diag = step_gradient_free(u0, g, p)
    assert diag.fp_residual <= p.fp_tol
    u_phi, w_phi = GradientFreeStepper(g, p).phi(u, g.eps * h, u0)
    scale = max(np.abs(u).max(), np.abs(g.eps * h).max(), 1.0)
    assert max(np.abs(u - u_phi).max(), np.abs(g.eps * h - w_phi).max()) / scale <= p.fp_tol


def test_newton_and_picard_agree():
    u0, g = disk(64, 1 / 16, 0.25)
    kw = dict(eps=g.eps, lambda1_o=0.0, lambda2_o=1.0, dt=g.eps ** 2 / 32, fp_tol=1e-12)
    a = step_gradient_free(u0, g, FlowParams(**kw))[0]
    b = step_gradient_free(u0, g, FlowParams(**kw, solver="picard"))[0]
    np.testing.assert_allclose(a, b, atol=1e-10)


def test_does_not_mutate_input():
    u0, g = disk(32, 1 / 8, 0.25)
    keep = u0.copy()
    step_gradient_free(u0, g, FlowParams(eps=g.eps, lambda1_o=1, lambda2_o=1, dt=g.eps ** 4))
    step_standard(u0, g, FlowParams(eps=g.eps, lambda1_o=1, lambda2_o=1, dt=g.eps ** 4))
    np.testing.assert_array_equal(u0, keep)


def test_divergence_and_auto_halve():
    u0, g = disk(64, 1 / 16, 0.25)
    kw = dict(eps=g.eps, lambda1_o=0.0, lambda2_o=1.0, dt=g.eps ** 2, solver="picard")
    with pytest.raises(FixedPointDiverged):
        step_gradient_free(u0, g, FlowParams(**kw))
    u, _, diag = step_gradient_free(u0, g, FlowParams(**kw, auto_halve=True))
    ref = u0
    for _ in range(8):
        ref = step_gradient_free(ref, g, FlowParams(**{**kw, "dt": g.eps ** 2 / 8}))[0]
    assert np.abs(u - ref).max() < 0.05
    assert diag.fp_iterations > 1


def test_mcf_shrinks_disk():
    # sign convention: H > 0 on the convex disk, so the radius decreases
    u, g = disk(64, 1 / 16, 0.3)
    p = FlowParams(eps=g.eps, lambda1_o=0.0, lambda2_o=1.0, dt=g.eps ** 2 / 8)
    radii = [radius(u, g)]
    for _ in range(10):
        u = step_gradient_free(u, g, p)[0]
        radii.append(radius(u, g))
    assert np.all(np.diff(radii) < 0)
    h = step_gradient_free(u, g, p)[1]
    assert h[g.m // 2, g.m // 2 + int(0.3 * g.m)] > 0


@pytest.mark.parametrize("scheme", ["gradient_free", "standard"])
def test_mcf_circle_coarse(scheme):
    u, g = disk(128, 1 / 32, 0.3)
    p = FlowParams(eps=g.eps, lambda1_o=0.0, lambda2_o=1.0, dt=g.eps ** 2 / 8)
    traj = run_simulation(u, g, p, 0.01, model=scheme, stride=16)
    for pt in traj[1:]:
        r = radius_from_perimeter(pt.report.perimeter_ag, 2)
        assert r == pytest.approx(np.sqrt(0.09 - 2 * pt.time), rel=0.03)


@pytest.mark.slow
def test_willmore_circle_gradient_free():
    u, g = disk(256, 1 / 64, 0.2)
    p = FlowParams(eps=g.eps, lambda1_o=1.0, lambda2_o=0.0, dt=10 * g.eps ** 4)
    traj = run_simulation(u, g, p, 0.001, stride=200)
    r = radius_from_perimeter(traj[-1].report.perimeter_ag, 2)
    assert r == pytest.approx((0.2 ** 4 + 2 * traj[-1].time) ** 0.25, rel=0.03)


def test_dihedral_symmetry():
    g = TorusGrid(2, 64, 1 / 16)
    u = initialize(g, d4_shape())

    def images(v):
        flip = np.roll(v[::-1], 1, axis=0)
        return [flip, v.T, np.roll(v[:, ::-1], 1, axis=1)]

    for w in images(u):
        np.testing.assert_allclose(w, u, atol=1e-14)
    p = FlowParams(eps=g.eps, lambda1_o=1.0, lambda2_o=5.0, dt=10 * g.eps ** 4)
    for _ in range(100):
        u = step_gradient_free(u, g, p)[0]
    for w in images(u):
        np.testing.assert_allclose(w, u, atol=1e-10)


@pytest.mark.parametrize("l1, l2", [(1.0, 0.0), (1.0, 10.0)])
def test_energy_decay(l1, l2):
    g = TorusGrid(2, 64, 1 / 16)
    u = initialize(g, d4_shape())
    p = FlowParams(eps=g.eps, lambda1_o=l1, lambda2_o=l2, dt=10 * g.eps ** 4, fp_tol=1e-10)

    def energy(v):
        return 0.5 * p.lambda1 * willmore_ag(v, g) + p.lambda2 * perimeter_ag(v, g)

    values = [energy(u)]
    for _ in range(40):
        u = step_gradient_free(u, g, p)[0]
        values.append(energy(u))
    assert np.all(np.diff(values) <= 1e-9 * values[0])
    assert values[-1] < values[0]


# standard step ------------------------------------------------------------

def test_standard_pure_phase():
    g = TorusGrid(2, 32, 1 / 16)
    p = FlowParams(eps=g.eps, lambda1_o=1, lambda2_o=1, dt=g.eps ** 4)
    np.testing.assert_array_equal(step_standard(np.ones(g.shape), g, p), 1.0)


def test_divergence_reported_with_step():
    u0, g = disk(64, 1 / 16, 0.25)
    p = FlowParams(eps=g.eps, lambda1_o=0.0, lambda2_o=1.0, dt=g.eps ** 2, solver="picard")
    with pytest.raises(SimulationError) as info:
        run_simulation(u0, g, p, 3 * p.dt)
    assert info.value.step == 1
    assert isinstance(info.value.cause, FixedPointDiverged)
    assert "step 1" in str(info.value)


# constraints --------------------------------------------------------------

def test_volume_projection():
    u = np.full((8, 8), 0.2)
    np.testing.assert_allclose(project_volume(u, 0.2), u, atol=1e-14)
    v = np.random.default_rng(3).normal(size=(16, 16))
    v += 0.3 - v.mean()
    out = project_volume(v, 0.2)
    assert out.mean() == pytest.approx(0.2, abs=1e-15)
    np.testing.assert_allclose(v - out, 0.1, atol=1e-14)


def test_perimeter_projection_noop():
    u, g = disk(64, 1 / 32, 0.25)
    p = FlowParams(eps=g.eps, lambda1_o=1.0, lambda2_o=0.0, dt=g.eps ** 4)
    out, diag = project_perimeter(u, perimeter_ag(u, g), g, p)
    assert out is u
    assert diag.perimeter_projection_time == 0.0


@pytest.mark.parametrize("start, sign", [(0.28, -1), (0.32, 1)])
def test_perimeter_projection_reaches_target(start, sign):
    u, g = disk(128, 1 / 64, start)
    target = perimeter_ag(disk(128, 1 / 64, 0.3)[0], g)
    p = FlowParams(eps=g.eps, lambda1_o=1.0, lambda2_o=0.0, dt=g.eps ** 4)
    out, diag = project_perimeter(u, target, g, p)
    assert abs(perimeter_ag(out, g) - target) < 1e-7
    assert diag.perimeter_projection_sign == sign
    assert diag.perimeter_projection_time > 0
    assert radius(out, g) == pytest.approx(0.3, rel=0.02)
    # the interface itself moves under forward MCF; the reverse flow mostly steepens the profile
    if sign > 0:
        assert area_radius(out) == pytest.approx(0.3, rel=0.02)
    else:
        assert start < area_radius(out) < 0.3


def test_perimeter_projection_keeps_volume():
    # a square can lose perimeter at fixed area by rounding its corners
    g = TorusGrid(2, 128, 1 / 64)
    u = initialize(g, Cuboid((0.0, 0.0), (0.25, 0.25)))
    p = FlowParams(eps=g.eps, lambda1_o=1.0, lambda2_o=0.0, dt=g.eps ** 4, conserve_volume=True)
    out, _ = project_perimeter(u, 0.98 * perimeter_ag(u, g), g, p)
    assert out.mean() == pytest.approx(u.mean(), abs=1e-13)


def test_perimeter_projection_rejects_bad_target():
    u, g = disk(32, 1 / 16, 0.3)
    with pytest.raises(ValueError):
        project_perimeter(u, 0.0, g, FlowParams(eps=g.eps, lambda1_o=1, lambda2_o=0, dt=1e-6))


# driver -------------------------------------------------------------------

def test_zero_horizon():
    u, g = disk(32, 1 / 16, 0.25)
    traj = run_simulation(u, g, FlowParams(eps=g.eps, lambda1_o=1, lambda2_o=0, dt=1e-6), 0.0)
    assert len(traj) == 1 and traj[0].step == 0 and traj[0].time == 0.0


def test_unknown_model():
    u, g = disk(32, 1 / 16, 0.25)
    with pytest.raises(ValueError):
        run_simulation(u, g, FlowParams(eps=g.eps, lambda1_o=1, lambda2_o=0, dt=1e-6), 1e-6, model="euler")


def test_mcf_perimeter_non_increasing():
    u, g = disk(64, 1 / 16, 0.3)
    p = FlowParams(eps=g.eps, lambda1_o=0.0, lambda2_o=1.0, dt=g.eps ** 2 / 8)
    traj = run_simulation(u, g, p, 30 * p.dt)
    per = [pt.report.perimeter_ag for pt in traj]
    assert len(per) == 31
    assert np.all(np.diff(per) <= 1e-6 * per[0])


def test_constrained_run_keeps_mass_and_perimeter():
    g = TorusGrid(2, 64, 1 / 16)
    u = initialize(g, Union((Ball((-0.15, 0.0), 0.14), Ball((0.15, 0.0), 0.14))))
    p = FlowParams(eps=g.eps, lambda1_o=1.0, lambda2_o=0.0, dt=10 * g.eps ** 4,
                   conserve_volume=True, conserve_perimeter=True)
    traj = run_simulation(u, g, p, 30 * p.dt)
    mass = np.array([pt.report.mass for pt in traj])
    per = np.array([pt.report.perimeter_ag for pt in traj])
    assert np.abs(mass - mass[0]).max() < 1e-10
    assert np.abs(per - per[0]).max() < 1e-6


def test_volume_constant_over_many_steps():
    u, g = disk(32, 1 / 8, 0.25)
    p = FlowParams(eps=g.eps, lambda1_o=0.0, lambda2_o=1.0, dt=g.eps ** 2 / 8, conserve_volume=True)
    traj = run_simulation(u, g, p, 1000 * p.dt, stride=50)
    assert traj[-1].step == 1000
    mass = np.array([pt.report.mass for pt in traj])
    assert np.abs(mass - mass[0]).max() < 1e-12


def test_observers_and_stride():
    u, g = disk(32, 1 / 16, 0.25)
    p = FlowParams(eps=g.eps, lambda1_o=0.0, lambda2_o=1.0, dt=g.eps ** 2 / 8)
    seen = []
    traj = run_simulation(u, g, p, 7 * p.dt, stride=3, observers=[lambda pt, v: seen.append(pt.step)])
    assert seen == [0, 3, 6, 7] == [pt.step for pt in traj]


@pytest.mark.slow
def test_stationary_disk():
    l1, l2 = 1.0, 25 / 8
    r_star = stationary_radius(l1, l2)
    u, g = disk(128, 1 / 64, r_star)
    p = FlowParams(eps=g.eps, lambda1_o=l1, lambda2_o=l2, dt=16 * g.eps ** 4)
    traj = run_simulation(u, g, p, 0.1, stride=5000)
    r = [radius_from_perimeter(pt.report.perimeter_ag, 2) for pt in traj]
    assert np.abs(np.array(r) / r[0] - 1).max() < 0.01


def test_reference_and_flow_share_sign():
    curve = integrate_radius(RadiusState(0.3), 0.0, 1.0, 0.01, 1e-4)
    assert curve.r[-1] < 0.3
