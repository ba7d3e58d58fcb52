import math
from dataclasses import replace

import numpy as np
import pytest

from frontspeed import NumericalError, load_model, solve_bvp
from frontspeed.profile import _WMap, FINITE, INFINITE, reconstruct, residual_integral_form

import oracles as O


@pytest.fixture(scope="module")
def degen_profile(degenerate):
    c = O.DEGEN["c_star"]
    res = solve_bvp(degenerate, c)
    assert res.admissible
    return res, reconstruct(degenerate, res.solution)


@pytest.fixture(scope="module")
def fisher_profile(fisher):
    res = solve_bvp(fisher, 3.0)
    return res, reconstruct(fisher, res.solution)


def test_exact_sharp_profile(degenerate, degen_profile):
    _, prof = degen_profile
    assert prof.b_kind == FINITE and prof.sharp_at_zero
    assert prof.b_endpoint == pytest.approx(O.DEGEN_B, abs=1e-3)
    assert prof.a_kind == INFINITE and prof.a_endpoint == -math.inf
    assert not prof.sharp_at_one
    exact = np.array([O.degen_v(z) for z in prof.z])
    assert np.max(np.abs(prof.v - exact)) < 1e-4
    assert residual_integral_form(degenerate, O.DEGEN["c_star"], prof) < 1e-5


def test_anchor_at_half(degen_profile):
    _, prof = degen_profile
    assert prof.v_at([0.0])[0] == pytest.approx(0.5, abs=1e-9)


def test_default_grid_is_clipped(degen_profile):
    _, prof = degen_profile
    assert prof.z.size == 2048
    assert prof.z[-1] == pytest.approx(prof.b_endpoint - 1e-3)
    assert np.all(np.diff(prof.z) > 0)


def test_sharp_end_slope(degen_profile):
    # v' = -(y/d)^(1/(p-1)) -> -1/sqrt2 at xi = 0 for the exact solution
    _, prof = degen_profile
    assert prof.slope_at_b == pytest.approx(-1.0 / math.sqrt(2.0), abs=1e-4)


def test_constant_extension(degen_profile):
    _, prof = degen_profile
    z = np.array([prof.b_endpoint + 0.5, prof.b_endpoint + 10.0])
    assert np.all(prof.v_at(z) == 0.0)


def test_fisher_both_ends_infinite(fisher_profile):
    _, prof = fisher_profile
    assert prof.a_kind == INFINITE and prof.b_kind == INFINITE
    assert prof.kink_points == ()


def test_strictly_decreasing(fisher_profile, degen_profile):
    for _, prof in (fisher_profile, degen_profile):
        assert np.all(np.diff(prof.v) < 0.0)


def test_boundary_flux_vanishes(fisher_profile, degen_profile):
    for _, prof in (fisher_profile, degen_profile):
        assert abs(prof.phi[0]) < 1e-3 and abs(prof.phi[-1]) < 1e-3
        assert np.all(prof.phi <= 0.0)


@pytest.mark.parametrize("which", ["fisher", "degen"])
def test_round_trip(which, fisher, degenerate, fisher_profile, degen_profile):
    m, (res, prof) = (fisher, fisher_profile) if which == "fisher" else (degenerate, degen_profile)
    sol = res.solution
    y_back = -prof.phi
    y_true = sol.interpolate(prof.v)
    assert np.max(np.abs(y_back - y_true)) < 1e-12
    # xi -> w(xi) -> v recovers xi
    xi = sol.mesh[(sol.mesh > 0.05) & (sol.mesh < 0.95)]
    zs = _WMap(m, sol)(xi)
    assert np.max(np.abs(prof.v_at(zs) - xi)) < 1e-6


def test_residual_small_and_zeroed_flux_detected(fisher, fisher_profile):
    _, prof = fisher_profile
    good = residual_integral_form(fisher, 3.0, prof)
    bad = residual_integral_form(fisher, 3.0, replace(prof, phi=np.zeros_like(prof.phi)))
    assert good < 1e-5
    assert bad > 100.0 * good


def test_kinks_from_diffusivity_jump(models_dir):
    m = load_model(models_dir / "three_jumps.toml")
    res = solve_bvp(m, 4.0)
    assert res.admissible
    prof = reconstruct(m, res.solution)
    assert len(prof.kink_points) >= len(m.d.discontinuities)
    # C1 away from the kinks: one-sided difference slopes agree
    k = prof.kink_points
    dz = np.diff(prof.z)
    s = np.diff(prof.v) / dz
    far = np.array([min(abs(z - t) for t in k) > 0.05 for z in prof.z[1:-1]])
    jumps = np.abs(np.diff(s))[far]
    assert np.max(jumps) < 1e-2
    resid = residual_integral_form(m, 4.0, prof)
    assert resid < 1e-4


def test_explicit_grid(fisher_profile, fisher):
    res, _ = fisher_profile
    prof = reconstruct(fisher, res.solution, np.linspace(-3, 3, 101))
    assert prof.z.size == 101 and np.all(np.diff(prof.v) < 0)


def test_reconstruct_needs_solution(fisher):
    with pytest.raises(NumericalError):
        reconstruct(fisher, None)


def test_metadata_fields(degen_profile):
    _, prof = degen_profile
    meta = prof.metadata()
    assert {"a", "b", "sharp_at_zero", "sharp_at_one", "kinks"} <= set(meta)
    assert prof.samples.shape == (prof.z.size, 3)
