import math

import numpy as np
import pytest

import qhtomo as q


def test_special_functions():
    assert q.hermite_fn(0, 0.0) == pytest.approx(math.pi ** -0.25)
    assert q.laguerre(2, 0, 2.0) == pytest.approx(-1.0)


def test_states_and_wigner():
    vac = q.fock(0, 4)
    assert vac.dim == 4
    assert vac.matrix.shape == (4, 4)
    assert q.wigner(vac, 1.0, 0.0) == pytest.approx(math.exp(-1) / math.pi)
    coh = q.coherent(0.3 + 0.4j, 10)
    assert coh[1, 0] == pytest.approx(math.exp(-0.25) * (0.3 + 0.4j))
    assert coh.trace_deficit() < 1e-9
    with pytest.raises(q.Error):
        q.fock(5, 3)


def test_sample_and_estimate():
    vac = q.fock(0, 2)
    data = q.sample(vac, 1.0, 20000, 7)
    assert len(data) == 20000
    assert data.y.shape == (20000,)
    assert np.all((data.phi >= 0) & (data.phi <= math.pi))
    assert np.var(data.y) == pytest.approx(0.5, abs=0.03)

    again = q.sample(vac, 1.0, 20000, 7)
    assert np.array_equal(again.y, data.y)

    tuning = q.select_tuning(20000, 1.0, 1.0, 2.0)
    assert tuning["N"] == math.floor(math.log(20000) / 2)
    rho = q.estimate_dm(data, 3)
    assert rho.raw
    assert abs(rho[0, 0] - 1.0) < 0.1
    proj = q.estimate_dm(data, 3, project=True)
    assert np.all(proj.eigenvalues() >= -1e-12)


def test_wigner_grid_and_kernel():
    data = q.sample(q.fock(0, 2), 0.9, 2000, 3)
    axis, grid = q.estimate_wigner(data, 0.5, 2.0)
    assert grid.shape == (axis.size, axis.size)
    r2 = axis[:, None] ** 2 + axis[None, :] ** 2
    assert np.all(grid[r2 > 4.0 + 1e-9] == 0.0)
    assert q.kernel(0.0, 0.3, 1.0) == pytest.approx(1 / (4 * math.pi * 0.09))


def test_verify_report():
    report = q.verify(norm_growth=False)
    assert report["passed"]
    assert q.verify(perturb=1.5, norm_growth=False)["passed"] is False
