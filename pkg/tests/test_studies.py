import math

import numpy as np
import pytest

from boussleray.fem import FeSpace
from boussleray.mesh import build_rect_mesh
from boussleray.stepper import Model
from boussleray.verification import (
    ErrorNorms,
    MmsProblem,
    RateTable,
    compute_error_norms,
    h1_seminorm_error,
    l2_error,
    observed_rate,
    run_mms,
    run_spatial_study,
    run_temporal_study,
)


def test_observed_rate():
    assert observed_rate(4.0, 1.0) == pytest.approx(2.0)
    assert observed_rate(1.0, 1.0) == 0.0
    for bad in [(0.0, 1.0), (1.0, 0.0), (-1.0, 1.0), (float("nan"), 1.0), (float("inf"), 1.0)]:
        assert math.isnan(observed_rate(*bad))


def test_rate_table():
    tab = RateTable("demo")
    tab.add(0.5, (8.0, 4.0, 1.0, 2.0))
    tab.add(0.25, (2.0, 1.0, 0.5, 0.25))
    r = tab.rates("err_u_L2")
    assert math.isnan(r[0]) and r[1] == pytest.approx(2.0)
    assert tab.rates(3)[1] == pytest.approx(3.0)
    assert tab.column("err_T_L2") == [1.0, 0.5]
    assert "demo" in tab.format()


def test_norms_exact_for_interpolated_polynomials():
    mesh = build_rect_mesh((0.0, 1.0), (0.0, 1.0), 2, 2)
    V = FeSpace(mesh, 2)
    q = V.interpolate(lambda x, y: x * y + y**2)
    assert l2_error(q, lambda x, y, t: x * y + y**2, 0.0) < 1e-14
    assert l2_error(q, lambda x, y, t: x * y + y**2 + 1.0, 0.0) == pytest.approx(1.0)
    # grad of (x y) against (0, 0): sqrt(int y^2 + x^2) = sqrt(2/3)
    q = V.interpolate(lambda x, y: x * y)
    assert h1_seminorm_error(q, lambda x, y, t: (0 * x, 0 * x), 0.0) == pytest.approx(math.sqrt(2 / 3))
    u = V.interpolate(lambda x, y: (x, 2 * y), 2)
    grads = lambda x, y, t: ((1 + 0 * x, 0 * x), (0 * x, 2 + 0 * x))  # noqa: E731
    assert h1_seminorm_error(u, grads, 0.0) < 1e-13


def test_compute_error_norms_levels():
    prob = MmsProblem()
    V = FeSpace(build_rect_mesh((0.0, 1.0), (0.0, 1.0), 2, 2), 2)
    traj = []
    for n in (1, 2, 3):
        t = 0.1 * n
        traj.append((n, t, V.interpolate(lambda x, y: prob.u(x, y, t), 2),
                     V.interpolate(lambda x, y: prob.T(x, y, t))))
    nrm = compute_error_norms(traj, prob, 0.1)
    assert nrm.steps == [1, 2, 3] and all(np.isfinite(nrm.as_tuple()))
    with pytest.raises(ValueError):
        compute_error_norms([traj[0], traj[2]], prob, 0.1)
    with pytest.raises(ValueError):
        compute_error_norms([], prob, 0.1)
    with pytest.raises(ValueError):
        ErrorNorms(0.1).finalize(traj[0][2], traj[0][3], prob, 0.1, n_expected=2)


def test_run_mms_small():
    nrm = run_mms(MmsProblem(), 4, 2, 0.05, 0.2, Model.ADAPTIVE, 0)
    assert nrm.steps == [1, 2, 3, 4]
    assert all(0 < e < 1 for e in nrm.as_tuple())
    assert max(r["div_residual"] for r in nrm.solver.ledger.rows) < 1e-9


def test_small_temporal_study_converges():
    tab = run_temporal_study(MmsProblem(), 1 / 8, [0.1, 0.05], t_end=0.2, temperature_wind="updated")
    assert [r.resolution for r in tab.rows] == [0.1, 0.05]
    assert all(r > 1.0 for r in tab.rates("err_u_L2")[1:])


def test_small_spatial_study_converges():
    tab = run_spatial_study(MmsProblem(), [1 / 2, 1 / 4, 1 / 8])
    rates = tab.rates("err_u_21")
    assert rates[-1] > 1.7


def test_failed_row_is_annotated(monkeypatch):
    import boussleray.verification.studies as st

    def boom(*a, **k):
        raise RuntimeError("no convergence")

    monkeypatch.setattr(st, "run_mms", boom)
    tab = st.run_temporal_study(MmsProblem(), 1 / 4, [0.1], t_end=0.2)
    assert "no convergence" in tab.rows[0].note
    assert all(math.isnan(e) for e in tab.rows[0].errors)
