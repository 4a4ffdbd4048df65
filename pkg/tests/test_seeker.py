import numpy as np
import pytest

from dpnash.game import GameSpec, QuadraticAggCost, partial_gradient, solve_ne_oracle
from dpnash.graphs import Digraph, GraphSchedule
from dpnash.noise import laplace_from_uniform, make_streams
from dpnash.schedules import Schedule, ScheduleSet
from dpnash.seeker import (ValidationError, WeightUnderflow, compact_form_check,
                           conservation_residuals, init_state, run, step)


def frozen_schedules(n, rho=1.0):
    return ScheduleSet.uniform(n, Schedule.constant(0.0), Schedule.constant(rho), 0.0,
                               Schedule.constant(1.0))


def reference_run(spec, s, graphs, seed, horizon, q0, zero_noise=False):
    """Per-player scalar loop written straight from the update equations."""
    n = spec.n
    streams = make_streams(seed, n)
    q = [float(q0)] * n
    qp = list(q)
    w = [1.0] * n
    phi = lambda i, v: spec.phi_c[i] * v + spec.phi_d[i]
    sig = [phi(i, q[i]) for i in range(n)]
    y = list(sig)
    out = [list(q)]
    for l in range(horizon):
        g = graphs.graph_at(l)
        eps = [0.0 if zero_noise else laplace_from_uniform(streams[i].uniform(l), s.noise_b[i](l))
               for i in range(n)]
        sent = [sig[j] + eps[j] for j in range(n)]
        outdeg = [len(g.out_neighbors(j + 1)) for j in range(n)]
        w_new, z_new = [], []
        for i in range(n):
            ins = sorted(g.in_neighbors(i + 1))
            w_new.append(sum(w[j - 1] / outdeg[j - 1] for j in ins))
            z_new.append(sum(sent[j - 1] / outdeg[j - 1] for j in ins))
        rho = s.rho(l)
        q_new = []
        for i in range(n):
            v = q[i] - s.mu[i](l) * partial_gradient(spec, i, q[i], y[i]) + s.beta[i] * (q[i] - qp[i])
            q_new.append(min(max(v, spec.lo[i]), spec.hi[i]))
        sig = [rho * z_new[i] + phi(i, q_new[i]) - phi(i, q[i]) for i in range(n)]
        y = [rho * z_new[i] / w_new[i] for i in range(n)]
        qp, q, w = q, q_new, w_new
        out.append(list(q))
    return np.array(out), np.array(y)


# -- init ---------------------------------------------------------------------

def test_init_published_start(ieee_spec):
    st = init_state(ieee_spec, 0.1)
    np.testing.assert_array_equal(st.sigma_hat, np.full(6, 0.1))
    np.testing.assert_array_equal(st.q_prev, st.q)
    np.testing.assert_array_equal(st.z, st.sigma_hat)
    np.testing.assert_array_equal(st.y, st.sigma_hat)
    assert st.w_hat.sum() == 6


def test_init_affine_map():
    spec = GameSpec((QuadraticAggCost(0, 0, 1, 1, 1),) * 2, lo=-1, hi=1, phi_c=2, phi_d=1)
    np.testing.assert_array_equal(init_state(spec, 0.0).sigma_hat, [1.0, 1.0])


def test_init_rejects_infeasible(ieee_spec):
    with pytest.raises(ValueError):
        init_state(ieee_spec, 30.0)


# -- one round by hand ----------------------------------------------------------

def test_hand_executed_round():
    spec = GameSpec((QuadraticAggCost(0.0, 0.0, 1.0, 9.0, 3.0),), lo=-10, hi=10)  # (q-3)^2
    s = ScheduleSet.uniform(1, Schedule.constant(0.1), Schedule.constant(0.5), 0.0,
                            Schedule.constant(1.0))
    st = step(init_state(spec, 0.0), spec, s, np.eye(1), np.zeros(1))
    assert st.q[0] == pytest.approx(0.6, abs=1e-15)
    assert st.w_hat[0] == 1.0
    assert st.z[0] == 0.0
    assert st.sigma_hat[0] == pytest.approx(0.6, abs=1e-15)
    assert st.y[0] == 0.0
    assert st.l == 1


# -- whole runs against the scalar reference --------------------------------------

@pytest.mark.parametrize("zero_noise", [False, True])
def test_run_matches_reference(ieee_spec, fig1, sched6, zero_noise):
    rec = run(ieee_spec, sched6, fig1, 4, 40, zero_noise=zero_noise)
    q_ref, y_ref = reference_run(ieee_spec, sched6, fig1, 4, 40, 0.1, zero_noise)
    np.testing.assert_allclose(rec.q, q_ref, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(rec.y[-1], y_ref, rtol=1e-10, atol=1e-12)


def test_run_matches_reference_with_affine_map(ieee_spec, fig1, damped_cfg):
    spec = GameSpec(ieee_spec.costs, lo=ieee_spec.lo, hi=ieee_spec.hi,
                    phi_c=[1, 2, 0.5, 1.5, 1, 3], phi_d=[0, 1, -1, 0, 2, 0])
    s = damped_cfg.schedule_set()
    rec = run(spec, s, fig1, 1, 30, q0=0.5)
    q_ref, _ = reference_run(spec, s, fig1, 1, 30, 0.5)
    np.testing.assert_allclose(rec.q, q_ref, rtol=1e-12, atol=1e-12)


def test_horizon_zero(ieee_spec, fig1, sched6):
    rec = run(ieee_spec, sched6, fig1, 0, 0, q_star=np.zeros(6))
    assert rec.q.shape == (1, 6) and rec.noise.shape == (0, 6)
    assert rec.err.shape == (1,)


def test_determinism(ieee_spec, fig1, sched6):
    a = run(ieee_spec, sched6, fig1, 7, 120)
    b = run(ieee_spec, sched6, fig1, 7, 120)
    for name in ("q", "y", "w_hat", "sigma_hat", "z", "noise"):
        assert getattr(a, name).tobytes() == getattr(b, name).tobytes()


def test_preconditions_enforced(ieee_spec, fig1):
    bad = frozen_schedules(6)
    with pytest.raises(ValidationError):
        run(ieee_spec, bad, fig1, 0, 5)
    disconnected = GraphSchedule((Digraph(6),), 1)
    with pytest.raises(ValidationError):
        run(ieee_spec, ScheduleSet.from_dict(bad.to_dict(), 6), disconnected, 0, 5,
            assume_valid=False)


def test_size_mismatch(ieee_spec, fig1):
    with pytest.raises(ValueError):
        run(ieee_spec, frozen_schedules(3), fig1, 0, 5, assume_valid=True)


# -- invariants ---------------------------------------------------------------

@pytest.fixture(scope="module")
def runs(ieee_cfg, damped_cfg):
    out = []
    for cfg in (ieee_cfg, damped_cfg):
        spec, g, s = cfg.game_spec(), cfg.graph_schedule(), cfg.schedule_set()
        for seed, zn in ((0, False), (5, False), (0, True)):
            out.append((spec, g, run(spec, s, g, seed, 300, zero_noise=zn)))
    return out


def test_conservation_identities(runs):
    for spec, _, rec in runs:
        sres, wres = conservation_residuals(rec, spec)
        assert np.abs(sres).max() < 1e-9
        assert np.abs(wres).max() < 1e-9
        assert np.all(rec.w_hat > 0)


def test_feasibility(runs):
    for spec, _, rec in runs:
        assert np.all(rec.q >= spec.lo) and np.all(rec.q <= spec.hi)


def test_compact_form(runs):
    for spec, g, rec in runs:
        assert compact_form_check(rec, spec, g).max_residual < 1e-9


def test_compact_form_flags_corruption(runs):
    spec, g, rec = runs[0]
    z = rec.z.copy()
    z[57, 3] += 1e-3
    bad = type(rec)(**{**rec.__dict__, "z": z})
    rep = compact_form_check(bad, spec, g)
    assert rep.max_residual >= 1e-3 * (1 - 1e-9)
    assert rep.worst_iteration == 56


def test_push_sum_consensus(ieee_spec, fig1):
    q0 = np.arange(1.0, 7.0)
    rec = run(ieee_spec, frozen_schedules(6), fig1, 0, 200, q0=q0, zero_noise=True,
              assume_valid=True)
    np.testing.assert_array_equal(rec.q[-1], q0)
    dev = np.abs(rec.y - q0.mean()).max(axis=1)
    assert dev[200] < 1e-8
    # geometric: every 20 rounds shrink the deviation
    assert np.all(dev[20::20] < dev[:-20:20])


def test_noiseless_complete_graph_monotone(ieee_spec):
    g = GraphSchedule.fixed(Digraph.complete(6))
    # 0.1 is below 2 / (largest own-action curvature, 16.2)
    s = ScheduleSet.uniform(6, Schedule.constant(0.1), Schedule.constant(1.0), 0.0,
                            Schedule.constant(1.0))
    q_star = solve_ne_oracle(ieee_spec)
    rec = run(ieee_spec, s, g, 0, 2000, q_star=q_star, zero_noise=True, assume_valid=True)
    # monotone until the error meets the oracle's own tolerance
    tail = rec.err[20:]
    tail = tail[: np.argmax(tail < 1e-9)]
    assert len(tail) > 100 and np.all(np.diff(tail) < 0)
    assert rec.err[-1] < 1e-6


def test_weight_underflow_keeps_partial_record():
    spec = GameSpec((QuadraticAggCost(0.0, 0.0, 1.0, 1.0, 1.0),) * 2, lo=-1, hi=1)
    g = GraphSchedule.fixed(Digraph.from_edges(2, [(1, 2)]))
    with pytest.raises(WeightUnderflow) as info:
        run(spec, frozen_schedules(2, rho=0.5), g, 0, 2000, zero_noise=True, assume_valid=True)
    rec = info.value.record
    assert not rec.completed
    assert 900 < rec.horizon < 1100
    assert rec.w_hat[-1, 0] >= 1e-300


# -- empirical restatements of the convergence argument ----------------------------

def _long_run(cfg):
    spec, g, s = cfg.game_spec(), cfg.graph_schedule(), cfg.schedule_set()
    return run(spec, s, g, 0, 2000)


def _tail_fraction(rec):
    dq = (np.diff(rec.q, axis=0) ** 2).sum(axis=1)
    return dq[1000:].sum() / dq.sum()


def test_momentum_differences_summable_damped(damped_cfg):
    assert _tail_fraction(_long_run(damped_cfg)) < 0.01


@pytest.mark.xfail(strict=True, reason="published step size keeps player 1 oscillating "
                   "until mu decays near l=1400; see the decisions ledger")
def test_momentum_differences_summable_published(ieee_cfg):
    assert _tail_fraction(_long_run(ieee_cfg)) < 0.01


@pytest.mark.parametrize("which", ["ieee_cfg", "damped_cfg"])
def test_aggregate_tracking(request, which):
    rec = _long_run(request.getfixturevalue(which))
    gap = np.abs(rec.y - rec.sigma_hat.mean(axis=1, keepdims=True)).max(axis=1)
    assert np.all(np.isfinite(gap))
    quarter = len(gap) // 4
    assert gap[-quarter:].mean() < gap[:quarter].mean()
