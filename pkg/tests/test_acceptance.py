"""End-to-end acceptance checks with pinned tolerances and time budgets.

Every reference quantity here is computed independently of the library: plain
double sums for discrepancies, dense ``np.linalg.solve`` for ridge systems,
inline kernel formulas, and a hand-written backward recursion. Each check
prints one ``ACCEPTANCE <n> <name>: PASS`` line on success.
"""

import math
import time

import numpy as np

from kdro import (
    AmbiguityBall,
    ExperimentConfig,
    Gaussian,
    Product,
    RkhsFunction,
    Spline1,
    StateAction,
    StateGrid,
    TclParams,
    TransitionDataset,
    cme_weights,
    empirical_embedding,
    expectation,
    fit_cme,
    generate_dataset,
    interpolate,
    mc_safety_probability,
    mmd,
    run_experiment,
    safety_value_iteration,
    support_tightness_check,
    tcl_step,
)

GAMMA = 100.0
EPSILONS = (0.0, 0.02, 0.05, 0.1)


def _gauss(gamma, u, v):
    return math.exp(-gamma * (u - v) ** 2)


def _spline(a, b):
    m = min(a, b)
    return 1.0 + a * b + a * b * m - 0.5 * (a + b) * m**2 + m**3 / 3.0


def _joint(gamma, x, a, x2, a2):
    return _gauss(gamma, x, x2) + _spline(a, a2)


def _stage0_curves(dataset, joint_kernel, lam, epsilons):
    est = fit_cme(dataset, joint_kernel, Gaussian(GAMMA), lam)
    grid = StateGrid(18.0, 23.0, 35)
    curves = {}
    policies = {}
    for eps in epsilons:
        values, policy = safety_value_iteration(
            grid, (0.0, 1.0), est, eps, 18, 19.0, 22.0, lambda_norm=200.0)
        curves[eps] = values[0].values
        policies[eps] = policy
    return grid, curves, policies


def _assert_ordered_curves(grid, curves, epsilons):
    outside = (grid.points < 19.0) | (grid.points > 22.0)
    for eps in epsilons:
        curve = curves[eps]
        assert np.all(curve >= 0.0) and np.all(curve <= 1.0)
        assert np.all(curve[outside] == 0.0)
    for lo, hi in zip(epsilons, epsilons[1:]):
        assert np.all(curves[hi] <= curves[lo] + 1e-8)


def test_01_mmd_matches_brute_force_double_sums():
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    for _ in range(50):
        gamma = float(rng.uniform(0.1, 2.0))
        kernel = Gaussian(gamma)
        xs = rng.normal(0.0, 1.5, int(rng.integers(1, 21)))
        ys = rng.normal(0.0, 1.5, int(rng.integers(1, 21)))
        closed = mmd(kernel, xs, ys)

        total = 0.0
        for xi in xs:
            for xj in xs:
                total += _gauss(gamma, xi, xj) / (len(xs) * len(xs))
        for yi in ys:
            for yj in ys:
                total += _gauss(gamma, yi, yj) / (len(ys) * len(ys))
        for xi in xs:
            for yj in ys:
                total -= 2.0 * _gauss(gamma, xi, yj) / (len(xs) * len(ys))
        assert abs(closed - math.sqrt(max(total, 0.0))) < 1e-10
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0
    print(f"ACCEPTANCE 1 mmd brute force: PASS ({elapsed:.2f}s)")


def test_02_cme_weights_satisfy_the_normal_equations():
    start = time.perf_counter()
    joint = StateAction(state_kernel=Gaussian(GAMMA), action_kernel=Spline1())
    hand = [
        ([20.0], [1.0], [20.3]),
        ([20.3, 21.1], [0.0, 1.0], [20.5, 20.9]),
        ([19.5, 20.5, 21.5], [0.0, 1.0, 0.0], [19.8, 20.4, 21.6]),
        ([19.5, 20.5, 21.5, 21.9], [0.0, 1.0, 0.0, 1.0], [19.8, 20.4, 21.6, 21.2]),
        ([19.2, 19.5, 20.5, 21.5, 21.9], [0.0, 0.0, 1.0, 0.0, 1.0],
         [19.6, 19.8, 20.4, 21.6, 21.2]),
    ]
    lam = 0.5
    for states, actions, next_states in hand:
        m = len(states)
        est = fit_cme(TransitionDataset(states=states, actions=actions,
                                        next_states=next_states), joint, Gaussian(GAMMA), lam)
        A = np.array([[_joint(GAMMA, xi, ai, xj, aj)
                       for xj, aj in zip(states, actions)]
                      for xi, ai in zip(states, actions)]) + m * lam * np.eye(m)
        for x, a in [(20.0, 0.0), (20.7, 1.0), (21.4, 1.0)]:
            k_y = np.array([_joint(GAMMA, x, a, xi, ai)
                            for xi, ai in zip(states, actions)])
            np.testing.assert_allclose(cme_weights(est, x, a),
                                       np.linalg.solve(A, k_y), atol=1e-9)

    # residual of the regularized system stays at solver precision at m = 200
    rng = np.random.default_rng(202)
    m, lam = 200, 0.1
    states = rng.uniform(19, 22, m)
    ds = TransitionDataset(states=states, actions=rng.integers(0, 2, m).astype(float),
                           next_states=states + rng.normal(0, 0.3, m))
    est = fit_cme(ds, joint, Gaussian(GAMMA), lam)
    A = np.array([[_joint(GAMMA, xi, ai, xj, aj)
                   for xj, aj in zip(states, ds.actions)]
                  for xi, ai in zip(states, ds.actions)]) + m * lam * np.eye(m)
    for _ in range(100):
        x, a = float(rng.uniform(19, 22)), float(rng.integers(0, 2))
        k_y = np.array([_joint(GAMMA, x, a, xi, ai)
                        for xi, ai in zip(states, ds.actions)])
        beta = cme_weights(est, x, a)
        assert np.linalg.norm(A @ beta - k_y) <= 1e-9 * (1.0 + np.linalg.norm(k_y))
    elapsed = time.perf_counter() - start
    assert elapsed < 5.0
    print(f"ACCEPTANCE 2 cme normal equations: PASS ({elapsed:.2f}s)")


def test_03_expectations_reproduce_sample_averages():
    rng = np.random.default_rng(303)
    for _ in range(100):
        gamma = float(rng.uniform(0.1, 2.0))
        kernel = Gaussian(gamma)
        xs = rng.normal(0.0, 1.5, int(rng.integers(1, 31)))
        zs = rng.normal(0.0, 1.5, int(rng.integers(1, 6)))
        cs = rng.standard_normal(zs.shape[0])
        f = RkhsFunction(kernel=kernel, points=zs, weights=cs)
        via_embedding = expectation(f, empirical_embedding(kernel, xs))
        plain_average = np.mean(
            [sum(c * _gauss(gamma, z, x) for z, c in zip(zs, cs)) for x in xs])
        assert abs(via_embedding - plain_average) < 1e-10
    print("ACCEPTANCE 3 reproducing expectations: PASS")


def test_04_support_function_bound_is_tight():
    rng = np.random.default_rng(404)
    start = time.perf_counter()
    for case in range(100):
        m = int(rng.integers(5, 26))
        states = rng.uniform(19, 22, m)
        ds = TransitionDataset(states=states,
                               actions=rng.integers(0, 2, m).astype(float),
                               next_states=states + rng.normal(0, 0.3, m))
        joint = StateAction(state_kernel=Gaussian(GAMMA), action_kernel=Spline1())
        est = fit_cme(ds, joint, Gaussian(GAMMA), float(rng.uniform(0.05, 1.0)))
        ball = AmbiguityBall(estimator=est,
                             epsilon=0.0 if case == 0 else float(rng.uniform(0, 1)),
                             state=float(rng.uniform(19, 22)),
                             action=float(rng.integers(0, 2)))
        n_pts = int(rng.integers(1, 5))
        f = RkhsFunction(kernel=est.state_kernel,
                         points=rng.uniform(19, 22, n_pts),
                         weights=rng.standard_normal(n_pts))
        report = support_tightness_check(ball, f, trials=20, rng=int(rng.integers(2**31)),
                                         margin_tol=1e-8, maximizer_tol=1e-8)
        assert report.passed
        assert report.worst_margin <= 1e-8
        assert report.maximizer_gap <= 1e-8
    elapsed = time.perf_counter() - start
    assert elapsed < 10.0
    print(f"ACCEPTANCE 4 support tightness: PASS ({elapsed:.2f}s)")


def test_05_safety_curves_shrink_as_the_radius_grows():
    start = time.perf_counter()
    dataset = generate_dataset(TclParams(), 500, 19.0, 22.0, seed=0)
    joint = StateAction(state_kernel=Gaussian(GAMMA), action_kernel=Spline1())
    grid, curves, _ = _stage0_curves(dataset, joint, lam=200.0, epsilons=EPSILONS)
    _assert_ordered_curves(grid, curves, EPSILONS)
    elapsed = time.perf_counter() - start
    assert elapsed < 60.0
    print(f"ACCEPTANCE 5 radius monotonicity: PASS ({elapsed:.2f}s)")


def test_06_nominal_dp_matches_a_plain_reference_loop():
    params = TclParams()
    dataset = generate_dataset(params, 100, 19.0, 22.0, seed=1)
    joint = StateAction(state_kernel=Gaussian(GAMMA), action_kernel=Spline1())
    lam, horizon = 0.1, 4
    est = fit_cme(dataset, joint, Gaussian(GAMMA), lam)
    grid = StateGrid(18.0, 23.0, 11)
    values, _ = safety_value_iteration(
        grid, (0.0, 1.0), est, 0.0, horizon, 19.0, 22.0, lambda_norm=1.0)

    pts = grid.points
    states, actions = dataset.states[:, 0], dataset.actions
    x_next = dataset.next_states[:, 0]
    A = np.array([[_joint(GAMMA, xi, ai, xj, aj)
                   for xj, aj in zip(states, actions)]
                  for xi, ai in zip(states, actions)]) + 100 * lam * np.eye(100)
    ref = [None] * horizon
    ref[-1] = np.where((pts >= 19.0) & (pts <= 22.0), 1.0, 0.0)
    for stage in range(horizon - 2, -1, -1):
        f = np.interp(x_next, pts, ref[stage + 1])
        f[(x_next < 19.0) | (x_next > 22.0)] = 0.0
        v = np.zeros(pts.shape[0])
        for g, x in enumerate(pts):
            if not 19.0 <= x <= 22.0:
                continue
            best = -np.inf
            for a in (0.0, 1.0):
                k_y = np.array([_joint(GAMMA, x, a, xi, ai)
                                for xi, ai in zip(states, actions)])
                best = max(best, np.linalg.solve(A, k_y) @ f)
            v[g] = min(max(best, 0.0), 1.0)
        ref[stage] = v
    for stage in range(horizon):
        np.testing.assert_allclose(values[stage].values, ref[stage], atol=1e-10)
    print("ACCEPTANCE 6 nominal dp consistency: PASS")


def test_07_stage0_values_match_monte_carlo(tmp_path):
    start = time.perf_counter()
    params = TclParams(noise_std=0.25)
    dataset = generate_dataset(params, 2000, 19.0, 22.0, seed=0)
    # the product coupling carries state-action interactions, so the greedy
    # policy can switch the unit with temperature; a small ridge keeps the
    # fitted values close to actual closed-loop safety probabilities
    joint = Product(
        StateAction(state_kernel=Gaussian(GAMMA), action_kernel=None),
        StateAction(state_kernel=None, action_kernel=Spline1()),
    )
    est = fit_cme(dataset, joint, Gaussian(GAMMA), 1e-4)
    grid = StateGrid(18.0, 23.0, 35)
    values, policy = safety_value_iteration(
        grid, (0.0, 1.0), est, 0.0, 18, 19.0, 22.0, lambda_norm=200.0)
    for i, x0 in enumerate((20.0, 20.5, 21.0)):
        dp_v0 = interpolate(values[0], x0)
        mc = mc_safety_probability(params, policy, x0, 18, 10_000, seed=1000 + i)
        assert abs(dp_v0 - mc) <= 0.10, (x0, dp_v0, mc)

    # every run manifest documents why the two sides may differ
    config = ExperimentConfig(m=200, grid_count=9, horizon_minutes=15,
                              lam=1e-4, joint_kernel="product",
                              epsilons=(0.0,), mc_probes=(20.5,), mc_ntraj=100,
                              output_dir=str(tmp_path / "mc_doc"))
    result = run_experiment(config)
    manifest = result["paths"]["manifest"].read_text(encoding="utf-8")
    for word in ("discretization", "interpolation", "regularization"):
        assert word in manifest
    elapsed = time.perf_counter() - start
    assert elapsed < 180.0
    print(f"ACCEPTANCE 7 monte carlo cross-check: PASS ({elapsed:.2f}s)")


def test_08_full_scale_run_completes_and_stays_ordered(tmp_path):
    start = time.perf_counter()
    config = ExperimentConfig(output_dir=str(tmp_path / "full"))
    assert (config.m, config.lam, config.gamma) == (7000, 200.0, 100.0)
    assert (config.grid_count, config.horizon, len(config.epsilons)) == (35, 18, 4)
    result = run_experiment(config)
    grid = result["grid"]
    curves = {eps: result["solutions"][eps][0][0].values for eps in config.epsilons}
    _assert_ordered_curves(grid, curves, config.epsilons)
    elapsed = time.perf_counter() - start
    assert elapsed < 900.0
    print(f"ACCEPTANCE 8 full-scale run: PASS ({elapsed:.2f}s)")


def test_09_tcl_dynamics_invariants():
    p = TclParams()
    alpha = math.exp(-p.h / (p.C * p.R))

    assert abs(tcl_step(p, 32.0, 0.0, 0.0) - 32.0) < 1e-12
    for x, y, a in [(19.0, 22.0, 1.0), (15.0, 35.0, 0.0), (20.0, 20.1, 1.0)]:
        gap = abs(tcl_step(p, x, a, 0.0) - tcl_step(p, y, a, 0.0))
        assert abs(gap - alpha * abs(x - y)) < 1e-12

    on, off = tcl_step(p, 20.0, 1.0, 0.0), tcl_step(p, 20.0, 0.0, 0.0)
    assert abs(on - 19.8434) < 1e-4
    assert abs(off - 20.2474) < 1e-4
    assert abs(on - (alpha * 20.0 + (1 - alpha) * (32.0 - 0.7 * 2.0 * 14.0))) < 1e-12
    assert abs(off - (alpha * 20.0 + (1 - alpha) * 32.0)) < 1e-12
    print("ACCEPTANCE 9 tcl dynamics: PASS")


def test_10_equal_seeds_give_byte_identical_csv_artifacts(tmp_path):
    base = ExperimentConfig(m=150, grid_count=11, horizon_minutes=30,
                            lam=0.1, epsilons=(0.0, 0.05), seed=5,
                            mc_probes=(20.0, 20.5), mc_ntraj=300)
    dirs = []
    for name in ("first", "second"):
        out = tmp_path / name
        run_experiment(ExperimentConfig(**{**base.__dict__, "output_dir": str(out)}))
        dirs.append(out)
    names = sorted(p.name for p in dirs[0].glob("*.csv"))
    assert names == sorted(p.name for p in dirs[1].glob("*.csv"))
    assert len(names) == 3 + 2 * len(base.epsilons)  # dataset, summary, mc, per-radius pairs
    for name in names:
        assert (dirs[0] / name).read_bytes() == (dirs[1] / name).read_bytes(), name
    print("ACCEPTANCE 10 seeded determinism: PASS")
