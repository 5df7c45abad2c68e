"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

The full-length reference reproductions run at reduced replication count by
default; set STOVOL_FULL=1 to run them at the reference replication count
(R=100) with the tighter tolerance.  Run with ``pytest -s`` to see the
per-criterion lines.
"""

import math
import os
import time
from contextlib import contextmanager

import numpy as np
import pytest

from stovol import (
    DRIFT,
    EstimationDomain,
    ExperimentPlan,
    IntegratedSeries,
    PenaltyParams,
    RegressionSample,
    builtin_model,
    collection,
    design_matrix,
    derive_rng,
    empirical_error,
    fit,
    generate_observations,
    penalty,
    quad_var,
    run_table,
    select,
    simulate_fine_path,
    trig_spec,
)

FULL = os.environ.get("STOVOL_FULL", "") not in ("", "0")

CIR_PARAMS = {"theta": 0.75, "c": 1 / 3, "d": 9}
EXP_OU_PARAMS = {"theta": 1.0, "c": 0.75}

# reference mean squared errors (trig basis, k = 250, T = 1000)
REF_CIR_B = 1.95e-3
REF_CIR_SIG = 8.77e-5
REF_CIR_B_K500 = 2.91e-3
REF_EXP_OU_B = 4.08e-2
REF_EXP_OU_SIG = 1.42e-1


@contextmanager
def criterion(name):
    start = time.perf_counter()
    try:
        yield
    except Exception:
        print(f"\n[acceptance] {name}: FAIL ({time.perf_counter() - start:.1f}s)")
        raise
    print(f"\n[acceptance] {name}: PASS ({time.perf_counter() - start:.1f}s)")


def _full_scale_plan(model_id, params, ks, reps, basis="trig", seed=0):
    return ExperimentPlan(model_id=model_id, model_params=params, horizon=1000.0,
                          fine_step=2e-4, obs_step=2e-3, ks=ks, basis_family=basis,
                          replications=reps, base_seed=seed)


# ---------------------------------------------------------------------------
# 1. fast property suite
# ---------------------------------------------------------------------------

def test_criterion_1_property_suite():
    with criterion("1 property suite"):
        start = time.perf_counter()

        # trig orthonormality by quadrature, D <= 25
        x, w = np.polynomial.legendre.leggauss(256)
        xs, ws = 0.5 * (x + 1.0), 0.5 * w
        phi = design_matrix(trig_spec(25), xs)
        gram = (phi * ws[:, None]).T @ phi
        assert np.max(np.abs(gram - np.eye(25))) < 1e-8

        # least squares against the explicit normal-equations oracle
        rng = np.random.default_rng(2)
        dom = EstimationDomain(0.0, 1.0)
        for _ in range(50):
            xd = rng.random(40)
            yd = rng.standard_normal(40)
            sample = RegressionSample(target=DRIFT, x=xd, y=yd, block_span=0.5,
                                      domain=dom)
            f = fit(sample, trig_spec(7))
            phi = design_matrix(trig_spec(7), xd)
            oracle = np.linalg.solve(phi.T @ phi, phi.T @ yd)
            assert np.allclose(f.coeffs, oracle, rtol=1e-8)

        # contrast monotone under nesting
        xd, yd = rng.random(150), rng.standard_normal(150)
        sample = RegressionSample(target=DRIFT, x=xd, y=yd, block_span=0.5,
                                  domain=dom)
        cs = [fit(sample, trig_spec(d)).contrast for d in (1, 3, 5, 7, 9, 11)]
        assert all(b <= a * (1 + 1e-12) + 1e-15 for a, b in zip(cs, cs[1:]))

        # selection argmin equals the enumeration oracle exactly
        coll = collection("trig", 13)
        params = PenaltyParams(target=DRIFT, s_sq=0.02, n_points=150,
                               block_span=0.5)
        out = select(sample, coll, params)
        crits = [fit(sample, s).contrast + penalty(s, params) for s in coll]
        assert out.chosen_row.criterion == min(crits)

        # determinism: same seeds give identical reports
        plan = ExperimentPlan(model_id="cir", model_params=CIR_PARAMS,
                              horizon=40.0, fine_step=1e-3, obs_step=1e-2,
                              ks=(20,), replications=2, base_seed=5)
        assert run_table(plan, workers=1).to_json() == \
            run_table(plan, workers=1).to_json()

        assert time.perf_counter() - start < 60.0


# ---------------------------------------------------------------------------
# 2. simulator moments
# ---------------------------------------------------------------------------

def test_criterion_2_simulator_moments():
    with criterion("2 simulator moments"):
        start = time.perf_counter()

        m = builtin_model("exp_ou", **EXP_OU_PARAMS)
        path = simulate_fine_path(m, 2e-4, 5_000_000, derive_rng(0, 1, 0))
        target = math.exp(0.75 ** 2 / 4.0)  # lognormal stationary mean
        assert abs(path.values.mean() - target) / target < 0.05

        m = builtin_model("cir", **CIR_PARAMS)
        path = simulate_fine_path(m, 2e-4, 5_000_000, derive_rng(0, 1, 1))
        assert abs(path.values.mean() - 1 / 3) * 3 < 0.05

        # constant volatility: realized blocks follow the scaled chi-square law
        v, k, delta, n_blocks = 2.0, 50, 0.01, 100_000
        integ = IntegratedSeries(step=delta, values=np.full(n_blocks * k, v * delta),
                                 ratio=1)
        obs = generate_observations(integ, derive_rng(0, 2, 0))
        qv = quad_var(obs, k)
        mean_se = math.sqrt(2.0 * v ** 2 / k / n_blocks)
        assert abs(qv.values.mean() - v) < 3 * mean_se
        target_var = 2.0 * v ** 2 / k  # = 0.16
        assert abs(qv.values.var() - target_var) / target_var < 0.05

        assert time.perf_counter() - start < 120.0


# ---------------------------------------------------------------------------
# 3 and 4. reference error table for the cir model (full length)
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def cir_reference_table():
    reps = 100 if FULL else 20
    plan = _full_scale_plan("cir", CIR_PARAMS, ks=(250, 500), reps=reps)
    return run_table(plan)


@pytest.mark.slow
def test_criterion_3_cir_reference_errors(cir_reference_table):
    reps = 100 if FULL else 20
    factor = 3.0 if FULL else 5.0
    label = f"3 cir reference errors (R={reps}, factor {factor:g})"
    with criterion(label):
        cell_b = cir_reference_table.cell("cir", "trig", 250, "b")
        cell_s = cir_reference_table.cell("cir", "trig", 250, "sigma2")
        print(f"  b:      mean {cell_b.mean:.3e} (ref {REF_CIR_B:.3e}), "
              f"std {cell_b.std:.1e}")
        print(f"  sigma2: mean {cell_s.mean:.3e} (ref {REF_CIR_SIG:.3e}), "
              f"std {cell_s.std:.1e}")
        assert REF_CIR_B / factor < cell_b.mean < REF_CIR_B * factor
        assert REF_CIR_SIG / factor < cell_s.mean < REF_CIR_SIG * factor


@pytest.mark.slow
def test_criterion_4_error_ordering_in_k(cir_reference_table):
    b250 = cir_reference_table.cell("cir", "trig", 250, "b").mean
    b500 = cir_reference_table.cell("cir", "trig", 500, "b").mean
    s250 = cir_reference_table.cell("cir", "trig", 250, "sigma2").mean
    s500 = cir_reference_table.cell("cir", "trig", 500, "sigma2").mean
    print(f"\n  b-error:      k=250 {b250:.3e}  <  k=500 {b500:.3e} "
          f"(refs {REF_CIR_B:.2e} < {REF_CIR_B_K500:.2e})")
    print(f"  sigma2-error: k=250 {s250:.3e}  <  k=500 {s500:.3e}")
    if not FULL:
        pytest.skip("criterion asserted on R=100 runs; set STOVOL_FULL=1")
    with criterion("4 error ordering in k (R=100)"):
        assert b250 < b500
        assert s250 < s500  # smaller-k diffusion error also reproduces


# ---------------------------------------------------------------------------
# 5. cross-model spot check and difficulty ordering
# ---------------------------------------------------------------------------

@pytest.mark.slow
def test_criterion_5_exp_ou_spot_check_and_model_ordering():
    reps = 100 if FULL else 20
    with criterion(f"5 exp-ou spot check and model ordering (R={reps})"):
        plan = _full_scale_plan("exp_ou", EXP_OU_PARAMS, ks=(250,), reps=reps)
        rep = run_table(plan)
        b = rep.cell("exp_ou", "trig", 250, "b").mean
        s = rep.cell("exp_ou", "trig", 250, "sigma2").mean
        print(f"  exp_ou b: {b:.3e} (ref {REF_EXP_OU_B:.3e}), "
              f"sigma2: {s:.3e} (ref {REF_EXP_OU_SIG:.3e})")
        assert REF_EXP_OU_B / 3.0 < b < REF_EXP_OU_B * 3.0
        assert REF_EXP_OU_SIG / 3.0 < s < REF_EXP_OU_SIG * 3.0

        # remaining models, reported and compared qualitatively: the cir
        # process is by far the easiest on both targets and the exp-ou the
        # hardest on the squared diffusion
        qual_reps = 25 if FULL else 8
        results = {"exp_ou": (b, s)}
        cells = [("tanh_ou_shift", EXP_OU_PARAMS, "trig"),
                 ("exp_tanh_ou", EXP_OU_PARAMS, "trig"),
                 ("cir", CIR_PARAMS, "trig"),
                 ("cir", CIR_PARAMS, "poly")]
        for model, mp, basis in cells:
            r = run_table(_full_scale_plan(model, mp, ks=(250,), reps=qual_reps,
                                           basis=basis))
            key = model if basis == "trig" else f"{model}[{basis}]"
            results[key] = (r.cell(model, basis, 250, "b").mean,
                            r.cell(model, basis, 250, "sigma2").mean)
        print("  model errors (b, sigma2):")
        for name, (eb, es) in results.items():
            print(f"    {name:>16s}: {eb:.3e}  {es:.3e}")
        others = [v for k, v in results.items() if not k.startswith("cir")]
        assert all(results["cir"][0] < eb for eb, _ in others)
        assert all(results["cir"][1] < es for _, es in others)
        assert results["exp_ou"][1] == max(es for _, es in [results[k] for k in
                                           ("exp_ou", "tanh_ou_shift",
                                            "exp_tanh_ou", "cir")])


# ---------------------------------------------------------------------------
# 6. selected estimator tracks the best single space
# ---------------------------------------------------------------------------

def test_criterion_6_oracle_recovery():
    with criterion("6 oracle recovery (100 trials)"):
        coll = collection("trig", 13)
        truth_spec = trig_spec(5)
        truth_coeffs = np.array([0.3, 0.5, -0.2, 0.1, 0.4])
        dom = EstimationDomain(0.0, 1.0)
        noise = 0.05
        hits = 0
        for trial in range(100):
            rng = np.random.default_rng(1000 + trial)
            x = rng.random(200)
            y = design_matrix(truth_spec, x) @ truth_coeffs \
                + noise * rng.standard_normal(200)
            sample = RegressionSample(target=DRIFT, x=x, y=y, block_span=1.0,
                                      domain=dom)
            params = PenaltyParams(target=DRIFT, s_sq=noise ** 2, n_points=200,
                                   block_span=1.0)
            out = select(sample, coll, params)

            def truth(v):
                return design_matrix(truth_spec, np.atleast_1d(v)) @ truth_coeffs

            best = min(empirical_error(fit(sample, s), truth, x)[0] for s in coll)
            got = empirical_error(out.chosen_fit, truth, x)[0]
            if got <= 2.0 * best:
                hits += 1
        print(f"  within 2x of the best single space in {hits}/100 trials")
        assert hits >= 90
