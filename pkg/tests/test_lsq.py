import numpy as np
import pytest

from stovol import (
    DRIFT,
    EstimationDomain,
    FitError,
    RegressionSample,
    design_matrix,
    empirical_error,
    evaluate,
    fit,
    trig_spec,
)

UNIT = EstimationDomain(lo=0.0, hi=1.0)


def _sample(x, y, domain=UNIT, target=DRIFT):
    return RegressionSample(target=target, x=np.asarray(x, dtype=float),
                            y=np.asarray(y, dtype=float), block_span=0.5,
                            domain=domain)


def test_constant_space_fits_mean_and_variance():
    rng = np.random.default_rng(0)
    y = rng.standard_normal(200) + 3.0
    f = fit(_sample(rng.random(200), y), trig_spec(1))
    assert f.coeffs[0] == pytest.approx(y.mean(), rel=1e-12)
    assert f.contrast == pytest.approx(y.var(), rel=1e-10)


def test_in_span_target_interpolates_to_zero_contrast():
    rng = np.random.default_rng(1)
    x = rng.random(80)
    spec = trig_spec(7)
    coeffs = np.array([0.4, -0.3, 0.2, 0.1, -0.5, 0.25, 0.05])
    y = design_matrix(spec, x) @ coeffs
    f = fit(_sample(x, y), spec)
    assert f.contrast < 1e-26
    np.testing.assert_allclose(f.coeffs, coeffs, rtol=1e-9)


def test_against_normal_equations_oracle():
    # explicit Gram-inverse solve on 50 random instances, M=40, D=7
    rng = np.random.default_rng(123)
    for _ in range(50):
        x = rng.random(40)
        y = rng.standard_normal(40) + 2.0 * x
        spec = trig_spec(7)
        f = fit(_sample(x, y), spec)
        phi = design_matrix(spec, x)
        oracle = np.linalg.solve(phi.T @ phi, phi.T @ y)
        np.testing.assert_allclose(f.coeffs, oracle, rtol=1e-8)


def test_contrast_recomputes_from_coefficients():
    rng = np.random.default_rng(2)
    x, y = rng.random(120), rng.standard_normal(120)
    f = fit(_sample(x, y), trig_spec(5))
    resid = y - design_matrix(f.spec, x) @ f.coeffs
    again = resid @ resid / x.size
    assert f.contrast == pytest.approx(again, rel=1e-10)


def test_contrast_monotone_under_nesting():
    rng = np.random.default_rng(3)
    x, y = rng.random(150), rng.standard_normal(150)
    contrasts = [fit(_sample(x, y), trig_spec(d)).contrast for d in (1, 3, 5, 7, 9)]
    for small, large in zip(contrasts, contrasts[1:]):
        # projection onto a larger space cannot raise the contrast; the tiny
        # epsilon only covers floating-point roundoff
        assert large <= small * (1.0 + 1e-12) + 1e-15


def test_fit_restricts_to_domain_points():
    dom = EstimationDomain(lo=0.2, hi=0.8)
    x = np.array([0.0, 0.3, 0.5, 0.7, 1.0])
    y = np.array([100.0, 1.0, 1.0, 1.0, -50.0])  # wild points fall outside
    f = fit(_sample(x, y, domain=dom), trig_spec(1))
    assert f.n_used == 3
    assert f.coeffs[0] == pytest.approx(1.0, rel=1e-14)
    assert f.contrast == pytest.approx(0.0, abs=1e-28)


def test_fit_errors():
    dom = EstimationDomain(lo=0.2, hi=0.4)
    with pytest.raises(FitError):
        fit(_sample([0.6, 0.9], [1.0, 2.0], domain=dom), trig_spec(1))
    with pytest.raises(FitError):
        fit(_sample([0.3, 0.35], [np.nan, 1.0], domain=dom), trig_spec(1))
    with pytest.raises(FitError):
        fit(_sample([0.3, 0.35], [1.0, 2.0], domain=None), trig_spec(1))


def test_evaluate_outside_domain_is_zero():
    dom = EstimationDomain(lo=1.0, hi=2.0)
    rng = np.random.default_rng(4)
    x = 1.0 + rng.random(50)
    f = fit(_sample(x, np.ones(50), domain=dom), trig_spec(3))
    assert evaluate(f, 0.5) == 0.0
    assert evaluate(f, 2.5) == 0.0
    np.testing.assert_allclose(evaluate(f, np.array([1.2, 1.9])), 1.0, rtol=1e-12)


def test_evaluate_reproduces_fitted_values():
    rng = np.random.default_rng(5)
    x, y = rng.random(90), rng.standard_normal(90)
    f = fit(_sample(x, y), trig_spec(9))
    fitted = design_matrix(f.spec, x) @ f.coeffs
    np.testing.assert_allclose(evaluate(f, x), fitted, atol=1e-12)


def test_idempotent_projection():
    rng = np.random.default_rng(6)
    x, y = rng.random(100), rng.standard_normal(100)
    f1 = fit(_sample(x, y), trig_spec(7))
    fitted = evaluate(f1, x)
    f2 = fit(_sample(x, fitted), trig_spec(7))
    np.testing.assert_allclose(evaluate(f2, x), fitted, atol=1e-10)


def test_residuals_orthogonal_to_design():
    rng = np.random.default_rng(7)
    x, y = rng.random(200), rng.standard_normal(200)
    f = fit(_sample(x, y), trig_spec(11))
    phi = design_matrix(f.spec, x)
    resid = y - phi @ f.coeffs
    assert np.max(np.abs(phi.T @ resid)) / x.size < 1e-8


def test_minimum_norm_on_duplicated_points():
    # duplicating every design point leaves the minimum-norm solution alone,
    # including in the rank-deficient case (more columns than distinct points)
    rng = np.random.default_rng(8)
    x = rng.random(5)
    y = rng.standard_normal(5)
    spec = trig_spec(9)  # rank-deficient: D = 9 > 5 points
    f1 = fit(_sample(x, y), spec)
    f2 = fit(_sample(np.tile(x, 2), np.tile(y, 2)), spec)
    assert f1.rank == 5 and f2.rank == 5
    np.testing.assert_allclose(f2.coeffs, f1.coeffs, atol=1e-10)
    np.testing.assert_allclose(evaluate(f2, x), evaluate(f1, x), atol=1e-10)


def test_empirical_error_exact_cases():
    rng = np.random.default_rng(9)
    x = rng.random(60)
    f = fit(_sample(x, np.sin(2 * np.pi * x)), trig_spec(3))
    err, n = empirical_error(f, lambda v: evaluate(f, v), x)
    assert err == 0.0 and n == 60
    err, n = empirical_error(f, lambda v: evaluate(f, v) + 0.7, x)
    assert err == pytest.approx(0.49, rel=1e-12)


def test_empirical_error_counts_only_domain_points():
    dom = EstimationDomain(lo=0.0, hi=1.0)
    x = np.linspace(0.1, 0.9, 30)
    f = fit(_sample(x, np.zeros(30), domain=dom), trig_spec(1))
    design = np.concatenate([x, [5.0, -2.0]])  # two points outside the domain
    err, n = empirical_error(f, lambda v: np.zeros_like(v), design)
    assert n == 30 and err == 0.0
    with pytest.raises(FitError):
        empirical_error(f, lambda v: v, np.array([5.0]))
