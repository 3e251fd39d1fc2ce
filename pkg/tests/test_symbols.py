"""Pseudo-multiplier symbols: application, projection, class checkers."""

import json
import math

import numpy as np
import pytest

from hermband.core import basis_function, random_spectral
from hermband.lp import apply_lp, default_system, spectral_window
from hermband.symbols import (
    Symbol,
    annulus_symbol,
    apply_pseudomultiplier,
    band_sum_symbol,
    check_cancellation_class,
    check_symbol_class,
    compile_expression,
    hermite_multiplier,
    identity_symbol,
    linearize_nonlinearity,
    nonlinearity_power,
    oscillating_symbol,
    reproject,
    separable_symbol,
    symbol_from_descriptor,
)


@pytest.fixture(scope="module")
def sys():
    return default_system()


def test_identity_symbol_is_identity():
    rng = np.random.default_rng(0)
    f = random_spectral(1, 10, rng, real=True)
    pts = np.linspace(-4, 4, 21)[:, None]
    out = apply_pseudomultiplier(identity_symbol(1), f, pts=pts)
    assert np.max(np.abs(out - f.eval_points(pts))) < 1e-12


def test_eigenvalue_multiplier_applies_operator():
    # sigma(x, xi) = xi acts as the operator on eigenfunctions
    sig = hermite_multiplier(lambda xi: xi, 1)
    f = basis_function((0,))
    pts = np.linspace(-3, 3, 13)[:, None]
    out = apply_pseudomultiplier(sig, f, pts=pts)
    assert np.max(np.abs(out - 1.0 * f.eval_points(pts))) < 1e-13


def test_band_multiplier_matches_projection(sys):
    rng = np.random.default_rng(1)
    f = random_spectral(1, 15, rng, real=True)
    j = 2
    sig = hermite_multiplier(lambda xi: float(sys.window(j, math.sqrt(xi))), 1)
    pts = np.linspace(-5, 5, 41)[:, None]
    out = apply_pseudomultiplier(sig, f, pts=pts)
    expect = apply_lp(sys, j, f).eval_points(pts)
    assert np.max(np.abs(out - expect)) < 1e-10


def test_apply_on_grid_returns_grid_function():
    axes = [np.linspace(-3, 3, 17)]
    g = apply_pseudomultiplier(identity_symbol(1), basis_function((0,)), axes=axes)
    vals = basis_function((0,)).eval_points(axes[0][:, None])
    assert np.max(np.abs(g.samples - vals)) < 1e-13


def test_reproject_recovers_eigenfunction():
    h5 = basis_function((5,))
    fK, resid = reproject(lambda pts: h5.eval_points(pts), 1, 10)
    # the residual estimate subtracts two near-equal sums, so its floor is
    # about sqrt(machine epsilon)
    assert resid < 1e-6
    assert fK.sub(h5).norm2() < 1e-10


def test_reproject_multiplier_output_exact():
    rng = np.random.default_rng(2)
    f = random_spectral(1, 8, rng, real=True)
    sig = hermite_multiplier(lambda xi: 1.0 / (1.0 + xi), 1)
    fK, resid = reproject(lambda pts: apply_pseudomultiplier(sig, f, pts=pts), 1, 8)
    assert resid < 1e-6
    expect_coeffs = {xi: c / (1.0 + (2 * xi[0] + 1)) for xi, c in f.coeffs.items()}
    from hermband.core import SpectralFunction
    expect = SpectralFunction(1, 8, expect_coeffs)
    assert fK.sub(expect).norm2() < 1e-10


def test_reproject_zero():
    fK, resid = reproject(lambda pts: np.zeros(pts.shape[0]), 1, 6)
    assert resid == 0.0
    assert fK.norm2() == 0.0


def test_symbol_class_identity_flat():
    sig = identity_symbol(1)
    x = np.linspace(-6, 6, 41)[None, :].T
    consts = check_symbol_class(sig, 0.0, 1.0, 0.0, K_fd=2, N_der=2, x_grid=x)
    # sup |sigma| = 1, every derivative and difference vanishes
    assert consts[((0,), 0)] == pytest.approx(1.0, abs=1e-12)
    for key, c in consts.items():
        if key != ((0,), 0):
            assert c < 1e-8


def test_symbol_class_separable_finite():
    sig = separable_symbol(1)
    x = np.linspace(-4, 4, 33)[:, None]
    consts = check_symbol_class(sig, 0.0, 1.0, 0.0, K_fd=2, N_der=2, x_grid=x)
    for c in consts.values():
        assert math.isfinite(c)


def test_symbol_class_oscillation_grows():
    # e^{i v x}: first x-derivative constant scales with |v|
    x = np.linspace(-3, 3, 25)[:, None]
    c_slow = check_symbol_class(oscillating_symbol(2.0), 0.0, 1.0, 0.0, 1, 1, x)
    c_fast = check_symbol_class(oscillating_symbol(40.0), 0.0, 1.0, 0.0, 1, 1, x)
    assert c_fast[((1,), 0)] > 10.0 * c_slow[((1,), 0)]


def test_cancellation_x_independent():
    sig = hermite_multiplier(lambda xi: 2.0, 1)
    pts = np.array([[0.0], [1.0], [-2.0]])
    consts = check_cancellation_class(sig, 0.0, 2, pts)
    assert consts[(0,)] == pytest.approx(2.0, rel=1e-10)
    for gamma, c in consts.items():
        if sum(gamma) > 0:
            assert c < 1e-6


def test_cancellation_annulus_finite():
    sig = annulus_symbol(1)
    pts = np.array([[0.0], [2.0]])
    consts = check_cancellation_class(sig, 0.0, 1, pts, xi_samples=(0, 1, 4))
    for c in consts.values():
        assert math.isfinite(c)


def test_contraction_multiplier_bounded():
    # |sigma| <= 1 implies ||T f||_2 <= ||f||_2 (Parseval)
    rng = np.random.default_rng(3)
    f = random_spectral(1, 12, rng, real=True)
    sig = hermite_multiplier(lambda xi: xi / (1.0 + xi), 1)
    fK, resid = reproject(lambda pts: apply_pseudomultiplier(sig, f, pts=pts), 1, 12)
    assert resid < 1e-6
    assert fK.norm2() <= f.norm2() * (1.0 + 1e-12)


def test_xi_difference_conventions():
    sig = hermite_multiplier(lambda xi: xi * xi, 1)
    pts = np.array([[0.0]])
    # second forward difference of xi^2 is exactly 2 (index) and 8 (lambda)
    assert float(np.real(sig.xi_difference(pts, 5.0, 2, "index")[0])) == pytest.approx(2.0)
    assert float(np.real(sig.xi_difference(pts, 5.0, 2, "lambda")[0])) == pytest.approx(8.0)


def test_linearize_identity_nonlinearity(sys):
    rng = np.random.default_rng(4)
    f = random_spectral(1, 8, rng, real=True)
    H = nonlinearity_power(1)
    J = sys.coverage_level(2.0 * 8 + 1)
    sig = linearize_nonlinearity(H, f, sys, J)
    pts = np.linspace(-4, 4, 21)[:, None]
    out = apply_pseudomultiplier(sig, f, pts=pts)
    assert np.max(np.abs(out - f.eval_points(pts))) < 1e-12


def test_linearize_square_reproduces_h_of_f(sys):
    rng = np.random.default_rng(5)
    f = random_spectral(1, 6, rng, real=True)
    H = nonlinearity_power(2)
    J = sys.coverage_level(2.0 * 6 + 1)
    sig = linearize_nonlinearity(H, f, sys, J)
    pts = np.linspace(-4, 4, 33)[:, None]
    out = np.real(apply_pseudomultiplier(sig, f, pts=pts))
    expect = np.real(f.eval_points(pts)) ** 2
    assert np.max(np.abs(out - expect)) < 1e-6


def test_linearize_rejects_nonvanishing_at_zero(sys):
    from hermband.symbols import Nonlinearity
    H = Nonlinearity(lambda u: u + 1.0, lambda u: np.ones_like(u))
    f = basis_function((0,))
    with pytest.raises(ValueError):
        linearize_nonlinearity(H, f, sys, 3)


def test_linearize_rejects_complex(sys):
    rng = np.random.default_rng(6)
    f = random_spectral(1, 4, rng, real=False)
    with pytest.raises(ValueError):
        linearize_nonlinearity(nonlinearity_power(2), f, sys, 3)


def test_compile_expression_basic():
    ev = compile_expression("exp(-xi) * (1 + x1**2)", 1)
    pts = np.array([[2.0]])
    assert complex(ev(pts, 1.0)[0]) == pytest.approx(math.exp(-1.0) * 5.0, rel=1e-14)


def test_compile_expression_rejects_calls():
    with pytest.raises(ValueError):
        compile_expression("__import__('os')", 1)(np.zeros((1, 1)), 0.0)
    with pytest.raises(ValueError):
        compile_expression("open('x')", 1)(np.zeros((1, 1)), 0.0)


def test_symbol_descriptor_roundtrip(tmp_path, sys):
    from hermband.symbols import load_symbol
    d = {"kind": "custom-expression", "dim": 1, "expression": "exp(-xi/8) * cos(x1)"}
    path = tmp_path / "sym.json"
    path.write_text(json.dumps(d))
    sig = load_symbol(path)
    pts = np.array([[0.5]])
    direct = math.exp(-2.0 / 8.0) * math.cos(0.5)
    assert complex(sig(pts, 2.0)[0]) == pytest.approx(direct, rel=1e-14)


def test_symbol_descriptor_kinds(sys):
    for d in ({"kind": "separable"}, {"kind": "annulus"},
              {"kind": "band-sum"}, {"kind": "multiplier", "expression": "1/(1+xi)"}):
        sig = symbol_from_descriptor(d, sys)
        val = sig(np.zeros((1, 1)), 3.0)
        assert np.all(np.isfinite(np.abs(val)))
    with pytest.raises(ValueError):
        symbol_from_descriptor({"kind": "nope"})


def test_band_sum_symbol_growth_attached(sys):
    sig = band_sum_symbol(sys, beta=-1.0)
    assert sig.growth is not None
    g = sig.growth(np.array([[10.0]]), 4.0)
    assert 0.0 < float(g[0]) < 1.0


def test_numeric_x_derivative_matches_analytic():
    # sin(x) e^{-xi}: compare Richardson FD against the exact derivative
    sig = Symbol(lambda pts, xi: np.sin(pts[:, 0]) * math.exp(-xi), 1)
    pts = np.array([[0.3], [1.1]])
    got = np.real(sig.x_derivative(pts, 2.0, (1,)))
    expect = np.cos(pts[:, 0]) * math.exp(-2.0)
    assert np.max(np.abs(got - expect)) < 1e-8
