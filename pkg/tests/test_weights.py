import numpy as np
import pytest

from poincare_chaos import (
    check_existence,
    constant_weight,
    make_measure,
    weight_from_grid,
    wlin_compute,
)
from poincare_chaos._quadrature import adaptive_quad
from poincare_chaos.errors import DivisionBlowup, NonPositive


def test_constant_weight_basics():
    w = constant_weight(1.0)
    assert w(0.3) == 1.0
    assert np.all(w(np.array([0.1, 0.7])) == 1.0)
    with pytest.raises(NonPositive):
        constant_weight(0.0)
    m = make_measure("uniform", {"a": 0, "b": 1})
    p = w.weighted_density(m)
    x = np.linspace(0, 1, 11)
    assert np.allclose(p(x), m.pdf(x))


def test_constant_weight_scales_eigenvalues():
    """The bilinear form is linear in w, so w -> 2w doubles every eigenvalue."""
    from poincare_chaos import build_basis
    m = make_measure("uniform", {"a": 0, "b": 1})
    b1 = build_basis(m, constant_weight(1.0), n_modes=3, mesh_size=400, existence_check=False)
    b2 = build_basis(m, constant_weight(2.0), n_modes=3, mesh_size=400, existence_check=False)
    ratio = b2.eigenvalues[1:] / b1.eigenvalues[1:]
    assert np.max(np.abs(ratio - 2.0)) < 1e-10
    assert b2.poincare_constant() == pytest.approx(b1.poincare_constant() / 2, rel=1e-10)


def test_wlin_uniform_01():
    m = make_measure("uniform", {"a": 0, "b": 1})
    w = wlin_compute(m, 1000)
    exact = w.grid * (1 - w.grid) / 2
    assert np.max(np.abs(w.values - exact)) <= 1e-8


def test_wlin_uniform_symmetric():
    m = make_measure("uniform", {"a": -1, "b": 1})
    w = wlin_compute(m, 4000)
    exact = (1 - w.grid**2) / 2
    assert np.max(np.abs(w.values - exact)) <= 1e-8


def test_wlin_exponential_limit():
    """On [0, B] with B large the kernel approaches the identity map x."""
    m = make_measure("truncated_exponential", {"rate": 1}, (0, 20))
    w = wlin_compute(m, 4000)
    mask = w.grid <= 5.0
    assert np.max(np.abs(w.values[mask] - w.grid[mask])) <= 1e-4


@pytest.mark.parametrize("family,params,trunc", [
    ("truncated_gumbel", {"loc": 1013.0, "scale": 558.0}, (500.0, 3000.0)),
    ("truncated_gaussian", {"mean": 30.0, "var": 64.0}, (15.0, 75.0)),
    ("triangular", {"a": 49.0, "c": 50.0, "b": 51.0}, None),
    ("truncated_exponential", {"rate": 1.0}, (0.0, 3.0)),
    ("uniform", {"a": 7.0, "b": 9.0}, None),
])
def test_wlin_defining_identity_and_endpoints(family, params, trunc):
    """(w rho)(x) must equal -int_a^x (y - m) rho(y) dy at the grid nodes."""
    m = make_measure(family, params, trunc)
    w = wlin_compute(m, 4000)
    u = w.values * m.pdf(w.grid)
    scale = max(1.0, np.max(np.abs(u)))
    for idx in np.linspace(1, len(w.grid) - 1, 17, dtype=int):
        ref = -adaptive_quad(lambda y: (y - m.mean) * m.pdf(y), m.a, float(w.grid[idx]))
        assert abs(u[idx] - ref) < 1e-8 * scale
    assert abs(u[0]) < 1e-8 * scale
    assert abs(u[-1]) < 1e-8 * scale
    assert np.all(w.values[1:-1] > 0)


def test_wlin_rejects_interior_vanishing_density():
    m = make_measure("truncated_gaussian", {"mean": 0, "std": 1}, (-8, 8))
    with pytest.raises(DivisionBlowup):
        wlin_compute(m, 4000)


def test_wlin_requires_minimum_steps():
    m = make_measure("uniform", {"a": 0, "b": 1})
    with pytest.raises(ValueError):
        wlin_compute(m, 50)


def test_existence_constant_weight_uniform():
    m = make_measure("uniform", {"a": -1, "b": 1})
    rep = check_existence(m, constant_weight(1.0))
    assert rep.cond_i.status == "holds"
    assert rep.cond_i.estimate == pytest.approx(4.0, abs=1e-6)


def test_existence_legendre_weight():
    """w = 1 - x^2 integrates to a log divergence but its primitive is square-integrable."""
    m = make_measure("uniform", {"a": -1, "b": 1})
    x = np.linspace(-1, 1, 2001)
    rep = check_existence(m, weight_from_grid(x, 1 - x**2))
    assert rep.cond_i.status == "diverges"
    assert rep.cond_ii.status == "holds"
    # int R^2 dmu with R = log((1+x)/(1-x)) equals pi^2/3
    assert rep.cond_ii.estimate == pytest.approx(np.pi**2 / 3, rel=1e-3)


def test_existence_fails_both_conditions():
    m = make_measure("uniform", {"a": -1, "b": 1})
    x = np.linspace(-1, 1, 2001)
    rep = check_existence(m, weight_from_grid(x, (1 - x**2) ** 2))
    assert rep.cond_i.status == "diverges"
    assert rep.cond_ii.status == "diverges"
    assert not rep.any_holds


def test_existence_triangular_unit_weight():
    """With w = 1 a triangular density gives 1/rho ~ 1/t at the endpoints:
    condition (i) log-diverges but its primitive is square-integrable."""
    m = make_measure("triangular", {"a": 49, "c": 50, "b": 51})
    rep = check_existence(m, constant_weight(1.0))
    assert rep.cond_i.status == "diverges"
    assert rep.cond_ii.status == "holds"


def test_existence_triangular_wlin_probe_is_one_sided():
    """With the linear-preserving weight, w*rho ~ t^2 near the endpoints, so
    both sufficient conditions log-diverge; the probe must say so (the basis
    itself is still produced, only the certificate is unavailable)."""
    m = make_measure("triangular", {"a": 49, "c": 50, "b": 51})
    rep = check_existence(m, wlin_compute(m, 4000))
    assert rep.cond_i.status == "diverges"
    assert rep.cond_ii.status == "diverges"


def test_existence_truncated_families_condition_i():
    """Truncated Gumbel and Gaussian have bounded 1/rho, so condition (i) holds."""
    for fam, params, trunc in [
        ("truncated_gumbel", {"loc": 1013, "scale": 558}, (500, 3000)),
        ("truncated_gaussian", {"mean": 30, "var": 64}, (15, 75)),
    ]:
        m = make_measure(fam, params, trunc)
        assert check_existence(m, constant_weight(1.0)).cond_i.status == "holds"


def test_weight_from_grid_rejects_nonpositive_interior():
    x = np.linspace(0, 1, 11)
    vals = np.ones(11)
    vals[5] = -0.1
    with pytest.raises(NonPositive):
        weight_from_grid(x, vals)


def test_export_weight_csv(tmp_path):
    from poincare_chaos.weights import export_weight_csv
    m = make_measure("uniform", {"a": 0, "b": 1})
    w = wlin_compute(m, 200)
    path = tmp_path / "w.csv"
    export_weight_csv(w, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "x,w"
    assert len(lines) == 202
