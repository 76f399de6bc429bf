import numpy as np
import pytest

from poromix.physics import (
    MaterialParams,
    PermeabilityError,
    PermeabilityLaw,
    ProblemData,
    fluid_content,
    hooke,
)

RNG = np.random.default_rng(41002)


def test_material_params_validation():
    MaterialParams(lam=1.0, mu=1.0)
    with pytest.raises(ValueError):
        MaterialParams(lam=1.0, mu=0.0)
    with pytest.raises(ValueError):
        MaterialParams(lam=-1.0, mu=1.0)
    with pytest.raises(ValueError):
        MaterialParams(lam=1.0, mu=1.0, c0=0.0)
    with pytest.raises(ValueError):
        MaterialParams(lam=1.0, mu=1.0, alpha=1.5)
    with pytest.raises(ValueError):
        MaterialParams(lam=1.0, mu=1.0, mu_f=-1.0)
    with pytest.raises(ValueError):
        MaterialParams(mu=1.0)


def test_young_poisson_conversion():
    p = MaterialParams.from_young_poisson(1e3, 1.0 / 3.0)
    assert p.lam == pytest.approx(750.0)
    assert p.mu == pytest.approx(375.0)


def test_fluid_content():
    p = MaterialParams(lam=1.0, mu=1.0, c0=0.25, alpha=0.25)
    assert fluid_content(p, tr_d=0.0, p=1.0) == pytest.approx(0.25)
    assert fluid_content(p, tr_d=2.0, p=0.0) == pytest.approx(0.5)
    # porosity variant: phi0 + (1 - phi0)(c0 p + alpha tr d)
    assert fluid_content(p, tr_d=0.0, p=0.0, phi0=0.3) == pytest.approx(0.3)


def test_exponential_law():
    p = MaterialParams(lam=1.0, mu=1.0, mu_f=1e-3)
    law = PermeabilityLaw("exponential", k0=1e-9, k1=1e-6, k2=-0.5)
    assert law(p, 0.0) == pytest.approx(1.001e-3)
    assert law.derivative(p, 0.0) == pytest.approx(1e-6 * -0.5 / 1e-3)


def test_kozeny_law():
    p = MaterialParams(lam=1.0, mu=1.0, mu_f=1.0)
    law = PermeabilityLaw("kozeny", k0=0.1, k1=0.1)
    assert law(p, 0.0) == pytest.approx(0.1)
    assert law(p, 0.5) == pytest.approx(0.15)
    assert law.derivative(p, 0.0) == pytest.approx(0.0)


def test_constant_and_scaled_exp():
    p = MaterialParams(lam=1.0, mu=1.0, mu_f=1e-3)
    const = PermeabilityLaw("constant", kappa0=5.1e-8)
    assert const(p, 123.0) == pytest.approx(5.1e-5)
    assert const.derivative(p, 0.3) == 0.0
    law = PermeabilityLaw("scaled-exp", kappa0=5.1e-8, k0=5.0, k1=30.0)
    assert law(p, 0.0) == pytest.approx(5.0 * 5.1e-8 / 1e-3)
    assert law(p, 0.1) == pytest.approx(5.0 * 5.1e-8 * np.exp(3.0) / 1e-3)


def test_derivative_matches_finite_differences():
    p = MaterialParams(lam=1.0, mu=1.0, mu_f=2.0)
    laws = [
        PermeabilityLaw("exponential", k0=0.01, k1=0.2, k2=1.5),
        PermeabilityLaw("kozeny", k0=0.1, k1=0.1),
        PermeabilityLaw("scaled-exp", kappa0=2.0, k0=0.5, k1=3.0),
    ]
    zs = np.linspace(-0.5, 0.8, 14)
    h = 1e-6
    for law in laws:
        fd = (law(p, zs + h) - law(p, zs - h)) / (2.0 * h)
        assert np.abs(law.derivative(p, zs) - fd).max() < 1e-7 * max(
            1.0, np.abs(fd).max()
        )


def test_lipschitz_on_bounded_interval():
    p = MaterialParams(lam=1.0, mu=1.0)
    law = PermeabilityLaw("kozeny", k0=0.1, k1=0.1)
    zs = np.linspace(-0.5, 0.8, 40)
    L = np.abs(law.derivative(p, zs)).max()
    for _ in range(50):
        z1, z2 = RNG.uniform(-0.5, 0.8, size=2)
        assert abs(law(p, z1) - law(p, z2)) <= (L + 1e-12) * abs(z1 - z2) + 1e-12


def test_kozeny_clamp_and_pole():
    p = MaterialParams(lam=1.0, mu=1.0)
    law = PermeabilityLaw("kozeny", k0=0.1, k1=0.1)
    before = law.clamp_count
    law(p, np.array([0.0, 1.5, 2.0]))
    assert law.clamp_count == before + 2


def test_nonpositive_permeability_rejected():
    p = MaterialParams(lam=1.0, mu=1.0)
    with pytest.raises(PermeabilityError):
        PermeabilityLaw("constant", kappa0=-1.0)(p, 0.0)
    with pytest.raises(PermeabilityError):
        PermeabilityLaw("exponential", k0=0.0, k1=0.0, k2=1.0)(p, 0.0)
    with pytest.raises(ValueError):
        PermeabilityLaw("does-not-exist")


def test_hooke():
    p = MaterialParams(lam=1.0, mu=1.0)
    assert np.allclose(hooke(p, np.eye(2)), 4.0 * np.eye(2))
    assert np.allclose(hooke(p, np.zeros((2, 2))), 0.0)
    p2 = MaterialParams(lam=14388.0, mu=1102.0)
    out = hooke(p2, np.diag([1.0, 0.0]))
    assert np.allclose(out, np.diag([16592.0, 14388.0]))
    with pytest.raises(ValueError):
        hooke(p, np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_hooke_positive_definite():
    p = MaterialParams(lam=0.7, mu=1.3)
    for _ in range(30):
        a, b, c = RNG.standard_normal(3)
        d = np.array([[a, c], [c, b]])
        energy = float(np.tensordot(d, hooke(p, d)))
        assert energy >= 2.0 * p.mu * float((d * d).sum()) - 1e-12
        if np.abs(d).max() > 0:
            assert energy > 0.0


def test_problem_data_tag_conflicts():
    ProblemData(dirichlet_displacement={"left": None}, essential_traction={"right": None})
    with pytest.raises(ValueError):
        ProblemData(dirichlet_displacement={"left": None}, essential_traction={"left": None})
    with pytest.raises(ValueError):
        ProblemData(dirichlet_displacement={"left": None}, slide=("left",))
    with pytest.raises(ValueError):
        ProblemData(flux={"top": None}, essential_pressure={"top": None})
