import math

import numpy as np
import pytest

from heisqc.modulus import (admissibility_check, cap_measure, energy, horizontal_chord, line_integral,
                            phi_band, polar_cap, r_scaling, radial_curve, radial_family_formula,
                            radial_family_modulus, ring_extremal_density, ring_modulus_formula, set_measure,
                            whole_sphere, zero_density)
from heisqc.heis_core import point
from heisqc.sphere_measures import SpherePoint

RINGS = [(0.5, 1.0), (1 / math.e, 1.0), (0.25, 0.5)]


def test_ring_formula_values():
    assert ring_modulus_formula(0.5, 1.0) == pytest.approx(math.pi ** 2 / math.log(2) ** 3, rel=1e-15)
    assert ring_modulus_formula(1 / math.e, 1.0) == pytest.approx(math.pi ** 2, rel=1e-15)


@pytest.mark.parametrize("a,b", RINGS)
def test_ring_energy(a, b, quad):
    assert energy(ring_extremal_density(a, b), quad) == pytest.approx(ring_modulus_formula(a, b), rel=1e-6)


@pytest.mark.parametrize("a,b", RINGS)
def test_ring_admissibility(a, b):
    rho = ring_extremal_density(a, b)
    curves = [radial_curve(SpherePoint(al, 1.0), a, b) for al in (-1.5, 0.0, 0.8, 1.56)]
    rep = admissibility_check(rho, curves)
    assert rep.summary["min_integral"] == pytest.approx(1.0, abs=1e-8)
    assert rep.summary["max_integral"] == pytest.approx(1.0, abs=1e-8)
    assert line_integral(rho.scaled(2.0), curves[0]) == pytest.approx(2.0, abs=1e-8)


def test_chords_are_admissible():
    rho = ring_extremal_density(0.5, 1.0)
    chords = [horizontal_chord(point(0.05, 0.02, 0.01), th, 0.5, 1.0) for th in np.linspace(0, 6, 5)]
    assert admissibility_check(rho, chords).passed


def test_energy_scales_quartically(quad):
    rho = ring_extremal_density(0.5, 1.0)
    assert energy(rho.scaled(1.5), quad) / energy(rho, quad) == pytest.approx(1.5 ** 4, rel=1e-12)
    assert energy(zero_density(), quad) == 0.0


@pytest.mark.parametrize("E,exact", [(whole_sphere(), math.pi ** 2), (phi_band(), math.pi ** 2 / 2),
                                     (polar_cap(0.6), cap_measure(0.6)),
                                     (polar_cap(-0.3, north=False), cap_measure(-0.3, north=False))])
def test_set_measures_and_family_moduli(E, exact, quad):
    assert set_measure(E, quad) == pytest.approx(exact, rel=1e-6)
    for r in (0.5, 0.25):
        assert radial_family_modulus(E, r, quad) == pytest.approx(radial_family_formula(E, r, quad), rel=1e-6)


def test_cap_measures_partition_sphere():
    assert cap_measure(0.2) + cap_measure(0.2, north=False) == pytest.approx(math.pi ** 2, rel=1e-15)


def test_r_scaling_exponent(quad):
    assert r_scaling(whole_sphere(), quad=quad).summary["exponent"] == pytest.approx(-3.0, abs=0.02)


def test_modulus_monotone_in_set(quad):
    values = [radial_family_modulus(E, 0.5, quad) for E in (polar_cap(1.0), polar_cap(0.6), whole_sphere())]
    assert values[0] <= values[1] <= values[2]
