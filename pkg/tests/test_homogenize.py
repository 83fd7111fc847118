import numpy as np
import pytest

from zoomfem.multiscale.assembly import Material
from zoomfem.multiscale.experiments.rve import rve_modulus
from zoomfem.multiscale.homogenize import (
    AccumulationMode,
    MMTParams,
    PorePopulation,
    mmt_effective,
    mmt_step,
    mmt_trajectory,
)
from zoomfem.multiscale.levelset import Circle
from zoomfem.multiscale.mesh import Rectangle
from zoomfem.multiscale.protocol import ConfigError, PorosityRangeError


def test_mmt_step():
    assert mmt_step(1.0, 0.0) == 1.0
    assert mmt_step(1.0, 0.086, 3.0) == pytest.approx(0.77986, abs=1e-5)
    assert mmt_step(2.0, 0.5, 1.0) == pytest.approx(1.0)


@pytest.mark.parametrize("porosity", [1.0, 1.5, -0.1])
def test_mmt_step_rejects_bad_porosity(porosity):
    with pytest.raises(PorosityRangeError):
        mmt_step(1.0, porosity)


def test_no_pores_keeps_the_matrix_modulus():
    assert mmt_effective(3.5, PorePopulation([], 10.0)) == 3.5
    assert mmt_trajectory(3.5, PorePopulation([], 10.0)) == []


def test_single_pore_is_the_same_in_both_modes():
    pores = PorePopulation([Circle((1, 1), 0.5)], 10.0)
    a = mmt_effective(1.0, pores, MMTParams(mode=AccumulationMode.INCREMENTAL))
    b = mmt_effective(1.0, pores, MMTParams(mode=AccumulationMode.CUMULATIVE))
    assert a == pytest.approx(b)
    assert a == pytest.approx(mmt_step(1.0, pores.porosity))


def test_modulus_decreases_with_every_pore():
    pores = PorePopulation([Circle((i, 1), 0.2 + 0.05 * i) for i in range(6)], 50.0)
    for mode in AccumulationMode:
        moduli = [e for _, e in mmt_trajectory(2.0, pores, MMTParams(mode=mode))]
        assert np.all(np.diff([2.0] + moduli) < 0)


def test_incremental_mode_ignores_insertion_order():
    pores = PorePopulation([Circle((0, 0), 0.3), Circle((2, 0), 0.6), Circle((4, 0), 0.45)], 20.0)
    forward = mmt_effective(1.0, pores)
    backward = mmt_effective(1.0, pores.reordered([2, 1, 0]))
    assert forward == pytest.approx(backward, rel=1e-14)


def test_cumulative_mode_depends_on_insertion_order():
    params = MMTParams(mode=AccumulationMode.CUMULATIVE)
    pores = PorePopulation([Circle((0, 0), 1.0), Circle((3, 0), 2.0)], 100.0)
    forward = mmt_effective(1.0, pores, params)
    backward = mmt_effective(1.0, pores.reordered([1, 0]), params)
    assert forward != pytest.approx(backward, rel=1e-6)


def test_inside_keeps_pores_centred_in_a_zoom():
    pores = PorePopulation([Circle((0, 0), 0.2), Circle((1.9, 0), 0.3), Circle((5, 5), 0.2)], 100.0)
    inner = pores.inside([Circle((0, 0), 2.0)])
    assert len(inner) == 2
    assert inner.reference_area == pytest.approx(4 * np.pi)
    assert inner.porosity == pytest.approx((0.04 + 0.09) / 4)
    with pytest.raises(ConfigError):
        pores.inside([])


def test_population_must_leave_room_for_matrix():
    with pytest.raises(ConfigError):
        PorePopulation([Circle((0, 0), 1.0)], 3.0)


@pytest.mark.slow
def test_mmt_agrees_with_a_pore_resolving_strip():
    radius = np.sqrt(0.1 / np.pi)
    pores = [Circle((0.5 + i, y), radius) for i in range(5) for y in (0.5, 1.5)]
    domain = Rectangle(0.0, 0.0, 5.0, 2.0)
    estimate = mmt_effective(1.0, PorePopulation(pores, domain.area))
    assert estimate == pytest.approx(0.742, abs=1e-3)
    fem = rve_modulus(pores, domain, 0.05, Material(1.0, 0.0))
    assert fem.porosity == pytest.approx(0.1)
    assert fem.modulus == pytest.approx(estimate, rel=0.15)
