import math

import pytest

import wiball


def test_self_trrs_is_one_and_symmetric():
    scene = wiball.generate_scene(seed=3, direct_path=False)
    a = wiball.synthesize_cir(scene, scene.rx_focal_pos)
    x, y = scene.rx_focal_pos
    b = wiball.synthesize_cir(scene, (x + 0.01, y))
    assert wiball.trrs(a, a) == 1.0
    assert wiball.trrs(a, b) == wiball.trrs(b, a)
    assert 0.0 <= wiball.trrs(a, b) < 1.0


def test_scene_defaults():
    scene = wiball.generate_scene()
    assert len(scene.scatterers) == 200
    assert scene.wavelength == pytest.approx(0.0517, rel=2e-3)


def test_bessel_reference_extrema():
    assert wiball.bessel_reference(0.0, 1.0) == 1.0
    assert wiball.bessel_j0(2.404825557695773) == pytest.approx(0.0, abs=1e-12)


def test_errors_map_to_python_exceptions():
    with pytest.raises(ValueError):
        wiball.generate_scene(n_scatterers=0)
    with pytest.raises(ValueError):
        wiball.trrs(wiball.Cir([0j, 0j]), wiball.Cir([1 + 0j, 0j]))


def test_distance_on_a_short_pass():
    scene = wiball.generate_scene(seed=9, n_scatterers=1000, region_side=150.0,
                                  tx_rx_separation=20.0, direct_path=False, roaming_radius=3.0)
    x, y = scene.rx_focal_pos
    stream = wiball.synthesize_trajectory(scene, [(x - 1.0, y, 0.0), (x + 1.0, y, 2.0)], 0.005,
                                          snr_db=25.0, noise_seed=1)
    distance, speeds = wiball.estimate_distance(stream, scene.wavelength)
    assert distance == pytest.approx(2.0, rel=0.1)
    assert len(speeds) == len(stream)


def test_heading_and_dead_reckoning():
    assert wiball.heading_delta((0.0, 0.0, math.pi / 2), (0.0, 0.0, 1.0), 1.0) == math.pi / 2
    end = wiball.dead_reckon((0.0, 0.0), 0.0, [(1.0, 0.0), (1.0, math.pi / 2)])
    assert end == pytest.approx((1.0, 1.0))
