import numpy as np
import pytest
from scipy.integrate import quad

from nlslab import snapshot
from nlslab.potential import (
    admissibility,
    default_well,
    gaussian_well,
    kato_norm,
    kato_threshold,
    lhalf_norm,
    tabulated,
    zero,
)
from nlslab.spectral import SpectralField, make_grid


@pytest.fixture(scope="module")
def g3():
    return make_grid(3, 32, 8.0)


def test_zero_potential(g3):
    assert kato_norm(zero(), g3) == 0.0
    assert lhalf_norm(zero(), g3) == 0.0
    rep = admissibility(zero(), g3)
    assert rep.admissible and rep.kato_norm_neg == 0.0


def test_threshold_closed_form():
    assert kato_threshold(4) == pytest.approx(4 * np.pi**2, rel=1e-14)
    assert kato_threshold(3) == pytest.approx(3 * 4 * np.pi / 3, rel=1e-14)


def test_rejects_low_dimension():
    g = make_grid(2, 16, 4.0)
    with pytest.raises(ValueError):
        kato_norm(gaussian_well(1.0, 1.0), g)


def test_kato_ball_in_four_dimensions():
    g = make_grid(4, 32, 4.0)
    R = 2.0
    ball = 0.5 * (1 - np.tanh((g.radius - R) / (0.5 * g.dx)))
    v = tabulated(SpectralField(g, -ball))
    exact = 2 * np.pi**2 / 3 * R**3
    assert kato_norm(v, g) == pytest.approx(exact, rel=0.03)


def test_kato_homogeneous(g3):
    v = gaussian_well(1.3, 1.5)
    base = kato_norm(v, g3)
    for c in (-2.0, 0.25, 7.0):
        assert kato_norm(v.scaled(c, g3), g3) == pytest.approx(abs(c) * base, rel=1e-10)


def test_norms_subadditive(g3, rng):
    a = tabulated(SpectralField(g3, rng.normal(size=g3.shape) * np.exp(-(g3.radius**2) / 4)))
    b = tabulated(SpectralField(g3, rng.normal(size=g3.shape) * np.exp(-(g3.radius**2) / 9)))
    ab = tabulated(SpectralField(g3, a.values(g3) + b.values(g3)))
    for fn in (kato_norm, lhalf_norm):
        assert fn(ab, g3) <= fn(a, g3) + fn(b, g3) + 1e-12


def test_lhalf_constant(g3):
    v = tabulated(SpectralField(g3, np.full(g3.shape, -0.3)))
    assert lhalf_norm(v, g3) == pytest.approx(0.3 * g3.volume ** (2 / 3), rel=1e-12)


def test_lhalf_gaussian_matches_radial_quadrature():
    g = make_grid(3, 64, 10.0)
    depth, width = 0.7, 2.0
    radial, _ = quad(lambda r: 4 * np.pi * r**2 * np.exp(-1.5 * r**2 / width**2), 0, np.inf)
    exact = depth * radial ** (2 / 3)
    assert lhalf_norm(gaussian_well(depth, width), g) == pytest.approx(exact, rel=1e-3)


def test_deep_well_inadmissible(g3):
    v = gaussian_well(1.0, 2.0)
    depth = 1.01 * kato_threshold(3) / kato_norm(v, g3)
    rep = admissibility(gaussian_well(depth, 2.0), g3)
    assert rep.kato_norm_neg >= rep.threshold and not rep.admissible


def test_default_well_calibrated(g3):
    v = default_well(g3)
    assert kato_norm(v, g3, negative=True) == pytest.approx(0.5 * kato_threshold(3), rel=1e-10)


def test_admissibility_monotone(g3, rng):
    base = default_well(g3, fraction=0.9).values(g3)
    assert admissibility(tabulated(SpectralField(g3, base)), g3).admissible
    for _ in range(5):
        shrink = rng.uniform(0, 1, size=g3.shape)
        assert admissibility(tabulated(SpectralField(g3, shrink * base)), g3).admissible


def test_tabulated_round_trip_through_snapshot(tmp_path, g3):
    f = SpectralField(g3, default_well(g3).values(g3))
    path = snapshot.write(tmp_path / "v.nlsf", f, 1.5)
    back, ts = snapshot.read(path)
    assert ts == 1.5 and np.array_equal(back.values, f.values)
    assert snapshot.header_grid(path) == g3


def test_snapshot_rejects_garbage(tmp_path, g3):
    f = SpectralField.zeros(g3)
    buf = snapshot.dumps(f)
    with pytest.raises(snapshot.SnapshotError):
        snapshot.loads(b"XXXX" + buf[4:])
    with pytest.raises(snapshot.SnapshotError):
        snapshot.loads(buf[:-16])
