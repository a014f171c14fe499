import math

import numpy as np
import pytest

from lti.shearlet import (
    CONE_HORIZONTAL,
    CONE_LOWPASS,
    CONE_VERTICAL,
    ConfigurationError,
    ShearletSystem,
    SubbandIndex,
    adjoint,
    build_system,
    default_levels,
    forward,
    ordering_hash,
    subband_count,
    subband_list,
    subband_orientation,
)

# Enumeration of the reference 512-grid level vector, pinned so that any
# change to the subband ordering is caught before it can scramble stored
# coefficients or trained-model channels.
REFERENCE_LEVELS = (0, 0, 1, 2, 2)
REFERENCE_COUNT = 59
REFERENCE_HASH = "65347d29e3c5a7cbd5e462674687f5259da5c14c2d3206a47f1f4255fcb4b213"


@pytest.fixture(scope="module")
def sys64():
    return build_system(64)


def _enumerate_bands(levels):
    # Independent brute-force enumeration: one lowpass band, then for every
    # scale and cone each integer shear with |k| <= 2**s.
    bands = [(-1, 0, CONE_LOWPASS)]
    for j, s in enumerate(levels):
        for cone in (CONE_HORIZONTAL, CONE_VERTICAL):
            for k in range(-(2**s), 2**s + 1):
                bands.append((j, k, cone))
    return bands


@pytest.mark.parametrize(
    "levels",
    [(0,), (1,), (0, 1), (0, 1, 2), (2, 0, 1), REFERENCE_LEVELS],
)
def test_subband_count_matches_enumeration(levels):
    enum = _enumerate_bands(levels)
    assert subband_count(levels) == len(enum)
    assert [(b.scale, b.shear, b.cone) for b in subband_list(levels)] == enum


def test_reference_level_vector_count_and_hash():
    assert subband_count(REFERENCE_LEVELS) == REFERENCE_COUNT
    assert ordering_hash(REFERENCE_LEVELS) == REFERENCE_HASH
    assert ordering_hash((0, 1, 2)) != REFERENCE_HASH


def test_default_levels_frozen():
    assert default_levels(8) == (0,)
    assert default_levels(32) == (0,)
    assert default_levels(64) == (0, 1)
    assert default_levels(128) == (0, 1, 2)
    assert default_levels(256) == (0, 1, 2, 2)
    assert default_levels(512) == REFERENCE_LEVELS
    assert default_levels(1024) == (0, 0, 0, 1, 2, 2)


@pytest.mark.parametrize("n,levels", [(32, (0,)), (64, None), (128, (0, 1, 2))])
def test_partition_of_unity(n, levels):
    system = build_system(n, levels)
    total = np.einsum("sij,sij->ij", system.windows, system.windows)
    assert np.abs(total - 1.0).max() <= 1e-10


def test_system_is_cached(sys64):
    assert build_system(64) is sys64
    assert build_system(64, (0, 1)) is sys64


def test_parseval_and_roundtrip(sys64):
    rng = np.random.default_rng(7)
    for _ in range(5):
        f = rng.standard_normal((64, 64))
        coeffs = forward(sys64, f)
        energy_gap = abs(np.sum(coeffs**2) - np.sum(f**2)) / np.sum(f**2)
        assert energy_gap <= 1e-10
        rec = adjoint(sys64, coeffs)
        assert np.linalg.norm(rec - f) <= 1e-10 * np.linalg.norm(f)


def test_adjoint_identity(sys64):
    rng = np.random.default_rng(8)
    f = rng.standard_normal((64, 64))
    g = rng.standard_normal((64, 64, sys64.n_subbands))
    gap = abs(np.vdot(forward(sys64, f), g) - np.vdot(f, adjoint(sys64, g)))
    assert gap <= 1e-10 * np.linalg.norm(forward(sys64, f)) * np.linalg.norm(g)


def test_coefficients_of_real_images_are_real(sys64):
    # White-box: without the final real cast the imaginary part must vanish,
    # which is what the Nyquist-row symmetrization guarantees.
    rng = np.random.default_rng(9)
    spectrum = np.fft.fft2(rng.standard_normal((64, 64)))
    residue = max(
        np.abs(np.fft.ifft2(spectrum * w).imag).max() for w in sys64.windows
    )
    assert residue <= 1e-10


def test_window_supports_stay_in_their_cones(sys64):
    freq = np.abs(np.fft.fftfreq(64) * 64)
    xi1 = np.tile(freq[np.newaxis, :], (64, 1))
    xi2 = np.tile(freq[:, np.newaxis], (1, 64))
    for band, window in zip(sys64.index, sys64.windows):
        support = window != 0
        if band.cone == CONE_HORIZONTAL:
            assert np.all(xi2[support] <= xi1[support])
        elif band.cone == CONE_VERTICAL:
            assert np.all(xi1[support] <= xi2[support])


def test_pure_sinusoid_lands_in_one_subband(sys64):
    # Frequency (16, 0) sits where the scale-0 horizontal k=0 window is
    # exactly 1, so a pure cosine at that frequency excites only that band.
    x = np.arange(64)
    horizontal = np.cos(2 * np.pi * 16 * x[np.newaxis, :] / 64) * np.ones((64, 1))
    vertical = horizontal.T.copy()
    for image, cone in ((horizontal, CONE_HORIZONTAL), (vertical, CONE_VERTICAL)):
        energies = np.sum(forward(sys64, image) ** 2, axis=(0, 1))
        top = sys64.index[int(np.argmax(energies))]
        assert top == SubbandIndex(0, 0, cone)
        assert energies.max() / energies.sum() >= 0.99


def test_subband_ordering_frozen(sys64):
    assert sys64.index[0] == SubbandIndex(-1, 0, CONE_LOWPASS)
    assert sys64.index[1] == SubbandIndex(0, -1, CONE_HORIZONTAL)
    assert sys64.index[4] == SubbandIndex(0, -1, CONE_VERTICAL)
    assert sys64.index[7] == SubbandIndex(1, -2, CONE_HORIZONTAL)
    assert sys64.index[16] == SubbandIndex(1, 2, CONE_VERTICAL)
    assert sys64.n_subbands == 17
    assert sys64.ordering_hash == ordering_hash((0, 1))


def test_scale_slices_partition_positions(sys64):
    groups = sys64.scale_slices()
    assert groups[-1] == [0]
    flat = sorted(pos for posns in groups.values() for pos in posns)
    assert flat == list(range(sys64.n_subbands))


def test_orientation_values(sys64):
    assert subband_orientation(sys64, SubbandIndex(0, 0, CONE_HORIZONTAL)) == 0.0
    assert subband_orientation(sys64, SubbandIndex(0, 1, CONE_HORIZONTAL)) == pytest.approx(math.pi / 4)
    assert subband_orientation(sys64, SubbandIndex(0, -1, CONE_HORIZONTAL)) == pytest.approx(-math.pi / 4)
    assert subband_orientation(sys64, SubbandIndex(0, 1, CONE_VERTICAL)) == pytest.approx(math.pi / 4)
    assert subband_orientation(sys64, SubbandIndex(1, 0, CONE_VERTICAL)) == pytest.approx(math.pi / 2)
    assert subband_orientation(sys64, SubbandIndex(1, 1, CONE_HORIZONTAL)) == pytest.approx(math.atan(0.5))
    # Vertical-cone negative shears fold past +pi/2 into negative angles.
    assert subband_orientation(sys64, SubbandIndex(1, -1, CONE_VERTICAL)) == pytest.approx(-(math.pi / 2 - math.atan(0.5)))
    # All orientations stay in the half-open interval.
    for band in sys64.index[1:]:
        theta = subband_orientation(sys64, band)
        assert -math.pi / 2 < theta <= math.pi / 2


def test_orientation_monotone_in_shear(sys64):
    # Scale 1 has shear level 1 in the 64-grid default system.
    angles = [
        subband_orientation(sys64, SubbandIndex(1, k, CONE_HORIZONTAL))
        for k in range(-2, 3)
    ]
    assert angles == sorted(angles)


def test_orientation_rejects_bad_bands(sys64):
    with pytest.raises(ValueError):
        subband_orientation(sys64, SubbandIndex(-1, 0, CONE_LOWPASS))
    with pytest.raises(ValueError):
        subband_orientation(sys64, SubbandIndex(5, 0, CONE_HORIZONTAL))
    with pytest.raises(ValueError):
        subband_orientation(sys64, SubbandIndex(0, 2, CONE_HORIZONTAL))


def test_build_rejects_bad_configurations():
    with pytest.raises(ConfigurationError):
        build_system(6)
    with pytest.raises(ConfigurationError):
        build_system(65)
    with pytest.raises(ConfigurationError):
        build_system(64, ())
    with pytest.raises(ConfigurationError):
        build_system(64, (0, -1))
    with pytest.raises(ConfigurationError):
        build_system(16, (0, 0, 0))  # three scales exceed log2(16) - 2


def test_apply_rejects_wrong_shapes(sys64):
    with pytest.raises(ConfigurationError):
        forward(sys64, np.zeros((32, 32)))
    with pytest.raises(ConfigurationError):
        adjoint(sys64, np.zeros((64, 64, 3)))


def test_lowpass_carries_the_mean(sys64):
    flat = np.full((64, 64), 3.7)
    coeffs = forward(sys64, flat)
    energies = np.sum(coeffs**2, axis=(0, 1))
    assert energies[0] / energies.sum() >= 1.0 - 1e-12
