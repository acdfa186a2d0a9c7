import numpy as np
import pytest
import sympy

from coprimeblur.encoder import (BlurKernel, CoprimePair, coprimality_check, degrade_bits, encode_frame, frame_seed,
                                 generate_coprime_pair, quantize_frame)
from coprimeblur.errors import FrameTooSmall, NotQuantized, RangeExceeded
from coprimeblur.frames import Frame

from conftest import X, conv_loop, kernel_pair


def test_blur_kernel_validation():
    with pytest.raises(ValueError):
        BlurKernel(np.ones((2, 2)) / 4)
    with pytest.raises(ValueError):
        BlurKernel(np.ones((3, 5)) / 15)
    with pytest.raises(ValueError):
        BlurKernel(np.array([[0.5, 0.6, -0.1]] * 3) / 3)
    with pytest.raises(ValueError):
        BlurKernel(np.ones((3, 3)))
    k = BlurKernel.normalized(np.arange(1, 10).reshape(3, 3))
    assert k.t == 3
    assert abs(k.weights.sum() - 1) < 1e-12
    with pytest.raises(ValueError):
        k.weights[0, 0] = 1


def test_generate_deterministic():
    a = generate_coprime_pair(9, 42)
    b = generate_coprime_pair(9, 42)
    assert a.coprimality_margin > 1e-6
    assert np.array_equal(a.k1.weights, b.k1.weights)
    assert np.array_equal(a.k2.weights, b.k2.weights)
    assert not np.array_equal(a.k1.weights, generate_coprime_pair(9, 43).k1.weights)


def test_generate_normalized():
    pair = generate_coprime_pair(3, 7)
    for k in (pair.k1, pair.k2):
        assert k.weights.shape == (3, 3)
        assert abs(k.weights.sum() - 1) <= 1e-9
        assert np.all(k.weights >= 0)


@pytest.mark.parametrize("t", [2, 1, 65, 8])
def test_generate_rejects_bad_width(t):
    with pytest.raises(ValueError):
        generate_coprime_pair(t, 0)


def test_generate_no_failures_over_many_seeds():
    for seed in range(1000):
        generate_coprime_pair(9, seed, max_retries=1)


def test_coprimality_deltas():
    d1 = np.zeros((3, 3))
    d1[1, 1] = 1
    d2 = np.zeros((3, 3))
    d2[0, 0] = 1
    margin = coprimality_check(d1, d2)
    assert margin > 1e-6
    # exact oracle: z1*z2 and 1 restricted at z2 = r give r*z1 and 1, resultant 1 for any r
    r = sympy.Symbol("r")
    assert sympy.resultant(r * X, sympy.Integer(1), X) == 1


def test_coprimality_identical():
    k = generate_coprime_pair(5, 1).k1
    assert coprimality_check(k, k) <= 1e-12


def test_coprimality_shared_factor(rng):
    s = rng.random((2, 2))
    k1 = conv_loop(rng.random((2, 2)), s)
    k2 = conv_loop(rng.random((2, 2)), s)
    assert coprimality_check(k1, k2) <= 1e-8


def test_encode_identity():
    latent = Frame(np.array([[1.0, 2.0], [3.0, 4.0]]))
    one = BlurKernel(np.ones((1, 1)))
    bp = encode_frame(latent, CoprimePair(one, one, 1.0, 0))
    assert np.array_equal(bp.public_frame.planes, latent.planes)
    assert np.array_equal(bp.private_frame.planes, latent.planes)


def test_encode_constant_interior():
    bp = encode_frame(Frame(np.ones((8, 8))), generate_coprime_pair(3, 0))
    for f in (bp.public_frame, bp.private_frame):
        assert f.planes.shape == (1, 10, 10)
        assert np.max(np.abs(f.planes[0, 2:-2, 2:-2] - 1)) <= 1e-9


def test_encode_matches_loop_oracle(rng):
    latent = Frame(rng.random((16, 16)))
    pair = generate_coprime_pair(3, 5)
    bp = encode_frame(latent, pair)
    assert np.max(np.abs(bp.public_frame.planes[0] - conv_loop(latent.planes[0], pair.k1.weights))) <= 1e-12
    assert np.max(np.abs(bp.private_frame.planes[0] - conv_loop(latent.planes[0], pair.k2.weights))) <= 1e-12
    assert bp.kernel_width_hint == 3
    assert bp.pair_id


def test_encode_mass_and_swap(rng):
    latent = Frame(rng.random((3, 20, 24)))
    pair = generate_coprime_pair(5, 3)
    bp = encode_frame(latent, pair)
    for c in range(3):
        s = latent.planes[c].sum()
        assert abs(bp.public_frame.planes[c].sum() - s) <= 1e-6 * s
    swapped = encode_frame(latent, CoprimePair(pair.k2, pair.k1, pair.coprimality_margin, pair.seed))
    assert np.array_equal(swapped.public_frame.planes, bp.private_frame.planes)
    assert np.array_equal(swapped.private_frame.planes, bp.public_frame.planes)
    again = encode_frame(latent, generate_coprime_pair(5, 3))
    assert again.public_frame.planes.astype(np.float32).tobytes() == bp.public_frame.planes.astype(np.float32).tobytes()


def test_encode_too_small():
    with pytest.raises(FrameTooSmall):
        encode_frame(Frame(np.ones((4, 9))), generate_coprime_pair(5, 0))


def test_frame_seed_varies():
    assert frame_seed(1, 0) != frame_seed(1, 1)
    assert frame_seed(1, 0) == frame_seed(1, 0)


def test_quantize():
    f = Frame(np.full((2, 2), 0.5))
    q = quantize_frame(f, "u8")
    assert q.bit_depth == "u8"
    assert np.all(q.planes == 128 / 255)
    assert np.array_equal(quantize_frame(q, "u8").planes, q.planes)
    with pytest.raises(RangeExceeded):
        quantize_frame(Frame(np.full((2, 2), 1.01)), "u8")
    with pytest.raises(ValueError):
        quantize_frame(f, "float32")


def test_quantize_u16_error_bound(rng):
    f = Frame(rng.random((32, 32)))
    q = quantize_frame(f, "u16")
    assert np.max(np.abs(q.planes - f.planes)) <= 0.5 / 65535 + 1e-15


def test_degrade_bits():
    f = Frame(np.array([[0b10110111 / 255]]), "u8")
    assert np.array_equal(degrade_bits(f, 0).planes, f.planes)
    assert round(degrade_bits(f, 3).planes[0, 0, 0] * 255) == 0b10110000
    with pytest.raises(ValueError):
        degrade_bits(f, 8)
    with pytest.raises(NotQuantized):
        degrade_bits(Frame(np.zeros((2, 2))), 1)


def test_degrade_u16():
    f = Frame(np.array([[0x0102 / 65535]]), "u16")
    assert round(degrade_bits(f, 4).planes[0, 0, 0] * 65535) == 0x0100


def test_kernel_pair_helper_is_coprime_generic(rng):
    pair = kernel_pair(rng.random((3, 3)), rng.random((3, 3)))
    assert coprimality_check(pair.k1, pair.k2) > 1e-6
