import itertools

import numpy as np
import pytest

from qcseg import CrfParams, ValidationError, refine
from qcseg.crf import refine_labelmap


def _kernel(p, q, image, params):
    (py, px), (qy, qx) = p, q
    d2 = (py - qy) ** 2 + (px - qx) ** 2
    k = params.w_smooth * np.exp(-d2 / (2 * params.theta_spatial**2))
    di2 = (image[p] - image[q]) ** 2
    k += params.w_appearance * np.exp(
        -d2 / (2 * params.theta_bilateral_spatial**2)
        - di2 / (2 * params.theta_bilateral_intensity**2)
    )
    return k


def gibbs_map_oracle(probs, image, params):
    """Exact MAP via enumeration of all label assignments (binary, 3x3)."""
    C, H, W = probs.shape
    assert C == 2 and H * W <= 12
    unary = -np.log(np.maximum(probs, 1e-8))
    pixels = [(i, j) for i in range(H) for j in range(W)]
    best, best_e = None, np.inf
    for assign in itertools.product(range(C), repeat=len(pixels)):
        e = sum(unary[c, p[0], p[1]] for c, p in zip(assign, pixels))
        for a in range(len(pixels)):
            for b in range(a + 1, len(pixels)):
                if assign[a] != assign[b]:
                    e += _kernel(pixels[a], pixels[b], image, params)
        if e < best_e:
            best_e, best = e, assign
    return np.array(best).reshape(H, W)


def _salt_instance():
    """Uniform 3x3 region whose center pixel has an adversarial unary."""
    probs = np.full((2, 3, 3), 0.0)
    probs[0] = 0.9
    probs[1] = 0.1
    probs[0, 1, 1] = 0.3  # the odd pixel prefers class 1
    probs[1, 1, 1] = 0.7
    image = np.full((3, 3), 0.5)  # uniform appearance
    return probs, image


def test_zero_weights_equal_unary_argmax(rng):
    probs = rng.random((3, 8, 8))
    probs /= probs.sum(axis=0, keepdims=True)
    image = rng.random((8, 8))
    params = CrfParams(w_smooth=0.0, w_appearance=0.0, iterations=5)
    out = refine(probs, image, params)
    assert np.array_equal(out, np.argmax(probs, axis=0))


def test_zero_iterations_equal_unary_argmax(rng):
    probs = rng.random((4, 6, 6))
    probs /= probs.sum(axis=0, keepdims=True)
    image = rng.random((6, 6))
    out = refine(probs, image, CrfParams(iterations=0))
    assert np.array_equal(out, np.argmax(probs, axis=0))


def test_normalization_preserved_every_iteration(rng):
    probs = rng.random((3, 10, 10))
    probs /= probs.sum(axis=0, keepdims=True)
    image = rng.random((10, 10))
    drifts = []
    refine(probs, image, CrfParams(iterations=6), drift_out=drifts)
    assert len(drifts) == 6
    assert max(drifts) <= 1e-9


def test_salt_noise_flip_with_enumeration_reference():
    probs, image = _salt_instance()
    flipped_at = None
    for w in np.linspace(0.0, 1.0, 21):
        params = CrfParams(w_smooth=float(w), w_appearance=0.0, iterations=10)
        out = refine(probs, image, params)
        majority_everywhere = np.all(out == 0)
        if flipped_at is None and majority_everywhere:
            flipped_at = w
        if flipped_at is not None:
            # above the flip point the pixel stays with the majority, and
            # mean field agrees with the exact Gibbs MAP
            assert majority_everywhere
            assert np.array_equal(out, gibbs_map_oracle(probs, image, params))
    assert flipped_at is not None and flipped_at > 0.0
    # below the flip point the adversarial pixel survives, matching the MAP
    weak = CrfParams(w_smooth=1e-3, w_appearance=0.0, iterations=10)
    out_weak = refine(probs, image, weak)
    assert out_weak[1, 1] == 1
    assert np.array_equal(out_weak, gibbs_map_oracle(probs, image, weak))


def test_label_permutation_equivariance(rng):
    probs = rng.random((3, 6, 6))
    probs /= probs.sum(axis=0, keepdims=True)
    image = rng.random((6, 6))
    params = CrfParams(iterations=4)
    base = refine(probs, image, params)
    perm = np.array([2, 0, 1])  # new index of each old class
    permuted = np.empty_like(probs)
    for old, new in enumerate(perm):
        permuted[new] = probs[old]
    out = refine(permuted, image, params)
    assert np.array_equal(out, perm[base])


def test_monotone_degeneracy(rng):
    probs = rng.random((2, 6, 6))
    probs /= probs.sum(axis=0, keepdims=True)
    image = rng.random((6, 6))
    unary = np.argmax(probs, axis=0)
    disagreement = []
    for scale in (1.0, 0.1, 0.01, 0.0):
        params = CrfParams(w_smooth=3 * scale, w_appearance=5 * scale, iterations=5)
        out = refine(probs, image, params)
        disagreement.append(int((out != unary).sum()))
    assert disagreement[-1] == 0  # exact at zero
    assert disagreement[-2] <= disagreement[0] or disagreement[0] == 0


def test_input_validation(rng):
    probs = rng.random((2, 4, 4))
    probs /= probs.sum(axis=0, keepdims=True)
    with pytest.raises(ValidationError):
        refine(probs, np.zeros((5, 5)), CrfParams())
    bad = probs * 1.5
    with pytest.raises(ValidationError):
        refine(bad, np.zeros((4, 4)), CrfParams())


def test_smoothing_cleans_salt_noise_on_plane(rng):
    # denoising smoke test on a larger plane with an appearance edge
    H = W = 16
    image = np.zeros((H, W))
    image[:, W // 2 :] = 1.0
    gt = (image > 0.5).astype(int)
    probs = np.zeros((2, H, W))
    noisy = gt.copy()
    flip = rng.random((H, W)) < 0.08
    noisy[flip] = 1 - noisy[flip]
    probs[1] = 0.2 + 0.6 * noisy
    probs[0] = 1.0 - probs[1]
    out = refine(probs, image, CrfParams(iterations=5))
    assert (out == gt).mean() > (np.argmax(probs, axis=0) == gt).mean()
    assert (out == gt).mean() >= 0.99


def test_refine_labelmap_shapes(rng):
    T, S, C, H, W = 2, 2, 3, 8, 8
    probs = rng.random((T, S, C, H, W))
    probs /= probs.sum(axis=2, keepdims=True)
    images = rng.random((T, S, H, W))
    out = refine_labelmap(probs, images, CrfParams(iterations=2))
    assert out.shape == (T, S, H, W)
    assert out.dtype == np.uint8
