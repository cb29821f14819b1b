import numpy as np
import pytest

from somri import (
    BINOMIAL_KERNEL,
    ConfigError,
    RouterWeights,
    ShapeError,
    binomial_project,
    carrier_project,
    extract_features,
    route,
)


def identity_router(half=4, c_in=2, d_model=8):
    rng = np.random.default_rng(99)
    return RouterWeights(
        phi_weight=rng.uniform(-0.3, 0.3, (d_model, c_in, 3, 3)),
        phi_bias=np.zeros(d_model),
        carrier_weight=np.eye(half),
        carrier_bias=np.zeros(half),
        evidence_weight=np.eye(half),
        evidence_bias=np.zeros(half),
    )


def dense_mirrored_conv5x5(u, kernel2d):
    """Direct dense 5x5 convolution with mirrored indexing (test oracle)."""

    def mirror(t, n):
        t = abs(t)
        return 2 * n - 2 - t if t >= n else t

    c, h, w = u.shape
    out = np.zeros_like(u)
    for ci in range(c):
        for i in range(h):
            for j in range(w):
                acc = 0.0
                for di in range(-2, 3):
                    for dj in range(-2, 3):
                        acc += kernel2d[di + 2, dj + 2] * u[ci, mirror(i + di, h), mirror(j + dj, w)]
                out[ci, i, j] = acc
    return out


def test_kernel_values():
    assert np.array_equal(BINOMIAL_KERNEL * 16, [1, 4, 6, 4, 1])
    assert BINOMIAL_KERNEL.sum() == 1.0


def test_constant_field_preserved_exactly():
    const = np.full((3, 8, 8), 2.0)
    assert np.array_equal(binomial_project(const), const)
    assert np.array_equal(carrier_project(const), const)


def test_interior_impulse_reproduces_kernel():
    grid = np.zeros((1, 9, 9))
    grid[0, 4, 4] = 1.0
    resp = binomial_project(grid)[0]
    # interior response is the separable outer product of [1,4,6,4,1]/16
    expected = np.outer(BINOMIAL_KERNEL, BINOMIAL_KERNEL)
    assert np.max(np.abs(resp[2:7, 2:7] - expected)) < 1e-15
    assert np.max(np.abs(resp[4, 2:7] - BINOMIAL_KERNEL * (6 / 16.0))) < 1e-15
    assert np.all(resp[[0, 1, 7, 8]] == 0) and np.all(resp[:, [0, 1, 7, 8]] == 0)


def test_border_impulse_mirrored_response():
    u = np.zeros((1, 9, 5))
    u[0, 4, 0] = 1.0
    resp = binomial_project(u)[0, 4] * 16 / (6 / 16.0)
    assert np.allclose(resp, [6, 4, 1, 0, 0], atol=1e-12)


@pytest.mark.parametrize("trial", range(5))
def test_separable_equals_dense_oracle(trial):
    rng = np.random.default_rng(trial)
    u = rng.standard_normal((8, 32, 32))
    dense = dense_mirrored_conv5x5(u, np.outer(BINOMIAL_KERNEL, BINOMIAL_KERNEL))
    assert np.max(np.abs(binomial_project(u) - dense)) < 1e-12


def test_checkerboard_annihilated():
    i, j = np.meshgrid(np.arange(16), np.arange(16), indexing="ij")
    cb = ((-1.0) ** (i + j))[None].repeat(2, axis=0)
    assert np.max(np.abs(carrier_project(cb))) < 1e-12


def test_binomial_is_depthwise(rng):
    u = rng.standard_normal((4, 12, 12))
    u_zeroed = u.copy()
    u_zeroed[2] = 0.0
    out = binomial_project(u_zeroed)
    ref = binomial_project(u)
    assert np.all(out[2] == 0)
    assert np.array_equal(out[[0, 1, 3]], ref[[0, 1, 3]])


def test_carrier_projector_linear(rng):
    a = rng.standard_normal((2, 16, 16))
    b = rng.standard_normal((2, 16, 16))
    lhs = carrier_project(3.0 * a - 0.5 * b)
    rhs = 3.0 * carrier_project(a) - 0.5 * carrier_project(b)
    assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_carrier_output_matches_input_dims(rng):
    u = rng.standard_normal((3, 24, 40))
    assert carrier_project(u).shape == u.shape


def test_carrier_non_expansive(rng):
    worst = 0.0
    for _ in range(50):
        u = rng.standard_normal((2, 16, 16))
        worst = max(worst, np.linalg.norm(carrier_project(u)) / np.linalg.norm(u))
    const = np.full((1, 16, 16), 3.0)
    worst = max(worst, np.linalg.norm(carrier_project(const)) / np.linalg.norm(const))
    assert worst <= 1.0 + 1e-9


def test_route_decomposition(rng):
    w = identity_router()
    x = rng.standard_normal((8, 16, 16))
    streams = route(x, w)
    u_car = x[:4]  # identity projection
    residue = u_car - streams.carrier
    assert np.max(np.abs(streams.carrier + residue - u_car)) < 1e-12
    assert np.max(np.abs(streams.evidence - (x[4:] + residue))) < 1e-12


def test_route_constant_input_evidence_passthrough():
    w = identity_router()
    x = np.full((8, 16, 16), 2.0)
    streams = route(x, w)
    # carrier projector preserves constants, so the off-carrier residue vanishes
    assert np.array_equal(streams.evidence, x[4:])
    assert np.array_equal(streams.carrier, x[:4])


def test_carrier_ignores_evidence_pool(rng):
    w = identity_router()
    x = rng.standard_normal((8, 16, 16))
    perturbed = x.copy()
    perturbed[4:] += rng.standard_normal((4, 16, 16))
    assert np.array_equal(route(x, w).carrier, route(perturbed, w).carrier)


def test_extract_features_shapes(rng):
    w = identity_router(half=48, c_in=2, d_model=96)
    out = extract_features(rng.standard_normal((2, 32, 32)), w)
    assert out.shape == (96, 32, 32)
    w8 = identity_router(half=48, c_in=8, d_model=96)
    out8 = extract_features(rng.standard_normal((8, 32, 32)), w8)
    assert out8.shape == (96, 32, 32)


def test_extract_features_zero_weights_zero_output(rng):
    w = identity_router()
    w.phi_weight = np.zeros_like(w.phi_weight)
    w.phi_bias = np.zeros_like(w.phi_bias)
    out = extract_features(rng.standard_normal((2, 16, 16)), w)
    assert np.all(out == 0)


def test_shape_errors(rng):
    w = identity_router()
    with pytest.raises(ShapeError):
        binomial_project(rng.standard_normal((2, 2, 8)))
    with pytest.raises(ShapeError):
        carrier_project(rng.standard_normal((2, 15, 16)))
    with pytest.raises(ConfigError):
        route(rng.standard_normal((7, 16, 16)), w)
    with pytest.raises(ShapeError):
        extract_features(rng.standard_normal((3, 16, 16)), w)
