import numpy as np
import pytest

from blockcs.partition import PartitionMap, PartitionSpec
from blockcs.sensing import (
    BlockSensor,
    achieved_snr,
    adjoint_block,
    apply_block,
    draw_sensor,
    measure,
    scale_to_snr,
)


def comb(dims, factors):
    return PartitionMap(PartitionSpec(dims, factors, "comb"))


@pytest.mark.parametrize("ensemble", ["gaussian", "complex-gaussian"])
def test_square_trivial_blocks_are_unit_scalars(ensemble):
    sensor = draw_sensor(8, 8, 8, seed=1, ensemble=ensemble)
    assert sensor.blocks.shape == (8, 1, 1)
    np.testing.assert_allclose(np.abs(sensor.blocks), 1.0)


def test_seed_repeat_bit_identical():
    a = draw_sensor(32, 128, 4, seed=5)
    b = draw_sensor(32, 128, 4, seed=5)
    assert np.array_equal(a.blocks, b.blocks)
    assert not np.array_equal(a.blocks, draw_sensor(32, 128, 4, seed=6).blocks)


def test_storage_count():
    sensor = draw_sensor(32, 128, 4, seed=0)
    assert sensor.blocks.shape == (4, 8, 32)
    assert sensor.stored_scalars == 1024 == 32 * 128 // 4


@pytest.mark.parametrize("m, n, beta", [(32, 128, 1), (32, 128, 4), (32, 128, 16), (96, 256, 16), (6, 24, 3)])
def test_storage_ratio_is_one_over_beta(m, n, beta):
    sensor = draw_sensor(m, n, beta, seed=0)
    assert sensor.stored_scalars == m * n // beta
    assert sensor.stored_scalars / (m * n) == pytest.approx(1 / beta)


def test_unit_norm_columns():
    sensor = draw_sensor(24, 96, 4, seed=3, ensemble="complex-gaussian")
    np.testing.assert_allclose(np.linalg.norm(sensor.blocks, axis=1), 1.0)


def test_divisibility_errors():
    with pytest.raises(ValueError):
        draw_sensor(30, 128, 4)
    with pytest.raises(ValueError):
        draw_sensor(32, 130, 4)
    with pytest.raises(ValueError):
        draw_sensor(32, 128, 4, ensemble="bernoulli")


def test_zero_signal_noiseless_measures_zero():
    sensor = draw_sensor(16, 64, 4, comb((8, 8), (2, 2)), seed=0)
    meas = measure(sensor, np.zeros((8, 8)), 0.0)
    assert meas.y.shape == (4, 4)
    assert not np.any(meas.y)


def test_single_block_matches_dense_product():
    sensor = draw_sensor(12, 40, 1, seed=2)
    x = np.random.default_rng(0).standard_normal(40)
    np.testing.assert_allclose(measure(sensor, x, 0.0).stacked, sensor.blocks[0] @ x, atol=1e-12)


@pytest.mark.parametrize("dims, factors, m", [((16, 16), (4, 4), 96), ((8, 8), (2, 2), 32), ((4, 4, 4), (2, 1, 2), 16)])
@pytest.mark.parametrize("ensemble", ["gaussian", "complex-gaussian"])
def test_block_measurements_equal_assembled_block_diagonal(dims, factors, m, ensemble):
    pmap = comb(dims, factors)
    sensor = draw_sensor(m, pmap.size, pmap.n_blocks, pmap, seed=4, ensemble=ensemble)
    x = np.random.default_rng(1).standard_normal(dims)
    A = sensor.dense()
    assert A.shape == (m, pmap.size)
    np.testing.assert_allclose(measure(sensor, x, 0.0).stacked, A @ x.ravel(), atol=1e-12)
    # off-diagonal blocks of blkdiag(A_b) are zero: each column touches one row block
    rows_used = [(np.flatnonzero(A[:, j]) // sensor.m_block) for j in range(A.shape[1])]
    assert all(len(set(r)) == 1 for r in rows_used)


@pytest.mark.parametrize("is_complex", [False, True])
def test_noise_energy_law_of_large_numbers(is_complex):
    ensemble = "complex-gaussian" if is_complex else "gaussian"
    sensor = draw_sensor(8, 32, 2, seed=0, ensemble=ensemble)
    x = np.zeros(32)
    sigma = 0.7
    energies = [np.sum(np.abs(measure(sensor, x, sigma, seed=[9, t]).noise) ** 2) for t in range(10_000)]
    assert np.mean(energies) == pytest.approx(8 * sigma**2, rel=0.05)


def test_complex_noise_is_circular():
    sensor = draw_sensor(64, 128, 1, seed=0, ensemble="complex-gaussian")
    v = np.concatenate([measure(sensor, np.zeros(128), 1.0, seed=s).noise.ravel() for s in range(200)])
    assert np.var(v.real) == pytest.approx(0.5, rel=0.05)
    assert np.var(v.imag) == pytest.approx(0.5, rel=0.05)
    assert abs(np.mean(v * v)) < 0.02  # pseudo-covariance vanishes


@pytest.mark.parametrize("ensemble", ["gaussian", "complex-gaussian"])
def test_adjoint_identity(ensemble):
    sensor = draw_sensor(32, 128, 4, seed=8, ensemble=ensemble)
    rng = np.random.default_rng(0)
    for b in range(4):
        z = rng.standard_normal(32) + 1j * rng.standard_normal(32)
        r = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        lhs = np.vdot(r, apply_block(sensor, b, z))
        rhs = np.vdot(adjoint_block(sensor, b, r), z)
        assert abs(lhs - rhs) < 1e-10


def test_apply_matches_explicit_multiply():
    sensor = draw_sensor(32, 128, 4, seed=8)
    z = np.random.default_rng(2).standard_normal(32)
    A = sensor.blocks[1]
    expected = np.array([sum(A[i, j] * z[j] for j in range(32)) for i in range(8)])
    np.testing.assert_allclose(apply_block(sensor, 1, z), expected, atol=1e-12)
    with pytest.raises(ValueError):
        apply_block(sensor, 1, np.zeros(31))
    with pytest.raises(ValueError):
        adjoint_block(sensor, 1, np.zeros(7))


def test_identity_block_sensor_copies():
    pmap = PartitionMap(PartitionSpec((8,), (2,), "contiguous"))
    sensor = BlockSensor(np.stack([np.eye(4)] * 2), pmap)
    z = np.arange(4.0)
    np.testing.assert_array_equal(apply_block(sensor, 0, z), z)


def test_zero_column_rejected():
    pmap = PartitionMap(PartitionSpec((4,), (1,)))
    blocks = np.ones((1, 2, 4))
    blocks[0, :, 2] = 0
    with pytest.raises(ValueError):
        BlockSensor(blocks, pmap)


def test_snr_scaling():
    pmap = comb((8, 8), (2, 2))
    sensor = draw_sensor(32, 64, 4, pmap, seed=1)
    x = np.random.default_rng(0).standard_normal((8, 8))
    s1 = achieved_snr(sensor, x)
    assert achieved_snr(sensor, 3 * x) == pytest.approx(9 * s1)
    xs = scale_to_snr(sensor, x, 20.0)
    assert 10 * np.log10(achieved_snr(sensor, xs)) == pytest.approx(20.0)


def test_header_rederives_sensor():
    pmap = comb((8, 8), (2, 2))
    sensor = draw_sensor(32, 64, 4, pmap, seed=11, ensemble="complex-gaussian")
    again = BlockSensor.from_header(sensor.header())
    assert np.array_equal(again.blocks, sensor.blocks)
