import numpy as np
import pytest

from fcnndepth import ops
from fcnndepth.tensor import BatchNormParams, ConvKernel, Tensor4
from fcnndepth.upconv import (
    BRANCH_PADS,
    SplitUpConvWeights,
    UpConvWeights,
    fast_block_macs,
    naive_block_macs,
    random_upconv_weights,
    split_weights_5x5,
    upconv_block_fast,
    upconv_block_naive,
    verify_equivalence,
)


def identity_bn(c, dtype=np.float32):
    # eps small enough that 1 / sqrt(1 + eps) rounds to exactly 1.0
    return BatchNormParams(
        np.zeros(c, dtype=dtype), np.ones(c, dtype=dtype),
        np.ones(c, dtype=dtype), np.zeros(c, dtype=dtype), eps=1e-30,
    )


class TestSplitWeights:
    def test_delta_kernel_lands_in_k33_center(self):
        k = np.zeros((5, 5, 1, 1), dtype=np.float32)
        k[2, 2, 0, 0] = 1.0
        split = split_weights_5x5(UpConvWeights(ConvKernel(k), identity_bn(1)))
        expected = np.zeros((3, 3, 1, 1), dtype=np.float32)
        expected[1, 1, 0, 0] = 1.0
        assert np.array_equal(split.k33.weights, expected)
        assert not split.k32.weights.any()
        assert not split.k23.weights.any()
        assert not split.k22.weights.any()

    def test_parity_class_cardinalities(self):
        k = np.ones((5, 5, 2, 3), dtype=np.float32)
        split = split_weights_5x5(UpConvWeights(ConvKernel(k), identity_bn(3)))
        counts = {name: kern.weights[:, :, 0, 0].size for name, kern in split.kernels.items()}
        assert counts == {"k33": 9, "k32": 6, "k23": 6, "k22": 4}
        assert sum(counts.values()) == 25

    def test_split_is_weight_permutation(self):
        rng = np.random.default_rng(0)
        k = rng.standard_normal((5, 5, 3, 2)).astype(np.float32)
        split = split_weights_5x5(UpConvWeights(ConvKernel(k), identity_bn(2)))
        parts = np.concatenate([kern.weights.ravel() for kern in split.kernels.values()])
        assert np.array_equal(np.sort(parts), np.sort(k.ravel()))

    def test_bias_replicated(self):
        rng = np.random.default_rng(1)
        bias = rng.standard_normal(2).astype(np.float32)
        k = ConvKernel(rng.standard_normal((5, 5, 1, 2)).astype(np.float32), bias)
        split = split_weights_5x5(UpConvWeights(k, identity_bn(2)))
        for kern in split.kernels.values():
            assert np.array_equal(kern.bias, bias)

    def test_rejects_non_5x5(self):
        with pytest.raises(ValueError, match="5x5"):
            UpConvWeights(ConvKernel(np.zeros((3, 3, 1, 1), dtype=np.float32)), identity_bn(1))

    def test_split_type_validates_sizes(self):
        k33 = ConvKernel(np.zeros((3, 3, 1, 1), dtype=np.float32))
        bad = ConvKernel(np.zeros((2, 2, 1, 1), dtype=np.float32))
        k23 = ConvKernel(np.zeros((2, 3, 1, 1), dtype=np.float32))
        k22 = ConvKernel(np.zeros((2, 2, 1, 1), dtype=np.float32))
        with pytest.raises(ValueError, match="k32"):
            SplitUpConvWeights(k33, bad, k23, k22, identity_bn(1))


class TestNaiveBlock:
    def test_zero_input_passes_beta_through_relu(self):
        rng = np.random.default_rng(2)
        w = random_upconv_weights(2, 3, rng)
        w = UpConvWeights(
            ConvKernel(w.full.weights, None), w.bn  # no bias: conv output is zero
        )
        x = Tensor4.zeros(1, 3, 3, 2)
        out = upconv_block_naive(x, w)
        expected = np.maximum(
            w.bn.gamma * (0.0 - w.bn.mean) / np.sqrt(w.bn.variance + np.float32(w.bn.eps))
            + w.bn.beta,
            0.0,
        )
        assert np.allclose(out.data, np.broadcast_to(expected, out.shape), atol=1e-6)

    def test_output_shape_doubles(self):
        rng = np.random.default_rng(3)
        w = random_upconv_weights(2, 4, rng)
        out = upconv_block_naive(Tensor4.zeros(1, 5, 7, 2), w)
        assert out.shape == (1, 10, 14, 4)

    def test_equals_straight_line_composition(self):
        rng = np.random.default_rng(4)
        w = random_upconv_weights(3, 2, rng)
        x = Tensor4(rng.standard_normal((2, 4, 5, 3)).astype(np.float32))
        block = upconv_block_naive(x, w)
        manual = ops.relu(
            ops.batchnorm_infer(
                ops.conv2d(ops.unpool_zero2(x), w.full, stride=1, padding="same"), w.bn
            )
        )
        assert np.array_equal(block.data, manual.data)

    def test_channel_mismatch_rejected(self):
        rng = np.random.default_rng(5)
        w = random_upconv_weights(3, 2, rng)
        with pytest.raises(ValueError, match="channels"):
            upconv_block_naive(Tensor4.zeros(1, 2, 2, 4), w)


class TestFastBlock:
    def test_equivalent_on_small_input(self):
        for seed in range(10):
            diff = verify_equivalence((1, 4, 4, 2), seed, cout=3)
            assert diff <= 1e-5

    def test_equivalent_over_randomized_shapes(self):
        worst = 0.0
        for seed in range(100):
            rng = np.random.default_rng(seed)
            shape = (
                int(rng.integers(1, 3)),
                int(rng.integers(2, 13)),
                int(rng.integers(2, 13)),
                int(rng.integers(1, 9)),
            )
            cout = int(rng.integers(1, 9))
            worst = max(worst, verify_equivalence(shape, seed, cout=cout))
        assert worst <= 1e-5

    def test_equivalent_in_float64(self):
        worst = max(
            verify_equivalence((1, 6, 5, 3), seed, cout=2, dtype=np.float64)
            for seed in range(50)
        )
        assert worst <= 1e-10

    def test_delta_kernel_matches_naive_exactly(self):
        rng = np.random.default_rng(6)
        k = np.zeros((5, 5, 2, 2), dtype=np.float32)
        k[2, 2, 0, 0] = 1.0
        k[2, 2, 1, 1] = 1.0
        w = UpConvWeights(ConvKernel(k), identity_bn(2))
        x = Tensor4(rng.standard_normal((1, 3, 4, 2)).astype(np.float32))
        naive = upconv_block_naive(x, w)
        fast = upconv_block_fast(x, split_weights_5x5(w))
        assert np.array_equal(naive.data, fast.data)
        # the block itself reduces to relu of the zero-stuffed input here
        assert np.array_equal(naive.data, ops.relu(ops.unpool_zero2(x)).data)

    def test_zero_weights_zero_difference(self):
        w = UpConvWeights(
            ConvKernel(np.zeros((5, 5, 2, 2), dtype=np.float32), np.zeros(2)),
            identity_bn(2),
        )
        x = Tensor4(np.random.default_rng(7).standard_normal((1, 4, 4, 2)).astype(np.float32))
        naive = upconv_block_naive(x, w)
        fast = upconv_block_fast(x, split_weights_5x5(w))
        assert np.array_equal(naive.data, fast.data)

    def test_branch_pads_table_shape_preserving(self):
        # every branch conv output must be exactly the input spatial size
        rng = np.random.default_rng(8)
        x = Tensor4(rng.standard_normal((1, 5, 6, 2)).astype(np.float32))
        split = split_weights_5x5(random_upconv_weights(2, 3, rng) )
        for name, kernel in split.kernels.items():
            out = ops.conv2d_padded(x, kernel, stride=1, pads=BRANCH_PADS[name])
            assert out.shape == (1, 5, 6, 3), name


class TestVerifyEquivalence:
    def test_deterministic(self):
        a = verify_equivalence((1, 4, 4, 2), 42)
        b = verify_equivalence((1, 4, 4, 2), 42)
        assert a == b

    def test_fault_injection_detected(self):
        clean = verify_equivalence((1, 6, 6, 3), 0, cout=3)
        faulty = verify_equivalence((1, 6, 6, 3), 0, cout=3, inject_fault=True)
        assert clean <= 1e-5
        assert faulty > 1e-3


class TestMacCounts:
    def test_fast_strictly_cheaper(self):
        for h, w, cin, cout in [(1, 1, 1, 1), (4, 4, 2, 3), (15, 20, 256, 128)]:
            assert fast_block_macs(h, w, cin, cout) < naive_block_macs(h, w, cin, cout)

    def test_expected_ratio(self):
        # 25 taps on the 4x-sparse grid vs 25 dense taps at quarter the pixels
        assert naive_block_macs(8, 8, 4, 4) == 4 * fast_block_macs(8, 8, 4, 4)
