// SPDX-License-Identifier: Apache-2.0
#pragma once

// Differentiable primitives. Every op records itself on the tape that owns its
// inputs; all inputs of one op must live on the same tape. There is no implicit
// broadcasting: add/mul/sub need identical shapes, and the only broadcast forms
// are `scale` (scalar * tensor) and the explicitly named `add_tiled`.

#include <cstddef>
#include <vector>

#include "tanet/tape.hpp"

namespace tanet {

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& x, double s);
Var relu(const Var& x);
Var sigmoid(const Var& x);
/// Exact (erf-based) GELU.
Var gelu(const Var& x);

/// x + tile(t), where t's shape equals the trailing dims of x.
Var add_tiled(const Var& x, const Var& t);

/// a[..., M, K] x b[K, N] (b shared across leading dims) or a[..., M, K] x b[..., K, N]
/// with identical leading dims.
Var matmul(const Var& a, const Var& b);
Var transpose_last2(const Var& x);
/// Axis permutation: output axis i is input axis perm[i].
Var permute(const Var& x, const std::vector<std::size_t>& perm);
Var reshape(const Var& x, Shape shape);

/// Cross-correlation (kernels are never flipped) with zero padding.
/// x: B x Cin x H x W, w: Cout x Cin x k x k, bias: Cout.
Var conv2d(const Var& x, const Var& w, const Var& bias, std::size_t stride, std::size_t padding);

/// Row-max-shifted softmax over the last axis.
Var softmax_lastdim(const Var& x);
Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-5);

Var concat_channels(const Var& a, const Var& b);
Var slice_channels(const Var& x, std::size_t begin, std::size_t end);
/// B x (C r^2) x H x W -> B x C x rH x rW.
Var pixel_shuffle(const Var& x, std::size_t r);
/// Inverse of pixel_shuffle.
Var pixel_unshuffle(const Var& x, std::size_t r);

Var sum(const Var& x);
Var mean(const Var& x);
/// Mean absolute error; the subgradient at ties is 0.
Var l1_loss(const Var& pred, const Var& target);

}  // namespace tanet
