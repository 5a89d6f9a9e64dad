#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "lgcn/batching.hpp"
#include "lgcn/rng.hpp"
#include "lgcn/tape.hpp"

namespace lgcn::ad {

/// Shared, immutable row-index list. Ops keep a reference for backward
/// instead of copying large index arrays every step.
using Index = std::shared_ptr<const std::vector<std::uint32_t>>;

Index make_index(std::vector<std::uint32_t> ids);

// Dense algebra. Matrices are rank 2; bias-like operands may have any rank
// as long as their element count matches.
Var matmul(Tape& t, Var a, Var b);
Var add_bias(Tape& t, Var x, Var bias);
/// x + multiplier[i] * bias on row i.
Var add_scaled_bias(Tape& t, Var x, Var bias, std::shared_ptr<const std::vector<double>> multiplier);
Var add(Tape& t, Var a, Var b);
Var scale(Tape& t, Var x, double factor);
Var relu(Tape& t, Var x);
Var sigmoid(Tape& t, Var x);
Var concat_cols(Tape& t, std::span<const Var> parts);
Var concat_rows(Tape& t, std::span<const Var> parts);
/// Row i of x times s[i]; s holds one value per row.
Var scale_rows(Tape& t, Var x, Var s);
/// n x m -> n x 1.
Var row_sum(Tape& t, Var x);
/// 1 / max(x, floor); zero gradient where clamped.
Var reciprocal_clamped(Tape& t, Var x, double floor);
/// Sum of all entries as a 1 x 1 tensor.
Var sum(Tape& t, Var x);

// Sparse gather / scatter.
Var gather_rows(Tape& t, Var x, Index rows);
/// out[v] = sum of message rows whose target is v, in message order.
Var segment_sum(Tape& t, Var messages, Index targets, std::size_t n);
/// Repeats a vector (or 1 x m row) as n rows.
Var broadcast_rows(Tape& t, Var v, std::size_t n);

// Kronecker forms.
/// out[r*F + f] = w[r] * h[f].
Var kron_flatten(Tape& t, Var w, Var h);
/// Row-wise kron_flatten of M x R and M x F matrices.
Var kron_rows(Tape& t, Var w, Var h);
/// kron_rows(w, gather_rows(h, src)) * weight without materialising the
/// M x (R*F) operand: row m is sum_r w[m,r] * (h[src[m]] * weight_r),
/// weight_r being rows r*F .. r*F+F-1 of weight.
Var kron_matmul(Tape& t, Var w, Var h, Index src, Var weight);

enum class Expansion { Canonical, Inverse };
/// E x L -> E x 2L: canonical puts w first, inverse puts it second.
Var expand_bidirectional(Tape& t, Var w, Expansion direction);

// Sequence encoders.
/// seq T x Z, kernels K x 3 x Z, bias K -> K x (T-2).
Var conv1d(Tape& t, Var seq, Var kernels, Var bias);
/// K x M -> K; gradient goes to the first maximal column.
Var global_maxpool(Tape& t, Var map);
/// Batched conv1d followed by a max over the first max(1, len-2) output
/// positions of every edge. Returns num_edges x K rows in edge-id order,
/// bit-identical to conv1d + global_maxpool on each sequence alone.
Var conv1d_maxpool(Tape& t, const EdgeBatches& batches, Var kernels, Var bias);

// Regularisation and loss.
/// Inverted dropout; identity when not training or p == 0.
Var dropout(Tape& t, Var x, double p, bool training, CounterRng rng);
/// Mean over masked rows of class_weight[y] * -log softmax(logits)[y].
Var weighted_cross_entropy(Tape& t, Var logits, std::span<const int> labels,
                           std::span<const double> class_weights, std::span<const std::size_t> mask);

}  // namespace lgcn::ad
