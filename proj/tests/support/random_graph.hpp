#pragma once

// Randomized composite graphs over every differentiable primitive, evaluated as
// a pure function of their leaf values so finite differences can re-run them.

#include <random>
#include <vector>

#include "paintlab/ops.hpp"
#include "paintlab/tensor.hpp"

namespace paintlab::testing {

class RandomGraph {
 public:
  enum Op {
    kLeakyRelu,
    kSigmoid,
    kTanh,
    kSqrt,
    kPow,
    kChannelScale,
    kDiv,
    kAddScalar,
    kSubAbs,
    kClamp,
    kUpsampleConv,
    kConcatSlice,
    kChannelSum,
    kCrop,
    kOpCount
  };

  explicit RandomGraph(std::uint64_t seed) : rng_(seed) {
    std::normal_distribution<double> n(0.0, 1.0);
    auto make = [&](Shape s, double sd) {
      std::vector<double> v(numel(s));
      for (double& x : v) x = sd * n(rng_);
      return Tensor(std::move(s), std::move(v));
    };
    stride_ = std::uniform_int_distribution<int>(1, 2)(rng_);
    leaves_ = {
        make({1, 2, 8, 8}, 1.0),        // input
        make({3, 2, 3, 3}, 0.5),        // conv weight
        make({3}, 0.2),                 // conv bias
        make({3}, 0.3),                 // norm gain (offset below)
        make({3}, 0.2),                 // norm bias
        make({1, 3, 1, 1}, 0.5),        // per-channel scale
        make({1}, 0.5),                 // scalar
        make({2, 3, 1, 1}, 0.5),        // head weight
        make({2}, 0.2),                 // head bias
    };
    auto gain = leaves_[3].to_vector();
    for (double& g : gain) g += 1.0;
    leaves_[3] = Tensor({3}, gain);

    const int count = std::uniform_int_distribution<int>(4, 7)(rng_);
    std::uniform_int_distribution<int> pick(0, kOpCount - 1);
    for (int i = 0; i < count; ++i) ops_.push_back(static_cast<Op>(pick(rng_)));

    const std::size_t side = stride_ == 1 ? 8 : 4;
    readout_ = make({1, 2, side, side}, 1.0);
  }

  const std::vector<Tensor>& leaves() const { return leaves_; }
  const std::vector<Op>& ops() const { return ops_; }

  /// Scalar output of the graph for the given leaf values.
  Tensor build(const std::vector<Tensor>& l) const {
    Tensor h = conv2d(l[0], l[1], l[2], static_cast<std::size_t>(stride_), 1);
    h = channel_norm(h, l[3], l[4]);
    for (Op op : ops_) {
      switch (op) {
        case kLeakyRelu: h = leaky_relu(h, 0.2); break;
        case kSigmoid: h = sigmoid(h); break;
        case kTanh: h = tanh(h); break;
        case kSqrt: h = sqrt(sigmoid(h) + 0.1); break;
        case kPow: h = pow(sigmoid(h) + 0.5, 1.7); break;
        case kChannelScale: h = h * l[5]; break;
        case kDiv: h = h / (sigmoid(h * 0.7) + 1.0); break;
        case kAddScalar: h = h + l[6]; break;
        case kSubAbs: h = h - abs(h) * 0.3; break;
        case kClamp: h = clamp(h, -0.8, 0.8); break;
        case kUpsampleConv: {
          const Tensor up = upsample_nearest(h, 2);
          const Tensor w = Tensor::full({3, 3, 3, 3}, 0.05);
          h = conv2d(up, w, l[2], 2, 1);
          break;
        }
        case kConcatSlice: {
          const Tensor parts[] = {h, h * 0.5};
          h = slice_channels(concat_channels(parts), 1, 3);
          break;
        }
        case kChannelSum: h = h * sigmoid(sum_channels(h)); break;
        case kCrop: {
          const std::size_t n = h.dim(2);
          const Tensor inner = crop(h, 1, n - 2, 1, n - 2);
          h = upsample_nearest(crop(h, 0, n / 2, 0, n / 2), 2) + mean(inner);
          break;
        }
        default: break;
      }
    }
    const Tensor out = conv2d(h, l[7], l[8], 1, 0);
    return sum(out * readout_);
  }

  double evaluate(const std::vector<Tensor>& l) const { return build(l).item(); }

 private:
  std::mt19937_64 rng_;
  int stride_ = 1;
  std::vector<Tensor> leaves_;
  std::vector<Op> ops_;
  Tensor readout_;
};

}  // namespace paintlab::testing
