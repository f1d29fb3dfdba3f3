#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace paintlab {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

class Tape;

/// Dense row-major array of doubles. Values are immutable once built; copies
/// share storage. A tensor produced on a tape carries a node handle, and only
/// such tensors receive gradients.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> values);

  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double value);
  static Tensor scalar(double value);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const { return data_ ? data_->size() : 0; }
  bool empty() const { return numel() == 0; }

  std::span<const double> data() const;
  double item() const;
  double operator[](std::size_t i) const { return (*data_)[i]; }
  /// Element access for rank-4 (batch, channel, row, column) tensors.
  double at(std::size_t b, std::size_t c, std::size_t y, std::size_t x) const;

  /// Copy of the values, for callers that need to mutate.
  std::vector<double> to_vector() const;

  bool tracked() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  std::size_t node() const { return node_; }

  /// Same values, no tape node.
  Tensor detach() const;

 private:
  friend class Tape;
  Shape shape_;
  std::shared_ptr<const std::vector<double>> data_;
  Tape* tape_ = nullptr;
  std::size_t node_ = 0;
  std::uint64_t generation_ = 0;
};

/// One upstream gradient injected at a tensor when starting a backward sweep.
struct GradientSeed {
  Tensor target;
  std::vector<double> gradient;
};

/// Append-only record of differentiable operations.
///
/// Nodes are appended in execution order, so parents always precede their
/// children. `backward` sweeps the nodes once in reverse and accumulates
/// gradients additively. A tape must outlive every tensor recorded on it and
/// is used from one thread at a time; `clear` starts a fresh generation and
/// any tensor from an older generation is rejected.
class Tape {
 public:
  using BackwardFn = std::function<void(std::span<const double> grad_out, Tape& tape)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Registers a leaf that should receive a gradient.
  Tensor variable(const Tensor& value);

  /// Records `value` as the output of an operation on `parents`. If no parent
  /// is tracked the value is returned untracked and `backward` is dropped.
  static Tensor record(Tensor value, std::initializer_list<const Tensor*> parents,
                       BackwardFn backward);
  static Tensor record(Tensor value, std::span<const Tensor* const> parents,
                       BackwardFn backward);

  /// Accumulation buffer for `t`, zero-initialized on first use. Empty for
  /// untracked tensors. Intended for use inside backward rules.
  std::span<double> grad_slot(const Tensor& t);

  /// Seeds d(root)/d(root) = 1 and runs the reverse sweep. Root must be scalar.
  void backward(const Tensor& root);
  /// Runs the reverse sweep from arbitrary upstream gradients.
  void backward(std::span<const GradientSeed> seeds);

  /// Accumulated gradient of `t`; zeros if it was never reached.
  std::vector<double> grad(const Tensor& t) const;

  std::size_t size() const { return nodes_.size(); }
  void clear();

 private:
  struct Node {
    Shape shape;
    std::vector<std::size_t> parents;
    BackwardFn backward;
  };

  void check_owned(const Tensor& t) const;
  void sweep(std::size_t last);

  std::vector<Node> nodes_;
  std::vector<std::vector<double>> grads_;
  std::uint64_t generation_ = 1;
};

}  // namespace paintlab
