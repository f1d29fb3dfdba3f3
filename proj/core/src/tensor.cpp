#include "paintlab/tensor.hpp"

#include <algorithm>
#include <sstream>

#include "paintlab/error.hpp"

namespace paintlab {

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string to_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ',';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

Tensor::Tensor(Shape shape, std::vector<double> values) : shape_(std::move(shape)) {
  if (paintlab::numel(shape_) != values.size()) {
    throw ShapeError("tensor shape " + to_string(shape_) + " holds " +
                     std::to_string(paintlab::numel(shape_)) + " elements but " +
                     std::to_string(values.size()) + " values were given");
  }
  data_ = std::make_shared<const std::vector<double>>(std::move(values));
}

Tensor Tensor::zeros(Shape shape) { return full(std::move(shape), 0.0); }

Tensor Tensor::full(Shape shape, double value) {
  const std::size_t n = paintlab::numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value));
}

Tensor Tensor::scalar(double value) { return Tensor({1}, {value}); }

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " +
                     to_string(shape_));
  }
  return shape_[axis];
}

std::span<const double> Tensor::data() const {
  if (!data_) return {};
  return {data_->data(), data_->size()};
}

double Tensor::item() const {
  if (numel() != 1) {
    throw ShapeError("item() needs a single element, shape is " + to_string(shape_));
  }
  return (*data_)[0];
}

double Tensor::at(std::size_t b, std::size_t c, std::size_t y, std::size_t x) const {
  const auto& s = shape_;
  return (*data_)[((b * s[1] + c) * s[2] + y) * s[3] + x];
}

std::vector<double> Tensor::to_vector() const {
  if (!data_) return {};
  return *data_;
}

Tensor Tensor::detach() const {
  Tensor out;
  out.shape_ = shape_;
  out.data_ = data_;
  return out;
}

Tensor Tape::variable(const Tensor& value) {
  Tensor out = value.detach();
  out.tape_ = this;
  out.node_ = nodes_.size();
  out.generation_ = generation_;
  nodes_.push_back(Node{value.shape(), {}, nullptr});
  grads_.emplace_back();
  return out;
}

Tensor Tape::record(Tensor value, std::initializer_list<const Tensor*> parents,
                    BackwardFn backward) {
  return record(std::move(value), std::span<const Tensor* const>(parents.begin(), parents.size()),
                std::move(backward));
}

Tensor Tape::record(Tensor value, std::span<const Tensor* const> parents, BackwardFn backward) {
  Tape* tape = nullptr;
  for (const Tensor* p : parents) {
    if (!p->tracked()) continue;
    if (tape && p->tape_ != tape) throw Error("operation mixes tensors from two tapes");
    tape = p->tape_;
  }
  if (!tape) return value.detach();

  Node node{value.shape(), {}, std::move(backward)};
  for (const Tensor* p : parents) {
    if (!p->tracked()) continue;
    tape->check_owned(*p);
    node.parents.push_back(p->node_);
  }
  Tensor out = value.detach();
  out.tape_ = tape;
  out.node_ = tape->nodes_.size();
  out.generation_ = tape->generation_;
  tape->nodes_.push_back(std::move(node));
  tape->grads_.emplace_back();
  return out;
}

void Tape::check_owned(const Tensor& t) const {
  if (t.tape_ != this) throw Error("tensor belongs to a different tape");
  if (t.generation_ != generation_) throw Error("tensor was recorded before the tape was cleared");
}

std::span<double> Tape::grad_slot(const Tensor& t) {
  if (!t.tracked()) return {};
  check_owned(t);
  auto& g = grads_[t.node_];
  if (g.empty()) g.assign(paintlab::numel(nodes_[t.node_].shape), 0.0);
  return {g.data(), g.size()};
}

void Tape::backward(const Tensor& root) {
  if (root.numel() != 1) {
    throw ShapeError("backward root must be scalar, shape is " + to_string(root.shape()));
  }
  if (!root.tracked()) return;
  GradientSeed seed{root, {1.0}};
  backward(std::span<const GradientSeed>(&seed, 1));
}

void Tape::backward(std::span<const GradientSeed> seeds) {
  std::size_t last = 0;
  bool any = false;
  for (const auto& s : seeds) {
    if (!s.target.tracked()) continue;
    check_owned(s.target);
    if (s.gradient.size() != s.target.numel()) {
      throw ShapeError("seed gradient has " + std::to_string(s.gradient.size()) +
                       " values for tensor of shape " + to_string(s.target.shape()));
    }
    auto slot = grad_slot(s.target);
    for (std::size_t i = 0; i < slot.size(); ++i) slot[i] += s.gradient[i];
    last = std::max(last, s.target.node_);
    any = true;
  }
  if (any) sweep(last);
}

void Tape::sweep(std::size_t last) {
  for (std::size_t i = last + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.backward || grads_[i].empty()) continue;
    // The rule may grow other buffers, so pass a copy-free view that stays valid:
    // grads_ itself is never resized during a sweep.
    std::span<const double> g(grads_[i].data(), grads_[i].size());
    node.backward(g, *this);
  }
}

std::vector<double> Tape::grad(const Tensor& t) const {
  if (!t.tracked()) return std::vector<double>(t.numel(), 0.0);
  check_owned(t);
  const auto& g = grads_[t.node_];
  if (g.empty()) return std::vector<double>(t.numel(), 0.0);
  return g;
}

void Tape::clear() {
  nodes_.clear();
  grads_.clear();
  ++generation_;
}

}  // namespace paintlab
