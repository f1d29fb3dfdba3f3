#include "paintlab/ops.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "paintlab/error.hpp"
// Small products would otherwise take Eigen's coefficient-wise path, whose
// vector peeling depends on buffer alignment and breaks bit-reproducibility.
#define EIGEN_GEMM_TO_COEFFBASED_THRESHOLD 0
#include <Eigen/Core>


namespace paintlab {
namespace {

void require_rank4(const Tensor& t, const char* what) {
  if (t.rank() != 4) {
    throw ShapeError(std::string(what) + " must be [batch,channels,height,width], got " +
                     to_string(t.shape()));
  }
}

// Output positions ox in [lo, hi) whose input column ox*stride + k - pad lies in [0, n).
struct Span1d {
  std::size_t lo;
  std::size_t hi;
};

Span1d valid_range(std::size_t out_n, std::size_t in_n, std::size_t stride, std::size_t k,
                   std::size_t pad) {
  // Need ox*stride + k >= pad and ox*stride + k - pad <= in_n - 1.
  std::size_t lo = 0;
  if (pad > k) lo = (pad - k + stride - 1) / stride;
  const std::ptrdiff_t top = static_cast<std::ptrdiff_t>(in_n) - 1 + static_cast<std::ptrdiff_t>(pad) -
                             static_cast<std::ptrdiff_t>(k);
  if (top < 0) return {0, 0};
  std::size_t hi = static_cast<std::size_t>(top) / stride + 1;
  hi = std::min(hi, out_n);
  if (lo > hi) lo = hi;
  return {lo, hi};
}

struct ConvGeometry {
  std::size_t batch, cin, h, w, cout, kh, kw, stride, pad, oh, ow;

  std::size_t patch() const { return cin * kh * kw; }
  std::size_t pixels() const { return oh * ow; }
  bool pointwise() const { return kh == 1 && kw == 1 && stride == 1 && pad == 0; }
};

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutableMap = Eigen::Map<RowMatrix>;

// Unrolls receptive fields into a [cin*kh*kw, oh*ow] matrix (zero padded).
void im2col(const ConvGeometry& g, const double* in, double* cols) {
  const std::size_t pixels = g.pixels();
  for (std::size_t ci = 0; ci < g.cin; ++ci) {
    const double* src = in + ci * g.h * g.w;
    for (std::size_t ky = 0; ky < g.kh; ++ky) {
      const Span1d rows = valid_range(g.oh, g.h, g.stride, ky, g.pad);
      for (std::size_t kx = 0; kx < g.kw; ++kx) {
        double* dst = cols + ((ci * g.kh + ky) * g.kw + kx) * pixels;
        std::fill(dst, dst + pixels, 0.0);
        const Span1d cs = valid_range(g.ow, g.w, g.stride, kx, g.pad);
        const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(kx) - static_cast<std::ptrdiff_t>(g.pad);
        for (std::size_t oy = rows.lo; oy < rows.hi; ++oy) {
          const double* srow = src + (oy * g.stride + ky - g.pad) * g.w;
          double* drow = dst + oy * g.ow;
          for (std::size_t ox = cs.lo; ox < cs.hi; ++ox)
            drow[ox] = srow[static_cast<std::ptrdiff_t>(ox * g.stride) + off];
        }
      }
    }
  }
}

// Adjoint of im2col: scatter-adds columns back onto the input gradient.
void col2im(const ConvGeometry& g, const double* cols, double* gin) {
  const std::size_t pixels = g.pixels();
  for (std::size_t ci = 0; ci < g.cin; ++ci) {
    double* dst = gin + ci * g.h * g.w;
    for (std::size_t ky = 0; ky < g.kh; ++ky) {
      const Span1d rows = valid_range(g.oh, g.h, g.stride, ky, g.pad);
      for (std::size_t kx = 0; kx < g.kw; ++kx) {
        const double* src = cols + ((ci * g.kh + ky) * g.kw + kx) * pixels;
        const Span1d cs = valid_range(g.ow, g.w, g.stride, kx, g.pad);
        const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(kx) - static_cast<std::ptrdiff_t>(g.pad);
        for (std::size_t oy = rows.lo; oy < rows.hi; ++oy) {
          double* drow = dst + (oy * g.stride + ky - g.pad) * g.w;
          const double* srow = src + oy * g.ow;
          for (std::size_t ox = cs.lo; ox < cs.hi; ++ox)
            drow[static_cast<std::ptrdiff_t>(ox * g.stride) + off] += srow[ox];
        }
      }
    }
  }
}

void conv_forward(const ConvGeometry& g, const double* in, const double* wt, const double* bias,
                  double* out) {
  const ConstMap weight(wt, static_cast<Eigen::Index>(g.cout), static_cast<Eigen::Index>(g.patch()));
  std::vector<double> cols(g.pointwise() ? 0 : g.patch() * g.pixels());
  for (std::size_t n = 0; n < g.batch; ++n) {
    const double* in_n = in + n * g.cin * g.h * g.w;
    if (!g.pointwise()) im2col(g, in_n, cols.data());
    const ConstMap patches(g.pointwise() ? in_n : cols.data(),
                           static_cast<Eigen::Index>(g.patch()), static_cast<Eigen::Index>(g.pixels()));
    MutableMap o(out + n * g.cout * g.pixels(), static_cast<Eigen::Index>(g.cout),
                 static_cast<Eigen::Index>(g.pixels()));
    o.noalias() = weight * patches;
    for (std::size_t c = 0; c < g.cout; ++c)
      for (std::size_t i = 0; i < g.pixels(); ++i) o(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(i)) += bias[c];
  }
}

void conv_backward(const ConvGeometry& g, const double* gout, const double* in, const double* wt,
                   double* gin, double* gw, double* gb) {
  const ConstMap weight(wt, static_cast<Eigen::Index>(g.cout), static_cast<Eigen::Index>(g.patch()));
  std::vector<double> cols(g.patch() * g.pixels());
  for (std::size_t n = 0; n < g.batch; ++n) {
    const ConstMap go(gout + n * g.cout * g.pixels(), static_cast<Eigen::Index>(g.cout),
                      static_cast<Eigen::Index>(g.pixels()));
    if (gb) {
      const double* row = gout + n * g.cout * g.pixels();
      for (std::size_t c = 0; c < g.cout; ++c, row += g.pixels()) {
        double s = 0.0;
        for (std::size_t i = 0; i < g.pixels(); ++i) s += row[i];
        gb[c] += s;
      }
    }
    if (gw) {
      const double* in_n = in + n * g.cin * g.h * g.w;
      if (!g.pointwise()) im2col(g, in_n, cols.data());
      const ConstMap patches(g.pointwise() ? in_n : cols.data(),
                             static_cast<Eigen::Index>(g.patch()), static_cast<Eigen::Index>(g.pixels()));
      MutableMap weight_grad(gw, static_cast<Eigen::Index>(g.cout), static_cast<Eigen::Index>(g.patch()));
      weight_grad.noalias() += go * patches.transpose();
    }
    if (gin) {
      double* gin_n = gin + n * g.cin * g.h * g.w;
      if (g.pointwise()) {
        MutableMap gi(gin_n, static_cast<Eigen::Index>(g.cin), static_cast<Eigen::Index>(g.pixels()));
        gi.noalias() += weight.transpose() * go;
      } else {
        MutableMap dcols(cols.data(), static_cast<Eigen::Index>(g.patch()),
                         static_cast<Eigen::Index>(g.pixels()));
        dcols.noalias() = weight.transpose() * go;
        col2im(g, cols.data(), gin_n);
      }
    }
  }
}

// Broadcasting support for binary ops.
struct Broadcast {
  Shape out;
  std::vector<std::size_t> a_index;  // empty when a matches `out` exactly
  std::vector<std::size_t> b_index;
};

std::vector<std::size_t> broadcast_index(const Shape& src, const Shape& out) {
  const std::size_t n = numel(out);
  std::vector<std::size_t> idx(n);
  if (numel(src) == 1) return std::vector<std::size_t>(n, 0);
  const std::size_t rank = out.size();
  std::vector<std::size_t> src_stride(rank, 0);
  std::size_t stride = 1;
  for (std::size_t d = rank; d-- > 0;) {
    src_stride[d] = src[d] == 1 ? 0 : stride;
    stride *= src[d];
  }
  std::vector<std::size_t> counter(rank, 0);
  std::size_t offset = 0;
  for (std::size_t i = 0; i < n; ++i) {
    idx[i] = offset;
    for (std::size_t d = rank; d-- > 0;) {
      ++counter[d];
      offset += src_stride[d];
      if (counter[d] < out[d]) break;
      offset -= src_stride[d] * counter[d];
      counter[d] = 0;
    }
  }
  return idx;
}

Broadcast plan_broadcast(const Tensor& a, const Tensor& b, const char* op) {
  Broadcast plan;
  if (a.shape() == b.shape()) {
    plan.out = a.shape();
    return plan;
  }
  if (b.numel() == 1) {
    plan.out = a.shape();
    plan.b_index.assign(a.numel(), 0);
    return plan;
  }
  if (a.numel() == 1) {
    plan.out = b.shape();
    plan.a_index.assign(b.numel(), 0);
    return plan;
  }
  if (a.rank() != b.rank()) {
    throw ShapeError(std::string(op) + ": cannot broadcast " + to_string(a.shape()) + " with " +
                     to_string(b.shape()) + " (rank differs)");
  }
  plan.out.resize(a.rank());
  for (std::size_t d = 0; d < a.rank(); ++d) {
    const std::size_t x = a.shape()[d], y = b.shape()[d];
    if (x != y && x != 1 && y != 1) {
      throw ShapeError(std::string(op) + ": dimension " + std::to_string(d) + " mismatch (" +
                       std::to_string(x) + " vs " + std::to_string(y) + ")");
    }
    plan.out[d] = std::max(x, y);
  }
  if (a.shape() != plan.out) plan.a_index = broadcast_index(a.shape(), plan.out);
  if (b.shape() != plan.out) plan.b_index = broadcast_index(b.shape(), plan.out);
  return plan;
}

template <class Forward, class GradA, class GradB>
Tensor binary(const Tensor& a, const Tensor& b, const char* name, Forward f, GradA da, GradB db) {
  auto plan = std::make_shared<Broadcast>(plan_broadcast(a, b, name));
  const std::size_t n = numel(plan->out);
  const auto av = a.data();
  const auto bv = b.data();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = av[plan->a_index.empty() ? i : plan->a_index[i]];
    const double y = bv[plan->b_index.empty() ? i : plan->b_index[i]];
    out[i] = f(x, y, i);
  }
  Tensor result(plan->out, std::move(out));
  return Tape::record(result, {&a, &b}, [a, b, plan, da, db](std::span<const double> g, Tape& tape) {
    const auto av = a.data();
    const auto bv = b.data();
    auto ga = tape.grad_slot(a);
    auto gb = tape.grad_slot(b);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const std::size_t ia = plan->a_index.empty() ? i : plan->a_index[i];
      const std::size_t ib = plan->b_index.empty() ? i : plan->b_index[i];
      if (!ga.empty()) ga[ia] += g[i] * da(av[ia], bv[ib]);
      if (!gb.empty()) gb[ib] += g[i] * db(av[ia], bv[ib]);
    }
  });
}

// f(x) with derivative expressed through input x and output y.
template <class Forward, class Derivative>
Tensor unary(const Tensor& x, Forward f, Derivative df) {
  const auto xv = x.data();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = f(xv[i]);
  Tensor result(x.shape(), std::move(out));
  return Tape::record(result, {&x}, [x, result, df](std::span<const double> g, Tape& tape) {
    auto gx = tape.grad_slot(x);
    const auto xv = x.data();
    const auto yv = result.data();
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * df(xv[i], yv[i]);
  });
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, std::size_t stride,
              std::size_t padding) {
  require_rank4(input, "conv2d input");
  require_rank4(weight, "conv2d weight");
  if (stride == 0) throw ShapeError("conv2d: stride must be positive");
  ConvGeometry g{};
  g.batch = input.dim(0);
  g.cin = input.dim(1);
  g.h = input.dim(2);
  g.w = input.dim(3);
  g.cout = weight.dim(0);
  g.kh = weight.dim(2);
  g.kw = weight.dim(3);
  g.stride = stride;
  g.pad = padding;
  if (weight.dim(1) != g.cin) {
    throw ShapeError("conv2d: weight input-channel dimension is " + std::to_string(weight.dim(1)) +
                     " but input has " + std::to_string(g.cin) + " channels");
  }
  if (g.kh % 2 == 0 || g.kw % 2 == 0) {
    throw ShapeError("conv2d: kernel extents must be odd, got " + to_string(weight.shape()));
  }
  if (bias.numel() != g.cout) {
    throw ShapeError("conv2d: bias has " + std::to_string(bias.numel()) + " entries for " +
                     std::to_string(g.cout) + " output channels");
  }
  if (g.h + 2 * padding < g.kh || g.w + 2 * padding < g.kw) {
    throw ShapeError("conv2d: kernel " + to_string(weight.shape()) + " larger than padded input " +
                     to_string(input.shape()));
  }
  g.oh = (g.h + 2 * padding - g.kh) / stride + 1;
  g.ow = (g.w + 2 * padding - g.kw) / stride + 1;

  std::vector<double> out(g.batch * g.cout * g.oh * g.ow);
  conv_forward(g, input.data().data(), weight.data().data(), bias.data().data(), out.data());
  Tensor result({g.batch, g.cout, g.oh, g.ow}, std::move(out));
  return Tape::record(result, {&input, &weight, &bias},
                      [input, weight, bias, g](std::span<const double> go, Tape& tape) {
                        auto gi = tape.grad_slot(input);
                        auto gw = tape.grad_slot(weight);
                        auto gb = tape.grad_slot(bias);
                        conv_backward(g, go.data(), input.data().data(), weight.data().data(),
                                      gi.empty() ? nullptr : gi.data(),
                                      gw.empty() ? nullptr : gw.data(),
                                      gb.empty() ? nullptr : gb.data());
                      });
}

Tensor upsample_nearest(const Tensor& input, std::size_t factor) {
  require_rank4(input, "upsample input");
  if (factor == 0) throw ShapeError("upsample_nearest: factor must be >= 1");
  const std::size_t planes = input.dim(0) * input.dim(1);
  const std::size_t h = input.dim(2), w = input.dim(3);
  const std::size_t oh = h * factor, ow = w * factor;
  const auto src = input.data();
  std::vector<double> out(planes * oh * ow);
  for (std::size_t p = 0; p < planes; ++p)
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t x = 0; x < ow; ++x)
        out[(p * oh + y) * ow + x] = src[(p * h + y / factor) * w + x / factor];
  Tensor result({input.dim(0), input.dim(1), oh, ow}, std::move(out));
  return Tape::record(result, {&input}, [input, factor](std::span<const double> g, Tape& tape) {
    auto gi = tape.grad_slot(input);
    const std::size_t planes = input.dim(0) * input.dim(1);
    const std::size_t h = input.dim(2), w = input.dim(3);
    const std::size_t oh = h * factor, ow = w * factor;
    for (std::size_t p = 0; p < planes; ++p)
      for (std::size_t y = 0; y < oh; ++y)
        for (std::size_t x = 0; x < ow; ++x)
          gi[(p * h + y / factor) * w + x / factor] += g[(p * oh + y) * ow + x];
  });
}

Tensor leaky_relu(const Tensor& x, double slope) {
  if (!(slope >= 0.0 && slope < 1.0)) throw ConfigError("leaky_relu: slope must lie in [0,1)");
  return unary(
      x, [slope](double v) { return v >= 0.0 ? v : slope * v; },
      [slope](double v, double) { return v >= 0.0 ? 1.0 : slope; });
}

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "add", [](double x, double y, std::size_t) { return x + y; },
      [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "sub", [](double x, double y, std::size_t) { return x - y; },
      [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "mul", [](double x, double y, std::size_t) { return x * y; },
      [](double, double y) { return y; }, [](double x, double) { return x; });
}

Tensor div(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "div",
      [](double x, double y, std::size_t i) {
        if (std::abs(y) < 1e-12) {
          throw NumericalError("div: denominator magnitude " + std::to_string(std::abs(y)) +
                               " below 1e-12 at element " + std::to_string(i));
        }
        return x / y;
      },
      [](double, double y) { return 1.0 / y; }, [](double x, double y) { return -x / (y * y); });
}

Tensor scale(const Tensor& x, double factor) {
  return unary(
      x, [factor](double v) { return v * factor; }, [factor](double, double) { return factor; });
}

Tensor shift(const Tensor& x, double offset) {
  return unary(
      x, [offset](double v) { return v + offset; }, [](double, double) { return 1.0; });
}

Tensor pow(const Tensor& x, double exponent) {
  return unary(
      x, [exponent](double v) { return std::pow(v, exponent); },
      [exponent](double v, double) { return exponent * std::pow(v, exponent - 1.0); });
}

Tensor sigmoid(const Tensor& x) {
  return unary(
      x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& x) {
  return unary(
      x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor sqrt(const Tensor& x) {
  return unary(
      x, [](double v) { return std::sqrt(v); }, [](double, double y) { return 0.5 / y; });
}

Tensor abs(const Tensor& x) {
  return unary(
      x, [](double v) { return std::abs(v); },
      [](double v, double) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

Tensor clamp(const Tensor& x, double lo, double hi) {
  return unary(
      x, [lo, hi](double v) { return std::clamp(v, lo, hi); },
      [lo, hi](double v, double) { return v > lo && v < hi ? 1.0 : 0.0; });
}

Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v;
  return Tape::record(Tensor::scalar(s), {&x}, [x](std::span<const double> g, Tape& tape) {
    auto gx = tape.grad_slot(x);
    for (double& v : gx) v += g[0];
  });
}

Tensor mean(const Tensor& x) {
  if (x.empty()) throw ShapeError("mean of an empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(x.numel()));
}

Tensor sum_channels(const Tensor& x) {
  require_rank4(x, "sum_channels input");
  const std::size_t bn = x.dim(0), c = x.dim(1), plane = x.dim(2) * x.dim(3);
  const auto xv = x.data();
  std::vector<double> out(bn * plane, 0.0);
  for (std::size_t b = 0; b < bn; ++b)
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t i = 0; i < plane; ++i) out[b * plane + i] += xv[(b * c + ch) * plane + i];
  Tensor result({bn, 1, x.dim(2), x.dim(3)}, std::move(out));
  return Tape::record(result, {&x}, [x](std::span<const double> g, Tape& tape) {
    auto gx = tape.grad_slot(x);
    const std::size_t bn = x.dim(0), c = x.dim(1), plane = x.dim(2) * x.dim(3);
    for (std::size_t b = 0; b < bn; ++b)
      for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t i = 0; i < plane; ++i) gx[(b * c + ch) * plane + i] += g[b * plane + i];
  });
}

Tensor concat_channels(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_channels: no inputs");
  for (const auto& p : parts) require_rank4(p, "concat_channels input");
  const std::size_t bn = parts[0].dim(0), h = parts[0].dim(2), w = parts[0].dim(3);
  std::size_t channels = 0;
  for (const auto& p : parts) {
    if (p.dim(0) != bn) throw ShapeError("concat_channels: batch dimension mismatch");
    if (p.dim(2) != h) throw ShapeError("concat_channels: height dimension mismatch");
    if (p.dim(3) != w) throw ShapeError("concat_channels: width dimension mismatch");
    channels += p.dim(1);
  }
  const std::size_t plane = h * w;
  std::vector<double> out(bn * channels * plane);
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    offsets.push_back(offset);
    const auto pv = p.data();
    const std::size_t pc = p.dim(1);
    for (std::size_t b = 0; b < bn; ++b)
      std::copy_n(pv.begin() + b * pc * plane, pc * plane,
                  out.begin() + (b * channels + offset) * plane);
    offset += pc;
  }
  Tensor result({bn, channels, h, w}, std::move(out));
  std::vector<Tensor> saved(parts.begin(), parts.end());
  std::vector<const Tensor*> parents;
  for (const auto& p : saved) parents.push_back(&p);
  return Tape::record(result, parents,
                      [saved, offsets, channels, plane](std::span<const double> g, Tape& tape) {
                        for (std::size_t k = 0; k < saved.size(); ++k) {
                          auto gp = tape.grad_slot(saved[k]);
                          if (gp.empty()) continue;
                          const std::size_t pc = saved[k].dim(1);
                          const std::size_t bn = saved[k].dim(0);
                          for (std::size_t b = 0; b < bn; ++b)
                            for (std::size_t i = 0; i < pc * plane; ++i)
                              gp[b * pc * plane + i] +=
                                  g[(b * channels + offsets[k]) * plane + i];
                        }
                      });
}

Tensor slice_channels(const Tensor& x, std::size_t begin, std::size_t count) {
  require_rank4(x, "slice_channels input");
  if (begin + count > x.dim(1) || count == 0) {
    throw ShapeError("slice_channels: channels [" + std::to_string(begin) + "," +
                     std::to_string(begin + count) + ") outside " + std::to_string(x.dim(1)));
  }
  const std::size_t bn = x.dim(0), c = x.dim(1), plane = x.dim(2) * x.dim(3);
  const auto xv = x.data();
  std::vector<double> out(bn * count * plane);
  for (std::size_t b = 0; b < bn; ++b)
    std::copy_n(xv.begin() + (b * c + begin) * plane, count * plane,
                out.begin() + b * count * plane);
  Tensor result({bn, count, x.dim(2), x.dim(3)}, std::move(out));
  return Tape::record(result, {&x}, [x, begin, count](std::span<const double> g, Tape& tape) {
    auto gx = tape.grad_slot(x);
    const std::size_t bn = x.dim(0), c = x.dim(1), plane = x.dim(2) * x.dim(3);
    for (std::size_t b = 0; b < bn; ++b)
      for (std::size_t i = 0; i < count * plane; ++i)
        gx[(b * c + begin) * plane + i] += g[b * count * plane + i];
  });
}

Tensor crop(const Tensor& x, std::size_t y0, std::size_t height, std::size_t x0,
            std::size_t width) {
  require_rank4(x, "crop input");
  if (y0 + height > x.dim(2)) throw ShapeError("crop: rows exceed height dimension");
  if (x0 + width > x.dim(3)) throw ShapeError("crop: columns exceed width dimension");
  const std::size_t planes = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
  const auto xv = x.data();
  std::vector<double> out(planes * height * width);
  for (std::size_t p = 0; p < planes; ++p)
    for (std::size_t y = 0; y < height; ++y)
      for (std::size_t c = 0; c < width; ++c)
        out[(p * height + y) * width + c] = xv[(p * h + y0 + y) * w + x0 + c];
  Tensor result({x.dim(0), x.dim(1), height, width}, std::move(out));
  return Tape::record(result, {&x},
                      [x, y0, height, x0, width](std::span<const double> g, Tape& tape) {
                        auto gx = tape.grad_slot(x);
                        const std::size_t planes = x.dim(0) * x.dim(1), h = x.dim(2),
                                          w = x.dim(3);
                        for (std::size_t p = 0; p < planes; ++p)
                          for (std::size_t y = 0; y < height; ++y)
                            for (std::size_t c = 0; c < width; ++c)
                              gx[(p * h + y0 + y) * w + x0 + c] +=
                                  g[(p * height + y) * width + c];
                      });
}

Tensor channel_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  require_rank4(x, "channel_norm input");
  const std::size_t bn = x.dim(0), c = x.dim(1), plane = x.dim(2) * x.dim(3);
  if (gain.numel() != c || bias.numel() != c) {
    throw ShapeError("channel_norm: gain/bias must have " + std::to_string(c) + " entries");
  }
  const auto xv = x.data();
  const auto gv = gain.data();
  const auto bv = bias.data();
  std::vector<double> out(xv.size());
  // Per (batch, channel): normalized values and inverse std, kept for backward.
  auto xhat = std::make_shared<std::vector<double>>(xv.size());
  auto inv_std = std::make_shared<std::vector<double>>(bn * c);
  for (std::size_t b = 0; b < bn; ++b) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      const std::size_t base = (b * c + ch) * plane;
      double m = 0.0;
      for (std::size_t i = 0; i < plane; ++i) m += xv[base + i];
      m /= static_cast<double>(plane);
      double var = 0.0;
      for (std::size_t i = 0; i < plane; ++i) {
        const double d = xv[base + i] - m;
        var += d * d;
      }
      var /= static_cast<double>(plane);
      const double is = 1.0 / std::sqrt(var + eps);
      (*inv_std)[b * c + ch] = is;
      for (std::size_t i = 0; i < plane; ++i) {
        const double xh = (xv[base + i] - m) * is;
        (*xhat)[base + i] = xh;
        out[base + i] = xh * gv[ch] + bv[ch];
      }
    }
  }
  Tensor result(x.shape(), std::move(out));
  return Tape::record(
      result, {&x, &gain, &bias},
      [x, gain, bias, xhat, inv_std](std::span<const double> g, Tape& tape) {
        auto gx = tape.grad_slot(x);
        auto gg = tape.grad_slot(gain);
        auto gbias = tape.grad_slot(bias);
        const std::size_t bn = x.dim(0), c = x.dim(1), plane = x.dim(2) * x.dim(3);
        const auto gv = gain.data();
        const double n = static_cast<double>(plane);
        for (std::size_t b = 0; b < bn; ++b) {
          for (std::size_t ch = 0; ch < c; ++ch) {
            const std::size_t base = (b * c + ch) * plane;
            double sum_g = 0.0, sum_gx = 0.0;
            for (std::size_t i = 0; i < plane; ++i) {
              sum_g += g[base + i];
              sum_gx += g[base + i] * (*xhat)[base + i];
            }
            if (!gg.empty()) gg[ch] += sum_gx;
            if (!gbias.empty()) gbias[ch] += sum_g;
            if (gx.empty()) continue;
            const double k = gv[ch] * (*inv_std)[b * c + ch] / n;
            for (std::size_t i = 0; i < plane; ++i)
              gx[base + i] += k * (n * g[base + i] - sum_g - (*xhat)[base + i] * sum_gx);
          }
        }
      });
}

}  // namespace paintlab
