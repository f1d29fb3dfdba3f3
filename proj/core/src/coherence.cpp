#include "paintlab/coherence.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "paintlab/error.hpp"

namespace paintlab {

std::vector<double> symmetric_eigenvalues(std::vector<double> a, std::size_t n) {
  if (a.size() != n * n) throw ShapeError("symmetric_eigenvalues: matrix is not n x n");
  const auto at = [&a, n](std::size_t i, std::size_t j) -> double& { return a[i * n + j]; };
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0, diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      diag += at(i, i) * at(i, i);
      for (std::size_t j = i + 1; j < n; ++j) off += at(i, j) * at(i, j);
    }
    if (off <= 1e-30 * diag || off == 0.0) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (at(p, q) == 0.0) continue;
        const double theta = (at(q, q) - at(p, p)) / (2.0 * at(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = at(k, p), akq = at(k, q);
          at(k, p) = c * akp - s * akq;
          at(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = at(p, k), aqk = at(q, k);
          at(p, k) = c * apk - s * aqk;
          at(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = at(i, i);
  std::sort(eig.begin(), eig.end(), std::greater<>());
  return eig;
}

std::vector<double> singular_values(const std::vector<std::vector<double>>& rows) {
  const std::size_t n = rows.size();
  if (n == 0) throw ShapeError("singular_values needs at least one row");
  for (const auto& r : rows) {
    if (r.size() != rows[0].size()) throw ShapeError("gradient rows differ in length");
    for (double v : r)
      if (!std::isfinite(v)) throw NumericalError("non-finite entry in gradient matrix");
  }
  std::vector<double> gram(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < rows[i].size(); ++k) s += rows[i][k] * rows[j][k];
      gram[i * n + j] = gram[j * n + i] = s;
    }
  std::vector<double> sv = symmetric_eigenvalues(std::move(gram), n);
  for (double& v : sv) v = std::sqrt(std::max(v, 0.0));
  return sv;
}

CoherenceReport coherence_report(const std::vector<std::vector<double>>& rows) {
  CoherenceReport r;
  r.singular_values = singular_values(rows);
  const double hi = r.singular_values.front(), lo = r.singular_values.back();
  r.rank_deficient = !(lo >= 1e-12 * hi) || hi == 0.0;
  if (!r.rank_deficient) {
    for (double s : r.singular_values) r.ratios.push_back(s / lo);
    r.high_rank = hi / lo < 10.0;
  }
  return r;
}

CoherenceResult gradient_coherence(const Mesh& mesh, const EnvLight& env, const TextureSet& reference,
                                   const TextureSet& current, const CoherenceConfig& cfg) {
  if (cfg.views < 2) throw ConfigError("gradient coherence needs at least 2 views");
  std::vector<Camera> cams = sample_cameras(cfg.views, PoseRule::adjacent, cfg.seed, cfg.camera);
  if (cfg.repeat_view) std::fill(cams.begin(), cams.end(), cams.front());

  CoherenceResult out;
  std::vector<Tensor> targets;
  std::vector<GBuffer> gbuffers;
  for (const Camera& c : cams) {
    gbuffers.push_back(rasterize(mesh, c));
    targets.push_back(tonemap(shade(reference, gbuffers.back(), env)));
  }
  const SdsDraw draw = draw_sds(cfg.schedule, 0, targets[0].numel(), cfg.seed);
  for (std::size_t v = 0; v < cams.size(); ++v) {
    Tape tape;
    const TextureSet tex{tape.variable(current.diffuse), current.rough_metal, current.normal};
    const Tensor image = tonemap(shade(tex, gbuffers[v], env));
    const Tensor views[] = {image};
    const Tensor goals[] = {targets[v]};
    auto g = sds_surrogate(views, goals, draw, cfg.schedule.noise_scale);
    const GradientSeed seed{image, std::move(g[0])};
    tape.backward(std::span<const GradientSeed>(&seed, 1));
    out.gradients.push_back(tape.grad(tex.diffuse));
    out.renders.push_back(image.detach());
  }
  out.report = coherence_report(out.gradients);
  return out;
}

}  // namespace paintlab
