#include <cmath>
#include <string>

#include "fanns/corpus.hpp"
#include "fanns/errors.hpp"
#include "fanns/random.hpp"

namespace fanns {
namespace {

struct Generated {
  std::vector<float> vectors;
  std::vector<double> attribute;
  std::vector<std::uint32_t> labels;
};

void normalize(float* v, std::size_t d) {
  const float norm = l2_norm(v, d);
  if (norm > 0.0F) {
    for (std::size_t j = 0; j < d; ++j) v[j] /= norm;
  }
}

Generated generate(const SyntheticOptions& opts) {
  if (opts.n == 0 || opts.dim == 0) throw InputError("synthetic corpus needs n >= 1 and d >= 1");
  if (opts.strength < 0.0 || opts.strength > 1.0) {
    throw InputError("cluster strength must lie in [0, 1]");
  }
  const std::size_t n = opts.n;
  const std::size_t d = opts.dim;
  Rng rng(opts.seed);
  Generated g;
  g.vectors.resize(n * d);
  g.attribute.resize(n);

  if (opts.attr_mode == AttributeMode::kIndependent) {
    for (std::size_t i = 0; i < n; ++i) {
      float* v = g.vectors.data() + i * d;
      for (std::size_t j = 0; j < d; ++j) v[j] = static_cast<float>(rng.normal());
      normalize(v, d);
      g.attribute[i] = rng.uniform();
    }
    return g;
  }

  std::vector<double> centers(kSyntheticClusters * d);
  for (double& c : centers) c = rng.normal();
  g.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto label = static_cast<std::uint32_t>(rng.below(kSyntheticClusters));
    g.labels[i] = label;
    float* v = g.vectors.data() + i * d;
    for (std::size_t j = 0; j < d; ++j) {
      v[j] = static_cast<float>(centers[label * d + j] + kSyntheticClusterNoise * rng.normal());
    }
    normalize(v, d);
    const double cluster_quantile =
        (static_cast<double>(label) + rng.uniform()) / static_cast<double>(kSyntheticClusters);
    const double noise = rng.uniform();
    g.attribute[i] = opts.strength * cluster_quantile + (1.0 - opts.strength) * noise;
  }
  return g;
}

}  // namespace

Corpus generate_synthetic(const SyntheticOptions& opts) {
  Generated g = generate(opts);
  return Corpus(opts.dim, std::move(g.vectors), std::move(g.attribute), opts.metric, true);
}

std::vector<std::uint32_t> synthetic_cluster_labels(const SyntheticOptions& opts) {
  return generate(opts).labels;
}

}  // namespace fanns
