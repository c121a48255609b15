#include "gpath/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "gpath/error.hpp"

namespace gpath {

CenteringStats compute_centering(std::span<const std::span<const float>> vectors, std::string layer) {
  if (vectors.empty()) throw Error("centering needs at least one vector");
  CenteringStats stats;
  stats.layer = std::move(layer);
  stats.mean.assign(vectors.front().size(), 0.0);
  for (const auto& v : vectors) {
    if (v.size() != stats.mean.size()) throw Error("centering: vectors differ in length");
    for (std::size_t i = 0; i < v.size(); ++i) stats.mean[i] += v[i];
  }
  for (auto& m : stats.mean) m /= static_cast<double>(vectors.size());
  stats.count = vectors.size();
  return stats;
}

double manhattan(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size())
    throw Error("manhattan: length mismatch (" + std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
  double total = 0;
  for (std::size_t i = 0; i < a.size(); ++i) total += std::fabs(static_cast<double>(a[i]) - static_cast<double>(b[i]));
  return total;
}

double cosine_centered(std::span<const float> a, std::span<const float> b, const CenteringStats& stats) {
  if (a.size() != b.size() || a.size() != stats.mean.size()) throw Error("cosine: length mismatch");
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a[i] - stats.mean[i];
    const double y = b[i] - stats.mean[i];
    dot += x * y;
    na += x * x;
    nb += y * y;
  }
  if (na == 0.0 || nb == 0.0) throw DegenerateVectorError("cosine: centered vector has zero norm");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

std::vector<std::optional<double>> surprisal_difference(const std::vector<std::optional<double>>& base,
                                                        const std::vector<std::optional<double>>& variant,
                                                        const PairMap& pairs) {
  std::vector<std::optional<double>> out;
  out.reserve(pairs.pairs.size());
  for (const auto& [i, j] : pairs.pairs) {
    if (i < base.size() && j < variant.size() && base[i] && variant[j])
      out.emplace_back(*base[i] - *variant[j]);
    else
      out.emplace_back(std::nullopt);
  }
  return out;
}

}  // namespace gpath
