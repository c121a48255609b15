#include <algorithm>
#include <cmath>
#include <numeric>

#include "gpath/error.hpp"
#include "gpath/metrics.hpp"
#include "json.hpp"

namespace gpath {

DimensionDiagnostics dimension_diagnostics(std::span<const std::span<const float>> vectors,
                                           std::span<const std::pair<std::size_t, std::size_t>> pairs,
                                           const DiagnosticsOptions& options) {
  if (vectors.empty()) throw Error("dimension diagnostics need at least one vector");
  DimensionDiagnostics d;
  d.count = vectors.size();
  d.dimensions = vectors.front().size();
  const auto dims = d.dimensions;

  std::vector<double> mean(dims, 0.0), m2(dims, 0.0), max_abs(dims, 0.0);
  for (const auto& v : vectors) {
    if (v.size() != dims) throw Error("dimension diagnostics: vectors differ in length");
    for (std::size_t i = 0; i < dims; ++i) {
      mean[i] += v[i];
      max_abs[i] = std::max(max_abs[i], std::fabs(static_cast<double>(v[i])));
    }
  }
  for (auto& m : mean) m /= static_cast<double>(d.count);
  for (const auto& v : vectors)
    for (std::size_t i = 0; i < dims; ++i) m2[i] += (v[i] - mean[i]) * (v[i] - mean[i]);

  double total_variance = 0;
  for (std::size_t i = 0; i < dims; ++i) {
    // population variance; only the ranking matters here
    const double var = m2[i] / static_cast<double>(d.count);
    d.per_dimension.push_back({i, mean[i], var, max_abs[i]});
    total_variance += var;
  }

  d.ranking.resize(dims);
  std::iota(d.ranking.begin(), d.ranking.end(), std::size_t{0});
  std::stable_sort(d.ranking.begin(), d.ranking.end(), [&](std::size_t x, std::size_t y) {
    return d.per_dimension[x].variance > d.per_dimension[y].variance;
  });
  const auto k = std::min(options.top_k, dims);
  d.rogue.assign(d.ranking.begin(), d.ranking.begin() + static_cast<std::ptrdiff_t>(k));

  double rogue_variance = 0;
  for (const auto r : d.rogue) rogue_variance += d.per_dimension[r].variance;
  if (total_variance > 0) {
    d.top_variance_share = rogue_variance / total_variance;
    d.dominance_ratio = d.per_dimension[d.ranking.front()].variance / (total_variance / static_cast<double>(dims));
  }
  d.dominated = d.dominance_ratio > options.dominance_threshold;

  std::vector<bool> is_rogue(dims, false);
  for (const auto r : d.rogue) is_rogue[r] = true;

  double l1_total = 0, l1_rogue = 0, cos_sum = 0, cos_zero_sum = 0, cos_change = 0;
  std::size_t cos_n = 0;
  for (const auto& [ia, ib] : pairs) {
    if (ia >= vectors.size() || ib >= vectors.size()) throw Error("dimension diagnostics: pair index out of range");
    const auto a = vectors[ia];
    const auto b = vectors[ib];
    double dot = 0, na = 0, nb = 0, dot_z = 0, na_z = 0, nb_z = 0;
    for (std::size_t i = 0; i < dims; ++i) {
      const double delta = std::fabs(static_cast<double>(a[i]) - static_cast<double>(b[i]));
      l1_total += delta;
      const double x = a[i] - mean[i];
      const double y = b[i] - mean[i];
      dot += x * y;
      na += x * x;
      nb += y * y;
      if (is_rogue[i]) {
        l1_rogue += delta;
      } else {
        dot_z += x * y;
        na_z += x * x;
        nb_z += y * y;
      }
    }
    ++d.pair_count;
    if (na > 0 && nb > 0 && na_z > 0 && nb_z > 0) {
      const double c = std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
      const double cz = std::clamp(dot_z / std::sqrt(na_z * nb_z), -1.0, 1.0);
      cos_sum += c;
      cos_zero_sum += cz;
      cos_change += std::fabs(c - cz);
      ++cos_n;
    }
  }
  if (d.pair_count) {
    const auto n = static_cast<double>(d.pair_count);
    d.mean_manhattan = l1_total / n;
    d.mean_manhattan_zeroed = (l1_total - l1_rogue) / n;
    d.rogue_share_of_l1 = l1_total > 0 ? l1_rogue / l1_total : 0;
  }
  if (cos_n) {
    const auto n = static_cast<double>(cos_n);
    d.mean_cosine = cos_sum / n;
    d.mean_cosine_zeroed = cos_zero_sum / n;
    d.mean_abs_cosine_change = cos_change / n;
  }
  return d;
}

std::string diagnostics_json(const DimensionDiagnostics& d) {
  nlohmann::ordered_json j;
  j["vectors"] = d.count;
  j["dimensions"] = d.dimensions;
  j["rogue_candidates"] = d.rogue;
  j["top_variance_share"] = d.top_variance_share;
  j["dominance_ratio"] = d.dominance_ratio;
  j["dominated"] = d.dominated;
  auto& infl = j["influence"];
  infl["pairs"] = d.pair_count;
  infl["mean_manhattan"] = d.mean_manhattan;
  infl["mean_manhattan_rogue_zeroed"] = d.mean_manhattan_zeroed;
  infl["rogue_share_of_l1"] = d.rogue_share_of_l1;
  infl["mean_cosine"] = d.mean_cosine;
  infl["mean_cosine_rogue_zeroed"] = d.mean_cosine_zeroed;
  infl["mean_abs_cosine_change"] = d.mean_abs_cosine_change;
  j["ranking"] = d.ranking;
  j["per_dimension"] = nlohmann::ordered_json::array();
  for (const auto& s : d.per_dimension)
    j["per_dimension"].push_back({{"dim", s.dimension}, {"mean", s.mean}, {"variance", s.variance}, {"max_abs", s.max_abs}});
  return j.dump(2);
}

}  // namespace gpath
