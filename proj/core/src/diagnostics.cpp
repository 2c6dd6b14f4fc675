#include "embgen/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "embgen/errors.hpp"
#include "embgen/jsonio.hpp"

namespace embgen {

namespace {

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

double quantile_linear(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw Error("quantile of an empty sample");
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

HeterogeneityStats heterogeneity_stats(const Vectors& vectors, const HeterogeneityOptions& options) {
  const std::size_t n = vectors.size();
  if (n < 2) throw Error("heterogeneity statistics need at least 2 vectors, got " + std::to_string(n));
  std::vector<double> sims;
  sims.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) sims.push_back(cosine_similarity(vectors[i], vectors[j]));
  }
  std::sort(sims.begin(), sims.end());

  HeterogeneityStats s;
  s.pairs = sims.size();
  double sum = 0.0;
  for (double v : sims) sum += v;
  s.mean = sum / static_cast<double>(sims.size());
  double sq = 0.0;
  for (double v : sims) sq += (v - s.mean) * (v - s.mean);
  const double denom = options.std_kind == StdKind::Sample ? static_cast<double>(sims.size()) - 1.0
                                                           : static_cast<double>(sims.size());
  s.std = denom > 0.0 ? std::sqrt(sq / denom) : 0.0;
  s.median = quantile_linear(sims, 0.5);
  s.iqr = quantile_linear(sims, 0.75) - quantile_linear(sims, 0.25);
  return s;
}

ClusterDiagnostics cluster_diagnostics(const ClusterAssignment& assignment, const Vectors& vectors) {
  ClusterDiagnostics d;
  std::map<int, std::size_t> counts;
  for (int label : assignment.labels) {
    if (label < 0) {
      ++d.noise;
    } else {
      ++counts[label];
    }
  }
  for (const auto& [cluster, size] : counts) {
    d.sizes.push_back({cluster, size});
    ++d.histogram[size];
  }
  std::stable_sort(d.sizes.begin(), d.sizes.end(),
                   [](const ClusterSize& a, const ClusterSize& b) { return a.size > b.size; });
  for (std::size_t i = 0; i < d.sizes.size() && i < 10; ++i) d.top_sizes.push_back(d.sizes[i].size);

  d.inertia_curve = assignment.inertia_curve;
  if (!assignment.inertia_curve.empty()) d.selected_k = assignment.inertia_curve.at(assignment.selected_index).k;

  if (!vectors.empty()) {
    if (vectors.size() != assignment.labels.size()) {
      throw Error("cluster_diagnostics: vector count does not match label count");
    }
    if (vectors.size() >= 3) {
      PcaReducer pca(2);
      d.projection = pca.reduce(vectors);
    }
  }
  return d;
}

void write_heterogeneity_csv(const std::filesystem::path& path, const HeterogeneityStats& stats) {
  std::string out = "statistic,value\n";
  out += "pairs," + std::to_string(stats.pairs) + "\n";
  out += "mean," + fmt_double(stats.mean) + "\n";
  out += "median," + fmt_double(stats.median) + "\n";
  out += "std," + fmt_double(stats.std) + "\n";
  out += "iqr," + fmt_double(stats.iqr) + "\n";
  write_text(path, out);
}

void write_cluster_diagnostics(const std::filesystem::path& out_dir, const ClusterDiagnostics& diag,
                               const ClusterAssignment& assignment, const std::vector<std::size_t>& ids) {
  std::filesystem::create_directories(out_dir);

  std::string sizes = "rank,cluster,size\n";
  for (std::size_t i = 0; i < diag.sizes.size(); ++i) {
    sizes += std::to_string(i + 1) + "," + std::to_string(diag.sizes[i].cluster) + "," +
             std::to_string(diag.sizes[i].size) + "\n";
  }
  write_text(out_dir / "cluster_sizes.csv", sizes);

  std::string hist = "size,clusters\n";
  for (const auto& [size, count] : diag.histogram) hist += std::to_string(size) + "," + std::to_string(count) + "\n";
  write_text(out_dir / "size_histogram.csv", hist);

  std::string curve = "k,inertia,selected\n";
  for (const auto& p : diag.inertia_curve) {
    const bool selected = diag.selected_k && *diag.selected_k == p.k;
    curve += std::to_string(p.k) + "," + fmt_double(p.inertia) + (selected ? ",1\n" : ",0\n");
  }
  write_text(out_dir / "inertia_curve.csv", curve);

  if (!diag.projection.empty()) {
    std::string proj = "id,cluster,x,y\n";
    for (std::size_t i = 0; i < diag.projection.size(); ++i) {
      const std::size_t id = i < ids.size() ? ids[i] : i;
      proj += std::to_string(id) + "," + std::to_string(assignment.labels[i]) + "," +
              fmt_double(diag.projection[i][0]) + "," +
              fmt_double(diag.projection[i].size() > 1 ? diag.projection[i][1] : 0.0) + "\n";
    }
    write_text(out_dir / "projection.csv", proj);
  }
}

}  // namespace embgen
