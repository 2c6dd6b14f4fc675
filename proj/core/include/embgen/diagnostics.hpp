#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <vector>

#include "embgen/clustering.hpp"
#include "embgen/embedding.hpp"

namespace embgen {

enum class StdKind { Population, Sample };

struct HeterogeneityOptions {
  StdKind std_kind = StdKind::Population;
};

struct HeterogeneityStats {
  std::size_t pairs = 0;
  double mean = 0.0;
  double median = 0.0;
  double std = 0.0;
  double iqr = 0.0;
};

/// Linear interpolation between order statistics at position p * (n - 1).
/// `sorted` must be ascending and non-empty.
double quantile_linear(const std::vector<double>& sorted, double p);

/// Statistics over the cosine similarities of all n(n-1)/2 unordered pairs.
/// Vectors are expected unit-norm (dot product is used). Throws for n < 2.
HeterogeneityStats heterogeneity_stats(const Vectors& vectors, const HeterogeneityOptions& options = {});

struct ClusterSize {
  int cluster = 0;
  std::size_t size = 0;
};

struct ClusterDiagnostics {
  std::vector<ClusterSize> sizes;                // largest first, ties by cluster id
  std::map<std::size_t, std::size_t> histogram;  // size -> number of clusters
  std::vector<std::size_t> top_sizes;            // at most ten, descending
  std::size_t noise = 0;
  std::vector<InertiaPoint> inertia_curve;
  std::optional<std::size_t> selected_k;
  Vectors projection;  // 2-D coordinates per point, empty when not computed
};

/// Builds the diagnostic tables. When `vectors` is non-empty a 2-D PCA
/// projection is attached.
ClusterDiagnostics cluster_diagnostics(const ClusterAssignment& assignment, const Vectors& vectors = {});

void write_heterogeneity_csv(const std::filesystem::path& path, const HeterogeneityStats& stats);

/// Writes cluster_sizes.csv, size_histogram.csv, inertia_curve.csv and
/// (if available) projection.csv into `out_dir`.
void write_cluster_diagnostics(const std::filesystem::path& out_dir, const ClusterDiagnostics& diag,
                               const ClusterAssignment& assignment, const std::vector<std::size_t>& ids);

}  // namespace embgen
