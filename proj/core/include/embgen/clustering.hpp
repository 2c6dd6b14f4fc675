#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "embgen/embedding.hpp"
#include "embgen/jsonio.hpp"

namespace embgen {

/// Reduction backend settings. "pca" runs in-process; "umap" hands the
/// UMAP parameter set to an external command.
struct ReducerConfig {
  std::string backend = "umap";
  std::size_t n_components = 15;
  std::size_t n_neighbors = 50;
  double min_dist = 0.0;
  std::string metric = "cosine";
  std::uint64_t random_state = 42;
  std::string command;  // external backends: invoked as `command <in.json> <out.json>`
};

class Reducer {
 public:
  virtual ~Reducer() = default;
  virtual Vectors reduce(const Vectors& points) = 0;
  virtual std::string name() const = 0;
};

/// Principal component projection. Components are oriented so that their
/// largest-magnitude coordinate is positive. With fewer points than
/// components + 1 the output dimension drops to points - 1 (with a warning).
class PcaReducer final : public Reducer {
 public:
  explicit PcaReducer(std::size_t n_components) : n_components_(n_components) {}
  Vectors reduce(const Vectors& points) override;
  std::string name() const override { return "pca"; }

  /// Unit principal axes (rows) from the last reduce() call.
  const Vectors& components() const { return components_; }

 private:
  std::size_t n_components_;
  Vectors components_;
};

/// Writes {"params": ..., "vectors": [...]} to a temporary file, runs the
/// command with input and output paths, and reads `key` from the output JSON.
json run_external_backend(const std::string& command, const json& params, const Vectors& vectors);

class ExternalReducer final : public Reducer {
 public:
  explicit ExternalReducer(ReducerConfig config) : config_(std::move(config)) {}
  Vectors reduce(const Vectors& points) override;
  std::string name() const override { return config_.backend; }
  json params() const;

 private:
  ReducerConfig config_;
};

std::unique_ptr<Reducer> make_reducer(const ReducerConfig& config);

struct KMeansResult {
  std::vector<int> labels;
  Vectors centroids;
  double inertia = 0.0;
  std::size_t iterations = 0;
};

/// Lloyd's algorithm with k-means++ seeding. Ties in assignment go to the
/// lowest centroid index; a centroid that loses all its points is moved to
/// the point farthest from its current centroid.
KMeansResult kmeans(const Vectors& points, std::size_t k, std::uint64_t seed, std::size_t max_iter = 300,
                    std::size_t n_init = 1);

/// Sum of squared distances to the mean (inertia of the one-cluster solution).
double total_sum_of_squares(const Vectors& points);

/// Candidate cluster counts in [k_min, min(k_max, n - 1)], at most
/// `max_candidates` of them, always including both ends. When the range is
/// larger than the budget the grid is geometric with a minimum gap of 1, so
/// every small k is evaluated.
std::vector<std::size_t> candidate_ks(std::size_t k_min, std::size_t k_max, std::size_t max_candidates,
                                      std::size_t n_points);

struct InertiaPoint {
  std::size_t k = 0;
  double inertia = 0.0;
};

/// Index into `curve` of the elbow: the candidate with the largest drop in
/// slope, (I(prev) - I(k)) / (k - prev) - (I(k) - I(next)) / (next - k),
/// which is the second difference I(prev) - 2 I(k) + I(next) on unit
/// spacing. `left_anchor` is the inertia at k_min - 1 so the first candidate
/// is eligible. A flat curve (max value <= 1e-12) selects 0.
std::size_t select_elbow(const std::vector<InertiaPoint>& curve, double left_anchor);

struct ClusterAssignment {
  std::vector<int> labels;  // -1 marks noise (density backends only)
  std::size_t k = 0;
  std::string method;
  std::vector<InertiaPoint> inertia_curve;  // empty for density backends
  std::size_t selected_index = 0;
};

struct KMeansElbowOptions {
  std::size_t k_min = 2;
  std::size_t k_max = 100;
  std::size_t max_candidates = 50;
  std::size_t max_iter = 300;
  std::size_t n_init = 1;
  std::uint64_t seed = 42;
};

ClusterAssignment cluster_kmeans_elbow(const Vectors& points, const KMeansElbowOptions& options = {});

/// HDBSCAN parameters carried to an external clustering command, which must
/// answer {"labels": [...]} with -1 for noise.
struct DensityConfig {
  std::size_t min_cluster_size = 100;
  std::size_t min_samples = 30;
  std::string metric = "euclidean";
  double cluster_selection_epsilon = 0.1;
  std::string command;
};

ClusterAssignment cluster_density_external(const Vectors& points, const DensityConfig& config);

json to_json(const ClusterAssignment& assignment);
ClusterAssignment cluster_assignment_from_json(const json& j);

}  // namespace embgen
