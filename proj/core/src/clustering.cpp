#include "embgen/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <map>
#include <set>

#include <Eigen/Dense>
#include <spdlog/spdlog.h>

#include "embgen/errors.hpp"
#include "embgen/rng.hpp"

namespace embgen {

namespace {

Eigen::MatrixXd to_matrix(const Vectors& points) {
  const std::size_t n = points.size();
  const std::size_t d = n ? points.front().size() : 0;
  Eigen::MatrixXd m(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    if (points[i].size() != d) throw Error("ragged point matrix");
    for (std::size_t j = 0; j < d; ++j) m(i, j) = points[i][j];
  }
  return m;
}

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out += c;
  }
  return out + "'";
}

}  // namespace

Vectors PcaReducer::reduce(const Vectors& points) {
  if (points.size() < 2) throw Error("pca: at least 2 vectors are required");
  const Eigen::MatrixXd x = to_matrix(points);
  std::size_t d = std::min<std::size_t>(n_components_, static_cast<std::size_t>(x.cols()));
  if (d > points.size() - 1) {
    spdlog::warn("pca: {} vectors cannot support {} components; reducing to {}", points.size(), d, points.size() - 1);
    d = points.size() - 1;
  }
  const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  Eigen::MatrixXd axes = svd.matrixV().leftCols(static_cast<Eigen::Index>(d));
  for (Eigen::Index c = 0; c < axes.cols(); ++c) {
    Eigen::Index arg = 0;
    axes.col(c).cwiseAbs().maxCoeff(&arg);
    if (axes(arg, c) < 0) axes.col(c) *= -1.0;
  }
  const Eigen::MatrixXd z = centered * axes;
  components_.assign(d, std::vector<double>(static_cast<std::size_t>(x.cols())));
  for (std::size_t c = 0; c < d; ++c) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) components_[c][j] = axes(j, static_cast<Eigen::Index>(c));
  }
  Vectors out(points.size(), std::vector<double>(d));
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t c = 0; c < d; ++c) out[i][c] = z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
  }
  return out;
}

json run_external_backend(const std::string& command, const json& params, const Vectors& vectors) {
  if (command.empty()) throw ConfigError({"external backend requires a command"});
  const auto dir = std::filesystem::temp_directory_path() /
                   ("embgen-backend-" + sha256_hex(params.dump() + std::to_string(vectors.size())).substr(0, 16));
  std::filesystem::create_directories(dir);
  const auto in = dir / "input.json";
  const auto out = dir / "output.json";
  std::filesystem::remove(out);
  write_json(in, json{{"params", params}, {"vectors", vectors}});
  const std::string cmd = command + " " + shell_quote(in.string()) + " " + shell_quote(out.string());
  const int rc = std::system(cmd.c_str());
  if (rc != 0) throw Error("external backend failed (exit " + std::to_string(rc) + "): " + command);
  json result = read_json(out);
  std::filesystem::remove_all(dir);
  return result;
}

json ExternalReducer::params() const {
  return json{{"backend", config_.backend},
              {"n_components", config_.n_components},
              {"n_neighbors", config_.n_neighbors},
              {"min_dist", config_.min_dist},
              {"metric", config_.metric},
              {"random_state", config_.random_state}};
}

Vectors ExternalReducer::reduce(const Vectors& points) {
  const json result = run_external_backend(config_.command, params(), points);
  auto out = result.at("vectors").get<Vectors>();
  if (out.size() != points.size()) throw Error("external reducer returned the wrong number of vectors");
  return out;
}

std::unique_ptr<Reducer> make_reducer(const ReducerConfig& config) {
  if (config.backend == "pca") return std::make_unique<PcaReducer>(config.n_components);
  return std::make_unique<ExternalReducer>(config);
}

namespace {

std::vector<std::size_t> kmeanspp_seeds(const Vectors& points, std::size_t k, Rng& rng) {
  const std::size_t n = points.size();
  std::vector<std::size_t> seeds{static_cast<std::size_t>(rng.uniform_index(n))};
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(points[i], points[seeds[0]]);
  while (seeds.size() < k) {
    double total = 0.0;
    for (double v : d2) total += v;
    std::size_t pick = 0;
    if (total <= 0.0) {
      pick = static_cast<std::size_t>(rng.uniform_index(n));
    } else {
      const double target = rng.uniform01() * total;
      double acc = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc > target && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
    }
    seeds.push_back(pick);
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], squared_distance(points[i], points[pick]));
  }
  return seeds;
}

KMeansResult lloyd(const Vectors& points, std::size_t k, Rng& rng, std::size_t max_iter) {
  const std::size_t n = points.size();
  const std::size_t dim = points.front().size();
  KMeansResult r;
  for (std::size_t s : kmeanspp_seeds(points, k, rng)) r.centroids.push_back(points[s]);
  r.labels.assign(n, -1);
  std::vector<double> dist(n, 0.0);
  for (r.iterations = 1; r.iterations <= max_iter; ++r.iterations) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double d = squared_distance(points[i], r.centroids[c]);
        if (d < best_d) {
          best_d = d;
          best = static_cast<int>(c);
        }
      }
      dist[i] = best_d;
      if (r.labels[i] != best) {
        r.labels[i] = best;
        changed = true;
      }
    }
    std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(r.labels[i]);
      ++counts[c];
      for (std::size_t j = 0; j < dim; ++j) sums[c][j] += points[i][j];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) {
        // Re-seed an empty cluster at the worst-served point, if any point is
        // not sitting exactly on its centroid.
        std::size_t far = 0;
        for (std::size_t i = 1; i < n; ++i) {
          if (dist[i] > dist[far]) far = i;
        }
        if (dist[far] > 0.0) {
          r.centroids[c] = points[far];
          dist[far] = 0.0;
          changed = true;
        }
        continue;
      }
      for (std::size_t j = 0; j < dim; ++j) r.centroids[c][j] = sums[c][j] / static_cast<double>(counts[c]);
    }
    if (!changed) break;
  }
  r.iterations = std::min(r.iterations, max_iter);
  r.inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    r.inertia += squared_distance(points[i], r.centroids[static_cast<std::size_t>(r.labels[i])]);
  }
  return r;
}

}  // namespace

KMeansResult kmeans(const Vectors& points, std::size_t k, std::uint64_t seed, std::size_t max_iter,
                    std::size_t n_init) {
  if (points.empty()) throw Error("kmeans: no points");
  if (k == 0 || k > points.size()) throw Error("kmeans: k must be in [1, n]");
  Rng rng(seed);
  KMeansResult best;
  for (std::size_t run = 0; run < std::max<std::size_t>(n_init, 1); ++run) {
    KMeansResult r = lloyd(points, k, rng, max_iter);
    if (run == 0 || r.inertia < best.inertia) best = std::move(r);
  }
  return best;
}

double total_sum_of_squares(const Vectors& points) {
  if (points.empty()) return 0.0;
  std::vector<double> mean(points.front().size(), 0.0);
  for (const auto& p : points) {
    for (std::size_t j = 0; j < p.size(); ++j) mean[j] += p[j];
  }
  for (double& m : mean) m /= static_cast<double>(points.size());
  double s = 0.0;
  for (const auto& p : points) s += squared_distance(p, mean);
  return s;
}

std::vector<std::size_t> candidate_ks(std::size_t k_min, std::size_t k_max, std::size_t max_candidates,
                                      std::size_t n_points) {
  const std::size_t hi = std::min(k_max, n_points > 0 ? n_points - 1 : 0);
  if (hi < k_min || max_candidates == 0) return {};
  if (max_candidates == 1) return {k_min};
  std::vector<std::size_t> out{k_min};
  if (hi - k_min + 1 <= max_candidates) {
    for (std::size_t k = k_min + 1; k <= hi; ++k) out.push_back(k);
    return out;
  }
  // Geometric spacing, but never a gap smaller than 1: small k stay dense
  // (every integer) and the grid thins out toward k_max.
  while (out.size() + 1 < max_candidates) {
    const double c = static_cast<double>(out.back());
    const double slots = static_cast<double>(max_candidates - out.size());
    const double next = std::floor(c * std::pow(static_cast<double>(hi) / c, 1.0 / slots) + 0.5);
    const std::size_t k = std::max(out.back() + 1, static_cast<std::size_t>(next));
    if (k >= hi) break;
    out.push_back(k);
  }
  out.push_back(hi);
  return out;
}

std::size_t select_elbow(const std::vector<InertiaPoint>& curve, double left_anchor) {
  if (curve.size() < 2) return 0;
  std::size_t best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < curve.size(); ++i) {
    const double k = static_cast<double>(curve[i].k);
    const double prev_k = i == 0 ? k - 1.0 : static_cast<double>(curve[i - 1].k);
    const double prev = i == 0 ? left_anchor : curve[i - 1].inertia;
    const double next_k = static_cast<double>(curve[i + 1].k);
    // Drop in slope across k; on unit spacing this is the plain second
    // difference prev - 2 * cur + next.
    const double value = (prev - curve[i].inertia) / (k - prev_k) - (curve[i].inertia - curve[i + 1].inertia) / (next_k - k);
    if (value > best_value) {
      best_value = value;
      best = i;
    }
  }
  return best_value <= 1e-12 ? 0 : best;
}

namespace {

// Relabels so that cluster ids are 0..k-1 in order of first appearance.
std::size_t compact_labels(std::vector<int>& labels) {
  std::map<int, int> remap;
  for (int& l : labels) {
    if (l < 0) continue;
    auto [it, _] = remap.try_emplace(l, static_cast<int>(remap.size()));
    l = it->second;
  }
  return remap.size();
}

}  // namespace

ClusterAssignment cluster_kmeans_elbow(const Vectors& points, const KMeansElbowOptions& options) {
  const std::size_t n = points.size();
  if (n < 2) throw Error("clustering needs at least 2 points, got " + std::to_string(n));
  if (options.k_min < 1) throw ConfigError({"k_min must be >= 1"});

  ClusterAssignment out;
  out.method = "kmeans";
  auto ks = candidate_ks(options.k_min, options.k_max, options.max_candidates, n);
  if (ks.empty()) {
    spdlog::warn("kmeans: {} points leave no candidate in [{}, {}]; using k = {}", n, options.k_min, options.k_max,
                 std::min(options.k_min, n));
    ks = {std::min(options.k_min, n)};
  }
  std::vector<KMeansResult> runs;
  for (std::size_t k : ks) {
    runs.push_back(kmeans(points, k, options.seed, options.max_iter, options.n_init));
    out.inertia_curve.push_back({k, runs.back().inertia});
  }
  const std::size_t anchor_k = ks.front() - 1;
  const double anchor = anchor_k <= 1 ? total_sum_of_squares(points)
                                      : kmeans(points, anchor_k, options.seed, options.max_iter, options.n_init).inertia;
  out.selected_index = select_elbow(out.inertia_curve, anchor);
  out.labels = runs[out.selected_index].labels;
  out.k = compact_labels(out.labels);
  return out;
}

ClusterAssignment cluster_density_external(const Vectors& points, const DensityConfig& config) {
  const json params{{"backend", "hdbscan"},
                    {"min_cluster_size", config.min_cluster_size},
                    {"min_samples", config.min_samples},
                    {"metric", config.metric},
                    {"cluster_selection_epsilon", config.cluster_selection_epsilon}};
  const json result = run_external_backend(config.command, params, points);
  ClusterAssignment out;
  out.method = "hdbscan";
  out.labels = result.at("labels").get<std::vector<int>>();
  if (out.labels.size() != points.size()) throw Error("external clusterer returned the wrong number of labels");
  out.k = compact_labels(out.labels);
  return out;
}

json to_json(const ClusterAssignment& assignment) {
  json curve = json::array();
  for (std::size_t i = 0; i < assignment.inertia_curve.size(); ++i) {
    curve.push_back({{"k", assignment.inertia_curve[i].k},
                     {"inertia", assignment.inertia_curve[i].inertia},
                     {"selected", i == assignment.selected_index}});
  }
  return json{{"method", assignment.method}, {"k", assignment.k}, {"labels", assignment.labels}, {"inertia_curve", curve}};
}

ClusterAssignment cluster_assignment_from_json(const json& j) {
  ClusterAssignment a;
  a.method = j.at("method").get<std::string>();
  a.k = j.at("k").get<std::size_t>();
  a.labels = j.at("labels").get<std::vector<int>>();
  const auto& curve = j.at("inertia_curve");
  for (std::size_t i = 0; i < curve.size(); ++i) {
    a.inertia_curve.push_back({curve[i].at("k").get<std::size_t>(), curve[i].at("inertia").get<double>()});
    if (curve[i].value("selected", false)) a.selected_index = i;
  }
  return a;
}

}  // namespace embgen
