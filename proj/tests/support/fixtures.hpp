#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "embgen/consolidation.hpp"
#include "embgen/embedding.hpp"
#include "embgen/proximity.hpp"

namespace fixture {

inline std::vector<double> normalized(std::vector<double> v) {
  double n = 0.0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  for (double& x : v) x /= n;
  return v;
}

inline embgen::Vectors random_unit_vectors(std::size_t n, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  embgen::Vectors out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> v(dim);
    for (double& x : v) x = dist(gen);
    out.push_back(normalized(std::move(v)));
  }
  return out;
}

// Unit vector at `cos_target` similarity to e0 within the (e0, e_axis) plane.
inline std::vector<double> at_similarity(double cos_target, std::size_t axis, std::size_t dim) {
  std::vector<double> v(dim, 0.0);
  v[0] = cos_target;
  v[axis] = std::sqrt(1.0 - cos_target * cos_target);
  return v;
}

inline std::vector<embgen::CanonicalEntity> entities(std::size_t n, const std::string& prefix = "Entity") {
  std::vector<embgen::CanonicalEntity> out;
  for (std::size_t i = 0; i < n; ++i) {
    embgen::CanonicalEntity e;
    e.id = i;
    e.canonical_name = prefix + " " + std::to_string(i);
    e.surface_forms[e.canonical_name] = 1;
    e.description = "Description of " + e.canonical_name + ".";
    e.member_ed_ids = {i};
    out.push_back(std::move(e));
  }
  return out;
}

// Groups of the given sizes per cluster, members numbered consecutively.
inline std::vector<embgen::ProximityGroup> groups(const std::vector<std::pair<int, std::size_t>>& spec) {
  std::vector<embgen::ProximityGroup> out;
  std::size_t next = 0;
  for (const auto& [cluster, size] : spec) {
    embgen::ProximityGroup g;
    g.group_id = out.size();
    g.cluster_id = cluster;
    for (std::size_t i = 0; i < size; ++i) g.members.push_back(next++);
    g.formation_threshold = 0.75;
    out.push_back(std::move(g));
  }
  return out;
}

// Gaussian blobs of `per` points around each center.
inline embgen::Vectors blobs(const std::vector<std::vector<double>>& centers, std::size_t per, double spread,
                             std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> d(0.0, spread);
  embgen::Vectors out;
  for (const auto& c : centers) {
    for (std::size_t i = 0; i < per; ++i) {
      auto p = c;
      for (double& x : p) x += d(gen);
      out.push_back(p);
    }
  }
  return out;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("embgen-test-" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline std::filesystem::path source_dir() { return EMBGEN_SOURCE_DIR; }

}  // namespace fixture
