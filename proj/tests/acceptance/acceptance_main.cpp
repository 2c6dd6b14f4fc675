// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Expected values come from the oracles in tests/support or from
// closed-form arithmetic in this file, never from the library under test.

#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "embgen/clustering.hpp"
#include "embgen/consolidation.hpp"
#include "embgen/dataset.hpp"
#include "embgen/diagnostics.hpp"
#include "embgen/jsonio.hpp"
#include "embgen/judge.hpp"
#include "embgen/llm.hpp"
#include "embgen/metrics.hpp"
#include "embgen/prompts.hpp"
#include "embgen/proximity.hpp"
#include "embgen/synthesis.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;
using embgen::json;
using embgen::Vectors;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects the first few failure messages of a criterion.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    ++failures_;
    if (failures_ <= 3) messages_ += (messages_.empty() ? "" : "; ") + what;
  }
  Outcome done(const std::string& summary) const {
    if (failures_ == 0) return {true, summary};
    return {false, std::to_string(failures_) + " failure(s): " + messages_};
  }

 private:
  std::size_t failures_ = 0;
  std::string messages_;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double x, int precision = 4) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(precision);
  os << x;
  return os.str();
}

struct CliResult {
  int status = -1;
  std::string out;
};

CliResult run_cli(const std::string& cli, const std::string& args) {
  CliResult r;
  const std::string cmd = "'" + cli + "' -q " + args;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int st = pclose(pipe);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

std::string trim(std::string s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  return s;
}

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// ---------------------------------------------------------------------------

std::string mutate(std::string s, std::mt19937_64& gen) {
  std::uniform_int_distribution<int> letter('a', 'z');
  const std::size_t edits = gen() % 3;
  for (std::size_t e = 0; e < edits; ++e) {
    const std::size_t at = gen() % s.size();
    switch (gen() % 4) {
      case 0: s[at] = static_cast<char>(letter(gen)); break;
      case 1: s.insert(s.begin() + static_cast<std::ptrdiff_t>(at), static_cast<char>(letter(gen))); break;
      case 2:
        if (s.size() > 1) s.erase(at, 1);
        break;
      default: s += " inc"; break;
    }
  }
  return s;
}

Outcome criterion_grouping() {
  Check c;
  std::mt19937_64 gen(1001);
  std::uniform_int_distribution<int> letter('a', 'z');
  double lib_seconds = 0.0;
  std::size_t merged_sets = 0;
  for (int set = 0; set < 500; ++set) {
    std::vector<std::string> bases(3 + gen() % 15);
    for (auto& b : bases) {
      const std::size_t len = 4 + gen() % 10;
      for (std::size_t i = 0; i < len; ++i) b += static_cast<char>(letter(gen));
    }
    std::vector<std::string> names(1 + gen() % 100);
    for (auto& n : names) n = mutate(bases[gen() % bases.size()], gen);

    const auto t0 = std::chrono::steady_clock::now();
    const auto got = embgen::group_entities(names, 0.85);
    lib_seconds += seconds_since(t0);

    const auto sim = oracle::tfidf_cosine_matrix(names);
    std::vector<std::size_t> nodes(names.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) nodes[i] = i;
    const auto want =
        oracle::bfs_components(nodes, [&](std::size_t a, std::size_t b) { return sim[a][b] >= 0.85 - 1e-9; });
    c.expect(got == want, "set " + std::to_string(set) + " partition differs");
    if (want.size() < names.size()) ++merged_sets;
  }
  c.expect(lib_seconds < 10.0, "grouping took " + fmt(lib_seconds, 2) + " s");
  return c.done("500 sets exact, " + std::to_string(merged_sets) + " with merges, " + fmt(lib_seconds, 2) + " s");
}

Outcome criterion_components() {
  Check c;
  std::mt19937_64 gen(2002);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  double lib_seconds = 0.0;
  for (int g = 0; g < 500; ++g) {
    const std::size_t n = 1 + gen() % 200;
    std::vector<std::size_t> pool(1000);
    for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
    std::shuffle(pool.begin(), pool.end(), gen);
    std::vector<std::size_t> nodes(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n));

    std::vector<embgen::ProximityEdge> edges;
    std::set<std::pair<std::size_t, std::size_t>> linked;
    std::vector<std::vector<std::size_t>> got;
    if (g % 2 == 0) {
      const double p = u01(gen) * 3.0 / static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
          if (u01(gen) >= p) continue;
          const auto a = std::min(nodes[i], nodes[j]);
          const auto b = std::max(nodes[i], nodes[j]);
          edges.push_back({a, b, 1.0});
          linked.insert({a, b});
        }
      }
      const auto t0 = std::chrono::steady_clock::now();
      got = embgen::connected_components(nodes, edges);
      lib_seconds += seconds_since(t0);
      const auto want = oracle::bfs_components(
          nodes, [&](std::size_t a, std::size_t b) { return linked.count({std::min(a, b), std::max(a, b)}) > 0; });
      c.expect(got == want, "edge graph " + std::to_string(g) + " differs");
    } else {
      // Threshold graph over clustered unit vectors, the way proximity groups
      // are formed.
      const auto centers = fixture::random_unit_vectors(1 + gen() % 6, 8, gen());
      Vectors vectors(1000);
      std::normal_distribution<double> noise(0.0, 0.15 + 0.3 * u01(gen));
      for (std::size_t id : nodes) {
        auto v = centers[gen() % centers.size()];
        for (double& x : v) x += noise(gen);
        vectors[id] = fixture::normalized(v);
      }
      const auto t0 = std::chrono::steady_clock::now();
      const auto graph = embgen::build_proximity_graph(0, nodes, vectors, 0.75);
      got = embgen::connected_components(graph.nodes, graph.edges);
      lib_seconds += seconds_since(t0);
      const auto want = oracle::bfs_components(nodes, [&](std::size_t a, std::size_t b) {
        return oracle::cosine(vectors[a], vectors[b]) >= 0.75 - 1e-9;
      });
      c.expect(got == want, "threshold graph " + std::to_string(g) + " differs");
    }
  }
  c.expect(lib_seconds < 10.0, "components took " + fmt(lib_seconds, 2) + " s");
  return c.done("500 graphs exact, " + fmt(lib_seconds, 2) + " s");
}

Outcome criterion_refinement() {
  Check c;
  std::mt19937_64 gen(3003);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const embgen::ProximityOptions options;  // 0.75 / 0.01 / 10 / 0.5 / 10 attempts
  std::size_t groups_seen = 0;
  std::size_t expanded = 0;
  for (int k = 0; k < 200; ++k) {
    const std::size_t n = 1 + gen() % 80;
    const auto centers = fixture::random_unit_vectors(1 + gen() % 3, 6, gen());
    std::normal_distribution<double> noise(0.0, 0.05 + 0.4 * u01(gen));
    Vectors vectors;
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < n; ++i) {
      auto v = centers[gen() % centers.size()];
      for (double& x : v) x += noise(gen);
      vectors.push_back(fixture::normalized(v));
      members.push_back(i);
    }
    const auto groups = embgen::build_cluster_groups(k, members, vectors, options);
    std::vector<std::size_t> covered;
    for (const auto& g : groups) {
      ++groups_seen;
      c.expect(!g.members.empty() && g.members.size() <= 10,
               "cluster " + std::to_string(k) + " group of size " + std::to_string(g.members.size()));
      c.expect(g.formation_threshold >= 0.5 - 1e-12,
               "cluster " + std::to_string(k) + " threshold " + fmt(g.formation_threshold));
      if (g.formation_threshold < options.tau - 1e-12) ++expanded;
      covered.insert(covered.end(), g.members.begin(), g.members.end());
    }
    std::sort(covered.begin(), covered.end());
    c.expect(covered == members, "cluster " + std::to_string(k) + " groups are not a partition");

    // An unbounded attempt budget must still stop at the floor.
    if (n >= 2) {
      embgen::ProximityOptions deep = options;
      deep.max_expansion_attempts = 1000;
      const std::vector<std::size_t> rest(members.begin() + 1, members.end());
      const auto r = embgen::expand_singleton(0, rest, vectors, deep);
      c.expect(r.group.formation_threshold >= 0.5 - 1e-12, "unbounded expansion went below the floor");
      c.expect(r.group.members.size() <= 10, "expansion exceeded the size cap");
    }
  }

  auto pair_at = [](double cos) { return Vectors{fixture::at_similarity(1.0, 1, 3), fixture::at_similarity(cos, 1, 3)}; };
  const auto near = embgen::expand_singleton(0, {1}, pair_at(0.70), options);
  c.expect(near.expanded && near.group.members == std::vector<std::size_t>{0, 1},
           "neighbour at 0.70 not absorbed");
  c.expect(std::abs(near.group.formation_threshold - 0.70) < 1e-9 && near.attempts == 5,
           "neighbour at 0.70 found at " + fmt(near.group.formation_threshold) + " after " +
               std::to_string(near.attempts) + " attempts");
  const auto far = embgen::expand_singleton(0, {1}, pair_at(0.60), options);
  c.expect(!far.expanded && far.group.members == std::vector<std::size_t>{0} && far.attempts == 10,
           "neighbour at 0.60 should leave a singleton after 10 attempts");
  c.expect(embgen::build_cluster_groups(0, {0, 1}, pair_at(0.70), options).size() == 1,
           "cluster with a 0.70 pair should form one group");
  c.expect(embgen::build_cluster_groups(0, {0, 1}, pair_at(0.60), options).size() == 2,
           "cluster with a 0.60 pair should stay two singletons");
  return c.done("200 clusters, " + std::to_string(groups_seen) + " groups (" + std::to_string(expanded) +
                " expanded), forced outcomes exact");
}

Outcome criterion_ratio_law() {
  Check c;
  // 9 + 21 + 30 groups at 2 QAs each: n_prox = 18 / 42 / 60, total 120.
  std::vector<std::pair<int, std::size_t>> spec;
  const std::map<int, std::size_t> groups_per_cluster = {{0, 9}, {1, 21}, {2, 30}};
  for (const auto& [cluster, count] : groups_per_cluster) {
    for (std::size_t i = 0; i < count; ++i) spec.push_back({cluster, 1 + i % 3});
  }
  const auto groups = fixture::groups(spec);
  std::size_t members = 0;
  for (const auto& g : groups) members += g.members.size();
  const auto entities = fixture::entities(members);

  embgen::MockChatClient teacher([](const embgen::ChatRequest&) {
    return std::string(R"([{"question": "Q one?", "answer": "A one."}, {"question": "Q two?", "answer": "A two."}])");
  });
  const auto prompts = embgen::PromptLibrary::builtin();
  const auto result = embgen::run_generation(groups, entities, teacher, prompts);

  std::map<int, std::size_t> prox, intra;
  std::size_t inter = 0;
  for (const auto& qa : result.qas) {
    std::set<int> clusters;
    for (std::size_t g : qa.source_groups) clusters.insert(groups.at(g).cluster_id);
    switch (qa.strategy) {
      case embgen::Strategy::Proximity: prox[*clusters.begin()]++; break;
      case embgen::Strategy::Intra:
        c.expect(clusters.size() == 1, "intra QA spans clusters");
        intra[*clusters.begin()]++;
        break;
      case embgen::Strategy::Inter:
        c.expect(clusters.size() >= 2, "inter QA has single-cluster provenance");
        ++inter;
        break;
    }
  }
  std::size_t prox_total = 0;
  std::string summary = "n_intra";
  for (const auto& [cluster, count] : groups_per_cluster) {
    const std::size_t n_prox = 2 * count;
    prox_total += n_prox;
    const auto want_intra = static_cast<std::size_t>(std::floor(static_cast<double>(n_prox) * 0.5 + 0.5));
    c.expect(prox[cluster] == n_prox, "cluster " + std::to_string(cluster) + " n_prox " + std::to_string(prox[cluster]));
    c.expect(intra[cluster] == want_intra, "cluster " + std::to_string(cluster) + " n_intra " +
                                               std::to_string(intra[cluster]) + " want " + std::to_string(want_intra));
    summary += " " + std::to_string(intra[cluster]);
  }
  c.expect(prox_total == 120, "n_prox total " + std::to_string(prox_total));
  c.expect(inter == 20, "n_inter " + std::to_string(inter) + " want 20");
  return c.done("n_prox 120, " + summary + ", n_inter " + std::to_string(inter));
}

Outcome criterion_prompt_assignment(const std::string& cli, const fs::path& work) {
  Check c;
  const json base_config = embgen::read_json(fixture::source_dir() / "configs" / "toy_mock.json");
  std::size_t records = 0, single = 0, multi = 0, fallback = 0;
  for (int seed = 1; records < 1000 && seed <= 40; ++seed) {
    json config = base_config;
    config["corpus"]["path"] = (fixture::source_dir() / "data" / "toy_corpus").string();
    config["seed"] = seed;
    const fs::path config_path = work / ("assign_" + std::to_string(seed) + ".json");
    embgen::write_json(config_path, config);
    const auto r = run_cli(cli, "generate --config '" + config_path.string() + "' --out '" + (work / "assign").string() + "'");
    if (r.status != 0) {
      c.expect(false, "generate failed for seed " + std::to_string(seed));
      break;
    }
    const fs::path run = trim(r.out);

    std::map<std::size_t, int> group_cluster;
    for (const auto& g : embgen::read_json(run / "proximity_groups.json")) {
      group_cluster[g.at("group_id").get<std::size_t>()] = g.at("cluster_id").get<int>();
    }
    const json prompts = embgen::read_json(run / "system_prompts.json");
    const std::string base_text = prompts.at("base").at("text");
    std::map<int, json> by_cluster;
    for (const auto& p : prompts.at("clusters")) by_cluster[p.at("cluster").get<int>()] = p;

    for (const auto& rec : embgen::read_jsonl(run / "dataset.jsonl")) {
      ++records;
      std::set<int> clusters;
      for (const auto& g : rec.at("provenance").at("source_groups")) clusters.insert(group_cluster.at(g.get<std::size_t>()));
      const std::string id = rec.at("system_prompt_id");
      const std::string text = rec.at("system_prompt_text");
      if (clusters.size() == 1) {
        ++single;
        const auto it = by_cluster.find(*clusters.begin());
        if (it == by_cluster.end()) {
          c.expect(id == "base" && text == base_text, "single-cluster record without S_k not on S0");
        } else {
          if (it->second.at("fallback").get<bool>()) ++fallback;
          c.expect(id == it->second.at("id").get<std::string>() && text == it->second.at("text").get<std::string>(),
                   "single-cluster record not on its cluster prompt");
        }
      } else {
        ++multi;
        c.expect(id == "base" && text == base_text, "multi-cluster record not on S0");
      }
    }
  }
  c.expect(records >= 1000, "only " + std::to_string(records) + " records");
  c.expect(single > 0 && multi > 0, "both provenance kinds must occur");
  return c.done(std::to_string(records) + " records (" + std::to_string(single) + " single, " +
                std::to_string(multi) + " multi, " + std::to_string(fallback) + " on fallback)");
}

embgen::JudgeVerdict verdict_from_code(const std::string& code) {
  embgen::JudgeVerdict v;
  for (std::size_t d = 0; d < 4; ++d) {
    v.scores[d] = code[d] == 'S' ? embgen::Level::Strong : code[d] == 'A' ? embgen::Level::Adequate : embgen::Level::Weak;
  }
  return v;
}

Outcome criterion_judge_aggregation() {
  Check c;
  // Ten runs per pair, one code per run: FA / Completeness / Relevance / Clarity.
  std::vector<std::array<std::string, 10>> fixture_runs = {
      // binaries 8/10 -> 1
      {"SSSS", "SASA", "SSAS", "SAAA", "SSSS", "SASS", "SSSA", "SAAS", "AWSS", "WSSS"},
      // binaries 5/10 -> 1 (half rounds up)
      {"SSSS", "SASS", "SSAA", "SAAS", "SSSS", "ASSS", "AASS", "WSSS", "SWSS", "ASAA"},
      // binaries 4/10 -> 0
      {"SSSS", "SASS", "SSAA", "SAAS", "ASSS", "AASS", "WSSS", "SWSS", "ASAA", "AAAA"},
      // all weak
      {"WWWW", "WWWW", "WWWW", "WWWW", "WWWW", "WWWW", "WWWW", "WWWW", "WWWW", "WWWW"},
      // FA mean 2.5 -> Strong label, 1.5 -> Adequate
      {"SWAA", "SWAA", "SWAA", "SWAA", "SWAA", "AAWW", "AAWW", "AAWW", "AAWW", "AAWW"},
      // Strong FA but Weak completeness every run -> 0
      {"SWSS", "SWSS", "SWSS", "SWSS", "SWSS", "SWSS", "SWSS", "SWSS", "SWSS", "SWSS"},
  };
  std::mt19937_64 gen(6006);
  const std::string levels = "WAS";
  while (fixture_runs.size() < 20) {
    std::array<std::string, 10> runs;
    for (auto& code : runs) {
      code.clear();
      for (int d = 0; d < 4; ++d) code += levels[gen() % 3];
    }
    fixture_runs.push_back(runs);
  }

  auto score = [](char ch) { return ch == 'S' ? 3 : ch == 'A' ? 2 : 1; };
  std::vector<embgen::AggregatedVerdict> aggregated;
  std::size_t want_positive = 0;
  for (std::size_t p = 0; p < fixture_runs.size(); ++p) {
    std::vector<embgen::JudgeVerdict> verdicts;
    std::array<int, 4> sums{};
    int binaries = 0;
    for (const auto& code : fixture_runs[p]) {
      verdicts.push_back(verdict_from_code(code));
      for (std::size_t d = 0; d < 4; ++d) sums[d] += score(code[d]);
      if (code[0] == 'S' && code[1] != 'W') ++binaries;
    }
    const auto agg = embgen::aggregate_runs(verdicts);
    if (!agg) {
      c.expect(false, "pair " + std::to_string(p) + " not aggregated");
      continue;
    }
    for (std::size_t d = 0; d < 4; ++d) {
      const int label = (sums[d] + 5) / 10;  // floor(sum / 10 + 0.5)
      c.expect(std::abs(agg->means[d] - sums[d] / 10.0) < 1e-12, "pair " + std::to_string(p) + " mean differs");
      c.expect(static_cast<int>(agg->labels[d]) == label, "pair " + std::to_string(p) + " label differs");
    }
    const int want_binary = 2 * binaries >= 10 ? 1 : 0;
    c.expect(std::abs(agg->binary_mean - binaries / 10.0) < 1e-12, "pair " + std::to_string(p) + " binary mean");
    c.expect(agg->binary == want_binary, "pair " + std::to_string(p) + " binary " + std::to_string(agg->binary));
    want_positive += static_cast<std::size_t>(want_binary);
    aggregated.push_back(*agg);
  }
  c.expect(aggregated.size() == 20 && aggregated[0].binary == 1 && aggregated[0].binary_mean == 0.8,
           "worked value: binaries mean 0.8 must give 1");
  const double accuracy = embgen::binary_accuracy(aggregated);
  c.expect(std::abs(accuracy - static_cast<double>(want_positive) / 20.0) < 1e-12, "binary accuracy " + fmt(accuracy));
  return c.done("20 pairs x 10 runs exact, binary accuracy " + std::to_string(want_positive) + "/20");
}

Outcome criterion_metrics() {
  Check c;
  const double b1 = embgen::bleu("the cat sat", "the cat sat down", 1);
  c.expect(std::abs(b1 - 0.7165) <= 1e-4, "BLEU-1 worked example " + fmt(b1, 6));
  c.expect(std::abs(b1 - std::exp(1.0 - 4.0 / 3.0)) < 1e-12, "BLEU-1 is not exp(1 - 4/3)");

  const std::vector<std::string> same = {"the quick brown fox jumps over the lazy dog",
                                         "Running trains connected the northern stations in 1863."};
  for (const auto& s : same) {
    const auto m = embgen::overlap_metrics(s, s);
    c.expect(m.bleu1 == 1.0 && m.bleu2 == 1.0 && m.bleu4 == 1.0, "identical text BLEU != 1");
    c.expect(m.rouge1 == 1.0 && m.rouge2 == 1.0 && m.rougeL == 1.0, "identical text ROUGE != 1");
  }

  const std::vector<std::string> vocab = {"the",      "a",        "station", "stations",  "running", "runs",
                                          "runner",   "connected", "connect", "connection", "train",   "trains",
                                          "observed", "observing", "crater",  "craters",   "of",      "and",
                                          "in",       "1863",      "generous", "generally", "happily", "happy"};
  std::mt19937_64 gen(7007);
  auto sentence = [&] {
    std::string s;
    const std::size_t n = 1 + gen() % 18;
    for (std::size_t i = 0; i < n; ++i) s += (i ? " " : "") + vocab[gen() % vocab.size()];
    if (gen() % 2) s += ".";
    return s;
  };
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const std::string cand = sentence();
    const std::string ref = sentence();
    const auto r = embgen::rouge_scores(cand, ref);
    const double d1 = std::abs(r.rouge1.f1 - oracle::rouge_n_f1(cand, ref, 1));
    const double d2 = std::abs(r.rouge2.f1 - oracle::rouge_n_f1(cand, ref, 2));
    const double dl = std::abs(r.rougeL.f1 - oracle::rouge_l_f1(cand, ref));
    worst = std::max({worst, d1, d2, dl});
    c.expect(d1 <= 1e-6 && d2 <= 1e-6 && dl <= 1e-6, "ROUGE mismatch on pair " + std::to_string(i));
  }
  return c.done("BLEU-1 " + fmt(b1, 6) + ", identical = 1.0, 50 ROUGE pairs max diff " + fmt(worst, 12));
}

Outcome criterion_heterogeneity() {
  Check c;
  const auto v = fixture::random_unit_vectors(30, 16, 8008);
  const auto got = embgen::heterogeneity_stats(v);
  const auto want = oracle::pair_stats(v);
  c.expect(got.pairs == 435, "pair count " + std::to_string(got.pairs));
  c.expect(std::abs(got.mean - want.mean) <= 1e-9, "mean");
  c.expect(std::abs(got.median - want.median) <= 1e-9, "median");
  c.expect(std::abs(got.std - want.std) <= 1e-9, "std");
  c.expect(std::abs(got.iqr - want.iqr) <= 1e-9, "iqr");

  Vectors ortho(30, std::vector<double>(30, 0.0));
  for (std::size_t i = 0; i < 30; ++i) ortho[i][i] = 1.0;
  const auto o = embgen::heterogeneity_stats(ortho);
  c.expect(std::abs(o.mean) <= 1e-12 && std::abs(o.std) <= 1e-12, "orthonormal set not (0, 0)");

  const Vectors dup(30, v[0]);
  const auto d = embgen::heterogeneity_stats(dup);
  c.expect(std::abs(d.mean - 1.0) <= 1e-9 && std::abs(d.std) <= 1e-9, "duplicates not (1, 0)");
  return c.done("mean " + fmt(got.mean, 6) + " std " + fmt(got.std, 6) + " match oracle; (0,0) and (1,0) cases hold");
}

Outcome criterion_elbow() {
  Check c;
  const auto two = fixture::blobs({{0, 0, 0}, {8, 8, 8}}, 40, 0.4, 3);
  const auto three = fixture::blobs({{0, 0, 0}, {8, 0, 0}, {0, 8, 0}}, 40, 0.4, 4);
  embgen::KMeansElbowOptions options;
  options.seed = 42;
  std::vector<int> first_two, first_three;
  for (int rerun = 0; rerun < 10; ++rerun) {
    const auto a = embgen::cluster_kmeans_elbow(two, options);
    const auto b = embgen::cluster_kmeans_elbow(three, options);
    c.expect(a.k == 2, "two blobs gave k=" + std::to_string(a.k));
    c.expect(b.k == 3, "three blobs gave k=" + std::to_string(b.k));
    if (rerun == 0) {
      first_two = a.labels;
      first_three = b.labels;
    }
    c.expect(a.labels == first_two && b.labels == first_three, "labels changed on rerun " + std::to_string(rerun));
  }
  return c.done("k=2 and k=3 on all 10 reruns");
}

Outcome criterion_token_budget() {
  Check c;
  std::mt19937_64 gen(10010);
  std::vector<std::size_t> tokens(6000);
  for (auto& t : tokens) t = 150 + gen() % 2350;
  std::string summary;
  for (std::size_t target : {std::size_t{1000000}, std::size_t{5000000}}) {
    const auto sel = embgen::calibrate_token_budget(tokens, target, 20000);
    const auto want = oracle::first_prefix_in_window(tokens, target, 20000);
    std::size_t prefix = 0;
    for (std::size_t i = 0; i < sel.count && i < tokens.size(); ++i) prefix += tokens[i];
    c.expect(want > 0 && sel.count == static_cast<std::size_t>(want), "target " + std::to_string(target) + " count");
    c.expect(sel.tokens == prefix, "reported tokens differ from the prefix sum");
    c.expect(sel.within_tolerance && !sel.shortfall, "target " + std::to_string(target) + " not within tolerance");
    c.expect(prefix + 20000 >= target && prefix <= target + 20000, "prefix outside +/-20k");
    summary += std::to_string(target) + " -> " + std::to_string(sel.count) + " records / " + std::to_string(prefix) + " tokens; ";
  }
  const std::vector<std::size_t> small(tokens.begin(), tokens.begin() + 300);
  std::size_t small_total = 0;
  for (auto t : small) small_total += t;
  const auto short_sel = embgen::calibrate_token_budget(small, 1000000, 20000);
  c.expect(small_total + 20000 < 1000000, "shortfall fixture is too large");
  c.expect(short_sel.shortfall && !short_sel.warning.empty() && short_sel.count == small.size(),
           "no shortfall warning for an impossible target");
  return c.done(summary + "shortfall warned");
}

Outcome criterion_defaults(const std::string& cli, const fs::path& work) {
  Check c;
  std::ofstream(work / "empty.json") << "{}\n";
  std::ofstream(work / "blank.json") << "";
  for (const char* name : {"empty.json", "blank.json"}) {
    const auto r = run_cli(cli, "validate-config --config '" + (work / name).string() + "'");
    if (r.status != 0) {
      c.expect(false, std::string(name) + ": validate-config exited " + std::to_string(r.status));
      continue;
    }
    json cfg;
    try {
      cfg = json::parse(r.out);
    } catch (const std::exception& e) {
      c.expect(false, std::string(name) + ": output is not JSON");
      continue;
    }
    auto eq = [&](const char* pointer, const json& want) {
      const json::json_pointer ptr(pointer);
      c.expect(cfg.contains(ptr) && cfg.at(ptr) == want, std::string(name) + " " + pointer);
    };
    eq("/consolidation/similarity_threshold", 0.85);
    eq("/reduction/backend", "umap");
    eq("/reduction/n_neighbors", 50);
    eq("/reduction/n_components", 15);
    eq("/reduction/min_dist", 0.0);
    eq("/reduction/metric", "cosine");
    eq("/reduction/random_state", 42);
    eq("/clustering/kmeans/k_min", 2);
    eq("/clustering/kmeans/k_max", 100);
    eq("/clustering/kmeans/max_candidates", 50);
    eq("/proximity/tau", 0.75);
    eq("/proximity/step", 0.01);
    eq("/proximity/max_group_size", 10);
    eq("/proximity/expansion_floor", 0.5);
    eq("/proximity/max_expansion_attempts", 10);
    eq("/sampling/rho_prox", 0.6);
    eq("/sampling/rho_intra", 0.3);
    eq("/sampling/rho_inter", 0.1);
    eq("/sampling/g", 2);
    eq("/specialization/max_patterns", 5);
    eq("/teacher/temperature", 0.001);
  }
  return c.done("empty and blank configs print the default parameter set");
}

// Predictions derived from a dataset: the first sentence of each answer.
void write_predictions(const fs::path& dataset, const fs::path& out) {
  std::vector<json> rows;
  for (const auto& rec : embgen::read_jsonl(dataset)) {
    const std::string answer = rec.at("answer");
    const auto dot = answer.find(". ");
    rows.push_back({{"question", rec.at("question")},
                    {"reference", answer},
                    {"predicted", dot == std::string::npos ? answer : answer.substr(0, dot + 1)}});
  }
  embgen::write_jsonl(out, rows);
}

Outcome criterion_end_to_end(const std::string& cli, const fs::path& work) {
  Check c;
  json config = embgen::read_json(fixture::source_dir() / "configs" / "toy_mock.json");
  config["corpus"]["path"] = (fixture::source_dir() / "data" / "toy_corpus").string();
  config["seed"] = 42;
  const fs::path config_path = work / "e2e.json";
  embgen::write_json(config_path, config);

  std::size_t doc_count = 0;
  for (const auto& e : fs::directory_iterator(fixture::source_dir() / "data" / "toy_corpus")) {
    if (e.is_regular_file()) ++doc_count;
  }
  c.expect(doc_count == 30, "toy corpus has " + std::to_string(doc_count) + " documents");

  std::array<fs::path, 2> runs, evals;
  double first_seconds = 0.0;
  for (std::size_t i = 0; i < 2; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    const fs::path root = work / ("e2e_" + std::to_string(i));
    const auto gen_r = run_cli(cli, "generate --config '" + config_path.string() + "' --out '" + root.string() + "'");
    if (gen_r.status != 0) {
      c.expect(false, "generate exited " + std::to_string(gen_r.status));
      return c.done("");
    }
    runs[i] = trim(gen_r.out);
    write_predictions(runs[i] / "dataset.jsonl", root / "predictions.jsonl");
    evals[i] = root / "eval";
    const auto eval_r = run_cli(cli, "evaluate --pred '" + (root / "predictions.jsonl").string() +
                                         "' --judge-endpoint '" + config_path.string() + "' --out '" +
                                         evals[i].string() + "'");
    c.expect(eval_r.status == 0, "evaluate exited " + std::to_string(eval_r.status));
    if (i == 0) first_seconds = seconds_since(t0);
  }
  c.expect(first_seconds < 60.0, "generate + evaluate took " + fmt(first_seconds, 2) + " s");
  for (const char* f : {"dataset.jsonl", "manifest.json", "qa_pairs.jsonl", "system_prompts.json"}) {
    const auto a = file_bytes(runs[0] / f);
    c.expect(!a.empty() && a == file_bytes(runs[1] / f), std::string(f) + " differs between runs");
  }
  for (const char* f : {"metrics.json", "per_pair.jsonl"}) {
    const auto a = file_bytes(evals[0] / f);
    c.expect(!a.empty() && a == file_bytes(evals[1] / f), std::string(f) + " differs between runs");
  }
  const auto records = embgen::read_jsonl(runs[0] / "dataset.jsonl").size();
  return c.done(std::to_string(records) + " records, generate + evaluate " + fmt(first_seconds, 2) +
                " s, rerun byte-identical");
}

}  // namespace

int main(int argc, char** argv) {
  std::string cli;
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--cli") cli = argv[i + 1];
  }
  if (cli.empty()) {
    std::cerr << "usage: embgen_acceptance --cli <path to embgen>\n";
    return 2;
  }
  const fs::path work = fixture::temp_dir("acceptance");

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"grouping oracle", criterion_grouping},
      {"component oracle", criterion_components},
      {"refinement invariants", criterion_refinement},
      {"ratio law", criterion_ratio_law},
      {"prompt assignment", [&] { return criterion_prompt_assignment(cli, work); }},
      {"judge aggregation", criterion_judge_aggregation},
      {"metric fixtures", criterion_metrics},
      {"heterogeneity oracle", criterion_heterogeneity},
      {"elbow determinism", criterion_elbow},
      {"token budget", criterion_token_budget},
      {"defaults conformance", [&] { return criterion_defaults(cli, work); }},
      {"end-to-end determinism", [&] { return criterion_end_to_end(cli, work); }},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << ": " << o.detail
              << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failed == 0 ? 0 : 1;
}
