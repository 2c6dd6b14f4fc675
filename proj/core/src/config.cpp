#include "embgen/config.hpp"

#include <cctype>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <set>

#include "embgen/errors.hpp"

namespace embgen {

namespace {

// Reads one JSON object section, recording type errors and unknown keys
// instead of stopping at the first problem.
class Section {
 public:
  Section(const json* node, std::string path, std::vector<std::string>& errors)
      : node_(node), path_(std::move(path)), errors_(errors) {
    if (node_ && !node_->is_null() && !node_->is_object()) {
      errors_.push_back(path_ + " must be an object");
      node_ = nullptr;
    }
  }

  ~Section() {
    if (!node_ || node_->is_null()) return;
    for (const auto& [key, value] : node_->items()) {
      if (!seen_.count(key)) errors_.push_back(name(key) + " is not a known key");
    }
  }

  Section(const Section&) = delete;
  Section& operator=(const Section&) = delete;

  Section child(const std::string& key) {
    seen_.insert(key);
    return Section(find(key), name(key), errors_);
  }

  void read(const std::string& key, std::string& out) {
    if (const json* v = take(key)) {
      if (v->is_string()) {
        out = v->get<std::string>();
      } else {
        errors_.push_back(name(key) + " must be a string");
      }
    }
  }

  void read(const std::string& key, bool& out) {
    if (const json* v = take(key)) {
      if (v->is_boolean()) {
        out = v->get<bool>();
      } else {
        errors_.push_back(name(key) + " must be true or false");
      }
    }
  }

  void read(const std::string& key, double& out) {
    if (const json* v = take(key)) {
      if (v->is_number()) {
        out = v->get<double>();
      } else {
        errors_.push_back(name(key) + " must be a number");
      }
    }
  }

  void read(const std::string& key, int& out) {
    if (const json* v = take(key)) {
      if (v->is_number_integer()) {
        out = v->get<int>();
      } else {
        errors_.push_back(name(key) + " must be an integer");
      }
    }
  }

  template <std::unsigned_integral T>
  void read(const std::string& key, T& out) {
    if (const json* v = take(key)) {
      if (v->is_number_unsigned() || (v->is_number_integer() && v->get<std::int64_t>() >= 0)) {
        out = v->get<T>();
      } else {
        errors_.push_back(name(key) + " must be a non-negative integer");
      }
    }
  }

 private:
  const json* find(const std::string& key) const {
    if (!node_ || node_->is_null()) return nullptr;
    auto it = node_->find(key);
    return it == node_->end() ? nullptr : &*it;
  }

  const json* take(const std::string& key) {
    seen_.insert(key);
    const json* v = find(key);
    return v && !v->is_null() ? v : nullptr;
  }

  std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* node_;
  std::string path_;
  std::vector<std::string>& errors_;
  std::set<std::string> seen_;
};

void read_endpoint(Section s, LlmEndpoint& e) {
  s.read("provider", e.provider);
  s.read("base_url", e.base_url);
  s.read("model", e.model);
  s.read("api_key_env", e.api_key_env);
  s.read("temperature", e.temperature);
  s.read("max_retries", e.max_retries);
  s.read("request_timeout_s", e.request_timeout_s);
  s.read("backoff_initial_s", e.backoff_initial_s);
  s.read("max_concurrency", e.max_concurrency);
}

json endpoint_json(const LlmEndpoint& e) {
  return json{{"provider", e.provider},
              {"base_url", e.base_url},
              {"model", e.model},
              {"api_key_env", e.api_key_env},
              {"temperature", e.temperature},
              {"max_retries", e.max_retries},
              {"request_timeout_s", e.request_timeout_s},
              {"backoff_initial_s", e.backoff_initial_s},
              {"max_concurrency", e.max_concurrency}};
}

void check_endpoint(const std::string& where, const LlmEndpoint& e, std::vector<std::string>& v) {
  if (e.provider != "openai" && e.provider != "mock") v.push_back(where + ".provider must be openai or mock");
  if (e.provider == "openai" && e.base_url.empty()) v.push_back(where + ".base_url must be set");
  if (e.model.empty()) v.push_back(where + ".model must be set");
  if (e.temperature < 0.0) v.push_back(where + ".temperature must be >= 0");
  if (e.max_retries < 0) v.push_back(where + ".max_retries must be >= 0");
  if (!(e.request_timeout_s > 0.0)) v.push_back(where + ".request_timeout_s must be > 0");
  if (e.backoff_initial_s < 0.0) v.push_back(where + ".backoff_initial_s must be >= 0");
  if (e.max_concurrency < 1) v.push_back(where + ".max_concurrency must be >= 1");
}

std::string std_kind_name(StdKind k) { return k == StdKind::Sample ? "sample" : "population"; }

}  // namespace

PipelineConfig default_config() {
  PipelineConfig c;
  c.teacher.model = "gpt-4o-mini";
  c.teacher.temperature = 0.001;

  c.encoder.base_url = "http://localhost:8080/v1";
  c.encoder.model = c.embedding.model;
  c.encoder.api_key_env = "EMBGEN_ENCODER_API_KEY";
  c.encoder.temperature = 0.0;

  c.judge.endpoint.model = "gpt-5";
  c.judge.endpoint.temperature = 0.0;
  return c;
}

std::vector<std::string> validate_config(const PipelineConfig& c) {
  std::vector<std::string> v;
  if (c.corpus.format != "text" && c.corpus.format != "jsonl") v.push_back("corpus.format must be text or jsonl");

  if (c.chunking.max_tokens < 1) v.push_back("chunking.max_tokens must be >= 1");
  if (c.chunking.overlap >= c.chunking.max_tokens) v.push_back("chunking.overlap must be < chunking.max_tokens");

  if (!(c.consolidation.similarity_threshold > 0.0 && c.consolidation.similarity_threshold <= 1.0)) {
    v.push_back("consolidation.similarity_threshold must be in (0, 1]");
  }
  if (c.consolidation.max_candidates < 1) v.push_back("consolidation.max_candidates must be >= 1");

  check_endpoint("teacher", c.teacher, v);
  check_endpoint("encoder", c.encoder, v);
  check_endpoint("judge", c.judge.endpoint, v);
  if (c.embedding.batch_size < 1) v.push_back("encoder.batch_size must be >= 1");
  if (c.embedding.max_tokens < 1) v.push_back("encoder.max_tokens must be >= 1");

  if (c.reduction.backend != "umap" && c.reduction.backend != "pca" && c.reduction.backend != "none") {
    v.push_back("reduction.backend must be umap, pca or none (got '" + c.reduction.backend + "')");
  }
  if (c.reduction.n_components < 1) v.push_back("reduction.n_components must be >= 1");
  if (c.reduction.n_neighbors < 2) v.push_back("reduction.n_neighbors must be >= 2");
  if (c.reduction.min_dist < 0.0) v.push_back("reduction.min_dist must be >= 0");

  const auto& cl = c.clustering;
  if (cl.method != "kmeans" && cl.method != "hdbscan") v.push_back("clustering.method must be kmeans or hdbscan");
  if (cl.init != "k-means++") v.push_back("clustering.kmeans.init must be k-means++");
  if (cl.kmeans.k_min < 1) v.push_back("clustering.kmeans.k_min must be >= 1");
  if (cl.kmeans.k_max < cl.kmeans.k_min) v.push_back("clustering.kmeans.k_max must be >= k_min");
  if (cl.kmeans.max_candidates < 1) v.push_back("clustering.kmeans.max_candidates must be >= 1");
  if (cl.kmeans.max_iter < 1) v.push_back("clustering.kmeans.max_iter must be >= 1");
  if (cl.kmeans.n_init < 1) v.push_back("clustering.kmeans.n_init must be >= 1");
  if (cl.hdbscan.min_cluster_size < 2) v.push_back("clustering.hdbscan.min_cluster_size must be >= 2");
  if (cl.hdbscan.min_samples < 1) v.push_back("clustering.hdbscan.min_samples must be >= 1");
  if (cl.hdbscan.cluster_selection_epsilon < 0.0) {
    v.push_back("clustering.hdbscan.cluster_selection_epsilon must be >= 0");
  }

  const auto& p = c.proximity;
  if (!(p.tau > 0.0 && p.tau <= 1.0)) v.push_back("proximity.tau must be in (0, 1]");
  if (!(p.step > 0.0)) v.push_back("proximity.step must be > 0");
  if (p.max_group_size < 2) v.push_back("proximity.max_group_size must be >= 2");
  if (p.expansion_floor < 0.0 || p.expansion_floor > p.tau) v.push_back("proximity.expansion_floor must be in [0, tau]");
  if (p.min_added < 1) v.push_back("proximity.min_added must be >= 1");

  if (c.max_patterns < 1) v.push_back("specialization.max_patterns must be >= 1");

  for (auto& s : validate_sampling(c.sampling)) v.push_back(std::move(s));
  if (c.attempt_factor < 1) v.push_back("sampling.attempt_factor must be >= 1");
  if (c.concurrency < 1) v.push_back("concurrency must be >= 1");
  if (c.judge.runs < 1) v.push_back("judge.runs must be >= 1");
  return v;
}

PipelineConfig config_from_json(const json& j) {
  PipelineConfig c = default_config();
  std::vector<std::string> errors;
  {
    Section root(&j, "", errors);
    {
      Section s = root.child("corpus");
      s.read("path", c.corpus.path);
      s.read("format", c.corpus.format);
    }
    {
      Section s = root.child("chunking");
      s.read("max_tokens", c.chunking.max_tokens);
      s.read("overlap", c.chunking.overlap);
    }
    {
      Section s = root.child("consolidation");
      s.read("similarity_threshold", c.consolidation.similarity_threshold);
      s.read("max_candidates", c.consolidation.max_candidates);
    }
    read_endpoint(root.child("teacher"), c.teacher);
    {
      Section s = root.child("encoder");
      s.read("provider", c.encoder.provider);
      s.read("base_url", c.encoder.base_url);
      s.read("model", c.embedding.model);
      s.read("api_key_env", c.encoder.api_key_env);
      s.read("max_retries", c.encoder.max_retries);
      s.read("request_timeout_s", c.encoder.request_timeout_s);
      s.read("backoff_initial_s", c.encoder.backoff_initial_s);
      s.read("max_concurrency", c.encoder.max_concurrency);
      s.read("batch_size", c.embedding.batch_size);
      s.read("max_tokens", c.embedding.max_tokens);
      c.encoder.model = c.embedding.model;
    }
    {
      Section s = root.child("reduction");
      s.read("backend", c.reduction.backend);
      s.read("n_components", c.reduction.n_components);
      s.read("n_neighbors", c.reduction.n_neighbors);
      s.read("min_dist", c.reduction.min_dist);
      s.read("metric", c.reduction.metric);
      s.read("random_state", c.reduction.random_state);
      s.read("command", c.reduction.command);
    }
    {
      Section s = root.child("clustering");
      s.read("method", c.clustering.method);
      {
        Section k = s.child("kmeans");
        k.read("k_min", c.clustering.kmeans.k_min);
        k.read("k_max", c.clustering.kmeans.k_max);
        k.read("max_candidates", c.clustering.kmeans.max_candidates);
        k.read("init", c.clustering.init);
        k.read("max_iter", c.clustering.kmeans.max_iter);
        k.read("n_init", c.clustering.kmeans.n_init);
        k.read("random_state", c.clustering.kmeans.seed);
      }
      {
        Section h = s.child("hdbscan");
        h.read("min_cluster_size", c.clustering.hdbscan.min_cluster_size);
        h.read("min_samples", c.clustering.hdbscan.min_samples);
        h.read("metric", c.clustering.hdbscan.metric);
        h.read("cluster_selection_epsilon", c.clustering.hdbscan.cluster_selection_epsilon);
        h.read("command", c.clustering.hdbscan.command);
      }
    }
    {
      Section s = root.child("proximity");
      s.read("tau", c.proximity.tau);
      s.read("step", c.proximity.step);
      s.read("max_group_size", c.proximity.max_group_size);
      s.read("expansion_floor", c.proximity.expansion_floor);
      s.read("max_expansion_attempts", c.proximity.max_expansion_attempts);
      s.read("min_added", c.proximity.min_added);
    }
    {
      Section s = root.child("specialization");
      s.read("max_patterns", c.max_patterns);
    }
    {
      Section s = root.child("sampling");
      s.read("rho_prox", c.sampling.rho_prox);
      s.read("rho_intra", c.sampling.rho_intra);
      s.read("rho_inter", c.sampling.rho_inter);
      s.read("g", c.sampling.g);
      s.read("attempt_factor", c.attempt_factor);
    }
    root.read("seed", c.sampling.seed);
    root.read("concurrency", c.concurrency);
    {
      Section s = root.child("judge");
      read_endpoint(s.child("endpoint"), c.judge.endpoint);
      s.read("runs", c.judge.runs);
    }
    {
      Section s = root.child("dataset");
      s.read("base_prompt_only", c.dataset.base_prompt_only);
      s.read("token_budget", c.dataset.token_budget);
      s.read("token_tolerance", c.dataset.token_tolerance);
    }
    {
      Section s = root.child("diagnostics");
      std::string std_kind = std_kind_name(c.heterogeneity_std);
      s.read("std", std_kind);
      if (std_kind == "sample") {
        c.heterogeneity_std = StdKind::Sample;
      } else if (std_kind != "population") {
        errors.push_back("diagnostics.std must be population or sample");
      }
    }
    root.read("prompts_dir", c.prompts_dir);
  }
  for (auto& v : validate_config(c)) errors.push_back(std::move(v));
  if (!errors.empty()) throw ConfigError(std::move(errors));
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  json j = json::object();
  bool blank = true;
  for (char ch : text) {
    if (!std::isspace(static_cast<unsigned char>(ch))) {
      blank = false;
      break;
    }
  }
  if (!blank) {
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ConfigError({path.string() + ": " + e.what()});
    }
  }
  PipelineConfig c = config_from_json(j);
  c.base_dir = std::filesystem::absolute(path).parent_path();
  return c;
}

json to_json(const PipelineConfig& c) {
  json encoder = endpoint_json(c.encoder);
  encoder.erase("temperature");
  encoder["model"] = c.embedding.model;
  encoder["batch_size"] = c.embedding.batch_size;
  encoder["max_tokens"] = c.embedding.max_tokens;
  return json{
      {"corpus", {{"path", c.corpus.path}, {"format", c.corpus.format}}},
      {"chunking", {{"max_tokens", c.chunking.max_tokens}, {"overlap", c.chunking.overlap}}},
      {"consolidation",
       {{"similarity_threshold", c.consolidation.similarity_threshold},
        {"max_candidates", c.consolidation.max_candidates}}},
      {"teacher", endpoint_json(c.teacher)},
      {"encoder", encoder},
      {"reduction",
       {{"backend", c.reduction.backend},
        {"n_components", c.reduction.n_components},
        {"n_neighbors", c.reduction.n_neighbors},
        {"min_dist", c.reduction.min_dist},
        {"metric", c.reduction.metric},
        {"random_state", c.reduction.random_state},
        {"command", c.reduction.command}}},
      {"clustering",
       {{"method", c.clustering.method},
        {"kmeans",
         {{"k_min", c.clustering.kmeans.k_min},
          {"k_max", c.clustering.kmeans.k_max},
          {"max_candidates", c.clustering.kmeans.max_candidates},
          {"init", c.clustering.init},
          {"max_iter", c.clustering.kmeans.max_iter},
          {"n_init", c.clustering.kmeans.n_init},
          {"random_state", c.clustering.kmeans.seed}}},
        {"hdbscan",
         {{"min_cluster_size", c.clustering.hdbscan.min_cluster_size},
          {"min_samples", c.clustering.hdbscan.min_samples},
          {"metric", c.clustering.hdbscan.metric},
          {"cluster_selection_epsilon", c.clustering.hdbscan.cluster_selection_epsilon},
          {"command", c.clustering.hdbscan.command}}}}},
      {"proximity",
       {{"tau", c.proximity.tau},
        {"step", c.proximity.step},
        {"max_group_size", c.proximity.max_group_size},
        {"expansion_floor", c.proximity.expansion_floor},
        {"max_expansion_attempts", c.proximity.max_expansion_attempts},
        {"min_added", c.proximity.min_added}}},
      {"specialization", {{"max_patterns", c.max_patterns}}},
      {"sampling",
       {{"rho_prox", c.sampling.rho_prox},
        {"rho_intra", c.sampling.rho_intra},
        {"rho_inter", c.sampling.rho_inter},
        {"g", c.sampling.g},
        {"attempt_factor", c.attempt_factor}}},
      {"seed", c.sampling.seed},
      {"concurrency", c.concurrency},
      {"judge", {{"endpoint", endpoint_json(c.judge.endpoint)}, {"runs", c.judge.runs}}},
      {"dataset",
       {{"base_prompt_only", c.dataset.base_prompt_only},
        {"token_budget", c.dataset.token_budget},
        {"token_tolerance", c.dataset.token_tolerance}}},
      {"diagnostics", {{"std", std_kind_name(c.heterogeneity_std)}}},
      {"prompts_dir", c.prompts_dir},
  };
}

std::string config_hash(const PipelineConfig& config) { return sha256_hex(to_json(config).dump()); }

std::filesystem::path resolve_path(const PipelineConfig& config, const std::string& path) {
  std::filesystem::path p(path);
  if (p.is_relative() && !config.base_dir.empty()) return config.base_dir / p;
  return p;
}

}  // namespace embgen
