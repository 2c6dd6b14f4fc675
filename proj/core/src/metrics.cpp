#include "embgen/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <map>
#include <unordered_map>

#include "embgen/errors.hpp"

namespace embgen {

namespace {

// ---- Porter stemmer -------------------------------------------------------

bool is_vowel_letter(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

std::vector<bool> consonant_flags(std::string_view w) {
  std::vector<bool> f(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (is_vowel_letter(w[i])) f[i] = false;
    else if (w[i] == 'y') f[i] = i == 0 ? true : !f[i - 1];
    else f[i] = true;
  }
  return f;
}

bool is_consonant(std::string_view w, std::size_t i) { return consonant_flags(w.substr(0, i + 1))[i]; }

int measure(std::string_view stem) {
  const auto f = consonant_flags(stem);
  int m = 0;
  for (std::size_t i = 1; i < f.size(); ++i) {
    if (!f[i - 1] && f[i]) ++m;
  }
  return m;
}

bool contains_vowel(std::string_view stem) {
  const auto f = consonant_flags(stem);
  return std::find(f.begin(), f.end(), false) != f.end();
}

bool ends_with(std::string_view w, std::string_view suffix) {
  return w.size() >= suffix.size() && w.substr(w.size() - suffix.size()) == suffix;
}

bool ends_double_consonant(std::string_view w) {
  return w.size() >= 2 && w[w.size() - 1] == w[w.size() - 2] && is_consonant(w, w.size() - 1);
}

bool ends_cvc(std::string_view w) {
  const std::size_t n = w.size();
  if (n >= 3 && is_consonant(w, n - 3) && !is_consonant(w, n - 2) && is_consonant(w, n - 1) && w[n - 1] != 'w' &&
      w[n - 1] != 'x' && w[n - 1] != 'y') {
    return true;
  }
  return n == 2 && !is_consonant(w, 0) && is_consonant(w, 1);
}

struct Rule {
  std::string_view suffix;
  std::string_view replacement;
  std::function<bool(std::string_view)> condition;  // empty = unconditional
};

// The first rule whose suffix matches decides the outcome, whether or not
// its condition holds.
std::string apply_rules(const std::string& word, const std::vector<Rule>& rules) {
  for (const auto& r : rules) {
    if (ends_with(word, r.suffix)) {
      const std::string stem = word.substr(0, word.size() - r.suffix.size());
      if (!r.condition || r.condition(stem)) return stem + std::string(r.replacement);
      return word;
    }
  }
  return word;
}

bool positive_measure(std::string_view s) { return measure(s) > 0; }
bool measure_gt1(std::string_view s) { return measure(s) > 1; }

std::string step1a(const std::string& w) {
  if (ends_with(w, "ies") && w.size() == 4) return w.substr(0, 1) + "ie";
  return apply_rules(w, {{"sses", "ss", {}}, {"ies", "i", {}}, {"ss", "ss", {}}, {"s", "", {}}});
}

std::string step1b(const std::string& w) {
  if (ends_with(w, "ied")) return w.substr(0, w.size() - 3) + (w.size() == 4 ? "ie" : "i");
  if (ends_with(w, "eed")) {
    const std::string stem = w.substr(0, w.size() - 3);
    return measure(stem) > 0 ? stem + "ee" : w;
  }
  std::string stem;
  bool stripped = false;
  for (std::string_view suffix : {std::string_view("ed"), std::string_view("ing")}) {
    if (ends_with(w, suffix)) {
      stem = w.substr(0, w.size() - suffix.size());
      if (contains_vowel(stem)) {
        stripped = true;
        break;
      }
    }
  }
  if (!stripped) return w;
  if (ends_with(stem, "at")) return stem + "e";
  if (ends_with(stem, "bl")) return stem + "e";
  if (ends_with(stem, "iz")) return stem + "e";
  if (ends_double_consonant(stem)) {
    const char last = stem.back();
    if (last != 'l' && last != 's' && last != 'z') return stem.substr(0, stem.size() - 1);
    return stem;
  }
  if (measure(stem) == 1 && ends_cvc(stem)) return stem + "e";
  return stem;
}

std::string step1c(const std::string& w) {
  return apply_rules(w, {{"y", "i", [](std::string_view s) { return s.size() > 1 && is_consonant(s, s.size() - 1); }}});
}

std::string step2(const std::string& w) {
  if (ends_with(w, "alli") && positive_measure(std::string_view(w).substr(0, w.size() - 4))) {
    return step2(w.substr(0, w.size() - 4) + "al");
  }
  const std::string word = w;
  return apply_rules(w, {{"ational", "ate", positive_measure},
                         {"tional", "tion", positive_measure},
                         {"enci", "ence", positive_measure},
                         {"anci", "ance", positive_measure},
                         {"izer", "ize", positive_measure},
                         {"bli", "ble", positive_measure},
                         {"alli", "al", positive_measure},
                         {"entli", "ent", positive_measure},
                         {"eli", "e", positive_measure},
                         {"ousli", "ous", positive_measure},
                         {"ization", "ize", positive_measure},
                         {"ation", "ate", positive_measure},
                         {"ator", "ate", positive_measure},
                         {"alism", "al", positive_measure},
                         {"iveness", "ive", positive_measure},
                         {"fulness", "ful", positive_measure},
                         {"ousness", "ous", positive_measure},
                         {"aliti", "al", positive_measure},
                         {"iviti", "ive", positive_measure},
                         {"biliti", "ble", positive_measure},
                         {"fulli", "ful", positive_measure},
                         {"logi", "log",
                          [word](std::string_view) { return positive_measure(std::string_view(word).substr(0, word.size() - 3)); }}});
}

std::string step3(const std::string& w) {
  return apply_rules(w, {{"icate", "ic", positive_measure},
                         {"ative", "", positive_measure},
                         {"alize", "al", positive_measure},
                         {"iciti", "ic", positive_measure},
                         {"ical", "ic", positive_measure},
                         {"ful", "", positive_measure},
                         {"ness", "", positive_measure}});
}

std::string step4(const std::string& w) {
  return apply_rules(w, {{"al", "", measure_gt1},
                         {"ance", "", measure_gt1},
                         {"ence", "", measure_gt1},
                         {"er", "", measure_gt1},
                         {"ic", "", measure_gt1},
                         {"able", "", measure_gt1},
                         {"ible", "", measure_gt1},
                         {"ant", "", measure_gt1},
                         {"ement", "", measure_gt1},
                         {"ment", "", measure_gt1},
                         {"ent", "", measure_gt1},
                         {"ion", "", [](std::string_view s) { return measure(s) > 1 && !s.empty() && (s.back() == 's' || s.back() == 't'); }},
                         {"ou", "", measure_gt1},
                         {"ism", "", measure_gt1},
                         {"ate", "", measure_gt1},
                         {"iti", "", measure_gt1},
                         {"ous", "", measure_gt1},
                         {"ive", "", measure_gt1},
                         {"ize", "", measure_gt1}});
}

std::string step5a(const std::string& w) {
  if (!ends_with(w, "e")) return w;
  const std::string stem = w.substr(0, w.size() - 1);
  const int m = measure(stem);
  if (m > 1 || (m == 1 && !ends_cvc(stem))) return stem;
  return w;
}

std::string step5b(const std::string& w) {
  if (ends_with(w, "ll") && measure(std::string_view(w).substr(0, w.size() - 1)) > 1) return w.substr(0, w.size() - 1);
  return w;
}

const std::unordered_map<std::string, std::string>& irregular_forms() {
  static const std::unordered_map<std::string, std::string> pool = {
      {"sky", "sky"},       {"skies", "sky"},     {"dying", "die"},   {"lying", "lie"},
      {"tying", "tie"},     {"news", "news"},     {"innings", "inning"}, {"inning", "inning"},
      {"outings", "outing"}, {"outing", "outing"}, {"cannings", "canning"}, {"canning", "canning"},
      {"howe", "howe"},     {"proceed", "proceed"}, {"exceed", "exceed"}, {"succeed", "succeed"}};
  return pool;
}

}  // namespace

std::string porter_stem(std::string_view word) {
  std::string w(word);
  for (char& c : w) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (auto it = irregular_forms().find(w); it != irregular_forms().end()) return it->second;
  if (w.size() <= 2) return w;
  w = step1a(w);
  w = step1b(w);
  w = step1c(w);
  w = step2(w);
  w = step3(w);
  w = step4(w);
  w = step5a(w);
  w = step5b(w);
  return w;
}

std::vector<std::string> metric_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (u < 128 && std::isalnum(u)) {
      cur.push_back(static_cast<char>(std::tolower(u)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

namespace {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts ngrams(const std::vector<std::string>& tokens, std::size_t n) {
  NgramCounts out;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++out[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                   tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return out;
}

std::size_t overlap(const NgramCounts& a, const NgramCounts& b) {
  std::size_t total = 0;
  for (const auto& [g, c] : a) {
    if (auto it = b.find(g); it != b.end()) total += std::min(c, it->second);
  }
  return total;
}

RougeScore prf(std::size_t hits, std::size_t candidate_total, std::size_t reference_total) {
  RougeScore s;
  s.precision = candidate_total ? static_cast<double>(hits) / static_cast<double>(candidate_total) : 0.0;
  s.recall = reference_total ? static_cast<double>(hits) / static_cast<double>(reference_total) : 0.0;
  s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::vector<std::string> rouge_tokens(std::string_view text) {
  auto tokens = metric_tokens(text);
  for (auto& t : tokens) {
    if (t.size() > 3) t = porter_stem(t);
  }
  return tokens;
}

}  // namespace

double bleu(std::string_view candidate, std::string_view reference, int n) {
  if (n < 1) throw Error("bleu: order must be >= 1");
  const auto c = metric_tokens(candidate);
  const auto r = metric_tokens(reference);
  if (c.empty()) return 0.0;
  double log_sum = 0.0;
  for (int k = 1; k <= n; ++k) {
    const auto cn = ngrams(c, static_cast<std::size_t>(k));
    std::size_t total = 0;
    for (const auto& [_, cnt] : cn) total += cnt;
    const std::size_t hits = overlap(cn, ngrams(r, static_cast<std::size_t>(k)));
    if (hits == 0 || total == 0) return 0.0;
    log_sum += std::log(static_cast<double>(hits) / static_cast<double>(total)) / n;
  }
  const double bp = c.size() > r.size() ? 1.0 : std::exp(1.0 - static_cast<double>(r.size()) / static_cast<double>(c.size()));
  return bp * std::exp(log_sum);
}

RougeScores rouge_scores(std::string_view candidate, std::string_view reference) {
  const auto c = rouge_tokens(candidate);
  const auto r = rouge_tokens(reference);
  RougeScores s;
  for (std::size_t n : {1u, 2u}) {
    const auto cn = ngrams(c, n);
    const auto rn = ngrams(r, n);
    std::size_t ct = 0, rt = 0;
    for (const auto& [_, k] : cn) ct += k;
    for (const auto& [_, k] : rn) rt += k;
    (n == 1 ? s.rouge1 : s.rouge2) = prf(overlap(cn, rn), ct, rt);
  }
  s.rougeL = prf(lcs_length(c, r), c.size(), r.size());
  return s;
}

namespace {

using Enumerated = std::vector<std::pair<std::size_t, std::string>>;
using Alignment = std::vector<std::pair<std::size_t, std::size_t>>;

// Walks the candidate from its last word backwards, pairing each word with
// the last unmatched reference position holding the same string.
void match_stage(Enumerated& cand, Enumerated& ref, Alignment& matches) {
  std::map<std::string, std::vector<std::size_t>> positions;
  for (std::size_t j = 0; j < ref.size(); ++j) positions[ref[j].second].push_back(j);
  std::vector<bool> cand_used(cand.size(), false), ref_used(ref.size(), false);
  for (std::size_t i = cand.size(); i-- > 0;) {
    auto it = positions.find(cand[i].second);
    if (it == positions.end() || it->second.empty()) continue;
    const std::size_t j = it->second.back();
    it->second.pop_back();
    cand_used[i] = true;
    ref_used[j] = true;
    matches.emplace_back(cand[i].first, ref[j].first);
  }
  Enumerated c2, r2;
  for (std::size_t i = 0; i < cand.size(); ++i) {
    if (!cand_used[i]) c2.push_back(cand[i]);
  }
  for (std::size_t j = 0; j < ref.size(); ++j) {
    if (!ref_used[j]) r2.push_back(ref[j]);
  }
  cand = std::move(c2);
  ref = std::move(r2);
}

std::size_t count_chunks(const Alignment& m) {
  std::size_t chunks = 1;
  for (std::size_t i = 0; i + 1 < m.size(); ++i) {
    if (!(m[i + 1].first == m[i].first + 1 && m[i + 1].second == m[i].second + 1)) ++chunks;
  }
  return chunks;
}

}  // namespace

double meteor(std::string_view candidate, std::string_view reference, const MeteorParams& params) {
  const auto c = metric_tokens(candidate);
  const auto r = metric_tokens(reference);
  if (c.empty() || r.empty()) return 0.0;
  Enumerated ce, re;
  for (std::size_t i = 0; i < c.size(); ++i) ce.emplace_back(i, c[i]);
  for (std::size_t j = 0; j < r.size(); ++j) re.emplace_back(j, r[j]);
  Alignment matches;
  match_stage(ce, re, matches);
  for (auto& [_, w] : ce) w = porter_stem(w);
  for (auto& [_, w] : re) w = porter_stem(w);
  match_stage(ce, re, matches);
  if (matches.empty()) return 0.0;
  std::sort(matches.begin(), matches.end());
  const double m = static_cast<double>(matches.size());
  const double precision = m / static_cast<double>(c.size());
  const double recall = m / static_cast<double>(r.size());
  const double fmean = precision * recall / (params.alpha * precision + (1.0 - params.alpha) * recall);
  const double frag = static_cast<double>(count_chunks(matches)) / m;
  return (1.0 - params.gamma * std::pow(frag, params.beta)) * fmean;
}

OverlapMetrics overlap_metrics(std::string_view candidate, std::string_view reference) {
  OverlapMetrics m;
  m.bleu1 = bleu(candidate, reference, 1);
  m.bleu2 = bleu(candidate, reference, 2);
  m.bleu4 = bleu(candidate, reference, 4);
  const auto rouge = rouge_scores(candidate, reference);
  m.rouge1 = rouge.rouge1.f1;
  m.rouge2 = rouge.rouge2.f1;
  m.rougeL = rouge.rougeL.f1;
  m.meteor = meteor(candidate, reference);
  return m;
}

}  // namespace embgen
