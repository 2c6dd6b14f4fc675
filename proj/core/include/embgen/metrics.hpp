#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace embgen {

/// Porter stemmer with the NLTK extensions (the variant rouge-score uses):
/// irregular-form table, words of <= 2 letters unchanged, and the NLTK
/// step 1a/1b/1c/2 refinements. Input is expected lowercase.
std::string porter_stem(std::string_view word);

/// Lowercases and splits on runs of non-alphanumeric ASCII characters.
std::vector<std::string> metric_tokens(std::string_view text);

/// Sentence BLEU with uniform weights over orders 1..n, clipped n-gram
/// precisions, brevity penalty exp(1 - r/c) and no smoothing (any zero
/// precision gives 0).
double bleu(std::string_view candidate, std::string_view reference, int n);

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct RougeScores {
  RougeScore rouge1;
  RougeScore rouge2;
  RougeScore rougeL;
};

/// ROUGE-1/2/L on metric_tokens with tokens longer than 3 characters
/// Porter-stemmed.
RougeScores rouge_scores(std::string_view candidate, std::string_view reference);

struct MeteorParams {
  double alpha = 0.9;
  double beta = 3.0;
  double gamma = 0.5;
};

/// METEOR with exact-then-stem unigram alignment (no synonym stage):
/// Fmean = PR / (alpha P + (1 - alpha) R), penalty = gamma (chunks/matches)^beta,
/// score = (1 - penalty) Fmean.
double meteor(std::string_view candidate, std::string_view reference, const MeteorParams& params = {});

struct OverlapMetrics {
  double bleu1 = 0.0;
  double bleu2 = 0.0;
  double bleu4 = 0.0;
  double rouge1 = 0.0;
  double rouge2 = 0.0;
  double rougeL = 0.0;
  double meteor = 0.0;
};

OverlapMetrics overlap_metrics(std::string_view candidate, std::string_view reference);

}  // namespace embgen
