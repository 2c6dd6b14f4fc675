#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace embgen {

/// Byte range [begin, end) of one token inside the text it came from.
struct TokenSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Single token-counting authority for chunking, encoder truncation and
/// token-budget calibration. A model-specific tokenizer can be slotted in
/// by implementing `spans`.
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  virtual std::vector<TokenSpan> spans(std::string_view text) const = 0;
  virtual std::size_t count(std::string_view text) const { return spans(text).size(); }
  virtual std::string name() const = 0;
};

/// Splits on ASCII whitespace runs.
class WhitespaceTokenizer final : public Tokenizer {
 public:
  std::vector<TokenSpan> spans(std::string_view text) const override;
  std::size_t count(std::string_view text) const override;
  std::string name() const override { return "whitespace"; }
};

std::shared_ptr<const Tokenizer> default_tokenizer();

/// Keeps at most `max_tokens` tokens of `text`, cutting right after the last
/// kept token.
std::string truncate_to_tokens(std::string_view text, std::size_t max_tokens,
                               const Tokenizer& tokenizer);

}  // namespace embgen
