#pragma once

#include <cstddef>
#include <functional>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "pmcoa/jats/article.hpp"
#include "pmcoa/util/quantile.hpp"

namespace pmcoa::store {

class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  virtual std::size_t count_tokens(std::string_view text) const = 0;
};

// Splits on runs of Unicode whitespace.
class WhitespaceTokenizer final : public Tokenizer {
 public:
  std::size_t count_tokens(std::string_view text) const override;
};

struct CorpusStats {
  bool empty = true;

  util::Summary caption_tokens;
  util::Summary caption_chars;   // code points
  util::Summary mention_tokens;  // one sample per mention paragraph
  util::Summary mention_chars;
  util::Summary fulltext_tokens;
  util::Summary fulltext_chars;
  util::Summary image_width;
  util::Summary image_height;
  util::Summary image_area;

  std::size_t articles_total = 0;
  std::size_t articles_with_images = 0;
  std::size_t articles_text_only = 0;
  std::size_t pair_count = 0;     // figures whose image is present
  std::size_t mention_count = 0;  // mentions attached to those figures
};

// Exact statistics. Caption and mention samples come from figures whose
// image is present; image dimensions from those with a probed size.
CorpusStats compute_stats(const std::vector<jats::ArticleDoc>& articles, const Tokenizer& tokenizer);

// Streaming form: `source` calls its sink once per article.
CorpusStats compute_stats(const std::function<void(const std::function<void(const jats::ArticleDoc&)>&)>& source,
                          const Tokenizer& tokenizer);

void to_json(nlohmann::json& j, const CorpusStats& s);

}  // namespace pmcoa::store
