#include "pmcoa/store/stats.hpp"

#include <nlohmann/json.hpp>

#include "pmcoa/util/text.hpp"

namespace pmcoa::store {

std::size_t WhitespaceTokenizer::count_tokens(std::string_view text) const {
  return util::split_unicode_whitespace(text).size();
}

CorpusStats compute_stats(const std::function<void(const std::function<void(const jats::ArticleDoc&)>&)>& source,
                          const Tokenizer& tokenizer) {
  std::vector<double> cap_tok, cap_chr, men_tok, men_chr, ft_tok, ft_chr, w, h, area;
  CorpusStats s;
  source([&](const jats::ArticleDoc& a) {
    ++s.articles_total;
    ft_tok.push_back(static_cast<double>(tokenizer.count_tokens(a.full_text)));
    ft_chr.push_back(static_cast<double>(util::code_point_count(a.full_text)));
    std::size_t present = 0;
    for (const auto& f : a.figure_set) {
      if (f.missing) continue;
      ++present;
      cap_tok.push_back(static_cast<double>(tokenizer.count_tokens(f.caption)));
      cap_chr.push_back(static_cast<double>(util::code_point_count(f.caption)));
      for (const auto& m : f.mentions) {
        men_tok.push_back(static_cast<double>(tokenizer.count_tokens(m)));
        men_chr.push_back(static_cast<double>(util::code_point_count(m)));
      }
      s.mention_count += f.mentions.size();
      if (f.width && f.height) {
        w.push_back(*f.width);
        h.push_back(*f.height);
        area.push_back(static_cast<double>(*f.width) * static_cast<double>(*f.height));
      }
    }
    s.pair_count += present;
    if (present > 0) {
      ++s.articles_with_images;
    } else {
      ++s.articles_text_only;
    }
  });
  s.empty = s.articles_total == 0;
  s.caption_tokens = util::summarize(std::move(cap_tok));
  s.caption_chars = util::summarize(std::move(cap_chr));
  s.mention_tokens = util::summarize(std::move(men_tok));
  s.mention_chars = util::summarize(std::move(men_chr));
  s.fulltext_tokens = util::summarize(std::move(ft_tok));
  s.fulltext_chars = util::summarize(std::move(ft_chr));
  s.image_width = util::summarize(std::move(w));
  s.image_height = util::summarize(std::move(h));
  s.image_area = util::summarize(std::move(area));
  return s;
}

CorpusStats compute_stats(const std::vector<jats::ArticleDoc>& articles, const Tokenizer& tokenizer) {
  return compute_stats(
      [&](const std::function<void(const jats::ArticleDoc&)>& sink) {
        for (const auto& a : articles) sink(a);
      },
      tokenizer);
}

namespace {

nlohmann::json summary_json(const util::Summary& s) {
  return {{"count", s.count}, {"min", s.min},       {"max", s.max}, {"mean", s.mean}, {"median", s.median},
          {"q1", s.q1},       {"q3", s.q3},         {"iqr", s.iqr}, {"total", s.total}};
}

}  // namespace

void to_json(nlohmann::json& j, const CorpusStats& s) {
  j = {{"empty", s.empty},
       {"caption_tokens", summary_json(s.caption_tokens)},
       {"caption_chars", summary_json(s.caption_chars)},
       {"mention_tokens", summary_json(s.mention_tokens)},
       {"mention_chars", summary_json(s.mention_chars)},
       {"fulltext_tokens", summary_json(s.fulltext_tokens)},
       {"fulltext_chars", summary_json(s.fulltext_chars)},
       {"image_width", summary_json(s.image_width)},
       {"image_height", summary_json(s.image_height)},
       {"image_area", summary_json(s.image_area)},
       {"articles_total", s.articles_total},
       {"articles_with_images", s.articles_with_images},
       {"articles_text_only", s.articles_text_only},
       {"pair_count", s.pair_count},
       {"mention_count", s.mention_count}};
}

}  // namespace pmcoa::store
