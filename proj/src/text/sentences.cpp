#include <algorithm>

#include "cliniflow/core/unicode.hpp"
#include "cliniflow/errors.hpp"
#include "cliniflow/text/operations.hpp"

namespace cliniflow::text {

namespace sp = cliniflow::spans;

std::vector<Segment> split_sentences(const Segment& seg, std::u32string_view punct_chars,
                                     bool keep_punct) {
  const std::u32string text = unicode::decode(seg.text);
  const auto is_punct = [&](char32_t c) { return punct_chars.find(c) != std::u32string_view::npos; };
  std::vector<Segment> sentences;
  auto emit = [&](std::size_t from, std::size_t to) {
    while (from < to && unicode::is_space(text[from])) ++from;
    while (to > from && unicode::is_space(text[to - 1])) --to;
    const bool has_content = std::any_of(text.begin() + from, text.begin() + to, [&](char32_t c) {
      return !is_punct(c) && !unicode::is_space(c);
    });
    if (!has_content) return;
    const std::vector<sp::Range> range{{from, to}};
    sp::SpannedText piece = sp::extract(text, seg.spans, range);
    sentences.push_back(make_segment("sentence", unicode::encode(piece.text), std::move(piece.spans)));
  };
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == U'\n') {
      emit(start, i);
      start = i + 1;
    } else if (is_punct(text[i])) {
      emit(start, keep_punct ? i + 1 : i);
      start = i + 1;
    }
  }
  emit(start, text.size());
  return sentences;
}

std::vector<DeidRule> default_deid_rules() {
  return {
      {R"(\b\d{1,2}[/.-]\d{1,2}[/.-]\d{4}\b)", "[DATE]"},
      {R"(\b\d{4}-\d{2}-\d{2}\b)", "[DATE]"},
      {R"(\b0\d(?:[ .]?\d{2}){4}\b)", "[TEL]"},
      {R"(\b(?:M\.|Mme|Mlle|Dr|Pr)\s+[A-ZÀ-Ý][A-ZÀ-Ý'-]+(?:\s+[A-ZÀ-Ý][A-ZÀ-Ý'-]+)*\b)", "[NOM]"},
      {R"(\b\d{13}\b|\b[12]\s?\d{2}\s?\d{2}\s?\d{2}\s?\d{3}\s?\d{3}\s?\d{2}\b)", "[NIR]"},
  };
}

namespace {

std::string strip_brackets(std::string_view placeholder) {
  if (placeholder.size() >= 2 && placeholder.front() == '[' && placeholder.back() == ']') {
    return std::string(placeholder.substr(1, placeholder.size() - 2));
  }
  return std::string(placeholder);
}

}  // namespace

DeidResult deidentify(const Segment& seg, const std::vector<DeidRule>& rules) {
  struct Candidate {
    sp::Range range;
    std::size_t rule;
  };
  std::vector<Candidate> candidates;
  const std::u32string text = unicode::decode(seg.text);
  for (std::size_t r = 0; r < rules.size(); ++r) {
    if (rules[r].placeholder.empty()) throw RuleError("de-identification placeholder is empty");
    for (const Match& m : Pattern(rules[r].pattern).find_all(text)) candidates.push_back({m.whole, r});
  }
  std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.range.start != b.range.start) return a.range.start < b.range.start;
    if (a.range.end != b.range.end) return a.range.end > b.range.end;
    return a.rule < b.rule;
  });
  std::vector<sp::Range> ranges;
  std::vector<std::u32string> placeholders;
  DeidResult result;
  for (const Candidate& c : candidates) {
    if (!ranges.empty() && c.range.start < ranges.back().end) continue;
    ranges.push_back(c.range);
    placeholders.push_back(unicode::decode(rules[c.rule].placeholder));
    const std::vector<sp::Range> one{c.range};
    sp::SpannedText phi = sp::extract(text, seg.spans, one);
    result.phi.push_back(make_entity(strip_brackets(rules[c.rule].placeholder),
                                     unicode::encode(phi.text), std::move(phi.spans)));
  }
  sp::SpannedText replaced = sp::replace(text, seg.spans, ranges, placeholders);
  result.segment = make_segment(seg.label, unicode::encode(replaced.text), std::move(replaced.spans));
  result.segment.metadata = seg.metadata;
  return result;
}

}  // namespace cliniflow::text
