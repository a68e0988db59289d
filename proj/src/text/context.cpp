#include <algorithm>
#include <limits>

#include "cliniflow/core/unicode.hpp"
#include "cliniflow/errors.hpp"
#include "cliniflow/text/operations.hpp"

namespace cliniflow::text {

namespace sp = cliniflow::spans;

std::vector<std::string> default_terminators() {
  return {R"(\bmais\b)", R"(\bcependant\b)", ",", ";"};
}

ContextRuleSet negation_rules() {
  return {"is_negated",
          {R"(\bpas\b)", R"(\bsans\b)", R"(\baucun(e|s|es)?\b)", R"(\babsence\s+d(e\b|'))",
           R"(\bni\b)"},
          {},
          default_terminators(),
          5};
}

ContextRuleSet hypothesis_rules() {
  return {"is_hypothesis",
          {R"(\bsi\b)", R"(\béventuel(le)?s?\b)", R"(\bpossibles?\b)",
           R"(\bsuspicion\s+d(e\b|'))"},
          {R"(\bpossibles?\b)"},
          default_terminators(),
          5};
}

ContextRuleSet antecedent_rules() {
  return {"is_family",
          {R"(\bantécédents?\b)", R"(\bATCD\b)", R"(\bfamilia(l|le|les|ux)\b)", R"(\bmère\b)",
           R"(\bpère\b)"},
          {},
          default_terminators(),
          5};
}

bool projects_within(const sp::SpanChain& inner, const sp::SpanChain& outer) {
  const auto in = sp::normalize_spans(inner);
  const auto out = sp::normalize_spans(outer);
  return std::all_of(in.begin(), in.end(), [&](const sp::OriginalSpan& s) {
    return std::any_of(out.begin(), out.end(), [&](const sp::OriginalSpan& o) {
      return o.start <= s.start && s.end <= o.end;
    });
  });
}

ContextDetector::ContextDetector(ContextRuleSet rules) : rules_(std::move(rules)) {
  if (rules_.attribute_label.empty()) throw RuleError("context rules need an attribute label");
  if (rules_.cues_before.empty() && rules_.cues_after.empty()) {
    throw RuleError("context rules '" + rules_.attribute_label + "' have no cues");
  }
  if (rules_.max_token_window == 0) throw RuleError("max_token_window must be positive");
  for (const auto& p : rules_.cues_before) before_.emplace_back(p, true);
  for (const auto& p : rules_.cues_after) after_.emplace_back(p, true);
  for (const auto& p : rules_.terminators) terminators_.emplace_back(p, true);
}

namespace {

constexpr std::size_t kInserted = std::numeric_limits<std::size_t>::max();

// Raw-text index of every sentence character; inserted and replacement
// characters map to kInserted.
std::vector<std::size_t> original_index(const sp::SpanChain& chain) {
  std::vector<std::size_t> out;
  for (const sp::Span& s : chain) {
    if (const auto* o = std::get_if<sp::OriginalSpan>(&s)) {
      for (std::size_t i = o->start; i < o->end; ++i) out.push_back(i);
    } else {
      out.insert(out.end(), std::get<sp::ModifiedSpan>(s).length, kInserted);
    }
  }
  return out;
}

}  // namespace

std::vector<std::pair<std::string, Attribute>> ContextDetector::detect(
    const Segment& sentence, const std::vector<Entity>& entities) const {
  const std::u32string text = unicode::decode(sentence.text);
  const std::vector<std::size_t> index = original_index(sentence.spans);

  std::vector<sp::Range> tokens;
  for (std::size_t i = 0; i < text.size();) {
    if (unicode::is_space(text[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && !unicode::is_space(text[j])) ++j;
    tokens.push_back({i, j});
    i = j;
  }
  auto tokens_in = [&](std::size_t a, std::size_t b) {
    return static_cast<std::size_t>(std::count_if(tokens.begin(), tokens.end(), [&](const sp::Range& t) {
      return t.start < b && a < t.end;
    }));
  };

  std::vector<Match> terminator_hits;
  for (const Pattern& p : terminators_) {
    auto hits = p.find_all(text);
    terminator_hits.insert(terminator_hits.end(), hits.begin(), hits.end());
  }
  auto blocked = [&](std::size_t a, std::size_t b) {
    return std::any_of(terminator_hits.begin(), terminator_hits.end(), [&](const Match& m) {
      return a <= m.whole.start && m.whole.end <= b;
    });
  };

  std::vector<Match> before_hits, after_hits;
  for (const Pattern& p : before_) {
    auto hits = p.find_all(text);
    before_hits.insert(before_hits.end(), hits.begin(), hits.end());
  }
  for (const Pattern& p : after_) {
    auto hits = p.find_all(text);
    after_hits.insert(after_hits.end(), hits.begin(), hits.end());
  }

  std::vector<std::pair<std::string, Attribute>> out;
  for (const Entity& e : entities) {
    const auto projection = sp::normalize_spans(e.spans);
    if (projection.empty()) throw ScopeError("entity " + e.id + " has no extent in the raw text");
    if (!projects_within(e.spans, sentence.spans)) {
      throw ScopeError("entity " + e.id + " lies outside the sentence");
    }
    std::size_t first = text.size(), last = 0;
    for (std::size_t k = 0; k < index.size(); ++k) {
      if (index[k] == kInserted) continue;
      const bool inside = std::any_of(projection.begin(), projection.end(), [&](const sp::OriginalSpan& s) {
        return s.start <= index[k] && index[k] < s.end;
      });
      if (inside) {
        first = std::min(first, k);
        last = std::max(last, k + 1);
      }
    }

    bool hit = false;
    for (const Match& m : before_hits) {
      if (m.whole.end > first) continue;
      if (tokens_in(m.whole.end, first) <= rules_.max_token_window && !blocked(m.whole.end, first)) {
        hit = true;
        break;
      }
    }
    for (std::size_t c = 0; !hit && c < after_hits.size(); ++c) {
      const Match& m = after_hits[c];
      if (m.whole.start < last) continue;
      if (tokens_in(last, m.whole.start) <= rules_.max_token_window && !blocked(last, m.whole.start)) {
        hit = true;
      }
    }
    out.emplace_back(e.id, make_attribute(rules_.attribute_label, hit));
  }
  return out;
}

std::vector<std::pair<std::string, Attribute>> detect_context(const Segment& sentence,
                                                              const std::vector<Entity>& entities,
                                                              const ContextRuleSet& rules) {
  return ContextDetector(rules).detect(sentence, entities);
}

}  // namespace cliniflow::text
