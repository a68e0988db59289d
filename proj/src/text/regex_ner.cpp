#include <algorithm>
#include <array>
#include <charconv>

#include "cliniflow/core/unicode.hpp"
#include "cliniflow/errors.hpp"
#include "cliniflow/text/operations.hpp"

namespace cliniflow::text {

namespace sp = cliniflow::spans;

RegexMatcher::RegexMatcher(std::vector<RegexRule> rules) {
  for (RegexRule& rule : rules) {
    if (rule.label.empty()) throw RuleError("regex rule '" + rule.pattern + "' has no label");
    Pattern pattern(rule.pattern, !rule.case_sensitive);
    if (rule.group && *rule.group > pattern.group_count()) {
      throw RuleError("pattern '" + rule.pattern + "' has no group " + std::to_string(*rule.group));
    }
    std::optional<Pattern> exclusion;
    if (rule.exclusion_pattern) exclusion.emplace(*rule.exclusion_pattern, !rule.case_sensitive);
    rules_.push_back({std::move(rule), std::move(pattern), std::move(exclusion)});
  }
}

std::vector<Entity> RegexMatcher::match(const Segment& seg) const {
  const std::u32string text = unicode::decode(seg.text);
  struct Hit {
    sp::Range range;
    std::size_t rule;
  };
  std::vector<Hit> hits;
  for (std::size_t r = 0; r < rules_.size(); ++r) {
    const Compiled& c = rules_[r];
    if (c.exclusion && c.exclusion->search(text)) continue;
    for (const Match& m : c.pattern.find_all(text)) {
      std::optional<sp::Range> range = m.whole;
      if (c.rule.group) range = m.groups[*c.rule.group];
      if (!range || range->start == range->end) continue;
      hits.push_back({*range, r});
    }
  }
  std::stable_sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
    return a.range.start < b.range.start;
  });
  std::vector<Entity> out;
  for (const Hit& h : hits) {
    const std::vector<sp::Range> one{h.range};
    sp::SpannedText piece = sp::extract(text, seg.spans, one);
    out.push_back(make_entity(rules_[h.rule].rule.label, unicode::encode(piece.text),
                              std::move(piece.spans)));
  }
  return out;
}

std::vector<Entity> match_regex(const Segment& seg, const std::vector<RegexRule>& rules) {
  return RegexMatcher(rules).match(seg);
}

namespace {

enum class DateLayout { day_month_year, year_month_day, day_monthname_year };

struct DateRule {
  Pattern pattern;
  DateLayout layout;
};

const std::vector<DateRule>& date_rules() {
  static const std::vector<DateRule> rules = [] {
    std::vector<DateRule> r;
    r.push_back({Pattern(R"(\b(\d{1,2})([/-])(\d{1,2})\2(\d{4})\b)"), DateLayout::day_month_year});
    r.push_back({Pattern(R"(\b(\d{4})-(\d{1,2})-(\d{1,2})\b)"), DateLayout::year_month_day});
    r.push_back({Pattern(R"(\b(\d{1,2}|1er)\s+(janvier|f[ée]vrier|mars|avril|mai|juin|juillet|ao[uû]t|septembre|octobre|novembre|d[ée]cembre)\s+(\d{4})\b)",
                         true),
                 DateLayout::day_monthname_year});
    return r;
  }();
  return rules;
}

int month_number(std::u32string name) {
  for (auto& c : name) {
    if (c >= U'A' && c <= U'Z') c = c - U'A' + U'a';
  }
  const auto folded = unicode::fold(name, true, true).text;
  static const std::array<std::u32string_view, 12> months = {
      U"janvier", U"fevrier", U"mars",      U"avril",   U"mai",      U"juin",
      U"juillet", U"aout",    U"septembre", U"octobre", U"novembre", U"decembre"};
  for (std::size_t i = 0; i < months.size(); ++i) {
    if (folded == months[i]) return static_cast<int>(i) + 1;
  }
  return 0;
}

int to_int(std::u32string_view digits) {
  if (digits == U"1er") return 1;
  int value = 0;
  for (char32_t c : digits) value = value * 10 + static_cast<int>(c - U'0');
  return value;
}

bool valid_date(int year, int month, int day) {
  if (year < 1 || month < 1 || month > 12 || day < 1) return false;
  static const int days[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  const bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
  const int limit = days[month - 1] + (month == 2 && leap ? 1 : 0);
  return day <= limit;
}

std::string iso(int year, int month, int day) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, month, day);
  return buf;
}

}  // namespace

std::vector<Entity> match_dates(const Segment& seg) {
  const std::u32string text = unicode::decode(seg.text);
  struct Hit {
    sp::Range range;
    int year, month, day;
  };
  std::vector<Hit> hits;
  for (const DateRule& rule : date_rules()) {
    for (const Match& m : rule.pattern.find_all(text)) {
      auto group = [&](std::size_t g) {
        const auto& r = *m.groups[g];
        return std::u32string_view(text).substr(r.start, r.end - r.start);
      };
      Hit h{m.whole, 0, 0, 0};
      switch (rule.layout) {
        case DateLayout::day_month_year:
          h.day = to_int(group(1));
          h.month = to_int(group(3));
          h.year = to_int(group(4));
          break;
        case DateLayout::year_month_day:
          h.year = to_int(group(1));
          h.month = to_int(group(2));
          h.day = to_int(group(3));
          break;
        case DateLayout::day_monthname_year:
          h.day = to_int(group(1));
          h.month = month_number(std::u32string(group(2)));
          h.year = to_int(group(3));
          break;
      }
      hits.push_back(h);
    }
  }
  std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
    if (a.range.start != b.range.start) return a.range.start < b.range.start;
    return a.range.end > b.range.end;
  });
  std::vector<Entity> out;
  std::size_t covered_to = 0;
  for (const Hit& h : hits) {
    if (!out.empty() && h.range.start < covered_to) continue;
    covered_to = h.range.end;
    const std::vector<sp::Range> one{h.range};
    sp::SpannedText piece = sp::extract(text, seg.spans, one);
    Entity e = make_entity("date", unicode::encode(piece.text), std::move(piece.spans));
    if (valid_date(h.year, h.month, h.day)) {
      e.attributes.push_back(make_attribute("normalized", iso(h.year, h.month, h.day)));
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace cliniflow::text
