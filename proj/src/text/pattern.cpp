#include "cliniflow/text/pattern.hpp"

#include <locale>

#include "cliniflow/core/unicode.hpp"
#include "cliniflow/errors.hpp"

namespace cliniflow::text {

namespace {

const std::locale& unicode_locale() {
  static const std::locale loc = [] {
    for (const char* name : {"C.UTF-8", "C.utf8", "en_US.UTF-8"}) {
      try {
        return std::locale(name);
      } catch (const std::runtime_error&) {
      }
    }
    return std::locale::classic();
  }();
  return loc;
}

}  // namespace

Pattern::Pattern(std::string_view utf8_pattern, bool case_insensitive) : source_(utf8_pattern) {
  auto flags = std::regex::ECMAScript;
  if (case_insensitive) flags |= std::regex::icase;
  try {
    regex_.imbue(unicode_locale());
    regex_.assign(unicode::to_wide(unicode::decode(utf8_pattern, "pattern")), flags);
  } catch (const std::regex_error& e) {
    throw RuleError("invalid pattern '" + source_ + "': " + e.what());
  }
}

std::vector<Match> Pattern::find_all(std::u32string_view text) const {
  const std::wstring wide = unicode::to_wide(text);
  std::vector<Match> out;
  for (std::wsregex_iterator it(wide.begin(), wide.end(), regex_), end; it != end; ++it) {
    const auto& m = *it;
    if (m.length(0) == 0) continue;
    Match match;
    const auto start = static_cast<std::size_t>(m.position(0));
    match.whole = {start, start + static_cast<std::size_t>(m.length(0))};
    for (std::size_t g = 0; g < m.size(); ++g) {
      if (m[g].matched) {
        const auto gs = static_cast<std::size_t>(m.position(g));
        match.groups.emplace_back(spans::Range{gs, gs + static_cast<std::size_t>(m.length(g))});
      } else {
        match.groups.emplace_back(std::nullopt);
      }
    }
    out.push_back(std::move(match));
  }
  return out;
}

bool Pattern::search(std::u32string_view text) const {
  const std::wstring wide = unicode::to_wide(text);
  return std::regex_search(wide, regex_);
}

}  // namespace cliniflow::text
