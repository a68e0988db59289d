#pragma once

#include <cstddef>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "cliniflow/spans/span.hpp"

namespace cliniflow::text {

struct Match {
  spans::Range whole;
  std::vector<std::optional<spans::Range>> groups;  // groups[0] is the whole match
};

// ECMAScript regular expression evaluated over code points, with Unicode
// letters counted as word characters for \b and \w. Throws RuleError when the
// pattern does not compile.
class Pattern {
 public:
  explicit Pattern(std::string_view utf8_pattern, bool case_insensitive = false);

  const std::string& source() const { return source_; }
  std::size_t group_count() const { return regex_.mark_count(); }

  // Non-overlapping matches left to right; zero-width matches are skipped.
  std::vector<Match> find_all(std::u32string_view text) const;
  bool search(std::u32string_view text) const;

 private:
  std::string source_;
  std::wregex regex_;
};

}  // namespace cliniflow::text
