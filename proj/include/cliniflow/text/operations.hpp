#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cliniflow/core/model.hpp"
#include "cliniflow/text/pattern.hpp"

namespace cliniflow::text {

// ------------------------------------------------------------ sentences

inline constexpr std::u32string_view kDefaultPunct = U".!?";

// Splits at punctuation characters and newlines. Every sentence is
// extracted from `seg`, so its chain still points into the raw document.
// Abbreviation dots ("Dr.", "M.") are not special-cased.
std::vector<Segment> split_sentences(const Segment& seg,
                                     std::u32string_view punct_chars = kDefaultPunct,
                                     bool keep_punct = true);

// ------------------------------------------------------ de-identification

struct DeidRule {
  std::string pattern;
  std::string placeholder;  // e.g. "[DATE]"
};

std::vector<DeidRule> default_deid_rules();

struct DeidResult {
  Segment segment;          // text with placeholders, chain pointing at the PHI
  std::vector<Entity> phi;  // one per match, over the matched (pre-replacement) spans
};

// Overlapping matches resolve leftmost first, then longest, then by rule
// order. PHI entities are labeled with the placeholder minus its brackets.
DeidResult deidentify(const Segment& seg, const std::vector<DeidRule>& rules);

// ----------------------------------------------------------- dictionary

struct DictionaryEntry {
  std::string term;
  std::string label;
  std::optional<std::string> norm_id;
  bool case_sensitive = false;

  friend bool operator==(const DictionaryEntry&, const DictionaryEntry&) = default;
};

// "term,label[,norm_id[,case_sensitive]]" lines; '#' starts a comment and
// an optional "term,label,..." header is skipped. Fields may be quoted.
std::vector<DictionaryEntry> parse_dictionary_csv(std::string_view text);
std::vector<DictionaryEntry> load_dictionary(const std::filesystem::path& file);

// Compiled dictionary: immutable and shareable across threads.
class DictionaryMatcher {
 public:
  DictionaryMatcher(std::vector<DictionaryEntry> entries, bool strip_accents);
  ~DictionaryMatcher();
  DictionaryMatcher(DictionaryMatcher&&) noexcept;
  DictionaryMatcher& operator=(DictionaryMatcher&&) noexcept;

  // Matches bounded by non-word characters or text edges; leftmost-longest
  // among overlaps, earlier entries winning ties. A "norm_id" attribute is
  // attached when the entry has one.
  std::vector<Entity> match(const Segment& seg) const;

  const std::vector<DictionaryEntry>& entries() const { return entries_; }

 private:
  struct Trie;
  std::vector<DictionaryEntry> entries_;
  bool strip_accents_;
  std::unique_ptr<Trie> folded_;     // case-insensitive entries
  std::unique_ptr<Trie> sensitive_;  // case-sensitive entries
};

std::vector<Entity> match_dictionary(const Segment& seg, const std::vector<DictionaryEntry>& dict,
                                     bool strip_accents);

// ---------------------------------------------------------------- regex

struct RegexRule {
  std::string pattern;
  std::string label;
  std::optional<std::string> exclusion_pattern;
  std::optional<std::size_t> group;
  bool case_sensitive = true;
};

class RegexMatcher {
 public:
  // Throws RuleError if a pattern does not compile or lacks the group.
  explicit RegexMatcher(std::vector<RegexRule> rules);

  // One entity per match, unless the rule's exclusion pattern matches
  // anywhere in the segment. Empty matches are never emitted.
  std::vector<Entity> match(const Segment& seg) const;

 private:
  struct Compiled {
    RegexRule rule;
    Pattern pattern;
    std::optional<Pattern> exclusion;
  };
  std::vector<Compiled> rules_;
};

std::vector<Entity> match_regex(const Segment& seg, const std::vector<RegexRule>& rules);

// ---------------------------------------------------------------- dates

// Numeric (dd/mm/yyyy, dd-mm-yyyy, yyyy-mm-dd) and French month-name dates,
// labeled "date". Valid calendar dates get a "normalized" ISO-8601 attribute.
std::vector<Entity> match_dates(const Segment& seg);

// -------------------------------------------------------------- context

struct ContextRuleSet {
  std::string attribute_label;
  std::vector<std::string> cues_before;
  std::vector<std::string> cues_after;
  std::vector<std::string> terminators;
  std::size_t max_token_window = 5;
};

std::vector<std::string> default_terminators();
ContextRuleSet negation_rules();
ContextRuleSet hypothesis_rules();
ContextRuleSet antecedent_rules();

class ContextDetector {
 public:
  // Throws RuleError on an empty cue set, a zero window or a bad pattern.
  explicit ContextDetector(ContextRuleSet rules);

  const ContextRuleSet& rules() const { return rules_; }

  // Always one attribute per entity, true when a cue reaches the entity
  // within the token window without crossing a terminator. Tokens are
  // maximal runs of non-space characters. Throws ScopeError if an entity
  // does not lie inside the sentence.
  std::vector<std::pair<std::string, Attribute>> detect(const Segment& sentence,
                                                        const std::vector<Entity>& entities) const;

 private:
  ContextRuleSet rules_;
  std::vector<Pattern> before_;
  std::vector<Pattern> after_;
  std::vector<Pattern> terminators_;
};

std::vector<std::pair<std::string, Attribute>> detect_context(const Segment& sentence,
                                                              const std::vector<Entity>& entities,
                                                              const ContextRuleSet& rules);

// True when every normalized span of `inner` lies inside the normalized
// spans of `outer`.
bool projects_within(const spans::SpanChain& inner, const spans::SpanChain& outer);

}  // namespace cliniflow::text
