#include <algorithm>
#include <map>

#include "cliniflow/core/unicode.hpp"
#include "cliniflow/errors.hpp"
#include "cliniflow/io/converters.hpp"
#include "cliniflow/text/operations.hpp"

namespace cliniflow::text {

namespace sp = cliniflow::spans;

namespace {

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back().push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back().push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back().push_back(c);
    }
  }
  for (auto& f : fields) {
    const auto first = f.find_first_not_of(" \t");
    const auto last = f.find_last_not_of(" \t");
    f = first == std::string::npos ? std::string() : f.substr(first, last - first + 1);
  }
  return fields;
}

}  // namespace

std::vector<DictionaryEntry> parse_dictionary_csv(std::string_view text) {
  std::vector<DictionaryEntry> entries;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string_view::npos || line[first] == '#') continue;
    const auto fields = split_csv_line(line);
    if (entries.empty() && fields.size() >= 2 && fields[0] == "term" && fields[1] == "label") {
      continue;
    }
    if (fields.size() < 2 || fields.size() > 4 || fields[0].empty() || fields[1].empty()) {
      throw MalformedLine(line_no, "dictionary line needs term,label[,norm_id[,case_sensitive]]");
    }
    DictionaryEntry e{fields[0], fields[1], std::nullopt, false};
    if (fields.size() >= 3 && !fields[2].empty()) e.norm_id = fields[2];
    if (fields.size() == 4) {
      if (fields[3] == "true" || fields[3] == "1") {
        e.case_sensitive = true;
      } else if (!(fields[3].empty() || fields[3] == "false" || fields[3] == "0")) {
        throw MalformedLine(line_no, "case_sensitive must be true or false");
      }
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

std::vector<DictionaryEntry> load_dictionary(const std::filesystem::path& file) {
  return parse_dictionary_csv(io::read_file(file));
}

struct DictionaryMatcher::Trie {
  struct Node {
    std::map<char32_t, std::size_t> next;
    std::optional<std::size_t> entry;  // smallest entry index ending here
  };
  std::vector<Node> nodes{Node{}};

  void add(const std::u32string& key, std::size_t entry) {
    std::size_t at = 0;
    for (char32_t c : key) {
      auto it = nodes[at].next.find(c);
      if (it == nodes[at].next.end()) {
        nodes.push_back(Node{});
        it = nodes[at].next.emplace(c, nodes.size() - 1).first;
      }
      at = it->second;
    }
    if (!nodes[at].entry || *nodes[at].entry > entry) nodes[at].entry = entry;
  }
};

DictionaryMatcher::DictionaryMatcher(std::vector<DictionaryEntry> entries, bool strip_accents)
    : entries_(std::move(entries)),
      strip_accents_(strip_accents),
      folded_(std::make_unique<Trie>()),
      sensitive_(std::make_unique<Trie>()) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const DictionaryEntry& e = entries_[i];
    if (e.term.empty()) throw RuleError("dictionary term is empty");
    const std::u32string term = unicode::decode(e.term, "dictionary term");
    const auto key = unicode::fold(term, !e.case_sensitive, strip_accents_).text;
    if (key.empty()) continue;
    (e.case_sensitive ? sensitive_ : folded_)->add(key, i);
  }
}

DictionaryMatcher::~DictionaryMatcher() = default;
DictionaryMatcher::DictionaryMatcher(DictionaryMatcher&&) noexcept = default;
DictionaryMatcher& DictionaryMatcher::operator=(DictionaryMatcher&&) noexcept = default;

std::vector<Entity> DictionaryMatcher::match(const Segment& seg) const {
  const std::u32string text = unicode::decode(seg.text);
  const std::size_t n = text.size();
  struct View {
    const Trie* trie;
    unicode::Folded folded;
    std::vector<std::size_t> first;  // first folded index of each text index
  };
  std::vector<View> views;
  for (const auto& [trie, case_fold] : {std::pair{folded_.get(), true}, {sensitive_.get(), false}}) {
    if (trie->nodes.size() == 1) continue;
    View v{trie, unicode::fold(text, case_fold, strip_accents_), {}};
    const std::size_t m = v.folded.text.size();
    constexpr auto kUnset = static_cast<std::size_t>(-1);
    v.first.assign(n + 1, kUnset);
    v.first[n] = m;
    for (std::size_t k = m; k-- > 0;) v.first[v.folded.origin[k]] = k;
    // characters folding to nothing start where the next one does
    for (std::size_t i = n; i-- > 0;) {
      if (v.first[i] == kUnset) v.first[i] = v.first[i + 1];
    }
    views.push_back(std::move(v));
  }

  const auto boundary_before = [&](std::size_t i) {
    return i == 0 || !unicode::is_word_char(text[i - 1]);
  };
  const auto boundary_at = [&](std::size_t e) { return e == n || !unicode::is_word_char(text[e]); };

  std::vector<Entity> found;
  std::size_t i = 0;
  while (i < n) {
    std::size_t best_end = 0;
    std::optional<std::size_t> best_entry;
    if (boundary_before(i)) {
      for (const View& v : views) {
        const auto& ft = v.folded.text;
        std::size_t node = 0;
        for (std::size_t k = v.first[i]; k < ft.size(); ++k) {
          const auto& children = v.trie->nodes[node].next;
          const auto it = children.find(ft[k]);
          if (it == children.end()) break;
          node = it->second;
          const auto& entry = v.trie->nodes[node].entry;
          // only accept ends that fall on a whole input character
          if (!entry || (k + 1 < ft.size() && v.folded.origin[k + 1] == v.folded.origin[k])) {
            continue;
          }
          const std::size_t end = v.folded.origin[k] + 1;
          if (!boundary_at(end)) continue;
          if (end > best_end || (end == best_end && best_entry && *entry < *best_entry)) {
            best_end = end;
            best_entry = *entry;
          }
        }
      }
    }
    if (!best_entry) {
      ++i;
      continue;
    }
    const DictionaryEntry& e = entries_[*best_entry];
    const std::vector<sp::Range> range{{i, best_end}};
    sp::SpannedText piece = sp::extract(text, seg.spans, range);
    Entity ent = make_entity(e.label, unicode::encode(piece.text), std::move(piece.spans));
    if (e.norm_id) ent.attributes.push_back(make_attribute("norm_id", *e.norm_id));
    found.push_back(std::move(ent));
    i = best_end;
  }
  return found;
}

std::vector<Entity> match_dictionary(const Segment& seg, const std::vector<DictionaryEntry>& dict,
                                     bool strip_accents) {
  return DictionaryMatcher(dict, strip_accents).match(seg);
}

}  // namespace cliniflow::text
