#include "cliniflow/spans/span.hpp"

#include <algorithm>

#include "cliniflow/core/unicode.hpp"
#include "cliniflow/errors.hpp"

namespace cliniflow::spans {

namespace {

std::string describe(const Range& r) {
  return "[" + std::to_string(r.start) + ", " + std::to_string(r.end) + ")";
}

void check_chain(std::u32string_view text, const SpanChain& chain) {
  const std::size_t len = span_length(chain);
  if (len != text.size()) {
    throw InvalidRange("span chain covers " + std::to_string(len) + " code points but text has " +
                       std::to_string(text.size()));
  }
}

void check_ranges(std::span<const Range> ranges, std::size_t text_length) {
  std::size_t prev_end = 0;
  for (const Range& r : ranges) {
    if (r.start > r.end) throw InvalidRange("inverted range " + describe(r));
    if (r.end > text_length) {
      throw InvalidRange("range " + describe(r) + " exceeds text length " +
                         std::to_string(text_length));
    }
    if (r.start < prev_end) throw InvalidRange("unsorted or overlapping range " + describe(r));
    prev_end = r.end;
  }
}

constexpr std::size_t kFresh = static_cast<std::size_t>(-1);

// Output chain under construction. Consecutive slices of the same input span
// that end up adjacent (nothing inserted between them) are fused back.
struct ChainBuilder {
  SpanChain chain;
  std::size_t last_source = kFresh;

  void push(Span piece, std::size_t source) {
    if (span_length(piece) == 0) return;
    if (source != kFresh && source == last_source && !chain.empty()) {
      auto* prev_orig = std::get_if<OriginalSpan>(&chain.back());
      const auto* orig = std::get_if<OriginalSpan>(&piece);
      if (prev_orig != nullptr && orig != nullptr && prev_orig->end == orig->start) {
        prev_orig->end = orig->end;
        return;
      }
      auto* prev_mod = std::get_if<ModifiedSpan>(&chain.back());
      const auto* mod = std::get_if<ModifiedSpan>(&piece);
      if (prev_mod != nullptr && mod != nullptr) {
        prev_mod->length += mod->length;
        return;
      }
    }
    chain.push_back(std::move(piece));
    last_source = source;
  }
};

// Appends the part of `chain` covering text offsets [from, to).
void slice_into(const SpanChain& chain, std::size_t from, std::size_t to, ChainBuilder& out) {
  if (from >= to) return;
  std::size_t offset = 0;
  for (std::size_t idx = 0; idx < chain.size(); ++idx) {
    const Span& span = chain[idx];
    const std::size_t len = span_length(span);
    const std::size_t lo = std::max(from, offset);
    const std::size_t hi = std::min(to, offset + len);
    if (lo < hi) {
      if (const auto* orig = std::get_if<OriginalSpan>(&span)) {
        out.push(OriginalSpan{orig->start + (lo - offset), orig->start + (hi - offset)}, idx);
      } else {
        // a slice of a replacement still stands for everything it replaced
        const auto& mod = std::get<ModifiedSpan>(span);
        out.push(ModifiedSpan{hi - lo, mod.replaced}, idx);
      }
    }
    offset += len;
    if (offset >= to) break;
  }
}

std::vector<OriginalSpan> covered_originals(const SpanChain& chain, std::size_t from,
                                            std::size_t to) {
  ChainBuilder builder;
  slice_into(chain, from, to, builder);
  const SpanChain& covered = builder.chain;
  std::vector<OriginalSpan> result;
  auto add = [&result](const OriginalSpan& s) {
    if (s.start == s.end) return;
    if (std::find(result.begin(), result.end(), s) == result.end()) result.push_back(s);
  };
  for (const Span& span : covered) {
    if (const auto* orig = std::get_if<OriginalSpan>(&span)) {
      add(*orig);
    } else {
      for (const OriginalSpan& s : std::get<ModifiedSpan>(span).replaced) add(s);
    }
  }
  return result;
}

}  // namespace

std::size_t span_length(const Span& span) {
  if (const auto* orig = std::get_if<OriginalSpan>(&span)) return orig->length();
  return std::get<ModifiedSpan>(span).length;
}

std::size_t span_length(const SpanChain& chain) {
  std::size_t total = 0;
  for (const Span& span : chain) total += span_length(span);
  return total;
}

bool has_modified(const SpanChain& chain) {
  return std::any_of(chain.begin(), chain.end(),
                     [](const Span& s) { return std::holds_alternative<ModifiedSpan>(s); });
}

SpanChain identity_chain(std::size_t length) {
  if (length == 0) return {};
  return {OriginalSpan{0, length}};
}

SpannedText extract(std::u32string_view text, const SpanChain& chain,
                    std::span<const Range> ranges) {
  check_chain(text, chain);
  check_ranges(ranges, text.size());
  SpannedText out;
  ChainBuilder builder;
  for (const Range& r : ranges) {
    out.text.append(text.substr(r.start, r.end - r.start));
    slice_into(chain, r.start, r.end, builder);
  }
  out.spans = std::move(builder.chain);
  return out;
}

SpannedText replace(std::u32string_view text, const SpanChain& chain,
                    std::span<const Range> ranges,
                    std::span<const std::u32string> replacements) {
  if (ranges.size() != replacements.size()) {
    throw ArityMismatch(std::to_string(ranges.size()) + " ranges but " +
                        std::to_string(replacements.size()) + " replacements");
  }
  check_chain(text, chain);
  check_ranges(ranges, text.size());
  SpannedText out;
  ChainBuilder builder;
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    const Range& r = ranges[i];
    out.text.append(text.substr(cursor, r.start - cursor));
    slice_into(chain, cursor, r.start, builder);
    out.text.append(replacements[i]);
    builder.push(ModifiedSpan{replacements[i].size(), covered_originals(chain, r.start, r.end)},
                 kFresh);
    cursor = r.end;
  }
  out.text.append(text.substr(cursor));
  slice_into(chain, cursor, text.size(), builder);
  out.spans = std::move(builder.chain);
  return out;
}

SpannedText remove(std::u32string_view text, const SpanChain& chain,
                   std::span<const Range> ranges) {
  const std::vector<std::u32string> empties(ranges.size());
  return replace(text, chain, ranges, empties);
}

SpannedText insert(std::u32string_view text, const SpanChain& chain,
                   std::span<const std::size_t> positions,
                   std::span<const std::u32string> inserts) {
  if (positions.size() != inserts.size()) {
    throw ArityMismatch(std::to_string(positions.size()) + " positions but " +
                        std::to_string(inserts.size()) + " inserts");
  }
  std::vector<Range> ranges;
  ranges.reserve(positions.size());
  for (std::size_t p : positions) ranges.push_back(Range{p, p});
  return replace(text, chain, ranges, inserts);
}

SpannedText concatenate(std::span<const SpannedText> parts, std::u32string_view separator) {
  SpannedText out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    check_chain(parts[i].text, parts[i].spans);
    if (i > 0 && !separator.empty()) {
      out.text.append(separator);
      out.spans.push_back(ModifiedSpan{separator.size(), {}});
    }
    out.text.append(parts[i].text);
    out.spans.insert(out.spans.end(), parts[i].spans.begin(), parts[i].spans.end());
  }
  return out;
}

std::vector<OriginalSpan> normalize_spans(const SpanChain& chain) {
  std::vector<OriginalSpan> all;
  for (const Span& span : chain) {
    if (const auto* orig = std::get_if<OriginalSpan>(&span)) {
      all.push_back(*orig);
    } else {
      const auto& replaced = std::get<ModifiedSpan>(span).replaced;
      all.insert(all.end(), replaced.begin(), replaced.end());
    }
  }
  std::erase_if(all, [](const OriginalSpan& s) { return s.start >= s.end; });
  std::sort(all.begin(), all.end());
  std::vector<OriginalSpan> merged;
  for (const OriginalSpan& s : all) {
    if (!merged.empty() && s.start <= merged.back().end) {
      merged.back().end = std::max(merged.back().end, s.end);
    } else {
      merged.push_back(s);
    }
  }
  return merged;
}

SpannedUtf8 extract(std::string_view text, const SpanChain& chain, std::span<const Range> ranges) {
  SpannedText result = extract(std::u32string_view(unicode::decode(text)), chain, ranges);
  return {unicode::encode(result.text), std::move(result.spans)};
}

SpannedUtf8 replace(std::string_view text, const SpanChain& chain, std::span<const Range> ranges,
                    std::span<const std::string> replacements) {
  std::vector<std::u32string> wide;
  wide.reserve(replacements.size());
  for (const std::string& r : replacements) wide.push_back(unicode::decode(r));
  SpannedText result = replace(std::u32string_view(unicode::decode(text)), chain, ranges, wide);
  return {unicode::encode(result.text), std::move(result.spans)};
}

}  // namespace cliniflow::spans
