#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace cliniflow::spans {

// Half-open range [start, end) of code points in the raw document text.
struct OriginalSpan {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t length() const { return end - start; }
  friend bool operator==(const OriginalSpan&, const OriginalSpan&) = default;
  friend auto operator<=>(const OriginalSpan&, const OriginalSpan&) = default;
};

// A run of `length` code points standing for the `replaced` original ranges.
// An empty `replaced` list marks a pure insertion.
struct ModifiedSpan {
  std::size_t length = 0;
  std::vector<OriginalSpan> replaced;

  friend bool operator==(const ModifiedSpan&, const ModifiedSpan&) = default;
};

using Span = std::variant<OriginalSpan, ModifiedSpan>;
using SpanChain = std::vector<Span>;

// Half-open range relative to the text a chain annotates.
struct Range {
  std::size_t start = 0;
  std::size_t end = 0;

  friend bool operator==(const Range&, const Range&) = default;
};

struct SpannedText {
  std::u32string text;
  SpanChain spans;

  friend bool operator==(const SpannedText&, const SpannedText&) = default;
};

struct SpannedUtf8 {
  std::string text;
  SpanChain spans;

  friend bool operator==(const SpannedUtf8&, const SpannedUtf8&) = default;
};

std::size_t span_length(const Span& span);
std::size_t span_length(const SpanChain& chain);

bool has_modified(const SpanChain& chain);

// Chain covering a freshly loaded text of `length` code points.
SpanChain identity_chain(std::size_t length);

// All operations below require span_length(chain) == text length and ranges
// that are sorted, disjoint and within the text; they throw InvalidRange
// otherwise. Zero-length pieces never appear in returned chains.

SpannedText extract(std::u32string_view text, const SpanChain& chain,
                    std::span<const Range> ranges);

SpannedText replace(std::u32string_view text, const SpanChain& chain,
                    std::span<const Range> ranges,
                    std::span<const std::u32string> replacements);

SpannedText remove(std::u32string_view text, const SpanChain& chain,
                   std::span<const Range> ranges);

// Positions must be non-decreasing; several inserts may share a position.
SpannedText insert(std::u32string_view text, const SpanChain& chain,
                   std::span<const std::size_t> positions,
                   std::span<const std::u32string> inserts);

SpannedText concatenate(std::span<const SpannedText> parts, std::u32string_view separator);

// Projection of a chain onto the raw document: sorted, with overlapping and
// touching spans merged. Pure insertions contribute nothing.
std::vector<OriginalSpan> normalize_spans(const SpanChain& chain);

// UTF-8 front-ends; offsets stay in code points.
SpannedUtf8 extract(std::string_view text, const SpanChain& chain, std::span<const Range> ranges);
SpannedUtf8 replace(std::string_view text, const SpanChain& chain, std::span<const Range> ranges,
                    std::span<const std::string> replacements);

}  // namespace cliniflow::spans
