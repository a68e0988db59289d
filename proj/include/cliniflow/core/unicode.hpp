#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace cliniflow::unicode {

// Decodes UTF-8 into code points. Throws DecodeFailure naming `source` and
// the byte offset of the first invalid sequence.
std::u32string decode(std::string_view utf8, std::string_view source = "<text>");
std::string encode(std::u32string_view text);

// Number of code points in valid UTF-8.
std::size_t length(std::string_view utf8);

std::wstring to_wide(std::u32string_view text);
std::u32string from_wide(std::wstring_view text);

// Letters, digits and combining marks.
bool is_word_char(char32_t c);
bool is_space(char32_t c);

// Text after case and/or accent folding, with a map from every folded
// position back to the input position it came from.
struct Folded {
  std::u32string text;
  std::vector<std::size_t> origin;
};

// Accent folding decomposes canonically and drops nonspacing marks.
Folded fold(std::u32string_view text, bool case_fold, bool strip_accents);

}  // namespace cliniflow::unicode
