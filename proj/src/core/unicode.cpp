#include "cliniflow/core/unicode.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include "cliniflow/errors.hpp"

namespace cliniflow::unicode {

static_assert(sizeof(wchar_t) == sizeof(char32_t), "wide strings must hold code points");

std::u32string decode(std::string_view utf8, std::string_view source) {
  std::u32string out;
  out.reserve(utf8.size());
  std::size_t i = 0;
  const std::size_t n = utf8.size();
  auto fail = [&](std::size_t at) { throw DecodeFailure(std::string(source), at); };
  while (i < n) {
    const auto b0 = static_cast<unsigned char>(utf8[i]);
    char32_t cp = 0;
    std::size_t extra = 0;
    if (b0 < 0x80) {
      cp = b0;
    } else if (b0 >= 0xC2 && b0 <= 0xDF) {
      cp = b0 & 0x1F;
      extra = 1;
    } else if (b0 >= 0xE0 && b0 <= 0xEF) {
      cp = b0 & 0x0F;
      extra = 2;
    } else if (b0 >= 0xF0 && b0 <= 0xF4) {
      cp = b0 & 0x07;
      extra = 3;
    } else {
      fail(i);
    }
    if (extra > 0 && i + extra >= n) fail(i);
    for (std::size_t k = 1; k <= extra; ++k) {
      const auto b = static_cast<unsigned char>(utf8[i + k]);
      if ((b & 0xC0) != 0x80) fail(i);
      cp = (cp << 6) | (b & 0x3F);
    }
    // overlong, surrogate and out-of-range forms
    if ((extra == 2 && cp < 0x800) || (extra == 3 && (cp < 0x10000 || cp > 0x10FFFF)) ||
        (cp >= 0xD800 && cp <= 0xDFFF)) {
      fail(i);
    }
    out.push_back(cp);
    i += extra + 1;
  }
  return out;
}

std::string encode(std::u32string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char32_t c : text) {
    if (c < 0x80) {
      out.push_back(static_cast<char>(c));
    } else if (c < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (c >> 6)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    } else if (c < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (c >> 12)));
      out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (c >> 18)));
      out.push_back(static_cast<char>(0x80 | ((c >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    }
  }
  return out;
}

std::size_t length(std::string_view utf8) {
  std::size_t count = 0;
  for (char c : utf8) {
    if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) ++count;
  }
  return count;
}

std::wstring to_wide(std::u32string_view text) {
  return std::wstring(text.begin(), text.end());
}

std::u32string from_wide(std::wstring_view text) {
  return std::u32string(text.begin(), text.end());
}

bool is_word_char(char32_t c) {
  const auto cp = static_cast<UChar32>(c);
  if (u_isalnum(cp)) return true;
  const auto type = u_charType(cp);
  return type == U_NON_SPACING_MARK || type == U_COMBINING_SPACING_MARK ||
         type == U_ENCLOSING_MARK;
}

bool is_space(char32_t c) { return u_isUWhiteSpace(static_cast<UChar32>(c)); }

namespace {

const icu::Normalizer2& nfd() {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* norm = icu::Normalizer2::getNFDInstance(status);
  if (U_FAILURE(status) || norm == nullptr) {
    throw Error("ICU NFD normalizer unavailable");
  }
  return *norm;
}

}  // namespace

Folded fold(std::u32string_view text, bool case_fold, bool strip_accents) {
  Folded out;
  out.text.reserve(text.size());
  out.origin.reserve(text.size());
  const icu::Normalizer2* norm = strip_accents ? &nfd() : nullptr;
  for (std::size_t i = 0; i < text.size(); ++i) {
    auto cp = static_cast<UChar32>(text[i]);
    if (case_fold) cp = u_foldCase(cp, U_FOLD_CASE_DEFAULT);
    if (norm == nullptr) {
      out.text.push_back(static_cast<char32_t>(cp));
      out.origin.push_back(i);
      continue;
    }
    icu::UnicodeString decomposed;
    UErrorCode status = U_ZERO_ERROR;
    norm->normalize(icu::UnicodeString(cp), decomposed, status);
    if (U_FAILURE(status)) decomposed = icu::UnicodeString(cp);
    for (int32_t k = 0; k < decomposed.length();) {
      const UChar32 piece = decomposed.char32At(k);
      k += U16_LENGTH(piece);
      if (u_charType(piece) == U_NON_SPACING_MARK) continue;
      out.text.push_back(static_cast<char32_t>(piece));
      out.origin.push_back(i);
    }
  }
  return out;
}

}  // namespace cliniflow::unicode
