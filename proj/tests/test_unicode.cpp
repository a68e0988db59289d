#include "doctest.h"

#include "cliniflow/core/unicode.hpp"
#include "cliniflow/errors.hpp"

using namespace cliniflow;

TEST_CASE("decode counts code points, not bytes") {
  const std::string s = "Né le 12 \xF0\x9F\x98\x80";
  CHECK(unicode::decode(s).size() == 10);
  CHECK(unicode::length(s) == 10);
  CHECK(unicode::encode(unicode::decode(s)) == s);
}

TEST_CASE("invalid UTF-8 reports the byte offset") {
  const std::string bad = std::string("abc") + "\xC3" + "(";
  try {
    unicode::decode(bad, "note.txt");
    FAIL("expected DecodeFailure");
  } catch (const DecodeFailure& e) {
    CHECK(e.byte_offset() == 3);
    CHECK(e.source() == "note.txt");
  }
  CHECK_THROWS_AS(unicode::decode("\xC0\xAF"), DecodeFailure);       // overlong
  CHECK_THROWS_AS(unicode::decode("\xED\xA0\x80"), DecodeFailure);   // surrogate
  CHECK_THROWS_AS(unicode::decode("ab\xE2\x82"), DecodeFailure);     // truncated
}

TEST_CASE("folding keeps an origin map") {
  const std::u32string text = U"Éthér é";
  const auto folded = unicode::fold(text, true, true);
  CHECK(folded.text == U"ether e");
  REQUIRE(folded.origin.size() == folded.text.size());
  CHECK(folded.origin[0] == 0);
  CHECK(folded.origin[6] == 6);

  const auto case_only = unicode::fold(U"ÉA", true, false);
  CHECK(case_only.text == U"éa");
}

TEST_CASE("word characters") {
  CHECK(unicode::is_word_char(U'é'));
  CHECK(unicode::is_word_char(U'7'));
  CHECK_FALSE(unicode::is_word_char(U' '));
  CHECK_FALSE(unicode::is_word_char(U'\''));
  CHECK(unicode::is_space(U'\n'));
}
