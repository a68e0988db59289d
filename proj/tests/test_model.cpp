#include "doctest.h"

#include "cliniflow/core/model.hpp"
#include "cliniflow/errors.hpp"

using namespace cliniflow;
namespace sp = cliniflow::spans;

TEST_CASE("create_document") {
  const Document doc = create_document("Patient sous aspirine.");
  CHECK(doc.text() == "Patient sous aspirine.");
  CHECK(doc.length() == 22);
  CHECK(doc.annotations().empty());
  CHECK(is_uuid(doc.id()));

  const Document empty = create_document("");
  CHECK(empty.length() == 0);
  CHECK(empty.raw_segment().spans.empty());

  const Document meta = create_document("abc", {{"source", std::string("ward_A")}});
  CHECK(std::get<std::string>(meta.metadata().at("source")) == "ward_A");
  CHECK(create_document("x").id() != create_document("x").id());
}

TEST_CASE("attach and retrieve") {
  Document doc = create_document("Patient sous aspirine.");
  Segment seg = make_segment("word", "Patient", {sp::OriginalSpan{0, 7}});
  const std::string id = seg.id;
  doc = attach_annotation(doc, seg);
  REQUIRE(doc.find(id) != nullptr);
  CHECK(std::get<Segment>(*doc.find(id)) == seg);

  SUBCASE("out of bounds") {
    Segment far = make_segment("x", std::string(30, 'a'), {sp::OriginalSpan{0, 30}});
    CHECK_THROWS_AS(doc.attach(far), OutOfBounds);
  }
  SUBCASE("duplicate id") {
    CHECK_THROWS_AS(doc.attach(seg), DuplicateId);
  }
  SUBCASE("empty label") {
    Segment bad = make_segment("", "P", {sp::OriginalSpan{0, 1}});
    CHECK_THROWS_AS(doc.attach(bad), InvalidAnnotation);
  }
  SUBCASE("chain length must match text") {
    Segment bad = make_segment("x", "Pat", {sp::OriginalSpan{0, 7}});
    CHECK_THROWS_AS(doc.attach(bad), InvalidAnnotation);
  }
  SUBCASE("duplicate attribute ids") {
    Entity e = make_entity("Drug", "sous", {sp::OriginalSpan{8, 12}});
    Attribute a = make_attribute("x", true);
    e.attributes = {a, a};
    CHECK_THROWS_AS(doc.attach(e), InvalidAnnotation);
  }
  SUBCASE("relations resolve inside the document") {
    Entity e = make_entity("Drug", "aspirine", {sp::OriginalSpan{13, 21}});
    doc.attach(e);
    CHECK_NOTHROW(doc.attach(make_relation("rel", id, e.id)));
    CHECK_THROWS_AS(doc.attach(make_relation("rel", id, id)), InvalidAnnotation);
    CHECK_THROWS_AS(doc.attach(make_relation("rel", id, "nope")), InvalidAnnotation);
  }
}

TEST_CASE("get_annotations filters by label in attachment order") {
  Document doc = create_document("Pas d'aspirine ni de doliprane.");
  doc.attach(make_segment("sentence", "Pas d'aspirine ni de doliprane.",
                          {sp::OriginalSpan{0, 31}}));
  Entity a = make_entity("drug", "aspirine", {sp::OriginalSpan{6, 14}});
  Entity b = make_entity("drug", "doliprane", {sp::OriginalSpan{21, 30}});
  doc.attach(a);
  doc.attach(b);
  const auto drugs = get_annotations(doc, "drug");
  REQUIRE(drugs.size() == 2);
  CHECK(id_of(drugs[0]) == a.id);
  CHECK(id_of(drugs[1]) == b.id);
  CHECK(get_annotations(doc).size() == 3);
  CHECK(get_annotations(doc, "dose").empty());
}

TEST_CASE("entity with a replaced span projects inside the document") {
  Document doc = create_document("Né le 12/03/1980.");
  Entity e = make_entity("X", "[DATE]", {sp::ModifiedSpan{6, {sp::OriginalSpan{6, 16}}}});
  CHECK_NOTHROW(doc.attach(e));
  CHECK(slice_original(doc, sp::normalize_spans(e.spans)) == "12/03/1980");
}

TEST_CASE("documents reject invalid UTF-8") {
  CHECK_THROWS_AS(create_document("\xff"), DecodeFailure);
}
