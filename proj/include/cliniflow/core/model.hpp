#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "cliniflow/core/ids.hpp"
#include "cliniflow/spans/span.hpp"

namespace cliniflow {

// Scalar carried by attributes and metadata. Structured values must be
// encoded as strings by whoever produces them.
using Value = std::variant<std::monostate, bool, std::int64_t, double, std::string>;
using Metadata = std::map<std::string, Value>;

std::string to_string(const Value& value);

struct Attribute {
  std::string id = new_id();
  std::string label;
  Value value;

  friend bool operator==(const Attribute&, const Attribute&) = default;
};

struct AnnotationBase {
  std::string id = new_id();
  std::string label;
  std::vector<Attribute> attributes;
  Metadata metadata;

  const Attribute* find_attribute(std::string_view attr_label) const;

  friend bool operator==(const AnnotationBase&, const AnnotationBase&) = default;
};

// Labeled piece of text. `text` is the segment's own (possibly transformed)
// text and `spans` maps each of its code points back to the raw document.
struct Segment : AnnotationBase {
  std::string text;
  spans::SpanChain spans;

  friend bool operator==(const Segment&, const Segment&) = default;
};

struct Entity : Segment {
  friend bool operator==(const Entity&, const Entity&) = default;
};

struct Relation : AnnotationBase {
  std::string source_id;
  std::string target_id;

  friend bool operator==(const Relation&, const Relation&) = default;
};

using Annotation = std::variant<Segment, Entity, Relation>;

const AnnotationBase& base_of(const Annotation& ann);
AnnotationBase& base_of(Annotation& ann);
const std::string& id_of(const Annotation& ann);
const std::string& label_of(const Annotation& ann);
std::string_view kind_name(const Annotation& ann);

// Segment view of a Segment or Entity; nullptr for relations.
const Segment* as_segment(const Annotation& ann);

Segment make_segment(std::string label, std::string text, spans::SpanChain chain);
Entity make_entity(std::string label, std::string text, spans::SpanChain chain);
Entity make_entity(std::string label, spans::SpannedUtf8 spanned);
Attribute make_attribute(std::string label, Value value);
Relation make_relation(std::string label, std::string source_id, std::string target_id);

// Raw text plus the annotations attached to it. The text cannot change once
// the document exists; annotations keep their attachment order.
class Document {
 public:
  // Throws DecodeFailure when `text` is not valid UTF-8.
  explicit Document(std::string text, Metadata metadata = {}, std::string id = new_id());

  const std::string& id() const { return id_; }
  const std::string& text() const { return text_; }
  // Length of the text in code points.
  std::size_t length() const { return length_; }

  const Metadata& metadata() const { return metadata_; }
  Metadata& metadata() { return metadata_; }

  const std::vector<Annotation>& annotations() const { return annotations_; }

  // Throws OutOfBounds, DuplicateId or InvalidAnnotation.
  void attach(Annotation ann);

  const Annotation* find(const std::string& annotation_id) const;
  std::vector<Annotation> get_annotations(std::optional<std::string_view> label = std::nullopt) const;

  // Whole-text segment with the identity chain, the entry point of every
  // text transformation.
  Segment raw_segment() const;

  friend bool operator==(const Document& a, const Document& b) {
    return a.id_ == b.id_ && a.text_ == b.text_ && a.metadata_ == b.metadata_ &&
           a.annotations_ == b.annotations_;
  }

 private:
  std::string id_;
  std::string text_;
  std::size_t length_ = 0;
  Metadata metadata_;
  std::vector<Annotation> annotations_;
  std::unordered_map<std::string, std::size_t> index_;
};

Document create_document(std::string text, Metadata metadata = {});
Document attach_annotation(Document doc, Annotation ann);
std::vector<Annotation> get_annotations(const Document& doc,
                                        std::optional<std::string_view> label = std::nullopt);

// Raw document text at the given code-point spans, concatenated.
std::string slice_original(const Document& doc, const std::vector<spans::OriginalSpan>& at);

}  // namespace cliniflow
