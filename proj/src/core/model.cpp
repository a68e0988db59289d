#include "cliniflow/core/model.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "cliniflow/core/unicode.hpp"
#include "cliniflow/errors.hpp"

namespace cliniflow {

std::string to_string(const Value& value) {
  struct Visitor {
    std::string operator()(std::monostate) const { return "null"; }
    std::string operator()(bool b) const { return b ? "true" : "false"; }
    std::string operator()(std::int64_t i) const { return std::to_string(i); }
    std::string operator()(double d) const {
      std::ostringstream os;
      os << d;
      return os.str();
    }
    std::string operator()(const std::string& s) const { return s; }
  };
  return std::visit(Visitor{}, value);
}

const Attribute* AnnotationBase::find_attribute(std::string_view attr_label) const {
  for (const Attribute& a : attributes) {
    if (a.label == attr_label) return &a;
  }
  return nullptr;
}

const AnnotationBase& base_of(const Annotation& ann) {
  return std::visit([](const auto& a) -> const AnnotationBase& { return a; }, ann);
}

AnnotationBase& base_of(Annotation& ann) {
  return std::visit([](auto& a) -> AnnotationBase& { return a; }, ann);
}

const std::string& id_of(const Annotation& ann) { return base_of(ann).id; }
const std::string& label_of(const Annotation& ann) { return base_of(ann).label; }

std::string_view kind_name(const Annotation& ann) {
  switch (ann.index()) {
    case 0: return "segment";
    case 1: return "entity";
    default: return "relation";
  }
}

const Segment* as_segment(const Annotation& ann) {
  if (const auto* seg = std::get_if<Segment>(&ann)) return seg;
  if (const auto* ent = std::get_if<Entity>(&ann)) return ent;
  return nullptr;
}

Segment make_segment(std::string label, std::string text, spans::SpanChain chain) {
  Segment s;
  s.label = std::move(label);
  s.text = std::move(text);
  s.spans = std::move(chain);
  return s;
}

Entity make_entity(std::string label, std::string text, spans::SpanChain chain) {
  Entity e;
  e.label = std::move(label);
  e.text = std::move(text);
  e.spans = std::move(chain);
  return e;
}

Entity make_entity(std::string label, spans::SpannedUtf8 spanned) {
  return make_entity(std::move(label), std::move(spanned.text), std::move(spanned.spans));
}

Attribute make_attribute(std::string label, Value value) {
  Attribute a;
  a.label = std::move(label);
  a.value = std::move(value);
  return a;
}

Relation make_relation(std::string label, std::string source_id, std::string target_id) {
  Relation r;
  r.label = std::move(label);
  r.source_id = std::move(source_id);
  r.target_id = std::move(target_id);
  return r;
}

Document::Document(std::string text, Metadata metadata, std::string id)
    : id_(std::move(id)), text_(std::move(text)), metadata_(std::move(metadata)) {
  length_ = unicode::decode(text_, "document " + id_).size();
}

void Document::attach(Annotation ann) {
  const AnnotationBase& b = base_of(ann);
  if (b.label.empty()) throw InvalidAnnotation("annotation " + b.id + " has an empty label");
  if (index_.contains(b.id)) throw DuplicateId("annotation id already attached: " + b.id);
  std::set<std::string> attr_ids;
  for (const Attribute& a : b.attributes) {
    if (a.label.empty()) throw InvalidAnnotation("attribute " + a.id + " has an empty label");
    if (!attr_ids.insert(a.id).second) {
      throw InvalidAnnotation("duplicate attribute id " + a.id + " on " + b.id);
    }
  }
  if (const Segment* seg = as_segment(ann)) {
    const std::size_t text_len = unicode::length(seg->text);
    if (spans::span_length(seg->spans) != text_len) {
      throw InvalidAnnotation("segment " + b.id + ": span chain length differs from text length");
    }
    for (const auto& s : spans::normalize_spans(seg->spans)) {
      if (s.end > length_) {
        throw OutOfBounds("segment " + b.id + " spans [" + std::to_string(s.start) + ", " +
                          std::to_string(s.end) + ") beyond document length " +
                          std::to_string(length_));
      }
    }
  } else {
    const auto& rel = std::get<Relation>(ann);
    if (rel.source_id == rel.target_id) {
      throw InvalidAnnotation("relation " + b.id + " links an annotation to itself");
    }
    if (!index_.contains(rel.source_id) || !index_.contains(rel.target_id)) {
      throw InvalidAnnotation("relation " + b.id + " references an unknown annotation");
    }
  }
  index_.emplace(b.id, annotations_.size());
  annotations_.push_back(std::move(ann));
}

const Annotation* Document::find(const std::string& annotation_id) const {
  const auto it = index_.find(annotation_id);
  return it == index_.end() ? nullptr : &annotations_[it->second];
}

std::vector<Annotation> Document::get_annotations(std::optional<std::string_view> label) const {
  std::vector<Annotation> out;
  for (const Annotation& a : annotations_) {
    if (!label || label_of(a) == *label) out.push_back(a);
  }
  return out;
}

Segment Document::raw_segment() const {
  Segment s = make_segment("raw", text_, spans::identity_chain(length_));
  return s;
}

Document create_document(std::string text, Metadata metadata) {
  return Document(std::move(text), std::move(metadata));
}

Document attach_annotation(Document doc, Annotation ann) {
  doc.attach(std::move(ann));
  return doc;
}

std::vector<Annotation> get_annotations(const Document& doc, std::optional<std::string_view> label) {
  return doc.get_annotations(label);
}

std::string slice_original(const Document& doc, const std::vector<spans::OriginalSpan>& at) {
  const std::u32string text = unicode::decode(doc.text());
  std::u32string out;
  for (const auto& s : at) {
    if (s.end > text.size() || s.start > s.end) {
      throw OutOfBounds("span beyond document length");
    }
    out.append(text, s.start, s.end - s.start);
  }
  return unicode::encode(out);
}

}  // namespace cliniflow
