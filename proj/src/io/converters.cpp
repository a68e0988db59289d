#include "cliniflow/io/converters.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

#include "cliniflow/core/unicode.hpp"
#include "cliniflow/errors.hpp"

namespace cliniflow::io {

namespace fs = std::filesystem;
namespace sp = cliniflow::spans;
using json = nlohmann::ordered_json;

std::string read_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoFailure("cannot read " + file.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const fs::path& file, std::string_view content) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoFailure("cannot write " + file.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoFailure("write failed for " + file.string());
}

Document load_text_document(const fs::path& file) {
  std::string text = read_file(file);
  unicode::decode(text, file.filename().string());
  return Document(std::move(text), {{"source", file.filename().string()}});
}

std::vector<Document> load_text_documents(const fs::path& path) {
  std::error_code ec;
  if (fs::is_regular_file(path, ec)) return {load_text_document(path)};
  if (!fs::is_directory(path, ec)) throw IoFailure("not a file or directory: " + path.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(path)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Document> docs;
  docs.reserve(files.size());
  for (const auto& f : files) docs.push_back(load_text_document(f));
  return docs;
}

// ------------------------------------------------------------------- brat

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.push_back(s.substr(start));
      return parts;
    }
    parts.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

bool parse_size(std::string_view s, std::size_t& out) {
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool valid_id(std::string_view id, char sigil) {
  std::size_t n = 0;
  return id.size() > 1 && id[0] == sigil && parse_size(id.substr(1), n);
}

std::string join_slices(const std::u32string& text, const std::vector<sp::OriginalSpan>& spans) {
  std::u32string out;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    if (i > 0) out.push_back(U' ');
    out.append(text, spans[i].start, spans[i].length());
  }
  return unicode::encode(out);
}

// Fragments joined by one inserted space, mirroring the surface convention.
sp::SpanChain fragment_chain(const std::vector<sp::OriginalSpan>& fragments) {
  sp::SpanChain chain;
  for (std::size_t i = 0; i < fragments.size(); ++i) {
    if (i > 0) chain.push_back(sp::ModifiedSpan{1, {}});
    chain.push_back(fragments[i]);
  }
  return chain;
}

}  // namespace

BratDocument parse_brat(std::string_view ann_text, std::string_view doc_text) {
  const std::u32string text = unicode::decode(doc_text, "brat text");
  BratDocument result;
  std::vector<Entity> entities;
  std::vector<Relation> relations;
  std::map<std::string, std::size_t, std::less<>> by_tid;

  const auto lines = split(ann_text, '\n');
  for (std::size_t n = 0; n < lines.size(); ++n) {
    const std::size_t line_no = n + 1;
    std::string_view line = lines[n];
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const auto fields = split(line, '\t');
    const char sigil = line[0];
    auto fail = [line_no](const std::string& why) { throw MalformedLine(line_no, why); };

    if (sigil == 'T') {
      if (fields.size() != 3) fail("entity line needs 3 tab-separated fields");
      if (!valid_id(fields[0], 'T')) fail("bad entity id '" + std::string(fields[0]) + "'");
      const std::size_t space = fields[1].find(' ');
      if (space == std::string_view::npos || space == 0) fail("entity line lacks label or offsets");
      const std::string label(fields[1].substr(0, space));
      std::vector<sp::OriginalSpan> fragments;
      for (std::string_view frag : split(fields[1].substr(space + 1), ';')) {
        const auto bounds = split(frag, ' ');
        sp::OriginalSpan s;
        if (bounds.size() != 2 || !parse_size(bounds[0], s.start) || !parse_size(bounds[1], s.end)) {
          fail("bad fragment '" + std::string(frag) + "'");
        }
        if (s.start >= s.end) fail("empty or inverted fragment");
        if (!fragments.empty() && s.start < fragments.back().end) fail("fragments out of order");
        if (s.end > text.size()) fail("fragment beyond document length");
        fragments.push_back(s);
      }
      const std::string expected = join_slices(text, fragments);
      if (expected != fields[2]) {
        throw SurfaceMismatch("line " + std::to_string(line_no) + ": surface '" +
                              std::string(fields[2]) + "' does not match document text '" +
                              expected + "'");
      }
      if (by_tid.contains(fields[0])) fail("duplicate id " + std::string(fields[0]));
      by_tid.emplace(std::string(fields[0]), entities.size());
      entities.push_back(make_entity(label, expected, fragment_chain(fragments)));
    } else if (sigil == 'A' || sigil == 'M') {
      if (fields.size() != 2) fail("attribute line needs 2 tab-separated fields");
      if (!valid_id(fields[0], sigil)) fail("bad attribute id '" + std::string(fields[0]) + "'");
      const auto parts = split(fields[1], ' ');
      if (parts.size() < 2 || parts.size() > 3 || parts[0].empty()) {
        fail("attribute line needs a label, a target and an optional value");
      }
      const auto target = by_tid.find(parts[1]);
      if (target == by_tid.end()) fail("attribute targets unknown entity " + std::string(parts[1]));
      Value value = true;
      if (parts.size() == 3) value = std::string(parts[2]);
      entities[target->second].attributes.push_back(make_attribute(std::string(parts[0]), value));
    } else if (sigil == 'R') {
      if (fields.size() < 2 || fields.size() > 3 || (fields.size() == 3 && !fields[2].empty())) {
        fail("relation line needs 2 tab-separated fields");
      }
      if (!valid_id(fields[0], 'R')) fail("bad relation id '" + std::string(fields[0]) + "'");
      const auto parts = split(fields[1], ' ');
      if (parts.size() != 3 || parts[0].empty()) fail("relation line needs a label and two args");
      std::string arg_ids[2];
      for (int k = 0; k < 2; ++k) {
        const std::string prefix = "Arg" + std::to_string(k + 1) + ":";
        if (parts[k + 1].substr(0, prefix.size()) != prefix) fail("expected " + prefix);
        const auto it = by_tid.find(parts[k + 1].substr(prefix.size()));
        if (it == by_tid.end()) fail("relation references unknown entity");
        arg_ids[k] = entities[it->second].id;
      }
      if (arg_ids[0] == arg_ids[1]) fail("relation links an entity to itself");
      relations.push_back(make_relation(std::string(parts[0]), arg_ids[0], arg_ids[1]));
    } else {
      ++result.skipped_lines;
    }
  }
  for (auto& e : entities) result.annotations.emplace_back(std::move(e));
  for (auto& r : relations) result.annotations.emplace_back(std::move(r));
  return result;
}

std::string emit_brat(const Document& doc, const std::vector<Annotation>& annotations) {
  const std::u32string text = unicode::decode(doc.text());
  std::ostringstream t_lines, a_lines, r_lines;
  std::map<std::string, std::string> tid_of;
  std::size_t t = 0, a = 0, r = 0;
  for (const Annotation& ann : annotations) {
    const Segment* seg = as_segment(ann);
    if (seg == nullptr) continue;
    const auto projected = sp::normalize_spans(seg->spans);
    if (projected.empty()) {
      throw EmptyProjection("annotation " + seg->id + " (" + seg->label +
                            ") does not project onto the raw text");
    }
    if (projected.back().end > text.size()) {
      throw OutOfBounds("annotation " + seg->id + " projects beyond the document");
    }
    const std::string tid = "T" + std::to_string(++t);
    tid_of.emplace(seg->id, tid);
    t_lines << tid << '\t' << seg->label << ' ';
    for (std::size_t i = 0; i < projected.size(); ++i) {
      if (i > 0) t_lines << ';';
      t_lines << projected[i].start << ' ' << projected[i].end;
    }
    t_lines << '\t' << join_slices(text, projected) << '\n';
    for (const Attribute& attr : seg->attributes) {
      if (std::holds_alternative<std::monostate>(attr.value)) continue;
      if (const auto* b = std::get_if<bool>(&attr.value); b != nullptr && !*b) continue;
      a_lines << 'A' << ++a << '\t' << attr.label << ' ' << tid;
      if (!std::holds_alternative<bool>(attr.value)) a_lines << ' ' << to_string(attr.value);
      a_lines << '\n';
    }
  }
  for (const Annotation& ann : annotations) {
    const auto* rel = std::get_if<Relation>(&ann);
    if (rel == nullptr) continue;
    const auto src = tid_of.find(rel->source_id);
    const auto dst = tid_of.find(rel->target_id);
    if (src == tid_of.end() || dst == tid_of.end()) {
      throw InvalidAnnotation("relation " + rel->id + " references an annotation not emitted");
    }
    r_lines << 'R' << ++r << '\t' << rel->label << " Arg1:" << src->second
            << " Arg2:" << dst->second << '\n';
  }
  return t_lines.str() + a_lines.str() + r_lines.str();
}

Document load_brat_document(const fs::path& txt_file, const fs::path& ann_file) {
  Document doc = load_text_document(txt_file);
  BratDocument parsed;
  try {
    parsed = parse_brat(read_file(ann_file), doc.text());
  } catch (const MalformedLine& e) {
    throw MalformedLine(e.line(), ann_file.filename().string() + ": " + e.what());
  } catch (const SurfaceMismatch& e) {
    throw SurfaceMismatch(ann_file.filename().string() + ": " + e.what());
  }
  for (auto& ann : parsed.annotations) doc.attach(std::move(ann));
  return doc;
}

// ---------------------------------------------------------------- doccano

namespace {

json parse_json(std::string_view text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw MalformedJson(std::string(what) + ": " + e.what());
  }
}

Value scalar_from_json(const json& j) {
  if (j.is_null()) return std::monostate{};
  if (j.is_boolean()) return j.get<bool>();
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number_float()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  throw MalformedJson("expected a scalar value, got " + j.dump());
}

json scalar_to_json(const Value& v) {
  struct Visitor {
    json operator()(std::monostate) const { return nullptr; }
    json operator()(bool b) const { return b; }
    json operator()(std::int64_t i) const { return i; }
    json operator()(double d) const { return d; }
    json operator()(const std::string& s) const { return s; }
  };
  return std::visit(Visitor{}, v);
}

}  // namespace

DoccanoRecord parse_doccano_jsonl(std::string_view line) {
  const json obj = parse_json(line, "doccano line");
  if (!obj.is_object() || !obj.contains("text") || !obj.at("text").is_string()) {
    throw MalformedJson("doccano line lacks a string \"text\"");
  }
  Metadata metadata;
  for (const auto& [key, value] : obj.items()) {
    if (key == "text" || key == "label") continue;
    if (value.is_primitive()) metadata[key] = scalar_from_json(value);
  }
  DoccanoRecord rec{Document(obj.at("text").get<std::string>(), std::move(metadata)), {}};
  const std::u32string text = unicode::decode(rec.document.text());
  if (!obj.contains("label")) return rec;
  const json& labels = obj.at("label");
  if (!labels.is_array()) throw MalformedJson("doccano \"label\" must be an array");
  for (const json& triple : labels) {
    if (!triple.is_array() || triple.size() != 3 || !triple[0].is_number_integer() ||
        !triple[1].is_number_integer() || !triple[2].is_string()) {
      throw MalformedJson("doccano label must be [start, end, \"label\"], got " + triple.dump());
    }
    const auto start = triple[0].get<std::int64_t>();
    const auto end = triple[1].get<std::int64_t>();
    if (start < 0 || end <= start || static_cast<std::size_t>(end) > text.size()) {
      throw OutOfBounds("doccano span [" + std::to_string(start) + ", " + std::to_string(end) +
                        ") outside text of length " + std::to_string(text.size()));
    }
    const sp::OriginalSpan s{static_cast<std::size_t>(start), static_cast<std::size_t>(end)};
    rec.entities.push_back(make_entity(triple[2].get<std::string>(),
                                       unicode::encode(text.substr(s.start, s.length())), {s}));
  }
  return rec;
}

DoccanoLine emit_doccano_jsonl(const Document& doc, const std::vector<Entity>& entities) {
  DoccanoLine out;
  json labels = json::array();
  for (const Entity& e : entities) {
    const auto projected = sp::normalize_spans(e.spans);
    if (projected.empty()) {
      throw EmptyProjection("entity " + e.id + " does not project onto the raw text");
    }
    if (projected.size() > 1) ++out.discontinuous_warnings;
    labels.push_back(json::array({projected.front().start, projected.front().end, e.label}));
  }
  json obj = {{"text", doc.text()}, {"label", std::move(labels)}};
  for (const auto& [key, value] : doc.metadata()) {
    if (key != "text" && key != "label") obj[key] = scalar_to_json(value);
  }
  out.line = obj.dump() + "\n";
  return out;
}

// ----------------------------------------------------------------- native

namespace {

json span_to_json(const sp::Span& span) {
  if (const auto* o = std::get_if<sp::OriginalSpan>(&span)) return {{"s", o->start}, {"e", o->end}};
  const auto& m = std::get<sp::ModifiedSpan>(span);
  json replaced = json::array();
  for (const auto& r : m.replaced) replaced.push_back({{"s", r.start}, {"e", r.end}});
  return {{"len", m.length}, {"replaced", std::move(replaced)}};
}

sp::OriginalSpan original_from_json(const json& j) {
  return {j.at("s").get<std::size_t>(), j.at("e").get<std::size_t>()};
}

sp::Span span_from_json(const json& j) {
  if (j.contains("len")) {
    sp::ModifiedSpan m{j.at("len").get<std::size_t>(), {}};
    for (const json& r : j.at("replaced")) m.replaced.push_back(original_from_json(r));
    return m;
  }
  return original_from_json(j);
}

json metadata_to_json(const Metadata& md) {
  json obj = json::object();
  for (const auto& [k, v] : md) obj[k] = scalar_to_json(v);
  return obj;
}

Metadata metadata_from_json(const json& j) {
  Metadata md;
  for (const auto& [k, v] : j.items()) md[k] = scalar_from_json(v);
  return md;
}

json annotation_to_json(const Annotation& ann) {
  const AnnotationBase& b = base_of(ann);
  json obj = {{"kind", kind_name(ann)}, {"id", b.id}, {"label", b.label}};
  json attrs = json::array();
  for (const Attribute& a : b.attributes) {
    attrs.push_back({{"id", a.id}, {"label", a.label}, {"value", scalar_to_json(a.value)}});
  }
  obj["attributes"] = std::move(attrs);
  obj["metadata"] = metadata_to_json(b.metadata);
  if (const Segment* seg = as_segment(ann)) {
    obj["text"] = seg->text;
    json chain = json::array();
    for (const auto& s : seg->spans) chain.push_back(span_to_json(s));
    obj["spans"] = std::move(chain);
  } else {
    const auto& rel = std::get<Relation>(ann);
    obj["source_id"] = rel.source_id;
    obj["target_id"] = rel.target_id;
  }
  return obj;
}

Annotation annotation_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  AnnotationBase b;
  b.id = j.at("id").get<std::string>();
  b.label = j.at("label").get<std::string>();
  for (const json& a : j.at("attributes")) {
    Attribute attr;
    attr.id = a.at("id").get<std::string>();
    attr.label = a.at("label").get<std::string>();
    attr.value = scalar_from_json(a.at("value"));
    b.attributes.push_back(std::move(attr));
  }
  b.metadata = metadata_from_json(j.at("metadata"));
  if (kind == "relation") {
    Relation r;
    static_cast<AnnotationBase&>(r) = std::move(b);
    r.source_id = j.at("source_id").get<std::string>();
    r.target_id = j.at("target_id").get<std::string>();
    return r;
  }
  if (kind != "segment" && kind != "entity") throw MalformedJson("unknown annotation kind " + kind);
  Segment seg;
  static_cast<AnnotationBase&>(seg) = std::move(b);
  seg.text = j.at("text").get<std::string>();
  for (const json& s : j.at("spans")) seg.spans.push_back(span_from_json(s));
  if (kind == "segment") return seg;
  Entity e;
  static_cast<Segment&>(e) = std::move(seg);
  return e;
}

}  // namespace

std::string serialize_document_json(const Document& doc) {
  json annotations = json::array();
  for (const Annotation& a : doc.annotations()) annotations.push_back(annotation_to_json(a));
  const json obj = {{"id", doc.id()},
                    {"text", doc.text()},
                    {"metadata", metadata_to_json(doc.metadata())},
                    {"annotations", std::move(annotations)}};
  return obj.dump(2) + "\n";
}

Document parse_document_json(std::string_view text) {
  const json obj = parse_json(text, "document JSON");
  if (!obj.is_object() || !obj.contains("text") || !obj.at("text").is_string()) {
    throw MalformedJson("document JSON lacks a string \"text\"");
  }
  try {
    Document doc(obj.at("text").get<std::string>(),
                 obj.contains("metadata") ? metadata_from_json(obj.at("metadata")) : Metadata{},
                 obj.contains("id") ? obj.at("id").get<std::string>() : new_id());
    if (obj.contains("annotations")) {
      for (const json& a : obj.at("annotations")) doc.attach(annotation_from_json(a));
    }
    return doc;
  } catch (const json::exception& e) {
    throw MalformedJson(std::string("document JSON: ") + e.what());
  }
}

}  // namespace cliniflow::io
