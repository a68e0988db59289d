#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "cliniflow/core/model.hpp"

namespace cliniflow::io {

// ---------------------------------------------------------------- raw text

// One document per .txt file (a single file, or every .txt in a directory,
// sorted by name). The file name is kept in metadata under "source".
// Throws IoFailure or DecodeFailure.
std::vector<Document> load_text_documents(const std::filesystem::path& path);
Document load_text_document(const std::filesystem::path& file);

std::string read_file(const std::filesystem::path& file);
void write_file(const std::filesystem::path& file, std::string_view content);

// -------------------------------------------------------------------- brat
//
//   T<i>\t<label> <start> <end>[;<start> <end>]*\t<surface>
//   A<j>\t<label> T<i>[ <value>]
//   R<k>\t<label> Arg1:T<i> Arg2:T<j>

struct BratDocument {
  std::vector<Annotation> annotations;  // entities in file order, then relations
  std::size_t skipped_lines = 0;        // unsupported sigils (N, E, #, ...)
};

// Offsets are code points into `doc_text`. Discontinuous entities carry the
// single space joining their fragments as an inserted character, so their
// chain projects exactly onto the fragments. Throws MalformedLine or
// SurfaceMismatch, both naming the 1-based line.
BratDocument parse_brat(std::string_view ann_text, std::string_view doc_text);

// Entities numbered T1..Tn in the given order, attributes A1..Am, relations
// R1..Rk. Boolean attributes are emitted bare when true and omitted when
// false; null values are omitted. Throws EmptyProjection when a segment has
// nothing to project onto the raw text.
std::string emit_brat(const Document& doc, const std::vector<Annotation>& annotations);

// Document from a .txt file with the annotations of its sibling .ann file
// attached.
Document load_brat_document(const std::filesystem::path& txt_file,
                            const std::filesystem::path& ann_file);

// ----------------------------------------------------------------- doccano

struct DoccanoRecord {
  Document document;
  std::vector<Entity> entities;
};

// {"text": ..., "label": [[start, end, "label"], ...]}; other scalar keys go
// to metadata. Throws MalformedJson or OutOfBounds.
DoccanoRecord parse_doccano_jsonl(std::string_view line);

struct DoccanoLine {
  std::string line;  // newline-terminated
  // Entities that needed more than one fragment; only their first merged
  // fragment is written.
  std::size_t discontinuous_warnings = 0;
};

DoccanoLine emit_doccano_jsonl(const Document& doc, const std::vector<Entity>& entities);

// ------------------------------------------------------------------ native

// Lossless, including ids and span chains.
std::string serialize_document_json(const Document& doc);
Document parse_document_json(std::string_view text);

}  // namespace cliniflow::io
