#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cliniflow/eval/evaluation.hpp"
#include "cliniflow/provenance/provenance.hpp"

// Library side of the command-line tool. Every command returns its exit
// status: 0 success, 1 partial failure, 2 configuration or usage error.
namespace cliniflow::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitPartial = 1;
inline constexpr int kExitConfig = 2;

enum class Format { brat, doccano, json };

// Throws ConfigError.
Format parse_format(const std::string& name);
std::string extension(Format f);  // ".ann", ".jsonl", ".json"

// ---------------------------------------------------------------------- run

struct RunConfig {
  std::filesystem::path pipeline_path;
  std::filesystem::path input_dir;
  std::filesystem::path output_dir;
  Format output_format = Format::brat;
  provenance::Verbosity prov_level = provenance::Verbosity::steps;
  std::optional<std::filesystem::path> prov_out;
  std::size_t workers = 1;
};

struct DocumentFailure {
  std::string source;
  std::string message;
};

struct RunReport {
  std::vector<std::string> succeeded;  // sources, in input order
  std::vector<DocumentFailure> failures;
  provenance::ProvGraph graph;          // merged over successful documents
  int exit_code() const { return failures.empty() ? kExitOk : kExitPartial; }
};

// One output file per document and output key: <output_dir>/<stem><ext> for
// a single pipeline output, <output_dir>/<key>/<stem><ext> otherwise. A
// document that fails produces no file and does not stop the others.
// Throws ConfigError (bad pipeline, flags or directories).
RunReport run_corpus(const RunConfig& config);

int cmd_run(const RunConfig& config, std::ostream& out, std::ostream& err);

// ------------------------------------------------------------------ convert

// Directory to directory. brat: <stem>.txt + <stem>.ann pairs; json:
// <stem>.json; doccano: <stem>.jsonl with one record per line (records after
// the first in a file get the stem <stem>_<line>). Throws ConfigError,
// IoFailure or the converters' errors, prefixed with the file name.
void convert_corpus(Format in_format, Format out_format, const std::filesystem::path& in_path,
                    const std::filesystem::path& out_path);

int cmd_convert(const std::string& in_format, const std::string& out_format,
                const std::filesystem::path& in_path, const std::filesystem::path& out_path,
                std::ostream& out, std::ostream& err);

// --------------------------------------------------------------------- eval

struct EvalConfig {
  std::vector<std::filesystem::path> pred_dirs;
  std::filesystem::path ref_dir;  // <stem>.txt with <stem>.ann
  eval::MatchSpec match;
  std::optional<std::filesystem::path> json_out;
};

struct EvalRun {
  std::string name;
  eval::Metrics metrics;
};

struct EvalReport {
  std::vector<EvalRun> runs;
  std::optional<eval::Comparison> comparison;  // first two runs
  std::string text;
  nlohmann::ordered_json json;
};

// Counts are summed over documents before scoring. A prediction directory
// with no .ann file at all counts as predicting nothing; otherwise a stem
// present on one side only throws MissingCounterpart.
EvalReport evaluate_dirs(const EvalConfig& config);

int cmd_eval(const EvalConfig& config, std::ostream& out, std::ostream& err);

// --------------------------------------------------------------- prov export

// Reads PROV-JSON and writes it as `format` ("dot" or "prov-json").
int cmd_prov_export(const std::filesystem::path& in, const std::string& format,
                    const std::filesystem::path& out_path, std::ostream& out, std::ostream& err);

}  // namespace cliniflow::cli
