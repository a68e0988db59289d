#include "cliniflow/cli/commands.hpp"

#include <algorithm>
#include <atomic>
#include <map>
#include <ostream>
#include <set>
#include <thread>

#include "cliniflow/errors.hpp"
#include "cliniflow/io/converters.hpp"
#include "cliniflow/pipeline/pipeline.hpp"

namespace cliniflow::cli {

namespace fs = std::filesystem;
namespace pl = cliniflow::pipeline;
namespace prov = cliniflow::provenance;

Format parse_format(const std::string& name) {
  if (name == "brat") return Format::brat;
  if (name == "doccano") return Format::doccano;
  if (name == "json") return Format::json;
  throw ConfigError("unknown format '" + name + "' (expected brat, doccano or json)");
}

std::string extension(Format f) {
  switch (f) {
    case Format::brat:
      return ".ann";
    case Format::doccano:
      return ".jsonl";
    case Format::json:
      return ".json";
  }
  return "";
}

namespace {

std::vector<fs::path> files_with_extension(const fs::path& dir, const std::string& ext) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw ConfigError("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ext) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoFailure("cannot create directory " + dir.string() + ": " + ec.message());
}

// Annotations carried by a pipeline output slot, in slot order.
std::vector<Annotation> slot_annotations(const pl::Slot& slot) {
  std::vector<Annotation> out;
  for (const pl::Datum& d : slot) {
    if (const auto* doc = std::get_if<Document>(&d)) {
      out.insert(out.end(), doc->annotations().begin(), doc->annotations().end());
    } else {
      out.push_back(std::get<Annotation>(d));
    }
  }
  return out;
}

std::vector<Entity> entities_of(const std::vector<Annotation>& anns) {
  std::vector<Entity> out;
  for (const Annotation& a : anns) {
    if (const auto* e = std::get_if<Entity>(&a)) {
      out.push_back(*e);
    } else if (const auto* s = std::get_if<Segment>(&a)) {
      Entity e;
      static_cast<Segment&>(e) = *s;
      out.push_back(std::move(e));
    }
  }
  return out;
}

struct Rendered {
  std::string content;
  std::size_t warnings = 0;
};

Rendered render(Format format, const Document& doc, const std::vector<Annotation>& anns) {
  switch (format) {
    case Format::brat:
      return {io::emit_brat(doc, anns)};
    case Format::doccano: {
      const auto line = io::emit_doccano_jsonl(doc, entities_of(anns));
      return {line.line, line.discontinuous_warnings};
    }
    case Format::json: {
      Document copy = doc;
      for (const Annotation& a : anns) {
        if (copy.find(id_of(a)) == nullptr) copy.attach(a);
      }
      return {io::serialize_document_json(copy)};
    }
  }
  return {};
}

struct DocResult {
  bool ok = false;
  std::string error;
  std::vector<std::pair<fs::path, std::string>> files;
  std::optional<prov::Tracer> tracer;
};

}  // namespace

// ---------------------------------------------------------------------- run

RunReport run_corpus(const RunConfig& config) {
  if (config.workers == 0) throw ConfigError("workers must be at least 1");
  std::error_code ec;
  if (!fs::is_directory(config.input_dir, ec)) {
    throw ConfigError("input directory not found: " + config.input_dir.string());
  }
  if (fs::exists(config.output_dir, ec) && fs::equivalent(config.input_dir, config.output_dir, ec)) {
    throw ConfigError("input and output directories must differ");
  }

  pl::PipelineSpec spec;
  try {
    spec = pl::load_pipeline_spec(config.pipeline_path);
  } catch (const IoFailure& e) {
    throw ConfigError(e.what());
  }
  if (spec.inputs.size() != 1) {
    throw ConfigError("pipeline '" + spec.name + "' must take exactly one input (the documents)");
  }
  if (spec.outputs.empty()) throw ConfigError("pipeline '" + spec.name + "' has no outputs");
  const fs::path base_dir = config.pipeline_path.parent_path();
  const pl::Registry registry = pl::builtin_registry();
  try {
    pl::Pipeline check(spec, registry, base_dir);
  } catch (const PipelineInvalid& e) {
    throw ConfigError(e.what());
  }

  const std::vector<fs::path> files = files_with_extension(config.input_dir, ".txt");
  std::vector<DocResult> results(files.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    const pl::Pipeline pipeline(spec, registry, base_dir);
    for (std::size_t i = next++; i < files.size(); i = next++) {
      DocResult& r = results[i];
      try {
        const Document doc = io::load_text_document(files[i]);
        prov::Tracer tracer(config.prov_level);
        const pl::DataMap out = pipeline.run({{spec.inputs[0], {pl::Datum(doc)}}}, &tracer);
        const std::string stem = files[i].stem().string();
        for (const auto& key : spec.outputs) {
          const fs::path dir = spec.outputs.size() == 1 ? config.output_dir : config.output_dir / key;
          Rendered rendered = render(config.output_format, doc, slot_annotations(out.at(key)));
          r.files.emplace_back(dir / (stem + extension(config.output_format)),
                               std::move(rendered.content));
        }
        r.tracer.emplace(tracer);
        r.ok = true;
      } catch (const std::exception& e) {
        r.error = e.what();
      }
    }
  };
  const std::size_t n_threads = std::min(config.workers, std::max<std::size_t>(files.size(), 1));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }

  RunReport report;
  ensure_directory(config.output_dir);
  if (spec.outputs.size() > 1) {
    for (const auto& key : spec.outputs) ensure_directory(config.output_dir / key);
  }
  prov::Tracer merged(config.prov_level);
  for (std::size_t i = 0; i < files.size(); ++i) {
    const std::string source = files[i].filename().string();
    if (!results[i].ok) {
      report.failures.push_back({source, results[i].error});
      continue;
    }
    for (const auto& [path, content] : results[i].files) io::write_file(path, content);
    merged.merge(*results[i].tracer);
    report.succeeded.push_back(source);
  }
  report.graph = prov::build_graph(merged);
  if (config.prov_out) {
    const auto format = config.prov_out->extension() == ".dot" ? prov::ExportFormat::dot
                                                               : prov::ExportFormat::prov_json;
    io::write_file(*config.prov_out, prov::export_prov(report.graph, format));
  }
  return report;
}

int cmd_run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    const RunReport report = run_corpus(config);
    for (const auto& f : report.failures) err << "FAILED " << f.source << ": " << f.message << '\n';
    out << "processed " << report.succeeded.size() + report.failures.size() << " documents, "
        << report.failures.size() << " failed\n";
    return report.exit_code();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}

// ------------------------------------------------------------------ convert

void convert_corpus(Format in_format, Format out_format, const fs::path& in_path,
                    const fs::path& out_path) {
  struct Item {
    std::string stem;
    Document doc;
  };
  std::vector<Item> items;
  auto named = [](const fs::path& file, auto&& fn) {
    try {
      return fn();
    } catch (const Error& e) {
      throw IoFailure(file.filename().string() + ": " + e.what());
    }
  };

  switch (in_format) {
    case Format::brat:
      for (const fs::path& txt : files_with_extension(in_path, ".txt")) {
        fs::path ann = txt;
        ann.replace_extension(".ann");
        Document doc = fs::exists(ann) ? io::load_brat_document(txt, ann) : io::load_text_document(txt);
        items.push_back({txt.stem().string(), std::move(doc)});
      }
      break;
    case Format::json:
      for (const fs::path& file : files_with_extension(in_path, ".json")) {
        items.push_back({file.stem().string(),
                         named(file, [&] { return io::parse_document_json(io::read_file(file)); })});
      }
      break;
    case Format::doccano:
      for (const fs::path& file : files_with_extension(in_path, ".jsonl")) {
        const std::string content = io::read_file(file);
        std::size_t line_no = 0, pos = 0;
        while (pos < content.size()) {
          std::size_t end = content.find('\n', pos);
          if (end == std::string::npos) end = content.size();
          const std::string_view line(content.data() + pos, end - pos);
          pos = end + 1;
          ++line_no;
          if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
          io::DoccanoRecord rec = named(file, [&] { return io::parse_doccano_jsonl(line); });
          for (Entity& e : rec.entities) rec.document.attach(std::move(e));
          const std::string stem =
              file.stem().string() + (line_no == 1 ? "" : "_" + std::to_string(line_no));
          items.push_back({stem, std::move(rec.document)});
        }
      }
      break;
  }

  ensure_directory(out_path);
  for (const Item& item : items) {
    const Rendered r = render(out_format, item.doc, item.doc.annotations());
    io::write_file(out_path / (item.stem + extension(out_format)), r.content);
    if (out_format == Format::brat) io::write_file(out_path / (item.stem + ".txt"), item.doc.text());
  }
}

int cmd_convert(const std::string& in_format, const std::string& out_format,
                const fs::path& in_path, const fs::path& out_path, std::ostream& out,
                std::ostream& err) {
  try {
    const Format in = parse_format(in_format);
    const Format to = parse_format(out_format);
    convert_corpus(in, to, in_path, out_path);
    out << "converted " << in_path.string() << " -> " << out_path.string() << '\n';
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitPartial;
  }
}

// --------------------------------------------------------------------- eval

namespace {

std::vector<Entity> brat_entities(const fs::path& ann, const std::string& text) {
  try {
    std::vector<Entity> out;
    for (Annotation& a : io::parse_brat(io::read_file(ann), text).annotations) {
      if (auto* e = std::get_if<Entity>(&a)) out.push_back(std::move(*e));
    }
    return out;
  } catch (const Error& e) {
    throw IoFailure(ann.filename().string() + ": " + e.what());
  }
}

std::set<std::string> stems(const std::vector<fs::path>& files) {
  std::set<std::string> out;
  for (const auto& f : files) out.insert(f.stem().string());
  return out;
}

}  // namespace

EvalReport evaluate_dirs(const EvalConfig& config) {
  if (config.pred_dirs.empty()) throw ConfigError("at least one prediction directory is required");
  const auto ref_files = files_with_extension(config.ref_dir, ".ann");
  const auto ref_stems = stems(ref_files);

  std::map<std::string, std::string> texts;
  std::map<std::string, std::vector<Entity>> refs;
  for (const auto& stem : ref_stems) {
    const fs::path txt = config.ref_dir / (stem + ".txt");
    if (!fs::exists(txt)) throw MissingCounterpart("reference " + stem + ".ann has no " + stem + ".txt");
    texts[stem] = io::load_text_document(txt).text();
    refs[stem] = brat_entities(config.ref_dir / (stem + ".ann"), texts[stem]);
  }

  EvalReport report;
  for (const fs::path& dir : config.pred_dirs) {
    const auto pred_stems = stems(files_with_extension(dir, ".ann"));
    if (!pred_stems.empty()) {
      for (const auto& s : pred_stems) {
        if (!ref_stems.contains(s)) {
          throw MissingCounterpart("prediction " + s + ".ann has no reference in " +
                                   config.ref_dir.string());
        }
      }
      for (const auto& s : ref_stems) {
        if (!pred_stems.contains(s)) {
          throw MissingCounterpart("reference " + s + ".ann has no prediction in " + dir.string());
        }
      }
    }
    eval::Metrics total;
    for (const auto& stem : ref_stems) {
      std::vector<Entity> pred;
      if (pred_stems.contains(stem)) pred = brat_entities(dir / (stem + ".ann"), texts[stem]);
      total += eval::evaluate(pred, refs[stem], config.match);
    }
    std::string name = dir.filename().string();
    if (name.empty()) name = dir.parent_path().filename().string();
    report.runs.push_back({name, total});
  }

  report.json = {{"mode", config.match.mode == eval::MatchMode::exact ? "exact" : "overlap"},
                 {"iou_threshold", config.match.iou_threshold},
                 {"label_sensitive", config.match.label_sensitive},
                 {"documents", ref_stems.size()},
                 {"runs", nlohmann::ordered_json::array()}};
  for (const EvalRun& run : report.runs) {
    report.text += eval::format_metrics(run.metrics, "== " + run.name) + "\n";
    report.json["runs"].push_back({{"name", run.name}, {"metrics", eval::to_json(run.metrics)}});
  }
  if (report.runs.size() >= 2) {
    report.comparison =
        eval::compare_runs(report.runs[0].metrics, report.runs[1].metrics, report.runs[0].name,
                           report.runs[1].name);
    report.text += "== comparison\n" + report.comparison->table;
    report.json["comparison"] = {{"a", report.runs[0].name},
                                 {"b", report.runs[1].name},
                                 {"winner", report.comparison->winner}};
  }
  if (config.json_out) io::write_file(*config.json_out, report.json.dump(2) + "\n");
  return report;
}

int cmd_eval(const EvalConfig& config, std::ostream& out, std::ostream& err) {
  try {
    out << evaluate_dirs(config).text;
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitPartial;
  }
}

// --------------------------------------------------------------- prov export

int cmd_prov_export(const fs::path& in, const std::string& format, const fs::path& out_path,
                    std::ostream& out, std::ostream& err) {
  try {
    prov::ExportFormat f;
    if (format == "dot") {
      f = prov::ExportFormat::dot;
    } else if (format == "prov-json") {
      f = prov::ExportFormat::prov_json;
    } else {
      throw ConfigError("unknown provenance format '" + format + "' (expected dot or prov-json)");
    }
    const prov::ProvGraph graph = prov::parse_prov_json(io::read_file(in));
    io::write_file(out_path, prov::export_prov(graph, f));
    out << "wrote " << out_path.string() << '\n';
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitPartial;
  }
}

}  // namespace cliniflow::cli
