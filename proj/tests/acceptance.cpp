// Acceptance suite: one PASS/FAIL line per criterion. Run from the project
// root, or pass the root as the first argument.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cliniflow/cli/commands.hpp"
#include "cliniflow/errors.hpp"
#include "cliniflow/eval/evaluation.hpp"
#include "cliniflow/io/converters.hpp"
#include "cliniflow/pipeline/pipeline.hpp"
#include "support/brat_canon.hpp"
#include "support/span_fuzz.hpp"
#include "support/structure.hpp"

using namespace cliniflow;
namespace fs = std::filesystem;
namespace pl = cliniflow::pipeline;
namespace prov = cliniflow::provenance;
namespace sp = cliniflow::spans;

namespace {

// Tolerances and sizes.
constexpr std::size_t kFuzzSequences = 10000;
constexpr std::size_t kFuzzMaxOps = 20;
constexpr std::size_t kFuzzMaxLen = 200;
constexpr double kFuzzSeconds = 60.0;
constexpr double kReproductionSeconds = 10.0;
constexpr double kArithmeticTolerance = 1e-9;
constexpr std::size_t kEvalRandomSets = 1000;
constexpr std::size_t kMinDemoDocuments = 20;
constexpr std::size_t kNestedDocuments = 100;

fs::path g_root = ".";

fs::path demo() { return g_root / "data" / "demo"; }

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("cliniflow_acceptance_" + new_id());
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

struct Outcome {
  bool pass = true;
  std::string detail;
};

Outcome fail(std::string why) { return {false, std::move(why)}; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fixed(double v, int digits = 3) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(digits);
  out << v;
  return out.str();
}

std::vector<fs::path> sorted_files(const fs::path& dir, const std::string& ext) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ext) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::map<std::string, std::string> read_tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = io::read_file(e.path());
  }
  return out;
}

std::vector<Annotation> annotations(const pl::Slot& slot) {
  std::vector<Annotation> out;
  for (const auto& d : slot) out.push_back(std::get<Annotation>(d));
  return out;
}

// ------------------------------------------------------------------ 1

Outcome span_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240601);
  std::size_t steps = 0;
  for (std::size_t i = 0; i < kFuzzSequences; ++i) {
    const std::string failure = fuzz::run_sequence(rng, kFuzzMaxOps, kFuzzMaxLen, steps);
    if (!failure.empty()) return fail("sequence " + std::to_string(i) + ": " + failure);
  }
  const double elapsed = seconds_since(t0);
  if (elapsed >= kFuzzSeconds) return fail("took " + fixed(elapsed) + " s");
  return {true, std::to_string(kFuzzSequences) + " sequences, " + std::to_string(steps) +
                    " checked steps, " + fixed(elapsed) + " s"};
}

// ------------------------------------------------------------------ 2

Outcome non_destructive() {
  pl::PipelineSpec spec = pl::load_pipeline_spec(demo() / "black.json");
  spec.outputs = {"deid", "dict_drugs"};
  const pl::Pipeline pipeline(spec, pl::builtin_registry(), demo());
  std::size_t checked = 0, inside_modified = 0, docs = 0;
  for (const fs::path& file : sorted_files(demo() / "corpus", ".txt")) {
    const Document doc = io::load_text_document(file);
    const std::u32string raw = brat_canon::utf32(doc.text());
    const pl::DataMap out = pipeline.run({{spec.inputs[0], {pl::Datum(doc)}}});
    ++docs;
    std::vector<std::vector<sp::OriginalSpan>> modified_segments;
    for (const Annotation& a : annotations(out.at("deid"))) {
      const Segment& seg = *as_segment(a);
      const bool altered = std::any_of(seg.spans.begin(), seg.spans.end(), [](const sp::Span& s) {
        return std::holds_alternative<sp::ModifiedSpan>(s);
      });
      if (altered) modified_segments.push_back(sp::normalize_spans(seg.spans));
    }
    for (const Annotation& a : annotations(out.at("dict_drugs"))) {
      const Segment& e = *as_segment(a);
      const bool pure = std::all_of(e.spans.begin(), e.spans.end(), [](const sp::Span& s) {
        return std::holds_alternative<sp::OriginalSpan>(s);
      });
      if (!pure) continue;
      const auto spans = sp::normalize_spans(e.spans);
      std::u32string slice;
      for (const auto& s : spans) slice += raw.substr(s.start, s.end - s.start);
      if (brat_canon::utf8(slice) != e.text) {
        return fail(file.filename().string() + ": '" + e.text + "' vs raw '" +
                    brat_canon::utf8(slice) + "'");
      }
      ++checked;
      for (const auto& seg : modified_segments) {
        if (!seg.empty() && seg.front().start <= spans.front().start &&
            spans.back().end <= seg.back().end) {
          ++inside_modified;
          break;
        }
      }
    }
  }
  if (docs < kMinDemoDocuments) return fail("demo corpus has only " + std::to_string(docs) + " documents");
  if (checked == 0) return fail("no entity checked");
  if (inside_modified == 0) return fail("no entity inside a de-identified sentence");
  return {true, std::to_string(checked) + " entities, " + std::to_string(inside_modified) +
                    " inside de-identified sentences, 0 mismatches"};
}

// ------------------------------------------------------------------ 3

Outcome brat_round_trip() {
  const fs::path root = g_root / "tests" / "fixtures" / "brat";
  std::size_t valid = 0, rejected = 0;
  for (const fs::path& ann_file : sorted_files(root / "valid", ".ann")) {
    fs::path txt = ann_file;
    txt.replace_extension(".txt");
    const std::string text = io::read_file(txt), ann = io::read_file(ann_file);
    const Document doc = create_document(text);
    const std::string emitted = io::emit_brat(doc, io::parse_brat(ann, text).annotations);
    if (emitted != brat_canon::canonicalize(ann, text)) {
      return fail(ann_file.filename().string() + " is not canonical after emit(parse)");
    }
    if (io::emit_brat(doc, io::parse_brat(emitted, text).annotations) != emitted) {
      return fail(ann_file.filename().string() + " is not a fixpoint");
    }
    ++valid;
  }
  std::istringstream expected(io::read_file(root / "malformed" / "expected.tsv"));
  std::string stem, line, kind;
  while (std::getline(expected, stem, '\t') && std::getline(expected, line, '\t') &&
         std::getline(expected, kind)) {
    const std::string text = io::read_file(root / "malformed" / (stem + ".txt"));
    const std::string ann = io::read_file(root / "malformed" / (stem + ".ann"));
    try {
      io::parse_brat(ann, text);
      return fail(stem + " was accepted");
    } catch (const MalformedLine& e) {
      if (kind != "malformed" || e.line() != std::stoul(line)) {
        return fail(stem + ": MalformedLine at line " + std::to_string(e.line()));
      }
    } catch (const SurfaceMismatch& e) {
      if (kind != "surface" || std::string(e.what()).rfind("line " + line + ":", 0) != 0) {
        return fail(stem + ": " + e.what());
      }
    }
    ++rejected;
  }
  if (valid != 30 || rejected != 10) {
    return fail(std::to_string(valid) + " valid and " + std::to_string(rejected) + " malformed fixtures");
  }
  return {true, "30 valid fixtures canonical, 10 malformed rejected at the expected line"};
}

// ------------------------------------------------------------------ 4

Outcome reproduction() {
  const auto t0 = std::chrono::steady_clock::now();
  TempDir tmp;
  cli::RunConfig orange;
  orange.pipeline_path = demo() / "orange.json";
  orange.input_dir = demo() / "corpus";
  orange.output_dir = tmp.path / "orange";
  const auto orange_report = cli::run_corpus(orange);
  const std::size_t docs = sorted_files(orange.input_dir, ".txt").size();
  const std::size_t anns = sorted_files(orange.output_dir, ".ann").size();
  if (docs < kMinDemoDocuments) return fail("demo corpus has only " + std::to_string(docs) + " documents");
  if (orange_report.exit_code() != cli::kExitOk || anns != docs) {
    return fail("orange emitted " + std::to_string(anns) + " .ann for " + std::to_string(docs) + " documents");
  }

  cli::RunConfig black = orange;
  black.pipeline_path = demo() / "black.json";
  black.output_dir = tmp.path / "black";
  if (cli::run_corpus(black).exit_code() != cli::kExitOk) return fail("black run failed");
  cli::EvalConfig eval;
  eval.pred_dirs = {black.output_dir / "dict_drugs", black.output_dir / "regex_drugs"};
  eval.ref_dir = demo() / "corpus";
  const auto report = cli::evaluate_dirs(eval);
  const double elapsed = seconds_since(t0);
  std::cout << report.text;
  if (!report.comparison) return fail("no comparison table");
  const double dict_f1 = report.runs.at(0).metrics.micro.f1();
  const double regex_f1 = report.runs.at(1).metrics.micro.f1();
  const std::string detail = "dictionary micro-F1 " + fixed(dict_f1, 4) + " vs regex " +
                             fixed(regex_f1, 4) + ", " + fixed(elapsed) + " s";
  if (!(dict_f1 > regex_f1)) return fail(detail);
  if (elapsed >= kReproductionSeconds) return fail(detail);
  return {true, std::to_string(anns) + " .ann files, " + detail};
}

// ------------------------------------------------------------------ 5

Entity span_entity(const std::string& label, std::size_t start, std::size_t end) {
  return make_entity(label, std::string(end - start, 'x'), {sp::OriginalSpan{start, end}});
}

Outcome evaluation_arithmetic() {
  const std::vector<Entity> ref{span_entity("Drug", 0, 5), span_entity("Drug", 10, 15),
                                span_entity("Dose", 20, 24)};
  const std::vector<Entity> pred{span_entity("Drug", 0, 5), span_entity("Drug", 10, 15),
                                 span_entity("Drug", 30, 34)};
  const auto m = eval::evaluate(pred, ref, {eval::MatchMode::exact});
  if (!(m.micro == eval::Counts{2, 1, 1})) return fail("counts differ from tp=2 fp=1 fn=1");
  for (double v : {m.micro.precision(), m.micro.recall(), m.micro.f1()}) {
    if (std::abs(v - 2.0 / 3.0) > kArithmeticTolerance) return fail("score " + fixed(v, 12));
  }

  std::mt19937_64 rng(77);
  std::uniform_int_distribution<std::size_t> count(0, 12), pos(0, 80), len(1, 8), lab(0, 2);
  const char* labels[] = {"A", "B", "C"};
  auto random_set = [&] {
    std::vector<Entity> s;
    const std::size_t n = count(rng);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t start = pos(rng);
      s.push_back(span_entity(labels[lab(rng)], start, start + len(rng)));
    }
    return s;
  };
  for (std::size_t round = 0; round < kEvalRandomSets; ++round) {
    const auto a = random_set(), b = random_set();
    for (const auto mode : {eval::MatchMode::exact, eval::MatchMode::overlap}) {
      const eval::MatchSpec spec{mode, 0.5, true};
      const auto self = eval::evaluate(a, a, spec);
      if (self.micro.fp != 0 || self.micro.fn != 0 || self.micro.tp != a.size()) {
        return fail("self-match failed in round " + std::to_string(round));
      }
      if (!a.empty() && self.micro.f1() != 1.0) return fail("self F1 below 1");
      const auto ab = eval::evaluate(a, b, spec).micro;
      const auto ba = eval::evaluate(b, a, spec).micro;
      if (ab.tp != ba.tp || ab.fp != ba.fn || ab.fn != ba.fp) {
        return fail("asymmetry in round " + std::to_string(round));
      }
      if (std::abs(ab.f1() - ba.f1()) > kArithmeticTolerance) return fail("F1 not symmetric");
    }
  }
  return {true, "p=r=f1=2/3 within 1e-9; symmetry and self-match on " +
                    std::to_string(kEvalRandomSets) + " random sets"};
}

// ------------------------------------------------------------------ 6

// Recount of one scope straight from the trace records.
struct Recount {
  std::size_t entities = 0, activities = 0, edges = 0;
};

Recount recount(const prov::Tracer& tracer, const std::optional<std::string>& scope) {
  const auto scopes = tracer.scopes();
  const auto ops = tracer.operations();
  std::set<std::string> acts;
  for (const auto& [id, s] : scopes) {
    if (s == scope) acts.insert(id);
  }
  std::set<std::string> entities;
  std::set<std::pair<std::string, std::string>> used, generated, derived, informed;
  std::map<std::string, std::string> generator;
  for (const auto& r : tracer.records()) {
    if (!acts.contains(r.op_id)) continue;
    entities.insert(r.data_item_id);
    generated.insert({r.data_item_id, r.op_id});
    generator[r.data_item_id] = r.op_id;
    for (const auto& s : r.source_ids) {
      entities.insert(s);
      used.insert({r.op_id, s});
      derived.insert({r.data_item_id, s});
    }
  }
  for (const auto& [act, ent] : used) {
    const auto g = generator.find(ent);
    if (g != generator.end() && g->second != act) informed.insert({act, g->second});
  }
  Recount out{entities.size(), acts.size(),
              used.size() + generated.size() + derived.size() + informed.size()};
  for (const auto& id : acts) {
    if (!ops.at(id).composite) continue;
    const Recount inner = recount(tracer, id);
    out.entities += inner.entities;
    out.activities += inner.activities;
    out.edges += inner.edges;
  }
  return out;
}

Recount graph_counts(const prov::ProvGraph& g) {
  Recount out{g.entities.size(), g.activities.size(), g.edge_count()};
  for (const auto& [id, sub] : g.sub_graphs) {
    const Recount inner = graph_counts(sub);
    out.entities += inner.entities;
    out.activities += inner.activities;
    out.edges += inner.edges;
  }
  return out;
}

std::set<std::string> all_entities(const prov::ProvGraph& g) {
  std::set<std::string> out = g.entities;
  for (const auto& [id, sub] : g.sub_graphs) out.merge(all_entities(sub));
  return out;
}

bool all_acyclic(const prov::ProvGraph& g) {
  if (!prov::is_acyclic(g)) return false;
  return std::all_of(g.sub_graphs.begin(), g.sub_graphs.end(),
                     [](const auto& kv) { return all_acyclic(kv.second); });
}

Outcome provenance_checks() {
  const pl::PipelineSpec spec = pl::load_pipeline_spec(demo() / "black_nested.json");
  const pl::Pipeline pipeline(spec, pl::builtin_registry(), demo());
  prov::Tracer full(prov::Verbosity::full);
  std::vector<std::string> outputs;
  for (const fs::path& file : sorted_files(demo() / "corpus", ".txt")) {
    const Document doc = io::load_text_document(file);
    const auto out = pipeline.run({{spec.inputs[0], {pl::Datum(doc)}}}, &full);
    for (const auto& [key, slot] : out) {
      for (const auto& d : slot) outputs.push_back(pl::datum_id(d));
    }
  }
  const prov::ProvGraph exported =
      prov::parse_prov_json(prov::export_prov(prov::build_graph(full), prov::ExportFormat::prov_json));
  if (!all_acyclic(exported)) return fail("exported graph has a cycle");
  for (const auto& id : outputs) {
    const auto n = std::count_if(exported.generated.begin(), exported.generated.end(),
                                 [&](const prov::Edge& e) { return e.first == id; });
    if (n != 1) return fail("output " + id + " has " + std::to_string(n) + " wasGeneratedBy edges");
  }
  const Recount expected = recount(full, std::nullopt), got = graph_counts(exported);
  if (expected.entities != got.entities || expected.activities != got.activities ||
      expected.edges != got.edges) {
    return fail("counts differ from the trace recount");
  }
  const auto steps = prov::build_graph(full.restricted(prov::Verbosity::steps));
  const auto se = all_entities(steps), fe = all_entities(exported);
  if (!std::includes(fe.begin(), fe.end(), se.begin(), se.end())) {
    return fail("steps-level entities are not a subset of the full-level entities");
  }
  return {true, std::to_string(outputs.size()) + " outputs, " + std::to_string(got.entities) +
                    " entities, " + std::to_string(got.activities) + " activities, " +
                    std::to_string(got.edges) + " edges; steps entities " + std::to_string(se.size()) +
                    " within full " + std::to_string(fe.size())};
}

// ------------------------------------------------------------------ 7

Outcome determinism() {
  TempDir tmp;
  std::vector<std::map<std::string, std::string>> trees;
  std::vector<std::string> prints;
  for (std::size_t workers : {1, 1, 4, 4}) {
    cli::RunConfig config;
    config.pipeline_path = demo() / "orange.json";
    config.input_dir = demo() / "corpus";
    config.output_dir = tmp.path / ("run" + std::to_string(trees.size()));
    config.prov_level = prov::Verbosity::full;
    config.workers = workers;
    const auto report = cli::run_corpus(config);
    if (report.exit_code() != cli::kExitOk) return fail("run failed");
    trees.push_back(read_tree(config.output_dir));
    prints.push_back(prov::fingerprint(report.graph));
  }
  for (std::size_t i = 1; i < trees.size(); ++i) {
    if (trees[i] != trees[0]) return fail("run " + std::to_string(i) + " output differs");
    if (prints[i] != prints[0]) return fail("run " + std::to_string(i) + " provenance differs");
  }
  return {true, std::to_string(trees[0].size()) +
                    " .ann files byte-identical over 2 runs with 1 worker and 2 with 4; fingerprints equal"};
}

// ------------------------------------------------------------------ 8

std::string random_document(std::mt19937_64& rng) {
  static const std::vector<std::string> pieces = {
      "patient", "aspirine", "Doliprane", "insuline glargine", "sous", "le", "matin", "fièvre",
      "angine", "M. DUPONT", "Mme ROUX", "12/03/2020", "2021-05-06", "01 23 45 67 89",
      "metformine", "Lovenox", "pas de", "œdème", "🙂", ".", ".", ",", "\n", "Kardégic",
      "bisoprolol", "arrêt du", "semaine"};
  std::uniform_int_distribution<std::size_t> pick(0, pieces.size() - 1), n(0, 40);
  std::string text;
  const std::size_t count = n(rng);
  for (std::size_t i = 0; i < count; ++i) {
    if (!text.empty() && text.back() != '\n') text += ' ';
    text += pieces[pick(rng)];
  }
  return text;
}

Outcome composition() {
  const pl::Pipeline flat(pl::load_pipeline_spec(demo() / "black.json"), pl::builtin_registry(), demo());
  const pl::Pipeline nested(pl::load_pipeline_spec(demo() / "black_nested.json"),
                            pl::builtin_registry(), demo());
  std::mt19937_64 rng(4242);
  std::size_t annotations_seen = 0;
  for (std::size_t i = 0; i < kNestedDocuments; ++i) {
    const Document doc = create_document(random_document(rng));
    const auto a = flat.run({{"raw", {pl::Datum(doc)}}});
    const auto b = nested.run({{"raw", {pl::Datum(doc)}}});
    if (structure::render(a) != structure::render(b)) {
      return fail("document " + std::to_string(i) + " differs");
    }
    for (const auto& [k, slot] : a) annotations_seen += slot.size();
  }
  return {true, std::to_string(kNestedDocuments) + " random documents, " +
                    std::to_string(annotations_seen) + " annotations structurally identical"};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) g_root = argv[1];
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"span algebra matches the character oracle", span_oracle},
      {"non-destructive end-to-end slices", non_destructive},
      {"Brat round trip and malformed rejection", brat_round_trip},
      {"orange and black pipelines on the demo corpus", reproduction},
      {"evaluation arithmetic and properties", evaluation_arithmetic},
      {"provenance graph checks", provenance_checks},
      {"determinism and parallel safety", determinism},
      {"nested and flat pipelines agree", composition},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = fail(std::string("exception: ") + e.what());
    }
    std::cout << "criterion " << i + 1 << ": " << (o.pass ? "PASS" : "FAIL") << "  "
              << criteria[i].first << " (" << o.detail << ")" << std::endl;
    if (!o.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
