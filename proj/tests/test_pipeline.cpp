#include <algorithm>
#include <set>

#include "doctest.h"

#include "cliniflow/errors.hpp"
#include "cliniflow/io/converters.hpp"
#include "cliniflow/pipeline/pipeline.hpp"
#include "support/structure.hpp"

using namespace cliniflow;
using namespace cliniflow::pipeline;
namespace prov = cliniflow::provenance;

namespace {

const char* kOrange = R"({
  "name": "orange",
  "inputs": ["raw"],
  "outputs": ["drugs"],
  "steps": [
    {"op": "split_sentences", "inputs": ["raw"], "outputs": ["sentences"]},
    {"op": "deidentify", "inputs": ["sentences"], "outputs": ["deid", "phi"]},
    {"op": "match_dictionary",
     "params": {"entries": [{"term": "aspirine", "label": "Drug", "norm_id": "B01AC06"}]},
     "inputs": ["deid"], "outputs": ["mentions"]},
    {"op": "detect_context", "params": {"preset": "negation"},
     "inputs": ["deid", "mentions"], "outputs": ["drugs"]}
  ]
})";

PipelineSpec orange() { return parse_pipeline_spec(Json::parse(kOrange)); }

// The orange pipeline with its first two steps moved into a sub-pipeline.
PipelineSpec orange_nested() {
  PipelineSpec flat = orange();
  PipelineSpec pre{"preprocess", {"text"}, {"clean"}, {}, {}};
  pre.steps.push_back({"split_sentences", Json::object(), {"text"}, {"sent"}});
  pre.steps.push_back({"deidentify", Json::object(), {"sent"}, {"clean"}});
  PipelineSpec nested{"orange_nested", {"raw"}, {"drugs"}, {}, {pre}};
  nested.steps.push_back({"preprocess", Json::object(), {"raw"}, {"deid"}});
  nested.steps.push_back(flat.steps[2]);
  nested.steps.push_back(flat.steps[3]);
  return nested;
}

DataMap one_doc(const std::string& text) { return {{"raw", {Datum(create_document(text))}}}; }

std::vector<Annotation> annotations(const Slot& slot) {
  std::vector<Annotation> out;
  for (const Datum& d : slot) out.push_back(std::get<Annotation>(d));
  return out;
}

bool has_issue(const std::vector<ValidationIssue>& issues, std::optional<std::size_t> step,
               const std::string& fragment) {
  return std::any_of(issues.begin(), issues.end(), [&](const ValidationIssue& i) {
    return i.step == step && i.reason.find(fragment) != std::string::npos;
  });
}

class Thrower : public ItemOperation {
 public:
  std::vector<Slot> apply(std::span<const Datum* const>) const override {
    throw OutOfBounds("synthetic failure");
  }
};

std::set<std::string> all_entities(const prov::ProvGraph& g) {
  std::set<std::string> out = g.entities;
  for (const auto& [id, sub] : g.sub_graphs) {
    const auto inner = all_entities(sub);
    out.insert(inner.begin(), inner.end());
  }
  return out;
}

}  // namespace

TEST_CASE("registry") {
  Registry r = builtin_registry();
  CHECK(r.contains("split_sentences"));
  CHECK_THROWS_AS(r.register_operation("split_sentences", {}), DuplicateName);
  r.register_operation("custom", {[](const Json&, const BuildContext&) {
                                    return std::make_shared<const Thrower>();
                                  }});
  CHECK(r.contains("custom"));
  PipelineSpec spec{"p", {"a"}, {"b"}, {{"custom", Json::object(), {"a"}, {"b"}}}, {}};
  CHECK(validate_pipeline(spec, r).empty());
  CHECK(has_issue(validate_pipeline(spec, builtin_registry()), 0, "unknown operation 'custom'"));
}

TEST_CASE("validation") {
  const Registry r = builtin_registry();
  CHECK(validate_pipeline(orange(), r).empty());
  CHECK(validate_pipeline(orange_nested(), r).empty());

  SUBCASE("forward reference") {
    PipelineSpec spec = orange();
    std::swap(spec.steps[0], spec.steps[1]);
    CHECK(has_issue(validate_pipeline(spec, r), 0, "forward reference to 'sentences'"));
  }
  SUBCASE("output never produced") {
    PipelineSpec spec = orange();
    spec.outputs.push_back("nothing");
    CHECK(has_issue(validate_pipeline(spec, r), std::nullopt, "'nothing' is never produced"));
  }
  SUBCASE("key produced twice") {
    PipelineSpec spec = orange();
    spec.steps[2].outputs = {"deid"};
    CHECK(has_issue(validate_pipeline(spec, r), 2, "produced twice"));
  }
  SUBCASE("arity") {
    PipelineSpec spec = orange();
    spec.steps[3].inputs = {"deid"};
    CHECK(has_issue(validate_pipeline(spec, r), 3, "expects 2 inputs"));
    spec.steps[1].outputs = {"a", "b", "c"};
    CHECK(has_issue(validate_pipeline(spec, r), 1, "expects 1..2 outputs"));
  }
  SUBCASE("self-referential nesting") {
    PipelineSpec spec = orange_nested();
    spec.pipelines[0].steps.push_back({"preprocess", Json::object(), {"clean"}, {"again"}});
    CHECK(has_issue(validate_pipeline(spec, r), std::nullopt, "cycle: preprocess -> preprocess"));
    CHECK_THROWS_AS(Pipeline(spec, r), PipelineInvalid);
  }
  SUBCASE("mutual nesting") {
    PipelineSpec a{"a", {"x"}, {"y"}, {{"b", Json::object(), {"x"}, {"y"}}}, {}};
    PipelineSpec b{"b", {"x"}, {"y"}, {{"a", Json::object(), {"x"}, {"y"}}}, {}};
    PipelineSpec top{"top", {"x"}, {"y"}, {{"a", Json::object(), {"x"}, {"y"}}}, {a, b}};
    CHECK(has_issue(validate_pipeline(top, r), std::nullopt, "cycle"));
  }
  SUBCASE("errors inside nested pipelines are reported") {
    PipelineSpec spec = orange_nested();
    spec.pipelines[0].steps[1].op = "nope";
    CHECK(has_issue(validate_pipeline(spec, r), std::nullopt, "in pipeline 'preprocess' step 1"));
  }
  SUBCASE("bad params fail at construction") {
    PipelineSpec spec = orange();
    spec.steps[3].params = {{"preset", "unknown"}};
    CHECK_THROWS_AS(Pipeline(spec, r), ConfigError);
    spec.steps[3].params = {{"preset", "negation"}, {"bogus", 1}};
    CHECK_THROWS_AS(Pipeline(spec, r), ConfigError);
  }
}

TEST_CASE("config round trip") {
  const PipelineSpec spec = orange_nested();
  CHECK(to_json(parse_pipeline_spec(to_json(spec))) == to_json(spec));
  CHECK_THROWS_AS(parse_pipeline_spec(Json::parse(R"({"steps": []})")), ConfigError);
  CHECK_THROWS_AS(parse_pipeline_spec(Json::parse(R"({"name": "x", "inputs": "raw"})")), ConfigError);
  CHECK_THROWS_AS(parse_pipeline_spec(Json::parse(R"({"name": "x", "steps": [{"inputs": []}]})")),
                  ConfigError);
}

TEST_CASE("running the orange pipeline") {
  const Document doc = create_document("Né le 12/03/1980. Patient sous aspirine. Pas d'aspirine.");
  const DataMap out = run_pipeline(orange(), {{"raw", {Datum(doc)}}});
  REQUIRE(out.size() == 1);
  const auto drugs = annotations(out.at("drugs"));
  REQUIRE(drugs.size() == 2);
  const std::string brat = io::emit_brat(doc, drugs);
  CHECK(brat ==
        "T1\tDrug 31 39\taspirine\nT2\tDrug 47 55\taspirine\n"
        "A1\tnorm_id T1 B01AC06\nA2\tnorm_id T2 B01AC06\nA3\tis_negated T2\n");

  SUBCASE("one Drug line for one mention") {
    const auto single = run_pipeline(orange(), one_doc("Patient sous aspirine."));
    const std::string b = io::emit_brat(create_document("Patient sous aspirine."),
                                        annotations(single.at("drugs")));
    CHECK(std::count(b.begin(), b.end(), '\n') == 2);
    CHECK(b.rfind("T1\tDrug 13 21\taspirine\n", 0) == 0);
  }
  SUBCASE("zero steps is the identity") {
    const PipelineSpec id{"id", {"raw"}, {"raw"}, {}, {}};
    const DataMap in = one_doc("abc");
    CHECK(structure::render(run_pipeline(id, in)) == structure::render(in));
  }
  SUBCASE("missing input") {
    CHECK_THROWS_AS(run_pipeline(orange(), {}), MissingInput);
  }
  SUBCASE("failing step") {
    Registry r = builtin_registry();
    r.register_operation("explode", {[](const Json&, const BuildContext&) {
                                       return std::make_shared<const Thrower>();
                                     }});
    PipelineSpec spec = orange();
    spec.steps.insert(spec.steps.begin() + 1, StepSpec{"explode", Json::object(), {"sentences"}, {"x"}});
    try {
      Pipeline(spec, r).run(one_doc("Une phrase."));
      FAIL("expected StepFailure");
    } catch (const StepFailure& e) {
      CHECK(e.step_index() == 1);
      CHECK(e.op_name() == "explode");
      CHECK(std::string(e.what()).find("synthetic failure") != std::string::npos);
    }
  }
  SUBCASE("relations are rejected by text operations") {
    const Entity a = make_entity("X", "a", {spans::OriginalSpan{0, 1}});
    const DataMap in{{"raw", {Datum(Annotation(make_relation("r", a.id, "other")))}}};
    CHECK_THROWS_AS(run_pipeline(orange(), in), StepFailure);
  }
}

TEST_CASE("nested pipelines") {
  const std::string text = "Vu le 01/02/2003 par Dr MARTIN. Sous aspirine, pas de fièvre.\nPas d'aspirine";
  const DataMap flat = run_pipeline(orange(), one_doc(text));
  const DataMap nested = run_pipeline(orange_nested(), one_doc(text));
  CHECK(structure::render(flat) == structure::render(nested));
  CHECK(structure::render(flat).find("is_negated=true") != std::string::npos);

  SUBCASE("provenance shows one composite activity at steps level") {
    prov::Tracer steps(prov::Verbosity::steps), full(prov::Verbosity::full);
    const Document doc = create_document(text);
    const Pipeline p(orange_nested(), builtin_registry());
    p.run({{"raw", {Datum(doc)}}}, &steps);
    p.run({{"raw", {Datum(doc)}}}, &full);
    const auto gs = prov::build_graph(steps);
    const auto gf = prov::build_graph(full);
    CHECK(gs.depth() == 0);
    CHECK(gf.depth() == 1);
    CHECK(gs.activities.size() == 3);
    CHECK(gf.activities.size() == 3);
    const auto composite = std::count_if(gs.activities.begin(), gs.activities.end(),
                                         [](const auto& a) { return a.second.composite; });
    CHECK(composite == 1);
    REQUIRE(gf.sub_graphs.size() == 1);
    CHECK(gf.sub_graphs.begin()->second.activities.size() == 2);
    CHECK(prov::is_acyclic(gs));
    CHECK(prov::is_acyclic(gf));

    // same run seen at both levels
    const auto projected = prov::build_graph(full.restricted(prov::Verbosity::steps));
    CHECK(prov::fingerprint(projected) == prov::fingerprint(gs));
    const auto se = all_entities(projected), fe = all_entities(gf);
    CHECK(std::includes(fe.begin(), fe.end(), se.begin(), se.end()));
    CHECK(fe.size() > se.size());
    for (const auto& [from, to] : projected.derived) CHECK(gf.derived.contains({from, to}));
  }
}

TEST_CASE("nesting depth 3") {
  PipelineSpec p1{"p1", {"a"}, {"b"}, {{"split_sentences", Json::object(), {"a"}, {"b"}}}, {}};
  PipelineSpec p2{"p2", {"a"}, {"b"}, {{"p1", Json::object(), {"a"}, {"b"}}}, {}};
  PipelineSpec p3{"p3", {"a"}, {"b"}, {{"p2", Json::object(), {"a"}, {"b"}}}, {}};
  PipelineSpec top{"top", {"raw"}, {"out"}, {{"p3", Json::object(), {"raw"}, {"s"}},
                                            {"deidentify", Json::object(), {"s"}, {"out"}}},
                   {p3, p1, p2}};
  prov::Tracer full(prov::Verbosity::full);
  const DataMap out = Pipeline(top, builtin_registry()).run(one_doc("Un. Deux le 01/01/2001."), &full);
  REQUIRE(out.at("out").size() == 2);
  CHECK(structure::render(out).find("[Deux le [DATE].]") != std::string::npos);
  const auto g = prov::build_graph(full);
  CHECK(g.depth() == 3);

  prov::Tracer steps(prov::Verbosity::steps);
  Pipeline(top, builtin_registry()).run(one_doc("Un. Deux."), &steps);
  CHECK(prov::build_graph(steps).depth() == 0);

  prov::Tracer none(prov::Verbosity::none);
  Pipeline(top, builtin_registry()).run(one_doc("Un. Deux."), &none);
  CHECK(prov::build_graph(none).empty());
}

TEST_CASE("provenance completeness at full level") {
  prov::Tracer full(prov::Verbosity::full);
  const Document doc = create_document("Sous aspirine. Pas d'aspirine, ni paracetamol le 02/03/2004.");
  PipelineSpec spec = orange();
  spec.outputs = {"drugs", "phi", "deid"};
  const DataMap out = Pipeline(spec, builtin_registry()).run({{"raw", {Datum(doc)}}}, &full);
  const auto g = prov::build_graph(full);
  for (const auto& [key, slot] : out) {
    for (const Datum& d : slot) {
      const std::string& id = datum_id(d);
      const auto n = std::count_if(g.generated.begin(), g.generated.end(),
                                   [&](const prov::Edge& e) { return e.first == id; });
      CHECK_MESSAGE(n == 1, key << " item " << id);
      for (const Attribute& a : base_of(std::get<Annotation>(d)).attributes) {
        if (a.label == "is_negated") CHECK(g.entities.contains(a.id));
      }
    }
  }
  CHECK(g.activities.size() == 4);
  CHECK(g.entities.contains(doc.id()));
}

TEST_CASE("determinism across runs") {
  const std::string text = "Le 3 mars 2001, Mme DURAND sous aspirine. Pas de AVK.";
  const auto first = structure::render(run_pipeline(orange_nested(), one_doc(text)));
  for (int i = 0; i < 5; ++i) {
    CHECK(structure::render(run_pipeline(orange_nested(), one_doc(text))) == first);
  }
}
