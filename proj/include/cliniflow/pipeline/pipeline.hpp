#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "cliniflow/core/model.hpp"
#include "cliniflow/provenance/provenance.hpp"

namespace cliniflow::pipeline {

using Json = nlohmann::ordered_json;

// A slot holds one document or a homogeneous list of items.
using Datum = std::variant<Document, Annotation>;
using Slot = std::vector<Datum>;
using DataMap = std::map<std::string, Slot>;

const std::string& datum_id(const Datum& d);

struct StepSpec {
  std::string op;
  Json params = Json::object();
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
};

struct PipelineSpec {
  std::string name;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::vector<StepSpec> steps;
  // Pipelines usable as operations by name, here and in each other, as long
  // as no pipeline reaches itself.
  std::vector<PipelineSpec> pipelines;
};

// {"name", "inputs", "outputs", "steps": [{"op", "params", "inputs",
// "outputs"}], "pipelines": [...]}. Throws ConfigError.
PipelineSpec parse_pipeline_spec(const Json& j);
PipelineSpec load_pipeline_spec(const std::filesystem::path& file);
Json to_json(const PipelineSpec& spec);

// ------------------------------------------------------------- operations

struct RunContext {
  provenance::Tracer* tracer = nullptr;
  std::optional<std::string> scope;
  provenance::OperationDescriptor descriptor;
  std::size_t output_count = 1;

  bool tracing() const;
  // Drops outputs that are also sources; no-op when nothing remains.
  void record(std::span<const std::string> sources, std::span<const std::string> outputs,
              provenance::Verbosity min_level = provenance::Verbosity::steps) const;
};

class Operation {
 public:
  virtual ~Operation() = default;
  // One slot per output key. Batch operations record their own provenance.
  virtual std::vector<Slot> run(std::span<const Slot> inputs, const RunContext& ctx) const = 0;
  // Composite operations run other steps scoped inside their own activity.
  virtual bool composite() const { return false; }
};

// Per-item operation mapped over the input lists, which must have equal
// lengths. One derivation is recorded per item; slots returned by apply()
// beyond output_count are dropped.
class ItemOperation : public Operation {
 public:
  std::vector<Slot> run(std::span<const Slot> inputs, const RunContext& ctx) const final;
  virtual std::vector<Slot> apply(std::span<const Datum* const> items) const = 0;
};

class Registry;

struct BuildContext {
  std::filesystem::path base_dir;  // relative paths in params resolve here
  const Registry* registry = nullptr;
};

using Factory = std::function<std::shared_ptr<const Operation>(const Json& params, const BuildContext&)>;

struct OperationInfo {
  Factory factory;
  std::size_t min_inputs = 1, max_inputs = 1;
  std::size_t min_outputs = 1, max_outputs = 1;
};

class Registry {
 public:
  // Throws DuplicateName.
  void register_operation(const std::string& name, OperationInfo info);
  const OperationInfo* find(const std::string& name) const;
  bool contains(const std::string& name) const { return find(name) != nullptr; }

 private:
  std::map<std::string, OperationInfo> ops_;
};

// split_sentences, deidentify, match_dictionary, match_regex, match_dates,
// detect_context.
Registry builtin_registry();

// --------------------------------------------------------------- validation

struct ValidationIssue {
  std::optional<std::size_t> step;
  std::string reason;
};

std::vector<ValidationIssue> validate_pipeline(const PipelineSpec& spec, const Registry& registry);

// --------------------------------------------------------------- execution

// Validated, instantiated pipeline. Immutable; one instance may run
// concurrently on distinct inputs.
class Pipeline {
 public:
  // Throws PipelineInvalid listing every issue, or the factory's error.
  Pipeline(const PipelineSpec& spec, const Registry& registry,
           const std::filesystem::path& base_dir = {});

  const PipelineSpec& spec() const { return spec_; }

  // Throws MissingInput or StepFailure.
  DataMap run(const DataMap& inputs, provenance::Tracer* tracer = nullptr,
              const std::optional<std::string>& scope = std::nullopt) const;

 private:
  struct Step {
    StepSpec spec;
    std::shared_ptr<const Operation> op;
    Metadata config;
  };
  PipelineSpec spec_;
  Registry registry_;
  std::vector<Step> steps_;
};

// Operation wrapping a whole pipeline; recorded as one composite activity
// whose steps are scoped inside it.
OperationInfo as_operation(const PipelineSpec& spec, const Registry& registry,
                           const std::filesystem::path& base_dir = {});

DataMap run_pipeline(const PipelineSpec& spec, const DataMap& inputs,
                     provenance::Tracer* tracer = nullptr,
                     const Registry& registry = builtin_registry());

}  // namespace cliniflow::pipeline
