#include "cliniflow/pipeline/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "cliniflow/errors.hpp"

namespace cliniflow::pipeline {

namespace fs = std::filesystem;

const std::string& datum_id(const Datum& d) {
  if (const auto* doc = std::get_if<Document>(&d)) return doc->id();
  return id_of(std::get<Annotation>(d));
}

// ------------------------------------------------------------------- config

namespace {

std::vector<std::string> string_list(const Json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) return {};
  const Json& v = j.at(key);
  if (!v.is_array()) throw ConfigError(where + ": \"" + key + "\" must be a list of strings");
  std::vector<std::string> out;
  for (const Json& item : v) {
    if (!item.is_string()) throw ConfigError(where + ": \"" + key + "\" must be a list of strings");
    out.push_back(item.get<std::string>());
  }
  return out;
}

Json string_array(const std::vector<std::string>& v) {
  Json out = Json::array();
  for (const auto& s : v) out.push_back(s);
  return out;
}

Metadata flatten_params(const Json& params) {
  Metadata out;
  for (const auto& [key, value] : params.items()) {
    if (value.is_boolean()) {
      out[key] = value.get<bool>();
    } else if (value.is_number_integer()) {
      out[key] = value.get<std::int64_t>();
    } else if (value.is_number()) {
      out[key] = value.get<double>();
    } else if (value.is_string()) {
      out[key] = value.get<std::string>();
    } else if (value.is_null()) {
      out[key] = std::monostate{};
    } else {
      out[key] = value.dump();
    }
  }
  return out;
}

}  // namespace

PipelineSpec parse_pipeline_spec(const Json& j) {
  if (!j.is_object()) throw ConfigError("pipeline spec must be a JSON object");
  PipelineSpec spec;
  if (!j.contains("name") || !j.at("name").is_string()) {
    throw ConfigError("pipeline spec needs a string \"name\"");
  }
  spec.name = j.at("name").get<std::string>();
  const std::string where = "pipeline '" + spec.name + "'";
  spec.inputs = string_list(j, "inputs", where);
  spec.outputs = string_list(j, "outputs", where);
  if (j.contains("steps")) {
    if (!j.at("steps").is_array()) throw ConfigError(where + ": \"steps\" must be a list");
    for (const Json& s : j.at("steps")) {
      const std::string step_where = where + " step " + std::to_string(spec.steps.size());
      if (!s.is_object() || !s.contains("op") || !s.at("op").is_string()) {
        throw ConfigError(step_where + ": needs a string \"op\"");
      }
      StepSpec step;
      step.op = s.at("op").get<std::string>();
      if (s.contains("params")) {
        if (!s.at("params").is_object()) throw ConfigError(step_where + ": \"params\" must be an object");
        step.params = s.at("params");
      }
      step.inputs = string_list(s, "inputs", step_where);
      step.outputs = string_list(s, "outputs", step_where);
      spec.steps.push_back(std::move(step));
    }
  }
  if (j.contains("pipelines")) {
    if (!j.at("pipelines").is_array()) throw ConfigError(where + ": \"pipelines\" must be a list");
    for (const Json& p : j.at("pipelines")) spec.pipelines.push_back(parse_pipeline_spec(p));
  }
  return spec;
}

PipelineSpec load_pipeline_spec(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoFailure("cannot read pipeline " + file.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& e) {
    throw ConfigError(file.string() + ": " + e.what());
  }
  return parse_pipeline_spec(j);
}

Json to_json(const PipelineSpec& spec) {
  Json j = {{"name", spec.name}, {"inputs", string_array(spec.inputs)},
            {"outputs", string_array(spec.outputs)}, {"steps", Json::array()}};
  for (const StepSpec& s : spec.steps) {
    j["steps"].push_back({{"op", s.op},
                          {"params", s.params},
                          {"inputs", string_array(s.inputs)},
                          {"outputs", string_array(s.outputs)}});
  }
  if (!spec.pipelines.empty()) {
    j["pipelines"] = Json::array();
    for (const PipelineSpec& p : spec.pipelines) j["pipelines"].push_back(to_json(p));
  }
  return j;
}

// --------------------------------------------------------------- operations

bool RunContext::tracing() const {
  return tracer != nullptr && tracer->level() != provenance::Verbosity::none;
}

void RunContext::record(std::span<const std::string> sources,
                        std::span<const std::string> outputs,
                        provenance::Verbosity min_level) const {
  if (!tracing()) return;
  const std::set<std::string> src(sources.begin(), sources.end());
  std::vector<std::string> fresh;
  for (const auto& o : outputs) {
    if (!src.contains(o)) fresh.push_back(o);
  }
  if (fresh.empty()) return;
  tracer->record(descriptor, sources, fresh, scope, min_level);
}

std::vector<Slot> ItemOperation::run(std::span<const Slot> inputs, const RunContext& ctx) const {
  const std::size_t n = inputs.empty() ? 0 : inputs[0].size();
  for (const Slot& s : inputs) {
    if (s.size() != n) throw ArityMismatch("per-item inputs have different lengths");
  }
  std::vector<Slot> out(ctx.output_count);
  std::vector<const Datum*> items(inputs.size());
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::string> sources, produced;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
      items[k] = &inputs[k][i];
      sources.push_back(datum_id(inputs[k][i]));
    }
    std::vector<Slot> got = apply(items);
    for (std::size_t k = 0; k < got.size() && k < out.size(); ++k) {
      for (Datum& d : got[k]) {
        produced.push_back(datum_id(d));
        out[k].push_back(std::move(d));
      }
    }
    ctx.record(sources, produced);
  }
  return out;
}

void Registry::register_operation(const std::string& name, OperationInfo info) {
  if (name.empty()) throw ConfigError("operation name is empty");
  if (!ops_.emplace(name, std::move(info)).second) {
    throw DuplicateName("operation '" + name + "' is already registered");
  }
}

const OperationInfo* Registry::find(const std::string& name) const {
  const auto it = ops_.find(name);
  return it == ops_.end() ? nullptr : &it->second;
}

// --------------------------------------------------------------- validation

namespace {

// Nested pipelines in an order where each comes after those it uses;
// nullopt and the offending path when they form a cycle.
std::optional<std::vector<std::size_t>> nested_order(const PipelineSpec& spec,
                                                     std::string& cycle) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < spec.pipelines.size(); ++i) index.emplace(spec.pipelines[i].name, i);
  std::vector<int> state(spec.pipelines.size(), 0);  // 0 new, 1 on stack, 2 done
  std::vector<std::size_t> order, stack;
  std::function<bool(std::size_t)> visit = [&](std::size_t i) {
    if (state[i] == 2) return true;
    if (state[i] == 1) {
      const auto from = std::find(stack.begin(), stack.end(), i);
      for (auto it = from; it != stack.end(); ++it) cycle += spec.pipelines[*it].name + " -> ";
      cycle += spec.pipelines[i].name;
      return false;
    }
    state[i] = 1;
    stack.push_back(i);
    for (const StepSpec& s : spec.pipelines[i].steps) {
      const auto dep = index.find(s.op);
      if (dep != index.end() && !visit(dep->second)) return false;
    }
    stack.pop_back();
    state[i] = 2;
    order.push_back(i);
    return true;
  };
  for (std::size_t i = 0; i < spec.pipelines.size(); ++i) {
    if (!visit(i)) return std::nullopt;
  }
  return order;
}

std::string in_quotes(const std::string& s) { return "'" + s + "'"; }

void check_arity(std::size_t got, std::size_t lo, std::size_t hi, const char* what,
                 std::size_t step, std::vector<ValidationIssue>& issues) {
  if (got < lo || got > hi) {
    std::string want = std::to_string(lo);
    if (hi != lo) want += hi == static_cast<std::size_t>(-1) ? "+" : ".." + std::to_string(hi);
    issues.push_back({step, "expects " + want + " " + what + ", got " + std::to_string(got)});
  }
}

OperationInfo signature_of(const PipelineSpec& spec) {
  return {nullptr, spec.inputs.size(), spec.inputs.size(), spec.outputs.size(),
          spec.outputs.size()};
}

}  // namespace

std::vector<ValidationIssue> validate_pipeline(const PipelineSpec& spec, const Registry& registry) {
  std::vector<ValidationIssue> issues;
  Registry local = registry;

  std::string cycle;
  const auto order = nested_order(spec, cycle);
  if (!order) {
    issues.push_back({std::nullopt, "nested pipelines form a cycle: " + cycle});
  } else {
    for (std::size_t i : *order) {
      const PipelineSpec& nested = spec.pipelines[i];
      for (const ValidationIssue& inner : validate_pipeline(nested, local)) {
        issues.push_back({std::nullopt, "in pipeline " + in_quotes(nested.name) +
                                            (inner.step ? " step " + std::to_string(*inner.step) : "") +
                                            ": " + inner.reason});
      }
      if (local.contains(nested.name)) {
        issues.push_back({std::nullopt, "pipeline name " + in_quotes(nested.name) + " is already taken"});
      } else {
        local.register_operation(nested.name, signature_of(nested));
      }
    }
  }

  std::set<std::string> available;
  for (const auto& key : spec.inputs) {
    if (!available.insert(key).second) {
      issues.push_back({std::nullopt, "input " + in_quotes(key) + " is declared twice"});
    }
  }
  std::map<std::string, std::size_t> produced_by;
  for (std::size_t i = 0; i < spec.steps.size(); ++i) {
    for (const auto& key : spec.steps[i].outputs) produced_by.emplace(key, i);
  }

  for (std::size_t i = 0; i < spec.steps.size(); ++i) {
    const StepSpec& step = spec.steps[i];
    const OperationInfo* info = local.find(step.op);
    if (info == nullptr) {
      issues.push_back({i, "unknown operation " + in_quotes(step.op)});
    } else {
      check_arity(step.inputs.size(), info->min_inputs, info->max_inputs, "inputs", i, issues);
      check_arity(step.outputs.size(), info->min_outputs, info->max_outputs, "outputs", i, issues);
    }
    if (step.inputs.empty()) issues.push_back({i, "has no input keys"});
    if (step.outputs.empty()) issues.push_back({i, "has no output keys"});
    for (const auto& key : step.inputs) {
      if (available.contains(key)) continue;
      const auto later = produced_by.find(key);
      if (later != produced_by.end() && later->second >= i) {
        issues.push_back({i, "forward reference to " + in_quotes(key) + ", produced by step " +
                                 std::to_string(later->second)});
      } else {
        issues.push_back({i, "input " + in_quotes(key) + " is never produced"});
      }
    }
    for (const auto& key : step.outputs) {
      if (!available.insert(key).second) {
        issues.push_back({i, "key " + in_quotes(key) + " is produced twice"});
      }
    }
  }
  for (const auto& key : spec.outputs) {
    if (!available.contains(key)) {
      issues.push_back({std::nullopt, "output " + in_quotes(key) + " is never produced"});
    }
  }
  return issues;
}

// ---------------------------------------------------------------- execution

namespace {

class PipelineOperation : public Operation {
 public:
  explicit PipelineOperation(std::shared_ptr<const Pipeline> pipeline)
      : pipeline_(std::move(pipeline)) {}

  bool composite() const override { return true; }

  std::vector<Slot> run(std::span<const Slot> inputs, const RunContext& ctx) const override {
    const PipelineSpec& spec = pipeline_->spec();
    DataMap in;
    std::vector<std::string> sources;
    for (std::size_t k = 0; k < spec.inputs.size(); ++k) {
      in[spec.inputs[k]] = inputs[k];
      for (const Datum& d : inputs[k]) sources.push_back(datum_id(d));
    }
    DataMap result = pipeline_->run(in, ctx.tracer, ctx.descriptor.id);

    std::vector<Slot> out;
    std::vector<std::string> outputs;
    for (const auto& key : spec.outputs) {
      Slot& slot = result.at(key);
      for (const Datum& d : slot) outputs.push_back(datum_id(d));
      out.push_back(std::move(slot));
    }
    ctx.record(sources, outputs);
    return out;
  }

 private:
  std::shared_ptr<const Pipeline> pipeline_;
};

std::string describe(const std::vector<ValidationIssue>& issues) {
  std::ostringstream out;
  for (std::size_t i = 0; i < issues.size(); ++i) {
    if (i > 0) out << "; ";
    if (issues[i].step) out << "step " << *issues[i].step << ": ";
    out << issues[i].reason;
  }
  return out.str();
}

}  // namespace

Pipeline::Pipeline(const PipelineSpec& spec, const Registry& registry, const fs::path& base_dir)
    : spec_(spec), registry_(registry) {
  const auto issues = validate_pipeline(spec_, registry_);
  if (!issues.empty()) {
    throw PipelineInvalid("pipeline " + in_quotes(spec_.name) + " is invalid: " + describe(issues));
  }
  std::string unused;
  const auto order = nested_order(spec_, unused);
  for (std::size_t i : *order) {
    const PipelineSpec& nested = spec_.pipelines[i];
    registry_.register_operation(nested.name, as_operation(nested, registry_, base_dir));
  }
  const BuildContext build{base_dir, &registry_};
  for (std::size_t i = 0; i < spec_.steps.size(); ++i) {
    const StepSpec& s = spec_.steps[i];
    try {
      steps_.push_back({s, registry_.find(s.op)->factory(s.params, build), flatten_params(s.params)});
    } catch (const Error& e) {
      throw ConfigError("pipeline " + in_quotes(spec_.name) + " step " + std::to_string(i) + " (" +
                        s.op + "): " + e.what());
    } catch (const Json::exception& e) {
      throw ConfigError("pipeline " + in_quotes(spec_.name) + " step " + std::to_string(i) + " (" +
                        s.op + "): " + e.what());
    }
  }
}

DataMap Pipeline::run(const DataMap& inputs, provenance::Tracer* tracer,
                      const std::optional<std::string>& scope) const {
  DataMap env;
  for (const auto& key : spec_.inputs) {
    const auto it = inputs.find(key);
    if (it == inputs.end()) {
      throw MissingInput("pipeline " + in_quotes(spec_.name) + " lacks input " + in_quotes(key));
    }
    env.emplace(key, it->second);
  }
  for (std::size_t i = 0; i < steps_.size(); ++i) {
    const Step& step = steps_[i];
    std::vector<Slot> in;
    for (const auto& key : step.spec.inputs) in.push_back(env.at(key));
    RunContext ctx{tracer, scope, {new_id(), step.spec.op, step.config, step.op->composite()},
                   step.spec.outputs.size()};
    if (ctx.tracing()) tracer->declare(ctx.descriptor, scope);
    std::vector<Slot> out;
    try {
      out = step.op->run(in, ctx);
    } catch (const std::exception& e) {
      throw StepFailure(i, step.spec.op, e.what());
    }
    if (out.size() != step.spec.outputs.size()) {
      throw StepFailure(i, step.spec.op,
                        "returned " + std::to_string(out.size()) + " outputs, expected " +
                            std::to_string(step.spec.outputs.size()));
    }
    for (std::size_t k = 0; k < out.size(); ++k) env[step.spec.outputs[k]] = std::move(out[k]);
  }
  DataMap result;
  for (const auto& key : spec_.outputs) result.emplace(key, env.at(key));
  return result;
}

OperationInfo as_operation(const PipelineSpec& spec, const Registry& registry,
                           const fs::path& base_dir) {
  auto pipeline = std::make_shared<const Pipeline>(spec, registry, base_dir);
  OperationInfo info = signature_of(spec);
  info.factory = [pipeline](const Json&, const BuildContext&) {
    return std::make_shared<const PipelineOperation>(pipeline);
  };
  return info;
}

DataMap run_pipeline(const PipelineSpec& spec, const DataMap& inputs, provenance::Tracer* tracer,
                     const Registry& registry) {
  return Pipeline(spec, registry).run(inputs, tracer);
}

}  // namespace cliniflow::pipeline
