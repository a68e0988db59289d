#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cliniflow/core/model.hpp"

namespace cliniflow::provenance {

// none < steps < full. `steps` keeps one activity per top-level pipeline
// step; `full` also expands nested pipelines and traces attribute-level
// derivations.
enum class Verbosity { none = 0, steps = 1, full = 2 };

std::string_view to_string(Verbosity level);
// Throws ConfigError for unknown names.
Verbosity parse_verbosity(std::string_view name);

// One invocation of an operation. The id identifies the invocation, so the
// same operation run twice yields two activities.
struct OperationDescriptor {
  std::string id = new_id();
  std::string name;
  Metadata config;
  bool composite = false;  // a pipeline run as a single step

  friend bool operator==(const OperationDescriptor&, const OperationDescriptor&) = default;
};

struct ProvenanceRecord {
  std::string data_item_id;
  std::string op_id;
  std::vector<std::string> source_ids;
  Verbosity min_level = Verbosity::steps;  // full for attribute-level detail

  friend bool operator==(const ProvenanceRecord&, const ProvenanceRecord&) = default;
};

// Append-only store. Appends are serialized internally, so one tracer may be
// shared by concurrent workers; per-worker tracers can be merged instead.
class Tracer {
 public:
  explicit Tracer(Verbosity level = Verbosity::steps) : level_(level) {}
  Tracer(const Tracer& other);
  Tracer& operator=(const Tracer&) = delete;

  Verbosity level() const { return level_; }

  // Appends one record per output. `scope` is the id of the composite
  // activity the invocation runs inside; at `steps` level scoped records are
  // absorbed by their top-level composite activity and dropped here.
  // Records needing a higher level than the tracer's are dropped.
  // Throws SelfDerivation when an output is also a source.
  void record(const OperationDescriptor& op, std::span<const std::string> sources,
              std::span<const std::string> outputs,
              const std::optional<std::string>& scope = std::nullopt,
              Verbosity min_level = Verbosity::steps);

  // Registers an activity even if it ends up generating nothing.
  void declare(const OperationDescriptor& op,
               const std::optional<std::string>& scope = std::nullopt);

  // Order-insensitive: records are keyed by ids.
  void merge(const Tracer& other);

  // What a tracer at `level` would hold had it seen the same calls. Only
  // meaningful for a level at or below this one.
  Tracer restricted(Verbosity level) const;

  std::vector<ProvenanceRecord> records() const;
  std::map<std::string, OperationDescriptor> operations() const;
  std::map<std::string, std::optional<std::string>> scopes() const;

 private:
  bool accepts(const std::optional<std::string>& scope, Verbosity min_level) const;
  void declare_locked(const OperationDescriptor& op, const std::optional<std::string>& scope);

  Verbosity level_;
  mutable std::mutex mutex_;
  std::vector<ProvenanceRecord> records_;
  std::map<std::string, OperationDescriptor> operations_;
  std::map<std::string, std::optional<std::string>> scopes_;
};

struct Activity {
  std::string id;
  std::string name;
  Metadata config;
  bool composite = false;

  friend bool operator==(const Activity&, const Activity&) = default;
};

// Edges as (from, to) pairs with PROV orientation:
//   used            (activity, entity)
//   wasGeneratedBy  (entity, activity)
//   wasDerivedFrom  (generated entity, used entity)
//   wasInformedBy   (informed activity, informant activity)
using Edge = std::pair<std::string, std::string>;

struct ProvGraph {
  std::set<std::string> entities;
  std::map<std::string, Activity> activities;
  std::set<Edge> used;
  std::set<Edge> generated;
  std::set<Edge> derived;
  std::set<Edge> informed;
  // composite activity id -> what happened inside it
  std::map<std::string, ProvGraph> sub_graphs;

  bool empty() const { return entities.empty() && activities.empty(); }
  std::size_t edge_count() const {
    return used.size() + generated.size() + derived.size() + informed.size();
  }
  // Depth of composite nesting; 0 for a flat graph.
  std::size_t depth() const;

  friend bool operator==(const ProvGraph&, const ProvGraph&) = default;
};

// Throws CycleDetected if the derivations loop, ProvenanceError if an entity
// is generated by two activities in the same scope.
ProvGraph build_graph(const Tracer& tracer);

// Kahn's algorithm over entities and activities; false on a cycle.
bool is_acyclic(const ProvGraph& graph);

enum class ExportFormat { prov_json, dot };

std::string export_prov(const ProvGraph& graph, ExportFormat format);
ProvGraph parse_prov_json(std::string_view text);

// Invariant under renaming of ids: two graphs that are isomorphic (with
// activities matched by name and config) share a fingerprint.
std::string fingerprint(const ProvGraph& graph);

}  // namespace cliniflow::provenance
