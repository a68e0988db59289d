#include "cliniflow/provenance/provenance.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <sstream>
#include <unordered_map>

#include "json.hpp"

#include "cliniflow/errors.hpp"

namespace cliniflow::provenance {

using json = nlohmann::ordered_json;

std::string_view to_string(Verbosity level) {
  switch (level) {
    case Verbosity::none: return "none";
    case Verbosity::steps: return "steps";
    case Verbosity::full: return "full";
  }
  return "none";
}

Verbosity parse_verbosity(std::string_view name) {
  if (name == "none") return Verbosity::none;
  if (name == "steps") return Verbosity::steps;
  if (name == "full") return Verbosity::full;
  throw ConfigError("unknown provenance level '" + std::string(name) + "'");
}

Tracer::Tracer(const Tracer& other) : level_(other.level_) {
  std::lock_guard lock(other.mutex_);
  records_ = other.records_;
  operations_ = other.operations_;
  scopes_ = other.scopes_;
}

bool Tracer::accepts(const std::optional<std::string>& scope, Verbosity min_level) const {
  if (level_ == Verbosity::none || level_ < min_level) return false;
  return !(level_ == Verbosity::steps && scope.has_value());
}

void Tracer::declare_locked(const OperationDescriptor& op,
                            const std::optional<std::string>& scope) {
  operations_.try_emplace(op.id, op);
  scopes_.try_emplace(op.id, scope);
}

void Tracer::declare(const OperationDescriptor& op, const std::optional<std::string>& scope) {
  if (!accepts(scope, Verbosity::steps)) return;
  std::lock_guard lock(mutex_);
  declare_locked(op, scope);
}

void Tracer::record(const OperationDescriptor& op, std::span<const std::string> sources,
                    std::span<const std::string> outputs,
                    const std::optional<std::string>& scope, Verbosity min_level) {
  if (!accepts(scope, min_level)) return;
  if (outputs.empty()) throw ProvenanceError("record for " + op.name + " has no outputs");
  for (const std::string& out : outputs) {
    if (std::find(sources.begin(), sources.end(), out) != sources.end()) {
      throw SelfDerivation("data item " + out + " cannot derive from itself in " + op.name);
    }
  }
  std::lock_guard lock(mutex_);
  declare_locked(op, scope);
  for (const std::string& out : outputs) {
    records_.push_back(
        {out, op.id, std::vector<std::string>(sources.begin(), sources.end()), min_level});
  }
}

void Tracer::merge(const Tracer& other) {
  if (&other == this) return;
  std::scoped_lock lock(mutex_, other.mutex_);
  records_.insert(records_.end(), other.records_.begin(), other.records_.end());
  for (const auto& [id, op] : other.operations_) operations_.try_emplace(id, op);
  for (const auto& [id, scope] : other.scopes_) scopes_.try_emplace(id, scope);
}

Tracer Tracer::restricted(Verbosity level) const {
  Tracer out(level);
  std::lock_guard lock(mutex_);
  for (const auto& [id, scope] : scopes_) {
    if (out.accepts(scope, Verbosity::steps)) out.declare_locked(operations_.at(id), scope);
  }
  for (const ProvenanceRecord& r : records_) {
    if (out.scopes_.contains(r.op_id) && out.accepts(out.scopes_.at(r.op_id), r.min_level)) {
      out.records_.push_back(r);
    }
  }
  return out;
}

std::vector<ProvenanceRecord> Tracer::records() const {
  std::lock_guard lock(mutex_);
  return records_;
}

std::map<std::string, OperationDescriptor> Tracer::operations() const {
  std::lock_guard lock(mutex_);
  return operations_;
}

std::map<std::string, std::optional<std::string>> Tracer::scopes() const {
  std::lock_guard lock(mutex_);
  return scopes_;
}

std::size_t ProvGraph::depth() const {
  std::size_t deepest = 0;
  for (const auto& [id, sub] : sub_graphs) deepest = std::max(deepest, 1 + sub.depth());
  return deepest;
}

namespace {

struct TraceView {
  std::vector<ProvenanceRecord> records;
  std::map<std::string, OperationDescriptor> operations;
  std::map<std::string, std::optional<std::string>> scopes;
};

ProvGraph build_scope(const TraceView& trace, const std::optional<std::string>& scope) {
  ProvGraph g;
  for (const auto& [op_id, op_scope] : trace.scopes) {
    if (op_scope != scope) continue;
    const OperationDescriptor& op = trace.operations.at(op_id);
    g.activities.emplace(op_id, Activity{op.id, op.name, op.config, op.composite});
    if (op.composite) {
      ProvGraph inner = build_scope(trace, op_id);
      if (!inner.empty()) g.sub_graphs.emplace(op_id, std::move(inner));
    }
  }
  std::map<std::string, std::string> generator;
  for (const ProvenanceRecord& r : trace.records) {
    if (!g.activities.contains(r.op_id)) continue;
    g.entities.insert(r.data_item_id);
    const auto [it, fresh] = generator.emplace(r.data_item_id, r.op_id);
    if (!fresh && it->second != r.op_id) {
      throw ProvenanceError("entity " + r.data_item_id + " generated by two activities");
    }
    g.generated.emplace(r.data_item_id, r.op_id);
    for (const std::string& src : r.source_ids) {
      g.entities.insert(src);
      g.used.emplace(r.op_id, src);
      g.derived.emplace(r.data_item_id, src);
    }
  }
  for (const auto& [activity, entity] : g.used) {
    const auto it = generator.find(entity);
    if (it != generator.end() && it->second != activity) g.informed.emplace(activity, it->second);
  }
  return g;
}

void require_acyclic(const ProvGraph& g) {
  if (!is_acyclic(g)) throw CycleDetected("provenance graph contains a cycle");
  for (const auto& [id, sub] : g.sub_graphs) require_acyclic(sub);
}

}  // namespace

ProvGraph build_graph(const Tracer& tracer) {
  const TraceView trace{tracer.records(), tracer.operations(), tracer.scopes()};
  ProvGraph g = build_scope(trace, std::nullopt);
  require_acyclic(g);
  return g;
}

bool is_acyclic(const ProvGraph& graph) {
  // nodes: entities and activities; arcs follow data flow
  std::unordered_map<std::string, std::vector<std::string>> out;
  std::unordered_map<std::string, std::size_t> indegree;
  for (const auto& e : graph.entities) indegree.try_emplace(e, 0);
  for (const auto& [a, act] : graph.activities) indegree.try_emplace(a, 0);
  auto arc = [&](const std::string& from, const std::string& to) {
    out[from].push_back(to);
    ++indegree[to];
    indegree.try_emplace(from, 0);
  };
  for (const auto& [activity, entity] : graph.used) arc(entity, activity);
  for (const auto& [entity, activity] : graph.generated) arc(activity, entity);
  std::deque<std::string> ready;
  for (const auto& [node, deg] : indegree) {
    if (deg == 0) ready.push_back(node);
  }
  std::size_t visited = 0;
  while (!ready.empty()) {
    const std::string node = ready.front();
    ready.pop_front();
    ++visited;
    for (const std::string& next : out[node]) {
      if (--indegree[next] == 0) ready.push_back(next);
    }
  }
  return visited == indegree.size();
}

namespace {

json value_to_json(const Value& v) {
  struct Visitor {
    json operator()(std::monostate) const { return nullptr; }
    json operator()(bool b) const { return b; }
    json operator()(std::int64_t i) const { return i; }
    json operator()(double d) const { return d; }
    json operator()(const std::string& s) const { return s; }
  };
  return std::visit(Visitor{}, v);
}

Value value_from_json(const json& j) {
  if (j.is_null()) return std::monostate{};
  if (j.is_boolean()) return j.get<bool>();
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number_float()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  return j.dump();
}

json edges_to_json(const std::set<Edge>& edges, const char* prefix, const char* from_key,
                   const char* to_key) {
  json obj = json::object();
  std::size_t n = 0;
  for (const auto& [from, to] : edges) {
    obj[std::string("_:") + prefix + std::to_string(n++)] = {{from_key, from}, {to_key, to}};
  }
  return obj;
}

json graph_to_json(const ProvGraph& g, bool top_level) {
  json doc = json::object();
  if (top_level) {
    doc["prefix"] = {{"prov", "http://www.w3.org/ns/prov#"}, {"cf", "urn:cliniflow:"}};
  }
  json entities = json::object();
  for (const auto& e : g.entities) entities[e] = json::object();
  doc["entity"] = std::move(entities);
  json activities = json::object();
  for (const auto& [id, act] : g.activities) {
    json a = {{"prov:label", act.name}, {"cf:composite", act.composite}};
    json config = json::object();
    for (const auto& [k, v] : act.config) config[k] = value_to_json(v);
    a["cf:config"] = std::move(config);
    if (const auto it = g.sub_graphs.find(id); it != g.sub_graphs.end()) {
      a["members"] = graph_to_json(it->second, false);
    }
    activities[id] = std::move(a);
  }
  doc["activity"] = std::move(activities);
  doc["used"] = edges_to_json(g.used, "u", "prov:activity", "prov:entity");
  doc["wasGeneratedBy"] = edges_to_json(g.generated, "g", "prov:entity", "prov:activity");
  doc["wasDerivedFrom"] =
      edges_to_json(g.derived, "d", "prov:generatedEntity", "prov:usedEntity");
  doc["wasInformedBy"] = edges_to_json(g.informed, "i", "prov:informed", "prov:informant");
  return doc;
}

std::string dot_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out + "\"";
}

void graph_to_dot(const ProvGraph& g, const std::string& ns, const std::string& indent,
                  std::ostringstream& os) {
  auto node = [&ns](const std::string& id) { return dot_quote(ns + id); };
  for (const auto& e : g.entities) os << indent << node(e) << " [shape=ellipse];\n";
  for (const auto& [id, act] : g.activities) {
    os << indent << node(id) << " [shape=box, label=" << dot_quote(act.name) << "];\n";
  }
  for (const auto& [a, e] : g.used) {
    os << indent << node(a) << " -> " << node(e) << " [label=\"used\"];\n";
  }
  for (const auto& [e, a] : g.generated) {
    os << indent << node(e) << " -> " << node(a) << " [label=\"wasGeneratedBy\"];\n";
  }
  for (const auto& [to, from] : g.derived) {
    os << indent << node(to) << " -> " << node(from) << " [label=\"wasDerivedFrom\"];\n";
  }
  for (const auto& [to, from] : g.informed) {
    os << indent << node(to) << " -> " << node(from) << " [label=\"wasInformedBy\"];\n";
  }
  for (const auto& [id, sub] : g.sub_graphs) {
    const auto& act = g.activities.at(id);
    os << indent << "subgraph " << dot_quote("cluster_" + ns + id) << " {\n";
    os << indent << "  label=" << dot_quote(act.name) << ";\n";
    graph_to_dot(sub, ns + id + "/", indent + "  ", os);
    os << indent << "}\n";
  }
}

std::set<Edge> edges_from_json(const json& obj, const char* from_key, const char* to_key) {
  std::set<Edge> edges;
  for (const auto& [key, rec] : obj.items()) {
    edges.emplace(rec.at(from_key).get<std::string>(), rec.at(to_key).get<std::string>());
  }
  return edges;
}

ProvGraph graph_from_json(const json& doc) {
  static const char* kKeys[] = {"entity", "activity", "used", "wasGeneratedBy", "wasDerivedFrom",
                                "wasInformedBy"};
  for (const char* key : kKeys) {
    if (!doc.contains(key) || !doc.at(key).is_object()) {
      throw MalformedJson(std::string("PROV-JSON document lacks object '") + key + "'");
    }
  }
  ProvGraph g;
  for (const auto& [id, rec] : doc.at("entity").items()) g.entities.insert(id);
  for (const auto& [id, rec] : doc.at("activity").items()) {
    Activity a;
    a.id = id;
    a.name = rec.value("prov:label", "");
    a.composite = rec.value("cf:composite", false);
    if (rec.contains("cf:config")) {
      for (const auto& [k, v] : rec.at("cf:config").items()) a.config[k] = value_from_json(v);
    }
    if (rec.contains("members")) g.sub_graphs.emplace(id, graph_from_json(rec.at("members")));
    g.activities.emplace(id, std::move(a));
  }
  g.used = edges_from_json(doc.at("used"), "prov:activity", "prov:entity");
  g.generated = edges_from_json(doc.at("wasGeneratedBy"), "prov:entity", "prov:activity");
  g.derived = edges_from_json(doc.at("wasDerivedFrom"), "prov:generatedEntity", "prov:usedEntity");
  g.informed = edges_from_json(doc.at("wasInformedBy"), "prov:informed", "prov:informant");
  return g;
}

}  // namespace

std::string export_prov(const ProvGraph& graph, ExportFormat format) {
  if (format == ExportFormat::prov_json) return graph_to_json(graph, true).dump(2) + "\n";
  std::ostringstream os;
  os << "digraph provenance {\n";
  graph_to_dot(graph, "", "  ", os);
  os << "}\n";
  return os.str();
}

ProvGraph parse_prov_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw MalformedJson(std::string("PROV-JSON: ") + e.what());
  }
  if (!doc.is_object()) throw MalformedJson("PROV-JSON: top level is not an object");
  try {
    return graph_from_json(doc);
  } catch (const json::exception& e) {
    throw MalformedJson(std::string("PROV-JSON: ") + e.what());
  }
}

namespace {

// Weisfeiler-Lehman colour refinement over the typed edges.
std::vector<std::string> refined_colours(const ProvGraph& g) {
  std::map<std::string, std::string> colour;
  for (const auto& e : g.entities) colour[e] = "E";
  for (const auto& [id, act] : g.activities) {
    std::ostringstream os;
    os << "A:" << act.name << ":" << act.composite;
    for (const auto& [k, v] : act.config) os << ";" << k << "=" << cliniflow::to_string(v);
    if (const auto it = g.sub_graphs.find(id); it != g.sub_graphs.end()) {
      os << ":" << fingerprint(it->second);
    }
    colour[id] = os.str();
  }
  auto distinct = [](const std::map<std::string, std::string>& c) {
    std::set<std::string> seen;
    for (const auto& [node, value] : c) seen.insert(value);
    return seen.size();
  };
  std::hash<std::string> hasher;
  std::size_t classes = distinct(colour);
  for (std::size_t round = 0; round <= colour.size(); ++round) {
    std::map<std::string, std::vector<std::string>> signature;
    auto add = [&](const std::set<Edge>& edges, const char* tag) {
      for (const auto& [from, to] : edges) {
        signature[from].push_back(std::string(">") + tag + colour[to]);
        signature[to].push_back(std::string("<") + tag + colour[from]);
      }
    };
    add(g.used, "u");
    add(g.generated, "g");
    add(g.derived, "d");
    add(g.informed, "i");
    std::map<std::string, std::string> next;
    for (const auto& [node, c] : colour) {
      auto sig = signature[node];
      std::sort(sig.begin(), sig.end());
      std::string joined = c;
      for (const auto& s : sig) joined += "|" + s;
      next[node] = std::to_string(hasher(joined));
    }
    colour = std::move(next);
    const std::size_t refined = distinct(colour);
    if (refined == classes && round > 0) break;
    classes = refined;
  }
  std::vector<std::string> colours;
  for (const auto& [node, c] : colour) colours.push_back(c);
  std::sort(colours.begin(), colours.end());
  return colours;
}

}  // namespace

std::string fingerprint(const ProvGraph& graph) {
  std::ostringstream os;
  os << graph.entities.size() << "/" << graph.activities.size() << "/" << graph.used.size() << "/"
     << graph.generated.size() << "/" << graph.derived.size() << "/" << graph.informed.size();
  std::string joined;
  for (const auto& c : refined_colours(graph)) joined += c + ",";
  os << "#" << std::hash<std::string>{}(joined);
  return os.str();
}

}  // namespace cliniflow::provenance
