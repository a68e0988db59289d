#include <map>

#include "cliniflow/core/unicode.hpp"
#include "cliniflow/errors.hpp"
#include "cliniflow/pipeline/pipeline.hpp"
#include "cliniflow/text/operations.hpp"

namespace cliniflow::pipeline {

namespace tx = cliniflow::text;

namespace {

// --------------------------------------------------------- param helpers

template <typename T>
T param(const Json& params, const char* key, T fallback) {
  if (!params.contains(key)) return fallback;
  try {
    return params.at(key).get<T>();
  } catch (const Json::exception&) {
    throw ConfigError(std::string("parameter \"") + key + "\" has the wrong type");
  }
}

std::vector<std::string> string_list(const Json& params, const char* key) {
  return param<std::vector<std::string>>(params, key, {});
}

const Json& required(const Json& params, const char* key) {
  if (!params.contains(key)) throw ConfigError(std::string("missing parameter \"") + key + "\"");
  return params.at(key);
}

void reject_unknown(const Json& params, std::initializer_list<const char*> known) {
  for (const auto& [key, value] : params.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ConfigError("unknown parameter \"" + key + "\"");
  }
}

// Text-bearing input: a document contributes its raw segment.
Segment segment_of(const Datum& d, const char* op) {
  if (const auto* doc = std::get_if<Document>(&d)) return doc->raw_segment();
  if (const Segment* seg = as_segment(std::get<Annotation>(d))) return *seg;
  throw InvalidAnnotation(std::string(op) + " expects documents or segments, got a relation");
}

template <typename T>
Slot to_slot(std::vector<T> items) {
  Slot out;
  out.reserve(items.size());
  for (T& item : items) out.emplace_back(Annotation(std::move(item)));
  return out;
}

template <typename Fn>
class FnItemOperation : public ItemOperation {
 public:
  explicit FnItemOperation(Fn fn) : fn_(std::move(fn)) {}
  std::vector<Slot> apply(std::span<const Datum* const> items) const override {
    return fn_(*items[0]);
  }

 private:
  Fn fn_;
};

template <typename Fn>
std::shared_ptr<const Operation> item_op(Fn fn) {
  return std::make_shared<const FnItemOperation<Fn>>(std::move(fn));
}

// ------------------------------------------------------------ operations

std::shared_ptr<const Operation> make_split_sentences(const Json& params, const BuildContext&) {
  reject_unknown(params, {"punct", "keep_punct"});
  const std::u32string punct =
      unicode::decode(param<std::string>(params, "punct", unicode::encode(tx::kDefaultPunct)));
  const bool keep = param<bool>(params, "keep_punct", true);
  return item_op([punct, keep](const Datum& d) {
    return std::vector<Slot>{to_slot(tx::split_sentences(segment_of(d, "split_sentences"), punct, keep))};
  });
}

std::shared_ptr<const Operation> make_deidentify(const Json& params, const BuildContext&) {
  reject_unknown(params, {"rules"});
  std::vector<tx::DeidRule> rules;
  if (params.contains("rules")) {
    for (const Json& r : params.at("rules")) {
      tx::DeidRule rule{param<std::string>(r, "pattern", ""), param<std::string>(r, "placeholder", "")};
      if (rule.pattern.empty() || rule.placeholder.empty()) {
        throw ConfigError("deidentify rules need a pattern and a placeholder");
      }
      rules.push_back(std::move(rule));
    }
  } else {
    rules = tx::default_deid_rules();
  }
  for (const auto& r : rules) tx::Pattern check(r.pattern);
  return item_op([rules](const Datum& d) {
    tx::DeidResult r = tx::deidentify(segment_of(d, "deidentify"), rules);
    return std::vector<Slot>{Slot{Annotation(std::move(r.segment))}, to_slot(std::move(r.phi))};
  });
}

std::shared_ptr<const Operation> make_match_dictionary(const Json& params, const BuildContext& ctx) {
  reject_unknown(params, {"dictionary", "entries", "strip_accents"});
  std::vector<tx::DictionaryEntry> entries;
  if (params.contains("dictionary")) {
    std::filesystem::path file = param<std::string>(params, "dictionary", "");
    if (file.is_relative()) file = ctx.base_dir / file;
    entries = tx::load_dictionary(file);
  }
  if (params.contains("entries")) {
    for (const Json& e : params.at("entries")) {
      tx::DictionaryEntry entry{param<std::string>(e, "term", ""), param<std::string>(e, "label", ""),
                                std::nullopt, param<bool>(e, "case_sensitive", false)};
      if (e.contains("norm_id")) entry.norm_id = param<std::string>(e, "norm_id", "");
      entries.push_back(std::move(entry));
    }
  }
  if (entries.empty()) throw ConfigError("match_dictionary needs \"dictionary\" or \"entries\"");
  auto matcher = std::make_shared<const tx::DictionaryMatcher>(std::move(entries),
                                                                param<bool>(params, "strip_accents", false));
  return item_op([matcher](const Datum& d) {
    return std::vector<Slot>{to_slot(matcher->match(segment_of(d, "match_dictionary")))};
  });
}

std::shared_ptr<const Operation> make_match_regex(const Json& params, const BuildContext&) {
  reject_unknown(params, {"rules"});
  std::vector<tx::RegexRule> rules;
  for (const Json& r : required(params, "rules")) {
    tx::RegexRule rule{param<std::string>(r, "pattern", ""), param<std::string>(r, "label", ""),
                       std::nullopt, std::nullopt, param<bool>(r, "case_sensitive", true)};
    if (r.contains("exclusion_pattern")) {
      rule.exclusion_pattern = param<std::string>(r, "exclusion_pattern", "");
    }
    if (r.contains("group")) rule.group = param<std::size_t>(r, "group", 0);
    rules.push_back(std::move(rule));
  }
  auto matcher = std::make_shared<const tx::RegexMatcher>(std::move(rules));
  return item_op([matcher](const Datum& d) {
    return std::vector<Slot>{to_slot(matcher->match(segment_of(d, "match_regex")))};
  });
}

std::shared_ptr<const Operation> make_match_dates(const Json& params, const BuildContext&) {
  reject_unknown(params, {});
  return item_op([](const Datum& d) {
    return std::vector<Slot>{to_slot(tx::match_dates(segment_of(d, "match_dates")))};
  });
}

tx::ContextRuleSet context_rules(const Json& params) {
  reject_unknown(params, {"preset", "attribute_label", "cues_before", "cues_after", "terminators",
                          "max_token_window"});
  tx::ContextRuleSet rules{"", {}, {}, tx::default_terminators(), 5};
  if (params.contains("preset")) {
    static const std::map<std::string, tx::ContextRuleSet (*)()> presets = {
        {"negation", tx::negation_rules},
        {"hypothesis", tx::hypothesis_rules},
        {"antecedent", tx::antecedent_rules}};
    const auto name = param<std::string>(params, "preset", "");
    const auto it = presets.find(name);
    if (it == presets.end()) throw ConfigError("unknown context preset \"" + name + "\"");
    rules = it->second();
  }
  rules.attribute_label = param<std::string>(params, "attribute_label", rules.attribute_label);
  if (params.contains("cues_before")) rules.cues_before = string_list(params, "cues_before");
  if (params.contains("cues_after")) rules.cues_after = string_list(params, "cues_after");
  if (params.contains("terminators")) rules.terminators = string_list(params, "terminators");
  rules.max_token_window = param<std::size_t>(params, "max_token_window", rules.max_token_window);
  return rules;
}

// Inputs: sentences, then the entities found in them. Entities come out in
// input order with one attribute added; their ids do not change.
class DetectContext : public Operation {
 public:
  explicit DetectContext(tx::ContextRuleSet rules) : detector_(std::move(rules)) {}

  std::vector<Slot> run(std::span<const Slot> inputs, const RunContext& ctx) const override {
    std::vector<Segment> sentences;
    for (const Datum& d : inputs[0]) sentences.push_back(segment_of(d, "detect_context"));
    Slot out = inputs[1];
    std::vector<std::vector<std::size_t>> members(sentences.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
      const auto* ann = std::get_if<Annotation>(&out[i]);
      const Segment* seg = ann ? as_segment(*ann) : nullptr;
      if (seg == nullptr) throw InvalidAnnotation("detect_context expects entities");
      std::size_t s = 0;
      while (s < sentences.size() &&
             (spans::normalize_spans(seg->spans).empty() ||
              !tx::projects_within(seg->spans, sentences[s].spans))) {
        ++s;
      }
      if (s == sentences.size()) throw ScopeError("entity " + seg->id + " lies in no sentence");
      members[s].push_back(i);
    }
    for (std::size_t s = 0; s < sentences.size(); ++s) {
      if (members[s].empty()) continue;
      std::vector<Entity> entities;
      for (std::size_t i : members[s]) {
        const Segment& seg = *as_segment(std::get<Annotation>(out[i]));
        Entity e;
        static_cast<Segment&>(e) = seg;
        entities.push_back(std::move(e));
      }
      const auto found = detector_.detect(sentences[s], entities);
      for (std::size_t k = 0; k < found.size(); ++k) {
        AnnotationBase& target = base_of(std::get<Annotation>(out[members[s][k]]));
        target.attributes.push_back(found[k].second);
        const std::string sources[] = {sentences[s].id, target.id};
        const std::string outputs[] = {found[k].second.id};
        ctx.record(sources, outputs, provenance::Verbosity::full);
      }
    }
    return {std::move(out)};
  }

 private:
  tx::ContextDetector detector_;
};

std::shared_ptr<const Operation> make_detect_context(const Json& params, const BuildContext&) {
  return std::make_shared<const DetectContext>(context_rules(params));
}

}  // namespace

Registry builtin_registry() {
  Registry r;
  r.register_operation("split_sentences", {make_split_sentences, 1, 1, 1, 1});
  r.register_operation("deidentify", {make_deidentify, 1, 1, 1, 2});
  r.register_operation("match_dictionary", {make_match_dictionary, 1, 1, 1, 1});
  r.register_operation("match_regex", {make_match_regex, 1, 1, 1, 1});
  r.register_operation("match_dates", {make_match_dates, 1, 1, 1, 1});
  r.register_operation("detect_context", {make_detect_context, 2, 2, 1, 1});
  return r;
}

}  // namespace cliniflow::pipeline
