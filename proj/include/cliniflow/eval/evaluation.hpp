#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "cliniflow/core/model.hpp"

namespace cliniflow::eval {

enum class MatchMode { exact, overlap };

// Throws ConfigError for unknown names.
MatchMode parse_match_mode(const std::string& name);

struct MatchSpec {
  MatchMode mode = MatchMode::exact;
  double iou_threshold = 0.5;  // in (0, 1], overlap mode only
  bool label_sensitive = true;
};

struct Alignment {
  std::vector<std::pair<std::string, std::string>> matches;  // (pred id, ref id)
  std::vector<std::string> unmatched_pred;
  std::vector<std::string> unmatched_ref;
};

// Intersection over union of the raw-text character sets of two chains.
double iou(const spans::SpanChain& a, const spans::SpanChain& b);

// One-to-one greedy matching by descending IoU, ties broken by reference
// start then prediction start. Exact mode pairs entities whose normalized
// spans are equal. Throws ConfigError for a threshold outside (0, 1].
Alignment align_entities(const std::vector<Entity>& pred, const std::vector<Entity>& ref,
                         const MatchSpec& spec);

struct Counts {
  std::size_t tp = 0, fp = 0, fn = 0;

  double precision() const;
  double recall() const;
  double f1() const;

  Counts& operator+=(const Counts& o);
  friend bool operator==(const Counts&, const Counts&) = default;
};

struct Metrics {
  std::map<std::string, Counts> per_label;
  Counts micro;

  // Sums counts; scores are always derived from the summed counts.
  Metrics& operator+=(const Metrics& o);
  friend bool operator==(const Metrics&, const Metrics&) = default;
};

// Matches count toward the reference label.
Metrics score(const Alignment& alignment, const std::vector<Entity>& pred,
              const std::vector<Entity>& ref);

Metrics evaluate(const std::vector<Entity>& pred, const std::vector<Entity>& ref,
                 const MatchSpec& spec);

nlohmann::ordered_json to_json(const Metrics& m);
std::string format_metrics(const Metrics& m, const std::string& title);

struct Comparison {
  std::string winner;  // name of the run with the higher micro F1, or "tie"
  std::string table;
};

// Labels are the union of both runs; a label a run never saw shows "-".
Comparison compare_runs(const Metrics& a, const Metrics& b, const std::string& name_a = "A",
                        const std::string& name_b = "B");

}  // namespace cliniflow::eval
