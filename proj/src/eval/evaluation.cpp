#include "cliniflow/eval/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

#include "cliniflow/errors.hpp"

namespace cliniflow::eval {

namespace sp = cliniflow::spans;

MatchMode parse_match_mode(const std::string& name) {
  if (name == "exact") return MatchMode::exact;
  if (name == "overlap") return MatchMode::overlap;
  throw ConfigError("unknown match mode '" + name + "' (expected exact or overlap)");
}

namespace {

std::size_t covered(const std::vector<sp::OriginalSpan>& s) {
  std::size_t n = 0;
  for (const auto& x : s) n += x.length();
  return n;
}

// Both inputs sorted and internally disjoint, as normalize_spans returns.
std::size_t intersection(const std::vector<sp::OriginalSpan>& a,
                         const std::vector<sp::OriginalSpan>& b) {
  std::size_t n = 0, i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const std::size_t lo = std::max(a[i].start, b[j].start);
    const std::size_t hi = std::min(a[i].end, b[j].end);
    if (lo < hi) n += hi - lo;
    if (a[i].end < b[j].end) {
      ++i;
    } else {
      ++j;
    }
  }
  return n;
}

double iou_of(const std::vector<sp::OriginalSpan>& a, const std::vector<sp::OriginalSpan>& b) {
  const std::size_t inter = intersection(a, b);
  const std::size_t uni = covered(a) + covered(b) - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

std::string fixed(double v) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4) << v;
  return out.str();
}

}  // namespace

double iou(const sp::SpanChain& a, const sp::SpanChain& b) {
  return iou_of(sp::normalize_spans(a), sp::normalize_spans(b));
}

Alignment align_entities(const std::vector<Entity>& pred, const std::vector<Entity>& ref,
                         const MatchSpec& spec) {
  if (!(spec.iou_threshold > 0.0 && spec.iou_threshold <= 1.0)) {
    throw ConfigError("IoU threshold must lie in (0, 1]");
  }
  std::vector<std::vector<sp::OriginalSpan>> ps, rs;
  for (const Entity& e : pred) ps.push_back(sp::normalize_spans(e.spans));
  for (const Entity& e : ref) rs.push_back(sp::normalize_spans(e.spans));

  struct Candidate {
    double iou;
    std::size_t ref_start, pred_start, r, p;
  };
  std::vector<Candidate> candidates;
  for (std::size_t r = 0; r < ref.size(); ++r) {
    if (rs[r].empty()) continue;
    for (std::size_t p = 0; p < pred.size(); ++p) {
      if (ps[p].empty()) continue;
      if (spec.label_sensitive && pred[p].label != ref[r].label) continue;
      double score = 0.0;
      if (spec.mode == MatchMode::exact) {
        if (ps[p] != rs[r]) continue;
        score = 1.0;
      } else {
        score = iou_of(ps[p], rs[r]);
        if (score < spec.iou_threshold || score == 0.0) continue;
      }
      candidates.push_back({score, rs[r].front().start, ps[p].front().start, r, p});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.iou != b.iou) return a.iou > b.iou;
    if (a.ref_start != b.ref_start) return a.ref_start < b.ref_start;
    if (a.pred_start != b.pred_start) return a.pred_start < b.pred_start;
    if (a.r != b.r) return a.r < b.r;
    return a.p < b.p;
  });

  Alignment out;
  std::vector<bool> p_used(pred.size()), r_used(ref.size());
  for (const Candidate& c : candidates) {
    if (p_used[c.p] || r_used[c.r]) continue;
    p_used[c.p] = r_used[c.r] = true;
    out.matches.emplace_back(pred[c.p].id, ref[c.r].id);
  }
  for (std::size_t p = 0; p < pred.size(); ++p) {
    if (!p_used[p]) out.unmatched_pred.push_back(pred[p].id);
  }
  for (std::size_t r = 0; r < ref.size(); ++r) {
    if (!r_used[r]) out.unmatched_ref.push_back(ref[r].id);
  }
  return out;
}

double Counts::precision() const { return ratio(tp, tp + fp); }
double Counts::recall() const { return ratio(tp, tp + fn); }
double Counts::f1() const {
  const double p = precision(), r = recall();
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

Counts& Counts::operator+=(const Counts& o) {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  return *this;
}

Metrics& Metrics::operator+=(const Metrics& o) {
  for (const auto& [label, c] : o.per_label) per_label[label] += c;
  micro += o.micro;
  return *this;
}

Metrics score(const Alignment& alignment, const std::vector<Entity>& pred,
              const std::vector<Entity>& ref) {
  std::map<std::string, const Entity*> by_id;
  for (const Entity& e : pred) by_id.emplace(e.id, &e);
  for (const Entity& e : ref) by_id.emplace(e.id, &e);
  auto label = [&](const std::string& id) -> const std::string& {
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw InvalidAnnotation("alignment refers to unknown entity " + id);
    return it->second->label;
  };
  Metrics m;
  for (const auto& [p, r] : alignment.matches) ++m.per_label[label(r)].tp;
  for (const auto& p : alignment.unmatched_pred) ++m.per_label[label(p)].fp;
  for (const auto& r : alignment.unmatched_ref) ++m.per_label[label(r)].fn;
  for (const auto& [l, c] : m.per_label) m.micro += c;
  return m;
}

Metrics evaluate(const std::vector<Entity>& pred, const std::vector<Entity>& ref,
                 const MatchSpec& spec) {
  return score(align_entities(pred, ref, spec), pred, ref);
}

nlohmann::ordered_json to_json(const Metrics& m) {
  auto counts = [](const Counts& c) {
    return nlohmann::ordered_json{{"tp", c.tp},
                                  {"fp", c.fp},
                                  {"fn", c.fn},
                                  {"precision", c.precision()},
                                  {"recall", c.recall()},
                                  {"f1", c.f1()}};
  };
  nlohmann::ordered_json labels = nlohmann::ordered_json::object();
  for (const auto& [label, c] : m.per_label) labels[label] = counts(c);
  return {{"per_label", labels}, {"micro", counts(m.micro)}};
}

namespace {

std::string render(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& row : rows) {
    width.resize(std::max(width.size(), row.size()));
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream out;
  for (const auto& row : rows) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c == 0) {
        line += row[c] + std::string(width[c] - row[c].size(), ' ');
      } else {
        line += "  " + std::string(width[c] - row[c].size(), ' ') + row[c];
      }
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out << line << '\n';
  }
  return out.str();
}

std::vector<std::string> metric_row(const std::string& name, const Counts& c) {
  return {name, std::to_string(c.tp), std::to_string(c.fp), std::to_string(c.fn),
          fixed(c.precision()), fixed(c.recall()), fixed(c.f1())};
}

}  // namespace

std::string format_metrics(const Metrics& m, const std::string& title) {
  std::vector<std::vector<std::string>> rows{{"label", "tp", "fp", "fn", "P", "R", "F1"}};
  for (const auto& [label, c] : m.per_label) rows.push_back(metric_row(label, c));
  rows.push_back(metric_row("micro", m.micro));
  return title + "\n" + render(rows);
}

Comparison compare_runs(const Metrics& a, const Metrics& b, const std::string& name_a,
                        const std::string& name_b) {
  std::set<std::string> labels;
  for (const auto& [l, c] : a.per_label) labels.insert(l);
  for (const auto& [l, c] : b.per_label) labels.insert(l);

  std::vector<std::vector<std::string>> rows{{"label", "P " + name_a, "R " + name_a, "F1 " + name_a,
                                              "P " + name_b, "R " + name_b, "F1 " + name_b,
                                              "dF1"}};
  auto add = [&](const std::string& name, const Counts* ca, const Counts* cb) {
    std::vector<std::string> row{name};
    for (const Counts* c : {ca, cb}) {
      if (c == nullptr) {
        row.insert(row.end(), {"-", "-", "-"});
      } else {
        row.insert(row.end(), {fixed(c->precision()), fixed(c->recall()), fixed(c->f1())});
      }
    }
    if (ca != nullptr && cb != nullptr) {
      const double d = cb->f1() - ca->f1();
      row.push_back((d >= 0 ? "+" : "") + fixed(d));
    } else {
      row.push_back("-");
    }
    rows.push_back(std::move(row));
  };
  for (const auto& l : labels) {
    const auto ia = a.per_label.find(l);
    const auto ib = b.per_label.find(l);
    add(l, ia == a.per_label.end() ? nullptr : &ia->second,
        ib == b.per_label.end() ? nullptr : &ib->second);
  }
  add("micro", &a.micro, &b.micro);

  Comparison out;
  const double fa = a.micro.f1(), fb = b.micro.f1();
  if (std::abs(fa - fb) <= 1e-12) {
    out.winner = "tie";
  } else {
    out.winner = fa > fb ? name_a : name_b;
  }
  out.table = render(rows) + "winner: " + out.winner + "\n";
  return out;
}

}  // namespace cliniflow::eval
