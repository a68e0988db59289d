#pragma once

// Randomized operation sequences run side by side through the span engine
// and the character-provenance oracle.

#include <algorithm>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cliniflow/spans/span.hpp"
#include "support/char_oracle.hpp"

namespace fuzz {

namespace sp = cliniflow::spans;

inline char32_t random_char(std::mt19937_64& rng) {
  static const std::u32string alphabet =
      U"abcdefghij XYZ.,0123456789\néèàçüȨ́́日本語ß\U0001F600\U0001F9EC";
  return alphabet[std::uniform_int_distribution<std::size_t>(0, alphabet.size() - 1)(rng)];
}

inline std::u32string random_text(std::mt19937_64& rng, std::size_t max_len) {
  const auto n = std::uniform_int_distribution<std::size_t>(0, max_len)(rng);
  std::u32string s;
  for (std::size_t i = 0; i < n; ++i) s.push_back(random_char(rng));
  return s;
}

inline std::vector<sp::Range> random_ranges(std::mt19937_64& rng, std::size_t n, std::size_t max_k) {
  const auto k = std::uniform_int_distribution<std::size_t>(0, max_k)(rng);
  std::vector<std::size_t> cuts;
  std::uniform_int_distribution<std::size_t> pos(0, n);
  for (std::size_t i = 0; i < 2 * k; ++i) cuts.push_back(pos(rng));
  std::sort(cuts.begin(), cuts.end());
  std::vector<sp::Range> ranges;
  for (std::size_t i = 0; i + 1 < cuts.size(); i += 2) ranges.push_back({cuts[i], cuts[i + 1]});
  return ranges;
}

struct State {
  sp::SpannedText impl;
  oracle::Tagged model;
};

// Returns an empty string on success, otherwise a description of the first
// divergence. `steps` receives the number of checked operations.
inline std::string run_sequence(std::mt19937_64& rng, std::size_t max_ops, std::size_t max_len,
                                std::size_t& steps) {
  const std::u32string raw = random_text(rng, max_len);
  State st{{raw, sp::identity_chain(raw.size())}, oracle::from_raw(raw)};
  const auto ops = std::uniform_int_distribution<std::size_t>(1, max_ops)(rng);
  std::ostringstream log;
  for (std::size_t step = 0; step < ops; ++step) {
    const std::size_t n = st.impl.text.size();
    const int kind = std::uniform_int_distribution<int>(0, 4)(rng);
    switch (kind) {
      case 0: {
        auto ranges = random_ranges(rng, n, 3);
        st.impl = sp::extract(st.impl.text, st.impl.spans, ranges);
        st.model = oracle::extract(st.model, ranges);
        log << "extract ";
        break;
      }
      case 1: {
        auto ranges = random_ranges(rng, n, 3);
        std::vector<std::u32string> reps;
        for (std::size_t i = 0; i < ranges.size(); ++i) reps.push_back(random_text(rng, 5));
        st.impl = sp::replace(st.impl.text, st.impl.spans, ranges, reps);
        st.model = oracle::replace(st.model, ranges, reps);
        log << "replace ";
        break;
      }
      case 2: {
        auto ranges = random_ranges(rng, n, 3);
        st.impl = sp::remove(st.impl.text, st.impl.spans, ranges);
        st.model = oracle::replace(st.model, ranges, std::vector<std::u32string>(ranges.size()));
        log << "remove ";
        break;
      }
      case 3: {
        const auto k = std::uniform_int_distribution<std::size_t>(0, 3)(rng);
        std::vector<std::size_t> positions;
        for (std::size_t i = 0; i < k; ++i) {
          positions.push_back(std::uniform_int_distribution<std::size_t>(0, n)(rng));
        }
        std::sort(positions.begin(), positions.end());
        std::vector<std::u32string> inserts;
        std::vector<sp::Range> as_ranges;
        for (std::size_t p : positions) {
          inserts.push_back(random_text(rng, 4));
          as_ranges.push_back({p, p});
        }
        st.impl = sp::insert(st.impl.text, st.impl.spans, positions, inserts);
        st.model = oracle::replace(st.model, as_ranges, inserts);
        log << "insert ";
        break;
      }
      default: {
        const auto parts_n = std::uniform_int_distribution<std::size_t>(0, 3)(rng);
        std::vector<sp::SpannedText> parts;
        std::vector<oracle::Tagged> model_parts;
        for (std::size_t i = 0; i < parts_n; ++i) {
          auto ranges = random_ranges(rng, n, 1);
          if (ranges.empty()) ranges.push_back({0, n});
          parts.push_back(sp::extract(st.impl.text, st.impl.spans, ranges));
          model_parts.push_back(oracle::extract(st.model, ranges));
        }
        const std::u32string sep = random_text(rng, 2);
        st.impl = sp::concatenate(parts, sep);
        st.model = oracle::concatenate(model_parts, sep);
        log << "concatenate ";
        break;
      }
    }
    ++steps;
    if (sp::span_length(st.impl.spans) != st.impl.text.size()) {
      return "length conservation broken after: " + log.str();
    }
    if (st.impl.text != st.model.text) return "text diverged after: " + log.str();
    if (sp::normalize_spans(st.impl.spans) != oracle::projection(st.model.tags)) {
      return "projection diverged after: " + log.str();
    }
    if (oracle::expand(st.impl.spans) != st.model.tags) {
      return "per-character provenance diverged after: " + log.str();
    }
    for (const auto& span : st.impl.spans) {
      if (sp::span_length(span) == 0) return "zero-length span after: " + log.str();
    }
  }
  return {};
}

}  // namespace fuzz
