#include "ragscrape/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "ragscrape/error.hpp"
#include "ragscrape/unicode.hpp"

namespace ragscrape {

namespace {

constexpr double kTieEpsilon = 1e-12;

std::string format_score(double v) {
  std::ostringstream os;
  os.precision(4);
  os << std::fixed << v;
  return os.str();
}

}  // namespace

NormalizedValue normalize_value(std::string_view raw) {
  const std::u32string folded = unicode::to_u32(unicode::fold_case(raw));
  std::u32string out;
  out.reserve(folded.size());
  bool pending_space = false;
  for (char32_t cp : folded) {
    if (unicode::is_whitespace(cp)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(U' ');
    pending_space = false;
    out.push_back(cp);
  }
  return NormalizedValue{std::string(raw), unicode::to_utf8(out)};
}

std::vector<FactorScores> score_candidates(const std::vector<CandidateExtraction>& candidates,
                                           const std::optional<std::string>& ground_truth) {
  std::vector<std::optional<std::string>> norms;
  norms.reserve(candidates.size());
  std::size_t valid_count = 0;
  for (const auto& c : candidates) {
    if (c.valid && c.value) {
      norms.push_back(normalize_value(*c.value).norm);
      ++valid_count;
    } else {
      norms.push_back(std::nullopt);
    }
  }
  const std::optional<std::string> truth =
      ground_truth ? std::optional(normalize_value(*ground_truth).norm) : std::nullopt;

  std::vector<FactorScores> scores(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (truth) scores[i].accuracy = 0.0;
    if (!norms[i]) continue;
    const auto same = std::count(norms.begin(), norms.end(), norms[i]);
    scores[i].frequency = static_cast<double>(same) / static_cast<double>(valid_count);
    scores[i].quality = norms[i]->empty() ? 0.0 : 1.0;
    if (truth) scores[i].accuracy = *norms[i] == *truth ? 1.0 : 0.0;
  }
  return scores;
}

double weighted_score(const FactorScores& s, const VoteWeights& w) {
  if (s.accuracy) return w.frequency * s.frequency + w.quality * s.quality + w.accuracy * *s.accuracy;
  const double total = w.frequency + w.quality;
  return (w.frequency * s.frequency + w.quality * s.quality) / total;
}

std::vector<std::size_t> priority_ranks(const std::vector<CandidateExtraction>& candidates,
                                        const std::vector<std::string>& priority) {
  std::vector<std::string> unlisted;
  for (const auto& c : candidates) {
    if (std::find(priority.begin(), priority.end(), c.model_id) == priority.end()) {
      unlisted.push_back(c.model_id);
    }
  }
  std::sort(unlisted.begin(), unlisted.end());
  std::vector<std::size_t> ranks;
  ranks.reserve(candidates.size());
  for (const auto& c : candidates) {
    if (const auto it = std::find(priority.begin(), priority.end(), c.model_id); it != priority.end()) {
      ranks.push_back(static_cast<std::size_t>(it - priority.begin()));
    } else {
      const auto u = std::lower_bound(unlisted.begin(), unlisted.end(), c.model_id);
      ranks.push_back(priority.size() + static_cast<std::size_t>(u - unlisted.begin()));
    }
  }
  return ranks;
}

std::string deterministic_choice(const std::vector<CandidateExtraction>& candidates,
                                 const std::vector<FactorScores>& scores,
                                 const std::vector<std::string>& priority, const VoteWeights& weights) {
  const auto ranks = priority_ranks(candidates, priority);
  std::optional<std::size_t> best;
  double best_score = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (!candidates[i].valid) continue;
    const double s = weighted_score(scores[i], weights);
    if (!best || s > best_score + kTieEpsilon ||
        (std::abs(s - best_score) <= kTieEpsilon && ranks[i] < ranks[*best])) {
      best = i;
      best_score = s;
    }
  }
  if (!best) throw Error(ErrorCode::kInvalidConfig, "no valid candidate to vote for");
  return candidates[*best].model_id;
}

std::string adjudication_prompt(const std::vector<CandidateExtraction>& candidates,
                                const std::vector<FactorScores>& scores) {
  std::string out =
      "You are judging candidate answers extracted by several models for the field \"" +
      (candidates.empty() ? std::string() : candidates.front().field) +
      "\". Consider accuracy, how often a value recurs across the candidates (frequency), "
      "and data quality (completeness and internal consistency).\n\nCandidates:\n";
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    if (!c.valid) continue;
    nlohmann::json line{{"model", c.model_id},
                        {"value", *c.value},
                        {"frequency", format_score(scores[i].frequency)},
                        {"quality", format_score(scores[i].quality)}};
    if (scores[i].accuracy) line["accuracy"] = format_score(*scores[i].accuracy);
    out += "- " + line.dump() + "\n";
  }
  out +=
      "\nRespond with exactly one JSON object of the form {\"choice\": <model>} naming the model "
      "whose value is best, and nothing else.";
  return out;
}

VoteRecord judge_vote(const LlmBackend& judge, const std::vector<CandidateExtraction>& candidates,
                      const std::vector<FactorScores>& scores, const std::vector<std::string>& priority,
                      const VoteWeights& weights) {
  VoteRecord vote;
  vote.judge_model = judge.model_id;
  std::optional<std::string> chosen;
  if (judge.kind == BackendKind::kRemoteChat) {
    try {
      const std::string reply = chat_completion(judge, adjudication_prompt(candidates, scores));
      if (const auto obj = last_json_object(reply); obj && obj->contains("choice") && (*obj)["choice"].is_string()) {
        const std::string pick = (*obj)["choice"].get<std::string>();
        const bool ok = std::any_of(candidates.begin(), candidates.end(), [&](const CandidateExtraction& c) {
          return c.valid && c.model_id == pick;
        });
        if (ok) chosen = pick;
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kLlmUnavailable) throw;
    }
    vote.fallback = !chosen.has_value();
  }
  vote.chosen_model = chosen ? *chosen : deterministic_choice(candidates, scores, priority, weights);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].model_id == vote.chosen_model && candidates[i].valid) {
      vote.factor_scores = scores[i];
      break;
    }
  }
  return vote;
}

std::string_view decided_by_name(DecidedBy d) noexcept {
  switch (d) {
    case DecidedBy::kMajority: return "majority";
    case DecidedBy::kTiebreakPriority: return "tiebreak_priority";
    case DecidedBy::kAllInvalid: return "all_invalid";
  }
  return "all_invalid";
}

ExtractionResult tally_votes(const std::vector<VoteRecord>& votes,
                             const std::vector<CandidateExtraction>& candidates,
                             const std::vector<std::string>& priority) {
  ExtractionResult result;
  result.field = candidates.empty() ? std::string() : candidates.front().field;
  result.candidates = candidates;
  result.votes = votes;

  const auto ranks = priority_ranks(candidates, priority);
  std::vector<std::size_t> count(candidates.size(), 0);
  std::vector<std::string> norms(candidates.size());
  bool any_valid = false;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (!candidates[i].valid) continue;
    any_valid = true;
    norms[i] = normalize_value(*candidates[i].value).norm;
    for (const auto& v : votes) count[i] += v.chosen_model == candidates[i].model_id ? 1 : 0;
  }
  if (!any_valid) {
    result.decided_by = DecidedBy::kAllInvalid;
    return result;
  }

  // Pool votes per normalized value.
  std::map<std::string, std::size_t> pooled;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].valid) pooled[norms[i]] += count[i];
  }
  std::size_t top = 0;
  for (const auto& [norm, n] : pooled) top = std::max(top, n);
  const auto tied = static_cast<std::size_t>(
      std::count_if(pooled.begin(), pooled.end(), [&](const auto& kv) { return kv.second == top; }));

  // Eligible members of a group: valid and, unless nobody voted, voted for.
  const auto eligible = [&](std::size_t i) { return candidates[i].valid && (top == 0 || count[i] > 0); };

  // Winning group: among the top-voted groups, the one whose best-ranked
  // eligible member has the highest priority.
  std::optional<std::size_t> lead;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (!eligible(i) || pooled[norms[i]] != top) continue;
    if (!lead || ranks[i] < ranks[*lead]) lead = i;
  }
  // Representative of that group: most individual votes, then priority.
  std::size_t winner = *lead;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (!eligible(i) || norms[i] != norms[*lead]) continue;
    if (count[i] > count[winner] || (count[i] == count[winner] && ranks[i] < ranks[winner])) winner = i;
  }

  result.final_value = candidates[winner].value;
  result.decided_by = tied == 1 ? DecidedBy::kMajority : DecidedBy::kTiebreakPriority;
  return result;
}

}  // namespace ragscrape
