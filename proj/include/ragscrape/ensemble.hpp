#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ragscrape/extraction.hpp"

namespace ragscrape {

struct NormalizedValue {
  std::string raw;
  std::string norm;  // trimmed, case-folded, whitespace runs collapsed
};

NormalizedValue normalize_value(std::string_view raw);

struct FactorScores {
  double frequency = 0.0;
  double quality = 0.0;
  std::optional<double> accuracy;  // evaluation mode only
};

/// Per-candidate factors, index-aligned with `candidates`. Frequency is the
/// share of valid candidates with the same normalized value; quality is 1
/// for valid, kind-conformant, nonempty values; accuracy compares against
/// `ground_truth` when one is given. Invalid candidates score 0 throughout.
std::vector<FactorScores> score_candidates(const std::vector<CandidateExtraction>& candidates,
                                           const std::optional<std::string>& ground_truth);

struct VoteWeights {
  double frequency = 0.5;
  double quality = 0.3;
  double accuracy = 0.2;
};

struct VoteRecord {
  std::string judge_model;
  std::string chosen_model;
  FactorScores factor_scores;  // of the chosen candidate
  bool fallback = false;       // remote judge unusable, deterministic rule applied
};

/// Weighted factor score; without accuracy the frequency and quality weights
/// are renormalized to sum to 1.
double weighted_score(const FactorScores& scores, const VoteWeights& weights);

/// Deterministic judging rule: highest weighted score among valid
/// candidates, ties to the earliest model in `priority`.
std::string deterministic_choice(const std::vector<CandidateExtraction>& candidates,
                                 const std::vector<FactorScores>& scores,
                                 const std::vector<std::string>& priority, const VoteWeights& weights);

/// Fixed adjudication prompt sent to remote judges.
std::string adjudication_prompt(const std::vector<CandidateExtraction>& candidates,
                                const std::vector<FactorScores>& scores);

/// One judge's vote. Remote judges answer {"choice": <model_id>}; an
/// unusable reply or transport failure falls back to deterministic_choice.
/// Requires at least one valid candidate.
VoteRecord judge_vote(const LlmBackend& judge, const std::vector<CandidateExtraction>& candidates,
                      const std::vector<FactorScores>& scores, const std::vector<std::string>& priority,
                      const VoteWeights& weights = {});

enum class DecidedBy { kMajority, kTiebreakPriority, kAllInvalid };

std::string_view decided_by_name(DecidedBy d) noexcept;

struct ExtractionResult {
  std::string field;
  std::optional<std::string> final_value;
  std::vector<CandidateExtraction> candidates;
  std::vector<VoteRecord> votes;
  DecidedBy decided_by = DecidedBy::kAllInvalid;
};

/// Position of each candidate's model in `priority`; unlisted models rank
/// after every listed one, ordered by model id.
std::vector<std::size_t> priority_ranks(const std::vector<CandidateExtraction>& candidates,
                                        const std::vector<std::string>& priority);

/// Picks the value with the most votes. Votes pool across candidates whose
/// normalized values agree; a tie goes to the highest-priority voted model.
ExtractionResult tally_votes(const std::vector<VoteRecord>& votes,
                             const std::vector<CandidateExtraction>& candidates,
                             const std::vector<std::string>& priority);

}  // namespace ragscrape
