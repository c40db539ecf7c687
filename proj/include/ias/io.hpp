#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ias/inverse.hpp"
#include "ias/problem.hpp"
#include "ias/simulate.hpp"
#include "ias/solver.hpp"

namespace ias {

/// Display names for hypotheses and acquisitions, carried alongside the
/// numeric problem for exports.
struct ProblemLabels {
  std::vector<std::string> theta;
  std::vector<std::string> lambda;

  static ProblemLabels defaults(const DecisionProblem& problem);
};

struct LoadedProblem {
  DecisionProblem problem;
  ProblemLabels labels;
};

/// Reads a problem config (JSON document with theta/lambda name lists,
/// omega_count, and the q/p/c/mu0 arrays), checks shapes, and runs
/// validate_problem. Throws ValidationError listing every violation.
LoadedProblem load_problem(const std::filesystem::path& path);
void save_problem(const std::filesystem::path& path, const DecisionProblem& problem,
                  const ProblemLabels& labels);

/// Reads a preferences config; shape-checked against the problem.
Preferences load_preferences(const std::filesystem::path& path, const DecisionProblem& problem);
void save_preferences(const std::filesystem::path& path, const Preferences& prefs);

/// Episode logs are JSON Lines: a metadata header object followed by one
/// record per episode. Unknown keys are ignored on read and never emitted.
void write_dataset(const std::filesystem::path& path, const EpisodeDataset& dataset);

/// `strip_truths` removes hidden truths on load (the projection applied
/// before inference). Structural violations raise DataError naming the
/// offending line; with `check_consistency` each episode is also replayed
/// through the recognition model so zero-likelihood observations surface
/// with their line number. A fingerprint mismatch against
/// `expected_fingerprint` raises DataError.
EpisodeDataset load_dataset(const std::filesystem::path& path, const DecisionProblem& problem,
                            bool strip_truths = false,
                            const std::optional<std::string>& expected_fingerprint = std::nullopt,
                            bool check_consistency = false);

/// Tab-separated policy export: one row per grid point with belief
/// coordinates, both value branches, every Q-factor, and the
/// continue/terminate label.
void write_policy_export(const std::filesystem::path& path, const SolvedPolicy& policy,
                         const TerminationMap& map, const DecisionProblem& problem,
                         const ProblemLabels& labels);

/// Tab-separated chain export: one row per retained sample.
void write_chain(const std::filesystem::path& path, const PosteriorChain& chain,
                 const Lattice& lattice);

/// MAP summary as a single JSON object.
void write_map_summary(const std::filesystem::path& path, const MapResult& map,
                       const Lattice& lattice);

/// Criterion comparison as a JSON object keyed by criterion name.
void write_comparison(const std::filesystem::path& path,
                      const std::vector<CriterionScore>& scores);

/// Writes to a temp file in the target directory and renames into place.
void atomic_write(const std::filesystem::path& path, const std::string& contents);

/// Shortest-round-trip decimal rendering of a double (repeatable across
/// runs; exports are byte-identical for identical inputs).
std::string format_double(double value);

}  // namespace ias
