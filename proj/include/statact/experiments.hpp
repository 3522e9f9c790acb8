#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "statact/group_words.hpp"
#include "statact/partition_geometry.hpp"

namespace statact {

// Entropy-continuity experiment over the family a_t = t*boundary + (1-t)*trivial.
// For every grid value t it computes delta(a_t, a_ref) at the configured
// truncation, the entropy (asserted affine in t), and the Radon-Nikodym tail
// curve of a configured word over a threshold grid (asserted to converge at
// rate 2*|t - t_ref| times the reported constant). Assertion failures throw
// AssertionFailure. Emits the main CSV to out_csv and the tail curves to
// out_csv with extension ".rntail.csv" appended before the extension swap.
struct ContinuityConfig {
  int rank = 2;
  int depth = 2;
  int trivial_cells = 1;
  std::vector<double> t_grid = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  double t_ref = 0.5;
  int max_m = 4;
  int max_n = 2;
  CloudMode mode = CloudMode::Exact;
  std::uint64_t budget = 1000000;
  std::uint64_t seed = 1;
  std::string tail_word = "a";
  std::vector<double> thresholds = {0.5, 1.0, 2.0, 3.0};
  std::string out_csv;
};

struct ContinuityRow {
  double t = 0.0;
  double delta_truncated = 0.0;
  double tail_bound = 0.0;
  double entropy_value = 0.0;
  double entropy_gap = 0.0;  // |h(a_t) - h(a_ref)|
  std::vector<double> rn_tail_values;
};

struct ContinuityResult {
  std::vector<ContinuityRow> rows;
  double entropy_boundary = 0.0;
  double tail_constant = 0.0;  // sup over thresholds |tail_boundary - tail_trivial|
};

ContinuityResult run_continuity(const ContinuityConfig& cfg, std::ostream& log);

// Entropy-realization sweep: boundary models over ranks/depths/measures plus
// a convex-combination sweep, with an optional target value h* realized by
// t = h* / entropy(a) (flagged non-ergodic). Targets outside [0, entropy(a)]
// throw MalformedInputError.
struct RealizationConfig {
  std::vector<int> ranks = {2, 3};
  std::vector<int> depths = {2, 3};
  bool include_skewed = true;  // adds a non-uniform nearest-neighbor measure
  double skew = 0.4;           // probability of the first generator letter
  std::vector<double> t_grid = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::optional<double> target;
  std::uint64_t seed = 1;
  std::string out_csv;
};

struct RealizationRow {
  std::string model;
  bool ergodic = false;
  double t = 1.0;  // combination coefficient; 1 for pure models
  double entropy_value = 0.0;
};

struct RealizationResult {
  std::vector<RealizationRow> rows;
  std::optional<double> realized_target;
};

RealizationResult run_realization(const RealizationConfig& cfg, std::ostream& log);

}
