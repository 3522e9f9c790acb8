#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "statact/group_words.hpp"

namespace statact {

// Numeric policy shared across the library.
inline constexpr double kStructuralTol = 1e-12;   // weight sums, identity transports
inline constexpr double kTransportTol = 1e-10;    // sourcing / covering sums
inline constexpr double kStationarityTol = 1e-9;  // default stationarity gate
inline constexpr double kEntropyGateTol = 1e-6;   // stationarity gate used by entropy
inline constexpr double kPieceDropTol = 1e-15;    // transport pieces below this are dropped
inline constexpr double kDedupTol = 1e-12;        // cloud dedup / point comparisons, l-inf

struct Cell {
  std::string id;
  double weight = 0.0;  // in (0,1]; weights of an action sum to 1
};

// One flow piece of a word transport. For source cell c and target cell c',
//   T = mu(c  intersect  w^-1(c'))   (source-side mass)
//   W = mu(w(c) intersect c')        (image-side mass)
// The Radon-Nikodym derivative d(w mu)/d mu equals T/W on the image piece.
struct TransportPiece {
  std::uint32_t src = 0;
  std::uint32_t dst = 0;
  double T = 0.0;
  double W = 0.0;
};

struct WordTransport {
  GroupWord word;
  std::vector<TransportPiece> pieces;  // sorted by (src, dst), one per pair
  bool exact = true;                   // false when composed under the markov contract
};

enum class ActionKind { Bijective, Markov, Opaque };

const char* kind_name(ActionKind k);
ActionKind kind_from_name(const std::string& name);  // throws MalformedInputError

// Optional per-word transport generator. Models that can evaluate arbitrary
// words exactly (boundary cylinder algebra, convex combinations, products)
// install one; file-loaded actions rely on stored transports plus the
// kind-specific composition rule.
using TransportProvider = std::function<WordTransport(const GroupWord&)>;

// A finite cell model of a stationary action: cells with weights summing to
// one, a step distribution, and transports for at least every support word.
class CellAction {
 public:
  CellAction(std::vector<Cell> cells, StepDistribution m,
             std::vector<WordTransport> stored, ActionKind kind,
             bool ergodic = false, TransportProvider provider = {});

  const std::vector<Cell>& cells() const { return cells_; }
  std::size_t cell_count() const { return cells_.size(); }
  double weight(std::uint32_t c) const { return cells_[c].weight; }
  const StepDistribution& measure() const { return m_; }
  ActionKind kind() const { return kind_; }
  bool ergodic() const { return ergodic_; }
  const std::map<GroupWord, WordTransport, WordLess>& stored_transports() const {
    return stored_;
  }
  bool has_provider() const { return static_cast<bool>(provider_); }
  const TransportProvider& provider() const { return provider_; }

  // Index of a cell id; throws MalformedInputError for unknown ids.
  std::uint32_t index_of(const std::string& id) const;

 private:
  std::vector<Cell> cells_;
  StepDistribution m_;
  std::map<GroupWord, WordTransport, WordLess> stored_;
  ActionKind kind_;
  bool ergodic_ = false;
  TransportProvider provider_;
  std::map<std::string, std::uint32_t> index_;
};

struct ValidationIssue {
  std::string what;
  double residual = 0.0;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  std::vector<double> stationarity_residual;  // per cell
  bool ok() const { return issues.empty(); }
};

// Checks the full invariant set: weight range and sum (1e-12), piece
// positivity and uniqueness, sourcing/covering sums (1e-10), stored identity
// diagonality (1e-12), permutation shape for bijective actions, and the
// stationarity identity per cell at `stationarity_tol`.
ValidationReport validate(const CellAction& a,
                          double stationarity_tol = kStationarityTol);

// Transport of an arbitrary reduced word. Stored transports are returned
// verbatim; otherwise the provider is consulted; otherwise letters are
// composed by the mass-splitting rule
//   (c -> c'', T1, W1) * (c'' -> c', T2, W2) adds (T1*T2, W1*W2)/weight(c'').
// For bijective actions this reproduces relational composition of the
// permutations and is exact; for markov actions the result is exact
// precisely when the cells form a Markov partition, so composed transports
// carry exact = false. Opaque actions throw UnsupportedWordError for
// unstored words.
WordTransport word_transport(const CellAction& a, const GroupWord& w);

using CellMask = std::vector<std::uint8_t>;

CellMask mask_from_ids(const CellAction& a, const std::set<std::string>& ids);

// mu(w(A) intersect B): the sum of W over pieces with src in A, dst in B.
double mass(const CellAction& a, const GroupWord& w, const CellMask& A,
            const CellMask& B);
double mass(const CellAction& a, const GroupWord& w,
            const std::set<std::string>& A, const std::set<std::string>& B);

// Distribution of d(w mu)/d mu as a finitely supported function: atoms of
// image mass W at value T/W, aggregated over pieces with equal value
// (relative tolerance 1e-9). Masses sum to 1.
struct RnAtom {
  double value = 0.0;
  double mass = 0.0;
};
std::vector<RnAtom> rn_pieces(const CellAction& a, const GroupWord& w);

// mu{ x : d(w mu)/d mu (x) > c }. The comparison is strict; a relative guard
// of 1e-12 absorbs the rounding of T/W so that thresholds sitting exactly on
// an atom value exclude that atom.
double rn_tail(const CellAction& a, const GroupWord& w, double c);

// Furstenberg entropy sum_g m(g) sum_pieces W * log(W/T), in nats.
// Requires the action to validate with stationarity tolerance 1e-6 and
// throws ValidationFailure otherwise. Nonnegative up to roundoff; zero
// exactly when every support transport is measure-preserving.
double entropy(const CellAction& a);
std::vector<std::pair<GroupWord, double>> entropy_by_word(const CellAction& a);

// Upper bound prod_i 1/m(s_i) for d(w mu)/d mu from a greedy factorization
// of w into support words (longest literal prefix first). Returns +infinity
// when the greedy factorization fails.
double rn_word_bound(const CellAction& a, const GroupWord& w);

// Shared helpers for model constructors.
std::vector<TransportPiece> sanitize_pieces(std::vector<TransportPiece> pieces,
                                            const std::vector<Cell>& cells);
WordTransport compose_transports(const WordTransport& first_applied,
                                 const WordTransport& then_applied,
                                 const std::vector<Cell>& cells);

}
