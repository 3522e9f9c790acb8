#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "statact/cell_action.hpp"
#include "statact/group_words.hpp"

namespace statact {

// Assignment of every cell to one of `pieces` labels (0-based). Empty pieces
// are allowed; the labeling is ordered, so relabelings are distinct points.
struct OrderedPartition {
  int pieces = 1;
  std::vector<int> label;  // one entry per cell index
};

OrderedPartition partition_from_ids(const CellAction& a,
                                    const std::map<std::string, int>& id_to_label,
                                    int pieces);

// Partition statistics: v[(k*n + i)*n + j] = mu(g_k(A_i) intersect A_j) for
// the word list g_1..g_m and pieces A_1..A_n. Coordinates for one word sum
// to 1. Distances between points are l-infinity.
struct StatsPoint {
  int words = 0;
  int pieces = 0;
  std::vector<double> v;

  double at(int k, int i, int j) const {
    return v[(static_cast<std::size_t>(k) * pieces + i) * pieces + j];
  }
};

StatsPoint stats_point(const CellAction& a, std::span<const GroupWord> words,
                       const OrderedPartition& part);

double linf_distance(const StatsPoint& p, const StatsPoint& q);

enum class CloudMode { Exact, Sampled };

// The set of statistics points over partitions into n pieces. Exact mode
// enumerates all n^K assignments (K = cell count) and requires n^K <=
// budget, raising BudgetError otherwise — it never silently samples.
// Sampled mode evaluates seeded random assignments plus greedy single-cell
// relabeling passes that push points away from the current cloud; sampled
// clouds are always subsets of the exact cloud. Points are deduplicated at
// l-infinity tolerance 1e-12 after a deterministic sort, so the result is
// independent of thread count.
struct StatsCloud {
  int words = 0;
  int pieces = 0;
  CloudMode mode = CloudMode::Exact;
  std::uint64_t budget = 0;
  std::uint64_t seed = 0;
  std::vector<StatsPoint> points;
};

StatsCloud cloud(const CellAction& a, std::span<const GroupWord> words, int pieces,
                 CloudMode mode, std::uint64_t budget, std::uint64_t seed);

// max over p in A of min over q in B of the l-infinity distance. Results at
// or below 1e-12 are floored to exactly 0 (that is the "contained at
// tolerance" reading used throughout).
double directed_hausdorff(const StatsCloud& A, const StatsCloud& B);

// Same scan, but reporting the directed distance for every word-truncation
// m = 1..words in one pass (coordinates of a truncated point are a prefix of
// the full point's coordinates).
std::vector<double> directed_hausdorff_profile(const StatsCloud& A, const StatsCloud& B);

struct DeltaTerm {
  int m = 0;
  int n = 0;
  double dh = 0.0;    // Hausdorff (or directed) distance for this term
  bool ok = true;
  std::string error;  // set when the (m,n) clouds could not be built
};

struct DeltaReport {
  bool directed = false;  // true for containment defect reports
  int max_m = 0;
  int max_n = 0;
  CloudMode mode = CloudMode::Exact;
  std::uint64_t budget = 0;
  std::uint64_t seed = 0;
  bool transports_exact = true;  // every word transport used carried exact=true
  double truncated_value = 0.0;
  double tail_bound = 0.0;  // 1 - (1-2^-M)(1-2^-N)
  std::vector<DeltaTerm> terms;

  bool complete() const;
};

// Truncated weak-equivalence metric
//   delta(a,b) ~ sum_{m<=M, n<=N} 2^-(m+n) * d_H(C_{m,n}(a), C_{m,n}(b))
// over the first M enumerated words and partitions into at most N pieces.
// Budget errors are recorded per (m,n) term, not thrown.
DeltaReport delta(const CellAction& a, const CellAction& b, int max_m, int max_n,
                  CloudMode mode, std::uint64_t budget, std::uint64_t seed);

// One-sided variant: only the directed distances cloud(a) -> cloud(b).
// Value 0 in exact mode certifies weak containment a <= b at the truncation.
DeltaReport containment_report(const CellAction& a, const CellAction& b, int max_m,
                               int max_n, CloudMode mode, std::uint64_t budget,
                               std::uint64_t seed);
double containment_defect(const CellAction& a, const CellAction& b, int max_m,
                          int max_n, CloudMode mode, std::uint64_t budget,
                          std::uint64_t seed);

struct MatchResult {
  OrderedPartition part;
  double discrepancy = 0.0;  // l-infinity distance to the target point
  bool exhaustive = false;
};

// Finds a partition of b whose statistics point is closest to `target`.
// Exhaustive when n^K <= budget (global optimum); otherwise simulated
// annealing with single-cell relabel moves, geometric cooling (ratio 0.95)
// and 8 seeded restarts.
MatchResult match_partition(const CellAction& b, const StatsPoint& target,
                            std::span<const GroupWord> words, std::uint64_t budget,
                            std::uint64_t seed);

// max over g,h in F and pieces i,j of
//   | mu(g(A_i) intersect h(A_j)) - mu(g(B_i) intersect h(B_j)) |.
// Each term is evaluated via the transports of u = h^-1 g and h, pushing the
// cell-resolved mass of u(A_i) intersect A_j through h proportionally (exact
// for bijective actions; the documented resolution contract otherwise).
double two_sided_discrepancy(const CellAction& a, const CellAction& b,
                             std::span<const GroupWord> F,
                             const OrderedPartition& part_a,
                             const OrderedPartition& part_b);

struct Prop2Certificate {
  double epsilon = 0.0;
  double delta_achieved = 0.0;   // max discrepancy over the enlarged family
  double match_discrepancy = 0.0;  // refinement-level match_partition value
  bool certified = false;        // delta_achieved < epsilon / 7
  double two_sided = 0.0;
  bool bound_holds = false;      // two_sided <= 7 * delta_achieved (+1e-12)
  int refinement_pieces = 0;
};

struct Prop2Result {
  OrderedPartition part_b;
  double two_sided = 0.0;
  Prop2Certificate certificate;
};

// One-sided-to-two-sided upgrade: enlarges part_a by the images g_j(A_i) for
// g_j in F (requiring each image to resolve as a union of cells — throws
// ResolutionError naming the offending g_j(A_i) otherwise), matches the
// common refinement on b over the product word set F*F, assembles
// B_i = B_{i,0}, and certifies two_sided_discrepancy <= 7 * delta_achieved.
// F must contain the identity.
Prop2Result prop2_construct(const CellAction& a, const CellAction& b,
                            std::span<const GroupWord> F,
                            const OrderedPartition& part_a, double epsilon,
                            std::uint64_t budget, std::uint64_t seed);

}
