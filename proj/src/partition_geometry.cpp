#include "statact/partition_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <string>

#include "statact/errors.hpp"
#include "statact/runtime.hpp"

namespace statact {

namespace {

// Shared evaluation context: transports fetched once per word, points then
// evaluated per assignment without touching the action again.
struct EvalContext {
  int n = 0;
  std::size_t cell_count = 0;
  std::size_t dim = 0;
  std::vector<std::vector<TransportPiece>> per_word;
  bool transports_exact = true;

  static EvalContext make(const CellAction& a, std::span<const GroupWord> words, int n) {
    EvalContext ctx;
    ctx.n = n;
    ctx.cell_count = a.cell_count();
    ctx.dim = words.size() * static_cast<std::size_t>(n) * n;
    ctx.per_word.reserve(words.size());
    for (const GroupWord& w : words) {
      WordTransport t = word_transport(a, w);
      ctx.transports_exact = ctx.transports_exact && t.exact;
      ctx.per_word.push_back(std::move(t.pieces));
    }
    return ctx;
  }

  StatsPoint eval(const std::vector<int>& label) const {
    StatsPoint p;
    p.words = static_cast<int>(per_word.size());
    p.pieces = n;
    p.v.assign(dim, 0.0);
    const std::size_t nn = static_cast<std::size_t>(n) * n;
    for (std::size_t k = 0; k < per_word.size(); ++k) {
      double* block = p.v.data() + k * nn;
      for (const TransportPiece& piece : per_word[k])
        block[static_cast<std::size_t>(label[piece.src]) * n + label[piece.dst]] +=
            piece.W;
    }
    return p;
  }
};

void decode_assignment(std::uint64_t index, int n, std::vector<int>& label) {
  for (std::size_t c = 0; c < label.size(); ++c) {
    label[c] = static_cast<int>(index % n);
    index /= n;
  }
}

// n^K when it does not exceed the cap; otherwise cap + 1.
std::uint64_t assignments_capped(int n, std::size_t cells, std::uint64_t cap) {
  std::uint64_t total = 1;
  for (std::size_t c = 0; c < cells; ++c) {
    if (total > cap / static_cast<std::uint64_t>(n)) return cap + 1;
    total *= static_cast<std::uint64_t>(n);
  }
  return total;
}

bool point_less(const StatsPoint& p, const StatsPoint& q) {
  return std::lexicographical_compare(p.v.begin(), p.v.end(), q.v.begin(), q.v.end());
}

void sort_dedup(std::vector<StatsPoint>& points) {
  std::sort(points.begin(), points.end(), point_less);
  std::vector<StatsPoint> kept;
  kept.reserve(points.size());
  for (auto& p : points) {
    if (!kept.empty() && linf_distance(kept.back(), p) <= kDedupTol) continue;
    kept.push_back(std::move(p));
  }
  points = std::move(kept);
}

}  // namespace

OrderedPartition partition_from_ids(const CellAction& a,
                                    const std::map<std::string, int>& id_to_label,
                                    int pieces) {
  if (pieces < 1) throw MalformedInputError("a partition needs at least one piece");
  OrderedPartition part;
  part.pieces = pieces;
  part.label.assign(a.cell_count(), 0);
  if (id_to_label.size() != a.cell_count())
    throw MalformedInputError("partition must assign every cell exactly once");
  for (const auto& [id, label] : id_to_label) {
    if (label < 0 || label >= pieces)
      throw MalformedInputError("partition label out of range for cell \"" + id + "\"");
    part.label[a.index_of(id)] = label;
  }
  return part;
}

StatsPoint stats_point(const CellAction& a, std::span<const GroupWord> words,
                       const OrderedPartition& part) {
  if (part.label.size() != a.cell_count())
    throw MalformedInputError("partition size does not match the action");
  EvalContext ctx = EvalContext::make(a, words, part.pieces);
  return ctx.eval(part.label);
}

double linf_distance(const StatsPoint& p, const StatsPoint& q) {
  if (p.words != q.words || p.pieces != q.pieces)
    throw MalformedInputError("statistics points have different dimensions");
  double d = 0.0;
  for (std::size_t i = 0; i < p.v.size(); ++i)
    d = std::max(d, std::abs(p.v[i] - q.v[i]));
  return d;
}

StatsCloud cloud(const CellAction& a, std::span<const GroupWord> words, int pieces,
                 CloudMode mode, std::uint64_t budget, std::uint64_t seed) {
  if (pieces < 1) throw MalformedInputError("cloud needs at least one piece");
  if (budget == 0) throw MalformedInputError("budget must be positive");
  EvalContext ctx = EvalContext::make(a, words, pieces);

  StatsCloud c;
  c.words = static_cast<int>(words.size());
  c.pieces = pieces;
  c.mode = mode;
  c.budget = budget;
  c.seed = seed;

  if (mode == CloudMode::Exact) {
    std::uint64_t total = assignments_capped(pieces, ctx.cell_count, budget);
    if (total > budget)
      throw BudgetError("exact cloud needs " + std::to_string(pieces) + "^" +
                        std::to_string(ctx.cell_count) +
                        " assignments, over the budget of " + std::to_string(budget));
    std::vector<std::vector<StatsPoint>> chunk_points;
    parallel_chunks(
        static_cast<std::size_t>(total),
        [&](std::size_t k) { chunk_points.resize(k); },
        [&](std::size_t ci, std::size_t begin, std::size_t end) {
          std::vector<int> label(ctx.cell_count, 0);
          auto& out = chunk_points[ci];
          out.reserve(end - begin);
          for (std::size_t idx = begin; idx < end; ++idx) {
            decode_assignment(idx, pieces, label);
            out.push_back(ctx.eval(label));
          }
          sort_dedup(out);
        });
    for (auto& chunk : chunk_points)
      for (auto& p : chunk) c.points.push_back(std::move(p));
    sort_dedup(c.points);
    return c;
  }

  // Sampled mode: seeded random assignments, then greedy relabeling passes
  // that push a fresh assignment as far from the collected landmarks as a
  // single-cell change allows. Every point is a genuine assignment image, so
  // sampled clouds are subsets of the exact cloud.
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick_label(0, pieces - 1);
  std::vector<int> label(ctx.cell_count, 0);
  std::vector<StatsPoint> landmarks;
  const std::size_t landmark_cap = 128;
  auto min_dist = [&](const StatsPoint& p) {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& q : landmarks) d = std::min(d, linf_distance(p, q));
    return d;
  };
  for (std::uint64_t draw = 0; draw < budget; ++draw) {
    for (auto& l : label) l = pick_label(rng);
    StatsPoint p = ctx.eval(label);
    if (landmarks.size() < landmark_cap && (landmarks.empty() || min_dist(p) > kDedupTol))
      landmarks.push_back(p);
    c.points.push_back(std::move(p));
  }
  const int passes = static_cast<int>(std::min<std::uint64_t>(8, budget));
  for (int pass = 0; pass < passes; ++pass) {
    for (auto& l : label) l = pick_label(rng);
    for (int sweep = 0; sweep < 2; ++sweep)
      for (std::size_t cell = 0; cell < ctx.cell_count; ++cell) {
        int best_label = label[cell];
        double best = -1.0;
        for (int cand = 0; cand < pieces; ++cand) {
          label[cell] = cand;
          double d = min_dist(ctx.eval(label));
          if (d > best) {
            best = d;
            best_label = cand;
          }
        }
        label[cell] = best_label;
      }
    StatsPoint p = ctx.eval(label);
    if (landmarks.size() < landmark_cap) landmarks.push_back(p);
    c.points.push_back(std::move(p));
  }
  sort_dedup(c.points);
  return c;
}

namespace {

constexpr double kDistanceFloor = 1e-12;

double floor_distance(double d) { return d <= kDistanceFloor ? 0.0 : d; }

void check_same_dims(const StatsCloud& A, const StatsCloud& B) {
  if (A.words != B.words || A.pieces != B.pieces)
    throw MalformedInputError("clouds have different dimensions");
  if (A.points.empty() || B.points.empty())
    throw MalformedInputError("clouds must be nonempty");
}

}  // namespace

std::vector<double> directed_hausdorff_profile(const StatsCloud& A, const StatsCloud& B) {
  check_same_dims(A, B);
  const std::size_t M = static_cast<std::size_t>(A.words);
  const std::size_t nn = static_cast<std::size_t>(A.pieces) * A.pieces;
  std::vector<std::vector<double>> chunk_max;
  parallel_chunks(
      A.points.size(),
      [&](std::size_t k) { chunk_max.assign(k, std::vector<double>(M, 0.0)); },
      [&](std::size_t ci, std::size_t begin, std::size_t end) {
        std::vector<double> trunc(M, 0.0);
        std::vector<double> best(M, 0.0);
        auto& result = chunk_max[ci];
        for (std::size_t pi = begin; pi < end; ++pi) {
          const StatsPoint& p = A.points[pi];
          std::fill(best.begin(), best.end(),
                    std::numeric_limits<double>::infinity());
          // Probing the same index first makes identical clouds short-circuit.
          std::size_t first = pi < B.points.size() ? pi : 0;
          for (std::size_t step = 0; step <= B.points.size(); ++step) {
            std::size_t qi = step == 0 ? first : step - 1;
            if (step > 0 && qi == first) continue;
            if (step > 0 && qi >= B.points.size()) break;
            const StatsPoint& q = B.points[qi];
            double running = 0.0;
            for (std::size_t m = 0; m < M; ++m) {
              const double* pv = p.v.data() + m * nn;
              const double* qv = q.v.data() + m * nn;
              for (std::size_t t = 0; t < nn; ++t)
                running = std::max(running, std::abs(pv[t] - qv[t]));
              trunc[m] = running;
              if (running >= best[M - 1] && m + 1 < M) {
                // This candidate cannot improve any coarser truncation either
                // once it exceeds every current minimum.
                bool useful = false;
                for (std::size_t mm = m; mm < M; ++mm)
                  if (trunc[m] < best[mm]) useful = true;
                if (!useful) {
                  for (std::size_t mm = m + 1; mm < M; ++mm) trunc[mm] = running;
                  break;
                }
              }
            }
            for (std::size_t m = 0; m < M; ++m) best[m] = std::min(best[m], trunc[m]);
            if (best[M - 1] <= kDistanceFloor) break;  // contained; all terms zero
          }
          for (std::size_t m = 0; m < M; ++m) result[m] = std::max(result[m], best[m]);
        }
      });
  std::vector<double> out(M, 0.0);
  for (const auto& part : chunk_max)
    for (std::size_t m = 0; m < M; ++m) out[m] = std::max(out[m], part[m]);
  for (double& d : out) d = floor_distance(d);
  return out;
}

double directed_hausdorff(const StatsCloud& A, const StatsCloud& B) {
  return directed_hausdorff_profile(A, B).back();
}

namespace {

std::uint64_t term_seed(std::uint64_t seed, int n) {
  // Same derived seed for both sides of a term, so sampled-mode delta(a, a)
  // compares identical clouds.
  return seed * 1000003ULL + static_cast<std::uint64_t>(n);
}

DeltaReport delta_impl(const CellAction& a, const CellAction& b, int max_m, int max_n,
                       CloudMode mode, std::uint64_t budget, std::uint64_t seed,
                       bool directed) {
  if (max_m < 1 || max_n < 1)
    throw MalformedInputError("truncation bounds must be at least 1");
  if (a.measure().rank != b.measure().rank)
    throw MalformedInputError("actions live over groups of different rank");

  DeltaReport rep;
  rep.directed = directed;
  rep.max_m = max_m;
  rep.max_n = max_n;
  rep.mode = mode;
  rep.budget = budget;
  rep.seed = seed;
  rep.tail_bound =
      1.0 - (1.0 - std::ldexp(1.0, -max_m)) * (1.0 - std::ldexp(1.0, -max_n));

  std::vector<GroupWord> words = enumerate_words(a.measure().rank, max_m);
  try {
    for (const GroupWord& w : words)
      rep.transports_exact = rep.transports_exact && word_transport(a, w).exact &&
                             word_transport(b, w).exact;
  } catch (const UnsupportedWordError&) {
    rep.transports_exact = false;  // per-term errors are recorded below
  }

  std::vector<std::vector<DeltaTerm>> by_n(max_n + 1);
  for (int n = 1; n <= max_n; ++n) {
    by_n[n].resize(max_m);
    try {
      StatsCloud ca = cloud(a, words, n, mode, budget, term_seed(seed, n));
      StatsCloud cb = cloud(b, words, n, mode, budget, term_seed(seed, n));
      std::vector<double> ab = directed_hausdorff_profile(ca, cb);
      std::vector<double> ba;
      if (!directed) ba = directed_hausdorff_profile(cb, ca);
      for (int m = 1; m <= max_m; ++m) {
        DeltaTerm& t = by_n[n][m - 1];
        t.m = m;
        t.n = n;
        t.dh = directed ? ab[m - 1] : std::max(ab[m - 1], ba[m - 1]);
      }
    } catch (const BudgetError& e) {
      for (int m = 1; m <= max_m; ++m)
        by_n[n][m - 1] = {m, n, 0.0, false, e.what()};
    } catch (const UnsupportedWordError& e) {
      for (int m = 1; m <= max_m; ++m)
        by_n[n][m - 1] = {m, n, 0.0, false, e.what()};
    }
  }
  for (int m = 1; m <= max_m; ++m)
    for (int n = 1; n <= max_n; ++n) {
      DeltaTerm& t = by_n[n][m - 1];
      if (t.ok) rep.truncated_value += std::ldexp(t.dh, -(m + n));
      rep.terms.push_back(t);
    }
  return rep;
}

}  // namespace

bool DeltaReport::complete() const {
  for (const auto& t : terms)
    if (!t.ok) return false;
  return true;
}

DeltaReport delta(const CellAction& a, const CellAction& b, int max_m, int max_n,
                  CloudMode mode, std::uint64_t budget, std::uint64_t seed) {
  return delta_impl(a, b, max_m, max_n, mode, budget, seed, /*directed=*/false);
}

DeltaReport containment_report(const CellAction& a, const CellAction& b, int max_m,
                               int max_n, CloudMode mode, std::uint64_t budget,
                               std::uint64_t seed) {
  return delta_impl(a, b, max_m, max_n, mode, budget, seed, /*directed=*/true);
}

double containment_defect(const CellAction& a, const CellAction& b, int max_m, int max_n,
                          CloudMode mode, std::uint64_t budget, std::uint64_t seed) {
  return containment_report(a, b, max_m, max_n, mode, budget, seed).truncated_value;
}

MatchResult match_partition(const CellAction& b, const StatsPoint& target,
                            std::span<const GroupWord> words, std::uint64_t budget,
                            std::uint64_t seed) {
  if (target.words != static_cast<int>(words.size()))
    throw MalformedInputError("target statistics do not match the word list");
  if (target.pieces < 1) throw MalformedInputError("target needs at least one piece");
  const int n = target.pieces;
  EvalContext ctx = EvalContext::make(b, words, n);
  if (target.v.size() != ctx.dim)
    throw MalformedInputError("target statistics have the wrong dimension");

  auto disc_of = [&](const std::vector<int>& label) {
    double d = 0.0;
    StatsPoint p = ctx.eval(label);
    for (std::size_t i = 0; i < ctx.dim; ++i)
      d = std::max(d, std::abs(p.v[i] - target.v[i]));
    return d;
  };

  MatchResult result;
  result.part.pieces = n;

  std::uint64_t total = assignments_capped(n, ctx.cell_count, budget);
  if (total <= budget) {
    // Exhaustive scan; ties resolved toward the smallest assignment index.
    struct Best {
      double disc = std::numeric_limits<double>::infinity();
      std::uint64_t idx = 0;
    };
    std::vector<Best> chunk_best;
    parallel_chunks(
        static_cast<std::size_t>(total),
        [&](std::size_t k) { chunk_best.resize(k); },
        [&](std::size_t ci, std::size_t begin, std::size_t end) {
          std::vector<int> label(ctx.cell_count, 0);
          Best best;
          for (std::size_t idx = begin; idx < end; ++idx) {
            decode_assignment(idx, n, label);
            double d = disc_of(label);
            if (d < best.disc) best = {d, idx};
          }
          chunk_best[ci] = best;
        });
    Best best;
    for (const Best& cand : chunk_best)
      if (cand.disc < best.disc || (cand.disc == best.disc && cand.idx < best.idx))
        best = cand;
    result.part.label.assign(ctx.cell_count, 0);
    decode_assignment(best.idx, n, result.part.label);
    result.discrepancy = best.disc;
    result.exhaustive = true;
    return result;
  }

  // Simulated annealing: 8 restarts, single-cell relabel moves, geometric
  // cooling by 0.95 once per sweep of cell_count proposals.
  const int restarts = 8;
  const std::uint64_t iters = std::max<std::uint64_t>(200, budget / restarts);
  double global_best = std::numeric_limits<double>::infinity();
  std::vector<int> global_label(ctx.cell_count, 0);
  for (int r = 0; r < restarts; ++r) {
    std::mt19937_64 rng(seed * 8628797ULL + static_cast<std::uint64_t>(r));
    std::uniform_int_distribution<int> pick_label(0, n - 1);
    std::uniform_int_distribution<std::size_t> pick_cell(0, ctx.cell_count - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<int> label(ctx.cell_count);
    for (auto& l : label) l = pick_label(rng);
    double cur = disc_of(label);
    if (cur < global_best) {
      global_best = cur;
      global_label = label;
    }
    double temp = 0.25;
    for (std::uint64_t it = 0; it < iters; ++it) {
      std::size_t cell = pick_cell(rng);
      int old = label[cell];
      int cand = pick_label(rng);
      if (cand == old) continue;
      label[cell] = cand;
      double d = disc_of(label);
      if (d <= cur || unit(rng) < std::exp((cur - d) / temp)) {
        cur = d;
        if (cur < global_best) {
          global_best = cur;
          global_label = label;
        }
      } else {
        label[cell] = old;
      }
      if ((it + 1) % ctx.cell_count == 0) temp *= 0.95;
    }
  }
  result.part.label = global_label;
  result.discrepancy = global_best;
  result.exhaustive = false;
  return result;
}

namespace {

// mu(g(A_i) intersect h(A_j)) evaluated as the h-push of the cell-resolved
// mass of u(A_i) intersect A_j, u = h^-1 g. Exact for bijective transports;
// otherwise exact under the Markov-partition resolution contract.
double two_sided_term(const CellAction& x, const OrderedPartition& part,
                      const WordTransport& tu, const std::vector<double>& himg, int i,
                      int j) {
  std::vector<double> s(x.cell_count(), 0.0);
  for (const auto& p : tu.pieces)
    if (part.label[p.src] == i && part.label[p.dst] == j) s[p.dst] += p.W;
  double total = 0.0;
  for (std::uint32_t c = 0; c < x.cell_count(); ++c)
    if (s[c] > 0.0) total += s[c] / x.weight(c) * himg[c];
  return total;
}

struct TwoSidedTables {
  std::vector<WordTransport> u;          // indexed g * |F| + h
  std::vector<std::vector<double>> himg;  // image mass of each cell under h
};

TwoSidedTables two_sided_tables(const CellAction& x, std::span<const GroupWord> F) {
  TwoSidedTables t;
  t.himg.resize(F.size());
  for (std::size_t h = 0; h < F.size(); ++h) {
    WordTransport th = word_transport(x, F[h]);
    t.himg[h].assign(x.cell_count(), 0.0);
    for (const auto& p : th.pieces) t.himg[h][p.src] += p.W;
  }
  t.u.reserve(F.size() * F.size());
  for (std::size_t g = 0; g < F.size(); ++g)
    for (std::size_t h = 0; h < F.size(); ++h)
      t.u.push_back(word_transport(x, multiply(inverse(F[h]), F[g])));
  return t;
}

}  // namespace

double two_sided_discrepancy(const CellAction& a, const CellAction& b,
                             std::span<const GroupWord> F,
                             const OrderedPartition& part_a,
                             const OrderedPartition& part_b) {
  if (F.empty()) throw MalformedInputError("the word family F must be nonempty");
  if (part_a.pieces != part_b.pieces)
    throw MalformedInputError("partitions have different piece counts");
  if (part_a.label.size() != a.cell_count() || part_b.label.size() != b.cell_count())
    throw MalformedInputError("partition size does not match the action");

  TwoSidedTables ta = two_sided_tables(a, F);
  TwoSidedTables tb = two_sided_tables(b, F);
  double worst = 0.0;
  for (std::size_t g = 0; g < F.size(); ++g)
    for (std::size_t h = 0; h < F.size(); ++h) {
      const WordTransport& ua = ta.u[g * F.size() + h];
      const WordTransport& ub = tb.u[g * F.size() + h];
      for (int i = 0; i < part_a.pieces; ++i)
        for (int j = 0; j < part_a.pieces; ++j) {
          double va = two_sided_term(a, part_a, ua, ta.himg[h], i, j);
          double vb = two_sided_term(b, part_b, ub, tb.himg[h], i, j);
          worst = std::max(worst, std::abs(va - vb));
        }
    }
  return worst;
}

namespace {

// Cells of `a` covered by the image w(A_i), where A_i is the label-i piece.
// Throws ResolutionError when the image is not a union of cells.
std::vector<std::uint8_t> resolve_image(const CellAction& a, const WordTransport& tw,
                                        const OrderedPartition& part, int i,
                                        const std::string& word_name) {
  std::vector<double> s(a.cell_count(), 0.0);
  for (const auto& p : tw.pieces)
    if (part.label[p.src] == i) s[p.dst] += p.W;
  std::vector<std::uint8_t> member(a.cell_count(), 0);
  for (std::uint32_t c = 0; c < a.cell_count(); ++c) {
    if (s[c] <= 1e-9) continue;
    if (std::abs(s[c] - a.weight(c)) <= 1e-9) {
      member[c] = 1;
      continue;
    }
    throw ResolutionError("image of piece " + std::to_string(i + 1) + " under \"" +
                          word_name + "\" is not a union of cells (cell \"" +
                          a.cells()[c].id + "\" is covered with mass " +
                          std::to_string(s[c]) + " of " +
                          std::to_string(a.weight(c)) + ")");
  }
  return member;
}

double family_mass(const CellAction& x, const WordTransport& tw,
                   const std::vector<std::uint8_t>& P, const std::vector<std::uint8_t>& Q) {
  double total = 0.0;
  for (const auto& p : tw.pieces)
    if (P[p.src] && Q[p.dst]) total += p.W;
  return total;
}

}  // namespace

Prop2Result prop2_construct(const CellAction& a, const CellAction& b,
                            std::span<const GroupWord> F,
                            const OrderedPartition& part_a, double epsilon,
                            std::uint64_t budget, std::uint64_t seed) {
  if (!(epsilon > 0.0)) throw MalformedInputError("epsilon must be positive");
  if (part_a.label.size() != a.cell_count())
    throw MalformedInputError("partition size does not match the action");

  // Normalize F: identity first, duplicates dropped, original order kept.
  std::vector<GroupWord> family_words;
  bool has_identity = false;
  for (const GroupWord& w : F) {
    if (w.is_identity()) {
      has_identity = true;
      continue;
    }
    if (std::find(family_words.begin(), family_words.end(), w) == family_words.end())
      family_words.push_back(w);
  }
  if (!has_identity)
    throw MalformedInputError("the word family F must contain the identity");
  family_words.insert(family_words.begin(), GroupWord{a.measure().rank, {}});

  const int n = part_a.pieces;

  // Enlarged family on a: the whole space, then A_{i,j} = g_j(A_i).
  std::vector<std::vector<std::uint8_t>> fam_a;
  fam_a.push_back(std::vector<std::uint8_t>(a.cell_count(), 1));
  for (const GroupWord& g : family_words) {
    WordTransport tg = word_transport(a, g);
    for (int i = 0; i < n; ++i)
      fam_a.push_back(resolve_image(a, tg, part_a, i, format_word(g)));
  }

  // Common refinement of the family on a: group cells by membership signature.
  std::map<std::vector<std::uint8_t>, int> signature_to_piece;
  OrderedPartition refined;
  refined.label.assign(a.cell_count(), 0);
  for (std::uint32_t c = 0; c < a.cell_count(); ++c) {
    std::vector<std::uint8_t> sig(fam_a.size());
    for (std::size_t f = 0; f < fam_a.size(); ++f) sig[f] = fam_a[f][c];
    auto [it, inserted] =
        signature_to_piece.emplace(std::move(sig), static_cast<int>(signature_to_piece.size()));
    refined.label[c] = it->second;
  }
  refined.pieces = static_cast<int>(signature_to_piece.size());

  // Product word set F^-1 F, deduplicated in enumeration order.
  std::set<GroupWord, WordLess> product_set;
  for (const GroupWord& g : family_words)
    for (const GroupWord& h : family_words)
      product_set.insert(multiply(inverse(h), g));
  std::vector<GroupWord> product_words(product_set.begin(), product_set.end());

  StatsPoint target = stats_point(a, product_words, refined);
  MatchResult match = match_partition(b, target, product_words, budget, seed);

  // Assemble the b-side family: S-pieces inherit the refinement signatures,
  // so B_{i,j} is the union of matched pieces lying inside A_{i,j}.
  std::vector<std::vector<std::uint8_t>> piece_sig(refined.pieces);
  for (std::uint32_t c = 0; c < a.cell_count(); ++c) {
    int piece = refined.label[c];
    if (piece_sig[piece].empty()) {
      piece_sig[piece].resize(fam_a.size());
      for (std::size_t f = 0; f < fam_a.size(); ++f) piece_sig[piece][f] = fam_a[f][c];
    }
  }
  std::vector<std::vector<std::uint8_t>> fam_b(fam_a.size());
  for (auto& member : fam_b) member.assign(b.cell_count(), 0);
  for (std::uint32_t c = 0; c < b.cell_count(); ++c) {
    int piece = match.part.label[c];
    for (std::size_t f = 0; f < fam_a.size(); ++f)
      if (piece_sig[piece][f]) fam_b[f][c] = 1;
  }

  // Achieved family discrepancy over the product words.
  double delta_achieved = 0.0;
  for (const GroupWord& w : product_words) {
    WordTransport twa = word_transport(a, w);
    WordTransport twb = word_transport(b, w);
    for (std::size_t p = 0; p < fam_a.size(); ++p)
      for (std::size_t q = 0; q < fam_a.size(); ++q) {
        double va = family_mass(a, twa, fam_a[p], fam_a[q]);
        double vb = family_mass(b, twb, fam_b[p], fam_b[q]);
        delta_achieved = std::max(delta_achieved, std::abs(va - vb));
      }
  }

  // B_i = B_{i,0}: family entries 1..n are the identity images A_i.
  Prop2Result result;
  result.part_b.pieces = n;
  result.part_b.label.assign(b.cell_count(), 0);
  for (std::uint32_t c = 0; c < b.cell_count(); ++c) {
    int label = 0;
    for (int i = 0; i < n; ++i)
      if (fam_b[1 + static_cast<std::size_t>(i)][c]) label = i;
    result.part_b.label[c] = label;
  }

  result.two_sided = two_sided_discrepancy(a, b, family_words, part_a, result.part_b);
  result.certificate.epsilon = epsilon;
  result.certificate.delta_achieved = delta_achieved;
  result.certificate.match_discrepancy = match.discrepancy;
  result.certificate.certified = delta_achieved < epsilon / 7.0;
  result.certificate.two_sided = result.two_sided;
  result.certificate.bound_holds =
      result.two_sided <= 7.0 * delta_achieved + kStructuralTol;
  result.certificate.refinement_pieces = refined.pieces;
  return result;
}

}
