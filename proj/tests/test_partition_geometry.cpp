#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "statact/cell_action.hpp"
#include "statact/errors.hpp"
#include "statact/group_words.hpp"
#include "statact/model_library.hpp"
#include "statact/partition_geometry.hpp"
#include "oracles.hpp"

using namespace statact;

namespace {

StepDistribution m2() { return StepDistribution::uniform_nearest_neighbor(2); }

GroupWord gw(std::vector<int> letters) { return reduce(2, letters); }

CellAction b22() { return boundary_action({2, 2, m2()}); }

// Piece 0 collects the cells whose id starts with the letter a.
OrderedPartition first_letter_partition(const CellAction& a) {
  std::map<std::string, int> labels;
  for (const auto& c : a.cells())
    labels[c.id] = parse_word(c.id, a.measure().rank).letters.front() == 1 ? 0 : 1;
  return partition_from_ids(a, labels, 2);
}

OrderedPartition alternating_partition(const CellAction& a, int pieces) {
  OrderedPartition p;
  p.pieces = pieces;
  p.label.resize(a.cell_count());
  for (std::size_t i = 0; i < a.cell_count(); ++i)
    p.label[i] = static_cast<int>(i % pieces);
  return p;
}

bool near(const std::vector<double>& a, const std::vector<double>& b, double tol) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::abs(a[i] - b[i]) > tol) return false;
  return true;
}

const DeltaTerm& term_at(const DeltaReport& rep, int m, int n) {
  for (const auto& t : rep.terms)
    if (t.m == m && t.n == n) return t;
  throw std::logic_error("missing term");
}

}  // namespace

TEST_CASE("stats point layout and normalization") {
  CellAction b = b22();
  OrderedPartition part = first_letter_partition(b);
  std::vector<GroupWord> words{gw({1}), gw({2})};
  StatsPoint p = stats_point(b, words, part);
  CHECK(p.words == 2);
  CHECK(p.pieces == 2);
  REQUIRE(p.v.size() == 8);
  // a(A_0) = [a a] sits inside A_0.
  CHECK(p.at(0, 0, 0) == doctest::Approx(1.0 / 12).epsilon(1e-12));
  CHECK(p.at(0, 0, 1) == doctest::Approx(0.0).epsilon(1e-15));
  // b(A_0) = [b a] lands in the complement.
  CHECK(p.at(1, 0, 0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(p.at(1, 0, 1) == doctest::Approx(1.0 / 12).epsilon(1e-12));
  for (int k = 0; k < 2; ++k) {
    double s = 0.0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) s += p.at(k, i, j);
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
  OrderedPartition bad = part;
  bad.label.pop_back();
  CHECK_THROWS_AS(stats_point(b, words, bad), MalformedInputError);
}

TEST_CASE("exact cloud of a two-atom trivial action") {
  CellAction t = trivial_action({0.3, 0.7}, m2());
  std::vector<GroupWord> words = enumerate_words(2, 1);  // identity only
  StatsCloud c = cloud(t, words, 2, CloudMode::Exact, 100, 1);
  REQUIRE(c.points.size() == 4);
  std::vector<std::vector<double>> expected{
      {0.0, 0.0, 0.0, 1.0}, {0.3, 0.0, 0.0, 0.7}, {0.7, 0.0, 0.0, 0.3},
      {1.0, 0.0, 0.0, 0.0}};
  for (std::size_t i = 0; i < 4; ++i) CHECK(near(c.points[i].v, expected[i], 1e-15));

  // Equal atoms collapse the two mixed assignments into one point.
  CellAction h = trivial_action({0.5, 0.5}, m2());
  CHECK(cloud(h, words, 2, CloudMode::Exact, 100, 1).points.size() == 3);

  CHECK_THROWS_AS(cloud(t, words, 2, CloudMode::Exact, 3, 1), BudgetError);
  CHECK_THROWS_AS(cloud(t, words, 0, CloudMode::Exact, 100, 1), MalformedInputError);
  CHECK_THROWS_AS(cloud(t, words, 2, CloudMode::Exact, 0, 1), MalformedInputError);
}

TEST_CASE("exact cloud equals the brute enumeration") {
  std::map<int, std::vector<std::uint32_t>> perms;
  perms[1] = {1, 2, 0};
  perms[2] = {1, 0, 2};
  CellAction a = finite_bijective(perms, {1.0 / 3, 1.0 / 3, 1.0 / 3}, m2());
  std::vector<GroupWord> words = enumerate_words(2, 3);
  StatsCloud c = cloud(a, words, 2, CloudMode::Exact, 1000, 1);
  std::vector<std::vector<double>> brute = oracle::brute_points(a, words, 2);
  CHECK(brute.size() == 8);
  // Mutual containment at the dedup tolerance.
  for (const auto& bp : brute) {
    double best = 1.0;
    for (const auto& cp : c.points) {
      double d = 0.0;
      for (std::size_t i = 0; i < bp.size(); ++i)
        d = std::max(d, std::abs(bp[i] - cp.v[i]));
      best = std::min(best, d);
    }
    CHECK(best <= 1e-12);
  }
  for (const auto& cp : c.points) {
    double best = 1.0;
    for (const auto& bp : brute) {
      double d = 0.0;
      for (std::size_t i = 0; i < bp.size(); ++i)
        d = std::max(d, std::abs(bp[i] - cp.v[i]));
      best = std::min(best, d);
    }
    CHECK(best <= 1e-12);
  }
}

TEST_CASE("sampled clouds are subsets of the exact cloud") {
  CellAction b = b22();
  std::vector<GroupWord> words = enumerate_words(2, 2);
  StatsCloud exact = cloud(b, words, 2, CloudMode::Exact, 10000, 1);
  StatsCloud sampled = cloud(b, words, 2, CloudMode::Sampled, 300, 42);
  CHECK(!sampled.points.empty());
  CHECK(sampled.points.size() <= exact.points.size());
  for (const auto& p : sampled.points) {
    double best = 1.0;
    for (const auto& q : exact.points) best = std::min(best, linf_distance(p, q));
    CHECK(best <= 1e-12);
  }
}

TEST_CASE("directed hausdorff matches the brute oracle") {
  std::map<int, std::vector<std::uint32_t>> perms;
  perms[1] = {1, 2, 0};
  perms[2] = {1, 0, 2};
  CellAction a = finite_bijective(perms, {1.0 / 3, 1.0 / 3, 1.0 / 3}, m2());
  CellAction t = trivial_action({0.3, 0.7}, m2());
  std::vector<GroupWord> words = enumerate_words(2, 3);
  StatsCloud ca = cloud(a, words, 2, CloudMode::Exact, 1000, 1);
  StatsCloud ct = cloud(t, words, 2, CloudMode::Exact, 1000, 1);
  auto brute_a = oracle::brute_points(a, words, 2);
  auto brute_t = oracle::brute_points(t, words, 2);
  CHECK(directed_hausdorff(ca, ct) ==
        doctest::Approx(oracle::brute_directed_hausdorff(brute_a, brute_t)).epsilon(1e-12));
  CHECK(directed_hausdorff(ct, ca) ==
        doctest::Approx(oracle::brute_directed_hausdorff(brute_t, brute_a)).epsilon(1e-12));
  CHECK(directed_hausdorff(ca, ca) == 0.0);

  // The profile agrees with per-prefix brute runs.
  std::vector<double> prof = directed_hausdorff_profile(ca, ct);
  REQUIRE(prof.size() == words.size());
  for (std::size_t m = 1; m <= words.size(); ++m) {
    std::vector<GroupWord> prefix(words.begin(), words.begin() + m);
    auto ba = oracle::brute_points(a, prefix, 2);
    auto bt = oracle::brute_points(t, prefix, 2);
    CHECK(prof[m - 1] ==
          doctest::Approx(oracle::brute_directed_hausdorff(ba, bt)).epsilon(1e-12));
  }
}

TEST_CASE("delta terms match brute per-truncation values") {
  std::map<int, std::vector<std::uint32_t>> perms;
  perms[1] = {1, 2, 0};
  perms[2] = {1, 0, 2};
  CellAction a = finite_bijective(perms, {1.0 / 3, 1.0 / 3, 1.0 / 3}, m2());
  CellAction t = trivial_action({0.3, 0.7}, m2());
  DeltaReport rep = delta(a, t, 3, 2, CloudMode::Exact, 1000000, 1);
  CHECK(rep.complete());
  CHECK(rep.transports_exact);
  CHECK(rep.terms.size() == 6);
  std::vector<GroupWord> words = enumerate_words(2, 3);
  double truncated = 0.0;
  for (const auto& term : rep.terms) {
    std::vector<GroupWord> prefix(words.begin(), words.begin() + term.m);
    auto ba = oracle::brute_points(a, prefix, term.n);
    auto bt = oracle::brute_points(t, prefix, term.n);
    double want = std::max(oracle::brute_directed_hausdorff(ba, bt),
                           oracle::brute_directed_hausdorff(bt, ba));
    CHECK(term.ok);
    CHECK(term.dh == doctest::Approx(want).epsilon(1e-12));
    truncated += std::ldexp(term.dh, -(term.m + term.n));
  }
  CHECK(rep.truncated_value == doctest::Approx(truncated).epsilon(1e-15));

  // Symmetry of the metric.
  DeltaReport rev = delta(t, a, 3, 2, CloudMode::Exact, 1000000, 1);
  CHECK(rev.truncated_value == doctest::Approx(rep.truncated_value).epsilon(1e-15));

  CHECK_THROWS_AS(delta(a, t, 0, 2, CloudMode::Exact, 1000, 1), MalformedInputError);
  CellAction r3 = trivial_action({1.0}, StepDistribution::uniform_nearest_neighbor(3));
  CHECK_THROWS_AS(delta(a, r3, 2, 2, CloudMode::Exact, 1000, 1), MalformedInputError);
}

TEST_CASE("tail bounds of the truncation") {
  CellAction one = trivial_action({1.0}, m2());
  CHECK(delta(one, one, 6, 6, CloudMode::Exact, 1000000, 1).tail_bound ==
        doctest::Approx(127.0 / 4096).epsilon(1e-15));
  CHECK(delta(one, one, 4, 2, CloudMode::Exact, 1000, 1).tail_bound ==
        doctest::Approx(19.0 / 64).epsilon(1e-15));
  CHECK(delta(one, one, 3, 2, CloudMode::Exact, 1000, 1).tail_bound ==
        doctest::Approx(11.0 / 32).epsilon(1e-15));
  CHECK(delta(one, one, 2, 2, CloudMode::Exact, 1000, 1).tail_bound ==
        doctest::Approx(0.4375).epsilon(1e-15));
  CHECK(delta(one, one, 2, 2, CloudMode::Exact, 1000, 1).truncated_value == 0.0);
}

TEST_CASE("budget overruns are recorded per term") {
  CellAction b = b22();
  CellAction t = trivial_action({0.3, 0.7}, m2());
  DeltaReport rep = delta(b, t, 2, 2, CloudMode::Exact, 100, 1);
  CHECK(!rep.complete());
  // n = 1 fits (one assignment), n = 2 needs 2^12 on the boundary side.
  CHECK(term_at(rep, 1, 1).ok);
  CHECK(term_at(rep, 2, 1).ok);
  CHECK(!term_at(rep, 1, 2).ok);
  CHECK(!term_at(rep, 2, 2).ok);
  CHECK(term_at(rep, 1, 2).error.find("budget") != std::string::npos);
  CHECK(term_at(rep, 1, 2).dh == 0.0);
  // Only ok terms contribute; single-piece terms are all zero here.
  CHECK(rep.truncated_value == 0.0);
}

TEST_CASE("frozen truncation values for boundary vs trivial") {
  CellAction b = b22();
  CellAction t = trivial_action({0.3, 0.7}, m2());
  DeltaReport rep = delta(b, t, 4, 2, CloudMode::Exact, 1000000, 1);
  CHECK(rep.complete());
  // One-word two-piece term: max over subset masses of the distance to
  // {0, 0.3, 0.7, 1} is attained at mass 1/2.
  CHECK(term_at(rep, 1, 2).dh == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(rep.truncated_value == doctest::Approx(0.094618055555555552).epsilon(1e-9));

  DeltaReport def = containment_report(t, b, 3, 2, CloudMode::Exact, 1000000, 1);
  CHECK(def.directed);
  // Best boundary approximation of the 0.3 atom is 4 cells of mass 1/12.
  CHECK(term_at(def, 1, 2).dh == doctest::Approx(4.0 / 12 - 0.3).epsilon(1e-12));
  double defect = containment_defect(t, b, 3, 2, CloudMode::Exact, 1000000, 1);
  CHECK(defect == doctest::Approx(def.truncated_value).epsilon(1e-15));
  CHECK(defect > 1e-3);
}

TEST_CASE("stabilization weakly contains the base action") {
  CellAction b1 = boundary_action({2, 1, m2()});
  CellAction s = stabilize(b1, {0.5, 0.5});
  CHECK(containment_defect(b1, s, 3, 2, CloudMode::Exact, 1000000, 1) == 0.0);
  // The reverse direction sees the finer atom granularity at this truncation.
  CHECK(containment_defect(s, b1, 1, 2, CloudMode::Exact, 1000000, 1) > 0.0);
}

TEST_CASE("match_partition exhaustive scan and tie-breaking") {
  CellAction t = trivial_action({0.3, 0.7}, m2());
  std::vector<GroupWord> words = enumerate_words(2, 2);
  OrderedPartition split;
  split.pieces = 2;
  split.label = {0, 1};
  StatsPoint target = stats_point(t, words, split);
  MatchResult res = match_partition(t, target, words, 1000, 1);
  CHECK(res.exhaustive);
  CHECK(res.discrepancy == 0.0);
  CHECK(res.part.label == std::vector<int>{0, 1});

  auto [bd, bidx] = oracle::brute_best_match(t, words, target.v, 2);
  CHECK(bd == res.discrepancy);
  CHECK(bidx == 2);  // little-endian encoding of (0, 1)

  // Equal atoms: assignments (1,0) and (0,1) give the same point; the scan
  // settles on the smaller index, which is (1,0).
  CellAction h = trivial_action({0.5, 0.5}, m2());
  StatsPoint htarget = stats_point(h, words, split);
  MatchResult hres = match_partition(h, htarget, words, 1000, 1);
  CHECK(hres.discrepancy == 0.0);
  CHECK(hres.part.label == std::vector<int>{1, 0});
  auto [hd, hidx] = oracle::brute_best_match(h, words, htarget.v, 2);
  CHECK(hd == 0.0);
  CHECK(hidx == 1);

  StatsPoint wrong = htarget;
  wrong.v.pop_back();
  CHECK_THROWS_AS(match_partition(h, wrong, words, 1000, 1), MalformedInputError);
}

TEST_CASE("match_partition annealing reaches an achievable target") {
  std::vector<double> w(8, 0.125);
  CellAction t = trivial_action(w, m2());
  std::vector<GroupWord> words = enumerate_words(2, 2);
  OrderedPartition half = alternating_partition(t, 2);
  StatsPoint target = stats_point(t, words, half);
  MatchResult res = match_partition(t, target, words, 100, 7);  // 2^8 > budget
  CHECK(!res.exhaustive);
  CHECK(res.discrepancy == 0.0);
}

TEST_CASE("two-sided discrepancy against direct permutation counting") {
  std::map<int, std::vector<std::uint32_t>> pa;
  pa[1] = {1, 2, 3, 0};
  pa[2] = {1, 0, 2, 3};
  std::map<int, std::vector<std::uint32_t>> pb;
  pb[1] = {2, 3, 0, 1};
  pb[2] = {0, 1, 2, 3};
  CellAction a = finite_bijective(pa, {0.25, 0.25, 0.25, 0.25}, m2());
  CellAction b = finite_bijective(pb, {0.25, 0.25, 0.25, 0.25}, m2());
  OrderedPartition part_a;
  part_a.pieces = 2;
  part_a.label = {0, 1, 1, 0};
  OrderedPartition part_b;
  part_b.pieces = 2;
  part_b.label = {0, 0, 1, 1};
  std::vector<GroupWord> F{gw({}), gw({1}), gw({1, 2})};

  auto side = [&](const std::map<int, std::vector<std::uint32_t>>& perms,
                  const OrderedPartition& part, const GroupWord& g, const GroupWord& h,
                  int i, int j) {
    double s = 0.0;
    for (std::uint32_t c = 0; c < 4; ++c) {
      bool in_g = part.label[oracle::apply_word(perms, inverse(g), c)] == i;
      bool in_h = part.label[oracle::apply_word(perms, inverse(h), c)] == j;
      if (in_g && in_h) s += 0.25;
    }
    return s;
  };
  double want = 0.0;
  for (const GroupWord& g : F)
    for (const GroupWord& h : F)
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          want = std::max(
              want, std::abs(side(pa, part_a, g, h, i, j) - side(pb, part_b, g, h, i, j)));

  CHECK(two_sided_discrepancy(a, b, F, part_a, part_b) ==
        doctest::Approx(want).epsilon(1e-12));

  OrderedPartition mismatch = part_b;
  mismatch.pieces = 3;
  CHECK_THROWS_AS(two_sided_discrepancy(a, b, F, part_a, mismatch), MalformedInputError);
}

TEST_CASE("prop2 on identical boundary actions certifies zero") {
  CellAction a = b22();
  OrderedPartition part = first_letter_partition(a);
  std::vector<GroupWord> F{gw({}), gw({1})};
  Prop2Result res = prop2_construct(a, a, F, part, 0.1, 1000000, 1);
  CHECK(res.certificate.refinement_pieces == 3);
  CHECK(res.certificate.match_discrepancy == 0.0);
  CHECK(res.certificate.delta_achieved == 0.0);
  CHECK(res.two_sided == 0.0);
  CHECK(res.certificate.certified);
  CHECK(res.certificate.bound_holds);
  // The reconstructed partition reproduces the first-letter split.
  CHECK(res.part_b.label == part.label);
}

TEST_CASE("prop2 across actions keeps the seven-fold bound") {
  CellAction a = b22();
  CellAction t = trivial_action({0.25, 0.75}, m2());
  OrderedPartition part = first_letter_partition(a);
  std::vector<GroupWord> F{gw({}), gw({1})};
  Prop2Result res = prop2_construct(a, t, F, part, 0.001, 1000000, 1);
  CHECK(res.certificate.delta_achieved > 0.0);
  CHECK(!res.certificate.certified);
  CHECK(res.certificate.bound_holds);
  CHECK(res.part_b.label.size() == 2);
}

TEST_CASE("prop2 requires resolvable images and the identity") {
  CellAction a = b22();
  OrderedPartition alt = alternating_partition(a, 2);
  std::vector<GroupWord> F{gw({}), gw({1})};
  CHECK_THROWS_WITH_AS(prop2_construct(a, a, F, alt, 0.1, 1000000, 1),
                       doctest::Contains("not a union of cells"), ResolutionError);

  OrderedPartition part = first_letter_partition(a);
  std::vector<GroupWord> no_id{gw({1})};
  CHECK_THROWS_AS(prop2_construct(a, a, no_id, part, 0.1, 1000000, 1),
                  MalformedInputError);
  CHECK_THROWS_AS(prop2_construct(a, a, F, part, 0.0, 1000000, 1), MalformedInputError);
}

TEST_CASE("partition_from_ids validates its input") {
  CellAction t = trivial_action({0.3, 0.7}, m2());
  CHECK_THROWS_AS(partition_from_ids(t, {{"0", 0}}, 2), MalformedInputError);
  CHECK_THROWS_AS(partition_from_ids(t, {{"0", 0}, {"1", 2}}, 2), MalformedInputError);
  CHECK_THROWS_AS(partition_from_ids(t, {{"0", 0}, {"oops", 1}}, 2), MalformedInputError);
  OrderedPartition p = partition_from_ids(t, {{"0", 1}, {"1", 0}}, 2);
  CHECK(p.label == std::vector<int>{1, 0});
}
