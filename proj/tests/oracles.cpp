#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace statact::oracle {

double uniform_cylinder(int rank, int len) {
  return (1.0 / (2 * rank)) * std::pow(2.0 * rank - 1.0, 1 - len);
}

namespace {

std::vector<int> all_letters(int rank) {
  std::vector<int> ls;
  for (int k = 1; k <= rank; ++k) {
    ls.push_back(k);
    ls.push_back(-k);
  }
  return ls;
}

std::map<int, double> inverted_step(const StepDistribution& m) {
  std::map<int, double> p;
  for (int l : all_letters(m.rank)) {
    GroupWord w{m.rank, {-l}};
    p[l] = m.prob(w);
  }
  return p;
}

}  // namespace

std::map<int, double> first_passage(const StepDistribution& m) {
  std::map<int, double> p = inverted_step(m);
  std::map<int, double> f;
  for (auto& [l, _] : p) f[l] = 0.0;
  for (int it = 0; it < 1000000; ++it) {
    double change = 0.0;
    std::map<int, double> next;
    for (auto& [s, ps] : p) {
      double ret = 0.0;
      for (auto& [x, px] : p)
        if (x != s) ret += px * f[-x];
      next[s] = ps + f[s] * ret;
    }
    for (auto& [s, v] : next) {
      change = std::max(change, std::abs(v - f[s]));
      f[s] = v;
    }
    if (change < 1e-15) break;
  }
  return f;
}

double cylinder_mass(const StepDistribution& m, const GroupWord& w) {
  if (w.is_identity()) return 1.0;
  std::map<int, double> p = inverted_step(m);
  std::map<int, double> f = first_passage(m);
  std::map<int, double> E;
  double total = 0.0;
  for (auto& [y, py] : p) {
    E[y] = py * (1.0 - f[-y]);
    total += E[y];
  }
  double mass = 1.0;
  for (int l : w.letters) mass *= f[l];
  mass *= 1.0 - E[-w.letters.back()] / total;
  return mass;
}

std::map<GroupWord, double, WordLess> boundary_weights(const StepDistribution& m,
                                                       int depth) {
  std::map<GroupWord, double, WordLess> out;
  double sum = 0.0;
  for (const GroupWord& w : words_of_length(m.rank, depth)) {
    double v = cylinder_mass(m, w);
    out.emplace(w, v);
    sum += v;
  }
  for (auto& [w, v] : out) v /= sum;
  return out;
}

std::map<std::pair<std::string, std::string>, std::pair<double, double>>
boundary_transport(const StepDistribution& m, int depth, const GroupWord& g) {
  int deep = depth + g.length();
  // Normalized cylinder mass at any length up to the longest image word
  // |g . w| <= depth + 2|g|.
  int longest = deep + g.length();
  std::vector<double> level_sum(longest + 1, 1.0);
  for (int len = 1; len <= longest; ++len) {
    double s = 0.0;
    for (const GroupWord& w : words_of_length(m.rank, len)) s += cylinder_mass(m, w);
    level_sum[len] = s;
  }
  auto nu = [&](const GroupWord& w) {
    return cylinder_mass(m, w) / level_sum[w.length()];
  };
  auto prefix = [&](const GroupWord& w) {
    GroupWord p{w.rank, std::vector<int>(w.letters.begin(), w.letters.begin() + depth)};
    return p;
  };
  std::map<std::pair<std::string, std::string>, std::pair<double, double>> acc;
  for (const GroupWord& w : words_of_length(m.rank, deep)) {
    GroupWord u = multiply(g, w);
    if (u.length() < depth) throw std::logic_error("oracle enumeration too shallow");
    auto& slot = acc[{format_word(prefix(w)), format_word(prefix(u))}];
    slot.first += nu(w);
    slot.second += nu(u);
  }
  return acc;
}

WalkEstimate mc_harmonic(const StepDistribution& m, int depth, int walks,
                         int stop_len, std::uint64_t seed) {
  std::map<int, double> p = inverted_step(m);
  std::vector<int> letters;
  std::vector<double> cum;
  double run = 0.0;
  for (auto& [l, pl] : p) {
    letters.push_back(l);
    run += pl;
    cum.push_back(run);
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  WalkEstimate est;
  for (int i = 0; i < walks; ++i) {
    std::vector<int> pos;
    while (static_cast<int>(pos.size()) < stop_len) {
      double u = unif(rng);
      int l = letters.back();
      for (std::size_t k = 0; k < cum.size(); ++k)
        if (u <= cum[k]) {
          l = letters[k];
          break;
        }
      if (!pos.empty() && pos.back() == -l)
        pos.pop_back();
      else
        pos.push_back(l);
      ++est.steps;
    }
    GroupWord pre{m.rank, std::vector<int>(pos.begin(), pos.begin() + depth)};
    est.cylinder[pre] += 1.0;
    est.first_letter[pos.front()] += 1.0;
  }
  for (auto& [w, v] : est.cylinder) v /= walks;
  for (auto& [l, v] : est.first_letter) v /= walks;
  return est;
}

double mc_entropy_uniform(int rank, const WalkEstimate& est) {
  double h = 0.0;
  double mg = 1.0 / (2 * rank);
  for (int l = 1; l <= rank; ++l)
    for (int s : {l, -l}) {
      auto it = est.first_letter.find(-s);
      double nu_inv = it == est.first_letter.end() ? 0.0 : it->second;
      h += mg * (1.0 - 2.0 * nu_inv);
    }
  return h * std::log(2.0 * rank - 1.0);
}

std::uint32_t apply_word(const std::map<int, std::vector<std::uint32_t>>& perms,
                         const GroupWord& w, std::uint32_t c) {
  for (auto it = w.letters.rbegin(); it != w.letters.rend(); ++it) {
    int l = *it;
    const std::vector<std::uint32_t>& fwd = perms.at(std::abs(l));
    if (l > 0) {
      c = fwd[c];
    } else {
      for (std::uint32_t j = 0; j < fwd.size(); ++j)
        if (fwd[j] == c) {
          c = j;
          break;
        }
    }
  }
  return c;
}

std::vector<double> stationary_on_orbit(
    const std::map<int, std::vector<std::uint32_t>>& perms, const StepDistribution& m,
    const std::vector<std::uint32_t>& orbit) {
  std::size_t n = orbit.size();
  std::map<std::uint32_t, std::size_t> pos;
  for (std::size_t i = 0; i < n; ++i) pos[orbit[i]] = i;
  // Balance equations sum_g m(g) w[g(c)] = w[c], last row replaced by sum = 1.
  std::vector<std::vector<double>> A(n, std::vector<double>(n + 1, 0.0));
  for (std::size_t r = 0; r + 1 < n; ++r) {
    A[r][r] -= 1.0;
    for (const auto& [g, prob] : m.entries)
      A[r][pos.at(apply_word(perms, g, orbit[r]))] += prob;
  }
  for (std::size_t c = 0; c < n; ++c) A[n - 1][c] = 1.0;
  A[n - 1][n] = 1.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
    std::swap(A[col], A[piv]);
    if (std::abs(A[col][col]) < 1e-14) throw std::logic_error("singular system");
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      double k = A[r][col] / A[col][col];
      for (std::size_t c = col; c <= n; ++c) A[r][c] -= k * A[col][c];
    }
  }
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = A[i][n] / A[i][i];
  return w;
}

std::vector<std::vector<double>> brute_points(const CellAction& a,
                                              std::span<const GroupWord> words,
                                              int pieces) {
  std::size_t K = a.cell_count();
  std::uint64_t total = 1;
  for (std::size_t i = 0; i < K; ++i) total *= pieces;
  std::vector<WordTransport> ts;
  for (const GroupWord& w : words) ts.push_back(word_transport(a, w));
  std::size_t dim = words.size() * pieces * pieces;
  std::vector<std::vector<double>> out;
  out.reserve(total);
  std::vector<int> label(K);
  for (std::uint64_t idx = 0; idx < total; ++idx) {
    std::uint64_t x = idx;
    for (std::size_t c = 0; c < K; ++c) {
      label[c] = static_cast<int>(x % pieces);
      x /= pieces;
    }
    std::vector<double> v(dim, 0.0);
    for (std::size_t k = 0; k < ts.size(); ++k)
      for (const TransportPiece& p : ts[k].pieces)
        v[(k * pieces + label[p.src]) * pieces + label[p.dst]] += p.W;
    out.push_back(std::move(v));
  }
  return out;
}

double brute_directed_hausdorff(const std::vector<std::vector<double>>& A,
                                const std::vector<std::vector<double>>& B) {
  double worst = 0.0;
  for (const auto& p : A) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : B) {
      double d = 0.0;
      for (std::size_t i = 0; i < p.size(); ++i)
        d = std::max(d, std::abs(p[i] - q[i]));
      best = std::min(best, d);
    }
    worst = std::max(worst, best);
  }
  return worst <= 1e-12 ? 0.0 : worst;
}

std::pair<double, std::uint64_t> brute_best_match(const CellAction& a,
                                                  std::span<const GroupWord> words,
                                                  const std::vector<double>& target,
                                                  int pieces) {
  std::vector<std::vector<double>> pts = brute_points(a, words, pieces);
  double best = std::numeric_limits<double>::infinity();
  std::uint64_t arg = 0;
  for (std::uint64_t i = 0; i < pts.size(); ++i) {
    double d = 0.0;
    for (std::size_t c = 0; c < target.size(); ++c)
      d = std::max(d, std::abs(pts[i][c] - target[c]));
    if (d < best) {
      best = d;
      arg = i;
    }
  }
  return {best, arg};
}

}
