#include "statact/model_library.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <string>
#include <utility>

#include "statact/errors.hpp"

namespace statact {

namespace {

void check_weights(const std::vector<double>& weights) {
  if (weights.empty()) throw MalformedInputError("weight vector must be nonempty");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w > 0.0) || w > 1.0) throw MalformedInputError("weights must lie in (0,1]");
    sum += w;
  }
  if (std::abs(sum - 1.0) > kStructuralTol)
    throw MalformedInputError("weights must sum to 1 (got " + std::to_string(sum) + ")");
}

std::vector<Cell> indexed_cells(const std::vector<double>& weights) {
  std::vector<Cell> cells(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i)
    cells[i] = {std::to_string(i), weights[i]};
  return cells;
}

}  // namespace

CellAction trivial_action(const std::vector<double>& weights, const StepDistribution& m) {
  check_weights(weights);
  std::vector<Cell> cells = indexed_cells(weights);
  auto diagonal = [cells](const GroupWord& w) {
    WordTransport t;
    t.word = w;
    t.exact = true;
    for (std::uint32_t c = 0; c < cells.size(); ++c)
      t.pieces.push_back({c, c, cells[c].weight, cells[c].weight});
    return t;
  };
  std::vector<WordTransport> stored;
  for (const auto& [w, p] : m.entries) stored.push_back(diagonal(w));
  bool ergodic = weights.size() == 1;
  return CellAction(std::move(cells), m, std::move(stored), ActionKind::Bijective,
                    ergodic, diagonal);
}

namespace {

struct PermTable {
  std::size_t n = 0;
  int rank = 0;
  std::vector<std::vector<std::uint32_t>> fwd;  // per generator 1..rank
  std::vector<std::vector<std::uint32_t>> inv;

  std::uint32_t step(int letter, std::uint32_t c) const {
    return letter > 0 ? fwd[letter - 1][c] : inv[-letter - 1][c];
  }
  std::uint32_t apply(const GroupWord& w, std::uint32_t c) const {
    for (std::size_t i = w.letters.size(); i-- > 0;) c = step(w.letters[i], c);
    return c;
  }
};

PermTable build_perm_table(const std::map<int, std::vector<std::uint32_t>>& perms,
                           int rank) {
  PermTable t;
  t.rank = rank;
  if (perms.empty()) throw MalformedInputError("permutation map must be nonempty");
  t.n = perms.begin()->second.size();
  if (t.n == 0) throw MalformedInputError("permutations must act on at least one point");
  t.fwd.resize(rank);
  t.inv.resize(rank);
  for (const auto& [g, p] : perms)
    if (g < 1 || g > rank)
      throw MalformedInputError("permutation generator index " + std::to_string(g) +
                                " outside 1.." + std::to_string(rank));
  for (int g = 1; g <= rank; ++g) {
    auto it = perms.find(g);
    if (it == perms.end())
      throw MalformedInputError("missing permutation for generator " + std::to_string(g));
    const auto& p = it->second;
    if (p.size() != t.n) throw MalformedInputError("permutation arity mismatch");
    std::vector<std::uint32_t> inv(t.n, 0);
    std::vector<std::uint8_t> seen(t.n, 0);
    for (std::uint32_t c = 0; c < t.n; ++c) {
      if (p[c] >= t.n || seen[p[c]])
        throw MalformedInputError("generator " + std::to_string(g) +
                                  " is not a permutation");
      seen[p[c]] = 1;
      inv[p[c]] = c;
    }
    t.fwd[g - 1] = p;
    t.inv[g - 1] = std::move(inv);
  }
  return t;
}

std::vector<std::vector<std::uint32_t>> orbits_of(const PermTable& t,
                                                  const StepDistribution& m) {
  // Union-find over the supp(m) permutations; orbits of the generated group.
  std::vector<std::uint32_t> parent(t.n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<std::uint32_t(std::uint32_t)> find = [&](std::uint32_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& [w, p] : m.entries)
    for (std::uint32_t c = 0; c < t.n; ++c) {
      std::uint32_t a = find(c), b = find(t.apply(w, c));
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
  std::map<std::uint32_t, std::vector<std::uint32_t>> groups;
  for (std::uint32_t c = 0; c < t.n; ++c) groups[find(c)].push_back(c);
  std::vector<std::vector<std::uint32_t>> orbits;
  for (auto& [root, members] : groups) orbits.push_back(std::move(members));
  return orbits;
}

}  // namespace

CellAction finite_bijective(const std::map<int, std::vector<std::uint32_t>>& perms,
                            const std::vector<double>& weights,
                            const StepDistribution& m) {
  PermTable table = build_perm_table(perms, m.rank);
  if (weights.size() != table.n)
    throw MalformedInputError("weight count must match the permutation arity");
  check_weights(weights);
  std::vector<Cell> cells = indexed_cells(weights);

  auto perm_transport = [&](const GroupWord& w) {
    WordTransport t;
    t.word = w;
    t.exact = true;
    for (std::uint32_t c = 0; c < table.n; ++c) {
      std::uint32_t d = table.apply(w, c);
      t.pieces.push_back({c, d, weights[c], weights[d]});
    }
    std::sort(t.pieces.begin(), t.pieces.end(),
              [](const TransportPiece& x, const TransportPiece& y) {
                return x.src != y.src ? x.src < y.src : x.dst < y.dst;
              });
    return t;
  };

  std::vector<WordTransport> stored;
  std::set<GroupWord, WordLess> have;
  for (int g = 1; g <= m.rank; ++g)
    for (int sign : {1, -1}) {
      GroupWord l{m.rank, {sign * g}};
      stored.push_back(perm_transport(l));
      have.insert(l);
    }
  for (const auto& [w, p] : m.entries)
    if (!w.is_identity() && !have.count(w)) stored.push_back(perm_transport(w));

  bool ergodic = orbits_of(table, m).size() == 1;
  return CellAction(std::move(cells), m, std::move(stored), ActionKind::Bijective,
                    ergodic);
}

SimplexDescription stationary_simplex(const std::map<int, std::vector<std::uint32_t>>& perms,
                                      const StepDistribution& m) {
  PermTable table = build_perm_table(perms, m.rank);
  SimplexDescription d;
  d.orbits = orbits_of(table, m);
  for (const auto& orbit : d.orbits) {
    std::vector<double> point(table.n, 0.0);
    for (std::uint32_t c : orbit) point[c] = 1.0 / static_cast<double>(orbit.size());
    d.extreme_points.push_back(std::move(point));
  }
  return d;
}

namespace {

// First-passage data of the inverted-step walk on the free group: f[slot] is
// the probability that the walk started at the identity ever reaches the
// letter, E[slot] the probability that the first step goes there and never
// returns, G[slot] the probability that the boundary point does not start
// with the letter's inverse. Harmonic measure of a cylinder [w] is
// prod_i f(w_i) * G(w_last).
struct BoundaryKernel {
  int rank = 0;
  std::vector<double> f;  // indexed by letter_key
  std::vector<double> G;

  double cylinder(std::span<const int> letters) const {
    if (letters.empty()) return 1.0;
    double v = 1.0;
    for (int l : letters) v *= f[letter_key(l)];
    return v * G[letter_key(letters.back())];
  }
};

BoundaryKernel make_kernel(const BoundarySpec& spec) {
  if (spec.rank < 2) throw MalformedInputError("boundary model requires rank >= 2");
  if (spec.depth < 1) throw MalformedInputError("boundary model requires depth >= 1");
  if (spec.m.rank != spec.rank)
    throw MalformedInputError("step distribution rank does not match the boundary rank");
  const std::size_t slots = 2 * static_cast<std::size_t>(spec.rank);
  if (!spec.m.nearest_neighbor() || spec.m.entries.size() != slots)
    throw MalformedInputError(
        "boundary model requires a nearest-neighbor measure supported on all " +
        std::to_string(slots) + " letters");

  // Inverted step law: the harmonic measure of the walk with steps
  // p(x) = m(x^-1) is stationary in the convention sum_g m(g) mu(g A) = mu(A).
  std::vector<double> p(slots, 0.0);
  for (const auto& [w, prob] : spec.m.entries)
    p[letter_key(-w.letters[0])] = prob;

  BoundaryKernel k;
  k.rank = spec.rank;
  k.f.assign(slots, 0.0);
  double pmin = *std::min_element(p.begin(), p.end());
  double pmax = *std::max_element(p.begin(), p.end());
  if (pmin == pmax) {
    // Symmetric walk: f solves (2r-1) f^2 - 2r f + 1 = 0, minimal root.
    std::fill(k.f.begin(), k.f.end(), 1.0 / (2.0 * spec.rank - 1.0));
  } else {
    // Damped fixed point for f(s) = p(s) + f(s) * sum_{x != s} p(x) f(x^-1),
    // monotone from 0 to the minimal solution.
    std::vector<double> f(slots, 0.0), next(slots, 0.0);
    double residual = 1.0;
    bool converged = false;
    for (int iter = 0; iter < 100000; ++iter) {
      residual = 0.0;
      for (std::size_t s = 0; s < slots; ++s) {
        double cross = 0.0;
        for (std::size_t x = 0; x < slots; ++x)
          if (x != s) cross += p[x] * f[x ^ 1];  // x^1 is the inverse slot
        double phi = p[s] + f[s] * cross;
        residual = std::max(residual, std::abs(phi - f[s]));
        next[s] = 0.5 * (f[s] + phi);
      }
      if (residual <= 1e-12) {
        converged = true;
        break;
      }
      f.swap(next);
    }
    if (!converged)
      throw SolverError("first-passage fixed point did not converge; residual " +
                        std::to_string(residual));
    k.f = f;
  }

  std::vector<double> E(slots, 0.0);
  double total = 0.0;
  for (std::size_t s = 0; s < slots; ++s) {
    E[s] = p[s] * (1.0 - k.f[s ^ 1]);
    total += E[s];
  }
  if (!(total > 1e-14))
    throw SolverError("walk is not transient: total escape probability vanished");
  k.G.assign(slots, 0.0);
  for (std::size_t s = 0; s < slots; ++s) k.G[s] = 1.0 - E[s ^ 1] / total;
  return k;
}

struct BoundaryData {
  BoundaryKernel kernel;
  int depth = 0;
  double scale = 1.0;  // normalizes depth-level cylinder masses to sum 1
  std::vector<GroupWord> cell_words;
  std::map<GroupWord, std::uint32_t, WordLess> cell_index;

  double nu(std::span<const int> letters) const {
    return scale * kernel.cylinder(letters);
  }
  std::uint32_t cell_of_prefix(const std::vector<int>& u) const {
    GroupWord w{kernel.rank, std::vector<int>(u.begin(), u.begin() + depth)};
    return cell_index.at(w);
  }
};

// Accumulates (T, W) mass into the pieces of one source cell, recursing on
// sub-cylinders whenever the word cancels the entire current prefix.
void boundary_accumulate(const BoundaryData& d, const std::vector<int>& g,
                         std::vector<int>& s, std::uint32_t src,
                         std::vector<double>& accT, std::vector<double>& accW) {
  const std::size_t K = d.cell_words.size();
  std::size_t c = 0;
  while (c < g.size() && c < s.size() && g[g.size() - 1 - c] == -s[c]) ++c;
  if (c == s.size()) {
    // The whole prefix cancels into g; refine [s] one letter deeper.
    int last = s.back();
    for (int gen = 1; gen <= d.kernel.rank; ++gen)
      for (int letter : {gen, -gen}) {
        if (letter == -last) continue;
        s.push_back(letter);
        boundary_accumulate(d, g, s, src, accT, accW);
        s.pop_back();
      }
    return;
  }
  // g maps [s] homeomorphically onto [u], u = g * s reduced.
  std::vector<int> u(g.begin(), g.end() - static_cast<std::ptrdiff_t>(c));
  u.insert(u.end(), s.begin() + static_cast<std::ptrdiff_t>(c), s.end());
  if (static_cast<int>(u.size()) >= d.depth) {
    std::uint32_t dst = d.cell_of_prefix(u);
    accT[src * K + dst] += d.nu(s);
    accW[src * K + dst] += d.nu(u);
    return;
  }
  // [u] is coarser than a cell: split over reduced extensions to cell depth.
  // The preimage of [u w] inside [s] is [s w].
  std::function<void(std::vector<int>&, std::vector<int>&)> extend =
      [&](std::vector<int>& uu, std::vector<int>& ss) {
        if (static_cast<int>(uu.size()) == d.depth) {
          std::uint32_t dst = d.cell_index.at(GroupWord{d.kernel.rank, uu});
          accT[src * K + dst] += d.nu(ss);
          accW[src * K + dst] += d.nu(uu);
          return;
        }
        int last = uu.back();
        for (int gen = 1; gen <= d.kernel.rank; ++gen)
          for (int letter : {gen, -gen}) {
            if (letter == -last) continue;
            uu.push_back(letter);
            ss.push_back(letter);
            extend(uu, ss);
            uu.pop_back();
            ss.pop_back();
          }
      };
  extend(u, s);
}

WordTransport boundary_transport(const BoundaryData& d, const std::vector<Cell>& cells,
                                 const GroupWord& g) {
  const std::size_t K = d.cell_words.size();
  std::vector<double> accT(K * K, 0.0), accW(K * K, 0.0);
  for (std::uint32_t src = 0; src < K; ++src) {
    std::vector<int> s = d.cell_words[src].letters;
    boundary_accumulate(d, g.letters, s, src, accT, accW);
  }
  WordTransport t;
  t.word = g;
  t.exact = g.length() <= d.depth - 1;
  for (std::size_t i = 0; i < K * K; ++i)
    if (accT[i] > 0.0 || accW[i] > 0.0)
      t.pieces.push_back({static_cast<std::uint32_t>(i / K),
                          static_cast<std::uint32_t>(i % K), accT[i], accW[i]});
  t.pieces = sanitize_pieces(std::move(t.pieces), cells);
  return t;
}

}  // namespace

CellAction boundary_action(const BoundarySpec& spec) {
  auto data = std::make_shared<BoundaryData>();
  data->kernel = make_kernel(spec);
  data->depth = spec.depth;
  data->cell_words = words_of_length(spec.rank, spec.depth);

  double total = 0.0;
  for (const auto& w : data->cell_words) total += data->kernel.cylinder(w.letters);
  data->scale = 1.0 / total;

  std::vector<Cell> cells;
  cells.reserve(data->cell_words.size());
  for (std::uint32_t i = 0; i < data->cell_words.size(); ++i) {
    const GroupWord& w = data->cell_words[i];
    data->cell_index.emplace(w, i);
    cells.push_back({format_word(w), data->scale * data->kernel.cylinder(w.letters)});
  }

  auto shared_cells = std::make_shared<std::vector<Cell>>(cells);
  TransportProvider provider = [data, shared_cells](const GroupWord& g) {
    if (g.rank != data->kernel.rank)
      throw MalformedInputError("word rank mismatch for " + format_word(g));
    return boundary_transport(*data, *shared_cells, g);
  };

  std::vector<WordTransport> stored;
  for (const auto& [w, p] : spec.m.entries) stored.push_back(provider(w));
  return CellAction(std::move(cells), spec.m, std::move(stored), ActionKind::Markov,
                    /*ergodic=*/true, std::move(provider));
}

double boundary_cylinder_mass(const BoundarySpec& spec, const GroupWord& w) {
  if (w.rank != spec.rank)
    throw MalformedInputError("word rank mismatch for " + format_word(w));
  BoundaryKernel k = make_kernel(spec);
  return k.cylinder(w.letters);
}

namespace {

WordTransport merge_offset_scaled(const WordTransport& ta, const WordTransport& tb,
                                  double t, std::uint32_t offset,
                                  const std::vector<Cell>& cells) {
  WordTransport out;
  out.word = ta.word;
  out.exact = ta.exact && tb.exact;
  out.pieces.reserve(ta.pieces.size() + tb.pieces.size());
  for (const auto& p : ta.pieces) out.pieces.push_back({p.src, p.dst, t * p.T, t * p.W});
  for (const auto& p : tb.pieces)
    out.pieces.push_back({p.src + offset, p.dst + offset, (1.0 - t) * p.T,
                          (1.0 - t) * p.W});
  out.pieces = sanitize_pieces(std::move(out.pieces), cells);
  return out;
}

}  // namespace

CellAction convex_combine(const CellAction& a, const CellAction& b, double t) {
  if (!same_distribution(a.measure(), b.measure()))
    throw MalformedInputError("convex combination requires matching step distributions");
  if (!(t > 0.0 && t < 1.0))
    throw MalformedInputError("combination coefficient must lie strictly in (0,1)");

  std::vector<Cell> cells;
  cells.reserve(a.cell_count() + b.cell_count());
  for (const auto& c : a.cells()) cells.push_back({"A." + c.id, t * c.weight});
  for (const auto& c : b.cells()) cells.push_back({"B." + c.id, (1.0 - t) * c.weight});
  const std::uint32_t offset = static_cast<std::uint32_t>(a.cell_count());

  std::vector<WordTransport> stored;
  for (const auto& [w, ta] : a.stored_transports()) {
    auto itb = b.stored_transports().find(w);
    if (itb != b.stored_transports().end())
      stored.push_back(merge_offset_scaled(ta, itb->second, t, offset, cells));
  }

  auto pa = std::make_shared<const CellAction>(a);
  auto pb = std::make_shared<const CellAction>(b);
  auto shared_cells = std::make_shared<std::vector<Cell>>(cells);
  TransportProvider provider = [pa, pb, t, offset, shared_cells](const GroupWord& w) {
    return merge_offset_scaled(word_transport(*pa, w), word_transport(*pb, w), t, offset,
                               *shared_cells);
  };

  ActionKind kind = (a.kind() == ActionKind::Bijective && b.kind() == ActionKind::Bijective)
                        ? ActionKind::Bijective
                        : ActionKind::Markov;
  return CellAction(std::move(cells), a.measure(), std::move(stored), kind,
                    /*ergodic=*/false, std::move(provider));
}

namespace {

WordTransport expand_product(const WordTransport& ta, const std::vector<double>& v,
                             const std::vector<Cell>& cells) {
  const std::uint32_t J = static_cast<std::uint32_t>(v.size());
  WordTransport out;
  out.word = ta.word;
  out.exact = ta.exact;
  out.pieces.reserve(ta.pieces.size() * J);
  for (const auto& p : ta.pieces)
    for (std::uint32_t j = 0; j < J; ++j)
      out.pieces.push_back({p.src * J + j, p.dst * J + j, p.T * v[j], p.W * v[j]});
  out.pieces = sanitize_pieces(std::move(out.pieces), cells);
  return out;
}

}  // namespace

CellAction stabilize(const CellAction& a, const std::vector<double>& trivial_weights) {
  check_weights(trivial_weights);
  const std::uint32_t J = static_cast<std::uint32_t>(trivial_weights.size());

  std::vector<Cell> cells;
  cells.reserve(a.cell_count() * J);
  for (const auto& c : a.cells())
    for (std::uint32_t j = 0; j < J; ++j)
      cells.push_back({c.id + "|" + std::to_string(j), c.weight * trivial_weights[j]});

  std::vector<WordTransport> stored;
  for (const auto& [w, t] : a.stored_transports())
    stored.push_back(expand_product(t, trivial_weights, cells));

  auto pa = std::make_shared<const CellAction>(a);
  auto weights = std::make_shared<const std::vector<double>>(trivial_weights);
  auto shared_cells = std::make_shared<std::vector<Cell>>(cells);
  TransportProvider provider = [pa, weights, shared_cells](const GroupWord& w) {
    return expand_product(word_transport(*pa, w), *weights, *shared_cells);
  };

  bool ergodic = a.ergodic() && J == 1;
  return CellAction(std::move(cells), a.measure(), std::move(stored), a.kind(), ergodic,
                    std::move(provider));
}

}
