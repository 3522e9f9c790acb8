#include "statact/cell_action.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "statact/errors.hpp"

namespace statact {

const char* kind_name(ActionKind k) {
  switch (k) {
    case ActionKind::Bijective: return "bijective";
    case ActionKind::Markov: return "markov";
    case ActionKind::Opaque: return "opaque";
  }
  return "opaque";
}

ActionKind kind_from_name(const std::string& name) {
  if (name == "bijective") return ActionKind::Bijective;
  if (name == "markov") return ActionKind::Markov;
  if (name == "opaque") return ActionKind::Opaque;
  throw MalformedInputError("unknown action kind \"" + name + "\"");
}

std::vector<TransportPiece> sanitize_pieces(std::vector<TransportPiece> pieces,
                                            const std::vector<Cell>& cells) {
  // Drop numerically dead pieces, then rescale so the per-source T sums and
  // per-target W sums still match the cell weights they had before the drop.
  std::vector<double> t_kept(cells.size(), 0.0), t_all(cells.size(), 0.0);
  std::vector<double> w_kept(cells.size(), 0.0), w_all(cells.size(), 0.0);
  bool dropped = false;
  for (const auto& p : pieces) {
    t_all[p.src] += p.T;
    w_all[p.dst] += p.W;
    if (p.T < kPieceDropTol || p.W < kPieceDropTol) {
      dropped = true;
      continue;
    }
    t_kept[p.src] += p.T;
    w_kept[p.dst] += p.W;
  }
  std::vector<TransportPiece> out;
  out.reserve(pieces.size());
  for (const auto& p : pieces) {
    if (p.T < kPieceDropTol || p.W < kPieceDropTol) continue;
    TransportPiece q = p;
    if (dropped) {
      if (t_kept[p.src] > 0.0) q.T *= t_all[p.src] / t_kept[p.src];
      if (w_kept[p.dst] > 0.0) q.W *= w_all[p.dst] / w_kept[p.dst];
    }
    out.push_back(q);
  }
  std::sort(out.begin(), out.end(), [](const TransportPiece& x, const TransportPiece& y) {
    return x.src != y.src ? x.src < y.src : x.dst < y.dst;
  });
  return out;
}

CellAction::CellAction(std::vector<Cell> cells, StepDistribution m,
                       std::vector<WordTransport> stored, ActionKind kind, bool ergodic,
                       TransportProvider provider)
    : cells_(std::move(cells)),
      m_(std::move(m)),
      kind_(kind),
      ergodic_(ergodic),
      provider_(std::move(provider)) {
  if (cells_.empty()) throw MalformedInputError("action needs at least one cell");
  for (std::uint32_t i = 0; i < cells_.size(); ++i) {
    const Cell& c = cells_[i];
    if (!(c.weight > 0.0) || c.weight > 1.0 + kStructuralTol)
      throw MalformedInputError("cell \"" + c.id + "\" has weight outside (0,1]");
    if (!index_.emplace(c.id, i).second)
      throw MalformedInputError("duplicate cell id \"" + c.id + "\"");
  }
  for (auto& t : stored) {
    if (t.word.rank != m_.rank)
      throw MalformedInputError("transport word rank mismatch for " + format_word(t.word));
    for (const auto& p : t.pieces)
      if (p.src >= cells_.size() || p.dst >= cells_.size())
        throw MalformedInputError("transport piece cell index out of range");
    t.pieces = sanitize_pieces(std::move(t.pieces), cells_);
    GroupWord w = t.word;
    if (!stored_.emplace(std::move(w), std::move(t)).second)
      throw MalformedInputError("duplicate stored transport");
  }
}

std::uint32_t CellAction::index_of(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw MalformedInputError("unknown cell id \"" + id + "\"");
  return it->second;
}

namespace {

WordTransport identity_transport(const CellAction& a) {
  WordTransport t;
  t.word = GroupWord{a.measure().rank, {}};
  t.exact = true;
  t.pieces.reserve(a.cell_count());
  for (std::uint32_t c = 0; c < a.cell_count(); ++c)
    t.pieces.push_back({c, c, a.weight(c), a.weight(c)});
  return t;
}

double image_mass_from(const WordTransport& t, std::uint32_t src_cell) {
  double s = 0.0;
  for (const auto& p : t.pieces)
    if (p.src == src_cell) s += p.W;
  return s;
}

}  // namespace

WordTransport compose_transports(const WordTransport& first_applied,
                                 const WordTransport& then_applied,
                                 const std::vector<Cell>& cells) {
  // Mass-splitting chain rule through the intermediate cell: for pieces
  // (c -> c'', T1, W1) then (c'' -> c', T2, W2) the composite picks up
  // (T1*T2, W1*W2) / weight(c''). For permutation-like transports this is
  // exactly relational composition.
  const std::size_t K = cells.size();
  std::vector<std::vector<const TransportPiece*>> by_src(K);
  for (const auto& p : then_applied.pieces) by_src[p.src].push_back(&p);
  std::vector<double> accT(K * K, 0.0), accW(K * K, 0.0);
  for (const auto& p1 : first_applied.pieces) {
    double mid_weight = cells[p1.dst].weight;
    for (const TransportPiece* p2 : by_src[p1.dst]) {
      accT[p1.src * K + p2->dst] += p1.T * p2->T / mid_weight;
      accW[p1.src * K + p2->dst] += p1.W * p2->W / mid_weight;
    }
  }
  WordTransport out;
  out.word = multiply(then_applied.word, first_applied.word);
  out.exact = false;  // caller overrides for bijective composition
  for (std::size_t s = 0; s < K; ++s)
    for (std::size_t d = 0; d < K; ++d)
      if (accT[s * K + d] != 0.0 || accW[s * K + d] != 0.0)
        out.pieces.push_back({static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(d),
                              accT[s * K + d], accW[s * K + d]});
  out.pieces = sanitize_pieces(std::move(out.pieces), cells);
  return out;
}

WordTransport word_transport(const CellAction& a, const GroupWord& w) {
  if (w.rank != a.measure().rank)
    throw MalformedInputError("word rank mismatch for " + format_word(w));
  auto it = a.stored_transports().find(w);
  if (it != a.stored_transports().end()) return it->second;
  if (w.is_identity()) return identity_transport(a);
  if (a.has_provider()) return a.provider()(w);
  if (a.kind() == ActionKind::Opaque)
    throw UnsupportedWordError("opaque action has no stored transport for \"" +
                               format_word(w) + "\"");
  // Compose letter transports; the last letter acts first.
  std::vector<const WordTransport*> letter_t(w.letters.size());
  for (std::size_t i = 0; i < w.letters.size(); ++i) {
    GroupWord l{w.rank, {w.letters[i]}};
    auto lt = a.stored_transports().find(l);
    if (lt == a.stored_transports().end())
      throw UnsupportedWordError("no stored transport for letter \"" + format_word(l) +
                                 "\" needed to compose \"" + format_word(w) + "\"");
    letter_t[i] = &lt->second;
  }
  WordTransport acc = *letter_t.back();
  for (std::size_t i = w.letters.size() - 1; i-- > 0;)
    acc = compose_transports(acc, *letter_t[i], a.cells());
  acc.word = w;
  acc.exact = a.kind() == ActionKind::Bijective;
  return acc;
}

ValidationReport validate(const CellAction& a, double stationarity_tol) {
  ValidationReport rep;
  auto issue = [&rep](std::string what, double residual) {
    rep.issues.push_back({std::move(what), residual});
  };

  const auto& cells = a.cells();
  double sum = 0.0;
  for (const auto& c : cells) sum += c.weight;
  if (std::abs(sum - 1.0) > kStructuralTol)
    issue("cell weights sum to " + std::to_string(sum), std::abs(sum - 1.0));

  // Support transports must be present.
  for (const auto& [w, p] : a.measure().entries)
    if (!a.stored_transports().count(w))
      issue("missing stored transport for support word \"" + format_word(w) + "\"", 0.0);

  for (const auto& [w, t] : a.stored_transports()) {
    std::vector<double> t_sum(cells.size(), 0.0), w_sum(cells.size(), 0.0);
    for (std::size_t i = 0; i < t.pieces.size(); ++i) {
      const auto& p = t.pieces[i];
      if (!(p.T > 0.0) || !(p.W > 0.0))
        issue("non-positive piece in transport \"" + format_word(w) + "\"",
              std::min(p.T, p.W));
      if (i > 0 && t.pieces[i - 1].src == p.src && t.pieces[i - 1].dst == p.dst)
        issue("duplicate (src,dst) piece in transport \"" + format_word(w) + "\"", 0.0);
      t_sum[p.src] += p.T;
      w_sum[p.dst] += p.W;
    }
    for (std::uint32_t c = 0; c < cells.size(); ++c) {
      double rs = std::abs(t_sum[c] - cells[c].weight);
      if (rs > kTransportTol)
        issue("sourcing sum off for cell \"" + cells[c].id + "\" in transport \"" +
                  format_word(w) + "\"",
              rs);
      double rc = std::abs(w_sum[c] - cells[c].weight);
      if (rc > kTransportTol)
        issue("covering sum off for cell \"" + cells[c].id + "\" in transport \"" +
                  format_word(w) + "\"",
              rc);
    }
    if (w.is_identity()) {
      for (const auto& p : t.pieces) {
        if (p.src != p.dst) {
          issue("stored identity transport has off-diagonal piece", 0.0);
        } else if (std::abs(p.T - cells[p.src].weight) > kStructuralTol ||
                   std::abs(p.W - cells[p.src].weight) > kStructuralTol) {
          issue("stored identity transport piece differs from cell weight",
                std::max(std::abs(p.T - cells[p.src].weight),
                         std::abs(p.W - cells[p.src].weight)));
        }
      }
    }
    if (a.kind() == ActionKind::Bijective) {
      std::vector<int> out_deg(cells.size(), 0), in_deg(cells.size(), 0);
      for (const auto& p : t.pieces) {
        ++out_deg[p.src];
        ++in_deg[p.dst];
      }
      for (std::uint32_t c = 0; c < cells.size(); ++c)
        if (out_deg[c] != 1 || in_deg[c] != 1) {
          issue("bijective transport \"" + format_word(w) + "\" is not permutation-like",
                0.0);
          break;
        }
    }
  }

  // Stationarity: sum_g m(g) mu(g c) = mu(c), with mu(g c) read off the
  // image masses of g's transport.
  rep.stationarity_residual.assign(cells.size(), 0.0);
  bool have_all_support = true;
  for (const auto& [w, p] : a.measure().entries)
    if (!a.stored_transports().count(w)) have_all_support = false;
  if (have_all_support) {
    std::vector<double> acc(cells.size(), 0.0);
    for (const auto& [w, p] : a.measure().entries) {
      const WordTransport& t = a.stored_transports().at(w);
      for (const auto& piece : t.pieces) acc[piece.src] += p * piece.W;
    }
    for (std::uint32_t c = 0; c < cells.size(); ++c) {
      double r = std::abs(acc[c] - cells[c].weight);
      rep.stationarity_residual[c] = r;
      if (r > stationarity_tol)
        issue("stationarity violated at cell \"" + cells[c].id + "\"", r);
    }
  }
  return rep;
}

CellMask mask_from_ids(const CellAction& a, const std::set<std::string>& ids) {
  CellMask m(a.cell_count(), 0);
  for (const auto& id : ids) m[a.index_of(id)] = 1;
  return m;
}

double mass(const CellAction& a, const GroupWord& w, const CellMask& A, const CellMask& B) {
  if (A.size() != a.cell_count() || B.size() != a.cell_count())
    throw MalformedInputError("cell mask size mismatch");
  WordTransport t = word_transport(a, w);
  double s = 0.0;
  for (const auto& p : t.pieces)
    if (A[p.src] && B[p.dst]) s += p.W;
  return s;
}

double mass(const CellAction& a, const GroupWord& w, const std::set<std::string>& A,
            const std::set<std::string>& B) {
  return mass(a, w, mask_from_ids(a, A), mask_from_ids(a, B));
}

std::vector<RnAtom> rn_pieces(const CellAction& a, const GroupWord& w) {
  WordTransport t = word_transport(a, w);
  std::vector<RnAtom> atoms;
  atoms.reserve(t.pieces.size());
  for (const auto& p : t.pieces) atoms.push_back({p.T / p.W, p.W});
  std::sort(atoms.begin(), atoms.end(),
            [](const RnAtom& x, const RnAtom& y) { return x.value < y.value; });
  // Aggregate atoms with equal derivative value (relative tolerance 1e-9).
  std::vector<RnAtom> out;
  for (const auto& at : atoms) {
    if (!out.empty() &&
        std::abs(at.value - out.back().value) <= 1e-9 * std::max(1.0, out.back().value)) {
      // Mass-weighted running mean keeps the representative value stable.
      double m0 = out.back().mass, m1 = at.mass;
      out.back().value = (out.back().value * m0 + at.value * m1) / (m0 + m1);
      out.back().mass += m1;
    } else {
      out.push_back(at);
    }
  }
  return out;
}

double rn_tail(const CellAction& a, const GroupWord& w, double c) {
  double threshold = c + 1e-12 * std::max(1.0, std::abs(c));
  double s = 0.0;
  for (const auto& at : rn_pieces(a, w))
    if (at.value > threshold) s += at.mass;
  return s;
}

double entropy(const CellAction& a) {
  ValidationReport rep = validate(a, kEntropyGateTol);
  if (!rep.ok())
    throw ValidationFailure("entropy requires a validating action; first issue: " +
                            rep.issues.front().what);
  double h = 0.0;
  for (const auto& [w, contrib] : entropy_by_word(a)) h += contrib;
  return h;
}

std::vector<std::pair<GroupWord, double>> entropy_by_word(const CellAction& a) {
  std::vector<std::pair<GroupWord, double>> out;
  out.reserve(a.measure().entries.size());
  for (const auto& [w, p] : a.measure().entries) {
    WordTransport t = word_transport(a, w);
    double s = 0.0;
    for (const auto& piece : t.pieces) s += piece.W * std::log(piece.W / piece.T);
    out.emplace_back(w, p * s);
  }
  return out;
}

double rn_word_bound(const CellAction& a, const GroupWord& w) {
  if (w.is_identity()) return 1.0;
  // Support words sorted by decreasing length for the greedy scan.
  std::vector<std::pair<GroupWord, double>> supp = a.measure().entries;
  std::sort(supp.begin(), supp.end(), [](const auto& x, const auto& y) {
    return x.first.length() > y.first.length();
  });
  double bound = 1.0;
  std::size_t pos = 0;
  while (pos < w.letters.size()) {
    bool matched = false;
    for (const auto& [s, p] : supp) {
      std::size_t len = s.letters.size();
      if (len == 0 || pos + len > w.letters.size()) continue;
      if (std::equal(s.letters.begin(), s.letters.end(), w.letters.begin() + pos)) {
        bound *= 1.0 / p;
        pos += len;
        matched = true;
        break;
      }
    }
    if (!matched) return std::numeric_limits<double>::infinity();
  }
  return bound;
}

}
