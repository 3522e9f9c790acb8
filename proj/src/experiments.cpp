#include "statact/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>

#include "statact/action_io.hpp"
#include "statact/cell_action.hpp"
#include "statact/errors.hpp"
#include "statact/model_library.hpp"
#include "statact/version.hpp"

namespace statact {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw AssertionFailure(msg);
}

void check_grid(const std::vector<double>& grid, const char* name) {
  if (grid.empty()) throw MalformedInputError(std::string(name) + " must be nonempty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0 && grid[i] < 1.0))
      throw MalformedInputError(std::string(name) + " entries must lie in (0,1)");
    if (i > 0 && !(grid[i] > grid[i - 1]))
      throw MalformedInputError(std::string(name) + " must be strictly increasing");
  }
}

std::ofstream open_csv(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw MalformedInputError("cannot open \"" + path + "\" for writing");
  return f;
}

// "runs/cont.csv" -> "runs/cont.rntail.csv"; no extension -> append.
std::string tail_csv_path(const std::string& out_csv) {
  auto dot = out_csv.find_last_of('.');
  auto slash = out_csv.find_last_of('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
    return out_csv + ".rntail.csv";
  return out_csv.substr(0, dot) + ".rntail.csv";
}

const char* mode_name(CloudMode m) { return m == CloudMode::Exact ? "exact" : "sampled"; }

}  // namespace

ContinuityResult run_continuity(const ContinuityConfig& cfg, std::ostream& log) {
  if (cfg.rank < 2) throw MalformedInputError("continuity: rank must be >= 2");
  if (cfg.depth < 1) throw MalformedInputError("continuity: depth must be >= 1");
  if (cfg.trivial_cells < 1)
    throw MalformedInputError("continuity: trivial_cells must be >= 1");
  if (cfg.max_m < 1 || cfg.max_n < 1)
    throw MalformedInputError("continuity: truncation bounds must be >= 1");
  if (cfg.thresholds.empty())
    throw MalformedInputError("continuity: threshold grid must be nonempty");
  check_grid(cfg.t_grid, "continuity: t_grid");
  if (!(cfg.t_ref > 0.0 && cfg.t_ref < 1.0))
    throw MalformedInputError("continuity: t_ref must lie in (0,1)");

  StepDistribution m = StepDistribution::uniform_nearest_neighbor(cfg.rank);
  CellAction boundary = boundary_action({cfg.rank, cfg.depth, m});
  std::vector<double> tw(static_cast<std::size_t>(cfg.trivial_cells),
                         1.0 / cfg.trivial_cells);
  CellAction triv = trivial_action(tw, m);
  GroupWord tail_word = parse_word(cfg.tail_word, cfg.rank);

  double h_boundary = entropy(boundary);
  CellAction a_ref = convex_combine(boundary, triv, cfg.t_ref);
  double h_ref = entropy(a_ref);

  // Endpoint tail curves; the family's tail at threshold c is affine in t,
  // so |tail_t(c) - tail_ref(c)| <= |t - t_ref| * |tail_bnd(c) - tail_triv(c)|.
  double tail_constant = 0.0;
  std::vector<double> tail_ref;
  tail_ref.reserve(cfg.thresholds.size());
  for (double c : cfg.thresholds) {
    double gap = std::abs(rn_tail(boundary, tail_word, c) - rn_tail(triv, tail_word, c));
    tail_constant = std::max(tail_constant, gap);
    tail_ref.push_back(rn_tail(a_ref, tail_word, c));
  }

  ContinuityResult res;
  res.entropy_boundary = h_boundary;
  res.tail_constant = tail_constant;

  for (double t : cfg.t_grid) {
    CellAction a_t = convex_combine(boundary, triv, t);
    DeltaReport rep =
        delta(a_t, a_ref, cfg.max_m, cfg.max_n, cfg.mode, cfg.budget, cfg.seed);
    for (const auto& term : rep.terms)
      if (!term.ok)
        throw BudgetError("continuity: delta term (m=" + std::to_string(term.m) +
                          ", n=" + std::to_string(term.n) + ") failed: " + term.error);

    ContinuityRow row;
    row.t = t;
    row.delta_truncated = rep.truncated_value;
    row.tail_bound = rep.tail_bound;
    row.entropy_value = entropy(a_t);
    row.entropy_gap = std::abs(row.entropy_value - h_ref);
    require(std::abs(row.entropy_value - t * h_boundary) <= 1e-12,
            "continuity: entropy is not affine at t=" + format_significant(t, 6) +
                " (got " + format_double(row.entropy_value) + ", expected " +
                format_double(t * h_boundary) + ")");

    double sup_gap = 0.0;
    for (std::size_t i = 0; i < cfg.thresholds.size(); ++i) {
      double v = rn_tail(a_t, tail_word, cfg.thresholds[i]);
      row.rn_tail_values.push_back(v);
      sup_gap = std::max(sup_gap, std::abs(v - tail_ref[i]));
    }
    require(sup_gap <= 2.0 * std::abs(t - cfg.t_ref) * tail_constant + 1e-12,
            "continuity: tail curve at t=" + format_significant(t, 6) +
                " drifts by " + format_double(sup_gap) +
                ", above the Lipschitz allowance");

    log << "continuity t=" << format_significant(t, 6)
        << " delta=" << format_significant(row.delta_truncated, 6)
        << " entropy=" << format_significant(row.entropy_value, 12) << "\n";
    res.rows.push_back(std::move(row));
  }

  if (cfg.mode == CloudMode::Exact) {
    // delta(a_t, a_ref) <= envelope * |t - t_ref|: pairing each assignment
    // with itself moves every statistics point by at most |t - t_ref|.
    double envelope = 0.0;
    for (int mm = 1; mm <= cfg.max_m; ++mm)
      for (int nn = 1; nn <= cfg.max_n; ++nn) envelope += std::ldexp(1.0, -(mm + nn));
    for (const auto& row : res.rows) {
      require(row.delta_truncated <=
                  envelope * std::abs(row.t - cfg.t_ref) + 1e-12,
              "continuity: delta at t=" + format_significant(row.t, 6) +
                  " exceeds the linear envelope");
      if (std::abs(row.t - cfg.t_ref) <= 1e-15)
        require(row.delta_truncated == 0.0,
                "continuity: delta at the reference point is nonzero");
    }
    for (std::size_t i = 1; i < res.rows.size(); ++i) {
      const auto& lo = res.rows[i - 1];
      const auto& hi = res.rows[i];
      if (hi.t <= cfg.t_ref)
        require(hi.delta_truncated <= lo.delta_truncated + 1e-9,
                "continuity: delta fails to decrease between t=" +
                    format_significant(lo.t, 6) + " and t=" +
                    format_significant(hi.t, 6));
      if (lo.t >= cfg.t_ref)
        require(lo.delta_truncated <= hi.delta_truncated + 1e-9,
                "continuity: delta fails to increase between t=" +
                    format_significant(lo.t, 6) + " and t=" +
                    format_significant(hi.t, 6));
    }
  }

  if (!cfg.out_csv.empty()) {
    std::ofstream f = open_csv(cfg.out_csv);
    f << "# statact " << kVersion << " continuity rank=" << cfg.rank
      << " depth=" << cfg.depth << " trivial_cells=" << cfg.trivial_cells
      << " t_ref=" << format_double(cfg.t_ref) << " max_m=" << cfg.max_m
      << " max_n=" << cfg.max_n << " mode=" << mode_name(cfg.mode)
      << " seed=" << cfg.seed << " budget=" << cfg.budget
      << " tail_bound=" << format_double(res.rows.front().tail_bound)
      << " entropy_boundary=" << format_double(h_boundary)
      << " tail_constant=" << format_double(tail_constant) << "\n";
    f << "t,delta_truncated,tail_bound,entropy,entropy_gap\n";
    for (const auto& row : res.rows)
      f << format_double(row.t) << "," << format_double(row.delta_truncated) << ","
        << format_double(row.tail_bound) << "," << format_double(row.entropy_value)
        << "," << format_double(row.entropy_gap) << "\n";

    std::string tail_path = tail_csv_path(cfg.out_csv);
    std::ofstream g = open_csv(tail_path);
    g << "# statact " << kVersion << " continuity-rntail word=" << cfg.tail_word
      << " t_ref=" << format_double(cfg.t_ref) << " seed=" << cfg.seed
      << " tail_constant=" << format_double(tail_constant) << "\n";
    g << "t,threshold,rn_tail\n";
    for (const auto& row : res.rows)
      for (std::size_t i = 0; i < cfg.thresholds.size(); ++i)
        g << format_double(row.t) << "," << format_double(cfg.thresholds[i]) << ","
          << format_double(row.rn_tail_values[i]) << "\n";
    log << "wrote " << cfg.out_csv << " and " << tail_path << "\n";
  }
  return res;
}

RealizationResult run_realization(const RealizationConfig& cfg, std::ostream& log) {
  if (cfg.ranks.empty() || cfg.depths.empty())
    throw MalformedInputError("realization: ranks and depths must be nonempty");
  for (int r : cfg.ranks)
    if (r < 2) throw MalformedInputError("realization: ranks must be >= 2");
  for (int d : cfg.depths)
    if (d < 1) throw MalformedInputError("realization: depths must be >= 1");
  if (cfg.include_skewed && !(cfg.skew > 0.0 && cfg.skew < 1.0))
    throw MalformedInputError("realization: skew must lie in (0,1)");
  check_grid(cfg.t_grid, "realization: t_grid");

  auto skewed_measure = [&](int r) {
    std::vector<std::pair<GroupWord, double>> entries;
    double rest = (1.0 - cfg.skew) / (2 * r - 1);
    for (int k = 1; k <= r; ++k)
      for (int s : {k, -k}) {
        std::vector<int> letters{s};
        entries.emplace_back(reduce(r, letters), s == 1 ? cfg.skew : rest);
      }
    return StepDistribution::make(r, std::move(entries));
  };

  RealizationResult res;
  auto add_row = [&](std::string model, bool erg, double t, double h) {
    log << "realization " << model << " entropy=" << format_significant(h, 12)
        << "\n";
    res.rows.push_back({std::move(model), erg, t, h});
  };

  for (int r : cfg.ranks)
    for (int d : cfg.depths) {
      CellAction a =
          boundary_action({r, d, StepDistribution::uniform_nearest_neighbor(r)});
      add_row("boundary r" + std::to_string(r) + " L" + std::to_string(d) +
                  " uniform",
              a.ergodic(), 1.0, entropy(a));
      if (cfg.include_skewed) {
        CellAction s = boundary_action({r, d, skewed_measure(r)});
        add_row("boundary r" + std::to_string(r) + " L" + std::to_string(d) +
                    " skew" + format_significant(cfg.skew, 6),
                s.ergodic(), 1.0, entropy(s));
      }
    }

  int base_rank = cfg.ranks.front();
  int base_depth = cfg.depths.front();
  CellAction base = boundary_action(
      {base_rank, base_depth, StepDistribution::uniform_nearest_neighbor(base_rank)});
  CellAction triv = trivial_action({1.0}, base.measure());
  double h_base = entropy(base);
  std::string base_name =
      "r" + std::to_string(base_rank) + " L" + std::to_string(base_depth);

  for (double t : cfg.t_grid) {
    CellAction comb = convex_combine(base, triv, t);
    double h = entropy(comb);
    require(std::abs(h - t * h_base) <= 1e-12,
            "realization: combination entropy is not affine at t=" +
                format_significant(t, 6));
    add_row("combine " + base_name + " t=" + format_significant(t, 6),
            comb.ergodic(), t, h);
  }

  if (cfg.target) {
    double h_star = *cfg.target;
    if (h_star < 0.0 || h_star > h_base * (1.0 + 1e-12))
      throw MalformedInputError(
          "realization: target entropy " + format_double(h_star) +
          " is outside the achievable range [0, " + format_double(h_base) + "]");
    double t = std::min(h_star / h_base, 1.0);
    double h_real = 0.0;
    bool erg = false;
    if (t <= 1e-15) {
      h_real = entropy(triv);
      erg = triv.ergodic();
      t = 0.0;
    } else if (t >= 1.0 - 1e-15) {
      h_real = h_base;
      erg = base.ergodic();
      t = 1.0;
    } else {
      CellAction realized = convex_combine(base, triv, t);
      h_real = entropy(realized);
      erg = realized.ergodic();
    }
    require(std::abs(h_real - h_star) <= 1e-9,
            "realization: realized entropy " + format_double(h_real) +
                " misses the target " + format_double(h_star));
    res.realized_target = h_real;
    add_row("target " + base_name + " h=" + format_significant(h_star, 12), erg, t,
            h_real);
  }

  if (!cfg.out_csv.empty()) {
    std::ofstream f = open_csv(cfg.out_csv);
    f << "# statact " << kVersion << " realization seed=" << cfg.seed
      << " skew=" << format_double(cfg.skew)
      << " include_skewed=" << (cfg.include_skewed ? 1 : 0) << " target="
      << (cfg.target ? format_double(*cfg.target) : std::string("none")) << "\n";
    f << "model,ergodic,t,entropy\n";
    for (const auto& row : res.rows)
      f << row.model << "," << (row.ergodic ? 1 : 0) << "," << format_double(row.t)
        << "," << format_double(row.entropy_value) << "\n";
    log << "wrote " << cfg.out_csv << "\n";
  }
  return res;
}

}
