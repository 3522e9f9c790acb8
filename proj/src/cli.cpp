#include "statact/cli.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "statact/action_io.hpp"
#include "statact/cell_action.hpp"
#include "statact/errors.hpp"
#include "statact/experiments.hpp"
#include "statact/model_library.hpp"
#include "statact/partition_geometry.hpp"
#include "statact/version.hpp"

namespace statact::cli {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_one_double(const std::string& tok, const char* what) {
  try {
    std::size_t pos = 0;
    double v = std::stod(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw MalformedInputError(std::string("bad number \"") + tok + "\" in " + what);
  }
}

int parse_one_int(const std::string& tok, const char* what) {
  try {
    std::size_t pos = 0;
    int v = std::stoi(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw MalformedInputError(std::string("bad integer \"") + tok + "\" in " + what);
  }
}

std::vector<double> parse_double_list(const std::string& s, const char* what) {
  std::vector<double> out;
  for (const auto& tok : split(s, ','))
    if (!tok.empty()) out.push_back(parse_one_double(tok, what));
  if (out.empty()) throw MalformedInputError(std::string("empty list in ") + what);
  return out;
}

std::vector<int> parse_int_list(const std::string& s, const char* what) {
  std::vector<int> out;
  for (const auto& tok : split(s, ','))
    if (!tok.empty()) out.push_back(parse_one_int(tok, what));
  if (out.empty()) throw MalformedInputError(std::string("empty list in ") + what);
  return out;
}

std::vector<GroupWord> parse_word_list(const std::string& s, int rank) {
  std::vector<GroupWord> out;
  for (const auto& tok : split(s, ','))
    if (!tok.empty()) out.push_back(parse_word(tok, rank));
  if (out.empty()) throw MalformedInputError("empty word list");
  return out;
}

CloudMode parse_mode(const std::string& s) {
  if (s == "exact") return CloudMode::Exact;
  if (s == "sampled") return CloudMode::Sampled;
  throw MalformedInputError("mode must be \"exact\" or \"sampled\", got \"" + s + "\"");
}

StepDistribution skewed_nearest_neighbor(int rank, double skew) {
  if (!(skew > 0.0 && skew < 1.0))
    throw MalformedInputError("skew must lie in (0,1)");
  std::vector<std::pair<GroupWord, double>> entries;
  double rest = (1.0 - skew) / (2 * rank - 1);
  for (int k = 1; k <= rank; ++k)
    for (int s : {k, -k}) {
      std::vector<int> letters{s};
      entries.emplace_back(reduce(rank, letters), s == 1 ? skew : rest);
    }
  return StepDistribution::make(rank, std::move(entries));
}

std::string describe_issues(const ValidationReport& rep) {
  std::string s = "validation failed:";
  for (const auto& i : rep.issues) {
    s += "\n  " + i.what;
    if (i.residual != 0.0) s += " (residual " + format_double(i.residual) + ")";
  }
  return s;
}

CellAction load_validated(const std::string& path) {
  CellAction a = load_action(path);
  ValidationReport rep = validate(a);
  if (!rep.ok())
    throw ValidationFailure("action \"" + path + "\" " + describe_issues(rep));
  return a;
}

// Rebuilds the action with the transports of the first `count` enumerated
// words materialized, so they survive serialization (exact ones only).
CellAction with_stored_words(const CellAction& a, int count) {
  std::set<GroupWord, WordLess> have;
  std::vector<WordTransport> stored;
  for (const auto& [w, t] : a.stored_transports()) {
    have.insert(w);
    stored.push_back(t);
  }
  for (const GroupWord& w : enumerate_words(a.measure().rank, count)) {
    if (w.is_identity() || have.count(w)) continue;
    stored.push_back(word_transport(a, w));
  }
  return CellAction(a.cells(), a.measure(), std::move(stored), a.kind(), a.ergodic(),
                    a.provider());
}

void finish_build(CellAction a, const std::string& out_path, int store_words,
                  std::ostream& out) {
  ValidationReport rep = validate(a);
  if (!rep.ok()) throw ValidationFailure(describe_issues(rep));
  if (store_words > 0) {
    a = with_stored_words(a, store_words);
    std::size_t exact = 0;
    for (const auto& [w, t] : a.stored_transports())
      if (t.exact) ++exact;
    out << "stored " << a.stored_transports().size() << " transports (" << exact
        << " exact)\n";
  }
  save_action(out_path, a);
  out << "cells " << a.cell_count() << " kind " << kind_name(a.kind()) << " entropy "
      << format_significant(entropy(a), 12) << "\n";
  out << "wrote " << out_path << "\n";
}

void print_delta(std::ostream& out, const DeltaReport& rep) {
  out << (rep.directed ? "defect" : "delta") << " truncated value "
      << format_double(rep.truncated_value) << "\n";
  out << "tail bound " << format_double(rep.tail_bound) << "\n";
  out << "transports exact " << (rep.transports_exact ? "yes" : "no") << "\n";
  out << "complete " << (rep.complete() ? "yes" : "no") << "\n";
  out << "m n distance status\n";
  for (const auto& t : rep.terms) {
    out << t.m << " " << t.n << " " << format_double(t.dh) << " "
        << (t.ok ? "ok" : "error");
    if (!t.error.empty()) out << " " << t.error;
    out << "\n";
  }
}

void apply_continuity_config(ContinuityConfig& cfg, const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw MalformedInputError("cannot open \"" + path + "\"");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(f);
    if (!j.is_object()) throw MalformedInputError("config must be a JSON object");
    for (const auto& [k, v] : j.items()) {
      if (k == "rank") cfg.rank = v.get<int>();
      else if (k == "depth") cfg.depth = v.get<int>();
      else if (k == "trivial_cells") cfg.trivial_cells = v.get<int>();
      else if (k == "t_grid") cfg.t_grid = v.get<std::vector<double>>();
      else if (k == "t_ref") cfg.t_ref = v.get<double>();
      else if (k == "max_m") cfg.max_m = v.get<int>();
      else if (k == "max_n") cfg.max_n = v.get<int>();
      else if (k == "mode") cfg.mode = parse_mode(v.get<std::string>());
      else if (k == "budget") cfg.budget = v.get<std::uint64_t>();
      else if (k == "seed") cfg.seed = v.get<std::uint64_t>();
      else if (k == "tail_word") cfg.tail_word = v.get<std::string>();
      else if (k == "thresholds") cfg.thresholds = v.get<std::vector<double>>();
      else if (k == "out_csv") cfg.out_csv = v.get<std::string>();
      else throw MalformedInputError("unknown continuity config key \"" + k + "\"");
    }
  } catch (const nlohmann::json::exception& e) {
    throw MalformedInputError(std::string("invalid config file: ") + e.what());
  }
}

void apply_realization_config(RealizationConfig& cfg, const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw MalformedInputError("cannot open \"" + path + "\"");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(f);
    if (!j.is_object()) throw MalformedInputError("config must be a JSON object");
    for (const auto& [k, v] : j.items()) {
      if (k == "ranks") cfg.ranks = v.get<std::vector<int>>();
      else if (k == "depths") cfg.depths = v.get<std::vector<int>>();
      else if (k == "include_skewed") cfg.include_skewed = v.get<bool>();
      else if (k == "skew") cfg.skew = v.get<double>();
      else if (k == "t_grid") cfg.t_grid = v.get<std::vector<double>>();
      else if (k == "target") {
        if (!v.is_null()) cfg.target = v.get<double>();
      } else if (k == "seed") cfg.seed = v.get<std::uint64_t>();
      else if (k == "out_csv") cfg.out_csv = v.get<std::string>();
      else throw MalformedInputError("unknown realization config key \"" + k + "\"");
    }
  } catch (const nlohmann::json::exception& e) {
    throw MalformedInputError(std::string("invalid config file: ") + e.what());
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"stationary actions on finite cell models"};
  app.name("statact");
  app.set_version_flag("--version", std::string("statact ") + kVersion);
  app.require_subcommand(1);
  int exit_code = 0;

  // ---- build ----
  CLI::App* build = app.add_subcommand("build", "construct an action file");
  build->require_subcommand(1);

  struct {
    int rank = 2;
    int depth = 2;
    double skew = 0.0;
    std::string out = "action.json";
    int store_words = 0;
  } bnd;
  CLI::App* b_boundary = build->add_subcommand("boundary", "free-group boundary model");
  b_boundary->add_option("--rank", bnd.rank, "free group rank (>= 2)");
  b_boundary->add_option("--depth", bnd.depth, "cylinder depth (>= 1)");
  b_boundary->add_option("--skew", bnd.skew,
                         "probability of the first generator letter (default uniform)");
  b_boundary->add_option("-o,--out", bnd.out, "output action file");
  b_boundary->add_option("--store-words", bnd.store_words,
                         "materialize transports of the first K enumerated words");
  b_boundary->callback([&] {
    StepDistribution m = b_boundary->count("--skew")
                             ? skewed_nearest_neighbor(bnd.rank, bnd.skew)
                             : StepDistribution::uniform_nearest_neighbor(bnd.rank);
    finish_build(boundary_action({bnd.rank, bnd.depth, m}), bnd.out, bnd.store_words,
                 out);
  });

  struct {
    std::string weights = "1";
    int rank = 2;
    std::string out = "action.json";
    int store_words = 0;
  } trv;
  CLI::App* b_trivial = build->add_subcommand("trivial", "identity action on atoms");
  b_trivial->add_option("--weights", trv.weights, "comma-separated cell weights");
  b_trivial->add_option("--rank", trv.rank, "free group rank of the step measure");
  b_trivial->add_option("-o,--out", trv.out, "output action file");
  b_trivial->add_option("--store-words", trv.store_words,
                        "materialize transports of the first K enumerated words");
  b_trivial->callback([&] {
    finish_build(trivial_action(parse_double_list(trv.weights, "--weights"),
                                StepDistribution::uniform_nearest_neighbor(trv.rank)),
                 trv.out, trv.store_words, out);
  });

  struct {
    int rank = 2;
    std::string perms;
    std::string weights;
    std::string out = "action.json";
    int store_words = 0;
  } bij;
  CLI::App* b_bijective =
      build->add_subcommand("bijective", "permutation action on atoms");
  b_bijective->add_option("--rank", bij.rank, "free group rank");
  b_bijective
      ->add_option("--perms", bij.perms,
                   "semicolon-separated generator permutations, e.g. \"a=1,2,0;b=0,2,1\"")
      ->required();
  b_bijective->add_option("--weights", bij.weights, "comma-separated cell weights")
      ->required();
  b_bijective->add_option("-o,--out", bij.out, "output action file");
  b_bijective->add_option("--store-words", bij.store_words,
                          "materialize transports of the first K enumerated words");
  b_bijective->callback([&] {
    std::map<int, std::vector<std::uint32_t>> perms;
    for (const auto& spec : split(bij.perms, ';')) {
      if (spec.empty()) continue;
      auto eq = spec.find('=');
      if (eq == std::string::npos || eq != 1 || spec[0] < 'a' || spec[0] > 'z')
        throw MalformedInputError("bad permutation spec \"" + spec +
                                  "\" (want letter=comma-list)");
      int gen = spec[0] - 'a' + 1;
      std::vector<std::uint32_t> perm;
      for (int v : parse_int_list(spec.substr(eq + 1), "--perms")) {
        if (v < 0) throw MalformedInputError("negative index in --perms");
        perm.push_back(static_cast<std::uint32_t>(v));
      }
      perms[gen] = std::move(perm);
    }
    finish_build(finite_bijective(perms, parse_double_list(bij.weights, "--weights"),
                                  StepDistribution::uniform_nearest_neighbor(bij.rank)),
                 bij.out, bij.store_words, out);
  });

  struct {
    double t = 0.5;
    std::vector<std::string> files;
    std::string out = "action.json";
    int store_words = 0;
  } cmb;
  CLI::App* b_combine =
      build->add_subcommand("combine", "convex combination t*A + (1-t)*B");
  b_combine->add_option("--t", cmb.t, "combination coefficient in (0,1)")->required();
  b_combine->add_option("files", cmb.files, "two action files")
      ->expected(2)
      ->required();
  b_combine->add_option("-o,--out", cmb.out, "output action file");
  b_combine->add_option("--store-words", cmb.store_words,
                        "materialize transports of the first K enumerated words");
  b_combine->callback([&] {
    finish_build(
        convex_combine(load_validated(cmb.files[0]), load_validated(cmb.files[1]), cmb.t),
        cmb.out, cmb.store_words, out);
  });

  struct {
    std::string weights;
    std::vector<std::string> files;
    std::string out = "action.json";
    int store_words = 0;
  } stb;
  CLI::App* b_stabilize =
      build->add_subcommand("stabilize", "product with a trivial action");
  b_stabilize->add_option("--weights", stb.weights, "trivial-factor weights")
      ->required();
  b_stabilize->add_option("file", stb.files, "action file")->expected(1)->required();
  b_stabilize->add_option("-o,--out", stb.out, "output action file");
  b_stabilize->add_option("--store-words", stb.store_words,
                          "materialize transports of the first K enumerated words");
  b_stabilize->callback([&] {
    finish_build(stabilize(load_validated(stb.files[0]),
                           parse_double_list(stb.weights, "--weights")),
                 stb.out, stb.store_words, out);
  });

  // ---- validate ----
  struct {
    std::string file;
    double tol = kStationarityTol;
  } val;
  CLI::App* c_validate = app.add_subcommand("validate", "check action invariants");
  c_validate->add_option("file", val.file, "action file")->required();
  c_validate->add_option("--tol", val.tol, "stationarity tolerance");
  c_validate->callback([&] {
    CellAction a = load_action(val.file);
    ValidationReport rep = validate(a, val.tol);
    double max_resid = 0.0;
    for (double r : rep.stationarity_residual) max_resid = std::max(max_resid, r);
    if (rep.ok()) {
      out << "ok cells " << a.cell_count() << " max stationarity residual "
          << format_double(max_resid) << "\n";
    } else {
      err << describe_issues(rep) << "\n";
      err << "max stationarity residual " << format_double(max_resid) << "\n";
      exit_code = 1;
    }
  });

  // ---- entropy ----
  struct {
    std::string file;
    bool per_generator = false;
  } ent;
  CLI::App* c_entropy = app.add_subcommand("entropy", "Furstenberg entropy in nats");
  c_entropy->add_option("file", ent.file, "action file")->required();
  c_entropy->add_flag("--per-generator", ent.per_generator,
                      "print the per-support-word breakdown");
  c_entropy->callback([&] {
    CellAction a = load_validated(ent.file);
    if (ent.per_generator)
      for (const auto& [w, h] : entropy_by_word(a))
        out << format_word(w) << " " << format_significant(h, 12) << "\n";
    out << "entropy " << format_significant(entropy(a), 12) << "\n";
  });

  // ---- rn-tail ----
  struct {
    std::string file;
    std::string word = "a";
    std::string thresholds;
  } rnt;
  CLI::App* c_rntail =
      app.add_subcommand("rn-tail", "tail measure of the Radon-Nikodym derivative");
  c_rntail->add_option("file", rnt.file, "action file")->required();
  c_rntail->add_option("--word", rnt.word, "group word (default a)");
  c_rntail->add_option("--thresholds", rnt.thresholds, "comma-separated thresholds")
      ->required();
  c_rntail->callback([&] {
    CellAction a = load_validated(rnt.file);
    GroupWord w = parse_word(rnt.word, a.measure().rank);
    for (double c : parse_double_list(rnt.thresholds, "--thresholds"))
      out << format_double(c) << " " << format_double(rn_tail(a, w, c)) << "\n";
  });

  // ---- delta / defect ----
  struct DeltaFlags {
    std::vector<std::string> files;
    int max_m = 6;
    int max_n = 6;
    std::string mode = "exact";
    std::uint64_t budget = 1000000;
    std::uint64_t seed = 1;
    std::string csv;
  };
  auto add_delta_flags = [](CLI::App* c, DeltaFlags& f) {
    c->add_option("files", f.files, "two action files")->expected(2)->required();
    c->add_option("--max-m", f.max_m, "word-truncation bound M");
    c->add_option("--max-n", f.max_n, "partition-size bound N");
    c->add_option("--mode", f.mode, "exact | sampled");
    c->add_option("--budget", f.budget, "assignment budget per cloud");
    c->add_option("--seed", f.seed, "sampling seed");
    c->add_option("--csv", f.csv, "also write the per-term table to this CSV file");
  };
  DeltaFlags dlt;
  CLI::App* c_delta = app.add_subcommand("delta", "truncated weak-equivalence metric");
  add_delta_flags(c_delta, dlt);
  c_delta->callback([&] {
    DeltaReport rep =
        delta(load_validated(dlt.files[0]), load_validated(dlt.files[1]), dlt.max_m,
              dlt.max_n, parse_mode(dlt.mode), dlt.budget, dlt.seed);
    print_delta(out, rep);
    if (!dlt.csv.empty()) {
      std::ofstream f(dlt.csv, std::ios::binary);
      if (!f) throw MalformedInputError("cannot open \"" + dlt.csv + "\" for writing");
      write_delta_csv(f, rep);
      out << "wrote " << dlt.csv << "\n";
    }
  });

  DeltaFlags dft;
  CLI::App* c_defect =
      app.add_subcommand("defect", "one-sided weak-containment defect");
  add_delta_flags(c_defect, dft);
  c_defect->callback([&] {
    DeltaReport rep = containment_report(load_validated(dft.files[0]),
                                         load_validated(dft.files[1]), dft.max_m,
                                         dft.max_n, parse_mode(dft.mode), dft.budget,
                                         dft.seed);
    print_delta(out, rep);
    if (!dft.csv.empty()) {
      std::ofstream f(dft.csv, std::ios::binary);
      if (!f) throw MalformedInputError("cannot open \"" + dft.csv + "\" for writing");
      write_delta_csv(f, rep);
      out << "wrote " << dft.csv << "\n";
    }
  });

  // ---- prop2 ----
  struct {
    std::vector<std::string> files;
    std::string F;
    double epsilon = 0.0;
    std::string partition_file;
    int pieces = 2;
    std::uint64_t budget = 1000000;
    std::uint64_t seed = 1;
  } p2;
  CLI::App* c_prop2 =
      app.add_subcommand("prop2", "two-sided partition transfer certificate");
  c_prop2->add_option("files", p2.files, "action files A and B")
      ->expected(2)
      ->required();
  c_prop2->add_option("--F", p2.F,
                      "comma-separated word family (default: identity + support)");
  c_prop2->add_option("--epsilon", p2.epsilon, "target two-sided discrepancy")
      ->required();
  c_prop2->add_option("--partition-file", p2.partition_file,
                      "partition of A as JSON (default: cells labeled index mod pieces)");
  c_prop2->add_option("--pieces", p2.pieces, "piece count for the default partition");
  c_prop2->add_option("--budget", p2.budget, "matching budget");
  c_prop2->add_option("--seed", p2.seed, "annealing seed");
  c_prop2->callback([&] {
    CellAction a = load_validated(p2.files[0]);
    CellAction b = load_validated(p2.files[1]);
    std::vector<GroupWord> F;
    if (!p2.F.empty()) {
      F = parse_word_list(p2.F, a.measure().rank);
    } else {
      F.push_back(GroupWord{a.measure().rank, {}});
      for (const auto& [w, p] : a.measure().entries) F.push_back(w);
    }
    OrderedPartition part;
    if (!p2.partition_file.empty()) {
      part = load_partition(p2.partition_file, a);
    } else {
      if (p2.pieces < 1) throw MalformedInputError("--pieces must be >= 1");
      part.pieces = p2.pieces;
      part.label.resize(a.cell_count());
      for (std::size_t i = 0; i < a.cell_count(); ++i)
        part.label[i] = static_cast<int>(i % p2.pieces);
    }
    Prop2Result r = prop2_construct(a, b, F, part, p2.epsilon, p2.budget, p2.seed);
    out << "refinement pieces " << r.certificate.refinement_pieces << "\n";
    out << "match discrepancy " << format_double(r.certificate.match_discrepancy)
        << "\n";
    out << "delta achieved " << format_double(r.certificate.delta_achieved) << "\n";
    out << "two-sided discrepancy " << format_double(r.two_sided) << "\n";
    out << "certified " << (r.certificate.certified ? "yes" : "no")
        << " (threshold epsilon/7 = " << format_double(p2.epsilon / 7.0) << ")\n";
    out << "bound two-sided <= 7*delta "
        << (r.certificate.bound_holds ? "holds" : "violated") << "\n";
  });

  // ---- experiment ----
  CLI::App* experiment = app.add_subcommand("experiment", "run a sweep, write CSV");
  experiment->require_subcommand(1);

  struct {
    std::string config;
    int rank = 2;
    int depth = 2;
    int trivial_cells = 1;
    std::string t_grid;
    double t_ref = 0.5;
    int max_m = 4;
    int max_n = 2;
    std::string mode = "exact";
    std::uint64_t budget = 1000000;
    std::uint64_t seed = 1;
    std::string tail_word = "a";
    std::string thresholds;
    std::string out_csv;
  } cnt;
  CLI::App* e_cont = experiment->add_subcommand(
      "continuity", "entropy continuity along a_t = t*boundary + (1-t)*trivial");
  e_cont->add_option("--config", cnt.config, "JSON config file (flags override)");
  e_cont->add_option("--rank", cnt.rank, "boundary rank");
  e_cont->add_option("--depth", cnt.depth, "boundary depth");
  e_cont->add_option("--trivial-cells", cnt.trivial_cells, "trivial-factor cells");
  e_cont->add_option("--t-grid", cnt.t_grid, "comma-separated grid in (0,1)");
  e_cont->add_option("--t-ref", cnt.t_ref, "reference coefficient");
  e_cont->add_option("--max-m", cnt.max_m, "word-truncation bound");
  e_cont->add_option("--max-n", cnt.max_n, "partition-size bound");
  e_cont->add_option("--mode", cnt.mode, "exact | sampled");
  e_cont->add_option("--budget", cnt.budget, "assignment budget per cloud");
  e_cont->add_option("--seed", cnt.seed, "sampling seed");
  e_cont->add_option("--tail-word", cnt.tail_word, "word for the tail curves");
  e_cont->add_option("--thresholds", cnt.thresholds, "comma-separated thresholds");
  e_cont->add_option("-o,--out", cnt.out_csv, "output CSV path");
  e_cont->callback([&] {
    ContinuityConfig cfg;
    if (!cnt.config.empty()) apply_continuity_config(cfg, cnt.config);
    if (e_cont->count("--rank")) cfg.rank = cnt.rank;
    if (e_cont->count("--depth")) cfg.depth = cnt.depth;
    if (e_cont->count("--trivial-cells")) cfg.trivial_cells = cnt.trivial_cells;
    if (e_cont->count("--t-grid")) cfg.t_grid = parse_double_list(cnt.t_grid, "--t-grid");
    if (e_cont->count("--t-ref")) cfg.t_ref = cnt.t_ref;
    if (e_cont->count("--max-m")) cfg.max_m = cnt.max_m;
    if (e_cont->count("--max-n")) cfg.max_n = cnt.max_n;
    if (e_cont->count("--mode")) cfg.mode = parse_mode(cnt.mode);
    if (e_cont->count("--budget")) cfg.budget = cnt.budget;
    if (e_cont->count("--seed")) cfg.seed = cnt.seed;
    if (e_cont->count("--tail-word")) cfg.tail_word = cnt.tail_word;
    if (e_cont->count("--thresholds"))
      cfg.thresholds = parse_double_list(cnt.thresholds, "--thresholds");
    if (e_cont->count("--out")) cfg.out_csv = cnt.out_csv;
    if (cfg.out_csv.empty()) cfg.out_csv = "continuity.csv";
    ContinuityResult res = run_continuity(cfg, out);
    out << "entropy boundary " << format_significant(res.entropy_boundary, 12)
        << " tail constant " << format_double(res.tail_constant) << "\n";
  });

  struct {
    std::string config;
    std::string ranks;
    std::string depths;
    bool no_skewed = false;
    double skew = 0.4;
    std::string t_grid;
    double target = 0.0;
    std::uint64_t seed = 1;
    std::string out_csv;
  } rlz;
  CLI::App* e_real = experiment->add_subcommand(
      "realization", "achievable entropy sweep over boundary models");
  e_real->add_option("--config", rlz.config, "JSON config file (flags override)");
  e_real->add_option("--ranks", rlz.ranks, "comma-separated ranks");
  e_real->add_option("--depths", rlz.depths, "comma-separated depths");
  e_real->add_flag("--no-skewed", rlz.no_skewed, "skip the skewed measures");
  e_real->add_option("--skew", rlz.skew, "first-letter probability of the skewed measure");
  e_real->add_option("--t-grid", rlz.t_grid, "comma-separated grid in (0,1)");
  e_real->add_option("--target", rlz.target, "target entropy to realize");
  e_real->add_option("--seed", rlz.seed, "seed recorded in the CSV");
  e_real->add_option("-o,--out", rlz.out_csv, "output CSV path");
  e_real->callback([&] {
    RealizationConfig cfg;
    if (!rlz.config.empty()) apply_realization_config(cfg, rlz.config);
    if (e_real->count("--ranks")) cfg.ranks = parse_int_list(rlz.ranks, "--ranks");
    if (e_real->count("--depths")) cfg.depths = parse_int_list(rlz.depths, "--depths");
    if (e_real->count("--no-skewed")) cfg.include_skewed = false;
    if (e_real->count("--skew")) cfg.skew = rlz.skew;
    if (e_real->count("--t-grid")) cfg.t_grid = parse_double_list(rlz.t_grid, "--t-grid");
    if (e_real->count("--target")) cfg.target = rlz.target;
    if (e_real->count("--seed")) cfg.seed = rlz.seed;
    if (e_real->count("--out")) cfg.out_csv = rlz.out_csv;
    if (cfg.out_csv.empty()) cfg.out_csv = "realization.csv";
    RealizationResult res = run_realization(cfg, out);
    if (res.realized_target)
      out << "realized target " << format_significant(*res.realized_target, 12) << "\n";
  });

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e, out, err);
    return rc == 0 ? 0 : 3;
  } catch (const MalformedInputError& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  } catch (const BudgetError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const ResolutionError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const UnsupportedWordError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationFailure& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const SolverError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const AssertionFailure& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return exit_code;
}

}
