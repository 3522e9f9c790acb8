#include "statact/action_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "statact/errors.hpp"
#include "statact/version.hpp"

namespace statact {

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string format_significant(double x, int digits) {
  if (digits < 1) digits = 1;
  if (x == 0.0) return "0";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*e", digits - 1, x);
  std::string s = buf;
  auto epos = s.find('e');
  if (epos == std::string::npos) return s;  // inf / nan
  std::string mant = s.substr(0, epos);
  int exp = std::stoi(s.substr(epos + 1));
  bool neg = !mant.empty() && mant[0] == '-';
  if (neg) mant.erase(0, 1);
  mant.erase(std::remove(mant.begin(), mant.end(), '.'), mant.end());
  std::string out;
  if (exp >= 0) {
    if (exp + 1 >= static_cast<int>(mant.size()))
      out = mant + std::string(exp + 1 - mant.size(), '0');
    else
      out = mant.substr(0, exp + 1) + "." + mant.substr(exp + 1);
  } else {
    out = "0." + std::string(-exp - 1, '0') + mant;
  }
  return (neg ? "-" : "") + out;
}

namespace {

std::string json_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += "\"";
  return out;
}

}  // namespace

void write_action(std::ostream& out, const CellAction& a) {
  out << "{\n";
  out << "  \"group\": {\"rank\": " << a.measure().rank << "},\n";
  out << "  \"measure\": [\n";
  const auto& entries = a.measure().entries;
  for (std::size_t i = 0; i < entries.size(); ++i)
    out << "    {\"word\": \"" << json_escape(format_word(entries[i].first))
        << "\", \"prob\": " << format_double(entries[i].second) << "}"
        << (i + 1 < entries.size() ? "," : "") << "\n";
  out << "  ],\n";
  out << "  \"cells\": [\n";
  for (std::size_t i = 0; i < a.cell_count(); ++i)
    out << "    {\"id\": \"" << json_escape(a.cells()[i].id)
        << "\", \"weight\": " << format_double(a.cells()[i].weight) << "}"
        << (i + 1 < a.cell_count() ? "," : "") << "\n";
  out << "  ],\n";
  out << "  \"transports\": {\n";
  std::size_t persisted = 0;
  for (const auto& [w, t] : a.stored_transports())
    if (t.exact) ++persisted;
  std::size_t written = 0;
  for (const auto& [w, t] : a.stored_transports()) {
    if (!t.exact) continue;
    out << "    \"" << json_escape(format_word(w)) << "\": [\n";
    for (std::size_t i = 0; i < t.pieces.size(); ++i) {
      const TransportPiece& p = t.pieces[i];
      out << "      {\"src\": \"" << json_escape(a.cells()[p.src].id) << "\", \"dst\": \""
          << json_escape(a.cells()[p.dst].id) << "\", \"T\": " << format_double(p.T)
          << ", \"W\": " << format_double(p.W) << "}"
          << (i + 1 < t.pieces.size() ? "," : "") << "\n";
    }
    ++written;
    out << "    ]" << (written < persisted ? "," : "") << "\n";
  }
  out << "  },\n";
  out << "  \"kind\": \"" << kind_name(a.kind()) << "\"\n";
  out << "}\n";
}

void save_action(const std::string& path, const CellAction& a) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw MalformedInputError("cannot open \"" + path + "\" for writing");
  write_action(f, a);
  f.flush();
  if (!f) throw MalformedInputError("failed writing \"" + path + "\"");
}

CellAction parse_action(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw MalformedInputError(std::string("invalid action file: ") + e.what());
  }
  try {
    int rank = j.at("group").at("rank").get<int>();
    std::vector<std::pair<GroupWord, double>> entries;
    for (const auto& e : j.at("measure"))
      entries.emplace_back(parse_word(e.at("word").get<std::string>(), rank),
                           e.at("prob").get<double>());
    StepDistribution m = StepDistribution::make(rank, std::move(entries));

    std::vector<Cell> cells;
    std::map<std::string, std::uint32_t> index;
    for (const auto& c : j.at("cells")) {
      Cell cell{c.at("id").get<std::string>(), c.at("weight").get<double>()};
      index.emplace(cell.id, static_cast<std::uint32_t>(cells.size()));
      cells.push_back(std::move(cell));
    }

    std::vector<WordTransport> transports;
    for (const auto& [key, pieces] : j.at("transports").items()) {
      WordTransport t;
      t.word = parse_word(key, rank);
      t.exact = true;
      for (const auto& p : pieces) {
        auto src = index.find(p.at("src").get<std::string>());
        auto dst = index.find(p.at("dst").get<std::string>());
        if (src == index.end() || dst == index.end())
          throw MalformedInputError("transport for \"" + key +
                                    "\" references an unknown cell id");
        t.pieces.push_back(
            {src->second, dst->second, p.at("T").get<double>(), p.at("W").get<double>()});
      }
      transports.push_back(std::move(t));
    }

    ActionKind kind = kind_from_name(j.at("kind").get<std::string>());
    return CellAction(std::move(cells), std::move(m), std::move(transports), kind);
  } catch (const nlohmann::json::exception& e) {
    throw MalformedInputError(std::string("invalid action file: ") + e.what());
  }
}

CellAction load_action(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw MalformedInputError("cannot open \"" + path + "\"");
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_action(buf.str());
}

void write_cloud_csv(std::ostream& out, const StatsCloud& c) {
  out << "# statact " << kVersion << " cloud mode="
      << (c.mode == CloudMode::Exact ? "exact" : "sampled") << " seed=" << c.seed
      << " budget=" << c.budget << " words=" << c.words << " pieces=" << c.pieces
      << " points=" << c.points.size() << "\n";
  out << "point";
  for (int k = 1; k <= c.words; ++k)
    for (int i = 1; i <= c.pieces; ++i)
      for (int j = 1; j <= c.pieces; ++j)
        out << ",k" << k << "_i" << i << "_j" << j;
  out << "\n";
  for (std::size_t p = 0; p < c.points.size(); ++p) {
    out << p;
    for (double v : c.points[p].v) out << "," << format_double(v);
    out << "\n";
  }
}

void write_delta_csv(std::ostream& out, const DeltaReport& r) {
  out << "# statact " << kVersion << " " << (r.directed ? "defect" : "delta")
      << " mode=" << (r.mode == CloudMode::Exact ? "exact" : "sampled")
      << " seed=" << r.seed << " budget=" << r.budget << " max_m=" << r.max_m
      << " max_n=" << r.max_n << " tail_bound=" << format_double(r.tail_bound)
      << " truncated_value=" << format_double(r.truncated_value)
      << " transports_exact=" << (r.transports_exact ? 1 : 0)
      << " complete=" << (r.complete() ? 1 : 0) << "\n";
  out << "m,n,weight,distance,ok,error\n";
  for (const auto& t : r.terms)
    out << t.m << "," << t.n << "," << format_double(std::ldexp(1.0, -(t.m + t.n)))
        << "," << format_double(t.dh) << "," << (t.ok ? 1 : 0) << ","
        << csv_field(t.error) << "\n";
}

OrderedPartition load_partition(const std::string& path, const CellAction& a) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw MalformedInputError("cannot open \"" + path + "\"");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw MalformedInputError(std::string("invalid partition file: ") + e.what());
  }
  try {
    int pieces = j.at("pieces").get<int>();
    std::map<std::string, int> labels;
    for (const auto& [id, label] : j.at("labels").items())
      labels[id] = label.get<int>();
    return partition_from_ids(a, labels, pieces);
  } catch (const nlohmann::json::exception& e) {
    throw MalformedInputError(std::string("invalid partition file: ") + e.what());
  }
}

}
