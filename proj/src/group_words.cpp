#include "statact/group_words.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "statact/errors.hpp"

namespace statact {

namespace {

constexpr int kMaxRank = 26;  // letters a..z

void check_rank(int rank) {
  if (rank < 1 || rank > kMaxRank)
    throw MalformedInputError("rank must be between 1 and 26, got " + std::to_string(rank));
}

void check_letter(int letter, int rank) {
  int g = std::abs(letter);
  if (letter == 0 || g > rank)
    throw MalformedInputError("letter " + std::to_string(letter) +
                              " out of range for rank " + std::to_string(rank));
}

}  // namespace

int letter_key(int letter) {
  return 2 * (std::abs(letter) - 1) + (letter < 0 ? 1 : 0);
}

bool word_less(const GroupWord& u, const GroupWord& v) {
  if (u.letters.size() != v.letters.size()) return u.letters.size() < v.letters.size();
  for (std::size_t i = 0; i < u.letters.size(); ++i) {
    int a = letter_key(u.letters[i]), b = letter_key(v.letters[i]);
    if (a != b) return a < b;
  }
  return false;
}

GroupWord reduce(int rank, std::span<const int> letters) {
  check_rank(rank);
  GroupWord w;
  w.rank = rank;
  w.letters.reserve(letters.size());
  for (int l : letters) {
    check_letter(l, rank);
    if (!w.letters.empty() && w.letters.back() == -l)
      w.letters.pop_back();
    else
      w.letters.push_back(l);
  }
  return w;
}

GroupWord multiply(const GroupWord& u, const GroupWord& v) {
  if (u.rank != v.rank)
    throw MalformedInputError("rank mismatch in multiply: " + std::to_string(u.rank) +
                              " vs " + std::to_string(v.rank));
  GroupWord w;
  w.rank = u.rank;
  w.letters = u.letters;
  for (int l : v.letters) {
    if (!w.letters.empty() && w.letters.back() == -l)
      w.letters.pop_back();
    else
      w.letters.push_back(l);
  }
  return w;
}

GroupWord inverse(const GroupWord& u) {
  GroupWord w;
  w.rank = u.rank;
  w.letters.assign(u.letters.rbegin(), u.letters.rend());
  for (int& l : w.letters) l = -l;
  return w;
}

std::vector<GroupWord> enumerate_words(int rank, int count) {
  check_rank(rank);
  std::vector<GroupWord> out;
  if (count <= 0) return out;
  out.reserve(static_cast<std::size_t>(count));
  out.push_back(GroupWord{rank, {}});

  std::vector<int> order;
  for (int g = 1; g <= rank; ++g) {
    order.push_back(g);
    order.push_back(-g);
  }

  std::vector<int> cur;
  std::function<bool(int)> gen = [&](int remaining) -> bool {
    for (int l : order) {
      if (!cur.empty() && cur.back() == -l) continue;
      cur.push_back(l);
      if (remaining == 1) {
        out.push_back(GroupWord{rank, cur});
        if (static_cast<int>(out.size()) == count) {
          cur.pop_back();
          return true;
        }
      } else if (gen(remaining - 1)) {
        cur.pop_back();
        return true;
      }
      cur.pop_back();
    }
    return false;
  };

  for (int len = 1; static_cast<int>(out.size()) < count; ++len) {
    cur.clear();
    if (gen(len)) break;
  }
  return out;
}

std::vector<GroupWord> words_of_length(int rank, int length) {
  check_rank(rank);
  if (length < 0) throw MalformedInputError("negative word length");
  std::vector<GroupWord> out;
  if (length == 0) {
    out.push_back(GroupWord{rank, {}});
    return out;
  }
  std::vector<int> order;
  for (int g = 1; g <= rank; ++g) {
    order.push_back(g);
    order.push_back(-g);
  }
  std::vector<int> cur;
  std::function<void(int)> gen = [&](int remaining) {
    for (int l : order) {
      if (!cur.empty() && cur.back() == -l) continue;
      cur.push_back(l);
      if (remaining == 1)
        out.push_back(GroupWord{rank, cur});
      else
        gen(remaining - 1);
      cur.pop_back();
    }
  };
  gen(length);
  return out;
}

std::string format_word(const GroupWord& w) {
  if (w.is_identity()) return "e";
  std::string s;
  for (std::size_t i = 0; i < w.letters.size(); ++i) {
    if (i) s += ' ';
    int l = w.letters[i];
    s += static_cast<char>('a' + std::abs(l) - 1);
    if (l < 0) s += "^-1";
  }
  return s;
}

GroupWord parse_word(const std::string& text, int rank) {
  check_rank(rank);
  std::istringstream in(text);
  std::vector<std::string> tokens;
  std::string tok;
  while (in >> tok) tokens.push_back(tok);
  if (tokens.empty()) throw MalformedInputError("empty word string (identity is \"e\")");
  if (tokens.size() == 1 && tokens[0] == "e") return GroupWord{rank, {}};
  std::vector<int> letters;
  for (const auto& t : tokens) {
    if (t == "e")
      throw MalformedInputError("\"e\" may only appear as the whole word");
    bool inv = false;
    std::string base = t;
    if (base.size() > 3 && base.substr(base.size() - 3) == "^-1") {
      inv = true;
      base = base.substr(0, base.size() - 3);
    }
    if (base.size() != 1 || base[0] < 'a' || base[0] > 'z')
      throw MalformedInputError("bad word token \"" + t + "\"");
    int g = base[0] - 'a' + 1;
    if (g > rank)
      throw MalformedInputError("letter \"" + t + "\" beyond rank " + std::to_string(rank));
    letters.push_back(inv ? -g : g);
  }
  return reduce(rank, letters);
}

StepDistribution StepDistribution::make(int rank,
                                        std::vector<std::pair<GroupWord, double>> entries) {
  check_rank(rank);
  if (entries.empty()) throw MalformedInputError("step distribution needs at least one entry");
  double sum = 0.0;
  for (auto& [w, p] : entries) {
    if (w.rank != rank)
      throw MalformedInputError("step distribution word rank mismatch");
    if (!(p > 0.0) || p > 1.0)
      throw MalformedInputError("step probabilities must lie in (0,1]");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw MalformedInputError("step probabilities sum to " + std::to_string(sum) +
                              ", expected 1");
  std::sort(entries.begin(), entries.end(),
            [](const auto& x, const auto& y) { return word_less(x.first, y.first); });
  for (std::size_t i = 1; i < entries.size(); ++i)
    if (entries[i].first == entries[i - 1].first)
      throw MalformedInputError("duplicate word in step distribution: " +
                                format_word(entries[i].first));
  StepDistribution d;
  d.rank = rank;
  d.entries = std::move(entries);
  return d;
}

StepDistribution StepDistribution::uniform_nearest_neighbor(int rank) {
  check_rank(rank);
  std::vector<std::pair<GroupWord, double>> entries;
  double p = 1.0 / (2.0 * rank);
  for (int g = 1; g <= rank; ++g) {
    entries.emplace_back(GroupWord{rank, {g}}, p);
    entries.emplace_back(GroupWord{rank, {-g}}, p);
  }
  return make(rank, std::move(entries));
}

double StepDistribution::prob(const GroupWord& w) const {
  for (const auto& [u, p] : entries)
    if (u == w) return p;
  return 0.0;
}

bool StepDistribution::nearest_neighbor() const {
  for (const auto& [w, p] : entries)
    if (w.length() != 1) return false;
  return true;
}

bool same_distribution(const StepDistribution& x, const StepDistribution& y, double tol) {
  if (x.rank != y.rank || x.entries.size() != y.entries.size()) return false;
  for (std::size_t i = 0; i < x.entries.size(); ++i) {
    if (!(x.entries[i].first == y.entries[i].first)) return false;
    if (std::abs(x.entries[i].second - y.entries[i].second) > tol) return false;
  }
  return true;
}

}
