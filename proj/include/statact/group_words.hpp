#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace statact {

// Reduced word in the free group of a given rank. Letter +k is the k-th
// generator (1-based), -k its inverse; the empty letter list is the identity.
// Words are only produced through reduce/multiply/inverse/parse, which keep
// the letter list freely reduced.
struct GroupWord {
  int rank = 1;
  std::vector<int> letters;

  bool is_identity() const { return letters.empty(); }
  int length() const { return static_cast<int>(letters.size()); }

  bool operator==(const GroupWord&) const = default;
};

// Order on letters used everywhere (enumeration, map keys, serialization):
// a < a^-1 < b < b^-1 < ...
int letter_key(int letter);

// Length-lexicographic order; identity first, ties broken by letter_key.
bool word_less(const GroupWord& u, const GroupWord& v);

struct WordLess {
  bool operator()(const GroupWord& u, const GroupWord& v) const { return word_less(u, v); }
};

// Free reduction of a raw letter sequence. Throws MalformedInputError when a
// letter is zero or out of range for the rank.
GroupWord reduce(int rank, std::span<const int> letters);

// Concatenation followed by cancellation at the interface. Throws
// MalformedInputError on rank mismatch.
GroupWord multiply(const GroupWord& u, const GroupWord& v);

GroupWord inverse(const GroupWord& u);

// First `count` reduced words in length-lex order, identity first.
std::vector<GroupWord> enumerate_words(int rank, int count);

// All reduced words of exactly the given length, in enumeration order.
std::vector<GroupWord> words_of_length(int rank, int length);

// Text form: letters a..z, inverses suffixed ^-1, space separated; identity
// prints as "e". parse_word rejects letters beyond the rank.
std::string format_word(const GroupWord& w);
GroupWord parse_word(const std::string& text, int rank);

// Finitely supported step distribution on the free group. Entries are kept
// sorted by word_less; probabilities are positive and sum to one (1e-12).
struct StepDistribution {
  int rank = 1;
  std::vector<std::pair<GroupWord, double>> entries;

  static StepDistribution make(int rank, std::vector<std::pair<GroupWord, double>> entries);
  static StepDistribution uniform_nearest_neighbor(int rank);

  double prob(const GroupWord& w) const;  // 0 when w is not in the support
  bool nearest_neighbor() const;          // every support word has length 1
};

bool same_distribution(const StepDistribution& x, const StepDistribution& y,
                       double tol = 1e-12);

}
