#pragma once

// Frequency-of-frequencies count data: n_x = number of classes seen exactly x times.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "classcount/error.hpp"

namespace classcount {

/// Immutable sparse table x -> n_x with only positive counts stored.
class FrequencyData {
 public:
  using Counts = std::map<int, std::int64_t>;

  /// Zero entries are dropped. Throws DomainError on x < 1, n_x < 0 or an empty table.
  explicit FrequencyData(const Counts& counts) {
    for (const auto& [x, nx] : counts) {
      if (x < 1) throw DomainError("frequency key must be >= 1, got " + std::to_string(x));
      if (nx < 0) throw DomainError("count for x = " + std::to_string(x) + " is negative");
      if (nx == 0) continue;
      counts_.emplace(x, nx);
      n_ += nx;
      total_ += static_cast<std::int64_t>(x) * nx;
    }
    if (n_ == 0) throw DomainError("frequency data is empty (n = 0)");
    x_max_ = counts_.rbegin()->first;
  }

  const Counts& counts() const noexcept { return counts_; }

  /// Number of detected classes.
  std::int64_t n() const noexcept { return n_; }

  /// Number of individuals, sum of x * n_x.
  std::int64_t S() const noexcept { return total_; }

  int x_max() const noexcept { return x_max_; }

  std::int64_t count(int x) const {
    auto it = counts_.find(x);
    return it == counts_.end() ? 0 : it->second;
  }

  /// Dense empirical pmf: element i is n_{i+1}/n, length x_max.
  std::vector<double> pmf() const {
    std::vector<double> p(static_cast<std::size_t>(x_max_), 0.0);
    for (const auto& [x, nx] : counts_) p[x - 1] = static_cast<double>(nx) / static_cast<double>(n_);
    return p;
  }

  /// Expand back into the multiset of per-class counts, ascending.
  std::vector<std::int64_t> expand() const {
    std::vector<std::int64_t> out;
    out.reserve(static_cast<std::size_t>(n_));
    for (const auto& [x, nx] : counts_) out.insert(out.end(), static_cast<std::size_t>(nx), x);
    return out;
  }

  friend bool operator==(const FrequencyData& a, const FrequencyData& b) {
    return a.counts_ == b.counts_;
  }

 private:
  Counts counts_;
  std::int64_t n_ = 0;
  std::int64_t total_ = 0;
  int x_max_ = 0;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

inline bool parse_int(std::string_view token, std::int64_t& value) {
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  return ec == std::errc() && ptr == last;
}

// Calls fn(tokens, line_number) for every non-blank, non-comment line.
template <class Fn>
void for_each_data_line(std::istream& in, Fn&& fn) {
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    fn(split_ws(body), number);
  }
}

}  // namespace detail

/// Reads "x n_x" pairs, one per line. '#' lines and blank lines are skipped.
inline FrequencyData parse_frequencies(std::istream& in) {
  FrequencyData::Counts counts;
  detail::for_each_data_line(in, [&](const std::vector<std::string_view>& tokens, int line) {
    std::int64_t x = 0;
    std::int64_t nx = 0;
    if (tokens.size() != 2 || !detail::parse_int(tokens[0], x) || !detail::parse_int(tokens[1], nx))
      throw ParseError("expected two integers \"x n_x\"", line);
    if (x < 1 || x > 1'000'000) throw ParseError("x must be a positive integer", line);
    if (nx < 0) throw ParseError("n_x must be nonnegative", line);
    if (!counts.emplace(static_cast<int>(x), nx).second)
      throw ParseError("duplicate x = " + std::to_string(x), line);
  });
  std::int64_t n = 0;
  for (const auto& [x, nx] : counts) n += nx;
  if (n == 0) throw ParseError("no classes in input (n = 0)", 0);
  return FrequencyData(counts);
}

inline FrequencyData parse_frequencies(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_frequencies(in);
}

/// Tabulates a list of per-class counts X_1..X_n.
inline FrequencyData from_raw_counts(std::span<const std::int64_t> values) {
  if (values.empty()) throw DomainError("raw count list is empty");
  FrequencyData::Counts counts;
  for (auto v : values) {
    if (v < 1) throw DomainError("raw counts must be positive, got " + std::to_string(v));
    ++counts[static_cast<int>(v)];
  }
  return FrequencyData(counts);
}

/// One positive integer per line, same comment rule as the frequency format.
inline FrequencyData parse_raw_counts(std::istream& in) {
  std::vector<std::int64_t> values;
  detail::for_each_data_line(in, [&](const std::vector<std::string_view>& tokens, int line) {
    std::int64_t v = 0;
    if (tokens.size() != 1 || !detail::parse_int(tokens[0], v))
      throw ParseError("expected a single integer", line);
    if (v < 1) throw ParseError("raw counts must be positive", line);
    values.push_back(v);
  });
  if (values.empty()) throw ParseError("no classes in input (n = 0)", 0);
  return from_raw_counts(values);
}

inline double empirical_pmf(const FrequencyData& d, int x) {
  if (x < 1) throw DomainError("empirical_pmf: x must be >= 1");
  return static_cast<double>(d.count(x)) / static_cast<double>(d.n());
}

/// F_n(x) = sum_{i <= x} n_i / n.
inline double empirical_cdf(const FrequencyData& d, int x) {
  std::int64_t below = 0;
  for (const auto& [k, nk] : d.counts()) {
    if (k > x) break;
    below += nk;
  }
  return static_cast<double>(below) / static_cast<double>(d.n());
}

/// x! as a double, built by repeated multiplication (exact through 22!).
inline double factorial(int x) {
  double f = 1.0;
  for (int i = 2; i <= x; ++i) f *= i;
  return f;
}

/// x! n_x / n. The factorial must stay exact in double precision, hence x <= 170.
inline double empirical_moment(const FrequencyData& d, int x) {
  if (x < 1) throw DomainError("empirical_moment: x must be >= 1");
  if (x > 170) throw DomainError("empirical_moment: x! overflows for x = " + std::to_string(x));
  const auto nx = d.count(x);
  if (nx == 0) return 0.0;
  return factorial(x) * static_cast<double>(nx) / static_cast<double>(d.n());
}

/// sum_x x^i pmf(x), where pmf[j] is the probability of x = j + 1.
inline double s_moment(std::span<const double> pmf, int i) {
  if (i < 0) throw DomainError("s_moment: order must be nonnegative");
  if (i == 0) return 1.0;
  double s = 0.0;
  for (std::size_t j = 0; j < pmf.size(); ++j) s += std::pow(static_cast<double>(j + 1), i) * pmf[j];
  return s;
}

}  // namespace classcount
