#pragma once

// Argument helpers of the command-line front end.

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace nvbath_cli {

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline double to_double(const std::string& s) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw Failure("not a number: '" + s + "'");
  }
  if (pos != s.size()) throw Failure("not a number: '" + s + "'");
  return v;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

// "a,b,c", "a:b" (unit steps), "a:b:step", "a:b:log" (10 points per decade)
// or "a:b:logN" (N points).
inline std::vector<double> parse_range(const std::string& text) {
  if (text.find(':') == std::string::npos) {
    std::vector<double> v;
    for (const auto& t : split(text, ',')) v.push_back(to_double(t));
    if (v.empty()) throw Failure("empty list");
    return v;
  }
  const auto p = split(text, ':');
  if (p.size() < 2 || p.size() > 3) throw Failure("range must be a:b, a:b:step or a:b:log");
  const double a = to_double(p[0]), b = to_double(p[1]);
  if (!(b >= a)) throw Failure("range end must not be below its start: " + text);
  std::vector<double> v;
  if (p.size() == 3 && p[2].rfind("log", 0) == 0) {
    if (!(a > 0.0)) throw Failure("log range needs a positive start: " + text);
    int n = 0;
    if (p[2].size() > 3) {
      n = static_cast<int>(to_double(p[2].substr(3)));
    } else {
      n = static_cast<int>(std::lround(10.0 * std::log10(b / a))) + 1;
    }
    if (n < 1) throw Failure("log range needs at least one point: " + text);
    if (n == 1) return {a};
    for (int i = 0; i < n; ++i) {
      double x = a * std::pow(b / a, static_cast<double>(i) / (n - 1));
      if (i == n - 1) x = b;
      v.push_back(x);
    }
    return v;
  }
  const double step = p.size() == 3 ? to_double(p[2]) : 1.0;
  if (!(step > 0.0)) throw Failure("range step must be positive: " + text);
  const auto n = static_cast<long>(std::floor((b - a) / step + 1e-9));
  for (long i = 0; i <= n; ++i) v.push_back(a + step * static_cast<double>(i));
  return v;
}

}  // namespace nvbath_cli
