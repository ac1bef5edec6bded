#pragma once

// Brute-force correlation oracles, written independently of the library:
// O(n^2) average ranks and the textbook covariance formula in long double.

#include <cmath>
#include <vector>

namespace levelscore::testing {

inline long double oracle_pearson(const std::vector<long double>& x,
                                  const std::vector<long double>& y) {
  const std::size_t n = x.size();
  long double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  long double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

inline std::vector<long double> oracle_ranks(const std::vector<double>& v) {
  std::vector<long double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::size_t less = 0, equal = 0;
    for (double w : v) {
      less += w < v[i];
      equal += w == v[i];
    }
    r[i] = 1.0L + less + (equal - 1) / 2.0L;
  }
  return r;
}

inline bool oracle_ranks_constant(const std::vector<double>& v) {
  for (double w : v) {
    if (w != v.front()) return false;
  }
  return true;
}

inline double oracle_plcc(const std::vector<double>& x, const std::vector<double>& y) {
  return static_cast<double>(oracle_pearson({x.begin(), x.end()}, {y.begin(), y.end()}));
}

inline double oracle_srocc(const std::vector<double>& x, const std::vector<double>& y) {
  return static_cast<double>(oracle_pearson(oracle_ranks(x), oracle_ranks(y)));
}

}  // namespace levelscore::testing
