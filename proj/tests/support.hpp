#pragma once

#include <doctest.h>

#include <filesystem>
#include <string>
#include <vector>

#include "evc/error.hpp"
#include "evc/features.hpp"
#include "evc/rng.hpp"

namespace evc::test {

// Fresh per-binary scratch directory under the build tree.
inline std::filesystem::path scratch(const std::string& name) {
  const std::filesystem::path p = std::filesystem::path(EVC_TEST_TMP) / name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline Matrix random_matrix(SeededRng& rng, std::size_t rows, std::size_t cols, double lo = -1.0, double hi = 1.0) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.uniform(lo, hi);
  return m;
}

inline std::vector<double> random_vector(SeededRng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

}  // namespace evc::test

#define CHECK_ERROR_KIND(expr, expected_kind)                        \
  do {                                                               \
    bool thrown_ = false;                                            \
    try {                                                            \
      (void)(expr);                                                  \
    } catch (const ::evc::Error& e_) {                               \
      thrown_ = true;                                                \
      CHECK_MESSAGE(e_.kind() == (expected_kind), e_.what());        \
    }                                                                \
    CHECK_MESSAGE(thrown_, "expected an evc::Error from " #expr);    \
  } while (0)
