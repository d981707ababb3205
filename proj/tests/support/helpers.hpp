#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "dtwcert/error.hpp"
#include "dtwcert/matrix.hpp"

namespace testing {

inline dtwcert::Matrix col(std::vector<double> v) {
  const std::size_t n = v.size();
  return dtwcert::Matrix(n, 1, std::move(v));
}

inline dtwcert::Matrix random_matrix(std::mt19937_64& gen, std::size_t rows, std::size_t cols,
                                     double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  dtwcert::Matrix m(rows, cols);
  for (double& v : m.flat()) v = normal(gen);
  return m;
}

// Random walk: slowly varying windows like real sensor data.
inline dtwcert::Matrix random_walk(std::mt19937_64& gen, std::size_t rows, std::size_t cols,
                                   double step = 0.1) {
  std::normal_distribution<double> normal(0.0, step);
  dtwcert::Matrix m(rows, cols);
  for (std::size_t k = 0; k < cols; ++k) {
    double level = normal(gen) * 10.0;
    for (std::size_t i = 0; i < rows; ++i) {
      level += normal(gen);
      m(i, k) = level;
    }
  }
  return m;
}

template <typename Fn>
dtwcert::ErrorCode error_code_of(Fn&& fn) {
  try {
    fn();
  } catch (const dtwcert::Error& e) {
    return e.code();
  }
  throw std::runtime_error("expected a dtwcert::Error");
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("dtwcert-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

}  // namespace testing
