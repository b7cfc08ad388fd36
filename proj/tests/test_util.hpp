#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "priorvqa/tensor.hpp"

namespace priorvqa::testing {

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("priorvqa_test_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

template <typename T>
Tensor4<T> random_tensor(Shape s, std::mt19937_64& gen, double lo = -1.0,
                         double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Tensor4<T> t(s);
  for (T& v : t.values()) v = static_cast<T>(dist(gen));
  return t;
}

}  // namespace priorvqa::testing
