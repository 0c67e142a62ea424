#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <unistd.h>

#include "oneshot/tensor.hpp"

namespace testing_support {

// std::mt19937_64 keeps fixtures independent of the library's own generator.
template <typename T = float>
oneshot::BasicTensor<T> random_tensor(oneshot::Shape shape, std::mt19937_64& gen, double lo = -1.0,
                                      double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  oneshot::BasicTensor<T> t(std::move(shape));
  for (auto& x : t.data()) x = static_cast<T>(dist(gen));
  return t;
}

template <typename T>
std::vector<double> to_doubles(const oneshot::BasicTensor<T>& t) {
  return {t.data().begin(), t.data().end()};
}

template <typename T>
oneshot::BasicTensor<T> from_doubles(const oneshot::Shape& shape, std::span<const double> xs) {
  std::vector<T> data(xs.begin(), xs.end());
  return oneshot::BasicTensor<T>(shape, std::move(data));
}

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("oneshot_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing_support
