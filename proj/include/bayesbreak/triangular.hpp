#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace bayesbreak {

// Values indexed by blocks (i, j] with 0 <= i < j <= n, packed row by row.
class TriangularArray {
 public:
  TriangularArray() = default;
  explicit TriangularArray(std::size_t n, double fill = 0.0)
      : n_(n), data_(n * (n + 1) / 2, fill) {}

  std::size_t n() const { return n_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[index(i, j)]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[index(i, j)]; }

  std::vector<double>& raw() { return data_; }
  const std::vector<double>& raw() const { return data_; }

  bool operator==(const TriangularArray&) const = default;

 private:
  std::size_t index(std::size_t i, std::size_t j) const {
    assert(i < j && j <= n_);
    return i * n_ - i * (i - 1) / 2 + (j - i - 1);
  }

  std::size_t n_ = 0;
  std::vector<double> data_;
};

}  // namespace bayesbreak
