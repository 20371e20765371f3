#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace gift {

/// Dense row-major tensor of 64-bit floats. Rank 1 or 2 in practice.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s, double fill = 0.0);

  static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }
  static Tensor scalar(double v);
  static Tensor row(std::vector<double> v);
  static Tensor from_rows(const std::vector<std::vector<double>>& rows);

  int ndim() const { return static_cast<int>(shape.size()); }
  std::int64_t numel() const;

  // 2-D accessors; a rank-1 tensor behaves as a single row.
  int rows() const;
  int cols() const;
  double& at(int i, int j);
  double at(int i, int j) const;

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
  bool all_finite() const;
  void fill(double v);

  std::string shape_str() const;
};

void fill_normal(Tensor& t, std::mt19937_64& rng, double stddev);

double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace gift
