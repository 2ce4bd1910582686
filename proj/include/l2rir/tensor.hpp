#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "l2rir/error.hpp"

namespace l2rir {

// N x C x H x W extent. Parameters reuse the same four slots
// (e.g. conv weights are out x in x k x k).
struct Shape {
  int n = 1;
  int c = 1;
  int h = 1;
  int w = 1;

  std::size_t numel() const noexcept {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  std::size_t sample_size() const noexcept { return static_cast<std::size_t>(c) * h * w; }
  std::size_t plane_size() const noexcept { return static_cast<std::size_t>(h) * w; }
  friend bool operator==(const Shape&, const Shape&) = default;
  std::string str() const;
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double v) { return Tensor(Shape{1, 1, 1, 1}, v); }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t numel() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  double* sample(int n) noexcept { return data_.data() + n * shape_.sample_size(); }
  const double* sample(int n) const noexcept { return data_.data() + n * shape_.sample_size(); }

  double& at(int n, int c, int y, int x) noexcept { return data_[index(n, c, y, x)]; }
  double at(int n, int c, int y, int x) const noexcept { return data_[index(n, c, y, x)]; }

  double item() const;

  void fill(double v);
  Tensor& operator+=(const Tensor& other);

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  std::size_t index(int n, int c, int y, int x) const noexcept {
    return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + y) * shape_.w + x;
  }

  Shape shape_{0, 0, 0, 0};
  std::vector<double> data_;
};

}  // namespace l2rir
