#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace pushsort {

struct Shape {
  int channels = 0;
  int height = 0;
  int width = 0;

  std::size_t size() const {
    return static_cast<std::size_t>(channels) * static_cast<std::size_t>(height) *
           static_cast<std::size_t>(width);
  }
  std::size_t plane() const {
    return static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
  }
  friend bool operator==(const Shape&, const Shape&) = default;
};

/// Dense channel-major (C, H, W) array of doubles.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0) : shape_(shape), data_(shape.size(), fill) {}

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }

  double& at(int c, int y, int x) { return data_[offset(c, y, x)]; }
  double at(int c, int y, int x) const { return data_[offset(c, y, x)]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  std::span<double> channel(int c) {
    return std::span<double>(data_).subspan(static_cast<std::size_t>(c) * shape_.plane(),
                                            shape_.plane());
  }
  std::span<const double> channel(int c) const {
    return std::span<const double>(data_).subspan(static_cast<std::size_t>(c) * shape_.plane(),
                                                  shape_.plane());
  }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::size_t offset(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * static_cast<std::size_t>(shape_.height) +
            static_cast<std::size_t>(y)) *
               static_cast<std::size_t>(shape_.width) +
           static_cast<std::size_t>(x);
  }

  Shape shape_;
  std::vector<double> data_;
};

}  // namespace pushsort
