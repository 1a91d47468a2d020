#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>

#include "pushsort/tensor.hpp"

namespace pushsort {

/// Stateless layer. Parameters live in the owning network's flat vector and are
/// passed in as a span, so copying a network copies only its parameter vector.
class Layer {
 public:
  virtual ~Layer() = default;

  virtual std::string name() const = 0;
  virtual Shape output_shape(const Shape& in) const = 0;
  virtual std::size_t parameter_count(const Shape& /*in*/) const { return 0; }
  virtual void initialize(std::span<double> /*params*/, const Shape& /*in*/,
                          std::mt19937_64& /*rng*/) const {}

  virtual void forward(const Tensor& in, Tensor& out, std::span<const double> params) const = 0;

  /// Accumulates into grad_params; overwrites grad_in.
  virtual void backward(const Tensor& in, const Tensor& out, const Tensor& grad_out,
                        Tensor& grad_in, std::span<const double> params,
                        std::span<double> grad_params) const = 0;
};

class Conv2d final : public Layer {
 public:
  Conv2d(int in_channels, int out_channels, int kernel, int stride, int padding);

  std::string name() const override { return "conv2d"; }
  Shape output_shape(const Shape& in) const override;
  std::size_t parameter_count(const Shape& in) const override;
  /// He-uniform kernel, zero bias.
  void initialize(std::span<double> params, const Shape& in, std::mt19937_64& rng) const override;
  void forward(const Tensor& in, Tensor& out, std::span<const double> params) const override;
  void backward(const Tensor& in, const Tensor& out, const Tensor& grad_out, Tensor& grad_in,
                std::span<const double> params, std::span<double> grad_params) const override;

 private:
  std::size_t weight_count() const;
  // Output positions o with valid input o * stride - padding + k.
  std::pair<int, int> valid_range(int k, int in_extent, int out_extent) const;

  int in_;
  int out_;
  int kernel_;
  int stride_;
  int padding_;
};

/// Per-sample, per-channel normalization with learnable scale and shift.
class InstanceNorm final : public Layer {
 public:
  explicit InstanceNorm(int channels, double epsilon = 1e-5);

  std::string name() const override { return "instance_norm"; }
  Shape output_shape(const Shape& in) const override { return in; }
  std::size_t parameter_count(const Shape& in) const override;
  void initialize(std::span<double> params, const Shape& in, std::mt19937_64& rng) const override;
  void forward(const Tensor& in, Tensor& out, std::span<const double> params) const override;
  void backward(const Tensor& in, const Tensor& out, const Tensor& grad_out, Tensor& grad_in,
                std::span<const double> params, std::span<double> grad_params) const override;

 private:
  int channels_;
  double epsilon_;
};

class Relu final : public Layer {
 public:
  std::string name() const override { return "relu"; }
  Shape output_shape(const Shape& in) const override { return in; }
  void forward(const Tensor& in, Tensor& out, std::span<const double> params) const override;
  void backward(const Tensor& in, const Tensor& out, const Tensor& grad_out, Tensor& grad_in,
                std::span<const double> params, std::span<double> grad_params) const override;
};

class Sigmoid final : public Layer {
 public:
  std::string name() const override { return "sigmoid"; }
  Shape output_shape(const Shape& in) const override { return in; }
  void forward(const Tensor& in, Tensor& out, std::span<const double> params) const override;
  void backward(const Tensor& in, const Tensor& out, const Tensor& grad_out, Tensor& grad_in,
                std::span<const double> params, std::span<double> grad_params) const override;
};

/// Bilinear upsampling by an integer factor. Output cell o samples source
/// coordinate o / factor, so every factor-th output reproduces an input value
/// exactly and the cells in between are convex combinations of at most four
/// inputs. Beyond the last input row/column the edge value is repeated.
class BilinearUpsample final : public Layer {
 public:
  explicit BilinearUpsample(int factor);

  std::string name() const override { return "bilinear_upsample"; }
  Shape output_shape(const Shape& in) const override;
  void forward(const Tensor& in, Tensor& out, std::span<const double> params) const override;
  void backward(const Tensor& in, const Tensor& out, const Tensor& grad_out, Tensor& grad_in,
                std::span<const double> params, std::span<double> grad_params) const override;

  int factor() const { return factor_; }

 private:
  struct Tap {
    int i0;
    int i1;
    double frac;
  };
  Tap tap(int out_index, int in_extent) const;

  int factor_;
};

Tensor bilinear_upsample(const Tensor& input, int factor);

/// Upsamples to `output_extent`; throws when it is not a multiple of the input extent.
Tensor bilinear_upsample_to(const Tensor& input, int output_extent);

}  // namespace pushsort
