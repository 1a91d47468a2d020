#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "pushsort/layers.hpp"
#include "pushsort/scene.hpp"
#include "pushsort/tensor.hpp"

namespace pushsort {

enum class Head {
  /// Stride-1 convolutions with instance norm; every layer keeps G x G.
  FullRes,
  /// Two stride-2 convolutions down to G/4, then x4 bilinear upsampling.
  CoarseBilinear,
};

std::string to_string(Head head);
Head head_from_string(const std::string& name);

struct NetSpec {
  Head head = Head::FullRes;
  int orientations = 8;
  int hidden1 = 8;
  int hidden2 = 16;
  /// Change-predictor variant: sigmoid after the last layer.
  bool sigmoid_output = false;
};

/// Heightmap divided by the tallest object height, as a 1 x G x G tensor.
Tensor normalize_heightmap(const Heightmap& map);

/// Fully convolutional map from a 1 x G x G input to K x G x G values, with
/// manual backpropagation. The output has no final rectification.
class ConvNet {
 public:
  ConvNet(const NetSpec& spec, int grid_size, std::uint64_t seed);

  /// Per-layer activations; values[0] is the input and values.back() the output.
  struct Trace {
    std::vector<Tensor> values;
    const Tensor& output() const { return values.back(); }
  };

  Tensor forward(const Tensor& input) const;
  Tensor forward(const Heightmap& map) const { return forward(normalize_heightmap(map)); }
  Trace forward_trace(const Tensor& input) const;

  /// Accumulates d(loss)/d(params) into grad_params given d(loss)/d(output).
  void backward(const Trace& trace, const Tensor& grad_output,
                std::span<double> grad_params) const;

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }
  std::size_t parameter_count() const { return params_.size(); }
  void set_parameters(std::span<const double> values);

  const NetSpec& spec() const { return spec_; }
  int grid_size() const { return grid_; }
  Shape input_shape() const { return {1, grid_, grid_}; }
  Shape output_shape() const { return {spec_.orientations, grid_, grid_}; }

  /// Layer names in order, e.g. for logging the architecture.
  std::vector<std::string> layer_names() const;

 private:
  struct Slot {
    std::shared_ptr<const Layer> layer;
    Shape input;
    std::size_t offset;
    std::size_t count;
  };

  void add(std::shared_ptr<const Layer> layer);
  std::span<const double> slot_params(const Slot& s) const {
    return std::span<const double>(params_).subspan(s.offset, s.count);
  }

  NetSpec spec_;
  int grid_;
  std::vector<Slot> slots_;
  Shape next_input_;
  std::vector<double> params_;
};

}  // namespace pushsort
