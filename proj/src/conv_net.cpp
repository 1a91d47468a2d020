#include "pushsort/conv_net.hpp"

#include <random>
#include <stdexcept>

namespace pushsort {

std::string to_string(Head head) {
  return head == Head::FullRes ? "full_res" : "coarse_bilinear";
}

Head head_from_string(const std::string& name) {
  if (name == "full_res") return Head::FullRes;
  if (name == "coarse_bilinear") return Head::CoarseBilinear;
  throw std::invalid_argument("unknown model head '" + name + "'");
}

Tensor normalize_heightmap(const Heightmap& map) {
  const int g = map.size();
  Tensor t(Shape{1, g, g});
  const auto src = map.values();
  auto dst = t.values();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] / kMaxDepth;
  return t;
}

ConvNet::ConvNet(const NetSpec& spec, int grid_size, std::uint64_t seed)
    : spec_(spec), grid_(grid_size), next_input_{1, grid_size, grid_size} {
  if (grid_size < 2) throw std::invalid_argument("ConvNet: grid too small");
  const int k = spec.orientations;
  if (spec.head == Head::FullRes) {
    add(std::make_shared<Conv2d>(1, spec.hidden1, 3, 1, 1));
    add(std::make_shared<InstanceNorm>(spec.hidden1));
    add(std::make_shared<Relu>());
    add(std::make_shared<Conv2d>(spec.hidden1, spec.hidden2, 3, 1, 1));
    add(std::make_shared<InstanceNorm>(spec.hidden2));
    add(std::make_shared<Relu>());
    add(std::make_shared<Conv2d>(spec.hidden2, k, 1, 1, 0));
  } else {
    if (grid_size % 4 != 0) {
      throw std::invalid_argument("ConvNet: coarse head needs a grid divisible by 4");
    }
    add(std::make_shared<Conv2d>(1, spec.hidden1, 3, 2, 1));
    add(std::make_shared<Relu>());
    add(std::make_shared<Conv2d>(spec.hidden1, spec.hidden2, 3, 2, 1));
    add(std::make_shared<Relu>());
    add(std::make_shared<Conv2d>(spec.hidden2, k, 1, 1, 0));
    add(std::make_shared<BilinearUpsample>(4));
  }
  if (spec.sigmoid_output) add(std::make_shared<Sigmoid>());
  if (next_input_ != output_shape()) {
    throw std::logic_error("ConvNet: architecture does not produce K x G x G");
  }

  std::mt19937_64 rng(seed);
  for (const auto& s : slots_) {
    std::span<double> p = std::span<double>(params_).subspan(s.offset, s.count);
    s.layer->initialize(p, s.input, rng);
  }
}

void ConvNet::add(std::shared_ptr<const Layer> layer) {
  const std::size_t count = layer->parameter_count(next_input_);
  const Shape in = next_input_;
  next_input_ = layer->output_shape(in);
  slots_.push_back({std::move(layer), in, params_.size(), count});
  params_.resize(params_.size() + count, 0.0);
}

void ConvNet::set_parameters(std::span<const double> values) {
  if (values.size() != params_.size()) {
    throw std::invalid_argument("ConvNet::set_parameters: size mismatch");
  }
  std::copy(values.begin(), values.end(), params_.begin());
}

Tensor ConvNet::forward(const Tensor& input) const {
  if (input.shape() != input_shape()) throw std::invalid_argument("ConvNet: input shape mismatch");
  Tensor a = input;
  Tensor b;
  for (const auto& s : slots_) {
    s.layer->forward(a, b, slot_params(s));
    std::swap(a, b);
  }
  return a;
}

ConvNet::Trace ConvNet::forward_trace(const Tensor& input) const {
  if (input.shape() != input_shape()) throw std::invalid_argument("ConvNet: input shape mismatch");
  Trace trace;
  trace.values.reserve(slots_.size() + 1);
  trace.values.push_back(input);
  for (const auto& s : slots_) {
    Tensor out;
    s.layer->forward(trace.values.back(), out, slot_params(s));
    trace.values.push_back(std::move(out));
  }
  return trace;
}

void ConvNet::backward(const Trace& trace, const Tensor& grad_output,
                       std::span<double> grad_params) const {
  if (grad_params.size() != params_.size()) {
    throw std::invalid_argument("ConvNet::backward: gradient buffer size mismatch");
  }
  if (grad_output.shape() != output_shape()) {
    throw std::invalid_argument("ConvNet::backward: output gradient shape mismatch");
  }
  Tensor grad = grad_output;
  Tensor grad_in;
  for (std::size_t i = slots_.size(); i-- > 0;) {
    const Slot& s = slots_[i];
    s.layer->backward(trace.values[i], trace.values[i + 1], grad, grad_in, slot_params(s),
                      grad_params.subspan(s.offset, s.count));
    std::swap(grad, grad_in);
  }
}

std::vector<std::string> ConvNet::layer_names() const {
  std::vector<std::string> names;
  for (const auto& s : slots_) names.push_back(s.layer->name());
  return names;
}

}  // namespace pushsort
