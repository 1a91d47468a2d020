#include "pushsort/layers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace pushsort {

namespace {
inline double lerp(double a, double b, double t) { return a + t * (b - a); }

// Stride-1 convolutions run on a zero-padded copy of the input. Output rows are
// laid out with the padded row pitch, so each kernel tap is one long contiguous
// multiply-add; the extra columns per row are scratch and never read back.
struct PaddedGeometry {
  int ph, pw;      // padded input extent
  int oh, ow;      // output extent
  std::size_t span;  // contiguous length covering every valid output in wide layout
};

PaddedGeometry padded_geometry(const Shape& is, int kernel, int padding) {
  PaddedGeometry g{};
  g.ph = is.height + 2 * padding;
  g.pw = is.width + 2 * padding;
  g.oh = g.ph - kernel + 1;
  g.ow = g.pw - kernel + 1;
  g.span = static_cast<std::size_t>(g.oh - 1) * g.pw + static_cast<std::size_t>(g.ow);
  return g;
}

void pad_input(const Tensor& in, int padding, const PaddedGeometry& g, std::vector<double>& out) {
  const Shape is = in.shape();
  const std::size_t pplane = static_cast<std::size_t>(g.ph) * g.pw;
  out.assign(pplane * static_cast<std::size_t>(is.channels), 0.0);
  for (int c = 0; c < is.channels; ++c) {
    const auto x = in.channel(c);
    double* dst = out.data() + static_cast<std::size_t>(c) * pplane;
    for (int y = 0; y < is.height; ++y) {
      std::copy_n(x.data() + static_cast<std::size_t>(y) * is.width, is.width,
                  dst + static_cast<std::size_t>(y + padding) * g.pw + padding);
    }
  }
}
}  // namespace

// ---------------------------------------------------------------- Conv2d

Conv2d::Conv2d(int in_channels, int out_channels, int kernel, int stride, int padding)
    : in_(in_channels), out_(out_channels), kernel_(kernel), stride_(stride), padding_(padding) {
  if (in_ <= 0 || out_ <= 0 || kernel_ <= 0 || stride_ <= 0 || padding_ < 0) {
    throw std::invalid_argument("Conv2d: invalid geometry");
  }
}

Shape Conv2d::output_shape(const Shape& in) const {
  if (in.channels != in_) throw std::invalid_argument("Conv2d: input channel mismatch");
  const int h = (in.height + 2 * padding_ - kernel_) / stride_ + 1;
  const int w = (in.width + 2 * padding_ - kernel_) / stride_ + 1;
  if (h <= 0 || w <= 0) throw std::invalid_argument("Conv2d: input too small");
  return {out_, h, w};
}

std::size_t Conv2d::weight_count() const {
  return static_cast<std::size_t>(out_) * static_cast<std::size_t>(in_) *
         static_cast<std::size_t>(kernel_ * kernel_);
}

std::size_t Conv2d::parameter_count(const Shape&) const {
  return weight_count() + static_cast<std::size_t>(out_);
}

void Conv2d::initialize(std::span<double> params, const Shape&, std::mt19937_64& rng) const {
  const double fan_in = static_cast<double>(in_ * kernel_ * kernel_);
  const double bound = std::sqrt(6.0 / fan_in);
  std::uniform_real_distribution<double> dist(-bound, bound);
  const std::size_t nw = weight_count();
  for (std::size_t i = 0; i < nw; ++i) params[i] = dist(rng);
  std::fill(params.begin() + static_cast<std::ptrdiff_t>(nw), params.end(), 0.0);
}

std::pair<int, int> Conv2d::valid_range(int k, int in_extent, int out_extent) const {
  // o * stride - padding + k in [0, in_extent)
  int lo = padding_ - k;
  lo = lo <= 0 ? 0 : (lo + stride_ - 1) / stride_;
  int hi_num = in_extent - 1 + padding_ - k;
  int hi = hi_num < 0 ? -1 : hi_num / stride_;
  hi = std::min(hi, out_extent - 1);
  return {lo, hi + 1};
}

void Conv2d::forward(const Tensor& in, Tensor& out, std::span<const double> params) const {
  const Shape is = in.shape();
  const Shape os = output_shape(is);
  if (out.shape() != os) out = Tensor(os);
  const double* w = params.data();
  const double* bias = params.data() + weight_count();
  const double* src = in.values().data();
  double* dst = out.values().data();
  const std::size_t iplane = is.plane();
  const std::size_t oplane = os.plane();

  if (stride_ == 1) {
    const PaddedGeometry g = padded_geometry(is, kernel_, padding_);
    thread_local std::vector<double> xp;
    thread_local std::vector<double> wide;
    pad_input(in, padding_, g, xp);
    const std::size_t pplane = static_cast<std::size_t>(g.ph) * g.pw;
    wide.resize(g.span);
    for (int oc = 0; oc < out_; ++oc) {
      std::fill(wide.begin(), wide.end(), bias[oc]);
      double* acc = wide.data();
      for (int ic = 0; ic < in_; ++ic) {
        const double* x = xp.data() + static_cast<std::size_t>(ic) * pplane;
        const double* wk = w + (static_cast<std::size_t>(oc) * in_ + ic) * kernel_ * kernel_;
        for (int ky = 0; ky < kernel_; ++ky) {
          for (int kx = 0; kx < kernel_; ++kx) {
            const double wv = wk[ky * kernel_ + kx];
            const double* xs = x + static_cast<std::size_t>(ky) * g.pw + kx;
            for (std::size_t j = 0; j < g.span; ++j) acc[j] += wv * xs[j];
          }
        }
      }
      double* o = dst + static_cast<std::size_t>(oc) * oplane;
      for (int oy = 0; oy < g.oh; ++oy) {
        std::copy_n(acc + static_cast<std::size_t>(oy) * g.pw, g.ow,
                    o + static_cast<std::size_t>(oy) * g.ow);
      }
    }
    return;
  }

  for (int oc = 0; oc < out_; ++oc) {
    double* o = dst + static_cast<std::size_t>(oc) * oplane;
    std::fill(o, o + oplane, bias[oc]);
    for (int ic = 0; ic < in_; ++ic) {
      const double* x = src + static_cast<std::size_t>(ic) * iplane;
      for (int ky = 0; ky < kernel_; ++ky) {
        const auto [oy0, oy1] = valid_range(ky, is.height, os.height);
        for (int kx = 0; kx < kernel_; ++kx) {
          const auto [ox0, ox1] = valid_range(kx, is.width, os.width);
          const double wv = w[((static_cast<std::size_t>(oc) * in_ + ic) * kernel_ + ky) * kernel_ + kx];
          for (int oy = oy0; oy < oy1; ++oy) {
            const int iy = oy * stride_ - padding_ + ky;
            double* orow = o + static_cast<std::size_t>(oy) * os.width;
            const double* xrow = x + static_cast<std::size_t>(iy) * is.width;
            if (stride_ == 1) {
              const int shift = kx - padding_;
              for (int ox = ox0; ox < ox1; ++ox) orow[ox] += wv * xrow[ox + shift];
            } else {
              for (int ox = ox0; ox < ox1; ++ox) {
                orow[ox] += wv * xrow[ox * stride_ - padding_ + kx];
              }
            }
          }
        }
      }
    }
  }
}

void Conv2d::backward(const Tensor& in, const Tensor&, const Tensor& grad_out, Tensor& grad_in,
                      std::span<const double> params, std::span<double> grad_params) const {
  const Shape is = in.shape();
  const Shape os = grad_out.shape();
  if (grad_in.shape() != is) grad_in = Tensor(is);
  grad_in.fill(0.0);
  const double* w = params.data();
  double* gw = grad_params.data();
  double* gb = grad_params.data() + weight_count();
  const double* src = in.values().data();
  const double* go = grad_out.values().data();
  double* gi = grad_in.values().data();
  const std::size_t iplane = is.plane();
  const std::size_t oplane = os.plane();

  if (stride_ == 1) {
    const PaddedGeometry pg = padded_geometry(is, kernel_, padding_);
    thread_local std::vector<double> xp;
    thread_local std::vector<double> gxp;
    thread_local std::vector<double> wide;
    pad_input(in, padding_, pg, xp);
    const std::size_t pplane = static_cast<std::size_t>(pg.ph) * pg.pw;
    gxp.assign(pplane * static_cast<std::size_t>(in_), 0.0);
    wide.assign(pg.span, 0.0);
    for (int oc = 0; oc < out_; ++oc) {
      const double* g = go + static_cast<std::size_t>(oc) * oplane;
      double bsum = 0.0;
      for (std::size_t i = 0; i < oplane; ++i) bsum += g[i];
      gb[oc] += bsum;
      for (int oy = 0; oy < pg.oh; ++oy) {
        std::copy_n(g + static_cast<std::size_t>(oy) * pg.ow, pg.ow,
                    wide.data() + static_cast<std::size_t>(oy) * pg.pw);
      }
      const double* gw_wide = wide.data();
      for (int ic = 0; ic < in_; ++ic) {
        const double* x = xp.data() + static_cast<std::size_t>(ic) * pplane;
        double* gx = gxp.data() + static_cast<std::size_t>(ic) * pplane;
        const std::size_t wbase = (static_cast<std::size_t>(oc) * in_ + ic) * kernel_ * kernel_;
        for (int ky = 0; ky < kernel_; ++ky) {
          for (int kx = 0; kx < kernel_; ++kx) {
            const std::size_t off = static_cast<std::size_t>(ky) * pg.pw + kx;
            const double wv = w[wbase + ky * kernel_ + kx];
            const double* xs = x + off;
            double* gxs = gx + off;
            double wsum = 0.0;
            for (std::size_t j = 0; j < pg.span; ++j) {
              wsum += gw_wide[j] * xs[j];
              gxs[j] += wv * gw_wide[j];
            }
            gw[wbase + ky * kernel_ + kx] += wsum;
          }
        }
      }
    }
    for (int ic = 0; ic < in_; ++ic) {
      const double* src_p = gxp.data() + static_cast<std::size_t>(ic) * pplane;
      double* dst_p = gi + static_cast<std::size_t>(ic) * iplane;
      for (int y = 0; y < is.height; ++y) {
        std::copy_n(src_p + static_cast<std::size_t>(y + padding_) * pg.pw + padding_, is.width,
                    dst_p + static_cast<std::size_t>(y) * is.width);
      }
    }
    return;
  }

  for (int oc = 0; oc < out_; ++oc) {
    const double* g = go + static_cast<std::size_t>(oc) * oplane;
    double bsum = 0.0;
    for (std::size_t i = 0; i < oplane; ++i) bsum += g[i];
    gb[oc] += bsum;
    for (int ic = 0; ic < in_; ++ic) {
      const double* x = src + static_cast<std::size_t>(ic) * iplane;
      double* gx = gi + static_cast<std::size_t>(ic) * iplane;
      for (int ky = 0; ky < kernel_; ++ky) {
        const auto [oy0, oy1] = valid_range(ky, is.height, os.height);
        for (int kx = 0; kx < kernel_; ++kx) {
          const auto [ox0, ox1] = valid_range(kx, is.width, os.width);
          const std::size_t widx =
              ((static_cast<std::size_t>(oc) * in_ + ic) * kernel_ + ky) * kernel_ + kx;
          const double wv = w[widx];
          double wsum = 0.0;
          for (int oy = oy0; oy < oy1; ++oy) {
            const int iy = oy * stride_ - padding_ + ky;
            const double* grow = g + static_cast<std::size_t>(oy) * os.width;
            const double* xrow = x + static_cast<std::size_t>(iy) * is.width;
            double* gxrow = gx + static_cast<std::size_t>(iy) * is.width;
            for (int ox = ox0; ox < ox1; ++ox) {
              const int ix = ox * stride_ - padding_ + kx;
              wsum += grow[ox] * xrow[ix];
              gxrow[ix] += wv * grow[ox];
            }
          }
          gw[widx] += wsum;
        }
      }
    }
  }
}

// ---------------------------------------------------------------- InstanceNorm

InstanceNorm::InstanceNorm(int channels, double epsilon) : channels_(channels), epsilon_(epsilon) {
  if (channels <= 0) throw std::invalid_argument("InstanceNorm: channels must be positive");
}

std::size_t InstanceNorm::parameter_count(const Shape&) const {
  return 2 * static_cast<std::size_t>(channels_);
}

void InstanceNorm::initialize(std::span<double> params, const Shape&, std::mt19937_64&) const {
  auto c = static_cast<std::size_t>(channels_);
  std::fill(params.begin(), params.begin() + static_cast<std::ptrdiff_t>(c), 1.0);
  std::fill(params.begin() + static_cast<std::ptrdiff_t>(c), params.end(), 0.0);
}

void InstanceNorm::forward(const Tensor& in, Tensor& out, std::span<const double> params) const {
  const Shape s = in.shape();
  if (s.channels != channels_) throw std::invalid_argument("InstanceNorm: channel mismatch");
  if (s.plane() < 2) throw std::invalid_argument("InstanceNorm: channel needs >= 2 elements");
  if (out.shape() != s) out = Tensor(s);
  const double n = static_cast<double>(s.plane());
  for (int c = 0; c < channels_; ++c) {
    const auto x = in.channel(c);
    auto y = out.channel(c);
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    var /= n;
    const double inv_std = 1.0 / std::sqrt(var + epsilon_);
    const double gamma = params[static_cast<std::size_t>(c)];
    const double beta = params[static_cast<std::size_t>(channels_ + c)];
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = gamma * (x[i] - mean) * inv_std + beta;
  }
}

void InstanceNorm::backward(const Tensor& in, const Tensor&, const Tensor& grad_out,
                            Tensor& grad_in, std::span<const double> params,
                            std::span<double> grad_params) const {
  const Shape s = in.shape();
  if (grad_in.shape() != s) grad_in = Tensor(s);
  const double n = static_cast<double>(s.plane());
  for (int c = 0; c < channels_; ++c) {
    const auto x = in.channel(c);
    const auto dy = grad_out.channel(c);
    auto dx = grad_in.channel(c);
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    var /= n;
    const double inv_std = 1.0 / std::sqrt(var + epsilon_);
    const double gamma = params[static_cast<std::size_t>(c)];

    double sum_dy = 0.0;
    double sum_dy_xhat = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double xhat = (x[i] - mean) * inv_std;
      sum_dy += dy[i];
      sum_dy_xhat += dy[i] * xhat;
    }
    grad_params[static_cast<std::size_t>(c)] += sum_dy_xhat;
    grad_params[static_cast<std::size_t>(channels_ + c)] += sum_dy;
    // dxhat = gamma * dy
    const double k = gamma * inv_std / n;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double xhat = (x[i] - mean) * inv_std;
      dx[i] = k * (n * dy[i] - sum_dy - xhat * sum_dy_xhat);
    }
  }
}

// ---------------------------------------------------------------- activations

void Relu::forward(const Tensor& in, Tensor& out, std::span<const double>) const {
  if (out.shape() != in.shape()) out = Tensor(in.shape());
  const auto x = in.values();
  auto y = out.values();
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void Relu::backward(const Tensor& in, const Tensor&, const Tensor& grad_out, Tensor& grad_in,
                    std::span<const double>, std::span<double>) const {
  if (grad_in.shape() != in.shape()) grad_in = Tensor(in.shape());
  const auto x = in.values();
  const auto g = grad_out.values();
  auto d = grad_in.values();
  for (std::size_t i = 0; i < x.size(); ++i) d[i] = x[i] > 0.0 ? g[i] : 0.0;
}

void Sigmoid::forward(const Tensor& in, Tensor& out, std::span<const double>) const {
  if (out.shape() != in.shape()) out = Tensor(in.shape());
  const auto x = in.values();
  auto y = out.values();
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = 1.0 / (1.0 + std::exp(-x[i]));
}

void Sigmoid::backward(const Tensor& in, const Tensor& out, const Tensor& grad_out,
                       Tensor& grad_in, std::span<const double>, std::span<double>) const {
  if (grad_in.shape() != in.shape()) grad_in = Tensor(in.shape());
  const auto y = out.values();
  const auto g = grad_out.values();
  auto d = grad_in.values();
  for (std::size_t i = 0; i < y.size(); ++i) d[i] = g[i] * y[i] * (1.0 - y[i]);
}

// ---------------------------------------------------------------- BilinearUpsample

BilinearUpsample::BilinearUpsample(int factor) : factor_(factor) {
  if (factor <= 0) throw std::invalid_argument("BilinearUpsample: factor must be positive");
}

Shape BilinearUpsample::output_shape(const Shape& in) const {
  return {in.channels, in.height * factor_, in.width * factor_};
}

BilinearUpsample::Tap BilinearUpsample::tap(int out_index, int in_extent) const {
  const int i0 = out_index / factor_;
  if (i0 >= in_extent - 1) return {in_extent - 1, in_extent - 1, 0.0};
  const double frac = static_cast<double>(out_index - i0 * factor_) / factor_;
  return {i0, i0 + 1, frac};
}

void BilinearUpsample::forward(const Tensor& in, Tensor& out, std::span<const double>) const {
  const Shape is = in.shape();
  const Shape os = output_shape(is);
  if (out.shape() != os) out = Tensor(os);
  for (int c = 0; c < is.channels; ++c) {
    for (int oy = 0; oy < os.height; ++oy) {
      const Tap ty = tap(oy, is.height);
      for (int ox = 0; ox < os.width; ++ox) {
        const Tap tx = tap(ox, is.width);
        const double top = lerp(in.at(c, ty.i0, tx.i0), in.at(c, ty.i0, tx.i1), tx.frac);
        const double bottom = lerp(in.at(c, ty.i1, tx.i0), in.at(c, ty.i1, tx.i1), tx.frac);
        out.at(c, oy, ox) = lerp(top, bottom, ty.frac);
      }
    }
  }
}

void BilinearUpsample::backward(const Tensor& in, const Tensor&, const Tensor& grad_out,
                                Tensor& grad_in, std::span<const double>,
                                std::span<double>) const {
  const Shape is = in.shape();
  const Shape os = grad_out.shape();
  if (grad_in.shape() != is) grad_in = Tensor(is);
  grad_in.fill(0.0);
  for (int c = 0; c < is.channels; ++c) {
    for (int oy = 0; oy < os.height; ++oy) {
      const Tap ty = tap(oy, is.height);
      for (int ox = 0; ox < os.width; ++ox) {
        const Tap tx = tap(ox, is.width);
        const double g = grad_out.at(c, oy, ox);
        const double gt = g * (1.0 - ty.frac);
        const double gb = g * ty.frac;
        grad_in.at(c, ty.i0, tx.i0) += gt * (1.0 - tx.frac);
        grad_in.at(c, ty.i0, tx.i1) += gt * tx.frac;
        grad_in.at(c, ty.i1, tx.i0) += gb * (1.0 - tx.frac);
        grad_in.at(c, ty.i1, tx.i1) += gb * tx.frac;
      }
    }
  }
}

Tensor bilinear_upsample(const Tensor& input, int factor) {
  BilinearUpsample layer(factor);
  Tensor out;
  layer.forward(input, out, {});
  return out;
}

Tensor bilinear_upsample_to(const Tensor& input, int output_extent) {
  const Shape s = input.shape();
  if (s.height != s.width || s.height <= 0 || output_extent % s.height != 0) {
    throw std::invalid_argument("bilinear_upsample_to: factor does not divide the output size");
  }
  return bilinear_upsample(input, output_extent / s.height);
}

}  // namespace pushsort
