#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "semnav/common.hpp"

// A small encoder/decoder convolutional network ("U" shape) that maps a
// one-hot encoded egocentric class map to a per-cell occupancy probability.
// Everything is implemented directly on flat channel-major buffers so that
// forward and backward passes are deterministic: all reductions run in a
// fixed serial order. The scalar type is a template parameter — float for
// training and inference, double for finite-difference gradient checks.

namespace semnav {

// Architecture description. Stage i of the encoder produces
// stage_channels[i] feature planes; a 2x2 max-pool (floor division) sits
// between consecutive stages. The decoder mirrors the encoder with nearest
// upsampling and skip concatenation, and a 1x1 convolution head with a
// sigmoid produces the probability map.
struct UnetPlan {
  int input_size = 60;
  int in_channels = kClassCount;
  std::vector<int> stage_channels = {32, 64, 128, 256, 256};

  int stages() const { return static_cast<int>(stage_channels.size()); }

  // Spatial side length of each stage's feature planes.
  std::vector<int> stage_sizes() const {
    std::vector<int> s;
    s.reserve(stage_channels.size());
    int cur = input_size;
    for (int i = 0; i < stages(); ++i) {
      s.push_back(cur);
      cur /= 2;
    }
    return s;
  }

  friend bool operator==(const UnetPlan&, const UnetPlan&) = default;
};

inline UnetPlan plan_for_input(int size) {
  UnetPlan p;
  p.input_size = size;
  return p;
}

inline void validate_plan(const UnetPlan& p) {
  if (p.input_size < 2) throw DomainError("network input size must be >= 2");
  if (p.in_channels < 1) throw DomainError("network needs >= 1 input channel");
  if (p.stages() < 2) throw DomainError("network needs >= 2 stages");
  for (int c : p.stage_channels)
    if (c < 1) throw DomainError("stage channel counts must be positive");
  auto sizes = p.stage_sizes();
  // Every stage except the last is followed by a pool, which needs size >= 2.
  for (int i = 0; i + 1 < p.stages(); ++i)
    if (sizes[i] < 2)
      throw DomainError("network input too small: stage " +
                        std::to_string(i + 1) + " would have side " +
                        std::to_string(sizes[i]));
  if (sizes.back() < 1) throw DomainError("network input too small");
}

namespace detail {

// One convolution layer of the canonical layout (k is 3 or 1).
struct ConvDesc {
  std::string name;
  int in_c = 0;
  int out_c = 0;
  int k = 3;
};

// The fixed layer order: encoder stages top-down, decoder stages bottom-up
// (named after the skip stage they restore), then the 1x1 head.
inline std::vector<ConvDesc> conv_layout(const UnetPlan& p) {
  std::vector<ConvDesc> layers;
  int prev = p.in_channels;
  for (int s = 0; s < p.stages(); ++s) {
    const std::string base = "enc" + std::to_string(s + 1);
    const int c = p.stage_channels[s];
    layers.push_back({base + ".conv1", prev, c, 3});
    layers.push_back({base + ".conv2", c, c, 3});
    prev = c;
  }
  for (int s = p.stages() - 2; s >= 0; --s) {
    const std::string base = "dec" + std::to_string(s + 1);
    const int skip = p.stage_channels[s];
    layers.push_back({base + ".conv1", prev + skip, skip, 3});
    layers.push_back({base + ".conv2", skip, skip, 3});
    prev = skip;
  }
  layers.push_back({"head", prev, 1, 1});
  return layers;
}

}  // namespace detail

template <class T>
struct NamedTensor {
  std::string name;
  std::vector<int> shape;
  std::vector<T> v;

  std::size_t size() const { return v.size(); }
};

// All parameters of one network, in the canonical layout order
// (per conv layer: <name>.weight with shape [out, in, k, k], then
// <name>.bias with shape [out]).
template <class T>
struct NetWeights {
  UnetPlan plan;
  std::vector<NamedTensor<T>> tensors;

  NamedTensor<T>& tensor(std::string_view name) {
    for (auto& t : tensors)
      if (t.name == name) return t;
    throw DomainError("no tensor named '" + std::string(name) + "'");
  }
  const NamedTensor<T>& tensor(std::string_view name) const {
    return const_cast<NetWeights*>(this)->tensor(name);
  }
};

// Zero-initialized weights in canonical order.
template <class T>
NetWeights<T> make_weights(const UnetPlan& plan) {
  validate_plan(plan);
  NetWeights<T> w;
  w.plan = plan;
  for (const auto& d : detail::conv_layout(plan)) {
    NamedTensor<T> wt;
    wt.name = d.name + ".weight";
    wt.shape = {d.out_c, d.in_c, d.k, d.k};
    wt.v.assign(static_cast<std::size_t>(d.out_c) * d.in_c * d.k * d.k, T(0));
    w.tensors.push_back(std::move(wt));
    NamedTensor<T> bt;
    bt.name = d.name + ".bias";
    bt.shape = {d.out_c};
    bt.v.assign(static_cast<std::size_t>(d.out_c), T(0));
    w.tensors.push_back(std::move(bt));
  }
  return w;
}

template <class T>
std::size_t parameter_count(const NetWeights<T>& w) {
  std::size_t n = 0;
  for (const auto& t : w.tensors) n += t.size();
  return n;
}

// He-uniform initialization: weights ~ U(-limit, limit) with
// limit = sqrt(6 / fan_in), biases zero. Deterministic for a given seed.
template <class T>
NetWeights<T> init_weights(const UnetPlan& plan, std::uint64_t seed) {
  NetWeights<T> w = make_weights<T>(plan);
  Rng rng(mix_seed(seed, 0));
  for (auto& t : w.tensors) {
    if (t.shape.size() < 2) continue;  // bias: stays zero, consumes no draws
    std::size_t fan_in = 1;
    for (std::size_t i = 1; i < t.shape.size(); ++i)
      fan_in *= static_cast<std::size_t>(t.shape[i]);
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (auto& x : t.v) x = static_cast<T>(rng.uniform(-limit, limit));
  }
  return w;
}

template <class T>
void zero_values(NetWeights<T>& w) {
  for (auto& t : w.tensors) std::fill(t.v.begin(), t.v.end(), T(0));
}

// ---------------------------------------------------------------------------
// Layer kernels. Feature maps are flat [channel][row][col] buffers. 3x3
// convolutions read from a zero-padded copy of their input so the inner
// loops are branch-free three-tap row operations.
// ---------------------------------------------------------------------------

namespace detail {

template <class T>
void pad_channels(const T* x, int c, int h, int w, T* out) {
  const int pw = w + 2;
  for (int ci = 0; ci < c; ++ci) {
    T* dst = out + static_cast<std::size_t>(ci) * (h + 2) * pw;
    const T* src = x + static_cast<std::size_t>(ci) * h * w;
    std::fill(dst, dst + pw, T(0));
    for (int y = 0; y < h; ++y) {
      T* row = dst + static_cast<std::size_t>(y + 1) * pw;
      row[0] = T(0);
      std::copy(src + static_cast<std::size_t>(y) * w,
                src + static_cast<std::size_t>(y + 1) * w, row + 1);
      row[w + 1] = T(0);
    }
    std::fill(dst + static_cast<std::size_t>(h + 1) * pw,
              dst + static_cast<std::size_t>(h + 2) * pw, T(0));
  }
}

// Reorders conv weights [out][in][ky][kx] into [in][out][2-ky][2-kx]: the
// kernel of the adjoint convolution that maps output gradients back to
// input gradients.
template <class T>
void rotate_conv_weights(const T* wt, int cout, int cin, T* out) {
  for (int co = 0; co < cout; ++co) {
    for (int ci = 0; ci < cin; ++ci) {
      const T* src = wt + (static_cast<std::size_t>(co) * cin + ci) * 9;
      T* dst = out + (static_cast<std::size_t>(ci) * cout + co) * 9;
      for (int t = 0; t < 9; ++t) dst[t] = src[8 - t];
    }
  }
}

// Gathers the padded input into a patch matrix: row n (one output position)
// holds the 3x3 window of every input channel, so each weight-gradient
// update is one long contiguous multiply-add over cin * 9 values.
template <class T>
void build_patches(const T* pin, int cin, int h, int w, T* patches) {
  const int pw = w + 2;
  const std::size_t stride = static_cast<std::size_t>(cin) * 9;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      T* row = patches + (static_cast<std::size_t>(y) * w + x) * stride;
      for (int ci = 0; ci < cin; ++ci) {
        const T* ip = pin + static_cast<std::size_t>(ci) * (h + 2) * pw;
        T* cell = row + static_cast<std::size_t>(ci) * 9;
        for (int ky = 0; ky < 3; ++ky) {
          const T* src = ip + static_cast<std::size_t>(y + ky) * pw + x;
          cell[ky * 3 + 0] = src[0];
          cell[ky * 3 + 1] = src[1];
          cell[ky * 3 + 2] = src[2];
        }
      }
    }
  }
}

// out[co] = bias[co] + sum_ci pin[ci] * w[co][ci]  (3x3, stride 1, pad 1).
// pin is the padded input, cin x (h+2) x (w+2).
template <class T>
void conv3_forward(const T* pin, int cin, int h, int w, const T* wt,
                   const T* bias, T* out, int cout) {
  const int pw = w + 2;
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  const std::size_t pplane = static_cast<std::size_t>(h + 2) * pw;
  for (int co = 0; co < cout; ++co) {
    T* op = out + co * plane;
    std::fill(op, op + plane, bias[co]);
    const T* wco = wt + static_cast<std::size_t>(co) * cin * 9;
    for (int ci = 0; ci < cin; ++ci) {
      const T* ip = pin + ci * pplane;
      const T* k = wco + ci * 9;
      for (int y = 0; y < h; ++y) {
        T* orow = op + static_cast<std::size_t>(y) * w;
        for (int ky = 0; ky < 3; ++ky) {
          const T* ir = ip + static_cast<std::size_t>(y + ky) * pw;
          const T k0 = k[ky * 3 + 0], k1 = k[ky * 3 + 1], k2 = k[ky * 3 + 2];
          for (int x = 0; x < w; ++x)
            orow[x] += k0 * ir[x] + k1 * ir[x + 1] + k2 * ir[x + 2];
        }
      }
    }
  }
}

// Reusable buffers for conv3_backward; grows to fit the largest layer it
// serves. One instance per engine keeps the hot path allocation-free.
template <class T>
struct Conv3Scratch {
  std::vector<T> pdout;    // padded output gradient
  std::vector<T> wrot;     // adjoint kernel
  std::vector<T> patches;  // patch matrix of the padded input
  std::vector<T> acc;      // per-block weight-gradient accumulators
  std::vector<T> zbias;    // zero bias for the adjoint conv

  void ensure(int cin, int cout, int h, int w) {
    const auto grow = [](std::vector<T>& v, std::size_t n) {
      if (v.size() < n) v.resize(n);
    };
    grow(pdout, static_cast<std::size_t>(cout) * (h + 2) * (w + 2));
    grow(wrot, static_cast<std::size_t>(cout) * cin * 9);
    grow(patches, static_cast<std::size_t>(cin) * 9 * h * w);
    grow(acc, static_cast<std::size_t>(4) * cin * 9);
    grow(zbias, static_cast<std::size_t>(std::max(cin, cout)));
    std::fill(zbias.begin(), zbias.end(), T(0));
  }
};

// Full backward step of a 3x3 convolution. Accumulates dw/db (+=), writes
// the gradient w.r.t. the (unpadded) input into dx.
//   - input gradient: adjoint convolution, i.e. conv3_forward of the padded
//     output gradient with rotated/transposed kernels;
//   - weight gradient: per block of four output channels, each output
//     position contributes one scaled patch row (contiguous over cin * 9),
//     in a fixed serial order.
template <class T>
void conv3_backward(const T* pin, int cin, const T* dout, int cout, int h,
                    int w, const T* wt, T* dw, T* db, T* dx,
                    Conv3Scratch<T>& s) {
  s.ensure(cin, cout, h, w);
  rotate_conv_weights(wt, cout, cin, s.wrot.data());
  pad_channels(dout, cout, h, w, s.pdout.data());
  conv3_forward(s.pdout.data(), cout, h, w, s.wrot.data(), s.zbias.data(), dx,
                cin);

  build_patches(pin, cin, h, w, s.patches.data());
  const std::size_t kdim = static_cast<std::size_t>(cin) * 9;
  const std::size_t n = static_cast<std::size_t>(h) * w;
  for (int co0 = 0; co0 < cout; co0 += 4) {
    const int nb = std::min(4, cout - co0);
    std::fill(s.acc.begin(), s.acc.begin() + nb * kdim, T(0));
    for (std::size_t i = 0; i < n; ++i) {
      const T* prow = s.patches.data() + i * kdim;
      for (int b = 0; b < nb; ++b) {
        const T d = dout[(static_cast<std::size_t>(co0) + b) * n + i];
        T* arow = s.acc.data() + b * kdim;
        for (std::size_t k = 0; k < kdim; ++k) arow[k] += d * prow[k];
      }
    }
    for (int b = 0; b < nb; ++b) {
      const T* dop = dout + (static_cast<std::size_t>(co0) + b) * n;
      T bsum = T(0);
      for (std::size_t i = 0; i < n; ++i) bsum += dop[i];
      db[co0 + b] += bsum;
      T* dwrow = dw + (static_cast<std::size_t>(co0) + b) * kdim;
      const T* arow = s.acc.data() + b * kdim;
      for (std::size_t k = 0; k < kdim; ++k) dwrow[k] += arow[k];
    }
  }
}

template <class T>
void relu_forward(T* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] = x[i] > T(0) ? x[i] : T(0);
}

// Masks the incoming gradient by the sign of the layer's (post-)activation.
template <class T>
void relu_backward(T* grad, const T* act, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    grad[i] = act[i] > T(0) ? grad[i] : T(0);
}

// 2x2 max pool, stride 2, floor sizes; records the winning flat index per
// output cell. Ties go to the first candidate in scan order.
template <class T>
void maxpool_forward(const T* x, int c, int h, int w, T* out,
                     std::int32_t* arg) {
  const int oh = h / 2, ow = w / 2;
  for (int ci = 0; ci < c; ++ci) {
    const T* ip = x + static_cast<std::size_t>(ci) * h * w;
    T* op = out + static_cast<std::size_t>(ci) * oh * ow;
    std::int32_t* ap = arg + static_cast<std::size_t>(ci) * oh * ow;
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        const int y0 = 2 * oy, x0 = 2 * ox;
        std::int32_t best = y0 * w + x0;
        T bv = ip[best];
        const std::int32_t cand[3] = {y0 * w + x0 + 1, (y0 + 1) * w + x0,
                                      (y0 + 1) * w + x0 + 1};
        for (std::int32_t idx : cand) {
          if (ip[idx] > bv) {
            bv = ip[idx];
            best = idx;
          }
        }
        op[oy * ow + ox] = bv;
        ap[oy * ow + ox] = best;
      }
    }
  }
}

// Scatters pooled gradients back to the recorded argmax positions
// (accumulates into dx, which must cover c x h x w).
template <class T>
void maxpool_backward(const T* dout, const std::int32_t* arg, int c, int oh,
                      int ow, int h, int w, T* dx) {
  for (int ci = 0; ci < c; ++ci) {
    const T* dop = dout + static_cast<std::size_t>(ci) * oh * ow;
    const std::int32_t* ap = arg + static_cast<std::size_t>(ci) * oh * ow;
    T* dp = dx + static_cast<std::size_t>(ci) * h * w;
    for (int i = 0; i < oh * ow; ++i) dp[ap[i]] += dop[i];
  }
}

// Nearest-neighbour resize from sh x sw up to th x tw: source index is
// floor(dst * src_size / dst_size).
template <class T>
void upsample_forward(const T* x, int c, int sh, int sw, T* out, int th,
                      int tw) {
  for (int ci = 0; ci < c; ++ci) {
    const T* ip = x + static_cast<std::size_t>(ci) * sh * sw;
    T* op = out + static_cast<std::size_t>(ci) * th * tw;
    for (int ty = 0; ty < th; ++ty) {
      const T* ir = ip + static_cast<std::size_t>(ty * sh / th) * sw;
      T* orow = op + static_cast<std::size_t>(ty) * tw;
      for (int tx = 0; tx < tw; ++tx) orow[tx] = ir[tx * sw / tw];
    }
  }
}

template <class T>
void upsample_backward(const T* dout, int c, int th, int tw, T* dx, int sh,
                       int sw) {
  for (int ci = 0; ci < c; ++ci) {
    const T* dop = dout + static_cast<std::size_t>(ci) * th * tw;
    T* dp = dx + static_cast<std::size_t>(ci) * sh * sw;
    for (int ty = 0; ty < th; ++ty) {
      T* dr = dp + static_cast<std::size_t>(ty * sh / th) * sw;
      const T* drow = dop + static_cast<std::size_t>(ty) * tw;
      for (int tx = 0; tx < tw; ++tx) dr[tx * sw / tw] += drow[tx];
    }
  }
}

// 1x1 convolution: out[co] = bias[co] + sum_ci wt[co][ci] * x[ci], applied
// elementwise over n spatial positions.
template <class T>
void conv1_forward(const T* x, int cin, std::size_t n, const T* wt,
                   const T* bias, T* out, int cout) {
  for (int co = 0; co < cout; ++co) {
    T* op = out + co * n;
    std::fill(op, op + n, bias[co]);
    for (int ci = 0; ci < cin; ++ci) {
      const T kk = wt[static_cast<std::size_t>(co) * cin + ci];
      const T* ip = x + ci * n;
      for (std::size_t i = 0; i < n; ++i) op[i] += kk * ip[i];
    }
  }
}

template <class T>
void conv1_backward(const T* x, int cin, std::size_t n, const T* wt,
                    const T* dout, int cout, T* dw, T* db, T* dx) {
  std::fill(dx, dx + static_cast<std::size_t>(cin) * n, T(0));
  for (int co = 0; co < cout; ++co) {
    const T* dop = dout + co * n;
    T bsum = T(0);
    for (std::size_t i = 0; i < n; ++i) bsum += dop[i];
    db[co] += bsum;
    for (int ci = 0; ci < cin; ++ci) {
      const T* ip = x + ci * n;
      T* dp = dx + ci * n;
      const T kk = wt[static_cast<std::size_t>(co) * cin + ci];
      T acc = T(0);
      for (std::size_t i = 0; i < n; ++i) {
        acc += dop[i] * ip[i];
        dp[i] += kk * dop[i];
      }
      dw[static_cast<std::size_t>(co) * cin + ci] += acc;
    }
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Loss. Binary cross-entropy with a per-sample class-balance weight: pixels
// whose target is "occupied" are weighted by clamp(#free / #occupied, 1,
// alpha_cap); free pixels always weigh 1, and a sample with no occupied
// pixels is unweighted. Probabilities are clamped to [eps, 1 - eps] before
// the logs.
// ---------------------------------------------------------------------------

inline constexpr double kLossEps = 1e-7;

inline double occupied_pixel_weight(const std::uint8_t* target, std::size_t n,
                                    double alpha_cap) {
  std::size_t occ = 0;
  for (std::size_t i = 0; i < n; ++i) occ += target[i] != 0;
  if (occ == 0) return 1.0;
  const double ratio = static_cast<double>(n - occ) / static_cast<double>(occ);
  return std::clamp(ratio, 1.0, alpha_cap);
}

// Sum over pixels of the weighted BCE (the caller divides by the pixel
// count). Accumulated in double regardless of T.
template <class T>
double weighted_bce_sum(const T* probs, const std::uint8_t* target,
                        std::size_t n, double occupied_weight) {
  const T lo = static_cast<T>(kLossEps);
  const T hi = T(1) - lo;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const T p = std::clamp(probs[i], lo, hi);
    if (target[i]) {
      sum += occupied_weight * -std::log(static_cast<double>(p));
    } else {
      sum += -std::log(1.0 - static_cast<double>(p));
    }
  }
  return sum;
}

// ---------------------------------------------------------------------------
// The network engine. Owns all activation and scratch buffers for one plan;
// forward() fills them, backward() consumes them. Reuse one engine across
// samples — buffers are allocated once.
// ---------------------------------------------------------------------------

template <class T>
class Unet {
 public:
  explicit Unet(UnetPlan plan) : plan_(std::move(plan)) {
    validate_plan(plan_);
    layout_ = detail::conv_layout(plan_);
    sizes_ = plan_.stage_sizes();
    const int ns = plan_.stages();
    enc_.resize(ns);
    for (int s = 0; s < ns; ++s) {
      const int sz = sizes_[s];
      const int c = plan_.stage_channels[s];
      const int cin = s == 0 ? plan_.in_channels : plan_.stage_channels[s - 1];
      auto& e = enc_[s];
      e.pin1.resize(padded_len(cin, sz));
      e.a1.resize(plane_len(c, sz));
      e.pin2.resize(padded_len(c, sz));
      e.a2.resize(plane_len(c, sz));
      e.da1.resize(e.a1.size());
      e.da2.resize(e.a2.size());
      if (s + 1 < ns) {
        const int psz = sizes_[s + 1];
        e.pooled.resize(plane_len(c, psz));
        e.arg.resize(e.pooled.size());
        e.dpooled.resize(e.pooled.size());
      }
    }
    dec_.resize(ns - 1);
    for (int s = 0; s < ns - 1; ++s) {
      const int sz = sizes_[s];
      const int skip = plan_.stage_channels[s];
      const int src = plan_.stage_channels[s + 1];
      auto& d = dec_[s];
      d.up.resize(plane_len(src, sz));
      d.cat.resize(plane_len(src + skip, sz));
      d.pcat.resize(padded_len(src + skip, sz));
      d.d1.resize(plane_len(skip, sz));
      d.pd1.resize(padded_len(skip, sz));
      d.d2.resize(plane_len(skip, sz));
      d.dcat.resize(d.cat.size());
      d.dd1.resize(d.d1.size());
      d.dd2.resize(d.d2.size());
    }
    const std::size_t head_n = plane_len(1, sizes_[0]);
    logits_.resize(head_n);
    probs_.resize(head_n);
    dz_.resize(head_n);
    dinput_.resize(plane_len(plan_.in_channels, sizes_[0]));
  }

  const UnetPlan& plan() const { return plan_; }

  // (channels, height, width) of each encoder stage's output.
  static std::vector<std::array<int, 3>> pyramid_shapes(const UnetPlan& p) {
    auto sizes = p.stage_sizes();
    std::vector<std::array<int, 3>> out;
    for (int s = 0; s < p.stages(); ++s)
      out.push_back({p.stage_channels[s], sizes[s], sizes[s]});
    return out;
  }

  // Runs the full forward pass; returns the probability map (input_size^2
  // values). The input is a one-hot class encoding, in_channels planes.
  const std::vector<T>& forward(const NetWeights<T>& w,
                                const std::vector<T>& input) {
    if (w.plan != plan_) throw DomainError("weights built for another plan");
    if (w.tensors.size() != layout_.size() * 2)
      throw DomainError("weight tensor list does not match the layout");
    if (input.size() != dinput_.size())
      throw DomainError("input buffer has wrong size: expected " +
                        std::to_string(dinput_.size()) + ", got " +
                        std::to_string(input.size()));
    const int ns = plan_.stages();
    detail::pad_channels(input.data(), plan_.in_channels, sizes_[0], sizes_[0],
                         enc_[0].pin1.data());
    for (int s = 0; s < ns; ++s) {
      auto& e = enc_[s];
      const int sz = sizes_[s];
      const int c = plan_.stage_channels[s];
      const int cin = s == 0 ? plan_.in_channels : plan_.stage_channels[s - 1];
      const int li = 2 * s;
      detail::conv3_forward(e.pin1.data(), cin, sz, sz, wt(w, li), bs(w, li),
                            e.a1.data(), c);
      detail::relu_forward(e.a1.data(), e.a1.size());
      detail::pad_channels(e.a1.data(), c, sz, sz, e.pin2.data());
      detail::conv3_forward(e.pin2.data(), c, sz, sz, wt(w, li + 1),
                            bs(w, li + 1), e.a2.data(), c);
      detail::relu_forward(e.a2.data(), e.a2.size());
      if (s + 1 < ns) {
        const int psz = sizes_[s + 1];
        detail::maxpool_forward(e.a2.data(), c, sz, sz, e.pooled.data(),
                                e.arg.data());
        detail::pad_channels(e.pooled.data(), c, psz, psz,
                             enc_[s + 1].pin1.data());
      }
    }
    for (int s = ns - 2; s >= 0; --s) {
      auto& d = dec_[s];
      const int sz = sizes_[s];
      const int skip = plan_.stage_channels[s];
      const int src_c = plan_.stage_channels[s + 1];
      const T* src = s == ns - 2 ? enc_[ns - 1].a2.data() : dec_[s + 1].d2.data();
      detail::upsample_forward(src, src_c, sizes_[s + 1], sizes_[s + 1],
                               d.up.data(), sz, sz);
      std::copy(d.up.begin(), d.up.end(), d.cat.begin());
      std::copy(enc_[s].a2.begin(), enc_[s].a2.end(),
                d.cat.begin() + static_cast<std::ptrdiff_t>(d.up.size()));
      const int li = dec_conv_index(s);
      detail::pad_channels(d.cat.data(), src_c + skip, sz, sz, d.pcat.data());
      detail::conv3_forward(d.pcat.data(), src_c + skip, sz, sz, wt(w, li),
                            bs(w, li), d.d1.data(), skip);
      detail::relu_forward(d.d1.data(), d.d1.size());
      detail::pad_channels(d.d1.data(), skip, sz, sz, d.pd1.data());
      detail::conv3_forward(d.pd1.data(), skip, sz, sz, wt(w, li + 1),
                            bs(w, li + 1), d.d2.data(), skip);
      detail::relu_forward(d.d2.data(), d.d2.size());
    }
    const int hi = head_index();
    detail::conv1_forward(dec_[0].d2.data(), plan_.stage_channels[0],
                          logits_.size(), wt(w, hi), bs(w, hi), logits_.data(),
                          1);
    for (std::size_t i = 0; i < logits_.size(); ++i)
      probs_[i] = T(1) / (T(1) + std::exp(-logits_[i]));
    return probs_;
  }

  const std::vector<T>& probabilities() const { return probs_; }
  const std::vector<T>& logits() const { return logits_; }

  // Output of encoder stage s (0-based) from the last forward pass.
  const std::vector<T>& stage_output(int s) const { return enc_.at(s).a2; }

  // Gradient of the mean weighted BCE w.r.t. all parameters, accumulated
  // into `grads` (+=). `inv_count` is 1 / (batch size * pixels per map);
  // returns this sample's summed weighted BCE (unnormalized). Must follow a
  // forward() with the same weights.
  double backward(const NetWeights<T>& w, const std::uint8_t* target,
                  double occupied_weight, T inv_count, NetWeights<T>& grads) {
    const int ns = plan_.stages();
    const T lo = static_cast<T>(kLossEps);
    const T hi_p = T(1) - lo;
    double loss_sum = 0.0;
    for (std::size_t i = 0; i < probs_.size(); ++i) {
      const T p = probs_[i];
      const bool occ = target[i] != 0;
      const double wpx = occ ? occupied_weight : 1.0;
      const T pc = std::clamp(p, lo, hi_p);
      loss_sum += wpx * -std::log(occ ? static_cast<double>(pc)
                                      : 1.0 - static_cast<double>(pc));
      // Gradient in logit space, W·(p−y)/N: bounded without the clamp, and
      // nonzero on saturated pixels so an over-shot step can be undone.
      dz_[i] = inv_count * static_cast<T>(wpx) * (p - (occ ? T(1) : T(0)));
    }
    for (int s = 0; s < ns; ++s) {
      std::fill(enc_[s].da2.begin(), enc_[s].da2.end(), T(0));
      if (s + 1 < ns)
        std::fill(enc_[s].dpooled.begin(), enc_[s].dpooled.end(), T(0));
    }
    for (int s = 1; s < ns - 1; ++s)
      std::fill(dec_[s].dd2.begin(), dec_[s].dd2.end(), T(0));

    const int hi = head_index();
    detail::conv1_backward(dec_[0].d2.data(), plan_.stage_channels[0],
                           logits_.size(), wt(w, hi), dz_.data(), 1,
                           gw(grads, hi), gb(grads, hi), dec_[0].dd2.data());
    for (int s = 0; s < ns - 1; ++s) {
      auto& d = dec_[s];
      const int sz = sizes_[s];
      const int skip = plan_.stage_channels[s];
      const int src_c = plan_.stage_channels[s + 1];
      const int li = dec_conv_index(s);
      detail::relu_backward(d.dd2.data(), d.d2.data(), d.d2.size());
      conv3_backward(li + 1, d.pd1.data(), skip, sz, d.dd2.data(), skip,
                     d.dd1.data(), w, grads);
      detail::relu_backward(d.dd1.data(), d.d1.data(), d.d1.size());
      conv3_backward(li, d.pcat.data(), src_c + skip, sz, d.dd1.data(), skip,
                     d.dcat.data(), w, grads);
      // Split the concat gradient: upsampled part flows to the source stage,
      // the rest is the skip connection's share.
      T* dup = d.dcat.data();
      T* dskip = d.dcat.data() + d.up.size();
      T* dsrc = s == ns - 2 ? enc_[ns - 1].da2.data() : dec_[s + 1].dd2.data();
      detail::upsample_backward(dup, src_c, sz, sz, dsrc, sizes_[s + 1],
                                sizes_[s + 1]);
      T* da2 = enc_[s].da2.data();
      for (std::size_t i = 0; i < enc_[s].da2.size(); ++i) da2[i] += dskip[i];
    }
    for (int s = ns - 1; s >= 0; --s) {
      auto& e = enc_[s];
      const int sz = sizes_[s];
      const int c = plan_.stage_channels[s];
      const int cin = s == 0 ? plan_.in_channels : plan_.stage_channels[s - 1];
      const int li = 2 * s;
      detail::relu_backward(e.da2.data(), e.a2.data(), e.a2.size());
      conv3_backward(li + 1, e.pin2.data(), c, sz, e.da2.data(), c,
                     e.da1.data(), w, grads);
      detail::relu_backward(e.da1.data(), e.a1.data(), e.a1.size());
      T* dx = s == 0 ? dinput_.data() : enc_[s - 1].dpooled.data();
      conv3_backward(li, e.pin1.data(), cin, sz, e.da1.data(), c, dx, w,
                     grads);
      if (s > 0) {
        const int prev_sz = sizes_[s - 1];
        const int prev_c = plan_.stage_channels[s - 1];
        detail::maxpool_backward(enc_[s - 1].dpooled.data(),
                                 enc_[s - 1].arg.data(), prev_c, sz, sz,
                                 prev_sz, prev_sz, enc_[s - 1].da2.data());
      }
    }
    return loss_sum;
  }

 private:
  struct EncBuf {
    std::vector<T> pin1, a1, pin2, a2, pooled;
    std::vector<std::int32_t> arg;
    std::vector<T> da1, da2, dpooled;
  };
  struct DecBuf {
    std::vector<T> up, cat, pcat, d1, pd1, d2;
    std::vector<T> dcat, dd1, dd2;
  };

  static std::size_t plane_len(int c, int sz) {
    return static_cast<std::size_t>(c) * sz * sz;
  }
  static std::size_t padded_len(int c, int sz) {
    return static_cast<std::size_t>(c) * (sz + 2) * (sz + 2);
  }
  int dec_conv_index(int s) const {
    // Layout order: 2*stages encoder convs, then decoder stages bottom-up.
    return 2 * plan_.stages() + 2 * (plan_.stages() - 2 - s);
  }
  int head_index() const { return static_cast<int>(layout_.size()) - 1; }
  static const T* wt(const NetWeights<T>& w, int li) {
    return w.tensors[2 * li].v.data();
  }
  static const T* bs(const NetWeights<T>& w, int li) {
    return w.tensors[2 * li + 1].v.data();
  }
  static T* gw(NetWeights<T>& g, int li) { return g.tensors[2 * li].v.data(); }
  static T* gb(NetWeights<T>& g, int li) {
    return g.tensors[2 * li + 1].v.data();
  }

  // Shared 3x3 backward step: accumulates dw/db and writes the gradient
  // w.r.t. the layer's (unpadded) input into dx.
  void conv3_backward(int li, const T* pin, int cin, int sz, const T* dout,
                      int cout, T* dx, const NetWeights<T>& w,
                      NetWeights<T>& grads) {
    detail::conv3_backward(pin, cin, dout, cout, sz, sz, wt(w, li),
                           gw(grads, li), gb(grads, li), dx, scratch_);
  }

  UnetPlan plan_;
  std::vector<detail::ConvDesc> layout_;
  std::vector<int> sizes_;
  std::vector<EncBuf> enc_;
  std::vector<DecBuf> dec_;
  std::vector<T> logits_, probs_, dz_, dinput_;
  detail::Conv3Scratch<T> scratch_;
};

// One encoded training pair: a one-hot input and a binary target of the
// same spatial size.
template <class T>
struct LabeledExample {
  std::vector<T> input;
  std::vector<std::uint8_t> target;
};

// Mean weighted BCE over a batch, with gradients accumulated into `grads`
// (which is zeroed first).
template <class T>
double loss_and_grad(Unet<T>& net, const NetWeights<T>& w,
                     const LabeledExample<T>* batch, std::size_t count,
                     double alpha_cap, NetWeights<T>& grads) {
  if (count == 0) throw DomainError("empty batch");
  zero_values(grads);
  const std::size_t pixels = net.plan().input_size *
                             static_cast<std::size_t>(net.plan().input_size);
  const T inv = T(1) / static_cast<T>(count * pixels);
  double sum = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const auto& ex = batch[i];
    if (ex.target.size() != pixels)
      throw DomainError("target size does not match the network input size");
    net.forward(w, ex.input);
    const double w_occ =
        occupied_pixel_weight(ex.target.data(), ex.target.size(), alpha_cap);
    sum += net.backward(w, ex.target.data(), w_occ, inv, grads);
  }
  return sum / static_cast<double>(count * pixels);
}

// Forward-only version of the above.
template <class T>
double batch_loss(Unet<T>& net, const NetWeights<T>& w,
                  const LabeledExample<T>* batch, std::size_t count,
                  double alpha_cap) {
  if (count == 0) throw DomainError("empty batch");
  const std::size_t pixels = net.plan().input_size *
                             static_cast<std::size_t>(net.plan().input_size);
  double sum = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const auto& ex = batch[i];
    const auto& probs = net.forward(w, ex.input);
    const double w_occ =
        occupied_pixel_weight(ex.target.data(), ex.target.size(), alpha_cap);
    sum += weighted_bce_sum(probs.data(), ex.target.data(), ex.target.size(),
                            w_occ);
  }
  return sum / static_cast<double>(count * pixels);
}

}  // namespace semnav
