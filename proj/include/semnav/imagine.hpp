#pragma once
// Imagination inference: the network's raw occupancy probabilities are gated
// by a Gaussian mask built from the scan evidence, and the product is
// thresholded into a binary occupancy patch. The mask makes imagination
// local: cells with no scan support can never be declared occupied.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "semnav/common.hpp"
#include "semnav/dataset.hpp"
#include "semnav/net.hpp"

namespace semnav {

struct ImagineConfig {
  double sigma = 5.0;  // Gaussian width of the scan mask, in cells
  double theta = 0.2;  // occupancy threshold applied to raw * mask
};

// The mask kernel is a fixed 31x31 window regardless of sigma.
inline constexpr int kMaskKernelSize = 31;

struct ImaginationResult {
  std::vector<float> raw;   // network probabilities, size*size row-major
  std::vector<float> mask;  // scan-evidence mask in [0,1], size*size
  BinaryImage occupancy;    // raw*mask > theta, strict
};

namespace detail {

// 31x31 Gaussian (1/2pi*sigma^2)*exp(-(x^2+y^2)/2sigma^2) on offsets
// [-15, 15], before peak rescaling.
inline std::vector<double> unnormalized_gauss_kernel(double sigma) {
  if (!(sigma > 0.0))
    throw DomainError("mask kernel sigma must be positive, got " +
                      format_double(sigma));
  constexpr int k = kMaskKernelSize;
  constexpr int half = k / 2;
  std::vector<double> kernel(static_cast<std::size_t>(k) * k);
  const double scale = 1.0 / (2.0 * kPi * sigma * sigma);
  const double inv_two_var = 1.0 / (2.0 * sigma * sigma);
  for (int y = -half; y <= half; ++y)
    for (int x = -half; x <= half; ++x)
      kernel[static_cast<std::size_t>(y + half) * k + (x + half)] =
          scale * std::exp(-(double(x) * x + double(y) * y) * inv_two_var);
  return kernel;
}

}  // namespace detail

// 31x31 Gaussian kernel rescaled so the center value is exactly 1, so a
// cell holding a scan hit keeps full imagination strength.
inline std::vector<double> gauss_kernel(double sigma) {
  std::vector<double> kernel = detail::unnormalized_gauss_kernel(sigma);
  constexpr int k = kMaskKernelSize;
  const double peak = kernel[static_cast<std::size_t>(k / 2) * k + k / 2];
  for (double& v : kernel) v /= peak;
  return kernel;
}

// Scan-evidence mask: binarize the map (wall/chair/table -> 1, free and
// unknown -> 0), convolve with the peak-normalized Gaussian kernel under
// zero padding, and clip to [0,1]. Implemented by scattering the kernel
// from each hit cell, which equals the zero-padded convolution because the
// kernel is symmetric; hits are sparse so this is far cheaper than a dense
// pass.
inline std::vector<float> make_mask(const std::vector<ClassId>& map, int size,
                                    const ImagineConfig& config = {}) {
  const std::size_t n = static_cast<std::size_t>(size) * size;
  if (size <= 0 || map.size() != n)
    throw DomainError("semantic map has " + std::to_string(map.size()) +
                      " cells, expected " + std::to_string(size) + "x" +
                      std::to_string(size));
  const std::vector<double> kernel = gauss_kernel(config.sigma);
  constexpr int k = kMaskKernelSize;
  constexpr int half = k / 2;
  std::vector<double> acc(n, 0.0);
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      if (!is_obstacle(map[static_cast<std::size_t>(r) * size + c])) continue;
      const int r0 = std::max(0, r - half), r1 = std::min(size - 1, r + half);
      const int c0 = std::max(0, c - half), c1 = std::min(size - 1, c + half);
      for (int rr = r0; rr <= r1; ++rr) {
        const double* krow =
            kernel.data() + static_cast<std::size_t>(rr - r + half) * k;
        double* arow = acc.data() + static_cast<std::size_t>(rr) * size;
        for (int cc = c0; cc <= c1; ++cc) arow[cc] += krow[cc - c + half];
      }
    }
  }
  std::vector<float> mask(n);
  for (std::size_t i = 0; i < n; ++i)
    mask[i] = static_cast<float>(std::clamp(acc[i], 0.0, 1.0));
  return mask;
}

// Binary occupancy from gated probabilities: occupied iff raw*mask > theta,
// with the product and comparison both in float32 and the inequality strict,
// so a product exactly equal to theta stays unoccupied.
inline BinaryImage threshold_occupancy(const std::vector<float>& raw,
                                       const std::vector<float>& mask,
                                       int size, double theta) {
  const std::size_t n = static_cast<std::size_t>(size) * size;
  if (size <= 0 || raw.size() != n || mask.size() != n)
    throw DomainError("probability and mask images must both be " +
                      std::to_string(size) + "x" + std::to_string(size));
  if (!(theta >= 0.0 && theta < 1.0))
    throw DomainError("occupancy threshold must lie in [0, 1), got " +
                      format_double(theta));
  BinaryImage out;
  out.rows = size;
  out.cols = size;
  out.cells.assign(n, 0);
  const float th = static_cast<float>(theta);
  for (std::size_t i = 0; i < n; ++i)
    out.cells[i] = (raw[i] * mask[i] > th) ? 1 : 0;
  return out;
}

// Runs the full imagination pipeline against one fixed weight set. Owns the
// network buffers so repeated calls (one per control cycle) do not
// reallocate.
class Imaginer {
 public:
  explicit Imaginer(NetWeights<float> weights, ImagineConfig config = {})
      : weights_(std::move(weights)), config_(config), net_(weights_.plan) {
    if (!(config_.sigma > 0.0))
      throw DomainError("mask kernel sigma must be positive, got " +
                        format_double(config_.sigma));
    if (!(config_.theta >= 0.0 && config_.theta < 1.0))
      throw DomainError("occupancy threshold must lie in [0, 1), got " +
                        format_double(config_.theta));
  }

  int input_size() const { return weights_.plan.input_size; }
  const ImagineConfig& config() const { return config_; }
  const NetWeights<float>& weights() const { return weights_; }

  ImaginationResult imagine(const std::vector<ClassId>& map) {
    const int size = input_size();
    if (map.size() != static_cast<std::size_t>(size) * size)
      throw DomainError("weights expect a " + std::to_string(size) + "x" +
                        std::to_string(size) + " map, got " +
                        std::to_string(map.size()) + " cells");
    ImaginationResult r;
    const std::vector<float> input = encode_observation<float>(map, size);
    const std::vector<float>& probs = net_.forward(weights_, input);
    r.raw.assign(probs.begin(), probs.end());
    r.mask = make_mask(map, size, config_);
    r.occupancy = threshold_occupancy(r.raw, r.mask, size, config_.theta);
    return r;
  }

 private:
  NetWeights<float> weights_;
  ImagineConfig config_;
  Unet<float> net_;
};

// One-shot convenience wrapper; builds the network buffers per call, so
// prefer an Imaginer in loops.
inline ImaginationResult imagine(const NetWeights<float>& weights,
                                 const std::vector<ClassId>& map,
                                 const ImagineConfig& config = {}) {
  Imaginer im(weights, config);
  return im.imagine(map);
}

}  // namespace semnav
