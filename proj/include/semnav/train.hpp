#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "semnav/common.hpp"
#include "semnav/dataset.hpp"
#include "semnav/net.hpp"

// Training loop for the occupancy-prediction network: Adam over mini-batches
// of the weighted BCE loss. Fully deterministic for a given seed — weight
// init, the train/validation split, and every epoch's shuffle all derive
// from it, and the math itself runs in a fixed serial order.

namespace semnav {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <class T>
class AdamOptimizer {
 public:
  AdamOptimizer(const NetWeights<T>& w, AdamConfig cfg) : cfg_(cfg) {
    m_.reserve(w.tensors.size());
    v_.reserve(w.tensors.size());
    for (const auto& t : w.tensors) {
      m_.emplace_back(t.size(), T(0));
      v_.emplace_back(t.size(), T(0));
    }
  }

  void step(NetWeights<T>& w, const NetWeights<T>& grads) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t ti = 0; ti < w.tensors.size(); ++ti) {
      auto& wv = w.tensors[ti].v;
      const auto& gv = grads.tensors[ti].v;
      auto& m = m_[ti];
      auto& v = v_[ti];
      for (std::size_t i = 0; i < wv.size(); ++i) {
        const double g = static_cast<double>(gv[i]);
        const double mi = cfg_.beta1 * static_cast<double>(m[i]) +
                          (1.0 - cfg_.beta1) * g;
        const double vi = cfg_.beta2 * static_cast<double>(v[i]) +
                          (1.0 - cfg_.beta2) * g * g;
        m[i] = static_cast<T>(mi);
        v[i] = static_cast<T>(vi);
        wv[i] -= static_cast<T>(cfg_.lr * (mi / bc1) /
                                (std::sqrt(vi / bc2) + cfg_.eps));
      }
    }
  }

  long long steps() const { return t_; }

 private:
  AdamConfig cfg_;
  long long t_ = 0;
  std::vector<std::vector<T>> m_, v_;
};

struct TrainConfig {
  GtVariant variant{kObsSize, false};
  int epochs = 30;
  int batch_size = 16;
  std::uint64_t seed = 1;
  AdamConfig adam;
  double alpha_cap = 20.0;
  // Fraction of samples held out for the per-epoch validation loss
  // (at least one sample when > 0).
  double val_fraction = 0.1;
  // If > 0, stop once an epoch's training loss drops below this fraction of
  // the first epoch's training loss.
  double early_stop_fraction = 0.0;
};

struct EpochLog {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  // NaN when no validation split was requested.
  double val_loss = std::numeric_limits<double>::quiet_NaN();
};

struct TrainResult {
  NetWeights<float> weights;
  std::vector<EpochLog> log;
  bool diverged = false;
};

namespace detail {

// Builds the encoded input for one sample at the variant's size.
inline void encode_sample_input(const TrainingSample& s, int size,
                                std::vector<float>& out) {
  if (size == kObsSize) {
    out = encode_observation<float>(s.obs, kObsSize);
  } else {
    out = encode_observation<float>(widen_observation(s.obs, size), size);
  }
}

}  // namespace detail

// Trains one network variant on the given samples. The variant picks both
// the input size (narrow observations are widened with an unknown ring) and
// which ground-truth plane is the target.
inline TrainResult train(const std::vector<TrainingSample>& samples,
                         const TrainConfig& cfg) {
  if (samples.empty()) throw DomainError("cannot train on an empty dataset");
  if (cfg.epochs < 1) throw DomainError("epoch count must be >= 1");
  if (cfg.batch_size < 1) throw DomainError("batch size must be >= 1");
  if (cfg.val_fraction < 0.0 || cfg.val_fraction >= 1.0)
    throw DomainError("validation fraction must be in [0, 1)");
  const int vi = variant_index(cfg.variant);
  const int size = cfg.variant.size;
  const std::size_t pixels = static_cast<std::size_t>(size) * size;

  // Deterministic split: shuffle once, tail becomes the validation set.
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  {
    Rng split_rng(mix_seed(cfg.seed, 1));
    split_rng.shuffle(order);
  }
  std::size_t n_val = 0;
  if (cfg.val_fraction > 0.0 && samples.size() >= 2) {
    n_val = static_cast<std::size_t>(cfg.val_fraction *
                                     static_cast<double>(samples.size()));
    n_val = std::min(std::max<std::size_t>(n_val, 1), samples.size() - 1);
  }
  std::vector<std::size_t> train_idx(order.begin(),
                                     order.end() - static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> val_idx(order.end() - static_cast<std::ptrdiff_t>(n_val),
                                   order.end());

  const UnetPlan plan = plan_for_input(size);
  Unet<float> net(plan);
  NetWeights<float> weights = init_weights<float>(plan, mix_seed(cfg.seed, 0));
  NetWeights<float> grads = make_weights<float>(plan);
  AdamOptimizer<float> adam(weights, cfg.adam);
  Rng order_rng(mix_seed(cfg.seed, 2));

  TrainResult result;
  NetWeights<float> snapshot = weights;  // last finite state
  std::vector<float> input;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    order_rng.shuffle(train_idx);
    double epoch_sum = 0.0;
    bool finite = true;
    for (std::size_t b = 0; b < train_idx.size(); b += cfg.batch_size) {
      const std::size_t bend = std::min(train_idx.size(),
                                        b + static_cast<std::size_t>(cfg.batch_size));
      const std::size_t bsz = bend - b;
      zero_values(grads);
      const float inv = 1.0f / static_cast<float>(bsz * pixels);
      double batch_sum = 0.0;
      for (std::size_t k = b; k < bend; ++k) {
        const TrainingSample& s = samples[train_idx[k]];
        detail::encode_sample_input(s, size, input);
        const auto& target = s.gt[vi].cells;
        net.forward(weights, input);
        const double w_occ =
            occupied_pixel_weight(target.data(), target.size(), cfg.alpha_cap);
        batch_sum += net.backward(weights, target.data(), w_occ, inv, grads);
      }
      if (!std::isfinite(batch_sum)) {
        finite = false;
        break;
      }
      epoch_sum += batch_sum;
      adam.step(weights, grads);
    }
    if (!finite) {
      result.diverged = true;
      result.weights = snapshot;
      return result;
    }
    EpochLog log;
    log.epoch = epoch;
    log.train_loss =
        epoch_sum / (static_cast<double>(train_idx.size()) * pixels);
    if (!val_idx.empty()) {
      double val_sum = 0.0;
      for (std::size_t idx : val_idx) {
        const TrainingSample& s = samples[idx];
        detail::encode_sample_input(s, size, input);
        const auto& probs = net.forward(weights, input);
        const auto& target = s.gt[vi].cells;
        const double w_occ =
            occupied_pixel_weight(target.data(), target.size(), cfg.alpha_cap);
        val_sum += weighted_bce_sum(probs.data(), target.data(), target.size(),
                                    w_occ);
      }
      log.val_loss = val_sum / (static_cast<double>(val_idx.size()) * pixels);
    }
    result.log.push_back(log);
    if (!std::isfinite(log.train_loss) ||
        (!val_idx.empty() && !std::isfinite(log.val_loss))) {
      result.diverged = true;
      result.weights = snapshot;
      return result;
    }
    snapshot = weights;
    if (cfg.early_stop_fraction > 0.0 && epoch > 1 &&
        log.train_loss <
            cfg.early_stop_fraction * result.log.front().train_loss)
      break;
  }
  result.weights = std::move(weights);
  return result;
}

}  // namespace semnav
