#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <vector>

#include "semnav/net.hpp"
#include "semnav/train.hpp"
#include "semnav/weights_io.hpp"

namespace semnav {
namespace {

std::vector<double> random_vec(std::size_t n, Rng& rng, double lo = -1.0,
                               double hi = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

// Relative disagreement between an analytic and a finite-difference
// gradient, with a floor so near-zero pairs compare as equal.
double rel_err(double a, double b) {
  return std::abs(a - b) / std::max(std::abs(a) + std::abs(b), 1e-6);
}

TEST(Plan, StageSizesHalveWithFloor) {
  UnetPlan p60 = plan_for_input(60);
  EXPECT_EQ(p60.stage_sizes(), (std::vector<int>{60, 30, 15, 7, 3}));
  UnetPlan p100 = plan_for_input(100);
  EXPECT_EQ(p100.stage_sizes(), (std::vector<int>{100, 50, 25, 12, 6}));
}

TEST(Plan, CanonicalLayoutChannels) {
  auto layers = detail::conv_layout(plan_for_input(60));
  ASSERT_EQ(layers.size(), 19u);
  EXPECT_EQ(layers[0].name, "enc1.conv1");
  EXPECT_EQ(layers[0].in_c, 5);
  EXPECT_EQ(layers[0].out_c, 32);
  EXPECT_EQ(layers[9].name, "enc5.conv2");
  EXPECT_EQ(layers[10].name, "dec4.conv1");
  EXPECT_EQ(layers[10].in_c, 512);
  EXPECT_EQ(layers[10].out_c, 256);
  EXPECT_EQ(layers[12].name, "dec3.conv1");
  EXPECT_EQ(layers[12].in_c, 384);
  EXPECT_EQ(layers[16].name, "dec1.conv1");
  EXPECT_EQ(layers[16].in_c, 96);
  EXPECT_EQ(layers[16].out_c, 32);
  EXPECT_EQ(layers[18].name, "head");
  EXPECT_EQ(layers[18].in_c, 32);
  EXPECT_EQ(layers[18].out_c, 1);
  EXPECT_EQ(layers[18].k, 1);
}

TEST(Plan, ParameterCount) {
  auto w = make_weights<float>(plan_for_input(60));
  EXPECT_EQ(parameter_count(w), 4897601u);
  // The fingerprint is the plan, so the wide model shares the count.
  auto w100 = make_weights<float>(plan_for_input(100));
  EXPECT_EQ(parameter_count(w100), 4897601u);
}

TEST(Plan, RejectsTooSmallInputs) {
  EXPECT_THROW(validate_plan(plan_for_input(1)), DomainError);
  UnetPlan tiny = plan_for_input(8);  // 8,4,2,1 -> stage 4 cannot pool
  EXPECT_THROW(validate_plan(tiny), DomainError);
}

TEST(Pyramid, ShapesMatchContract) {
  const UnetPlan plan = plan_for_input(60);
  auto shapes = Unet<float>::pyramid_shapes(plan);
  const std::vector<std::array<int, 3>> expected = {
      {32, 60, 60}, {64, 30, 30}, {128, 15, 15}, {256, 7, 7}, {256, 3, 3}};
  EXPECT_EQ(shapes, expected);

  // The buffers a forward pass actually produces have those extents.
  Unet<float> net(plan);
  auto w = init_weights<float>(plan, 7);
  std::vector<float> input(5u * 60 * 60, 0.0f);
  for (std::size_t i = 0; i < 3600; ++i) input[i] = 1.0f;  // all "free"
  const auto& probs = net.forward(w, input);
  EXPECT_EQ(probs.size(), 3600u);
  for (int s = 0; s < 5; ++s) {
    const auto& e = expected[s];
    EXPECT_EQ(net.stage_output(s).size(),
              static_cast<std::size_t>(e[0]) * e[1] * e[2]);
  }
}

TEST(Pyramid, WideModelShapes) {
  auto shapes = Unet<float>::pyramid_shapes(plan_for_input(100));
  const std::vector<std::array<int, 3>> expected = {
      {32, 100, 100}, {64, 50, 50}, {128, 25, 25}, {256, 12, 12}, {256, 6, 6}};
  EXPECT_EQ(shapes, expected);
}

TEST(Forward, ZeroWeightsGiveHalfProbabilityEverywhere) {
  UnetPlan plan = plan_for_input(12);
  plan.stage_channels = {8, 16};
  Unet<double> net(plan);
  auto w = make_weights<double>(plan);
  Rng rng(3);
  std::vector<double> input = random_vec(5u * 12 * 12, rng, 0.0, 1.0);
  const auto& probs = net.forward(w, input);
  for (double p : probs) EXPECT_EQ(p, 0.5);
}

TEST(Loss, UniformHalfOnFreeTargetIsLogTwo) {
  std::vector<double> probs(100, 0.5);
  std::vector<std::uint8_t> target(100, 0);
  const double loss =
      weighted_bce_sum(probs.data(), target.data(), 100, 1.0) / 100.0;
  EXPECT_NEAR(loss, std::log(2.0), 1e-15);
}

TEST(Loss, PerfectPredictionsCostAlmostNothing) {
  std::vector<std::uint8_t> target = {1, 0, 0, 1};
  std::vector<double> probs = {1.0, 0.0, 0.0, 1.0};
  const double w_occ = occupied_pixel_weight(target.data(), 4, 20.0);
  const double loss = weighted_bce_sum(probs.data(), target.data(), 4, w_occ) / 4;
  EXPECT_GT(loss, 0.0);  // clamping keeps the logs finite
  EXPECT_LT(loss, 1e-6);
}

TEST(Loss, HandComputedWeightedExample) {
  std::vector<std::uint8_t> target = {1, 0, 0, 0};
  std::vector<double> probs = {0.8, 0.2, 0.1, 0.3};
  const double w_occ = occupied_pixel_weight(target.data(), 4, 20.0);
  EXPECT_DOUBLE_EQ(w_occ, 3.0);  // three free pixels per occupied one
  const double expected = (3.0 * -std::log(0.8) - std::log(0.8) -
                           std::log(0.9) - std::log(0.7)) /
                          4.0;
  const double loss =
      weighted_bce_sum(probs.data(), target.data(), 4, w_occ) / 4.0;
  EXPECT_NEAR(loss, expected, 1e-15);
}

TEST(Loss, OccupiedWeightClamping) {
  std::vector<std::uint8_t> all_free(3600, 0);
  EXPECT_DOUBLE_EQ(occupied_pixel_weight(all_free.data(), 3600, 20.0), 1.0);
  std::vector<std::uint8_t> one_occ(3600, 0);
  one_occ[17] = 1;
  EXPECT_DOUBLE_EQ(occupied_pixel_weight(one_occ.data(), 3600, 20.0), 20.0);
  std::vector<std::uint8_t> half(4, 0);
  half[0] = half[1] = 1;
  EXPECT_DOUBLE_EQ(occupied_pixel_weight(half.data(), 4, 20.0), 1.0);
  std::vector<std::uint8_t> mostly_occ = {1, 1, 1, 0};
  // Ratio 1/3 would down-weight occupied pixels; it clamps up to 1.
  EXPECT_DOUBLE_EQ(occupied_pixel_weight(mostly_occ.data(), 4, 20.0), 1.0);
}

// --- Per-layer finite-difference checks (double precision). Each layer is
// probed through a random linear functional L = sum(c .* out) so its
// backward pass can be exercised in isolation.

TEST(LayerGradients, Conv3WeightsBiasAndData) {
  const int cin = 3, cout = 4, h = 7, w = 6;
  Rng rng(11);
  std::vector<double> x = random_vec(static_cast<std::size_t>(cin) * h * w, rng);
  std::vector<double> wt = random_vec(static_cast<std::size_t>(cout) * cin * 9, rng);
  std::vector<double> bias = random_vec(cout, rng);
  std::vector<double> c = random_vec(static_cast<std::size_t>(cout) * h * w, rng);

  auto loss = [&](const std::vector<double>& xx, const std::vector<double>& ww,
                  const std::vector<double>& bb) {
    std::vector<double> pin(static_cast<std::size_t>(cin) * (h + 2) * (w + 2));
    detail::pad_channels(xx.data(), cin, h, w, pin.data());
    std::vector<double> out(static_cast<std::size_t>(cout) * h * w);
    detail::conv3_forward(pin.data(), cin, h, w, ww.data(), bb.data(),
                          out.data(), cout);
    return std::inner_product(out.begin(), out.end(), c.begin(), 0.0);
  };

  // Analytic gradients with dout = c.
  std::vector<double> pin(static_cast<std::size_t>(cin) * (h + 2) * (w + 2));
  detail::pad_channels(x.data(), cin, h, w, pin.data());
  std::vector<double> dw(wt.size(), 0.0), db(cout, 0.0), dx(x.size());
  detail::Conv3Scratch<double> scratch;
  detail::conv3_backward(pin.data(), cin, c.data(), cout, h, w, wt.data(),
                         dw.data(), db.data(), dx.data(), scratch);

  const double step = 1e-6;
  // The map is linear in weights, bias, and input, so central differences
  // are exact up to roundoff.
  for (std::size_t i = 0; i < wt.size(); i += 7) {
    auto wp = wt, wm = wt;
    wp[i] += step;
    wm[i] -= step;
    const double fd = (loss(x, wp, bias) - loss(x, wm, bias)) / (2 * step);
    EXPECT_LT(rel_err(dw[i], fd), 1e-7) << "weight " << i;
  }
  for (int i = 0; i < cout; ++i) {
    auto bp = bias, bm = bias;
    bp[i] += step;
    bm[i] -= step;
    const double fd = (loss(x, wt, bp) - loss(x, wt, bm)) / (2 * step);
    EXPECT_LT(rel_err(db[i], fd), 1e-7) << "bias " << i;
  }
  for (std::size_t i = 0; i < x.size(); i += 5) {
    auto xp = x, xm = x;
    xp[i] += step;
    xm[i] -= step;
    const double fd = (loss(xp, wt, bias) - loss(xm, wt, bias)) / (2 * step);
    EXPECT_LT(rel_err(dx[i], fd), 1e-7) << "input " << i;
  }
}

TEST(LayerGradients, MaxPoolScattersToArgmax) {
  const int c = 2, h = 5, w = 7;  // odd sizes exercise the floor crop
  Rng rng(12);
  std::vector<double> x = random_vec(static_cast<std::size_t>(c) * h * w, rng);
  const int oh = h / 2, ow = w / 2;
  std::vector<double> cvec = random_vec(static_cast<std::size_t>(c) * oh * ow, rng);

  auto loss = [&](const std::vector<double>& xx) {
    std::vector<double> out(static_cast<std::size_t>(c) * oh * ow);
    std::vector<std::int32_t> arg(out.size());
    detail::maxpool_forward(xx.data(), c, h, w, out.data(), arg.data());
    return std::inner_product(out.begin(), out.end(), cvec.begin(), 0.0);
  };

  std::vector<double> out(static_cast<std::size_t>(c) * oh * ow);
  std::vector<std::int32_t> arg(out.size());
  detail::maxpool_forward(x.data(), c, h, w, out.data(), arg.data());
  std::vector<double> dx(x.size(), 0.0);
  detail::maxpool_backward(cvec.data(), arg.data(), c, oh, ow, h, w, dx.data());

  const double step = 1e-6;
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto xp = x, xm = x;
    xp[i] += step;
    xm[i] -= step;
    const double fd = (loss(xp) - loss(xm)) / (2 * step);
    EXPECT_LT(rel_err(dx[i], fd), 1e-7) << "input " << i;
  }
  // Cells in the cropped last column (w odd) must get zero gradient.
  for (int ci = 0; ci < c; ++ci)
    for (int y = 0; y < h; ++y)
      EXPECT_EQ(dx[static_cast<std::size_t>(ci) * h * w + y * w + (w - 1)], 0.0);
}

TEST(LayerGradients, UpsampleRoutesToSourceCells) {
  const int c = 2, sh = 3, sw = 3, th = 7, tw = 7;
  Rng rng(13);
  std::vector<double> x = random_vec(static_cast<std::size_t>(c) * sh * sw, rng);
  std::vector<double> cvec = random_vec(static_cast<std::size_t>(c) * th * tw, rng);

  std::vector<double> out(static_cast<std::size_t>(c) * th * tw);
  detail::upsample_forward(x.data(), c, sh, sw, out.data(), th, tw);
  // Row/column replication pattern for 3 -> 7 is [0,0,0,1,1,2,2].
  const int expect_src[7] = {0, 0, 0, 1, 1, 2, 2};
  for (int ty = 0; ty < th; ++ty)
    for (int tx = 0; tx < tw; ++tx)
      EXPECT_EQ(out[static_cast<std::size_t>(ty) * tw + tx],
                x[static_cast<std::size_t>(expect_src[ty]) * sw + expect_src[tx]]);

  std::vector<double> dx(x.size(), 0.0);
  detail::upsample_backward(cvec.data(), c, th, tw, dx.data(), sh, sw);
  const double step = 1e-6;
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto xp = x, xm = x;
    xp[i] += step;
    xm[i] -= step;
    std::vector<double> op(out.size()), om(out.size());
    detail::upsample_forward(xp.data(), c, sh, sw, op.data(), th, tw);
    detail::upsample_forward(xm.data(), c, sh, sw, om.data(), th, tw);
    const double fd =
        (std::inner_product(op.begin(), op.end(), cvec.begin(), 0.0) -
         std::inner_product(om.begin(), om.end(), cvec.begin(), 0.0)) /
        (2 * step);
    EXPECT_LT(rel_err(dx[i], fd), 1e-7) << "input " << i;
  }
}

TEST(LayerGradients, HeadConvAndLossAgainstFiniteDifferences) {
  // 1x1 conv -> sigmoid -> weighted BCE, checked end to end on raw buffers.
  const int cin = 3;
  const std::size_t n = 20;
  Rng rng(14);
  std::vector<double> x = random_vec(cin * n, rng);
  std::vector<double> wt = random_vec(cin, rng);
  std::vector<double> bias = random_vec(1, rng);
  std::vector<std::uint8_t> target(n, 0);
  for (std::size_t i = 0; i < n; i += 3) target[i] = 1;
  const double w_occ = occupied_pixel_weight(target.data(), n, 20.0);

  auto loss = [&](const std::vector<double>& xx, const std::vector<double>& ww,
                  const std::vector<double>& bb) {
    std::vector<double> z(n);
    detail::conv1_forward(xx.data(), cin, n, ww.data(), bb.data(), z.data(), 1);
    std::vector<double> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = 1.0 / (1.0 + std::exp(-z[i]));
    return weighted_bce_sum(p.data(), target.data(), n, w_occ) /
           static_cast<double>(n);
  };

  // Analytic: dL/dz = w * (p - y) / n, then conv1 backward.
  std::vector<double> z(n);
  detail::conv1_forward(x.data(), cin, n, wt.data(), bias.data(), z.data(), 1);
  std::vector<double> dz(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double p = 1.0 / (1.0 + std::exp(-z[i]));
    const double wpx = target[i] ? w_occ : 1.0;
    dz[i] = wpx * (p - (target[i] ? 1.0 : 0.0)) / static_cast<double>(n);
  }
  std::vector<double> dw(cin, 0.0), db(1, 0.0), dx(x.size(), 0.0);
  detail::conv1_backward(x.data(), cin, n, wt.data(), dz.data(), 1, dw.data(),
                         db.data(), dx.data());

  const double step = 1e-5;
  for (int i = 0; i < cin; ++i) {
    auto wp = wt, wm = wt;
    wp[i] += step;
    wm[i] -= step;
    const double fd = (loss(x, wp, bias) - loss(x, wm, bias)) / (2 * step);
    EXPECT_LT(rel_err(dw[i], fd), 1e-6) << "weight " << i;
  }
  {
    auto bp = bias, bm = bias;
    bp[0] += step;
    bm[0] -= step;
    const double fd = (loss(x, wt, bp) - loss(x, wt, bm)) / (2 * step);
    EXPECT_LT(rel_err(db[0], fd), 1e-6);
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto xp = x, xm = x;
    xp[i] += step;
    xm[i] -= step;
    const double fd = (loss(xp, wt, bias) - loss(xm, wt, bias)) / (2 * step);
    EXPECT_LT(rel_err(dx[i], fd), 1e-6) << "input " << i;
  }
}

// Whole-network gradient check on a small two-stage architecture: the
// analytic gradient of the full weighted-BCE objective must match central
// finite differences for every parameter.
TEST(NetGradients, FullBackwardMatchesFiniteDifferences) {
  UnetPlan plan = plan_for_input(8);
  plan.stage_channels = {4, 6};
  Unet<double> net(plan);
  auto w = init_weights<double>(plan, 21);
  Rng rng(22);
  // One-hot-ish random input: a single active channel per pixel.
  std::vector<double> input(5u * 8 * 8, 0.0);
  std::vector<std::uint8_t> target(64, 0);
  for (int i = 0; i < 64; ++i) {
    input[static_cast<std::size_t>(rng.uniform_int(5)) * 64 + i] = 1.0;
    target[i] = rng.uniform() < 0.3 ? 1 : 0;
  }
  const double w_occ = occupied_pixel_weight(target.data(), 64, 20.0);

  auto full_loss = [&](const NetWeights<double>& ww) {
    const auto& probs = net.forward(ww, input);
    return weighted_bce_sum(probs.data(), target.data(), 64, w_occ) / 64.0;
  };

  auto grads = make_weights<double>(plan);
  net.forward(w, input);
  net.backward(w, target.data(), w_occ, 1.0 / 64.0, grads);

  const double step = 1e-4;
  double worst = 0.0;
  for (std::size_t ti = 0; ti < w.tensors.size(); ++ti) {
    for (std::size_t i = 0; i < w.tensors[ti].v.size(); ++i) {
      const double orig = w.tensors[ti].v[i];
      w.tensors[ti].v[i] = orig + step;
      const double lp = full_loss(w);
      w.tensors[ti].v[i] = orig - step;
      const double lm = full_loss(w);
      w.tensors[ti].v[i] = orig;
      const double fd = (lp - lm) / (2 * step);
      worst = std::max(worst, rel_err(grads.tensors[ti].v[i], fd));
    }
  }
  EXPECT_LT(worst, 1e-5);
}

TEST(Init, HeUniformBoundsAndDeterminism) {
  UnetPlan plan = plan_for_input(12);
  plan.stage_channels = {8, 16};
  auto a = init_weights<float>(plan, 5);
  auto b = init_weights<float>(plan, 5);
  auto c = init_weights<float>(plan, 6);
  bool any_nonzero = false, differs = false;
  for (std::size_t ti = 0; ti < a.tensors.size(); ++ti) {
    const auto& t = a.tensors[ti];
    ASSERT_EQ(t.v, b.tensors[ti].v) << t.name;
    if (t.v != c.tensors[ti].v) differs = true;
    if (t.shape.size() < 2) {
      for (float x : t.v) EXPECT_EQ(x, 0.0f) << t.name;  // biases start at 0
      continue;
    }
    std::size_t fan_in = 1;
    for (std::size_t i = 1; i < t.shape.size(); ++i) fan_in *= t.shape[i];
    const float limit = std::sqrt(6.0f / static_cast<float>(fan_in));
    for (float x : t.v) {
      EXPECT_LE(std::abs(x), limit) << t.name;
      if (x != 0.0f) any_nonzero = true;
    }
  }
  EXPECT_TRUE(any_nonzero);
  EXPECT_TRUE(differs);
}

LabeledExample<float> random_example(int size, Rng& rng, double occ_rate) {
  LabeledExample<float> ex;
  const std::size_t n = static_cast<std::size_t>(size) * size;
  ex.input.assign(5 * n, 0.0f);
  ex.target.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    ex.input[rng.uniform_int(5) * n + i] = 1.0f;
    ex.target[i] = rng.uniform() < occ_rate ? 1 : 0;
  }
  return ex;
}

TEST(Optimizer, SingleAdamStepReducesSampleLoss) {
  UnetPlan plan = plan_for_input(12);
  plan.stage_channels = {8, 16};
  Unet<float> net(plan);
  auto w = init_weights<float>(plan, 31);
  auto grads = make_weights<float>(plan);
  Rng rng(32);
  auto ex = random_example(12, rng, 0.25);

  const double before = loss_and_grad(net, w, &ex, 1, 20.0, grads);
  AdamConfig cfg;
  cfg.lr = 1e-4;
  AdamOptimizer<float> adam(w, cfg);
  adam.step(w, grads);
  const double after = batch_loss(net, w, &ex, 1, 20.0);
  EXPECT_LT(after, before);
}

std::vector<TrainingSample> synthetic_samples(int count, std::uint64_t seed) {
  // Hand-built samples (no simulator needed): random observations with a
  // consistent occupied blob in all four target planes.
  std::vector<TrainingSample> out;
  Rng rng(seed);
  for (int k = 0; k < count; ++k) {
    TrainingSample s;
    s.pose = {1.0 + k * 0.05, 2.0, 0.0};
    s.obs.assign(static_cast<std::size_t>(kObsSize) * kObsSize, ClassId::free);
    const int r0 = 10 + static_cast<int>(rng.uniform_int(30));
    const int c0 = 10 + static_cast<int>(rng.uniform_int(30));
    for (int dr = 0; dr < 4; ++dr)
      for (int dc = 0; dc < 4; ++dc)
        s.obs[static_cast<std::size_t>(r0 + dr) * kObsSize + (c0 + dc)] =
            ClassId::table;
    const auto variants = gt_variants();
    for (int v = 0; v < kGtVariantCount; ++v) {
      const int size = variants[v].size;
      const int off = (size - kObsSize) / 2;
      BinaryImage img(size, size);
      const int grow = variants[v].extended ? 2 : 0;
      for (int dr = -grow; dr < 4 + grow; ++dr)
        for (int dc = -grow; dc < 4 + grow; ++dc)
          img.set(r0 + off + dr, c0 + off + dc, 1);
      s.gt[v] = std::move(img);
    }
    out.push_back(std::move(s));
  }
  return out;
}

TEST(Training, DeterministicForFixedSeed) {
  auto samples = synthetic_samples(6, 41);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 4;
  cfg.seed = 99;
  cfg.val_fraction = 0.34;
  auto a = train(samples, cfg);
  auto b = train(samples, cfg);
  ASSERT_EQ(a.log.size(), b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    EXPECT_EQ(a.log[i].train_loss, b.log[i].train_loss);
    EXPECT_EQ(a.log[i].val_loss, b.log[i].val_loss);
  }
  for (std::size_t ti = 0; ti < a.weights.tensors.size(); ++ti)
    ASSERT_EQ(a.weights.tensors[ti].v, b.weights.tensors[ti].v);

  cfg.seed = 100;
  auto c = train(samples, cfg);
  bool differs = false;
  for (std::size_t ti = 0; ti < a.weights.tensors.size(); ++ti)
    if (a.weights.tensors[ti].v != c.weights.tensors[ti].v) differs = true;
  EXPECT_TRUE(differs);
}

TEST(Training, LogsValidationLossEveryEpoch) {
  auto samples = synthetic_samples(8, 43);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 4;
  cfg.val_fraction = 0.25;
  auto r = train(samples, cfg);
  ASSERT_EQ(r.log.size(), 3u);
  for (const auto& e : r.log) {
    EXPECT_TRUE(std::isfinite(e.train_loss));
    EXPECT_TRUE(std::isfinite(e.val_loss));
    EXPECT_GT(e.train_loss, 0.0);
  }
  EXPECT_FALSE(r.diverged);

  cfg.val_fraction = 0.0;  // no split: the slot reads as NaN
  auto r2 = train(samples, cfg);
  for (const auto& e : r2.log) EXPECT_TRUE(std::isnan(e.val_loss));
}

TEST(Training, EarlyStopCutsTheRunShort) {
  auto samples = synthetic_samples(6, 44);
  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.batch_size = 6;
  cfg.val_fraction = 0.0;
  // A generous threshold triggers at the first eligible epoch (the second).
  cfg.early_stop_fraction = 100.0;
  auto r = train(samples, cfg);
  EXPECT_EQ(r.log.size(), 2u);
}

TEST(Training, LossDropsOnTinyDataset) {
  auto samples = synthetic_samples(4, 45);
  TrainConfig cfg;
  cfg.epochs = 12;
  cfg.batch_size = 4;
  cfg.val_fraction = 0.0;
  cfg.variant = {kObsSize, false};
  auto r = train(samples, cfg);
  ASSERT_EQ(r.log.size(), 12u);
  EXPECT_LT(r.log.back().train_loss, 0.5 * r.log.front().train_loss);
  EXPECT_FALSE(r.diverged);
}

class WeightsFileTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() / "semnav_weights_test";
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  std::filesystem::path dir_;
};

TEST_F(WeightsFileTest, RoundTripIsBitwiseExact) {
  UnetPlan plan = plan_for_input(12);
  plan.stage_channels = {8, 16};
  auto w = init_weights<float>(plan, 51);
  const auto path = (dir_ / "w.bin").string();
  save_weights(w, path);
  auto r = load_weights(path);
  EXPECT_EQ(r.plan, plan);
  ASSERT_EQ(r.tensors.size(), w.tensors.size());
  for (std::size_t i = 0; i < w.tensors.size(); ++i) {
    EXPECT_EQ(r.tensors[i].name, w.tensors[i].name);
    EXPECT_EQ(r.tensors[i].shape, w.tensors[i].shape);
    ASSERT_EQ(r.tensors[i].v, w.tensors[i].v);
  }
}

TEST_F(WeightsFileTest, DetectsPayloadCorruption) {
  UnetPlan plan = plan_for_input(12);
  plan.stage_channels = {8, 16};
  auto w = init_weights<float>(plan, 52);
  const auto path = (dir_ / "w.bin").string();
  save_weights(w, path);
  // Flip one byte near the end of the payload.
  std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
  f.seekg(0, std::ios::end);
  const auto end = static_cast<long long>(f.tellg());
  f.seekp(end - 12);
  char b;
  f.seekg(end - 12);
  f.read(&b, 1);
  b = static_cast<char>(b ^ 0x40);
  f.seekp(end - 12);
  f.write(&b, 1);
  f.close();
  try {
    load_weights(path);
    FAIL() << "corrupt payload was accepted";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("checksum"), std::string::npos);
  }
}

TEST_F(WeightsFileTest, RejectsBadMagicTruncationAndWrongArchitecture) {
  UnetPlan plan = plan_for_input(12);
  plan.stage_channels = {8, 16};
  auto w = init_weights<float>(plan, 53);
  const auto path = (dir_ / "w.bin").string();
  save_weights(w, path);

  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.write("XXXX", 4);
  }
  EXPECT_THROW(load_weights(path), FormatError);

  const auto good = (dir_ / "good.bin").string();
  save_weights(w, good);
  const auto cut = (dir_ / "cut.bin").string();
  {
    std::ifstream in(good, std::ios::binary);
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
    std::ofstream out(cut, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
  }
  try {
    load_weights(cut);
    FAIL() << "truncated file was accepted";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("truncated"), std::string::npos);
  }

  UnetPlan other = plan_for_input(14);
  other.stage_channels = {8, 16};
  try {
    load_weights(good, other);
    FAIL() << "architecture mismatch was accepted";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("fingerprint"), std::string::npos);
  }

  EXPECT_THROW(load_weights((dir_ / "missing.bin").string()), IoError);
}

TEST(WeightsFile, SavedTrainingRunsAreIdentical) {
  auto samples = synthetic_samples(4, 61);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 4;
  cfg.val_fraction = 0.0;
  auto a = train(samples, cfg);
  auto b = train(samples, cfg);
  std::ostringstream sa, sb;
  save_weights(a.weights, sa);
  save_weights(b.weights, sb);
  EXPECT_EQ(sa.str(), sb.str());
}

}  // namespace
}  // namespace semnav
