// Copyright (c) the SVRC Authors. All rights reserved.
//
// Use of this source code is governed by the Apache License, Version 2.0
// that can be found in the LICENSE file.
//
// Acceptance suite: one pass/fail line per criterion. Criteria 1-5 and 10
// are property checks; 6-9 run on a desk-scale anchor plus three refined
// derivations trained inside this binary (a few minutes on one core).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <sstream>
#include <vector>

#include "svrc/annealing.hpp"
#include "svrc/bitstream.hpp"
#include "svrc/config.hpp"
#include "svrc/eval.hpp"
#include "svrc/gradcheck.hpp"
#include "svrc/image.hpp"
#include "svrc/range_coder.hpp"
#include "svrc/registry.hpp"
#include "svrc/synthetic.hpp"
#include "svrc/train.hpp"

using namespace svrc;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Check {
  int id;
  std::string name;
  Outcome outcome;
};

Tensor random_values(Rng& rng, Shape shape, double lo, double hi) {
  std::vector<double> v(shape_size(shape));
  for (double& x : v) x = rng.uniform(lo, hi);
  return Tensor::from_values(std::move(shape), std::move(v));
}

StanhLayer random_layer(Rng& rng, int levels) {
  std::vector<double> w(levels - 1), b(levels - 1);
  for (double& wi : w) wi = rng.uniform(0.2, 2.0);
  double acc = rng.uniform(-4.0, -2.0);
  for (double& bi : b) {
    bi = acc;
    acc += rng.uniform(0.1, 1.5);
  }
  return StanhLayer::from_parameters(std::move(w), std::move(b));
}

// ---------------------------------------------------------------------------
// Criterion 1: quantizer exactness against a brute-force oracle.

Outcome criterion_quantizer_exactness() {
  const auto t0 = Clock::now();
  Rng rng(101);
  for (int pair = 0; pair < 10000; ++pair) {
    StanhLayer layer = random_layer(rng, 2 + static_cast<int>(rng.uniform_int(40)));
    const auto& boundaries = layer.boundaries();
    const auto levels = layer.reconstruction_levels();
    const double y = rng.uniform(-25.0, 25.0);

    int oracle = 0;  // linear scan with the same upper tie-break
    for (double b : boundaries) {
      if (y >= b) ++oracle;
    }
    auto hard = hard_quantize(Tensor::scalar(y), layer);
    if (hard.indices[0] != oracle || hard.values.item() != levels[oracle]) {
      return {false, "hard_quantize disagreed with the oracle at pair " +
                         std::to_string(pair)};
    }

    double dist = kInf;
    for (double b : boundaries) dist = std::min(dist, std::abs(y - b));
    if (dist >= 0.05) {
      const double soft = soft_quantize(Tensor::scalar(y), layer, 1e4).item();
      if (std::abs(soft - hard.values.item()) > 1e-6) {
        return {false, "soft/hard gap " + std::to_string(std::abs(soft - hard.values.item()))};
      }
    }
  }
  const double elapsed = seconds_since(t0);
  if (elapsed >= 5.0) return {false, "took " + std::to_string(elapsed) + " s (limit 5)"};
  std::ostringstream os;
  os << "10000 pairs, " << elapsed << " s";
  return {true, os.str()};
}

// ---------------------------------------------------------------------------
// Criterion 2: gradient suite against central finite differences.

struct GradStats {
  int checked = 0;
  int skipped = 0;
  bool ok = true;
  std::string detail;
};

// Compares an analytic gradient coordinate against central differences,
// with a two-step consistency probe that skips points straddling a
// piecewise-constant interval switch (the finite-difference oracle is only
// valid where the function is smooth).
void check_coordinate(const std::function<double(double)>& f, double x0,
                      double analytic, double h, GradStats& stats) {
  const double f1p = f(x0 + h), f1m = f(x0 - h);
  const double f2p = f(x0 + h / 2), f2m = f(x0 - h / 2);
  const double d1 = (f1p - f1m) / (2 * h);
  const double d2 = (f2p - f2m) / h;
  if (std::abs(d1 - d2) > 0.05 * std::max({std::abs(d1), std::abs(d2), 1e-3})) {
    ++stats.skipped;  // discontinuity straddled
    return;
  }
  ++stats.checked;
  if (std::abs(analytic - d2) > 1e-3 + 1e-4 * std::abs(d2)) {
    stats.ok = false;
    std::ostringstream os;
    os << "analytic " << analytic << " vs numeric " << d2 << " at x " << x0;
    stats.detail = os.str();
  }
}

Outcome criterion_gradient_suite() {
  const auto t0 = Clock::now();
  Rng rng(202);

  // (a) STanH gradients for y, w and b.
  for (int rep = 0; rep < 100; ++rep) {
    StanhLayer layer = random_layer(rng, 8);
    const double beta = rng.uniform(0.5, 8.0);
    Tensor y = random_values(rng, {3}, -4, 4);
    Tensor w = Tensor::from_values({7}, layer.step_weights());
    Tensor b = Tensor::from_values({7}, layer.boundaries());
    y.set_requires_grad(true);
    w.set_requires_grad(true);
    b.set_requires_grad(true);
    sum(soft_quantize(y, beta, w, b)).backward();

    GradStats stats;
    auto eval_with = [&](const Tensor& yy, const Tensor& ww, const Tensor& bb) {
      NoGradGuard guard;
      return sum(soft_quantize(yy, beta, ww, bb)).item();
    };
    for (size_t k = 0; k < y.size(); ++k) {
      check_coordinate(
          [&](double v) {
            Tensor probe = Tensor::from_values(y.shape(), y.values());
            probe.values()[k] = v;
            return eval_with(probe, w, b);
          },
          y.values()[k], y.grad()[k], 1e-5, stats);
    }
    for (size_t k = 0; k < w.size(); ++k) {
      check_coordinate(
          [&](double v) {
            Tensor probe = Tensor::from_values(w.shape(), w.values());
            probe.values()[k] = v;
            return eval_with(y, probe, b);
          },
          w.values()[k], w.grad()[k], 1e-5, stats);
    }
    for (size_t k = 0; k < b.size(); ++k) {
      check_coordinate(
          [&](double v) {
            Tensor probe = Tensor::from_values(b.shape(), b.values());
            probe.values()[k] = v;
            return eval_with(y, w, probe);
          },
          b.values()[k], b.grad()[k], 1e-5, stats);
    }
    if (!stats.ok) return {false, "STanH gradients: " + stats.detail};
  }

  // (b) Gaussian interval rate in y, mu, sigma.
  {
    StanhLayer layer = StanhLayer::init_uniform(9, -4, 4);
    QuantizerGrid grid = layer.grid();
    GradStats stats;
    for (int rep = 0; rep < 100; ++rep) {
      Tensor y = random_values(rng, {4}, -3.3, 3.3);
      Tensor mu = random_values(rng, {4}, -1, 1);
      Tensor sigma = random_values(rng, {4}, 0.3, 3.0);
      y.set_requires_grad(true);
      mu.set_requires_grad(true);
      sigma.set_requires_grad(true);
      gaussian_rate(y, mu, sigma, grid).backward();
      auto eval_rate = [&](const Tensor& a, const Tensor& m, const Tensor& s) {
        NoGradGuard guard;
        return gaussian_rate(a, m, s, grid).item();
      };
      for (size_t k = 0; k < y.size(); ++k) {
        check_coordinate(
            [&](double v) {
              Tensor p = Tensor::from_values(y.shape(), y.values());
              p.values()[k] = v;
              return eval_rate(p, mu, sigma);
            },
            y.values()[k], y.grad()[k], 1e-6, stats);
        check_coordinate(
            [&](double v) {
              Tensor p = Tensor::from_values(mu.shape(), mu.values());
              p.values()[k] = v;
              return eval_rate(y, p, sigma);
            },
            mu.values()[k], mu.grad()[k], 1e-6, stats);
        check_coordinate(
            [&](double v) {
              Tensor p = Tensor::from_values(sigma.shape(), sigma.values());
              p.values()[k] = v;
              return eval_rate(y, mu, p);
            },
            sigma.values()[k], sigma.grad()[k], 1e-6, stats);
      }
      if (!stats.ok) return {false, "Gaussian rate gradients: " + stats.detail};
    }
    if (stats.skipped > stats.checked / 10) {
      return {false, "Gaussian rate: too many skipped coordinates"};
    }
  }

  // (c) Full loss through a tiny codec, probing random parameters.
  {
    ModelConfig mc;
    mc.channels_main = 4;
    mc.channels_hyper = 2;
    mc.levels_main = 8;
    mc.levels_hyper = 6;
    mc.init_range = 6.0;
    AnchorModel model(mc, 404);
    model.set_transforms_trainable(true);
    model.set_quantizers_trainable(true);
    Tensor x = to_tensor(make_synthetic_image(32, 32, 405));

    auto loss_value = [&] {
      ForwardTrainResult fwd = model.forward_train(x, 2.0, 2.0);
      return rd_loss(x, fwd.x_hat, fwd.bits_z, fwd.bits_y, 650.0);
    };
    Tensor loss = loss_value();
    loss.backward();

    auto params = model.named_parameters();
    std::vector<std::vector<double>> grads;
    grads.reserve(params.size());
    for (auto& [name, tensor] : params) {
      grads.push_back(tensor.has_grad() ? tensor.grad()
                                        : std::vector<double>(tensor.size(), 0.0));
    }

    GradStats stats;
    for (int probe = 0; probe < 100; ++probe) {
      const size_t pi = rng.uniform_int(params.size());
      Tensor tensor = params[pi].second;
      const size_t k = rng.uniform_int(tensor.size());
      const double saved = tensor.values()[k];
      check_coordinate(
          [&](double v) {
            NoGradGuard guard;
            tensor.values()[k] = v;
            model.main_layer().refresh_from_raw();
            model.hyper_layer().refresh_from_raw();
            const double out = loss_value().item();
            tensor.values()[k] = saved;
            model.main_layer().refresh_from_raw();
            model.hyper_layer().refresh_from_raw();
            return out;
          },
          saved, grads[pi][k], 1e-6, stats);
    }
    if (!stats.ok) return {false, "full-loss gradients: " + stats.detail};
    if (stats.checked < 85) {
      return {false, "full-loss gradients: only " + std::to_string(stats.checked) +
                         " smooth probes out of 100"};
    }
  }

  // (d) Every autodiff primitive, 100 cases each.
  {
    struct Prim {
      const char* name;
      std::function<Tensor(const Tensor&)> apply;
      double lo, hi;
    };
    const std::vector<Prim> prims = {
        {"tanh", [](const Tensor& t) { return tanh(t); }, -2, 2},
        {"exp", [](const Tensor& t) { return exp(t); }, -1, 1},
        {"log", [](const Tensor& t) { return log(t); }, 0.4, 3},
        {"square", [](const Tensor& t) { return square(t); }, -2, 2},
        {"softplus", [](const Tensor& t) { return softplus(t); }, -3, 3},
        {"normal_cdf", [](const Tensor& t) { return normal_cdf(t); }, -2, 2},
        {"leaky_relu", [](const Tensor& t) { return leaky_relu(t, 0.2); }, 0.3, 2},
        {"clamp", [](const Tensor& t) { return clamp(t, -3, 3); }, -1, 1},
        {"mul_scalar", [](const Tensor& t) { return mul_scalar(t, 1.7); }, -2, 2},
        {"mean", [](const Tensor& t) { return mean(square(t)); }, -2, 2},
    };
    for (const Prim& prim : prims) {
      GradStats stats;
      for (int rep = 0; rep < 100; ++rep) {
        Tensor v = random_values(rng, {3}, prim.lo, prim.hi);
        v.set_requires_grad(true);
        sum(prim.apply(v)).backward();
        for (size_t k = 0; k < v.size(); ++k) {
          check_coordinate(
              [&](double val) {
                NoGradGuard guard;
                Tensor p = Tensor::from_values(v.shape(), v.values());
                p.values()[k] = val;
                return sum(prim.apply(p)).item();
              },
              v.values()[k], v.grad()[k], 1e-5, stats);
        }
      }
      if (!stats.ok) {
        return {false, std::string(prim.name) + " gradients: " + stats.detail};
      }
    }
    // Binary ops and the convolutions.
    for (int rep = 0; rep < 100; ++rep) {
      Tensor a = random_values(rng, {2, 4, 4}, -1, 1);
      Tensor w = random_values(rng, {2, 2, 4, 4}, -0.5, 0.5);
      Tensor bias = random_values(rng, {2}, -0.2, 0.2);
      a.set_requires_grad(true);
      w.set_requires_grad(true);
      bias.set_requires_grad(true);
      sum(square(conv_transpose2d(conv2d(a, w, bias, 2, 1), w, bias, 2, 1))).backward();
      GradStats stats;
      auto loss_of = [&](const Tensor& aa, const Tensor& ww, const Tensor& bb) {
        NoGradGuard guard;
        return sum(square(conv_transpose2d(conv2d(aa, ww, bb, 2, 1), ww, bb, 2, 1))).item();
      };
      const size_t ka = rng.uniform_int(a.size());
      check_coordinate(
          [&](double v) {
            Tensor p = Tensor::from_values(a.shape(), a.values());
            p.values()[ka] = v;
            return loss_of(p, w, bias);
          },
          a.values()[ka], a.grad()[ka], 1e-5, stats);
      const size_t kw = rng.uniform_int(w.size());
      check_coordinate(
          [&](double v) {
            Tensor p = Tensor::from_values(w.shape(), w.values());
            p.values()[kw] = v;
            return loss_of(a, p, bias);
          },
          w.values()[kw], w.grad()[kw], 1e-5, stats);
      if (!stats.ok) return {false, "conv gradients: " + stats.detail};
    }
  }

  const double elapsed = seconds_since(t0);
  if (elapsed >= 60.0) return {false, "took " + std::to_string(elapsed) + " s (limit 60)"};
  std::ostringstream os;
  os << "STanH/Gaussian/full-loss/primitive gradients, " << elapsed << " s";
  return {true, os.str()};
}

// ---------------------------------------------------------------------------
// Criterion 3: reconstruction-level algebra.

Outcome criterion_level_algebra() {
  StanhLayer fixture = StanhLayer::from_parameters({1, 2, 1}, {-1.5, 0, 1.5});
  if (fixture.reconstruction_levels() != std::vector<double>{-2, -1, 1, 2}) {
    return {false, "w=(1,2,1) fixture mismatch"};
  }

  Rng rng(303);
  for (int rep = 0; rep < 200; ++rep) {
    StanhLayer layer = random_layer(rng, 3 + static_cast<int>(rng.uniform_int(30)));
    const auto levels = layer.reconstruction_levels();
    const auto& w = layer.step_weights();
    // Direct prefix-sum form versus the recursion.
    double total = std::accumulate(w.begin(), w.end(), 0.0);
    double expect = -0.5 * total;
    for (size_t i = 0; i < levels.size(); ++i) {
      if (std::abs(levels[i] - expect) > 1e-12) {
        return {false, "recursion disagreed with prefix-sum form"};
      }
      if (i < w.size()) expect += w[i];
    }
  }

  StanhLayer paper_init = StanhLayer::init_uniform(60, -30, 30);
  const auto levels = paper_init.reconstruction_levels();
  if (std::abs(levels.front() + 30.0) > 1e-12 || std::abs(levels.back() - 30.0) > 1e-12) {
    return {false, "init_uniform(60,-30,30) endpoints off"};
  }
  return {true, "recursion exact; endpoints +/-30 within 1e-12"};
}

// ---------------------------------------------------------------------------
// Criterion 4: annealing schedule.

Outcome criterion_annealing() {
  Config defaults;
  if (defaults.k_velocity != 15.0) return {false, "default K is not 15"};

  AnnealingState first(4040, defaults.k_velocity);
  if (first.step(7.0) != 1.0) return {false, "beta_1 != 1"};
  if (first.beta_max() != 1.0) return {false, "beta_max_1 != 1"};

  Rng rng(404);
  AnnealingState state(4041, defaults.k_velocity);
  state.step(0.0);
  std::vector<double> gaps;
  for (int i = 0; i < 5000; ++i) {
    gaps.push_back(rng.uniform(0.0, 0.3));
    state.step(gaps.back());
  }
  double sum = 0.0;
  for (double g : gaps) sum += g;
  if (state.beta_max() != 1.0 + defaults.k_velocity * sum) {
    return {false, "beta_max drifted from 1 + K * sum(E)"};
  }

  AnnealingState draws(4042, 15.0);
  draws.step(0.0);
  draws.step(50.0);
  const double ceiling = draws.beta_max();
  for (int i = 0; i < 1000000; ++i) {
    const double beta = draws.step(0.0);
    if (beta < 1.0 || beta > ceiling) {
      return {false, "draw " + std::to_string(beta) + " left [1, beta_max]"};
    }
  }
  return {true, "exact ceiling accounting; 1e6 draws in range; K = 15"};
}

// ---------------------------------------------------------------------------
// Criterion 5: range coding.

Outcome criterion_coding() {
  Rng rng(505);
  for (int rep = 0; rep < 1000; ++rep) {
    const int levels = 2 + static_cast<int>(rng.uniform_int(100));
    std::vector<double> probs(levels);
    for (double& p : probs) p = rng.uniform() < 0.25 ? 0.0 : rng.uniform();
    if (std::accumulate(probs.begin(), probs.end(), 0.0) == 0.0) probs[0] = 1;
    CodingTable table = build_coding_table(probs, 16);
    const size_t n = rng.uniform_int(300);
    std::vector<int32_t> symbols(n);
    std::vector<const CodingTable*> tables(n, &table);
    for (auto& s : symbols) {
      const uint32_t slot = static_cast<uint32_t>(rng.uniform_int(table.total()));
      int32_t sym = 0;
      while (table.cum[sym + 1] <= slot) ++sym;
      s = sym;
    }
    auto bytes = range_encode(symbols, tables);
    if (range_decode(bytes, tables) != symbols) {
      return {false, "round trip failed at rep " + std::to_string(rep)};
    }
  }

  // Length within 1% + flush overhead of the table cross-entropy.
  {
    std::vector<double> pmf = {0.35, 0.25, 0.18, 0.1, 0.06, 0.035, 0.02, 0.005};
    CodingTable table = build_coding_table(pmf, 16);
    const size_t n = 20000;
    std::vector<int32_t> symbols(n);
    std::vector<const CodingTable*> tables(n, &table);
    double ideal_bits = 0.0;
    for (auto& s : symbols) {
      const uint32_t slot = static_cast<uint32_t>(rng.uniform_int(table.total()));
      int32_t sym = 0;
      while (table.cum[sym + 1] <= slot) ++sym;
      s = sym;
      ideal_bits -= std::log2(static_cast<double>(table.counts[sym]) / table.total());
    }
    const double coded_bits = 8.0 * static_cast<double>(range_encode(symbols, tables).size());
    if (coded_bits > ideal_bits * 1.01 + 8 * 6 || coded_bits < ideal_bits * 0.99) {
      return {false, "coded " + std::to_string(coded_bits) + " bits vs ideal " +
                         std::to_string(ideal_bits)};
    }
  }

  // Discretized Gaussian PMF over a STanH grid sums to 1.
  for (int rep = 0; rep < 100; ++rep) {
    StanhLayer layer = random_layer(rng, 4 + static_cast<int>(rng.uniform_int(30)));
    QuantizerGrid grid = layer.grid();
    const double mu = rng.uniform(-3, 3), sigma = rng.uniform(0.2, 5.0);
    double total = 0.0;
    for (int k = 0; k < grid.level_count(); ++k) {
      const double hi = std::isinf(grid.right_bound[k])
                            ? 1.0
                            : std_normal_cdf((grid.levels[k] + grid.right_bound[k] - mu) / sigma);
      const double lo = std::isinf(grid.left_bound[k])
                            ? 0.0
                            : std_normal_cdf((grid.levels[k] - grid.left_bound[k] - mu) / sigma);
      total += hi - lo;
    }
    if (std::abs(total - 1.0) > 1e-6) {
      return {false, "PMF sum " + std::to_string(total)};
    }
  }
  return {true, "1000 round trips exact; length within 1%; PMF sums to 1"};
}

// ---------------------------------------------------------------------------
// Criteria 6-9 share one desk-scale training run.

struct DeskRun {
  bool trained = false;
  std::string failure;
  fs::path registry_dir;
  double train_seconds = 0.0;
  double max_refine_seconds = 0.0;
  std::vector<double> refine_lambdas;
  std::vector<uint8_t> non_stanh_before;  // captured before any refinement
  AnchorModel anchor;
  std::vector<Derivation> derivations;
};

DeskRun train_desk_models() {
  DeskRun run;
  run.registry_dir =
      fs::temp_directory_path() / ("svrc_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(run.registry_dir);

  std::vector<Tensor> train_images;
  for (int i = 0; i < 12; ++i) {
    train_images.push_back(to_tensor(make_synthetic_image(192, 192, 9000 + i)));
  }
  PatchSource data(std::move(train_images));

  ModelConfig mc;
  mc.channels_main = 32;
  mc.channels_hyper = 16;
  mc.levels_main = 60;
  mc.levels_hyper = 40;
  mc.init_range = 30.0;
  mc.lambda = 0.01;

  TrainConfig tc;
  tc.lambda = 0.01;
  tc.seed = 2026;
  tc.steps = 2000;
  tc.batch = 2;
  tc.patch = 64;
  tc.learning_rate = 1e-3;  // desk-scale steps budget needs the faster rate
  tc.steps_per_epoch = 100;

  const auto t0 = Clock::now();
  try {
    run.anchor = train_anchor(data, mc, tc);
  } catch (const std::exception& e) {
    run.failure = std::string("anchor training failed: ") + e.what();
    return run;
  }
  run.train_seconds = seconds_since(t0);
  run.anchor.set_id(1);
  run.non_stanh_before = run.anchor.serialize_non_stanh_weights();

  Registry registry(run.registry_dir);
  registry.save_anchor(run.anchor);

  run.refine_lambdas = {0.004, 0.001, 0.00025};
  uint16_t next_id = 1;
  for (double lambda : run.refine_lambdas) {
    TrainConfig rc = tc;
    rc.lambda = lambda;
    rc.steps = 900;
    rc.batch = 1;
    rc.learning_rate = 2e-3;
    rc.seed = 5000 + next_id;
    const auto r0 = Clock::now();
    try {
      Derivation d = refine_derivation(run.anchor, lambda, data, rc);
      d.id = next_id++;
      registry.save_derivation(d);
      run.derivations.push_back(std::move(d));
    } catch (const std::exception& e) {
      run.failure = std::string("refinement failed: ") + e.what();
      return run;
    }
    run.max_refine_seconds = std::max(run.max_refine_seconds, seconds_since(r0));
  }
  run.trained = true;
  return run;
}

Outcome criterion_variable_rate(const DeskRun& run, const Tensor& eval_image) {
  if (!run.trained) return {false, run.failure};
  if (run.train_seconds >= 1800.0) {
    return {false, "anchor took " + std::to_string(run.train_seconds) + " s (limit 1800)"};
  }
  if (run.max_refine_seconds >= 180.0) {
    return {false, "slowest refinement took " + std::to_string(run.max_refine_seconds) +
                       " s (limit 180)"};
  }

  // Frozen anchor: three refinements ran against it, yet every non-STanH
  // weight must be bitwise what it was right after training.
  if (run.anchor.serialize_non_stanh_weights() != run.non_stanh_before) {
    return {false, "refinement modified anchor transform weights"};
  }

  std::vector<double> bpps, psnrs;
  auto measure = [&](const StanhLayer& main_layer, const StanhLayer& hyper_layer,
                     BitstreamHeader header) {
    EncodeResult enc =
        encode_image(eval_image, run.anchor, main_layer, hyper_layer, header);
    Tensor decoded = decode_image(enc.stream, run.anchor, main_layer, hyper_layer);
    bpps.push_back(bits_per_pixel(enc.stream.serialize().size(), eval_image.dim(2),
                                  eval_image.dim(1)));
    psnrs.push_back(psnr(eval_image, decoded));
  };

  BitstreamHeader anchor_header;
  anchor_header.anchor_id = 1;
  measure(run.anchor.main_layer(), run.anchor.hyper_layer(), anchor_header);
  for (const Derivation& d : run.derivations) {
    BitstreamHeader h;
    h.anchor_id = 1;
    h.mode = static_cast<uint8_t>(LayerMode::kDerivation);
    h.id0 = d.id;
    measure(d.main_layer, d.hyper_layer, h);
  }

  std::ostringstream os;
  os << "bpp:";
  for (double b : bpps) os << " " << b;
  os << " psnr:";
  for (double p : psnrs) os << " " << p;
  os << " train " << static_cast<int>(run.train_seconds) << " s, refine <= "
     << static_cast<int>(run.max_refine_seconds) << " s";

  for (size_t i = 0; i + 1 < bpps.size(); ++i) {
    if (!(bpps[i] > bpps[i + 1])) return {false, "bpp ordering broken: " + os.str()};
    if (!(psnrs[i] > psnrs[i + 1])) return {false, "PSNR ordering broken: " + os.str()};
  }
  return {true, os.str()};
}

Outcome criterion_rate_fidelity(const DeskRun& run) {
  if (!run.trained) return {false, run.failure};
  double worst = 0.0;
  for (int i = 0; i < 5; ++i) {
    Tensor x = to_tensor(make_synthetic_image(512, 512, 7100 + i));
    BitstreamHeader header;
    header.anchor_id = 1;
    EncodeResult enc = encode_image(x, run.anchor, run.anchor.main_layer(),
                                    run.anchor.hyper_layer(), header);
    const double pixels = static_cast<double>(x.dim(1)) * x.dim(2);
    const double measured =
        bits_per_pixel(enc.stream.serialize().size(), x.dim(2), x.dim(1));
    const double estimate = (enc.estimated_bits_z + enc.estimated_bits_y) / pixels;
    const double rel = std::abs(measured - estimate) / estimate;
    worst = std::max(worst, rel);
  }
  std::ostringstream os;
  os << "worst relative gap " << worst * 100.0 << " % over 5 held-out images";
  if (worst >= 0.03) return {false, os.str()};
  return {true, os.str()};
}

Outcome criterion_interpolation(const DeskRun& run, const Tensor& eval_image) {
  if (!run.trained) return {false, run.failure};
  Registry registry(run.registry_dir);
  const Derivation& d0 = run.derivations[0];
  const Derivation& d1 = run.derivations[1];

  auto bpp_of = [&](const StanhLayer& main_layer, const StanhLayer& hyper_layer,
                    BitstreamHeader header, bool* decode_ok) {
    EncodeResult enc =
        encode_image(eval_image, run.anchor, main_layer, hyper_layer, header);
    Bitstream stream = Bitstream::deserialize(enc.stream.serialize());
    auto [rm, rh] = registry.resolve_layers(run.anchor, stream.header);
    Tensor decoded = decode_image(stream, run.anchor, rm, rh);
    *decode_ok = decoded.values() == enc.reconstruction.values();
    return bits_per_pixel(enc.stream.serialize().size(), eval_image.dim(2),
                          eval_image.dim(1));
  };

  bool ok = true;
  BitstreamHeader h0;
  h0.anchor_id = 1;
  h0.mode = static_cast<uint8_t>(LayerMode::kDerivation);
  h0.id0 = d0.id;
  const double bpp0 = bpp_of(d0.main_layer, d0.hyper_layer, h0, &ok);
  if (!ok) return {false, "endpoint D1 decode mismatch"};
  h0.id0 = d1.id;
  const double bpp1 = bpp_of(d1.main_layer, d1.hyper_layer, h0, &ok);
  if (!ok) return {false, "endpoint D2 decode mismatch"};

  const double lo = std::min(bpp0, bpp1), hi = std::max(bpp0, bpp1);
  const double margin = 0.05 * (hi - lo);
  std::ostringstream os;
  os << "endpoints " << bpp0 << " / " << bpp1 << " bpp; interpolated:";
  for (int i = 1; i <= 9; ++i) {
    const double rho = i / 10.0;
    BitstreamHeader h;
    h.anchor_id = 1;
    h.mode = static_cast<uint8_t>(LayerMode::kInterpolation);
    h.id0 = d0.id;
    h.id1 = d1.id;
    h.rho_fp = BitstreamHeader::quantize_rho(rho);
    const double rho_q = h.rho();
    StanhLayer main_layer = interpolate(d0.main_layer, d1.main_layer, rho_q);
    StanhLayer hyper_layer = interpolate(d0.hyper_layer, d1.hyper_layer, rho_q);
    bool decode_ok = false;
    const double bpp = bpp_of(main_layer, hyper_layer, h, &decode_ok);
    os << " " << bpp;
    if (!decode_ok) return {false, "interpolated stream failed to decode at rho " +
                                       std::to_string(rho)};
    if (bpp < lo - margin || bpp > hi + margin) {
      os << " <- outside [" << lo - margin << ", " << hi + margin << "]";
      return {false, os.str()};
    }
  }
  return {true, os.str()};
}

Outcome criterion_interval_analysis(const DeskRun& run) {
  if (!run.trained) return {false, run.failure};
  std::vector<std::pair<std::string, StanhLayer>> layers = {
      {"A1", run.anchor.main_layer()},
      {"D3", run.derivations.back().main_layer},
  };
  IntervalReport report = interval_report(layers, 1);
  double anchor_width = 0.0, derivation_width = 0.0;
  for (const IntervalRow& row : report.rows) {
    if (row.label == "A1") anchor_width = row.width;
    if (row.label == "D3") derivation_width = row.width;
  }
  std::ostringstream os;
  os << "central width anchor " << anchor_width << " vs lowest-lambda derivation "
     << derivation_width;
  if (!(derivation_width >= anchor_width)) return {false, os.str()};
  return {true, os.str()};
}

Outcome criterion_storage(const DeskRun& run) {
  if (!run.trained) return {false, run.failure};
  Registry registry(run.registry_dir);
  const auto anchor_size = fs::file_size(registry.anchor_path(1));
  const auto derivation_size =
      fs::file_size(registry.derivation_path(1, run.derivations[0].id));

  const size_t lm = 60, lh = 40;
  const size_t doubles = 2 * (lm - 1) + 2 * (lh - 1);
  const size_t expected = 46 + 2 * 7 + 8 * doubles;  // file header + 2 STNH records
  std::ostringstream os;
  os << "derivation " << derivation_size << " bytes (" << doubles
     << " stored parameters), anchor " << anchor_size << " bytes";
  if (derivation_size != expected) {
    os << "; expected " << expected;
    return {false, os.str()};
  }
  if (anchor_size < 100 * derivation_size) {
    os << "; anchor file implausibly small";
    return {false, os.str()};
  }
  return {true, os.str()};
}

}  // namespace

int main() {
  std::vector<Check> checks;
  checks.push_back({1, "quantizer exactness", criterion_quantizer_exactness()});
  checks.push_back({2, "gradient suite", criterion_gradient_suite()});
  checks.push_back({3, "level algebra", criterion_level_algebra()});
  checks.push_back({4, "annealing schedule", criterion_annealing()});
  checks.push_back({5, "range coding", criterion_coding()});

  DeskRun run = train_desk_models();
  Tensor eval_image = to_tensor(make_synthetic_image(256, 256, 7777));

  checks.push_back({6, "end-to-end rate fidelity", criterion_rate_fidelity(run)});
  checks.push_back({7, "variable-rate behavior", criterion_variable_rate(run, eval_image)});
  checks.push_back({8, "interpolation sweep", criterion_interpolation(run, eval_image)});
  checks.push_back({9, "interval analysis", criterion_interval_analysis(run)});
  checks.push_back({10, "storage arithmetic", criterion_storage(run)});

  fs::remove_all(run.registry_dir);

  int failures = 0;
  for (const Check& check : checks) {
    const bool pass = check.outcome.pass;
    failures += pass ? 0 : 1;
    std::printf("[%s] criterion %d: %s: %s\n", pass ? "PASS" : "FAIL", check.id,
                check.name.c_str(), check.outcome.detail.c_str());
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(checks.size()) - failures,
              checks.size());
  return failures == 0 ? 0 : 1;
}
