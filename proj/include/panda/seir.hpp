// Copyright 2026 The PANDA Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "panda/errors.hpp"

namespace panda {

// Compartmental SEIR parameters; rates are per unit time, dt is the
// length of one tick in those units.
struct SeirParams {
  double beta = 0.3;
  double sigma = 0.2;
  double gamma = 0.1;
  double n = 1000.0;
  double i0 = 1.0;
  double e0 = 0.0;
  double dt = 0.1;

  void validate() const {
    auto finite_nonneg = [](double v) { return v >= 0.0 && std::isfinite(v); };
    if (!finite_nonneg(beta)) throw InvalidArgument("beta must be >= 0", "beta");
    if (!finite_nonneg(sigma)) throw InvalidArgument("sigma must be >= 0", "sigma");
    if (!finite_nonneg(gamma)) throw InvalidArgument("gamma must be >= 0", "gamma");
    if (!(n > 0.0) || !std::isfinite(n)) {
      throw InvalidArgument("population must be positive", "n");
    }
    if (!finite_nonneg(i0)) throw InvalidArgument("i0 must be >= 0", "i0");
    if (!finite_nonneg(e0)) throw InvalidArgument("e0 must be >= 0", "e0");
    if (i0 + e0 > n) throw InvalidArgument("i0 + e0 exceeds population", "i0");
    if (!(dt > 0.0) || !std::isfinite(dt)) {
      throw InvalidArgument("dt must be positive", "dt");
    }
  }
};

struct SeirState {
  double s = 0.0;
  double e = 0.0;
  double i = 0.0;
  double r = 0.0;

  double total() const noexcept { return s + e + i + r; }
};

struct EpidemicSeries {
  std::vector<SeirState> states;       // ticks + 1 entries, states[0] initial
  std::vector<double> new_infections;  // S -> E flow during each tick
  // A step drove a compartment negative (dt too large); it was clamped at 0
  // and conservation no longer holds from that tick on.
  bool clamped = false;
};

// Forward Euler. contact_scale, when given, multiplies beta tick by tick
// (entries past its end use 1).
inline EpidemicSeries seir_simulate(const SeirParams& p, std::int64_t ticks,
                                    std::span<const double> contact_scale = {}) {
  p.validate();
  if (ticks < 0) throw InvalidArgument("ticks must be >= 0", "ticks");
  EpidemicSeries out;
  out.states.reserve(static_cast<std::size_t>(ticks) + 1);
  out.new_infections.reserve(static_cast<std::size_t>(ticks));
  SeirState x{p.n - p.i0 - p.e0, p.e0, p.i0, 0.0};
  out.states.push_back(x);
  for (std::int64_t t = 0; t < ticks; ++t) {
    const double scale =
        static_cast<std::size_t>(t) < contact_scale.size() ? contact_scale[t] : 1.0;
    const double infection = p.beta * scale * x.s * x.i / p.n * p.dt;
    const double onset = p.sigma * x.e * p.dt;
    const double recovery = p.gamma * x.i * p.dt;
    x.s -= infection;
    x.e += infection - onset;
    x.i += onset - recovery;
    x.r += recovery;
    for (double* v : {&x.s, &x.e, &x.i, &x.r}) {
      if (*v < 0.0) {
        *v = 0.0;
        out.clamped = true;
      }
    }
    out.new_infections.push_back(infection);
    out.states.push_back(x);
  }
  return out;
}

// Least-squares fit of beta to a new-infection series with every other
// parameter of `known` held fixed; returns beta_hat / gamma. A coarse
// log-spaced scan locates the basin and Brent's method refines it.
inline double estimate_r0(std::span<const double> new_infections,
                          const SeirParams& known,
                          std::span<const double> contact_scale = {}) {
  known.validate();
  if (!(known.gamma > 0.0)) {
    throw InvalidArgument("gamma must be positive to form beta/gamma", "gamma");
  }
  bool any_positive = false;
  for (double c : new_infections) {
    if (!(c >= 0.0) || !std::isfinite(c)) {
      throw InvalidArgument("case counts must be finite and >= 0", "series");
    }
    any_positive = any_positive || c > 0.0;
  }
  if (!any_positive) {
    throw InsufficientSignal("case series has no positive entry");
  }
  if (known.i0 + known.e0 <= 0.0) {
    throw InsufficientSignal("model with no initial cases cannot produce cases");
  }

  const auto ticks = static_cast<std::int64_t>(new_infections.size());
  auto sse = [&](double beta) {
    SeirParams p = known;
    p.beta = beta;
    const auto sim = seir_simulate(p, ticks, contact_scale);
    double sum = 0.0;
    for (std::size_t t = 0; t < new_infections.size(); ++t) {
      const double r = sim.new_infections[t] - new_infections[t];
      sum += r * r;
    }
    return sum;
  };

  // R0 from 1e-3 to 1e2.
  constexpr int kScan = 241;
  const double lo = std::log(1e-3 * known.gamma);
  const double hi = std::log(1e2 * known.gamma);
  std::vector<double> grid(kScan);
  int best = 0;
  double best_sse = std::numeric_limits<double>::infinity();
  for (int k = 0; k < kScan; ++k) {
    grid[k] = std::exp(lo + (hi - lo) * k / (kScan - 1));
    const double v = sse(grid[k]);
    if (v < best_sse) {
      best_sse = v;
      best = k;
    }
  }
  const double a = grid[std::max(best - 1, 0)];
  const double b = grid[std::min(best + 1, kScan - 1)];
  const auto [beta_hat, fit] = boost::math::tools::brent_find_minima(
      sse, a, b, std::numeric_limits<double>::digits / 2);
  const double beta = fit <= best_sse ? beta_hat : grid[best];
  return beta / known.gamma;
}

}  // namespace panda
