#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "replab/game.hpp"
#include "replab/rng.hpp"

namespace replab {

// Offset grid for the unknown-mean payoff menu, in multiples of sigma.
inline constexpr std::array<double, 9> kOffsetGrid = {-2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0};
inline constexpr int kZeroOffsetIndex = 4;

// Known-noise / unknown-mean machinery: a per-joint-action discrete Gaussian
// posterior over the offset grid, product-form across joint actions. The
// base matrix centers the candidate means (the true matrix in experiments),
// so offset 0 is always in the menu and the truth has positive prior mass.
struct OffsetPosterior {
  std::vector<std::array<double, 9>> log_weights;  // per own-view joint action
  double sigma = 1.0;
  std::vector<double> base;  // own-view mean matrix the grid is centered on

  static OffsetPosterior uniform_prior(std::vector<double> base_matrix, double sigma) {
    if (sigma <= 0.0) throw std::invalid_argument("sigma must be positive");
    OffsetPosterior p;
    p.sigma = sigma;
    p.base = std::move(base_matrix);
    p.log_weights.assign(p.base.size(), {});
    return p;
  }

  std::array<double, 9> weights_for(int joint) const {
    const auto& lw = log_weights.at(joint);
    double mx = *std::max_element(lw.begin(), lw.end());
    std::array<double, 9> w{};
    double sum = 0.0;
    for (int k = 0; k < 9; ++k) {
      w[k] = std::exp(lw[k] - mx);
      sum += w[k];
    }
    for (double& x : w) x /= sum;
    return w;
  }
};

// Noise std used in the unknown-payoff experiments: sigma_g = delta_min.
inline double sigma_for_game(const GameSpec& g) { return g.delta_min; }

// Gaussian-likelihood update for one observed reward. Only the visited joint
// action's offset vector changes (the posterior factorizes action-wise).
inline OffsetPosterior update(OffsetPosterior post, int joint, double reward) {
  auto& lw = post.log_weights.at(joint);
  double s2 = 2.0 * post.sigma * post.sigma;
  for (int k = 0; k < 9; ++k) {
    double mean = post.base.at(joint) + kOffsetGrid[k] * post.sigma;
    lw[k] += -(reward - mean) * (reward - mean) / s2;
  }
  return post;
}

// Draw one offset per joint action independently from its marginal and return
// base + offset * sigma entrywise.
inline std::vector<double> sample_mean_matrix(const OffsetPosterior& post, RngStream& rng) {
  std::vector<double> m(post.base.size());
  for (std::size_t a = 0; a < post.base.size(); ++a) {
    auto w = post.weights_for(static_cast<int>(a));
    int k = rng.next_categorical(w);
    m[a] = post.base[a] + kOffsetGrid[k] * post.sigma;
  }
  return m;
}

// Posterior mass on the base (true) matrix: the product over joint actions of
// the weight on offset 0. Also reported as delta = 1 - truth_mass.
struct TruthMass {
  double truth_mass;
  double delta;
};

inline TruthMass truth_mass(const OffsetPosterior& post) {
  double tm = 1.0;
  for (std::size_t a = 0; a < post.base.size(); ++a) tm *= post.weights_for(static_cast<int>(a))[kZeroOffsetIndex];
  return {tm, 1.0 - tm};
}

// Per-action argmax offsets, for diagnostics serialization.
inline std::vector<double> map_offsets(const OffsetPosterior& post) {
  std::vector<double> out(post.base.size());
  for (std::size_t a = 0; a < post.base.size(); ++a) {
    auto w = post.weights_for(static_cast<int>(a));
    out[a] = kOffsetGrid[static_cast<int>(std::max_element(w.begin(), w.end()) - w.begin())];
  }
  return out;
}

// Posterior-mode matrix: base + argmax offset per action.
inline std::vector<double> map_mean_matrix(const OffsetPosterior& post) {
  std::vector<double> m = map_offsets(post);
  for (std::size_t a = 0; a < m.size(); ++a) m[a] = post.base[a] + m[a] * post.sigma;
  return m;
}

}  // namespace replab
