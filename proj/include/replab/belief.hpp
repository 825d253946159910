#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "replab/rng.hpp"
#include "replab/strategy.hpp"

namespace replab {

inline constexpr double kLikelihoodClip = 1e-6;
inline constexpr double kTemperatureFloor = 1e-5;

// Log of the clipped probability that strategy `s` assigns to the observed
// action at round u, evaluated from the strategy owner's perspective
// (opp_view_h holds the first u-1 rounds in that owner's own view). For
// binary-action strategies the clip is applied to the probability of the
// first action; otherwise to the observed action's probability directly.
inline double log_likelihood_increment(const StrategySpec& s, int u, const History& opp_view_h,
                                       int observed_action) {
  const MixedAction d = s.action_distribution(u, opp_view_h);
  double prob;
  if (d.p.size() == 2) {
    double p0 = std::clamp(d.p[0], kLikelihoodClip, 1.0 - kLikelihoodClip);
    prob = observed_action == 0 ? p0 : 1.0 - p0;
  } else {
    prob = std::clamp(d.p.at(observed_action), kLikelihoodClip, 1.0 - kLikelihoodClip);
  }
  return std::log(prob);
}

// Discrete posterior over a strategy menu, maintained as accumulated per-round
// log-likelihood increments (log-domain only; 200-round products underflow in
// linear domain). A collusive prior enters as an initial log-weight tilt.
struct LabelPosterior {
  std::vector<StrategySpec> menu;
  std::vector<double> log_likelihoods;
  double temperature = 1.0;
  // Machine state per label, advanced as observations arrive. Equivalent to
  // re-running each strategy over the full opponent-view prefix.
  std::vector<int> states;
  int rounds_seen = 0;

  static LabelPosterior uniform_prior(std::vector<StrategySpec> menu_in, double temperature = 1.0) {
    LabelPosterior p;
    p.menu = std::move(menu_in);
    if (p.menu.empty()) throw std::invalid_argument("posterior requires a nonempty menu");
    p.log_likelihoods.assign(p.menu.size(), 0.0);
    p.temperature = temperature;
    for (const auto& s : p.menu) p.states.push_back(s.machine.start);
    return p;
  }

  static LabelPosterior tilted_prior(std::vector<StrategySpec> menu_in, std::string_view label,
                                     double beta, double temperature = 1.0) {
    LabelPosterior p = uniform_prior(std::move(menu_in), temperature);
    for (std::size_t i = 0; i < p.menu.size(); ++i)
      if (p.menu[i].label == label) {
        p.log_likelihoods[i] += beta;
        return p;
      }
    throw std::out_of_range("collusive prior label '" + std::string(label) + "' not in menu");
  }

  int label_index(std::string_view label) const {
    for (std::size_t i = 0; i < menu.size(); ++i)
      if (menu[i].label == label) return static_cast<int>(i);
    throw std::out_of_range("label '" + std::string(label) + "' not in menu");
  }

  // Consume one observed round (opponent played `observed`, we played `own`).
  // The increment is the clipped log-probability each menu strategy assigns to
  // `observed` at its current state; states then advance on the owner-view
  // joint action (observed, own).
  void observe(int observed, int own) {
    ++rounds_seen;
    for (std::size_t i = 0; i < menu.size(); ++i) {
      const auto& m = menu[i].machine;
      const MixedAction& d = m.emit[states[i]];
      double prob;
      if (d.p.size() == 2) {
        double p0 = std::clamp(d.p[0], kLikelihoodClip, 1.0 - kLikelihoodClip);
        prob = observed == 0 ? p0 : 1.0 - p0;
      } else {
        prob = std::clamp(d.p.at(observed), kLikelihoodClip, 1.0 - kLikelihoodClip);
      }
      log_likelihoods[i] += std::log(prob);
      states[i] = m.step(states[i], observed, own);
    }
  }
};

// Softmax of accumulated log-likelihoods at temperature max(tau, 1e-5),
// computed with max-subtraction.
inline std::vector<double> posterior_weights(const LabelPosterior& p) {
  double tau = std::max(p.temperature, kTemperatureFloor);
  double mx = *std::max_element(p.log_likelihoods.begin(), p.log_likelihoods.end());
  std::vector<double> w(p.log_likelihoods.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = std::exp((p.log_likelihoods[i] - mx) / tau);
    sum += w[i];
  }
  for (double& x : w) x /= sum;
  return w;
}

inline int sample_label(const LabelPosterior& p, RngStream& rng) {
  auto w = posterior_weights(p);
  return rng.next_categorical(w);
}

// 1 - sum of squared weights: the probability that two independent posterior
// draws disagree. Zero iff the posterior is a point mass.
inline double collision_complement(std::span<const double> weights) {
  double s2 = 0.0;
  for (double w : weights) s2 += w * w;
  return 1.0 - s2;
}

// One-step posterior-predictive distribution over the opponent's next action:
// the weight-mixture of the menu strategies' current-state distributions.
// With a finite menu this mixture is the concrete behavioral representative
// planners best-respond to.
inline MixedAction posterior_predictive_next(const LabelPosterior& p) {
  auto w = posterior_weights(p);
  int n = p.menu.front().machine.n_own;
  MixedAction q;
  q.p.assign(n, 0.0);
  for (std::size_t i = 0; i < p.menu.size(); ++i) {
    const MixedAction& d = p.menu[i].machine.emit[p.states[i]];
    for (int a = 0; a < n; ++a) q.p[a] += w[i] * d.p[a];
  }
  return q;
}

}  // namespace replab
