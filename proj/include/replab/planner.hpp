#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "replab/belief.hpp"
#include "replab/game.hpp"
#include "replab/rng.hpp"
#include "replab/strategy.hpp"

namespace replab {

struct PlannerConfig {
  int rollout_samples = 1;  // K
  int horizon = 20;         // H; 0 plays out to the end of the game
  double gamma = 0.95;
  int total_rounds = 200;  // T
  std::uint64_t tie_break_salt = 0;

  void validate() const {
    if (rollout_samples < 1) throw std::invalid_argument("rollout_samples must be >= 1");
    if (gamma <= 0.0 || gamma > 1.0) throw std::invalid_argument("gamma must be in (0,1]");
    if (total_rounds < 1) throw std::invalid_argument("total_rounds must be >= 1");
    if (horizon < 0) throw std::invalid_argument("horizon must be >= 0");
  }
};

// One simulated trajectory's discounted payoff sum from round t to
// tbar = min(T, t+H-1) (H>0) or T (H=0). Both strategies advance on the
// growing simulated history from their own views; stage payoffs come from
// `own_payoff`, indexed by the decider's own-view joint action, which is
// either the true matrix or a sampled mean matrix.
inline double rollout_value(const GameSpec& game, const StrategySpec& self_strat,
                            const StrategySpec& opp_strat, const History& own_h, int t,
                            const PlannerConfig& cfg, RngStream rng,
                            std::span<const double> own_payoff) {
  cfg.validate();
  if (static_cast<int>(own_h.size()) != t - 1)
    throw std::invalid_argument("own history must have t-1 rounds");
  int tbar = cfg.horizon > 0 ? std::min(cfg.total_rounds, t + cfg.horizon - 1) : cfg.total_rounds;
  int self_state = self_strat.machine.start;
  int opp_state = opp_strat.machine.start;
  for (const auto& r : own_h) {
    self_state = self_strat.machine.step(self_state, r[0], r[1]);
    opp_state = opp_strat.machine.step(opp_state, r[1], r[0]);
  }
  const int n_opp = self_strat.machine.n_opp;
  double value = 0.0;
  double disc = 1.0;
  for (int r = t; r <= tbar; ++r) {
    int a_self = rng.next_categorical(self_strat.machine.emit[self_state].p);
    int a_opp = rng.next_categorical(opp_strat.machine.emit[opp_state].p);
    value += disc * own_payoff[static_cast<std::size_t>(a_self) * n_opp + a_opp];
    disc *= cfg.gamma;
    self_state = self_strat.machine.step(self_state, a_self, a_opp);
    opp_state = opp_strat.machine.step(opp_state, a_opp, a_self);
  }
  return value;
}

// Lowest-hash-wins selection among candidates whose value ties the maximum.
inline int hash_tie_argmax(std::span<const double> values, const std::vector<StrategySpec>& menu,
                           int round, std::uint64_t salt) {
  double best = -std::numeric_limits<double>::infinity();
  for (double v : values) best = std::max(best, v);
  int chosen = -1;
  std::uint64_t chosen_hash = ~0ull;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] < best - kTieTol * std::max(1.0, std::abs(best))) continue;
    std::uint64_t h = tie_break_hash(menu[i].label, round, salt);
    if (chosen < 0 || h < chosen_hash) {
      chosen = static_cast<int>(i);
      chosen_hash = h;
    }
  }
  return chosen;
}

struct PsbrDecision {
  int sampled_opponent_label = -1;
  int chosen_self_label = -1;
  int action = -1;
  std::vector<double> candidate_values;
};

// Posterior-sampling best response: sample one opponent label (held fixed
// across all K rollouts per candidate this round), average K rollout values
// for every candidate self-strategy from the agent's own menu, pick the
// argmax with the documented hash tie-break, and sample the chosen strategy's
// current action. Rollout streams are pre-split by (candidate, sample) so
// results do not depend on evaluation order.
inline PsbrDecision psbr_decide(const GameSpec& game, int role, const History& own_h, int t,
                                const LabelPosterior& posterior,
                                const std::vector<StrategySpec>& own_menu, const PlannerConfig& cfg,
                                std::uint64_t rng_key, std::span<const double> own_payoff) {
  cfg.validate();
  if (own_menu.empty()) throw std::invalid_argument("empty candidate menu");
  if (posterior.menu.empty()) throw std::invalid_argument("empty opponent menu");
  PsbrDecision out;
  {
    RngStream label_rng = make_stream(rng_key, 0x1abe1);
    out.sampled_opponent_label = sample_label(posterior, label_rng);
  }
  const StrategySpec& opp = posterior.menu[out.sampled_opponent_label];
  out.candidate_values.resize(own_menu.size());
  for (std::size_t c = 0; c < own_menu.size(); ++c) {
    double sum = 0.0;
    for (int k = 0; k < cfg.rollout_samples; ++k) {
      RngStream rr = make_stream(rng_key, 0x2011, c, k);
      sum += rollout_value(game, own_menu[c], opp, own_h, t, cfg, rr, own_payoff);
    }
    out.candidate_values[c] = sum / cfg.rollout_samples;
  }
  out.chosen_self_label = hash_tie_argmax(out.candidate_values, own_menu, t, cfg.tie_break_salt);
  RngStream action_rng = make_stream(rng_key, 0xac710);
  out.action = own_menu[out.chosen_self_label].sample_action(t, own_h, action_rng);
  return out;
}

// ---------------------------------------------------------------------------
// Exact best response to a finite-state opponent via value iteration.
//
// The controlled MDP's state is the opponent machine's state. Payoffs are
// affinely normalized into [0,1] (which changes no best response) and values
// use the (1-gamma)-weighted convention, so v_norm is in [0,1]; v_raw maps
// back to the raw payoff scale, i.e. the per-period discounted average.

struct ValueFunction {
  std::vector<double> values_norm;
  std::vector<double> values_raw;
  std::vector<int> policy;  // pure maximizer per state, ties to lowest index
  int start_state = 0;
  double bellman_residual = 0.0;
};

namespace planner_detail {

struct BellmanModel {
  const StrategyMachine* opp;
  std::vector<double> reward_norm;  // [state * n_own + a]: expected normalized stage payoff
  int n_own;
  double gamma;

  double q_value(std::span<const double> v, int s, int a) const {
    const MixedAction& d = opp->emit[s];
    double q = 0.0;
    for (int o = 0; o < opp->n_own; ++o) {
      if (d.p[o] == 0.0) continue;
      // Opponent machine sees the joint action from its own view: (o, a).
      q += d.p[o] * v[opp->step(s, o, a)];
    }
    return (1.0 - gamma) * reward_norm[static_cast<std::size_t>(s) * n_own + a] + gamma * q;
  }
};

inline BellmanModel make_model(const GameSpec& game, int role, const StrategySpec& opp_strat,
                               double gamma) {
  BellmanModel m;
  m.opp = &opp_strat.machine;
  m.gamma = gamma;
  m.n_own = game.num_actions(role);
  auto table = game.own_payoff_table(role);
  auto [lo, hi] = game.payoff_range();
  double span = hi - lo;
  if (span <= 0.0) span = 1.0;
  int n_opp = game.num_actions(1 - role);
  int ns = opp_strat.machine.num_states();
  m.reward_norm.assign(static_cast<std::size_t>(ns) * m.n_own, 0.0);
  for (int s = 0; s < ns; ++s) {
    const MixedAction& d = opp_strat.machine.emit[s];
    for (int a = 0; a < m.n_own; ++a) {
      double r = 0.0;
      for (int o = 0; o < n_opp; ++o) r += d.p[o] * table[static_cast<std::size_t>(a) * n_opp + o];
      m.reward_norm[static_cast<std::size_t>(s) * m.n_own + a] = (r - lo) / span;
    }
  }
  return m;
}

}  // namespace planner_detail

// One application of the Bellman operator (exposed for the contraction test).
inline std::vector<double> bellman_apply(const GameSpec& game, int role, const StrategySpec& opp_strat,
                                         double gamma, std::span<const double> v) {
  auto model = planner_detail::make_model(game, role, opp_strat, gamma);
  std::vector<double> out(v.size());
  for (std::size_t s = 0; s < v.size(); ++s) {
    double best = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < model.n_own; ++a) best = std::max(best, model.q_value(v, static_cast<int>(s), a));
    out[s] = best;
  }
  return out;
}

inline ValueFunction exact_best_response(const GameSpec& game, int role, const StrategySpec& opp_strat,
                                         double gamma, double tol = 1e-10) {
  if (gamma >= 1.0 || gamma <= 0.0)
    throw std::invalid_argument("value iteration requires gamma in (0,1)");
  auto model = planner_detail::make_model(game, role, opp_strat, gamma);
  int ns = opp_strat.machine.num_states();
  std::vector<double> v(ns, 0.0);
  double residual = 0.0;
  for (int iter = 0; iter < 1000000; ++iter) {
    residual = 0.0;
    std::vector<double> nv(ns);
    for (int s = 0; s < ns; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < model.n_own; ++a) best = std::max(best, model.q_value(v, s, a));
      nv[s] = best;
      residual = std::max(residual, std::abs(nv[s] - v[s]));
    }
    v.swap(nv);
    if (residual <= tol) break;
  }
  ValueFunction vf;
  vf.values_norm = v;
  vf.bellman_residual = residual;
  vf.policy.resize(ns);
  for (int s = 0; s < ns; ++s) {
    double best = -std::numeric_limits<double>::infinity();
    int arg = 0;
    for (int a = 0; a < model.n_own; ++a) {
      double q = model.q_value(v, s, a);
      if (q > best + kTieTol) {
        best = q;
        arg = a;
      }
    }
    vf.policy[s] = arg;
  }
  auto [lo, hi] = game.payoff_range();
  vf.values_raw.resize(ns);
  for (int s = 0; s < ns; ++s) vf.values_raw[s] = v[s] * (hi - lo) + lo;
  vf.start_state = opp_strat.machine.start;
  return vf;
}

// ---------------------------------------------------------------------------
// One-step rules.

struct MyopicDecision {
  int sampled_opponent_label = -1;
  int action = -1;
  MixedAction ex_ante;  // posterior mixture of the per-label stage best responses
};

// Myopic PS-BR: sample one opponent label, best respond to that strategy's
// current-round action distribution (pure maximizer, hash ties). The ex-ante
// mixed action records the weight-mixture over all labels' best responses.
// An explicit payoff table overrides the game matrix when payoffs are
// inferred rather than known.
inline MyopicDecision myopic_psbr_decide(const GameSpec& game, int role, const History& own_h, int t,
                                         const LabelPosterior& posterior, std::uint64_t rng_key,
                                         std::uint64_t tie_break_salt = 0,
                                         std::span<const double> own_payoff = {}) {
  MyopicDecision out;
  auto weights = posterior_weights(posterior);
  int n_self = game.num_actions(role);
  int n_opp = game.num_actions(1 - role);
  std::vector<double> table;
  if (own_payoff.empty()) {
    table = game.own_payoff_table(role);
    own_payoff = table;
  }
  out.ex_ante.p.assign(n_self, 0.0);
  std::vector<int> br_per_label(posterior.menu.size());
  const History opp_view = opponent_view(own_h);
  for (std::size_t i = 0; i < posterior.menu.size(); ++i) {
    MixedAction g = posterior.menu[i].action_distribution(t, opp_view);
    std::vector<double> ev(n_self, 0.0);
    for (int a = 0; a < n_self; ++a)
      for (int o = 0; o < n_opp; ++o) ev[a] += g.p[o] * own_payoff[static_cast<std::size_t>(a) * n_opp + o];
    double best = *std::max_element(ev.begin(), ev.end());
    int pick = -1;
    std::uint64_t best_hash = ~0ull;
    for (int a = 0; a < n_self; ++a) {
      if (ev[a] < best - kTieTol) continue;
      std::uint64_t h = tie_break_hash(game.actions[role][a], t, tie_break_salt);
      if (pick < 0 || h < best_hash) {
        best_hash = h;
        pick = a;
      }
    }
    br_per_label[i] = pick;
    out.ex_ante.p[pick] += weights[i];
  }
  RngStream rng = make_stream(rng_key, 0x1abe1);
  out.sampled_opponent_label = rng.next_categorical(weights);
  out.action = br_per_label[out.sampled_opponent_label];
  return out;
}

struct ScotDecision {
  int predicted_opponent_action = -1;
  int action = -1;
};

// Deterministic predict-then-act: MAP opponent action from the one-step
// posterior predictive (ties to lowest action index), then a pure stage best
// response to that point prediction (ties to lowest action index). The
// optional payoff table overrides the game matrix when payoffs are inferred
// rather than known.
inline ScotDecision scot_decide(const GameSpec& game, int role, const History& own_h, int t,
                                const LabelPosterior& posterior,
                                std::span<const double> own_payoff = {}) {
  ScotDecision out;
  auto weights = posterior_weights(posterior);
  const History opp_view = opponent_view(own_h);
  int n_opp = game.num_actions(1 - role);
  std::vector<double> q(n_opp, 0.0);
  for (std::size_t i = 0; i < posterior.menu.size(); ++i) {
    MixedAction g = posterior.menu[i].action_distribution(t, opp_view);
    for (int o = 0; o < n_opp; ++o) q[o] += weights[i] * g.p[o];
  }
  int map_a = 0;
  for (int o = 1; o < n_opp; ++o)
    if (q[o] > q[map_a] + kTieTol) map_a = o;
  out.predicted_opponent_action = map_a;
  int n_self = game.num_actions(role);
  std::vector<double> table;
  if (own_payoff.empty()) {
    table = game.own_payoff_table(role);
    own_payoff = table;
  }
  int best = 0;
  for (int a = 1; a < n_self; ++a)
    if (own_payoff[static_cast<std::size_t>(a) * n_opp + map_a] >
        own_payoff[static_cast<std::size_t>(best) * n_opp + map_a] + kTieTol)
      best = a;
  out.action = best;
  return out;
}

// Uniform random legal action; the stand-in for the paper-style Base agent
// when no language-model provider is configured.
inline int base_decide(const GameSpec& game, int role, RngStream& rng) {
  return rng.next_int(game.num_actions(role));
}

}  // namespace replab
