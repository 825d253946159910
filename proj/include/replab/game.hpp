#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace replab {

using json = nlohmann::json;

// Joint action as a pair of action indices. For public histories the order is
// role order (player 1, player 2); for own-view histories it is (self, opponent).
using JointAction = std::array<int, 2>;
using History = std::vector<JointAction>;

// A length-<=kappa suffix of a history; the state of the induced finite MDP.
using MemoryState = std::vector<JointAction>;

inline constexpr double kTieTol = 1e-12;

struct MixedAction {
  std::vector<double> p;

  bool valid(double tol = 1e-12) const {
    double sum = 0.0;
    for (double x : p) {
      if (x < -tol || !std::isfinite(x)) return false;
      sum += x;
    }
    return std::abs(sum - 1.0) <= tol;
  }

  static MixedAction point_mass(int n, int a) {
    MixedAction m;
    m.p.assign(n, 0.0);
    m.p.at(a) = 1.0;
    return m;
  }

  static MixedAction uniform(int n) {
    MixedAction m;
    m.p.assign(n, 1.0 / n);
    return m;
  }
};

// A two-player stage game: role-named action alphabets, a total payoff matrix,
// the minimal nonzero payoff separation, and names of its equilibrium paths
// (the metrics module materializes the named predicates).
struct GameSpec {
  std::string name;
  std::array<std::string, 2> roles;
  std::array<std::vector<std::string>, 2> actions;
  // payoff[a1 * n2 + a2] = {u1, u2}; benchmark matrices are integer-valued so
  // doubles hold them exactly.
  std::vector<std::array<double, 2>> payoff;
  double delta_min = 0.0;
  std::vector<std::string> equilibrium_paths;

  int num_actions(int role) const { return static_cast<int>(actions[role].size()); }
  int joint_index(int a1, int a2) const { return a1 * num_actions(1) + a2; }
  int num_joint() const { return num_actions(0) * num_actions(1); }

  bool legal(int role, int a) const { return a >= 0 && a < num_actions(role); }

  const std::array<double, 2>& payoff_at(JointAction a) const {
    if (!legal(0, a[0]) || !legal(1, a[1])) throw std::invalid_argument("illegal joint action for " + name);
    return payoff[joint_index(a[0], a[1])];
  }

  double payoff_for(int player, JointAction a) const { return payoff_at(a)[player]; }

  // Player's own payoffs indexed by own-view joint index (self * n_opp + opp).
  std::vector<double> own_payoff_table(int player) const {
    int n_self = num_actions(player);
    int n_opp = num_actions(1 - player);
    std::vector<double> t(static_cast<std::size_t>(n_self) * n_opp);
    for (int s = 0; s < n_self; ++s)
      for (int o = 0; o < n_opp; ++o) {
        JointAction ja = player == 0 ? JointAction{s, o} : JointAction{o, s};
        t[static_cast<std::size_t>(s) * n_opp + o] = payoff_for(player, ja);
      }
    return t;
  }

  int action_index(int role, std::string_view label) const {
    for (int i = 0; i < num_actions(role); ++i)
      if (actions[role][i] == label) return i;
    throw std::invalid_argument("unknown action '" + std::string(label) + "' for role " + roles[role]);
  }

  std::pair<double, double> payoff_range() const {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& pr : payoff)
      for (double v : pr) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    return {lo, hi};
  }
};

// Minimum over players of the minimum absolute gap between distinct payoff
// values of that player; must be positive.
inline double derive_delta_min(const GameSpec& g) {
  double best = std::numeric_limits<double>::infinity();
  for (int player = 0; player < 2; ++player) {
    std::vector<double> vals;
    for (const auto& pr : g.payoff) vals.push_back(pr[player]);
    for (std::size_t i = 0; i < vals.size(); ++i)
      for (std::size_t j = i + 1; j < vals.size(); ++j) {
        double d = std::abs(vals[i] - vals[j]);
        if (d > 0.0) best = std::min(best, d);
      }
  }
  if (!std::isfinite(best) || best <= 0.0) throw std::invalid_argument("game has no nonzero payoff separation");
  return best;
}

inline void validate_history(const GameSpec& g, const History& h, int self_role) {
  for (const auto& r : h)
    if (!g.legal(self_role, r[0]) || !g.legal(1 - self_role, r[1]))
      throw std::invalid_argument("history contains illegal action for game " + g.name);
}

inline MemoryState suffix_kappa(const History& h, int kappa) {
  int take = std::min<int>(kappa, static_cast<int>(h.size()));
  return MemoryState(h.end() - take, h.end());
}

inline MemoryState update_state(const MemoryState& s, JointAction a, int kappa) {
  MemoryState next = s;
  next.push_back(a);
  return suffix_kappa(next, kappa);
}

// All stage best responses of `player` against an opponent mixed action,
// with ties reported as a set (threshold 1e-12); second element is the
// maximal expected payoff.
inline std::pair<std::vector<int>, double> stage_best_responses(const GameSpec& g, int player,
                                                                const MixedAction& q) {
  int n_self = g.num_actions(player);
  int n_opp = g.num_actions(1 - player);
  if (static_cast<int>(q.p.size()) != n_opp || !q.valid())
    throw std::invalid_argument("invalid opponent mixed action");
  std::vector<double> ev(n_self, 0.0);
  for (int a = 0; a < n_self; ++a)
    for (int o = 0; o < n_opp; ++o) {
      JointAction ja = player == 0 ? JointAction{a, o} : JointAction{o, a};
      ev[a] += q.p[o] * g.payoff_for(player, ja);
    }
  double best = *std::max_element(ev.begin(), ev.end());
  std::vector<int> argbest;
  for (int a = 0; a < n_self; ++a)
    if (ev[a] >= best - kTieTol) argbest.push_back(a);
  return {argbest, best};
}

inline double expected_stage_payoff(const GameSpec& g, int player, const MixedAction& own,
                                    const MixedAction& opp) {
  double v = 0.0;
  for (int a = 0; a < g.num_actions(player); ++a)
    for (int o = 0; o < g.num_actions(1 - player); ++o) {
      JointAction ja = player == 0 ? JointAction{a, o} : JointAction{o, a};
      v += own.p[a] * opp.p[o] * g.payoff_for(player, ja);
    }
  return v;
}

// Stage epsilon-Nash test for a mixed profile; the boundary (gain exactly
// eps) is accepted.
inline bool is_stage_epsilon_nash(const GameSpec& g, const std::array<MixedAction, 2>& profile,
                                  double eps) {
  if (eps < 0.0) throw std::invalid_argument("eps must be >= 0");
  for (int player = 0; player < 2; ++player) {
    double got = expected_stage_payoff(g, player, profile[player], profile[1 - player]);
    auto [_, best] = stage_best_responses(g, player, profile[1 - player]);
    if (got + 1e-9 < best - eps) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Built-in benchmark games.

namespace detail {
inline GameSpec make_game(std::string name, std::array<std::string, 2> roles,
                          std::array<std::vector<std::string>, 2> actions,
                          std::vector<std::array<double, 2>> payoff,
                          std::vector<std::string> eq_paths) {
  GameSpec g;
  g.name = std::move(name);
  g.roles = std::move(roles);
  g.actions = std::move(actions);
  g.payoff = std::move(payoff);
  g.equilibrium_paths = std::move(eq_paths);
  if (g.payoff.size() != static_cast<std::size_t>(g.num_joint()))
    throw std::invalid_argument("payoff matrix not total over joint action space");
  g.delta_min = derive_delta_min(g);
  return g;
}
}  // namespace detail

inline GameSpec bos_game() {
  return detail::make_game("bos", {"player1", "player2"}, {{{"J", "F"}, {"J", "F"}}},
                           {{{10, 7}, {0, 0}, {0, 0}, {7, 10}}},
                           {"stage_nash", "stick_j", "stick_f", "turn_taking_phase0", "turn_taking_phase1"});
}

inline GameSpec pd_game() {
  return detail::make_game("pd", {"player1", "player2"}, {{{"J", "F"}, {"J", "F"}}},
                           {{{3, 3}, {-5, 5}, {5, -5}, {0, 0}}}, {"stage_nash", "grim_cooperation"});
}

inline GameSpec promo_game() {
  // Rows R,P,Z by player 1; columns R,P,Z by player 2.
  return detail::make_game("promo", {"player1", "player2"}, {{{"R", "P", "Z"}, {"R", "P", "Z"}}},
                           {{{1, 1},
                             {-1, 4},
                             {-2, -2},
                             {4, -1},
                             {0, 0},
                             {-2, -2},
                             {-2, -2},
                             {-2, -2},
                             {-2, -2}}},
                           {"stage_nash", "alternating_promotions"});
}

inline GameSpec samaritan_game() {
  return detail::make_game("samaritan", {"helper", "recipient"}, {{{"H", "N"}, {"W", "S"}}},
                           {{{2, -1}, {0, 0}, {1, -2}, {-1, -3}}}, {"stage_nash", "help_work"});
}

inline GameSpec lemons_game() {
  return detail::make_game("lemons", {"seller", "buyer"}, {{{"HQ", "LQ"}, {"B", "D"}}},
                           {{{3, 3}, {-1, 0}, {4, -1}, {0, 0}}}, {"stage_nash", "quality_trust"});
}

inline const std::vector<std::string>& benchmark_game_names() {
  static const std::vector<std::string> names = {"bos", "pd", "promo", "samaritan", "lemons"};
  return names;
}

inline GameSpec builtin_game(std::string_view name) {
  if (name == "bos") return bos_game();
  if (name == "pd") return pd_game();
  if (name == "promo") return promo_game();
  if (name == "samaritan") return samaritan_game();
  if (name == "lemons") return lemons_game();
  throw std::invalid_argument("unknown builtin game '" + std::string(name) + "'");
}

// Declarative game config: name, roles, per-role action lists, payoff rows
// (row-major over player 1's actions), optional delta_min (validated when
// given, derived otherwise).
inline GameSpec game_from_json(const json& j) {
  GameSpec g;
  g.name = j.at("name").get<std::string>();
  if (j.contains("roles")) {
    auto r = j.at("roles").get<std::vector<std::string>>();
    if (r.size() != 2) throw std::invalid_argument("exactly two roles required");
    g.roles = {r[0], r[1]};
  } else {
    g.roles = {"player1", "player2"};
  }
  auto acts = j.at("actions").get<std::vector<std::vector<std::string>>>();
  if (acts.size() != 2) throw std::invalid_argument("exactly two action lists required");
  g.actions = {acts[0], acts[1]};
  const auto& rows = j.at("payoff");
  if (rows.size() != acts[0].size()) throw std::invalid_argument("payoff row count mismatch");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != acts[1].size()) throw std::invalid_argument("payoff column count mismatch");
    for (std::size_t k = 0; k < rows[i].size(); ++k) {
      auto cell = rows[i][k].get<std::vector<double>>();
      if (cell.size() != 2) throw std::invalid_argument("payoff cell must be a pair");
      g.payoff.push_back({cell[0], cell[1]});
    }
  }
  double derived = derive_delta_min(g);
  if (j.contains("delta_min")) {
    g.delta_min = j.at("delta_min").get<double>();
    if (std::abs(g.delta_min - derived) > 1e-9)
      throw std::invalid_argument("declared delta_min disagrees with payoff matrix");
  } else {
    g.delta_min = derived;
  }
  if (j.contains("equilibrium_paths")) g.equilibrium_paths = j.at("equilibrium_paths").get<std::vector<std::string>>();
  return g;
}

inline GameSpec load_game(const std::string& name_or_path) {
  for (const auto& n : benchmark_game_names())
    if (n == name_or_path) return builtin_game(n);
  std::ifstream in(name_or_path);
  if (!in) throw std::invalid_argument("game '" + name_or_path + "' is neither builtin nor a readable file");
  json j;
  in >> j;
  return game_from_json(j);
}

}  // namespace replab
