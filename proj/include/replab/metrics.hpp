#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "replab/belief.hpp"
#include "replab/game.hpp"
#include "replab/sim.hpp"
#include "replab/strategy.hpp"

namespace replab {

// A named equilibrium-path classifier. classify_trace replays the whole
// realized action sequence and marks each round on-path or off-path; the
// classification at round t depends only on rounds <= t (prefix causality).
//
// Cooperative predicates are reactive automata mirroring the benchmark
// equilibrium descriptions: a joint action that matches the current phase's
// prescription is on-path, and a deviation that the description reacts to
// (grim triggers, punishment entries) counts as on-path at the round it
// occurs while switching the accepted continuation. Mismatches the
// description does not react to are off-path.
struct PathPredicate {
  std::string name;
  std::function<std::vector<char>(const std::vector<JointAction>&)> classify_trace;

  bool classify(int t, const std::vector<JointAction>& prefix_through_t) const {
    auto v = classify_trace(prefix_through_t);
    return v.at(t - 1) != 0;
  }
};

namespace metrics_detail {

inline PathPredicate profile_set_predicate(std::string name, std::vector<JointAction> accepted) {
  return {std::move(name), [accepted](const std::vector<JointAction>& trace) {
            std::vector<char> out(trace.size(), 0);
            for (std::size_t t = 0; t < trace.size(); ++t)
              for (const auto& a : accepted)
                if (trace[t] == a) {
                  out[t] = 1;
                  break;
                }
            return out;
          }};
}

inline PathPredicate parity_predicate(std::string name, JointAction odd, JointAction even) {
  return {std::move(name), [odd, even](const std::vector<JointAction>& trace) {
            std::vector<char> out(trace.size(), 0);
            for (std::size_t t = 0; t < trace.size(); ++t)
              out[t] = trace[t] == ((t % 2 == 0) ? odd : even) ? 1 : 0;
            return out;
          }};
}

}  // namespace metrics_detail

// Grim cooperation in PD: (J,J) until any F, then (F,F) forever. The
// triggering round is on-path (the path's prescribed reaction covers it).
inline PathPredicate pd_grim_predicate(const GameSpec& g) {
  const int F = g.action_index(0, "F");
  return {"grim_cooperation", [F](const std::vector<JointAction>& trace) {
            std::vector<char> out(trace.size(), 0);
            bool triggered = false;
            for (std::size_t t = 0; t < trace.size(); ++t) {
              const auto& a = trace[t];
              if (!triggered) {
                // (J,J) continues the phase; a played F is itself the trigger
                // the path reacts to, so the triggering round stays on-path.
                out[t] = 1;
                if (a[0] == F || a[1] == F) triggered = true;
              } else {
                out[t] = (a[0] == F && a[1] == F) ? 1 : 0;
              }
            }
            return out;
          }};
}

// Alternating promotions in Promo with two rounds of (Z,Z) punishment after a
// deviation, then return to the absolute-parity path. phase=0 means player 1
// promotes in odd rounds.
inline PathPredicate promo_alternating_predicate(const GameSpec& g, int phase) {
  const int R = g.action_index(0, "R"), P = g.action_index(0, "P"), Z = g.action_index(0, "Z");
  JointAction odd = phase == 0 ? JointAction{P, R} : JointAction{R, P};
  JointAction even = phase == 0 ? JointAction{R, P} : JointAction{P, R};
  std::string name = phase == 0 ? "alternating_promotions" : "alternating_promotions_phase1";
  return {std::move(name), [odd, even, Z](const std::vector<JointAction>& trace) {
            std::vector<char> out(trace.size(), 0);
            int punish = 0;
            for (std::size_t t = 0; t < trace.size(); ++t) {
              const auto& a = trace[t];
              if (punish > 0) {
                out[t] = (a[0] == Z && a[1] == Z) ? 1 : 0;
                --punish;
              } else {
                JointAction want = (t % 2 == 0) ? odd : even;
                out[t] = 1;  // on the path or the deviation that starts punishment
                if (a != want) punish = 2;
              }
            }
            return out;
          }};
}

// Samaritan: (H,W) until the recipient shirks, then (N,W) forever; a helper
// deviation during punishment switches to (H,S) forever.
inline PathPredicate samaritan_coop_predicate(const GameSpec& g) {
  const int H = g.action_index(0, "H"), N = g.action_index(0, "N");
  const int W = g.action_index(1, "W"), S = g.action_index(1, "S");
  return {"help_work", [H, N, W, S](const std::vector<JointAction>& trace) {
            std::vector<char> out(trace.size(), 0);
            enum { kCoop, kPunish, kStage } phase = kCoop;
            for (std::size_t t = 0; t < trace.size(); ++t) {
              const auto& a = trace[t];
              switch (phase) {
                case kCoop:
                  if (a == JointAction{H, W}) {
                    out[t] = 1;
                  } else if (a[1] == S) {
                    out[t] = 1;  // the shirk that starts punishment
                    phase = kPunish;
                  } else {
                    out[t] = 0;  // (N,W): not a reaction the description prescribes
                  }
                  break;
                case kPunish:
                  if (a == JointAction{N, W}) {
                    out[t] = 1;
                  } else if (a[0] == H) {
                    out[t] = 1;  // helper deviates during punishment
                    phase = kStage;
                  } else {
                    out[t] = 0;  // (N,S)
                  }
                  break;
                case kStage:
                  out[t] = (a == JointAction{H, S}) ? 1 : 0;
                  break;
              }
            }
            return out;
          }};
}

// Lemons: (HQ,B) until a low-quality sale, then (LQ,D) forever.
inline PathPredicate lemons_coop_predicate(const GameSpec& g) {
  const int HQ = g.action_index(0, "HQ"), LQ = g.action_index(0, "LQ");
  const int B = g.action_index(1, "B"), D = g.action_index(1, "D");
  return {"quality_trust", [HQ, LQ, B, D](const std::vector<JointAction>& trace) {
            std::vector<char> out(trace.size(), 0);
            bool boycott = false;
            for (std::size_t t = 0; t < trace.size(); ++t) {
              const auto& a = trace[t];
              if (!boycott) {
                if (a == JointAction{HQ, B}) {
                  out[t] = 1;
                } else if (a == JointAction{LQ, B}) {
                  out[t] = 1;  // the sale the buyer reacts to
                  boycott = true;
                } else {
                  out[t] = 0;
                }
              } else {
                out[t] = (a == JointAction{LQ, D}) ? 1 : 0;
              }
            }
            return out;
          }};
}

// One-shot stage-Nash predicate: the round's joint action is a pure Nash
// profile of the stage game (computed by brute-force enumeration).
inline PathPredicate stage_nash_predicate(const GameSpec& g) {
  std::vector<JointAction> nash;
  for (int a1 = 0; a1 < g.num_actions(0); ++a1)
    for (int a2 = 0; a2 < g.num_actions(1); ++a2) {
      std::array<MixedAction, 2> prof = {MixedAction::point_mass(g.num_actions(0), a1),
                                         MixedAction::point_mass(g.num_actions(1), a2)};
      if (is_stage_epsilon_nash(g, prof, 0.0)) nash.push_back({a1, a2});
    }
  return metrics_detail::profile_set_predicate("stage_nash", std::move(nash));
}

// The named predicates for a benchmark: the one-shot Nash predicate plus the
// cooperative-path predicate(s) with their punishment-phase logic.
inline std::vector<PathPredicate> builtin_predicates(const GameSpec& g) {
  std::vector<PathPredicate> out;
  out.push_back(stage_nash_predicate(g));
  if (g.name == "pd") {
    out.push_back(pd_grim_predicate(g));
  } else if (g.name == "bos") {
    const int J = g.action_index(0, "J"), F = g.action_index(0, "F");
    out.push_back(metrics_detail::profile_set_predicate("stick_j", {{J, J}}));
    out.push_back(metrics_detail::profile_set_predicate("stick_f", {{F, F}}));
    out.push_back(metrics_detail::parity_predicate("turn_taking_phase0", {J, J}, {F, F}));
    out.push_back(metrics_detail::parity_predicate("turn_taking_phase1", {F, F}, {J, J}));
  } else if (g.name == "promo") {
    out.push_back(promo_alternating_predicate(g, 0));
    out.push_back(promo_alternating_predicate(g, 1));
  } else if (g.name == "samaritan") {
    out.push_back(samaritan_coop_predicate(g));
  } else if (g.name == "lemons") {
    out.push_back(lemons_coop_predicate(g));
  } else {
    throw std::invalid_argument("no builtin predicates for game '" + g.name + "'");
  }
  return out;
}

// The single cooperative predicate each collusive experiment tracks.
inline PathPredicate cooperative_predicate(const GameSpec& g) {
  if (g.name == "pd") return pd_grim_predicate(g);
  if (g.name == "bos") {
    const int J = g.action_index(0, "J"), F = g.action_index(0, "F");
    return metrics_detail::parity_predicate("turn_taking_phase0", {J, J}, {F, F});
  }
  if (g.name == "promo") return promo_alternating_predicate(g, 0);
  if (g.name == "samaritan") return samaritan_coop_predicate(g);
  if (g.name == "lemons") return lemons_coop_predicate(g);
  throw std::invalid_argument("no cooperative predicate for game '" + g.name + "'");
}

struct Window {
  int lo = 161;
  int hi = 180;
};

// Percentage of window rounds whose joint action is on-path under ANY of the
// supplied predicates (pass a single predicate for the cooperative mode).
inline double equilibrium_follow_pct(const std::vector<JointAction>& trace,
                                     const std::vector<PathPredicate>& predicates, Window window) {
  if (window.lo < 1 || window.hi < window.lo || window.hi > static_cast<int>(trace.size()))
    throw std::invalid_argument("window must be a nonempty subrange of the trace");
  if (predicates.empty()) throw std::invalid_argument("at least one predicate required");
  std::vector<std::vector<char>> marks;
  marks.reserve(predicates.size());
  for (const auto& p : predicates) marks.push_back(p.classify_trace(trace));
  int on = 0;
  for (int t = window.lo; t <= window.hi; ++t) {
    for (const auto& m : marks)
      if (m[t - 1]) {
        ++on;
        break;
      }
  }
  return 100.0 * on / (window.hi - window.lo + 1);
}

inline std::vector<JointAction> trace_of(const MatchRecord& rec) {
  std::vector<JointAction> t;
  t.reserve(rec.entries.size());
  for (const auto& e : rec.entries) t.push_back(e.joint);
  return t;
}

// ---------------------------------------------------------------------------
// Truncated weak distance.
//
// d(mu,nu) = sum_t 2^-t sup_{E in B^t} |mu(E)-nu(E)|, where the sup over
// length-t cylinder events equals the total-variation distance between the
// length-t prefix distributions. Computed by exact enumeration of the prefix
// tree for finite-state profiles, with the geometric tail bound 2^-k_max.

struct WeakDistanceResult {
  double value = 0.0;
  double tail_bound = 0.0;
};

inline WeakDistanceResult truncated_weak_distance(const StrategySpec& mu1, const StrategySpec& mu2,
                                                  const StrategySpec& nu1, const StrategySpec& nu2,
                                                  int k_max) {
  const int n1 = mu1.machine.n_own, n2 = mu2.machine.n_own;
  if (nu1.machine.n_own != n1 || nu2.machine.n_own != n2)
    throw std::invalid_argument("profiles must share an action space");
  double budget = 1.0;
  for (int t = 0; t < k_max; ++t) {
    budget *= n1 * n2;
    if (budget > 2.2e7) throw std::invalid_argument("enumeration budget exceeded (k_max too large)");
  }
  std::vector<double> tv(k_max + 1, 0.0);
  // Depth-first over joint prefixes carrying both profiles' machine states and
  // prefix probabilities; nodes invisible to both measures are pruned.
  struct Node {
    int s_mu1, s_mu2, s_nu1, s_nu2;
    double p_mu, p_nu;
    int depth;
  };
  std::vector<Node> stack;
  stack.push_back({mu1.machine.start, mu2.machine.start, nu1.machine.start, nu2.machine.start, 1.0, 1.0, 0});
  while (!stack.empty()) {
    Node nd = stack.back();
    stack.pop_back();
    if (nd.depth == k_max) continue;
    for (int a1 = 0; a1 < n1; ++a1)
      for (int a2 = 0; a2 < n2; ++a2) {
        double pm = nd.p_mu * mu1.machine.emit[nd.s_mu1].p[a1] * mu2.machine.emit[nd.s_mu2].p[a2];
        double pn = nd.p_nu * nu1.machine.emit[nd.s_nu1].p[a1] * nu2.machine.emit[nd.s_nu2].p[a2];
        if (pm == 0.0 && pn == 0.0) continue;
        tv[nd.depth + 1] += 0.5 * std::abs(pm - pn);
        stack.push_back({mu1.machine.step(nd.s_mu1, a1, a2), mu2.machine.step(nd.s_mu2, a2, a1),
                         nu1.machine.step(nd.s_nu1, a1, a2), nu2.machine.step(nd.s_nu2, a2, a1), pm, pn,
                         nd.depth + 1});
      }
  }
  WeakDistanceResult res;
  double w = 1.0;
  for (int t = 1; t <= k_max; ++t) {
    w *= 0.5;
    res.value += w * tv[t];
  }
  res.tail_bound = std::pow(0.5, k_max);
  return res;
}

// ---------------------------------------------------------------------------
// Stage-Nash trace: applies the stage epsilon-Nash test to each round's
// recorded mixed-action profile; rounds without mixed-action data are
// reported as unevaluable.
inline std::vector<std::optional<bool>> stage_nash_trace(const GameSpec& g, const MatchRecord& rec,
                                                         double eps) {
  std::vector<std::optional<bool>> out;
  out.reserve(rec.entries.size());
  for (const auto& e : rec.entries) {
    if (e.realized_mixed[0].p.empty() || e.realized_mixed[1].p.empty()) {
      out.push_back(std::nullopt);
      continue;
    }
    out.push_back(is_stage_epsilon_nash(g, {e.realized_mixed[0], e.realized_mixed[1]}, eps));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Empirical state frequencies and the KL state-frequency diagnostic.

struct EmpiricalStateFreq {
  std::map<MemoryState, long> counts;
  long total = 0;
};

inline EmpiricalStateFreq empirical_state_freq(const std::vector<JointAction>& public_trace,
                                               int owner_role, int kappa) {
  EmpiricalStateFreq f;
  History own;
  for (std::size_t t = 0; t < public_trace.size(); ++t) {
    ++f.counts[suffix_kappa(own, kappa)];
    ++f.total;
    const auto& a = public_trace[t];
    own.push_back(owner_role == 0 ? a : JointAction{a[1], a[0]});
  }
  return f;
}

struct KlStateEntry {
  MemoryState state;
  long visits = 0;
  double kl = 0.0;
};

struct KlReportRow {
  std::string alt_label;
  double average_kl = 0.0;  // empirical state-frequency-weighted
  std::vector<KlStateEntry> per_state;
  bool separation_warning = false;   // average below kappa_min
  bool unvisited_difference = false;  // differs from the true strategy at some unvisited state
};

namespace metrics_detail {

inline double kl_clipped(const MixedAction& p, const MixedAction& q) {
  double kl = 0.0;
  for (std::size_t a = 0; a < p.p.size(); ++a) {
    if (p.p[a] <= 0.0) continue;
    kl += p.p[a] * std::log(p.p[a] / std::clamp(q.p[a], kLikelihoodClip, 1.0));
  }
  return kl;
}

inline void enumerate_states(const GameSpec& g, int owner_role, int kappa, MemoryState& cur,
                             std::vector<MemoryState>& out) {
  out.push_back(cur);
  if (static_cast<int>(cur.size()) == kappa) return;
  for (int a = 0; a < g.num_actions(owner_role); ++a)
    for (int o = 0; o < g.num_actions(1 - owner_role); ++o) {
      cur.push_back({a, o});
      enumerate_states(g, owner_role, kappa, cur, out);
      cur.pop_back();
    }
}

}  // namespace metrics_detail

// Per-alternative empirical KL average along a realized trace, with per-state
// breakdown over suffix states. Alternatives whose average falls below
// kappa_min are flagged as separation failures; alternatives that differ from
// the true strategy only at states the trace never visited are flagged too.
inline std::vector<KlReportRow> kl_state_report(const GameSpec& g, const StrategySpec& true_strat,
                                                const std::vector<StrategySpec>& alt_strats,
                                                const std::vector<JointAction>& public_trace,
                                                int owner_role, int kappa, double kappa_min = 1e-3) {
  std::vector<KlReportRow> rows;
  // Visit data: per round, the owner-view prefix and its suffix state.
  std::vector<MemoryState> all_states;
  {
    MemoryState cur;
    metrics_detail::enumerate_states(g, owner_role, kappa, cur, all_states);
  }
  for (const auto& alt : alt_strats) {
    KlReportRow row;
    row.alt_label = alt.label;
    std::map<MemoryState, KlStateEntry> acc;
    History own;
    double total_kl = 0.0;
    for (std::size_t t = 0; t < public_trace.size(); ++t) {
      MixedAction p = true_strat.action_distribution(static_cast<int>(t) + 1, own);
      MixedAction q = alt.action_distribution(static_cast<int>(t) + 1, own);
      double kl = metrics_detail::kl_clipped(p, q);
      MemoryState s = suffix_kappa(own, kappa);
      auto& entry = acc[s];
      entry.state = s;
      ++entry.visits;
      entry.kl += kl;
      total_kl += kl;
      const auto& a = public_trace[t];
      own.push_back(owner_role == 0 ? a : JointAction{a[1], a[0]});
    }
    for (auto& [s, entry] : acc) {
      entry.kl /= entry.visits;  // per-state mean
      row.per_state.push_back(entry);
    }
    row.average_kl = public_trace.empty() ? 0.0 : total_kl / static_cast<double>(public_trace.size());
    row.separation_warning = row.average_kl < kappa_min;
    for (const auto& s : all_states) {
      if (acc.count(s)) continue;
      // Evaluate both rules on the state read as a history.
      MixedAction p = true_strat.action_distribution(static_cast<int>(s.size()) + 1, s);
      MixedAction q = alt.action_distribution(static_cast<int>(s.size()) + 1, s);
      double tv = 0.0;
      for (std::size_t a = 0; a < p.p.size(); ++a) tv += std::abs(p.p[a] - q.p[a]);
      if (tv > 1e-9) {
        row.unvisited_difference = true;
        break;
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Posterior-dispersion and payoff-uncertainty time series from a record.

struct DiagnosticTraces {
  std::array<std::vector<double>, 2> collision;  // D_t per player
  std::array<std::vector<double>, 2> delta;      // 1 - truth mass per player (unknown-payoff mode)
};

inline DiagnosticTraces dt_and_delta_trace(const MatchRecord& rec) {
  DiagnosticTraces out;
  for (const auto& e : rec.entries)
    for (int i = 0; i < 2; ++i) {
      out.collision[i].push_back(e.collision[i]);
      out.delta[i].push_back(e.delta[i]);
    }
  return out;
}

}  // namespace replab
