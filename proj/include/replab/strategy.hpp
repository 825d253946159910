#pragma once

#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "replab/game.hpp"
#include "replab/rng.hpp"

namespace replab {

// A bounded-memory behavior rule compiled to an explicit finite-state machine:
// emit[s] is the distribution over the owner's actions in state s, and the
// state advances on each observed own-view joint action. Suffix memory,
// trigger bits, punishment counters and round parity are all just states, so
// the same machine drives simulation, likelihood scoring and value iteration.
struct StrategyMachine {
  int n_own = 0;
  int n_opp = 0;
  int start = 0;
  std::vector<MixedAction> emit;
  std::vector<int> next;  // next[s * n_own * n_opp + own * n_opp + opp]

  int num_states() const { return static_cast<int>(emit.size()); }

  int step(int state, int own, int opp) const {
    return next[static_cast<std::size_t>(state) * n_own * n_opp + static_cast<std::size_t>(own) * n_opp + opp];
  }

  int state_after(const History& own_view) const {
    int s = start;
    for (const auto& r : own_view) s = step(s, r[0], r[1]);
    return s;
  }
};

struct StrategySpec {
  std::string label;
  std::string description;
  // Memory bound for pure bounded-recall rules; -1 when the rule carries
  // non-suffix state (trigger bit, punishment counter, round parity).
  int kappa = 0;
  int state_bits = 0;
  StrategyMachine machine;

  // Distribution prescribed at round t given the owner's own-view history of
  // the first t-1 rounds.
  MixedAction action_distribution(int t, const History& own_view) const {
    if (t != static_cast<int>(own_view.size()) + 1)
      throw std::invalid_argument("history for round " + std::to_string(t) + " must have t-1 rounds");
    for (const auto& r : own_view)
      if (r[0] < 0 || r[0] >= machine.n_own || r[1] < 0 || r[1] >= machine.n_opp)
        throw std::invalid_argument("history contains illegal action index");
    return machine.emit[machine.state_after(own_view)];
  }

  int sample_action(int t, const History& own_view, RngStream& rng) const {
    const MixedAction d = action_distribution(t, own_view);
    return rng.next_categorical(d.p);
  }

  double min_emit_prob() const {
    double m = 1.0;
    for (const auto& e : machine.emit)
      for (double p : e.p) m = std::min(m, p);
    return m;
  }
};

// Own-view <-> opponent-view rewrite: swap each round's tuple. Involution.
inline History opponent_view(const History& h) {
  History out;
  out.reserve(h.size());
  for (const auto& r : h) out.push_back({r[1], r[0]});
  return out;
}

// ---------------------------------------------------------------------------
// Machine builders.

namespace strategy_detail {

inline StrategyMachine build(int n_own, int n_opp, int n_states, int start,
                             const std::function<MixedAction(int)>& emit_fn,
                             const std::function<int(int, int, int)>& trans_fn) {
  StrategyMachine m;
  m.n_own = n_own;
  m.n_opp = n_opp;
  m.start = start;
  m.emit.reserve(n_states);
  for (int s = 0; s < n_states; ++s) {
    MixedAction d = emit_fn(s);
    if (!d.valid()) throw std::logic_error("strategy emits an invalid distribution");
    m.emit.push_back(std::move(d));
  }
  m.next.resize(static_cast<std::size_t>(n_states) * n_own * n_opp);
  for (int s = 0; s < n_states; ++s)
    for (int a = 0; a < n_own; ++a)
      for (int o = 0; o < n_opp; ++o) m.next[static_cast<std::size_t>(s) * n_own * n_opp + static_cast<std::size_t>(a) * n_opp + o] = trans_fn(s, a, o);
  return m;
}

// Binary helper: distribution putting p on action 0.
inline MixedAction bern(double p) { return MixedAction{{p, 1.0 - p}}; }

inline StrategySpec constant(std::string label, std::string desc, int n_own, int n_opp, MixedAction dist) {
  StrategySpec s{std::move(label), std::move(desc), 0, 0, {}};
  s.machine = build(n_own, n_opp, 1, 0, [&](int) { return dist; }, [](int, int, int) { return 0; });
  return s;
}

// First round plays `init`; afterwards the distribution depends only on the
// opponent's previous action.
inline StrategySpec reactive_last_opp(std::string label, std::string desc, int n_own, int n_opp,
                                      MixedAction init, std::vector<MixedAction> per_opp) {
  StrategySpec s{std::move(label), std::move(desc), 1, 0, {}};
  s.machine = build(
      n_own, n_opp, 1 + n_opp, 0,
      [&](int st) { return st == 0 ? init : per_opp.at(st - 1); },
      [&](int, int, int opp) { return 1 + opp; });
  return s;
}

// First round plays `init`; afterwards depends on the full previous joint action.
inline StrategySpec reactive_last_joint(std::string label, std::string desc, int n_own, int n_opp,
                                        MixedAction init,
                                        const std::function<MixedAction(int own, int opp)>& rule) {
  StrategySpec s{std::move(label), std::move(desc), 1, 0, {}};
  s.machine = build(
      n_own, n_opp, 1 + n_own * n_opp, 0,
      [&](int st) { return st == 0 ? init : rule((st - 1) / n_opp, (st - 1) % n_opp); },
      [&](int, int own, int opp) { return 1 + own * n_opp + opp; });
  return s;
}

// Cooperates until the opponent's bad action has been seen at least once,
// then defects forever.
inline StrategySpec grim(std::string label, std::string desc, int n_own, int n_opp, MixedAction clean,
                         MixedAction triggered, int bad_opp_action) {
  StrategySpec s{std::move(label), std::move(desc), -1, 1, {}};
  s.machine = build(
      n_own, n_opp, 2, 0, [&](int st) { return st == 0 ? clean : triggered; },
      [&](int st, int, int opp) { return (st == 1 || opp == bad_opp_action) ? 1 : 0; });
  return s;
}

// Defects iff the opponent's bad action occurred in either of the previous
// two rounds. State bits: (bad last round, bad round before).
inline StrategySpec opp_window2(std::string label, std::string desc, int n_own, int n_opp,
                                MixedAction clean, MixedAction triggered, int bad_opp_action) {
  StrategySpec s{std::move(label), std::move(desc), 2, 0, {}};
  s.machine = build(
      n_own, n_opp, 4, 0, [&](int st) { return st == 0 ? clean : triggered; },
      [&](int st, int, int opp) {
        int b_last = opp == bad_opp_action ? 1 : 0;
        int b_prev = (st >> 1) & 1;
        return (b_last << 1) | b_prev;
      });
  return s;
}

// Plays a_odd in odd rounds and a_even in even rounds, regardless of history.
inline StrategySpec alternate(std::string label, std::string desc, int n_own, int n_opp, int a_odd,
                              int a_even) {
  StrategySpec s{std::move(label), std::move(desc), -1, 1, {}};
  s.machine = build(
      n_own, n_opp, 2, 0,
      [&](int st) { return MixedAction::point_mass(n_own, st == 0 ? a_odd : a_even); },
      [&](int st, int, int) { return 1 - st; });
  return s;
}

// Abreu-style stick-and-carrot alternation for Promo. The owner's phase path
// plays own_odd/own_even while the partner is expected to play the
// complementary pair; a joint action off the prescribed pair (checked only
// outside punishment) triggers punish_len rounds of Z, after which the
// absolute-parity path resumes. States: parity x punishment counter.
inline StrategySpec promo_mad(std::string label, std::string desc, int n_own, int n_opp, int own_odd,
                              int own_even, int partner_odd, int partner_even, int punish_action,
                              int punish_len) {
  StrategySpec s{std::move(label), std::move(desc), -1, 3, {}};
  int counters = punish_len + 1;
  s.machine = build(
      n_own, n_opp, 2 * counters, 0,
      [&](int st) {
        int punish = st % counters;
        int parity = st / counters;
        if (punish > 0) return MixedAction::point_mass(n_own, punish_action);
        return MixedAction::point_mass(n_own, parity == 0 ? own_odd : own_even);
      },
      [&](int st, int own, int opp) {
        int punish = st % counters;
        int parity = st / counters;
        int next_punish;
        if (punish > 0) {
          next_punish = punish - 1;  // punishment rounds are not re-examined
        } else {
          bool on_path = parity == 0 ? (own == own_odd && opp == partner_odd)
                                     : (own == own_even && opp == partner_even);
          next_punish = on_path ? 0 : punish_len;
        }
        return (1 - parity) * counters + next_punish;
      });
  return s;
}

// Follows the phase-0 alternating path until the first deviation, then Z forever.
inline StrategySpec promo_grim(std::string label, std::string desc, int n_own, int n_opp, int own_odd,
                               int own_even, int partner_odd, int partner_even, int punish_action) {
  StrategySpec s{std::move(label), std::move(desc), -1, 2, {}};
  s.machine = build(
      n_own, n_opp, 4, 0,  // state = parity * 2 + triggered
      [&](int st) {
        if (st & 1) return MixedAction::point_mass(n_own, punish_action);
        return MixedAction::point_mass(n_own, (st >> 1) == 0 ? own_odd : own_even);
      },
      [&](int st, int own, int opp) {
        int parity = st >> 1;
        int trig = st & 1;
        if (!trig) {
          bool on_path = parity == 0 ? (own == own_odd && opp == partner_odd)
                                     : (own == own_even && opp == partner_even);
          trig = on_path ? 0 : 1;
        }
        return (1 - parity) * 2 + trig;
      });
  return s;
}

}  // namespace strategy_detail

// ---------------------------------------------------------------------------
// Game-specific menus. Labels, order and behavior follow the benchmark
// definitions; `p` below always refers to the probability of the role's
// first-listed action.

namespace menus {

using strategy_detail::bern;

inline std::vector<StrategySpec> bos_menu() {
  const int J = 0, F = 1;
  auto wsls_rule = [](int own, int opp) {
    return MixedAction::point_mass(2, own == opp ? own : 1 - own);
  };
  auto mlur_rule = [](int own, int opp) { return own == opp ? MixedAction::point_mass(2, own) : bern(0.5); };
  return {
      strategy_detail::constant("insist_j", "Always plays J.", 2, 2, bern(1.0)),
      strategy_detail::constant("insist_f", "Always plays F.", 2, 2, bern(0.0)),
      strategy_detail::reactive_last_joint("wsls_bos",
                                           "Starts J or F with probability 0.5 each; repeats its previous action after a "
                                           "matched round and switches after a mismatch.",
                                           2, 2, bern(0.5), wsls_rule),
      strategy_detail::reactive_last_joint("mlur",
                                           "Starts J or F with probability 0.5 each; repeats after a matched round, "
                                           "otherwise plays J or F with probability 0.5 each.",
                                           2, 2, bern(0.5), mlur_rule),
      strategy_detail::alternate("alternate_phase0", "Plays J in odd rounds and F in even rounds.", 2, 2, J, F),
      strategy_detail::alternate("alternate_phase1", "Plays F in odd rounds and J in even rounds.", 2, 2, F, J),
      strategy_detail::constant("noisy_insist_j", "Plays J with probability 0.9 in every round.", 2, 2, bern(0.9)),
      strategy_detail::constant("noisy_insist_f", "Plays J with probability 0.1 in every round.", 2, 2, bern(0.1)),
  };
}

inline std::vector<StrategySpec> pd_menu() {
  auto wsls_rule = [](int own, int opp) {
    return MixedAction::point_mass(2, own == opp ? own : 1 - own);
  };
  return {
      strategy_detail::constant("allc", "Always plays J.", 2, 2, bern(1.0)),
      strategy_detail::constant("alld", "Always plays F.", 2, 2, bern(0.0)),
      strategy_detail::constant("soft_allc", "Plays J with probability 0.9 in every round.", 2, 2, bern(0.9)),
      strategy_detail::constant("soft_alld", "Plays J with probability 0.1 in every round.", 2, 2, bern(0.1)),
      strategy_detail::reactive_last_opp("tft", "Plays J in round 1, then copies the opponent's previous action.", 2, 2,
                                         bern(1.0), {bern(1.0), bern(0.0)}),
      strategy_detail::reactive_last_joint("wsls",
                                           "Plays J in round 1; repeats its previous action after a matched round and "
                                           "switches after a mismatch.",
                                           2, 2, bern(1.0), wsls_rule),
      strategy_detail::opp_window2("soft_grim_trigger",
                                   "Plays F if the opponent played F in either of the previous two rounds, otherwise J.",
                                   2, 2, bern(1.0), bern(0.0), 1),
      strategy_detail::grim("grim_trigger", "Plays J until the opponent has played F at least once, then F forever.", 2,
                            2, bern(1.0), bern(0.0), 1),
  };
}

inline std::vector<StrategySpec> promo_menu() {
  const int R = 0, P = 1, Z = 2;
  auto c3 = [](double r, double p, double z) { return MixedAction{{r, p, z}}; };
  return {
      strategy_detail::constant("allR", "Plays R at every round.", 3, 3, c3(1, 0, 0)),
      strategy_detail::constant("allP", "Plays P at every round.", 3, 3, c3(0, 1, 0)),
      strategy_detail::constant("allZ", "Plays Z at every round.", 3, 3, c3(0, 0, 1)),
      strategy_detail::constant("soft_allR", "Plays R with probability 0.9 and P with probability 0.1.", 3, 3,
                                c3(0.9, 0.1, 0)),
      strategy_detail::constant("soft_allP", "Plays P with probability 0.9 and R with probability 0.1.", 3, 3,
                                c3(0.1, 0.9, 0)),
      strategy_detail::promo_mad("mad0",
                                 "Alternates P in odd rounds and R in even rounds; after a deviation from that joint "
                                 "path, plays Z for 2 rounds and then returns to the alternation.",
                                 3, 3, P, R, R, P, Z, 2),
      strategy_detail::promo_mad("mad1",
                                 "Alternates R in odd rounds and P in even rounds; after a deviation from that joint "
                                 "path, plays Z for 2 rounds and then returns to the alternation.",
                                 3, 3, R, P, P, R, Z, 2),
      strategy_detail::promo_grim("grim_trigger",
                                  "Follows the odd-P/even-R alternating path until the first deviation, then plays Z "
                                  "forever.",
                                  3, 3, P, R, R, P, Z),
  };
}

inline std::vector<StrategySpec> samaritan_helper_menu() {
  auto wsls_rule = [](int own, int opp) {
    return MixedAction::point_mass(2, opp == 0 ? own : 1 - own);  // repeat if recipient worked
  };
  return {
      strategy_detail::constant("always_help", "Always plays H.", 2, 2, bern(1.0)),
      strategy_detail::constant("never_help", "Always plays N.", 2, 2, bern(0.0)),
      strategy_detail::reactive_last_opp("tft_help", "Plays H in round 1, then H iff the recipient worked last round.",
                                         2, 2, bern(1.0), {bern(1.0), bern(0.0)}),
      strategy_detail::opp_window2("grim_forgive",
                                   "Plays N if the recipient shirked in either of the previous two rounds, otherwise H.",
                                   2, 2, bern(1.0), bern(0.0), 1),
      strategy_detail::grim("grim_nohelp", "Plays H until the recipient has shirked at least once, then N forever.", 2,
                            2, bern(1.0), bern(0.0), 1),
      strategy_detail::reactive_last_joint("wsls_helper",
                                           "Plays H in round 1; repeats its previous action if the recipient worked "
                                           "last round, otherwise switches.",
                                           2, 2, bern(1.0), wsls_rule),
      strategy_detail::constant("noisy_help", "Plays H with probability 0.9 in every round.", 2, 2, bern(0.9)),
      strategy_detail::constant("noisy_nohelp", "Plays H with probability 0.1 in every round.", 2, 2, bern(0.1)),
  };
}

inline std::vector<StrategySpec> samaritan_recipient_menu() {
  return {
      strategy_detail::constant("always_work", "Always plays W.", 2, 2, bern(1.0)),
      strategy_detail::constant("always_shirk", "Always plays S.", 2, 2, bern(0.0)),
      strategy_detail::reactive_last_opp("work_if_helped",
                                         "Starts W or S with probability 0.5 each, then W iff the helper helped last "
                                         "round.",
                                         2, 2, bern(0.5), {bern(1.0), bern(0.0)}),
      strategy_detail::reactive_last_opp("exploit_help",
                                         "Starts W or S with probability 0.5 each, then W iff the helper did not help "
                                         "last round.",
                                         2, 2, bern(0.5), {bern(0.0), bern(1.0)}),
      strategy_detail::grim("grim_shirk_after_nohelp",
                            "Plays W until the helper has played N at least once, then S forever.", 2, 2, bern(1.0),
                            bern(0.0), 1),
      strategy_detail::reactive_last_opp("forgiving_work",
                                         "Plays W in round 1; W after the helper helped, otherwise W with probability "
                                         "0.3.",
                                         2, 2, bern(1.0), {bern(1.0), bern(0.3)}),
      strategy_detail::constant("noisy_work", "Plays W with probability 0.9 in every round.", 2, 2, bern(0.9)),
      strategy_detail::constant("noisy_shirk", "Plays W with probability 0.1 in every round.", 2, 2, bern(0.1)),
  };
}

inline std::vector<StrategySpec> lemons_seller_menu() {
  return {
      strategy_detail::constant("always_hq", "Always plays HQ.", 2, 2, bern(1.0)),
      strategy_detail::constant("always_lq", "Always plays LQ.", 2, 2, bern(0.0)),
      strategy_detail::reactive_last_opp("hq_if_bought_last",
                                         "Starts HQ or LQ with probability 0.5 each, then HQ iff the buyer bought last "
                                         "round.",
                                         2, 2, bern(0.5), {bern(1.0), bern(0.0)}),
      strategy_detail::grim("grim_hq_until_boycott",
                            "Plays HQ until the buyer has played D at least once, then LQ forever.", 2, 2, bern(1.0),
                            bern(0.0), 1),
      strategy_detail::reactive_last_opp("lq_if_boycott_last",
                                         "Starts HQ or LQ with probability 0.5 each, then LQ iff the buyer played D "
                                         "last round.",
                                         2, 2, bern(0.5), {bern(1.0), bern(0.0)}),
      strategy_detail::opp_window2("grim_forgiving",
                                   "Plays LQ if the buyer played D in either of the previous two rounds, otherwise HQ.",
                                   2, 2, bern(1.0), bern(0.0), 1),
      strategy_detail::constant("noisy_hq", "Plays HQ with probability 0.9 in every round.", 2, 2, bern(0.9)),
      strategy_detail::constant("noisy_lq", "Plays HQ with probability 0.1 in every round.", 2, 2, bern(0.1)),
  };
}

inline std::vector<StrategySpec> lemons_buyer_menu() {
  return {
      strategy_detail::constant("always_buy", "Always plays B.", 2, 2, bern(1.0)),
      strategy_detail::constant("never_buy", "Always plays D.", 2, 2, bern(0.0)),
      strategy_detail::constant("soft_always_buy", "Plays B with probability 0.9 in every round.", 2, 2, bern(0.9)),
      strategy_detail::constant("soft_never_buy", "Plays B with probability 0.1 in every round.", 2, 2, bern(0.1)),
      strategy_detail::reactive_last_opp("tft_buy",
                                         "Starts B or D with probability 0.5 each, then B iff the seller sold HQ last "
                                         "round.",
                                         2, 2, bern(0.5), {bern(1.0), bern(0.0)}),
      strategy_detail::reactive_last_opp("generous_buy",
                                         "Plays B in round 1; B after HQ, otherwise B with probability 0.3.", 2, 2,
                                         bern(1.0), {bern(1.0), bern(0.3)}),
      strategy_detail::grim("grim_boycott", "Plays B until the seller has sold LQ at least once, then D forever.", 2, 2,
                            bern(1.0), bern(0.0), 1),
      strategy_detail::opp_window2("grim_forgiving",
                                   "Plays D if the seller sold LQ in either of the previous two rounds, otherwise B.",
                                   2, 2, bern(1.0), bern(0.0), 1),
  };
}

inline std::vector<StrategySpec> harmony_menu() {
  auto wsls_rule = [](int own, int opp) {
    return MixedAction::point_mass(2, own == opp ? own : 1 - own);
  };
  return {
      strategy_detail::constant("allc", "Always plays C.", 2, 2, bern(1.0)),
      strategy_detail::constant("alld", "Always plays D.", 2, 2, bern(0.0)),
      strategy_detail::reactive_last_opp("tft", "Plays C in round 1, then copies the opponent's previous action.", 2, 2,
                                         bern(1.0), {bern(1.0), bern(0.0)}),
      strategy_detail::reactive_last_opp("stft", "Plays D in round 1, then copies the opponent's previous action.", 2,
                                         2, bern(0.0), {bern(1.0), bern(0.0)}),
      strategy_detail::reactive_last_opp("generous_tft",
                                         "Plays C in round 1; C after the opponent's C, otherwise C with probability "
                                         "0.3.",
                                         2, 2, bern(1.0), {bern(1.0), bern(0.3)}),
      strategy_detail::grim("grim_trigger", "Plays C until the opponent has played D at least once, then D forever.", 2,
                            2, bern(1.0), bern(0.0), 1),
      strategy_detail::reactive_last_joint("wsls_pavlov",
                                           "Plays C in round 1; repeats its previous action after a matched round and "
                                           "switches after a mismatch.",
                                           2, 2, bern(1.0), wsls_rule),
      strategy_detail::constant("random_pc", "Plays C with probability 0.5 in every round.", 2, 2, bern(0.5)),
  };
}

}  // namespace menus

// Registry of menus per (game, role). Roles of symmetric games share one menu.
inline const std::vector<StrategySpec>& menu_for(std::string_view game, int role) {
  static const std::vector<StrategySpec> bos = menus::bos_menu();
  static const std::vector<StrategySpec> pd = menus::pd_menu();
  static const std::vector<StrategySpec> promo = menus::promo_menu();
  static const std::vector<StrategySpec> sam_h = menus::samaritan_helper_menu();
  static const std::vector<StrategySpec> sam_r = menus::samaritan_recipient_menu();
  static const std::vector<StrategySpec> lem_s = menus::lemons_seller_menu();
  static const std::vector<StrategySpec> lem_b = menus::lemons_buyer_menu();
  static const std::vector<StrategySpec> harmony = menus::harmony_menu();
  if (role != 0 && role != 1) throw std::invalid_argument("role must be 0 or 1");
  if (game == "bos") return bos;
  if (game == "pd") return pd;
  if (game == "promo") return promo;
  if (game == "samaritan") return role == 0 ? sam_h : sam_r;
  if (game == "lemons") return role == 0 ? lem_s : lem_b;
  if (game == "harmony") return harmony;
  throw std::out_of_range("no menu registered for game '" + std::string(game) + "'");
}

inline const StrategySpec& find_strategy(const std::vector<StrategySpec>& menu, std::string_view label) {
  for (const auto& s : menu)
    if (s.label == label) return s;
  throw std::out_of_range("label '" + std::string(label) + "' not in menu");
}

// Labels + descriptions document consumed by the prompt builder.
inline json menu_document(const std::vector<StrategySpec>& menu) {
  json j = json::array();
  for (const auto& s : menu) j.push_back({{"label", s.label}, {"description", s.description}});
  return j;
}

}  // namespace replab
