#include <catch2/catch_amalgamated.hpp>

#include "replab/game.hpp"
#include "replab/rng.hpp"

using namespace replab;

TEST_CASE("benchmark payoff entries match the matrices", "[game]") {
  GameSpec pd = pd_game();
  auto pr = pd.payoff_at({pd.action_index(0, "J"), pd.action_index(1, "J")});
  CHECK(pr[0] == 3.0);
  CHECK(pr[1] == 3.0);

  GameSpec bos = bos_game();
  auto bjf = bos.payoff_at({bos.action_index(0, "J"), bos.action_index(1, "F")});
  CHECK(bjf[0] == 0.0);
  CHECK(bjf[1] == 0.0);

  GameSpec promo = promo_game();
  auto ppr = promo.payoff_at({promo.action_index(0, "P"), promo.action_index(1, "R")});
  CHECK(ppr[0] == 4.0);
  CHECK(ppr[1] == -1.0);

  CHECK_THROWS_AS(pd.payoff_at({0, 5}), std::invalid_argument);
}

TEST_CASE("delta_min is the minimal nonzero payoff separation", "[game]") {
  CHECK(pd_game().delta_min == 2.0);
  CHECK(bos_game().delta_min == 3.0);
  CHECK(promo_game().delta_min == 1.0);
  CHECK(samaritan_game().delta_min == 1.0);
  CHECK(lemons_game().delta_min == 1.0);
}

TEST_CASE("suffix_kappa and update_state", "[game]") {
  History empty;
  CHECK(suffix_kappa(empty, 3).empty());

  History h = {{0, 0}, {0, 1}, {1, 0}, {1, 1}, {0, 0}};
  MemoryState s = suffix_kappa(h, 2);
  REQUIRE(s.size() == 2);
  CHECK(s[0] == JointAction{1, 1});
  CHECK(s[1] == JointAction{0, 0});
  CHECK(suffix_kappa(h, 0).empty());

  CHECK(update_state({}, {0, 1}, 2) == MemoryState{{0, 1}});
  CHECK(update_state({{0, 0}, {0, 1}}, {1, 1}, 2) == (MemoryState{{0, 1}, {1, 1}}));
  CHECK(update_state({{0, 0}}, {0, 1}, 3) == (MemoryState{{0, 0}, {0, 1}}));

  // Idempotence: re-truncating a state changes nothing.
  RngStream rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    int kappa = rng.next_int(4);
    History rand_h;
    int len = rng.next_int(9);
    for (int i = 0; i < len; ++i) rand_h.push_back({rng.next_int(2), rng.next_int(2)});
    MemoryState st = suffix_kappa(rand_h, kappa);
    CHECK(suffix_kappa(st, kappa) == st);
    JointAction a = {rng.next_int(2), rng.next_int(2)};
    MemoryState u = update_state(st, a, kappa);
    History appended = rand_h;
    appended.push_back(a);
    CHECK(u == suffix_kappa(appended, kappa));
  }
}

TEST_CASE("stage best responses", "[game]") {
  GameSpec pd = pd_game();
  auto [set1, v1] = stage_best_responses(pd, 0, MixedAction::point_mass(2, 0));
  CHECK(set1 == std::vector<int>{1});
  CHECK(v1 == 5.0);

  GameSpec bos = bos_game();
  auto [set2, v2] = stage_best_responses(bos, 0, MixedAction::point_mass(2, 0));
  CHECK(set2 == std::vector<int>{0});
  CHECK(v2 == 10.0);

  auto [set3, v3] = stage_best_responses(pd, 0, MixedAction{{0.5, 0.5}});
  CHECK(set3 == std::vector<int>{1});
  CHECK(v3 == Catch::Approx(2.5));
}

TEST_CASE("stage best responses are invariant under positive affine payoff maps", "[game][property]") {
  RngStream rng(2024);
  for (const auto& name : benchmark_game_names()) {
    GameSpec g = builtin_game(name);
    for (int trial = 0; trial < 50; ++trial) {
      int player = rng.next_int(2);
      MixedAction q;
      q.p.resize(g.num_actions(1 - player));
      double sum = 0.0;
      for (auto& x : q.p) {
        x = rng.next_double() + 1e-3;
        sum += x;
      }
      for (auto& x : q.p) x /= sum;
      auto [base_set, base_v] = stage_best_responses(g, player, q);

      GameSpec scaled = g;
      double a = 0.5 + 2.0 * rng.next_double();
      double b = -3.0 + 6.0 * rng.next_double();
      for (auto& cell : scaled.payoff) cell[player] = a * cell[player] + b;
      scaled.delta_min = derive_delta_min(scaled);
      auto [scaled_set, scaled_v] = stage_best_responses(scaled, player, q);
      CHECK(base_set == scaled_set);
      CHECK(scaled_v == Catch::Approx(a * base_v + b).margin(1e-9));
    }
  }
}

namespace {

// Independent oracle: a pure profile is a Nash equilibrium iff no player has
// a strictly better pure deviation.
bool pure_nash_brute_force(const GameSpec& g, JointAction prof) {
  for (int a = 0; a < g.num_actions(0); ++a)
    if (g.payoff_for(0, {a, prof[1]}) > g.payoff_for(0, prof) + 1e-12) return false;
  for (int a = 0; a < g.num_actions(1); ++a)
    if (g.payoff_for(1, {prof[0], a}) > g.payoff_for(1, prof) + 1e-12) return false;
  return true;
}

}  // namespace

TEST_CASE("stage eps-Nash agrees with brute force on all pure profiles", "[game]") {
  for (const auto& name : benchmark_game_names()) {
    GameSpec g = builtin_game(name);
    for (int a1 = 0; a1 < g.num_actions(0); ++a1)
      for (int a2 = 0; a2 < g.num_actions(1); ++a2) {
        std::array<MixedAction, 2> prof = {MixedAction::point_mass(g.num_actions(0), a1),
                                           MixedAction::point_mass(g.num_actions(1), a2)};
        CHECK(is_stage_epsilon_nash(g, prof, 0.0) == pure_nash_brute_force(g, {a1, a2}));
      }
  }
}

TEST_CASE("stage eps-Nash boundary cases", "[game]") {
  GameSpec pd = pd_game();
  auto dJ = MixedAction::point_mass(2, 0);
  auto dF = MixedAction::point_mass(2, 1);
  CHECK(is_stage_epsilon_nash(pd, {dF, dF}, 0.0));
  CHECK_FALSE(is_stage_epsilon_nash(pd, {dJ, dJ}, 0.0));
  CHECK(is_stage_epsilon_nash(pd, {dJ, dJ}, 2.0));  // deviation gain is exactly 2
  CHECK_THROWS_AS(is_stage_epsilon_nash(pd, {dJ, dJ}, -1.0), std::invalid_argument);
}

TEST_CASE("game config loading", "[game]") {
  json j = json::parse(R"({
    "name": "mini",
    "roles": ["row", "col"],
    "actions": [["a", "b"], ["x", "y"]],
    "payoff": [[[1, 0], [0, 1]], [[0, 1], [1, 0]]]
  })");
  GameSpec g = game_from_json(j);
  CHECK(g.name == "mini");
  CHECK(g.num_actions(0) == 2);
  CHECK(g.delta_min == 1.0);
  CHECK(g.payoff_for(1, {1, 0}) == 1.0);

  j["delta_min"] = 0.25;
  CHECK_THROWS_AS(game_from_json(j), std::invalid_argument);

  CHECK(builtin_game("pd").name == "pd");
  CHECK_THROWS_AS(builtin_game("chess"), std::invalid_argument);
}
