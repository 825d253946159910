#pragma once

#include <atomic>
#include <functional>
#include <future>
#include <optional>
#include <string>
#include <vector>

#include "replab/belief.hpp"
#include "replab/game.hpp"
#include "replab/llm.hpp"
#include "replab/payoff_belief.hpp"
#include "replab/planner.hpp"
#include "replab/rng.hpp"
#include "replab/strategy.hpp"

namespace replab {

enum class AgentKind { base, scot, myopic_psbr, psbr, fixed, custom };
enum class InferenceMode { likelihood, llm_label };
enum class PayoffMode { known, gaussian_unknown };

inline std::string to_string(AgentKind k) {
  switch (k) {
    case AgentKind::base: return "base";
    case AgentKind::scot: return "scot";
    case AgentKind::myopic_psbr: return "myopic_psbr";
    case AgentKind::psbr: return "psbr";
    case AgentKind::fixed: return "fixed";
    case AgentKind::custom: return "custom";
  }
  return "?";
}

inline AgentKind agent_kind_from_string(std::string_view s) {
  if (s == "base") return AgentKind::base;
  if (s == "scot") return AgentKind::scot;
  if (s == "myopic_psbr") return AgentKind::myopic_psbr;
  if (s == "psbr") return AgentKind::psbr;
  if (s.rfind("fixed", 0) == 0) return AgentKind::fixed;
  throw std::invalid_argument("unknown agent kind '" + std::string(s) + "'");
}

// Everything an agent's round decision may condition on. In the private-payoff
// mode this is exactly (public history, own rewards): the engine never exposes
// the other player's reward stream.
struct DecisionContext {
  int round = 1;
  int role = 0;
  History public_history;
  std::vector<double> own_rewards;

  json to_json() const {
    json rounds = json::array();
    for (const auto& r : public_history) rounds.push_back({r[0], r[1]});
    return {{"round", round}, {"role", role}, {"public_history", rounds}, {"own_rewards", own_rewards}};
  }
};

struct AgentConfig {
  AgentKind kind = AgentKind::psbr;
  std::string fixed_label;                         // kind == fixed
  std::optional<std::string> prior_label;          // collusive tilt on the opponent's menu
  std::function<int(const DecisionContext&)> custom;  // kind == custom (test hook)
};

struct MatchConfig {
  GameSpec game;
  std::array<AgentConfig, 2> agents;
  PlannerConfig planner;
  double temperature = 1.0;
  double prior_tilt_log = 4.605170185988091;  // beta = ln 100
  InferenceMode inference = InferenceMode::likelihood;
  PayoffMode payoff_mode = PayoffMode::known;
  int rounds = 200;
  std::uint64_t seed = 0;
  std::optional<llm::ProviderConfig> provider;

  void validate() const {
    if (rounds < 1) throw std::invalid_argument("rounds must be >= 1");
    planner.validate();
    for (int i = 0; i < 2; ++i) {
      if (agents[i].kind == AgentKind::fixed) find_strategy(menu_for(game.name, i), agents[i].fixed_label);
      if (agents[i].kind == AgentKind::custom && !agents[i].custom)
        throw std::invalid_argument("custom agent requires a decision function");
      if (agents[i].prior_label) find_strategy(menu_for(game.name, 1 - i), *agents[i].prior_label);
    }
  }
};

struct RoundEntry {
  int round = 0;
  JointAction joint{};                       // role-ordered action indices
  std::array<double, 2> rewards{};
  std::array<int, 2> sampled_label{-1, -1};  // index into the opponent menu, -1 if n/a
  std::array<int, 2> chosen_label{-1, -1};   // PS-BR's chosen self-strategy
  std::array<int, 2> predicted_action{-1, -1};  // SCoT point prediction
  std::array<std::vector<double>, 2> posterior;  // label weights used this round
  std::array<double, 2> collision{};
  std::array<double, 2> truth_mass{1.0, 1.0};
  std::array<double, 2> delta{0.0, 0.0};
  std::array<std::vector<double>, 2> candidate_values;
  std::array<MixedAction, 2> realized_mixed;
  std::array<bool, 2> llm_fallback{false, false};
};

struct MatchRecord {
  std::string game_name;
  std::array<std::string, 2> agent_kinds;
  std::array<std::string, 2> prior_labels;  // empty when unset
  std::string inference;
  std::string payoff_mode;
  double temperature = 1.0;
  double prior_tilt_log = 0.0;
  PlannerConfig planner;
  int rounds = 0;
  std::uint64_t seed = 0;
  std::vector<RoundEntry> entries;
};

// ---------------------------------------------------------------------------
// Record serialization (JSON-lines: one header object, then one line per round).

inline json record_header_json(const MatchRecord& r) {
  return {{"type", "header"},
          {"game", r.game_name},
          {"agents", {r.agent_kinds[0], r.agent_kinds[1]}},
          {"prior_labels", {r.prior_labels[0], r.prior_labels[1]}},
          {"inference", r.inference},
          {"payoff_mode", r.payoff_mode},
          {"temperature", r.temperature},
          {"prior_tilt_log", r.prior_tilt_log},
          {"planner",
           {{"rollout_samples", r.planner.rollout_samples},
            {"horizon", r.planner.horizon},
            {"gamma", r.planner.gamma},
            {"total_rounds", r.planner.total_rounds},
            {"tie_break_salt", r.planner.tie_break_salt}}},
          {"rounds", r.rounds},
          {"seed", r.seed}};
}

inline json round_entry_json(const RoundEntry& e) {
  json j = {{"t", e.round},
            {"joint", {e.joint[0], e.joint[1]}},
            {"rewards", {e.rewards[0], e.rewards[1]}},
            {"sampled_label", {e.sampled_label[0], e.sampled_label[1]}},
            {"chosen_label", {e.chosen_label[0], e.chosen_label[1]}},
            {"predicted_action", {e.predicted_action[0], e.predicted_action[1]}},
            {"posterior", {e.posterior[0], e.posterior[1]}},
            {"collision", {e.collision[0], e.collision[1]}},
            {"truth_mass", {e.truth_mass[0], e.truth_mass[1]}},
            {"delta", {e.delta[0], e.delta[1]}},
            {"candidate_values", {e.candidate_values[0], e.candidate_values[1]}},
            {"mixed", {e.realized_mixed[0].p, e.realized_mixed[1].p}},
            {"llm_fallback", {e.llm_fallback[0], e.llm_fallback[1]}}};
  return j;
}

inline std::string record_to_jsonl(const MatchRecord& r) {
  std::string out = record_header_json(r).dump();
  out.push_back('\n');
  for (const auto& e : r.entries) {
    out += round_entry_json(e).dump();
    out.push_back('\n');
  }
  return out;
}

// ---------------------------------------------------------------------------
// The self-play loop. Per round each player first decides from its own
// information (simultaneity is structural: decisions are computed before
// either action is revealed), then actions resolve, rewards realize, and
// beliefs update. Every random draw comes from a stream keyed by
// (seed, player, round, purpose), so replaying a config+seed reproduces the
// record bit-for-bit and trials parallelize safely.

namespace sim_detail {

constexpr std::uint64_t kPurposeDecide = 1;
constexpr std::uint64_t kPurposeReward = 2;
constexpr std::uint64_t kPurposeMatrix = 3;

struct PlayerState {
  std::vector<StrategySpec> own_menu;
  LabelPosterior posterior{};  // over the opponent's menu
  std::optional<OffsetPosterior> payoff_post;
  std::vector<double> true_payoff;  // own-view
  std::vector<double> rewards;
  int fixed_index = -1;
};

inline History own_view(const History& public_h, int player) {
  if (player == 0) return public_h;
  return opponent_view(public_h);
}

}  // namespace sim_detail

inline MatchRecord run_match(const MatchConfig& cfg_in) {
  MatchConfig cfg = cfg_in;
  cfg.validate();
  cfg.planner.total_rounds = cfg.rounds;
  // llm-label mode without a configured provider falls back to likelihood.
  if (cfg.inference == InferenceMode::llm_label && !cfg.provider) cfg.inference = InferenceMode::likelihood;

  const GameSpec& g = cfg.game;
  std::array<sim_detail::PlayerState, 2> ps;
  for (int i = 0; i < 2; ++i) {
    ps[i].own_menu = menu_for(g.name, i);
    auto opp_menu = menu_for(g.name, 1 - i);
    if (cfg.agents[i].prior_label)
      ps[i].posterior = LabelPosterior::tilted_prior(opp_menu, *cfg.agents[i].prior_label,
                                                     cfg.prior_tilt_log, cfg.temperature);
    else
      ps[i].posterior = LabelPosterior::uniform_prior(opp_menu, cfg.temperature);
    ps[i].true_payoff = g.own_payoff_table(i);
    if (cfg.payoff_mode == PayoffMode::gaussian_unknown)
      ps[i].payoff_post = OffsetPosterior::uniform_prior(ps[i].true_payoff, sigma_for_game(g));
    if (cfg.agents[i].kind == AgentKind::fixed)
      ps[i].fixed_index = static_cast<int>(&find_strategy(ps[i].own_menu, cfg.agents[i].fixed_label) -
                                           ps[i].own_menu.data());
  }

  MatchRecord rec;
  rec.game_name = g.name;
  for (int i = 0; i < 2; ++i) {
    rec.agent_kinds[i] = to_string(cfg.agents[i].kind);
    if (cfg.agents[i].kind == AgentKind::fixed) rec.agent_kinds[i] += ":" + cfg.agents[i].fixed_label;
    rec.prior_labels[i] = cfg.agents[i].prior_label.value_or("");
  }
  rec.inference = cfg.inference == InferenceMode::likelihood ? "likelihood" : "llm-label";
  rec.payoff_mode = cfg.payoff_mode == PayoffMode::known ? "known" : "gaussian-unknown";
  rec.temperature = cfg.temperature;
  rec.prior_tilt_log = cfg.prior_tilt_log;
  rec.planner = cfg.planner;
  rec.rounds = cfg.rounds;
  rec.seed = cfg.seed;

  History public_h;
  for (int t = 1; t <= cfg.rounds; ++t) {
    RoundEntry e;
    e.round = t;
    std::array<int, 2> actions{};
    for (int i = 0; i < 2; ++i) {
      const History own_h = sim_detail::own_view(public_h, i);
      std::uint64_t decide_key = derive_key(cfg.seed, i, t, sim_detail::kPurposeDecide);
      e.posterior[i] = posterior_weights(ps[i].posterior);
      e.collision[i] = collision_complement(e.posterior[i]);
      std::span<const double> payoff_span = ps[i].true_payoff;
      std::vector<double> sampled_matrix, mode_matrix;
      if (ps[i].payoff_post) {
        auto tm = truth_mass(*ps[i].payoff_post);
        e.truth_mass[i] = tm.truth_mass;
        e.delta[i] = tm.delta;
        RngStream mrng = make_stream(cfg.seed, i, t, sim_detail::kPurposeMatrix);
        sampled_matrix = sample_mean_matrix(*ps[i].payoff_post, mrng);
      }
      switch (cfg.agents[i].kind) {
        case AgentKind::base: {
          bool decided = false;
          if (cfg.provider) {
            auto bundle = llm::build_base_prompt(g, i, own_h, t, ps[i].posterior.menu,
                                                 cfg.agents[i].prior_label);
            if (auto text = llm::query_chat(*cfg.provider, bundle)) {
              if (auto a = llm::parse_action(*text, g, i)) {
                actions[i] = *a;
                decided = true;
              }
            }
            if (!decided) e.llm_fallback[i] = true;
          }
          if (!decided) {
            RngStream rng = make_stream(decide_key, 0xba5e);
            actions[i] = base_decide(g, i, rng);
          }
          e.realized_mixed[i] = MixedAction::uniform(g.num_actions(i));
          break;
        }
        case AgentKind::scot: {
          std::span<const double> scot_payoff{};
          if (ps[i].payoff_post) {
            mode_matrix = map_mean_matrix(*ps[i].payoff_post);
            scot_payoff = mode_matrix;
          }
          auto d = scot_decide(g, i, own_h, t, ps[i].posterior, scot_payoff);
          actions[i] = d.action;
          e.predicted_action[i] = d.predicted_opponent_action;
          e.realized_mixed[i] = MixedAction::point_mass(g.num_actions(i), d.action);
          break;
        }
        case AgentKind::myopic_psbr: {
          if (ps[i].payoff_post) payoff_span = sampled_matrix;
          auto d = myopic_psbr_decide(g, i, own_h, t, ps[i].posterior, decide_key,
                                      cfg.planner.tie_break_salt, payoff_span);
          actions[i] = d.action;
          e.sampled_label[i] = d.sampled_opponent_label;
          e.realized_mixed[i] = d.ex_ante;
          break;
        }
        case AgentKind::psbr: {
          if (ps[i].payoff_post) payoff_span = sampled_matrix;
          LabelPosterior* post = &ps[i].posterior;
          LabelPosterior llm_post{};  // point-mass stand-in when a label came from the provider
          if (cfg.inference == InferenceMode::llm_label && cfg.provider) {
            auto bundle = llm::build_inference_prompt(g, i, opponent_view(own_h), ps[i].posterior.menu,
                                                      t, cfg.agents[i].prior_label);
            auto inf = llm::infer_label(*cfg.provider, bundle, ps[i].posterior.menu);
            if (!inf.fallback_to_likelihood) {
              llm_post = ps[i].posterior;
              // Force the sampled label: PS-BR holds it fixed for the round.
              for (std::size_t k = 0; k < llm_post.log_likelihoods.size(); ++k)
                llm_post.log_likelihoods[k] = (static_cast<int>(k) == inf.label_index) ? 0.0 : -1e9;
              post = &llm_post;
            } else {
              e.llm_fallback[i] = true;
            }
          }
          auto d = psbr_decide(g, i, own_h, t, *post, ps[i].own_menu, cfg.planner, decide_key,
                               payoff_span);
          actions[i] = d.action;
          e.sampled_label[i] = d.sampled_opponent_label;
          e.chosen_label[i] = d.chosen_self_label;
          e.candidate_values[i] = d.candidate_values;
          e.realized_mixed[i] = ps[i].own_menu[d.chosen_self_label].action_distribution(t, own_h);
          break;
        }
        case AgentKind::fixed: {
          RngStream rng = make_stream(decide_key, 0xf1f0);
          actions[i] = ps[i].own_menu[ps[i].fixed_index].sample_action(t, own_h, rng);
          e.realized_mixed[i] = ps[i].own_menu[ps[i].fixed_index].action_distribution(t, own_h);
          break;
        }
        case AgentKind::custom: {
          DecisionContext ctx{t, i, public_h, ps[i].rewards};
          actions[i] = cfg.agents[i].custom(ctx);
          e.realized_mixed[i] = MixedAction::point_mass(g.num_actions(i), actions[i]);
          break;
        }
      }
    }

    // Resolve simultaneously.
    e.joint = {actions[0], actions[1]};
    for (int i = 0; i < 2; ++i) {
      double mean = g.payoff_for(i, e.joint);
      if (cfg.payoff_mode == PayoffMode::gaussian_unknown) {
        RngStream rng = make_stream(cfg.seed, i, t, sim_detail::kPurposeReward);
        e.rewards[i] = mean + sigma_for_game(g) * rng.next_gaussian();
      } else {
        e.rewards[i] = mean;
      }
    }

    // Updates: public history, label posteriors, payoff posteriors, reward logs.
    public_h.push_back(e.joint);
    for (int i = 0; i < 2; ++i) {
      int own = i == 0 ? e.joint[0] : e.joint[1];
      int opp = i == 0 ? e.joint[1] : e.joint[0];
      ps[i].posterior.observe(opp, own);
      if (ps[i].payoff_post) {
        int own_joint = own * g.num_actions(1 - i) + opp;
        *ps[i].payoff_post = update(*ps[i].payoff_post, own_joint, e.rewards[i]);
      }
      ps[i].rewards.push_back(e.rewards[i]);
    }
    rec.entries.push_back(std::move(e));
  }
  return rec;
}

// Seed-derived independent trials; safe to run in parallel, and results are
// identical at any parallelism level because trial k's record depends only on
// (seed_base, config index, k).
inline std::vector<MatchRecord> run_suite(const std::vector<MatchConfig>& configs, int trials_per_config,
                                          std::uint64_t seed_base, int parallelism = 1) {
  if (trials_per_config < 1) throw std::invalid_argument("trials_per_config must be >= 1");
  std::vector<MatchConfig> jobs;
  for (std::size_t c = 0; c < configs.size(); ++c)
    for (int k = 0; k < trials_per_config; ++k) {
      MatchConfig mc = configs[c];
      mc.seed = derive_key(seed_base, c, k);
      jobs.push_back(std::move(mc));
    }
  std::vector<MatchRecord> out(jobs.size());
  if (parallelism <= 1) {
    for (std::size_t j = 0; j < jobs.size(); ++j) out[j] = run_match(jobs[j]);
    return out;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      std::size_t j = next.fetch_add(1);
      if (j >= jobs.size()) return;
      out[j] = run_match(jobs[j]);
    }
  };
  std::vector<std::future<void>> futs;
  for (int w = 0; w < parallelism; ++w) futs.push_back(std::async(std::launch::async, worker));
  for (auto& f : futs) f.get();
  return out;
}

// ---------------------------------------------------------------------------

inline MatchRecord record_from_jsonl(const std::string& text) {
  MatchRecord r;
  std::size_t pos = 0;
  bool have_header = false;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string line = text.substr(pos, eol - pos);
    pos = eol + 1;
    if (line.empty()) continue;
    json j = json::parse(line);
    if (!have_header) {
      if (j.value("type", "") != "header") throw std::invalid_argument("record must start with a header line");
      r.game_name = j.at("game").get<std::string>();
      r.agent_kinds = {j.at("agents").at(0).get<std::string>(), j.at("agents").at(1).get<std::string>()};
      r.prior_labels = {j.at("prior_labels").at(0).get<std::string>(),
                        j.at("prior_labels").at(1).get<std::string>()};
      r.inference = j.at("inference").get<std::string>();
      r.payoff_mode = j.at("payoff_mode").get<std::string>();
      r.temperature = j.at("temperature").get<double>();
      r.prior_tilt_log = j.at("prior_tilt_log").get<double>();
      const auto& p = j.at("planner");
      r.planner.rollout_samples = p.at("rollout_samples").get<int>();
      r.planner.horizon = p.at("horizon").get<int>();
      r.planner.gamma = p.at("gamma").get<double>();
      r.planner.total_rounds = p.at("total_rounds").get<int>();
      r.planner.tie_break_salt = p.at("tie_break_salt").get<std::uint64_t>();
      r.rounds = j.at("rounds").get<int>();
      r.seed = j.at("seed").get<std::uint64_t>();
      have_header = true;
      continue;
    }
    RoundEntry e;
    e.round = j.at("t").get<int>();
    e.joint = {j.at("joint").at(0).get<int>(), j.at("joint").at(1).get<int>()};
    e.rewards = {j.at("rewards").at(0).get<double>(), j.at("rewards").at(1).get<double>()};
    e.sampled_label = {j.at("sampled_label").at(0).get<int>(), j.at("sampled_label").at(1).get<int>()};
    e.chosen_label = {j.at("chosen_label").at(0).get<int>(), j.at("chosen_label").at(1).get<int>()};
    e.predicted_action = {j.at("predicted_action").at(0).get<int>(), j.at("predicted_action").at(1).get<int>()};
    for (int i = 0; i < 2; ++i) {
      e.posterior[i] = j.at("posterior").at(i).get<std::vector<double>>();
      e.candidate_values[i] = j.at("candidate_values").at(i).get<std::vector<double>>();
      e.realized_mixed[i].p = j.at("mixed").at(i).get<std::vector<double>>();
      e.collision[i] = j.at("collision").at(i).get<double>();
      e.truth_mass[i] = j.at("truth_mass").at(i).get<double>();
      e.delta[i] = j.at("delta").at(i).get<double>();
      e.llm_fallback[i] = j.at("llm_fallback").at(i).get<bool>();
    }
    r.entries.push_back(std::move(e));
  }
  if (!have_header) throw std::invalid_argument("empty record");
  return r;
}

}  // namespace replab
