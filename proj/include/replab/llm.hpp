#pragma once

#include <algorithm>
#include <cctype>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "replab/game.hpp"
#include "replab/strategy.hpp"

namespace replab::llm {

struct ProviderConfig {
  std::string endpoint;  // base URL of a chat-completions-compatible server, e.g. http://host:port/v1
  std::string model;
  std::string api_key;
  double temperature = 1.0;
  int max_retries = 3;
  int timeout_seconds = 30;

  void validate() const {
    if (max_retries < 0) throw std::invalid_argument("max_retries must be >= 0");
  }
};

struct PromptBundle {
  std::string system;
  std::string user;
};

namespace detail {

inline std::string fold(std::string s) {
  std::string out;
  for (char c : s) {
    if (!std::isspace(static_cast<unsigned char>(c))) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

inline std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

// Compact natural-language rules for one game, rendered deterministically.
inline std::string rules_text(const GameSpec& g, int role) {
  std::ostringstream os;
  os << "You are playing a repeated game called " << g.name << " against one opponent.\n";
  os << "Each round both players choose actions simultaneously.\n";
  os << "Your actions: ";
  for (int a = 0; a < g.num_actions(role); ++a) os << (a ? ", " : "") << g.actions[role][a];
  os << ". Opponent actions: ";
  for (int a = 0; a < g.num_actions(1 - role); ++a) os << (a ? ", " : "") << g.actions[1 - role][a];
  os << ".\nPer-round payoffs (you, opponent):\n";
  for (int a = 0; a < g.num_actions(role); ++a)
    for (int o = 0; o < g.num_actions(1 - role); ++o) {
      JointAction ja = role == 0 ? JointAction{a, o} : JointAction{o, a};
      os << "  you " << g.actions[role][a] << ", opponent " << g.actions[1 - role][o] << " -> ("
         << g.payoff_for(role, ja) << ", " << g.payoff_for(1 - role, ja) << ")\n";
    }
  return os.str();
}

// Opponent-strategy inference prompt. History tuples are rendered in the
// opponent's view: (opponent action, your action). The bundle always ends
// with the literal output instruction.
inline PromptBundle build_inference_prompt(const GameSpec& g, int role, const History& opp_view_h,
                                           const std::vector<StrategySpec>& menu, int t,
                                           const std::optional<std::string>& prior_label = {}) {
  if (menu.empty()) throw std::invalid_argument("menu must be nonempty");
  std::ostringstream os;
  os << rules_text(g, role);
  os << "Observed action history tuple format: (opponent action, your action).\n";
  os << "Infer the opponent strategy from the FIRST action in each tuple.\n";
  for (std::size_t u = 0; u < opp_view_h.size(); ++u)
    os << "Round " << (u + 1) << ": " << g.actions[1 - role][opp_view_h[u][0]] << ", "
       << g.actions[role][opp_view_h[u][1]] << "\n";
  os << "\nYou are inferring Player A's strategy (the opponent) in repeated " << g.name << ".\n";
  os << "Observed rounds so far: " << (t - 1) << ".\n";
  os << "Objective: sample one opponent strategy label according to your posterior belief over "
        "allowed labels.\n";
  os << "Estimate that posterior using ALL observed rounds (do not ignore older rounds), and focus "
        "on recent patterns.\n";
  os << "Allowed labels:\n";
  for (const auto& s : menu) os << "- " << s.label << ": " << s.description << "\n";
  if (prior_label) os << "Strongly expect Player A to play with strategy '" << *prior_label << "'.\n";
  os << "Output rule: do NOT output scores, reasoning, or ranking. Respond with exactly one label "
        "only.\n\n";
  os << "**Output only the label.**";
  return {"You infer repeated-game opponent strategies.", os.str()};
}

// Base-agent action prompt: rules + compact history + round banner + action query.
inline PromptBundle build_base_prompt(const GameSpec& g, int role, const History& own_view_h, int t,
                                      const std::vector<StrategySpec>& opp_menu,
                                      const std::optional<std::string>& prior_label = {}) {
  std::ostringstream os;
  os << rules_text(g, role);
  os << "Observed action history (your action, opponent action):\n";
  for (std::size_t u = 0; u < own_view_h.size(); ++u)
    os << "Round " << (u + 1) << ": " << g.actions[role][own_view_h[u][0]] << ", "
       << g.actions[1 - role][own_view_h[u][1]] << "\n";
  os << "You are currently playing round " << t << ".\n";
  os << "In repeated " << g.name
     << ", a strategy maps prior history to a player's next action (possibly probabilistically).\n";
  os << "Allowed strategies:\n";
  for (const auto& s : opp_menu) os << "- " << s.label << ": " << s.description << "\n";
  os << "Role mapping in this prompt:\n- Player A is the other player.\n- Player B is you.\n";
  os << "Observed rounds so far: " << (t - 1) << ".\n";
  if (prior_label) os << "Strongly expect Player A to play with strategy '" << *prior_label << "'.\n";
  os << "Allowed action tokens: ";
  for (int a = 0; a < g.num_actions(role); ++a) os << (a ? ", " : "") << g.actions[role][a];
  os << ".\nOutput rule: do NOT output scores, reasoning, or ranking.\n";
  os << "Respond with exactly one action only.\n\n";
  os << "Q: Which action do you choose, ";
  for (int a = 0; a < g.num_actions(role); ++a) {
    if (a) os << (a + 1 == g.num_actions(role) ? " or " : ", ");
    os << g.actions[role][a];
  }
  os << "?\nA:";
  return {"You play repeated games.", os.str()};
}

// SCoT two-stage prompts: stage 1 asks for a prediction of the opponent's
// next action; stage 2 asks for the best reply given that prediction.
inline PromptBundle build_scot_prompts(const GameSpec& g, int role, const History& own_view_h, int t,
                                       const std::optional<int>& predicted_opp_action = {}) {
  std::ostringstream os;
  os << rules_text(g, role);
  os << "Observed action history (your action, opponent action):\n";
  for (std::size_t u = 0; u < own_view_h.size(); ++u)
    os << "Round " << (u + 1) << ": " << g.actions[role][own_view_h[u][0]] << ", "
       << g.actions[1 - role][own_view_h[u][1]] << "\n";
  os << "You are currently playing round " << t << ".\n";
  int n_self = g.num_actions(role);
  int n_opp = g.num_actions(1 - role);
  if (!predicted_opp_action) {
    os << "Q: Which action do you predict the other player will choose, ";
    for (int o = 0; o < n_opp; ++o) {
      if (o) os << (o + 1 == n_opp ? " or " : ", ");
      os << "Option " << g.actions[1 - role][o];
    }
    os << "?\nA:";
  } else {
    os << "Q: Given that you think the other player will choose Option "
       << g.actions[1 - role][*predicted_opp_action] << " in round " << t << ",\n";
    os << "imagine the outcome for your possible actions (";
    for (int a = 0; a < n_self; ++a) os << (a ? (a + 1 == n_self ? " and " : ", ") : "") << "Option " << g.actions[role][a];
    os << "),\ncompare which gives you a better result, and then choose.\n";
    os << "Which Option do you think is the best to choose for you in this round, ";
    for (int a = 0; a < n_self; ++a) {
      if (a) os << (a + 1 == n_self ? " or " : ", ");
      os << "Option " << g.actions[role][a];
    }
    os << "?\nOutput only one token: ";
    for (int a = 0; a < n_self; ++a) os << (a ? " or " : "") << g.actions[role][a];
    os << ".\nA:";
  }
  return {"You play repeated games.", os.str()};
}

// Strict label parsing: the response must be exactly one allowed label after
// trimming and case-folding.
inline std::optional<int> parse_label(const std::string& response, const std::vector<StrategySpec>& menu) {
  std::string got = detail::fold(detail::trim(response));
  for (std::size_t i = 0; i < menu.size(); ++i)
    if (got == detail::fold(menu[i].label)) return static_cast<int>(i);
  return std::nullopt;
}

inline std::optional<int> parse_action(const std::string& response, const GameSpec& g, int role) {
  std::string got = detail::fold(detail::trim(response));
  for (int a = 0; a < g.num_actions(role); ++a)
    if (got == detail::fold(g.actions[role][a])) return a;
  return std::nullopt;
}

// Transport layer: POST to <endpoint>/chat/completions with the OpenAI-style
// JSON body; returns the assistant text, or nullopt on any transport error.
std::optional<std::string> query_chat(const ProviderConfig& provider, const PromptBundle& prompt);

struct LabelInference {
  bool fallback_to_likelihood = false;  // transport failure: caller uses likelihood mode
  int label_index = -1;
  int attempts = 0;
  bool parse_fallback = false;  // retries exhausted: deterministic first-label fallback
};

// Label-constrained inference with retries. Parse failures re-query up to
// provider.max_retries times and then fall back to the first menu label;
// transport failures signal fallback-to-likelihood instead.
inline LabelInference infer_label(const ProviderConfig& provider, const PromptBundle& prompt,
                                  const std::vector<StrategySpec>& menu) {
  provider.validate();
  LabelInference out;
  for (int attempt = 0; attempt <= provider.max_retries; ++attempt) {
    ++out.attempts;
    auto text = query_chat(provider, prompt);
    if (!text) {
      out.fallback_to_likelihood = true;
      return out;
    }
    if (auto idx = parse_label(*text, menu)) {
      out.label_index = *idx;
      return out;
    }
  }
  out.parse_fallback = true;
  out.label_index = 0;
  return out;
}

}  // namespace replab::llm

#ifndef REPLAB_NO_HTTP
#include <httplib.h>

namespace replab::llm {

inline std::optional<std::string> query_chat(const ProviderConfig& provider, const PromptBundle& prompt) {
  // Split endpoint into host:port and path prefix.
  std::string url = provider.endpoint;
  std::string rest;
  if (url.rfind("http://", 0) == 0) {
    rest = url.substr(7);
  } else if (url.rfind("https://", 0) == 0) {
    return std::nullopt;  // TLS not built in this environment
  } else {
    rest = url;
  }
  std::string host = rest, path_prefix;
  if (auto slash = rest.find('/'); slash != std::string::npos) {
    host = rest.substr(0, slash);
    path_prefix = rest.substr(slash);
  }
  while (!path_prefix.empty() && path_prefix.back() == '/') path_prefix.pop_back();

  httplib::Client cli(("http://" + host).c_str());
  cli.set_connection_timeout(provider.timeout_seconds);
  cli.set_read_timeout(provider.timeout_seconds);
  httplib::Headers headers;
  if (!provider.api_key.empty()) headers.emplace("Authorization", "Bearer " + provider.api_key);

  json body = {{"model", provider.model},
               {"temperature", provider.temperature},
               {"messages",
                {{{"role", "system"}, {"content", prompt.system}}, {{"role", "user"}, {"content", prompt.user}}}}};
  auto res = cli.Post((path_prefix + "/chat/completions").c_str(), headers, body.dump(), "application/json");
  if (!res || res->status != 200) return std::nullopt;
  try {
    json j = json::parse(res->body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (...) {
    return std::nullopt;
  }
}

}  // namespace replab::llm
#endif
