#include "ragscrape/robots.hpp"

#include <algorithm>
#include <cctype>

namespace ragscrape {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Product token: "Foo-Bot/2.1 (+http://x)" -> "foo-bot".
std::string product_token(std::string_view user_agent) {
  user_agent = trim(user_agent);
  const auto end = user_agent.find_first_of("/ ");
  return lower(user_agent.substr(0, end));
}

// Glob match with '*' wildcards and optional '$' end anchor, anchored at
// the start of the path.
bool pattern_matches(std::string_view pattern, std::string_view path) {
  bool anchored = false;
  if (!pattern.empty() && pattern.back() == '$') {
    anchored = true;
    pattern.remove_suffix(1);
  }
  // Iterative wildcard matching; `p`/`s` indices with backtracking to the
  // most recent '*'.
  std::size_t p = 0, s = 0, star = std::string_view::npos, mark = 0;
  while (true) {
    if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      mark = s;
      continue;
    }
    if (p == pattern.size()) {
      if (!anchored || s == path.size()) return true;
    } else if (s < path.size() && pattern[p] == path[s]) {
      ++p;
      ++s;
      continue;
    }
    if (star == std::string_view::npos || mark >= path.size()) return false;
    p = star + 1;
    s = ++mark;
  }
}

}  // namespace

RobotsRules RobotsRules::disallow_all() {
  RobotsRules r;
  r.rules_.push_back({false, "/"});
  return r;
}

RobotsRules RobotsRules::parse(std::string_view body, std::string_view user_agent) {
  const std::string token = product_token(user_agent);

  struct Group {
    std::vector<std::string> agents;
    std::vector<Rule> rules;
  };
  std::vector<Group> groups;
  bool last_was_agent = false;

  std::size_t pos = 0;
  while (pos <= body.size()) {
    auto eol = body.find_first_of("\r\n", pos);
    if (eol == std::string_view::npos) eol = body.size();
    std::string_view line = body.substr(pos, eol - pos);
    pos = eol + 1;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) continue;
    const std::string key = lower(trim(line.substr(0, colon)));
    const std::string_view value = trim(line.substr(colon + 1));

    if (key == "user-agent") {
      if (!last_was_agent || groups.empty()) groups.emplace_back();
      groups.back().agents.push_back(lower(value));
      last_was_agent = true;
    } else if (key == "allow" || key == "disallow") {
      last_was_agent = false;
      if (groups.empty()) continue;
      if (value.empty()) continue;  // "Disallow:" with no path allows everything
      groups.back().rules.push_back({key == "allow", std::string(value)});
    } else {
      last_was_agent = false;
    }
  }

  RobotsRules specific, fallback;
  bool have_specific = false;
  for (const auto& g : groups) {
    for (const auto& agent : g.agents) {
      if (agent == "*") {
        fallback.rules_.insert(fallback.rules_.end(), g.rules.begin(), g.rules.end());
      } else if (!token.empty() && agent == token) {
        have_specific = true;
        specific.rules_.insert(specific.rules_.end(), g.rules.begin(), g.rules.end());
      }
    }
  }
  return have_specific ? specific : fallback;
}

bool RobotsRules::allowed(std::string_view path) const {
  if (path == "/robots.txt") return true;
  const Rule* best = nullptr;
  for (const auto& rule : rules_) {
    if (!pattern_matches(rule.pattern, path)) continue;
    if (!best || rule.pattern.size() > best->pattern.size() ||
        (rule.pattern.size() == best->pattern.size() && rule.allow && !best->allow)) {
      best = &rule;
    }
  }
  return best == nullptr || best->allow;
}

}  // namespace ragscrape
