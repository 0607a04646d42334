#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace ragscrape {

/// robots.txt rules for one user agent. Group selection is by
/// case-insensitive product token, falling back to "*". The longest
/// matching Allow/Disallow pattern wins and Allow wins ties. Patterns
/// support '*' and a trailing '$'.
class RobotsRules {
 public:
  static RobotsRules parse(std::string_view body, std::string_view user_agent);
  static RobotsRules allow_all() { return RobotsRules{}; }
  static RobotsRules disallow_all();

  /// `path` is the URL path plus query, starting with '/'.
  bool allowed(std::string_view path) const;

 private:
  struct Rule {
    bool allow;
    std::string pattern;
  };
  std::vector<Rule> rules_;
};

}  // namespace ragscrape
