#include <gtest/gtest.h>

#include "ragscrape/robots.hpp"
#include "test_support.hpp"

using ragscrape::RobotsRules;

TEST(Robots, PrefixDisallow) {
  const auto r = RobotsRules::parse("User-agent: *\nDisallow: /private/\n", "ragscrape/0.1");
  EXPECT_FALSE(r.allowed("/private/x"));
  EXPECT_TRUE(r.allowed("/public"));
  EXPECT_TRUE(r.allowed("/private"));
}

TEST(Robots, SpecificGroupReplacesWildcard) {
  const auto body = ragscrape::testkit::read_file(RAGSCRAPE_FIXTURE_DIR "/robots/groups.txt");
  const auto mine = RobotsRules::parse(body, "RagScrape/0.1 (+https://example.test)");
  EXPECT_TRUE(mine.allowed("/private/x"));
  EXPECT_FALSE(mine.allowed("/admin/users"));
  EXPECT_TRUE(mine.allowed("/admin/help/faq"));
  EXPECT_FALSE(mine.allowed("/docs/a.pdf"));
  EXPECT_TRUE(mine.allowed("/docs/a.pdf?x=1"));

  const auto other = RobotsRules::parse(body, "otherbot");
  EXPECT_FALSE(other.allowed("/private/x"));
  EXPECT_TRUE(other.allowed("/private/public-note"));
  EXPECT_TRUE(other.allowed("/admin"));
}

TEST(Robots, LongestMatchAndAllowWinsTies) {
  const auto r = RobotsRules::parse("User-agent: *\nDisallow: /a\nAllow: /a\nDisallow: /b/c\nAllow: /b\n", "x");
  EXPECT_TRUE(r.allowed("/a/1"));
  EXPECT_FALSE(r.allowed("/b/c/d"));
  EXPECT_TRUE(r.allowed("/b/d"));
}

TEST(Robots, EmptyDisallowAllowsAll) {
  const auto r = RobotsRules::parse("User-agent: *\nDisallow:\n", "x");
  EXPECT_TRUE(r.allowed("/anything"));
}

TEST(Robots, CommentsAndCaseInsensitiveKeys) {
  const auto r = RobotsRules::parse("# hi\nUSER-AGENT: *  # all\nDISALLOW: /x # no\n", "x");
  EXPECT_FALSE(r.allowed("/x/y"));
}

TEST(Robots, WildcardMatching) {
  const auto r = RobotsRules::parse("User-agent: *\nDisallow: /*/secret\nDisallow: /end$\n", "x");
  EXPECT_FALSE(r.allowed("/a/b/secret/c"));
  EXPECT_TRUE(r.allowed("/secret"));
  EXPECT_FALSE(r.allowed("/end"));
  EXPECT_TRUE(r.allowed("/endless"));
}

TEST(Robots, Presets) {
  EXPECT_TRUE(RobotsRules::allow_all().allowed("/x"));
  EXPECT_FALSE(RobotsRules::disallow_all().allowed("/x"));
  EXPECT_TRUE(RobotsRules::disallow_all().allowed("/robots.txt"));
}
