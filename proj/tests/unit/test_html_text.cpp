#include <gtest/gtest.h>

#include <filesystem>
#include <regex>

#include "ragscrape/ingest.hpp"
#include "test_support.hpp"

using namespace ragscrape;

namespace {

const std::regex kTag("<[A-Za-z/]");

std::string collapse(const std::string& s) {
  std::string out;
  bool ws = false;
  for (char c : s) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      ws = true;
      continue;
    }
    if (ws && !out.empty()) out += ' ';
    ws = false;
    out += c;
  }
  return out;
}

}  // namespace

TEST(HtmlText, SingleBlock) { EXPECT_EQ(extract_text("<p>hi</p>"), "hi"); }

TEST(HtmlText, NestedBlocks) { EXPECT_EQ(extract_text("<div><p>a</p><p>b</p></div>"), "a\n\nb"); }

TEST(HtmlText, ScriptDropped) { EXPECT_EQ(extract_text("<p>x <script>evil()</script>y</p>"), "x y"); }

TEST(HtmlText, DroppedContainers) {
  EXPECT_EQ(extract_text("<html><head><title>T</title><style>p{}</style></head><body><p>a<!-- c -->b</p>"
                         "<noscript>n</noscript></body></html>"),
            "ab");
}

TEST(HtmlText, Entities) {
  EXPECT_EQ(extract_text("<p>Tom &amp; Jerry &copy; &#169; &#x41; &mdash; &bogus;</p>"),
            "Tom & Jerry \xC2\xA9 \xC2\xA9 A \xE2\x80\x94 &bogus;");
}

TEST(HtmlText, InlineElementsAddNoSeparator) {
  EXPECT_EQ(extract_text("<p>a<b>b</b><span>c</span> <em>d</em></p>"), "abc d");
}

TEST(HtmlText, PreKeepsWhitespace) {
  EXPECT_EQ(extract_text("<pre>a  b\n  c</pre><p>x   y</p>"), "a  b\n  c\n\nx y");
}

TEST(HtmlText, AltAndTitleKept) {
  EXPECT_EQ(extract_text("<p>see <img src=\"a.png\" alt=\"a cat\"> <a href=\"/x\" title=\"more\">here</a></p>"),
            "see a cat more here");
}

TEST(HtmlText, BreakEndsLine) { EXPECT_EQ(extract_text("<p>one<br>two</p>"), "one\n\ntwo"); }

TEST(HtmlText, DecodedAngleBracketsCannotFormTags) {
  const std::string out = extract_text("<p>&lt;script&gt; and &lt;/p&gt; 1 &lt; 2</p>");
  EXPECT_FALSE(std::regex_search(out, kTag)) << out;
  EXPECT_NE(out.find("1 < 2"), std::string::npos);
}

TEST(HtmlText, MalformedInputDegrades) {
  EXPECT_EQ(extract_text("<p>unclosed <b>bold"), "unclosed bold");
  EXPECT_FALSE(std::regex_search(extract_text("a < b <<p>c <div"), kTag));
}

TEST(HtmlText, RawModeIsIdentity) {
  RawPage page;
  page.url = "u";
  page.html = "<p>keep   me</p>";
  const auto n = html_to_text(page, TextMode::kRawHtml);
  EXPECT_EQ(n.text, page.html);
  EXPECT_EQ(n.mode, TextMode::kRawHtml);
  EXPECT_EQ(html_to_text(page).text, "keep me");
  EXPECT_EQ(html_to_text(page).source_url, "u");
}

TEST(HtmlText, ModeNames) {
  EXPECT_EQ(text_mode_name(TextMode::kExtractedText), "extracted_text");
  EXPECT_EQ(text_mode_from_name("raw_html"), TextMode::kRawHtml);
  EXPECT_ANY_THROW(text_mode_from_name("bogus"));
}

TEST(HtmlText, FixturesHaveNoTagsAndAreIdempotent) {
  const std::filesystem::path dir = RAGSCRAPE_FIXTURE_DIR "/site";
  int seen = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".html") continue;
    ++seen;
    const std::string text = extract_text(testkit::read_file(entry.path()));
    EXPECT_FALSE(text.empty());
    EXPECT_FALSE(std::regex_search(text, kTag)) << entry.path();
    if (text.find('&') == std::string::npos && text.find('<') == std::string::npos) {
      EXPECT_EQ(extract_text(text), collapse(text)) << entry.path();
    }
  }
  EXPECT_GE(seen, 5);
}

TEST(HtmlText, PlainTextIdempotent) {
  for (const std::string s : {"hello world", "a\n\nb", "  spaced   out  ", "line\nbreak"}) {
    EXPECT_EQ(extract_text(s), collapse(s)) << s;
  }
}
