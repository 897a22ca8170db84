#include <sstream>

#include "bess/error.hpp"
#include "bess/line_format.hpp"
#include "doctest.h"

using namespace bess;
using text::parse_number;

TEST_CASE("plain and signed literals") {
  CHECK(parse_number("657.1", 1) == 657.1);
  CHECK(parse_number("-681.89", 1) == -681.89);
  CHECK(parse_number("+2.5", 1) == 2.5);
  CHECK(parse_number("5.26E-05", 1) == 5.26e-5);
  CHECK(parse_number("  12 ", 1) == 12.0);
}

TEST_CASE("power-of-ten notation from the curve table") {
  CHECK(parse_number("8.29^{-18}", 1) == 8.29e-18);
  CHECK(parse_number("-2.16^{-4}", 1) == -2.16e-4);
  CHECK(parse_number("1.4^{-3}", 1) == 1.4e-3);
  CHECK(parse_number("3^{2}", 1) == 300.0);
}

TEST_CASE("ratios") {
  CHECK(parse_number("7/9", 1) == 7.0 / 9.0);
  CHECK(parse_number("1/3", 1) == 1.0 / 3.0);
  CHECK_THROWS_AS(parse_number("1/0", 3), ParseError);
}

TEST_CASE("malformed numbers name their line") {
  for (const char* bad : {"", "abc", "1.2.3", "4^-2", "4^{}", "12kW", "--1"}) {
    try {
      parse_number(bad, 42);
      FAIL("accepted '" << bad << "'");
    } catch (const ParseError& e) {
      CHECK(e.line() == 42);
    }
  }
}

TEST_CASE("tokenize drops comments and blank lines, keeps line numbers") {
  std::istringstream in("# header\n\n  a b  # tail\nc\n");
  const auto lines = text::tokenize(in);
  REQUIRE(lines.size() == 2);
  CHECK(lines[0].number == 3);
  CHECK(lines[0].tokens == std::vector<std::string>{"a", "b"});
  CHECK(lines[1].number == 4);
}

TEST_CASE("key-value documents") {
  std::istringstream in("alpha0 = 9003\nname=demo # comment\ntrace = gen:a=1,b=2\n");
  const auto doc = text::KeyValueDoc::parse(in);
  CHECK(doc.number("alpha0") == 9003.0);
  CHECK(doc.string("name") == "demo");
  CHECK(doc.string("trace") == "gen:a=1,b=2");
  CHECK(doc.number_or("beta0", 8.39) == 8.39);
  CHECK_THROWS_AS(doc.number("beta0"), ValidationError);
  CHECK(doc.unknown_keys({"alpha0", "name"}) == std::vector<std::string>{"trace"});
}

TEST_CASE("key-value errors") {
  std::istringstream dup("a = 1\na = 2\n");
  CHECK_THROWS_AS(text::KeyValueDoc::parse(dup), ParseError);
  std::istringstream noeq("a 1\n");
  CHECK_THROWS_AS(text::KeyValueDoc::parse(noeq), ParseError);
  std::istringstream empty_value("a =\n");
  CHECK_THROWS_AS(text::KeyValueDoc::parse(empty_value), ParseError);
}

TEST_CASE("split_assignment") {
  CHECK(text::split_assignment("vdc=600", 1) == std::pair<std::string, std::string>{"vdc", "600"});
  CHECK_THROWS_AS(text::split_assignment("vdc", 1), ParseError);
  CHECK_THROWS_AS(text::split_assignment("=600", 1), ParseError);
  CHECK_THROWS_AS(text::split_assignment("vdc=", 1), ParseError);
}
