#include "doctest.h"

#include "adore/error.hpp"
#include "adore/xml.hpp"

using namespace adore;

TEST_SUITE("xml") {

TEST_CASE("namespaces resolve through the scope chain") {
  auto root = xml::parse(
      R"(<a:root xmlns:a="urn:a" xmlns="urn:d"><child a:x="1"/><a:k/></a:root>)");
  CHECK(root.ns == "urn:a");
  CHECK(root.local == "root");
  auto kids = root.elements();
  REQUIRE(kids.size() == 2);
  CHECK(kids[0]->ns == "urn:d");
  CHECK(kids[1]->ns == "urn:a");
  CHECK(*kids[0]->attribute_local("x") == "1");
}

TEST_CASE("malformed input and unbound prefixes are rejected") {
  CHECK_THROWS_AS(xml::parse("<a><b></a>"), Error);
  CHECK_THROWS_AS(xml::parse("<p:a/>"), Error);
  CHECK_THROWS_AS(xml::parse("<!DOCTYPE a><a/>"), Error);
  try {
    xml::parse("");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kMalformedXml);
  }
}

TEST_CASE("content byte ranges point into the source") {
  std::string src = R"(<env><metadata><x:d xmlns:x="u">t</x:d></metadata><e/></env>)";
  auto root = xml::parse(src);
  const auto* md = root.elements()[0];
  CHECK(src.substr(md->content_begin, md->content_end - md->content_begin) ==
        R"(<x:d xmlns:x="u">t</x:d>)");
  const auto* empty = root.elements()[1];
  CHECK(empty->content_begin == empty->content_end);
}

TEST_CASE("canonical form ignores prefixes, attribute order, whitespace") {
  auto a = xml::parse(R"(<p:r xmlns:p="urn:r" b="2" a="1">
      <p:c>  hello   world </p:c>
    </p:r>)");
  auto b = xml::parse(R"(<r xmlns="urn:r" a="1" b="2"><c>hello world</c></r>)");
  CHECK(xml::canonical(a) == xml::canonical(b));
  auto c = xml::parse(R"(<r xmlns="urn:r" a="1" b="3"><c>hello world</c></r>)");
  CHECK(xml::canonical(a) != xml::canonical(c));
}

TEST_CASE("serialize escapes and re-parses to the same tree") {
  xml::Element e("r");
  e.set_attribute("q", "a\"b<c&\n");
  e.add(xml::Element("t")).add_text("x < y & z");
  std::string out = xml::serialize(e);
  auto back = xml::parse(out);
  CHECK(*back.attribute("q") == "a\"b<c&\n");
  CHECK(back.elements()[0]->text() == "x < y & z");
  CHECK(xml::canonical(back) == xml::canonical(e));
}

TEST_CASE("mixed content is written verbatim") {
  std::string src = "<a>\n  <b>1</b>\n  <c/>\n</a>";
  CHECK(xml::serialize(xml::parse(src), {.declaration = false}) == src);
}

}
