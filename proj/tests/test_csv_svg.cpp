#include <emconv/csv.hpp>
#include <emconv/svg.hpp>

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <regex>
#include <string>


using namespace emconv;

namespace {

  auto count(const std::string& s, const std::string& needle) -> std::size_t
  {
    std::size_t n = 0;
    for (auto p = s.find(needle); p != std::string::npos;
         p = s.find(needle, p + needle.size()))
      ++n;
    return n;
  }

  auto temp_dir(const std::string& name) -> std::filesystem::path
  {
    const auto dir = std::filesystem::temp_directory_path() / ("emconv_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
  }

}  // namespace


TEST_CASE("format_double round-trips")
{
  for (const double v : {0.1, 1.0 / 3, 1e-300, -2.5, 123456789.0, 0.0})
    CHECK(parse_double(format_double(v)) == v);
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_optional(std::nullopt).empty());
}

TEST_CASE("CsvTable write/read and missing columns")
{
  const auto dir = temp_dir("csv");
  auto t = CsvTable{{"a", "b"}, {}};
  t.add_row({"1", "x"});
  t.add_row({"2", ""});
  t.write(dir / "t.csv");
  const auto back = CsvTable::read(dir / "t.csv");
  CHECK(back.header == t.header);
  CHECK(back.rows == t.rows);
  CHECK(back.column("b") == 1);
  CHECK_THROWS_AS(back.column("c"), MissingColumn);

  std::ofstream{dir / "empty.csv"};
  CHECK_THROWS_AS(CsvTable::read(dir / "empty.csv"), EmptyCsv);
}

TEST_CASE("render_svg: two points")
{
  auto t = CsvTable{{"x", "y"}, {}};
  t.add_row({"0", "1"});
  t.add_row({"1", "2"});
  const auto svg = render_svg(t, {"x", "y", false, std::nullopt, ""});
  CHECK(count(svg, "<polyline") == 1);
  const auto pts = std::regex{"points=\"([^\"]*)\""};
  std::smatch m;
  REQUIRE(std::regex_search(svg, m, pts));
  CHECK(count(m[1].str(), ",") == 2);
  CHECK(svg == render_svg(t, {"x", "y", false, std::nullopt, ""}));
}

TEST_CASE("render_svg: log axis clamps zeros")
{
  auto t = CsvTable{{"x", "y"}, {}};
  t.add_row({"0", "1"});
  t.add_row({"1", "0"});
  t.add_row({"2", "0.01"});
  const auto svg = render_svg(t, {"x", "y", true, std::nullopt, ""});
  CHECK(svg.find("<!-- clamped 1 value(s)") != std::string::npos);
  CHECK(svg.find("1e-16") != std::string::npos);
}

TEST_CASE("render_svg: ten groups and errors")
{
  auto t = CsvTable{{"trial", "iter", "err"}, {}};
  for (int g = 0; g < 10; ++g)
    for (int i = 0; i < 5; ++i)
      t.add_row({std::to_string(g), std::to_string(i),
                 format_double(1.0 / (1 + g + i))});
  const auto svg = render_svg(t, {"iter", "err", true, "trial", "x"});
  CHECK(count(svg, "<polyline") == 10);
  CHECK(count(svg, "class=\"legend-entry\"") == 10);
  for (int g = 0; g < 10; ++g)
    CHECK(svg.find(">trial=" + std::to_string(g) + "<") != std::string::npos);

  CHECK_THROWS_AS(render_svg(t, {"iter", "nope", true, std::nullopt, ""}),
                  MissingColumn);
  CHECK_THROWS_AS(render_svg(CsvTable{{"x", "y"}, {}},
                             {"x", "y", false, std::nullopt, ""}),
                  EmptyCsv);
}
