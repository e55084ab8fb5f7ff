#include <emconv/csv.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>


namespace emconv {

  auto format_double(double value) -> std::string
  {
    if (std::isnan(value))
      return "nan";
    if (std::isinf(value))
      return value > 0 ? "inf" : "-inf";
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc{})
      throw Error{"format_double: conversion failed"};
    return std::string(buf, end);
  }

  auto format_optional(const std::optional<double>& value) -> std::string
  {
    return value ? format_double(*value) : std::string{};
  }

  auto parse_double(const std::string& field) -> double
  {
    if (field == "nan")
      return std::nan("");
    if (field == "inf")
      return HUGE_VAL;
    if (field == "-inf")
      return -HUGE_VAL;
    double value = 0;
    const auto* first = field.data();
    const auto* last = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last)
      throw Error{"parse_double: not a number: '" + field + "'"};
    return value;
  }

  auto CsvTable::column(const std::string& name) const -> std::size_t
  {
    for (std::size_t j = 0; j < header.size(); ++j)
      if (header[j] == name)
        return j;
    throw MissingColumn{"missing column: " + name};
  }

  auto CsvTable::has_column(const std::string& name) const -> bool
  {
    for (const auto& h : header)
      if (h == name)
        return true;
    return false;
  }

  auto CsvTable::add_row(std::vector<std::string> row) -> void
  {
    if (row.size() != header.size())
      throw Error{"csv row width does not match the header"};
    rows.push_back(std::move(row));
  }

  auto CsvTable::write(const std::filesystem::path& path) const -> void
  {
    if (path.has_parent_path())
      std::filesystem::create_directories(path.parent_path());
    auto out = std::ofstream{path, std::ios::binary};
    if (!out)
      throw Error{"cannot open for writing: " + path.string()};
    const auto put_line = [&](const std::vector<std::string>& fields) {
      for (std::size_t j = 0; j < fields.size(); ++j)
      {
        if (j > 0)
          out << ',';
        out << fields[j];
      }
      out << '\n';
    };
    put_line(header);
    for (const auto& r : rows)
      put_line(r);
  }

  auto CsvTable::read(const std::filesystem::path& path) -> CsvTable
  {
    auto in = std::ifstream{path, std::ios::binary};
    if (!in)
      throw Error{"cannot open for reading: " + path.string()};
    const auto split = [](const std::string& line) {
      auto fields = std::vector<std::string>{};
      auto ss = std::stringstream{line};
      auto field = std::string{};
      while (std::getline(ss, field, ','))
        fields.push_back(field);
      if (!line.empty() && line.back() == ',')
        fields.emplace_back();
      return fields;
    };

    auto table = CsvTable{};
    auto line = std::string{};
    if (!std::getline(in, line) || line.empty())
      throw EmptyCsv{"empty csv: " + path.string()};
    table.header = split(line);
    while (std::getline(in, line))
    {
      if (line.empty())
        continue;
      auto fields = split(line);
      fields.resize(table.header.size());
      table.rows.push_back(std::move(fields));
    }
    return table;
  }

}  // namespace emconv
