#pragma once

#include <emconv/core.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>


namespace emconv {

  struct MissingColumn : Error
  {
    using Error::Error;
  };

  struct EmptyCsv : Error
  {
    using Error::Error;
  };

  //! Shortest decimal string that parses back to the same double.
  auto format_double(double value) -> std::string;

  //! format_double, or an empty field when absent.
  auto format_optional(const std::optional<double>& value) -> std::string;

  auto parse_double(const std::string& field) -> double;

  //! Comma-separated table with a mandatory header row. Fields never
  //! contain commas, quotes or newlines.
  struct CsvTable
  {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    auto column(const std::string& name) const -> std::size_t;
    auto has_column(const std::string& name) const -> bool;

    auto add_row(std::vector<std::string> row) -> void;

    auto write(const std::filesystem::path& path) const -> void;
    static auto read(const std::filesystem::path& path) -> CsvTable;
  };

}  // namespace emconv
