#pragma once

#include <emconv/csv.hpp>

#include <filesystem>
#include <optional>
#include <string>


namespace emconv {

  struct PlotSpec
  {
    std::string x;
    std::string y;
    bool log_y = false;
    //! One polyline per distinct value, in order of first appearance.
    std::optional<std::string> group_by;
    std::string title;
  };

  //! Values at or below zero on a log axis are drawn at this level and
  //! reported in an XML comment.
  inline constexpr double log_clamp = 1e-16;

  //! Standalone SVG line plot; byte-identical for identical input. Rows
  //! with an empty x or y field are skipped.
  auto render_svg(const CsvTable& table, const PlotSpec& spec) -> std::string;

  auto emit_svg(const std::filesystem::path& csv_path, const PlotSpec& spec,
                const std::filesystem::path& svg_path) -> void;

}  // namespace emconv
