#include <emconv/svg.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>


namespace emconv {

  namespace {

    constexpr double width = 720;
    constexpr double height = 460;
    constexpr double left = 80;
    constexpr double right = 170;
    constexpr double top = 40;
    constexpr double bottom = 60;

    constexpr std::array<const char*, 10> palette = {
        "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
        "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

    auto fixed(double v) -> std::string
    {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.2f", v);
      return buf;
    }

    auto label(double v) -> std::string
    {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%g", v);
      return buf;
    }

    auto escape(const std::string& s) -> std::string
    {
      auto out = std::string{};
      for (const char c : s)
        switch (c)
        {
        case '<':
          out += "&lt;";
          break;
        case '>':
          out += "&gt;";
          break;
        case '&':
          out += "&amp;";
          break;
        case '"':
          out += "&quot;";
          break;
        default:
          out += c;
        }
      return out;
    }

    //! Roughly five round tick values covering [lo, hi].
    auto nice_ticks(double lo, double hi) -> std::vector<double>
    {
      if (hi <= lo)
        return {lo};
      const auto raw = (hi - lo) / 5;
      const auto mag = std::pow(10.0, std::floor(std::log10(raw)));
      auto step = mag;
      for (const double m : {1.0, 2.0, 5.0, 10.0})
        if (m * mag >= raw)
        {
          step = m * mag;
          break;
        }
      auto ticks = std::vector<double>{};
      for (auto t = std::ceil(lo / step) * step; t <= hi + 1e-9 * step;
           t += step)
        ticks.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
      return ticks;
    }

    struct Series
    {
      std::string key;
      std::vector<std::pair<double, double>> points;
    };

  }  // namespace

  auto render_svg(const CsvTable& table, const PlotSpec& spec) -> std::string
  {
    if (table.rows.empty())
      throw EmptyCsv{"no data rows to plot"};
    const auto xc = table.column(spec.x);
    const auto yc = table.column(spec.y);
    const auto gc = spec.group_by
                        ? std::optional<std::size_t>{table.column(*spec.group_by)}
                        : std::nullopt;

    auto series = std::vector<Series>{};
    auto index = std::map<std::string, std::size_t>{};
    std::size_t clamped = 0;
    for (const auto& row : table.rows)
    {
      if (row[xc].empty() || row[yc].empty())
        continue;
      const auto x = parse_double(row[xc]);
      auto y = parse_double(row[yc]);
      if (!std::isfinite(x) || std::isnan(y))
        continue;
      if (spec.log_y)
      {
        if (y <= log_clamp)
        {
          if (y < log_clamp)
            ++clamped;
          y = log_clamp;
        }
        y = std::log10(y);
      }
      if (!std::isfinite(y))
        continue;
      const auto key = gc ? row[*gc] : spec.y;
      auto [it, inserted] = index.try_emplace(key, series.size());
      if (inserted)
        series.push_back({key, {}});
      series[it->second].points.emplace_back(x, y);
    }
    if (series.empty())
      throw EmptyCsv{"no plottable values in columns " + spec.x + ", " +
                     spec.y};

    auto xmin = HUGE_VAL, xmax = -HUGE_VAL, ymin = HUGE_VAL, ymax = -HUGE_VAL;
    for (const auto& s : series)
      for (const auto& [x, y] : s.points)
      {
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
      }
    if (xmax == xmin)
      xmax = xmin + 1;
    if (ymax == ymin)
    {
      ymin -= 0.5;
      ymax += 0.5;
    }
    if (spec.log_y)
    {
      ymin = std::floor(ymin);
      ymax = std::ceil(ymax);
    }

    const auto plot_w = width - left - right;
    const auto plot_h = height - top - bottom;
    const auto sx = [&](double x) {
      return left + (x - xmin) / (xmax - xmin) * plot_w;
    };
    const auto sy = [&](double y) {
      return top + (ymax - y) / (ymax - ymin) * plot_h;
    };

    auto out = std::ostringstream{};
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << label(width)
        << "\" height=\"" << label(height) << "\" viewBox=\"0 0 "
        << label(width) << ' ' << label(height) << "\">\n";
    if (clamped > 0)
      out << "<!-- clamped " << clamped << " value(s) at or below zero to "
          << label(log_clamp) << " on the log axis -->\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (!spec.title.empty())
      out << "<text x=\"" << fixed(left + plot_w / 2) << "\" y=\"24\" "
          << "text-anchor=\"middle\" font-family=\"sans-serif\" "
          << "font-size=\"15\">" << escape(spec.title) << "</text>\n";

    // Axes.
    out << "<g stroke=\"black\" stroke-width=\"1\">\n";
    out << "<line x1=\"" << fixed(left) << "\" y1=\"" << fixed(top + plot_h)
        << "\" x2=\"" << fixed(left + plot_w) << "\" y2=\""
        << fixed(top + plot_h) << "\"/>\n";
    out << "<line x1=\"" << fixed(left) << "\" y1=\"" << fixed(top)
        << "\" x2=\"" << fixed(left) << "\" y2=\"" << fixed(top + plot_h)
        << "\"/>\n";
    out << "</g>\n";

    out << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
    for (const auto t : nice_ticks(xmin, xmax))
    {
      const auto px = sx(t);
      out << "<line x1=\"" << fixed(px) << "\" y1=\"" << fixed(top + plot_h)
          << "\" x2=\"" << fixed(px) << "\" y2=\"" << fixed(top + plot_h + 5)
          << "\" stroke=\"black\"/>\n";
      out << "<text x=\"" << fixed(px) << "\" y=\"" << fixed(top + plot_h + 18)
          << "\" text-anchor=\"middle\">" << label(t) << "</text>\n";
    }
    auto yticks = std::vector<double>{};
    if (spec.log_y)
    {
      const auto span = ymax - ymin;
      const auto stride = std::max(1.0, std::ceil(span / 8));
      for (auto e = ymin; e <= ymax + 1e-9; e += stride)
        yticks.push_back(e);
    }
    else
      yticks = nice_ticks(ymin, ymax);
    for (const auto t : yticks)
    {
      const auto py = sy(t);
      out << "<line x1=\"" << fixed(left - 5) << "\" y1=\"" << fixed(py)
          << "\" x2=\"" << fixed(left) << "\" y2=\"" << fixed(py)
          << "\" stroke=\"black\"/>\n";
      const auto text = spec.log_y ? "1e" + label(t) : label(t);
      out << "<text x=\"" << fixed(left - 8) << "\" y=\"" << fixed(py + 4)
          << "\" text-anchor=\"end\">" << text << "</text>\n";
    }
    out << "<text x=\"" << fixed(left + plot_w / 2) << "\" y=\""
        << fixed(height - 15) << "\" text-anchor=\"middle\">"
        << escape(spec.x) << "</text>\n";
    out << "<text x=\"18\" y=\"" << fixed(top + plot_h / 2)
        << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
        << fixed(top + plot_h / 2) << ")\">"
        << escape(spec.log_y ? spec.y + " (log10)" : spec.y) << "</text>\n";
    out << "</g>\n";

    for (std::size_t k = 0; k < series.size(); ++k)
    {
      out << "<polyline fill=\"none\" stroke=\"" << palette[k % palette.size()]
          << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < series[k].points.size(); ++i)
      {
        const auto& [x, y] = series[k].points[i];
        if (i > 0)
          out << ' ';
        out << fixed(sx(x)) << ',' << fixed(sy(y));
      }
      out << "\"/>\n";
    }

    out << "<g class=\"legend\" font-family=\"sans-serif\" font-size=\"11\">\n";
    for (std::size_t k = 0; k < series.size(); ++k)
    {
      const auto ly = top + 10 + 16 * double(k);
      const auto lx = width - right + 15;
      out << "<line x1=\"" << fixed(lx) << "\" y1=\"" << fixed(ly) << "\" x2=\""
          << fixed(lx + 20) << "\" y2=\"" << fixed(ly) << "\" stroke=\""
          << palette[k % palette.size()] << "\" stroke-width=\"2\"/>\n";
      out << "<text class=\"legend-entry\" x=\"" << fixed(lx + 26)
          << "\" y=\"" << fixed(ly + 4) << "\">"
          << escape(spec.group_by ? *spec.group_by + "=" + series[k].key
                                  : series[k].key)
          << "</text>\n";
    }
    out << "</g>\n";
    out << "</svg>\n";
    return out.str();
  }

  auto emit_svg(const std::filesystem::path& csv_path, const PlotSpec& spec,
                const std::filesystem::path& svg_path) -> void
  {
    const auto table = CsvTable::read(csv_path);
    const auto svg = render_svg(table, spec);
    if (svg_path.has_parent_path())
      std::filesystem::create_directories(svg_path.parent_path());
    auto out = std::ofstream{svg_path, std::ios::binary};
    if (!out)
      throw Error{"cannot open for writing: " + svg_path.string()};
    out << svg;
  }

}  // namespace emconv
