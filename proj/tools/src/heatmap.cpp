#include "pinnuq/cli/heatmap.hpp"

#include "pinnuq/cli/config.hpp"
#include "pinnuq/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace pinnuq::cli {
namespace {

struct Stop {
  double t;
  Rgb color;
};

// Control points sampled from the published colormaps; linear in between.
const std::vector<Stop>& stops_for(std::string_view name) {
  static const std::vector<Stop> viridis{{0.0, {68, 1, 84}},     {0.125, {71, 44, 122}}, {0.25, {59, 81, 139}},
                                         {0.375, {44, 113, 142}}, {0.5, {33, 144, 141}},  {0.625, {39, 173, 129}},
                                         {0.75, {92, 200, 99}},   {0.875, {170, 220, 50}}, {1.0, {253, 231, 37}}};
  static const std::vector<Stop> gray{{0.0, {0, 0, 0}}, {1.0, {255, 255, 255}}};
  static const std::vector<Stop> coolwarm{
      {0.0, {59, 76, 192}}, {0.25, {141, 176, 254}}, {0.5, {221, 221, 221}}, {0.75, {244, 154, 123}}, {1.0, {180, 4, 38}}};
  if (name == "viridis") return viridis;
  if (name == "gray") return gray;
  if (name == "coolwarm") return coolwarm;
  throw UsageError("unknown colormap '" + std::string(name) + "' (expected viridis, gray or coolwarm)");
}

std::string hex(const Rgb& c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c[0], c[1], c[2]);
  return buf;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& text, std::size_t line) {
  double v = 0.0;
  const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
  if (r.ec != std::errc{} || r.ptr != text.data() + text.size()) throw ParseError(line, "not a number: '" + text + "'");
  return v;
}

}  // namespace

Rgb colormap_color(std::string_view colormap, double t) {
  const auto& stops = stops_for(colormap);
  t = std::clamp(std::isfinite(t) ? t : 0.5, 0.0, 1.0);
  for (std::size_t i = 1; i < stops.size(); ++i) {
    if (t <= stops[i].t) {
      const double w = (t - stops[i - 1].t) / (stops[i].t - stops[i - 1].t);
      Rgb c{};
      for (int k = 0; k < 3; ++k) {
        c[k] = static_cast<unsigned char>(std::lround((1.0 - w) * stops[i - 1].color[k] + w * stops[i].color[k]));
      }
      return c;
    }
  }
  return stops.back().color;
}

HeatmapField read_heatmap_field(const std::filesystem::path& csv, std::string_view column) {
  std::ifstream in(csv);
  if (!in) throw IoError("cannot open field file " + csv.string());
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(csv.string() + " is empty");
  const auto header = split(line);
  const auto find = [&](std::string_view name) -> std::ptrdiff_t {
    const auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : it - header.begin();
  };
  const std::ptrdiff_t value_col = find(column);
  if (value_col < 0) throw SchemaError(csv.string() + " has no column '" + std::string(column) + "'");
  std::vector<std::ptrdiff_t> coord_cols;
  for (const char* name : {"x", "y", "t"}) {
    if (const auto c = find(name); c >= 0) coord_cols.push_back(c);
  }

  std::vector<std::vector<double>> coords(coord_cols.size());
  std::vector<double> values;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) throw ParseError(line_no, "expected " + std::to_string(header.size()) + " fields");
    for (std::size_t k = 0; k < coord_cols.size(); ++k) coords[k].push_back(parse_number(cells[coord_cols[k]], line_no));
    values.push_back(parse_number(cells[value_col], line_no));
  }

  // The lattice axes are the coordinate columns that take more than one value.
  std::vector<std::size_t> axes;
  std::vector<std::vector<double>> distinct(coords.size());
  for (std::size_t k = 0; k < coords.size(); ++k) {
    distinct[k] = coords[k];
    std::sort(distinct[k].begin(), distinct[k].end());
    distinct[k].erase(std::unique(distinct[k].begin(), distinct[k].end()), distinct[k].end());
    if (distinct[k].size() > 1) axes.push_back(k);
  }
  if (axes.size() != 2) throw SchemaError(csv.string() + " does not vary over exactly two coordinates");

  HeatmapField f;
  f.x_label = header[coord_cols[axes[0]]];
  f.y_label = header[coord_cols[axes[1]]];
  f.value_label = std::string(column);
  f.xs = distinct[axes[0]];
  f.ys = distinct[axes[1]];
  std::map<std::pair<double, double>, double> cells;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!cells.emplace(std::pair{coords[axes[0]][i], coords[axes[1]][i]}, values[i]).second) {
      throw SchemaError(csv.string() + ": duplicate lattice point (" + num(coords[axes[0]][i]) + ", " +
                        num(coords[axes[1]][i]) + ")");
    }
  }
  std::vector<std::string> missing;
  f.values.reserve(f.xs.size() * f.ys.size());
  for (double y : f.ys) {
    for (double x : f.xs) {
      const auto it = cells.find({x, y});
      if (it == cells.end()) {
        missing.push_back("(" + num(x) + ", " + num(y) + ")");
        f.values.push_back(0.0);
      } else {
        f.values.push_back(it->second);
      }
    }
  }
  if (!missing.empty()) {
    std::string list;
    for (std::size_t i = 0; i < missing.size() && i < 20; ++i) list += (i ? " " : "") + missing[i];
    if (missing.size() > 20) list += " ... (" + std::to_string(missing.size() - 20) + " more)";
    throw SchemaError(csv.string() + ": irregular grid, " + std::to_string(missing.size()) +
                      " missing lattice points (" + f.x_label + ", " + f.y_label + "): " + list);
  }
  return f;
}

std::string heatmap_svg(const HeatmapField& f, std::string_view colormap) {
  const std::size_t nx = f.xs.size(), ny = f.ys.size();
  if (nx == 0 || ny == 0 || f.values.size() != nx * ny) throw ContractError("heatmap field is not a full lattice");
  const auto [lo_it, hi_it] = std::minmax_element(f.values.begin(), f.values.end());
  const double lo = *lo_it, hi = *hi_it;
  const auto scaled = [&](double v) { return hi > lo ? (v - lo) / (hi - lo) : 0.5; };

  const double plot_w = 600.0, plot_h = 400.0, left = 70.0, top = 30.0;
  const double cw = plot_w / static_cast<double>(nx), ch = plot_h / static_cast<double>(ny);
  const double bar_x = left + plot_w + 30.0, bar_w = 20.0;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << left + plot_w + 130.0 << "\" height=\""
      << top + plot_h + 60.0 << "\" shape-rendering=\"crispEdges\">\n";
  svg << "<defs><linearGradient id=\"cbar\" x1=\"0\" y1=\"1\" x2=\"0\" y2=\"0\">";
  for (int i = 0; i <= 10; ++i) {
    svg << "<stop offset=\"" << i / 10.0 << "\" stop-color=\"" << hex(colormap_color(colormap, i / 10.0)) << "\"/>";
  }
  svg << "</linearGradient></defs>\n<g class=\"cells\">\n";
  for (std::size_t j = 0; j < ny; ++j) {
    // Larger y values are drawn higher up.
    const double y = top + plot_h - static_cast<double>(j + 1) * ch;
    for (std::size_t i = 0; i < nx; ++i) {
      svg << "<rect class=\"cell\" x=\"" << num(left + static_cast<double>(i) * cw) << "\" y=\"" << num(y)
          << "\" width=\"" << num(cw) << "\" height=\"" << num(ch) << "\" fill=\""
          << hex(colormap_color(colormap, scaled(f.values[j * nx + i]))) << "\"/>\n";
    }
  }
  svg << "</g>\n";
  svg << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << top + plot_h + 40 << "\" text-anchor=\"middle\">"
      << f.x_label << "</text>\n";
  svg << "<text x=\"20\" y=\"" << top + plot_h / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 20 "
      << top + plot_h / 2 << ")\">" << f.y_label << "</text>\n";
  svg << "<text x=\"" << left << "\" y=\"" << top + plot_h + 18 << "\" text-anchor=\"middle\">" << num(f.xs.front())
      << "</text>\n<text x=\"" << left + plot_w << "\" y=\"" << top + plot_h + 18 << "\" text-anchor=\"middle\">"
      << num(f.xs.back()) << "</text>\n";
  svg << "<text x=\"" << left - 6 << "\" y=\"" << top + plot_h << "\" text-anchor=\"end\">" << num(f.ys.front())
      << "</text>\n<text x=\"" << left - 6 << "\" y=\"" << top + 10 << "\" text-anchor=\"end\">" << num(f.ys.back())
      << "</text>\n";
  svg << "<g class=\"colorbar\"><rect x=\"" << bar_x << "\" y=\"" << top << "\" width=\"" << bar_w << "\" height=\""
      << plot_h << "\" fill=\"" << (hi > lo ? "url(#cbar)" : hex(colormap_color(colormap, 0.5))) << "\"/>";
  svg << "<text x=\"" << bar_x + bar_w + 4 << "\" y=\"" << top + 10 << "\">" << num(hi) << "</text>";
  svg << "<text x=\"" << bar_x + bar_w + 4 << "\" y=\"" << top + plot_h << "\">" << num(lo) << "</text>";
  svg << "<text x=\"" << bar_x << "\" y=\"" << top - 10 << "\">" << f.value_label << "</text></g>\n</svg>\n";
  return svg.str();
}

void render_heatmap(const std::filesystem::path& field_csv, std::string_view column,
                    const std::filesystem::path& output_svg, std::string_view colormap) {
  colormap_color(colormap, 0.0);
  const std::string svg = heatmap_svg(read_heatmap_field(field_csv, column), colormap);
  std::ofstream out(output_svg);
  if (!out) throw IoError("cannot open " + output_svg.string() + " for writing");
  out << svg;
  if (!out) throw IoError("failed writing " + output_svg.string());
}

}  // namespace pinnuq::cli
