#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace pinnuq::cli {

using Rgb = std::array<unsigned char, 3>;

/// Colormaps: viridis, gray, coolwarm. Throws UsageError otherwise.
/// `t` is clamped to [0, 1].
Rgb colormap_color(std::string_view colormap, double t);

struct HeatmapField {
  std::string x_label;
  std::string y_label;
  std::string value_label;
  std::vector<double> xs;  // sorted distinct values
  std::vector<double> ys;
  std::vector<double> values;  // xs.size() * ys.size(), x fastest
};

/// Reads `column` of a field CSV. The two coordinate columns that vary form
/// the lattice; every lattice point must appear exactly once, otherwise a
/// SchemaError lists the missing points.
HeatmapField read_heatmap_field(const std::filesystem::path& csv, std::string_view column);

/// One <rect class="cell"> per lattice point, linear color scale between the
/// field min and max (the midpoint color when they coincide), axis labels and a colorbar.
std::string heatmap_svg(const HeatmapField& field, std::string_view colormap);

void render_heatmap(const std::filesystem::path& field_csv, std::string_view column,
                    const std::filesystem::path& output_svg, std::string_view colormap = "viridis");

}  // namespace pinnuq::cli
