#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace tomcat {

// Minimal raster plotting: enough for the experiment report PNGs without an
// external imaging dependency (PNG is written with stored deflate blocks).

struct PlotSeries {
  std::string name;
  std::vector<double> x, y;
  std::array<uint8_t, 3> color = {0, 0, 0};
  std::vector<double> err;  // optional symmetric error bars
};

void write_png(const std::string& path, int width, int height,
               const std::vector<uint8_t>& rgb);

void render_line_plot(const std::string& path, const std::vector<PlotSeries>& series,
                      const std::string& title, const std::vector<std::string>& x_labels = {});

}  // namespace tomcat
