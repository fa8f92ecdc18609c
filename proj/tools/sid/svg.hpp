#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

namespace sid::cli {

// Minimal SVG scene writer: fixed world-to-pixel mapping, polylines, point
// markers, and labels. Geometry is supplied in world coordinates.
class SvgCanvas {
 public:
  SvgCanvas(double x_min, double x_max, double y_min, double y_max,
            int width = 640, int height = 640);

  void polyline(const Eigen::MatrixXd& points_xy, const std::string& color,
                double stroke_width = 1.5, bool dashed = false,
                bool close = false);
  void markers(const Eigen::MatrixXd& points_xy, const std::string& color,
               double radius = 3.0, bool filled = true);
  void line(double x0, double y0, double x1, double y1,
            const std::string& color, double stroke_width = 1.0,
            bool dashed = false);
  void text(double x, double y, const std::string& s,
            const std::string& color = "#444444", int font_px = 13);
  // Light axes through the world origin plus a frame.
  void axes(const std::string& color = "#bbbbbb");

  void save(const std::filesystem::path& path) const;

 private:
  double px(double x) const;
  double py(double y) const;

  double x_min_, x_max_, y_min_, y_max_;
  int width_, height_;
  std::ostringstream body_;
};

}  // namespace sid::cli
