#include "svg.hpp"

#include <fstream>
#include <iomanip>
#include <stdexcept>

namespace sid::cli {

SvgCanvas::SvgCanvas(double x_min, double x_max, double y_min, double y_max,
                     int width, int height)
    : x_min_(x_min),
      x_max_(x_max),
      y_min_(y_min),
      y_max_(y_max),
      width_(width),
      height_(height) {
  if (!(x_max > x_min) || !(y_max > y_min))
    throw std::invalid_argument("degenerate SVG world window");
  body_ << std::setprecision(8);
}

double SvgCanvas::px(double x) const {
  return (x - x_min_) / (x_max_ - x_min_) * width_;
}

double SvgCanvas::py(double y) const {
  // SVG pixel rows grow downward; world y grows upward.
  return (y_max_ - y) / (y_max_ - y_min_) * height_;
}

void SvgCanvas::polyline(const Eigen::MatrixXd& points_xy,
                         const std::string& color, double stroke_width,
                         bool dashed, bool close) {
  if (points_xy.rows() == 0) return;
  if (points_xy.cols() != 2)
    throw std::invalid_argument("polyline expects an n x 2 matrix");
  body_ << "  <" << (close ? "polygon" : "polyline") << " points=\"";
  for (int i = 0; i < points_xy.rows(); ++i) {
    if (i) body_ << ' ';
    body_ << px(points_xy(i, 0)) << ',' << py(points_xy(i, 1));
  }
  body_ << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\""
        << stroke_width << "\"";
  if (dashed) body_ << " stroke-dasharray=\"6 4\"";
  body_ << "/>\n";
}

void SvgCanvas::markers(const Eigen::MatrixXd& points_xy,
                        const std::string& color, double radius, bool filled) {
  if (points_xy.cols() != 2 && points_xy.rows() != 0)
    throw std::invalid_argument("markers expect an n x 2 matrix");
  for (int i = 0; i < points_xy.rows(); ++i) {
    body_ << "  <circle cx=\"" << px(points_xy(i, 0)) << "\" cy=\""
          << py(points_xy(i, 1)) << "\" r=\"" << radius << "\"";
    if (filled) {
      body_ << " fill=\"" << color << "\" fill-opacity=\"0.75\" stroke=\"none\"";
    } else {
      body_ << " fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.2\"";
    }
    body_ << "/>\n";
  }
}

void SvgCanvas::line(double x0, double y0, double x1, double y1,
                     const std::string& color, double stroke_width,
                     bool dashed) {
  body_ << "  <line x1=\"" << px(x0) << "\" y1=\"" << py(y0) << "\" x2=\""
        << px(x1) << "\" y2=\"" << py(y1) << "\" stroke=\"" << color
        << "\" stroke-width=\"" << stroke_width << "\"";
  if (dashed) body_ << " stroke-dasharray=\"4 4\"";
  body_ << "/>\n";
}

void SvgCanvas::text(double x, double y, const std::string& s,
                     const std::string& color, int font_px) {
  body_ << "  <text x=\"" << px(x) << "\" y=\"" << py(y) << "\" fill=\""
        << color << "\" font-size=\"" << font_px
        << "\" font-family=\"sans-serif\">" << s << "</text>\n";
}

void SvgCanvas::axes(const std::string& color) {
  if (x_min_ < 0.0 && x_max_ > 0.0) line(0.0, y_min_, 0.0, y_max_, color, 1.0);
  if (y_min_ < 0.0 && y_max_ > 0.0) line(x_min_, 0.0, x_max_, 0.0, color, 1.0);
}

void SvgCanvas::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width_
      << "\" height=\"" << height_ << "\" viewBox=\"0 0 " << width_ << ' '
      << height_ << "\">\n"
      << "  <rect width=\"" << width_ << "\" height=\"" << height_
      << "\" fill=\"white\"/>\n"
      << body_.str() << "</svg>\n";
}

}  // namespace sid::cli
