#include "sid/signal.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace sid {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  return out;
}

double parse_double(const std::string& s, const std::string& where) {
  try {
    size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == 0) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error(where + ": bad number '" + s + "'");
  }
}

}  // namespace

SignalRecord load_signal(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error(path.string() + ": empty file");

  const auto header = split_csv(line);
  if (header.empty() || header[0] != "t")
    throw std::runtime_error(path.string() + ": header must start with t");
  int nu = 0, ny = 0;
  for (size_t i = 1; i < header.size(); ++i) {
    if (header[i].rfind("u", 0) == 0 && ny == 0)
      ++nu;
    else if (header[i].rfind("y", 0) == 0)
      ++ny;
    else
      throw std::runtime_error(path.string() + ": unexpected column " +
                               header[i]);
  }
  if (nu == 0 || ny == 0)
    throw std::runtime_error(path.string() +
                             ": need at least one input and one output column");

  std::vector<std::vector<double>> rows;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size())
      throw std::runtime_error(path.string() + ": row " +
                               std::to_string(line_no) + " has " +
                               std::to_string(cells.size()) + " cells");
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells)
      row.push_back(parse_double(c, path.string() + ":" + std::to_string(line_no)));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error(path.string() + ": no samples");

  SignalRecord rec;
  const auto n = static_cast<Eigen::Index>(rows.size());
  rec.t.resize(n);
  rec.u.resize(n, nu);
  rec.y.resize(n, ny);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto& row = rows[static_cast<size_t>(k)];
    rec.t[k] = row[0];
    for (int j = 0; j < nu; ++j) rec.u(k, j) = row[1 + static_cast<size_t>(j)];
    for (int j = 0; j < ny; ++j)
      rec.y(k, j) = row[1 + static_cast<size_t>(nu + j)];
  }
  return rec;
}

void save_signal(const std::filesystem::path& path, const SignalRecord& rec) {
  if (rec.u.rows() != rec.t.size() || rec.y.rows() != rec.t.size())
    throw std::invalid_argument("inconsistent record lengths");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "t";
  for (int j = 1; j <= rec.inputs(); ++j) out << ",u" << j;
  for (int j = 1; j <= rec.outputs(); ++j) out << ",y" << j;
  out << '\n';
  out.precision(17);
  for (Eigen::Index k = 0; k < rec.t.size(); ++k) {
    out << rec.t[k];
    for (Eigen::Index j = 0; j < rec.u.cols(); ++j) out << ',' << rec.u(k, j);
    for (Eigen::Index j = 0; j < rec.y.cols(); ++j) out << ',' << rec.y(k, j);
    out << '\n';
  }
}

}  // namespace sid
