#pragma once

#include "spline_koopman/bspline.hpp"
#include "spline_koopman/dynamics.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace spline_koopman {

/// "%.17g" rendering; round-trips every finite double.
std::string format_double(double v);

/// A numeric table with a header row.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  bool operator==(const CsvTable&) const = default;
};

/// Comma-separated, LF line endings, 17 significant digits.
std::string to_csv(const CsvTable& table);
CsvTable parse_csv(const std::string& text);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

void write_csv(const std::filesystem::path& path, const CsvTable& table);
CsvTable read_csv(const std::filesystem::path& path);

/// Header `t,x1,...,xn`.
CsvTable trajectory_table(const Trajectory& traj);
CsvTable trajectory_table(std::span<const double> times, const Eigen::MatrixXd& states);

/// Header `component,j,value`, one-based indices.
CsvTable control_point_table(const ControlPointGrid& cps);
ControlPointGrid control_points_from_table(const CsvTable& table);

}  // namespace spline_koopman
