#include "spline_koopman/csv.hpp"

#include "spline_koopman/errors.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace spline_koopman {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string to_csv(const CsvTable& table) {
  std::string out;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (i) out += ',';
    out += table.header[i];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += format_double(row[i]);
    }
    out += '\n';
  }
  return out;
}

namespace {

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_number(const std::string& s, std::size_t line_no) {
  const char* begin = s.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0') {
    throw IoError("CSV line " + std::to_string(line_no) + ": '" + s + "' is not a number");
  }
  return v;
}

}  // namespace

CsvTable parse_csv(const std::string& text) {
  CsvTable table;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = split_commas(line);
    if (table.header.empty()) {
      table.header = std::move(fields);
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw IoError("CSV line " + std::to_string(line_no) + " has " +
                    std::to_string(fields.size()) + " fields, expected " +
                    std::to_string(table.header.size()));
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) row.push_back(parse_number(f, line_no));
    table.rows.push_back(std::move(row));
  }
  return table;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
  write_text_file(path, to_csv(table));
}

CsvTable read_csv(const std::filesystem::path& path) { return parse_csv(read_text_file(path)); }

CsvTable trajectory_table(std::span<const double> times, const Eigen::MatrixXd& states) {
  if (static_cast<Eigen::Index>(times.size()) != states.rows()) {
    throw DimensionMismatch("trajectory times and states have different lengths");
  }
  CsvTable table;
  table.header.push_back("t");
  for (Eigen::Index i = 0; i < states.cols(); ++i) {
    table.header.push_back("x" + std::to_string(i + 1));
  }
  for (std::size_t k = 0; k < times.size(); ++k) {
    std::vector<double> row{times[k]};
    for (Eigen::Index i = 0; i < states.cols(); ++i) {
      row.push_back(states(static_cast<Eigen::Index>(k), i));
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

CsvTable trajectory_table(const Trajectory& traj) {
  return trajectory_table(traj.times, traj.states);
}

CsvTable control_point_table(const ControlPointGrid& cps) {
  CsvTable table;
  table.header = {"component", "j", "value"};
  for (int i = 0; i < cps.dim(); ++i) {
    for (int j = 0; j < cps.num_points(); ++j) {
      table.rows.push_back({static_cast<double>(i + 1), static_cast<double>(j + 1),
                            cps.values()(i, j)});
    }
  }
  return table;
}

ControlPointGrid control_points_from_table(const CsvTable& table) {
  int n = 0;
  int l = 0;
  for (const auto& row : table.rows) {
    n = std::max(n, static_cast<int>(row.at(0)));
    l = std::max(l, static_cast<int>(row.at(1)));
  }
  ControlPointGrid cps(n, l);
  for (const auto& row : table.rows) {
    cps.values()(static_cast<int>(row[0]) - 1, static_cast<int>(row[1]) - 1) = row[2];
  }
  return cps;
}

}  // namespace spline_koopman
