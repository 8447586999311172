#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace sdyn {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Minimal standalone line chart; CSV logs remain the source of truth.
void write_svg_chart(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<Series>& series);

/// Fixed-width text table of R^2 values (rows x {interpolation, extrapolation}).
std::string format_r2_table(const std::vector<std::string>& row_names,
                            const Eigen::MatrixXd& values);

/// FNV-1a hash of a canonical config string, hex-encoded; stamped into
/// artifacts so outputs are traceable to their configuration.
std::string config_hash(const std::string& canonical);

}  // namespace sdyn
