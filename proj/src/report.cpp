#include "sdyn/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace sdyn {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b"};

}  // namespace

void write_svg_chart(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<Series>& series) {
  const int width = 760, height = 420;
  const int ml = 60, mr = 160, mt = 40, mb = 50;
  double x_min = std::numeric_limits<double>::infinity(), x_max = -x_min;
  double y_min = x_min, y_max = -x_min;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      x_min = std::min(x_min, s.x[i]);
      x_max = std::max(x_max, s.x[i]);
      y_min = std::min(y_min, s.y[i]);
      y_max = std::max(y_max, s.y[i]);
    }
  if (!(x_max > x_min)) x_max = x_min + 1.0;
  if (!(y_max > y_min)) y_max = y_min + 1.0;
  const double y_pad = 0.05 * (y_max - y_min);
  y_min -= y_pad;
  y_max += y_pad;

  auto px = [&](double x) {
    return ml + (x - x_min) / (x_max - x_min) * (width - ml - mr);
  };
  auto py = [&](double y) {
    return height - mb - (y - y_min) / (y_max - y_min) * (height - mt - mb);
  };

  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  f << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='"
    << height << "' viewBox='0 0 " << width << " " << height << "'>\n";
  f << "<rect width='100%' height='100%' fill='white'/>\n";
  f << "<text x='" << width / 2 << "' y='24' text-anchor='middle' "
    << "font-family='sans-serif' font-size='16'>" << title << "</text>\n";

  // axes and ticks
  f << "<line x1='" << ml << "' y1='" << height - mb << "' x2='" << width - mr
    << "' y2='" << height - mb << "' stroke='black'/>\n";
  f << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='"
    << height - mb << "' stroke='black'/>\n";
  char buf[64];
  for (int k = 0; k <= 4; ++k) {
    const double xv = x_min + k * (x_max - x_min) / 4;
    const double yv = y_min + k * (y_max - y_min) / 4;
    std::snprintf(buf, sizeof(buf), "%.3g", xv);
    f << "<text x='" << px(xv) << "' y='" << height - mb + 18
      << "' text-anchor='middle' font-family='sans-serif' font-size='11'>" << buf
      << "</text>\n";
    std::snprintf(buf, sizeof(buf), "%.3g", yv);
    f << "<text x='" << ml - 8 << "' y='" << py(yv) + 4
      << "' text-anchor='end' font-family='sans-serif' font-size='11'>" << buf
      << "</text>\n";
    f << "<line x1='" << ml << "' y1='" << py(yv) << "' x2='" << width - mr
      << "' y2='" << py(yv) << "' stroke='#dddddd'/>\n";
  }
  f << "<text x='" << (ml + width - mr) / 2 << "' y='" << height - 12
    << "' text-anchor='middle' font-family='sans-serif' font-size='12'>" << x_label
    << "</text>\n";
  f << "<text x='16' y='" << (mt + height - mb) / 2
    << "' text-anchor='middle' font-family='sans-serif' font-size='12' "
    << "transform='rotate(-90 16 " << (mt + height - mb) / 2 << ")'>" << y_label
    << "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % 6];
    f << "<polyline fill='none' stroke='" << color << "' stroke-width='1.5' points='";
    for (std::size_t i = 0; i < series[s].x.size(); ++i) {
      if (!std::isfinite(series[s].y[i])) continue;
      f << px(series[s].x[i]) << "," << py(series[s].y[i]) << " ";
    }
    f << "'/>\n";
    const int ly = mt + 18 * static_cast<int>(s);
    f << "<line x1='" << width - mr + 10 << "' y1='" << ly << "' x2='"
      << width - mr + 34 << "' y2='" << ly << "' stroke='" << color
      << "' stroke-width='2'/>\n";
    f << "<text x='" << width - mr + 40 << "' y='" << ly + 4
      << "' font-family='sans-serif' font-size='12'>" << series[s].label
      << "</text>\n";
  }
  f << "</svg>\n";
}

std::string format_r2_table(const std::vector<std::string>& row_names,
                            const Eigen::MatrixXd& values) {
  std::ostringstream os;
  std::size_t name_w = 14;
  for (const auto& n : row_names) name_w = std::max(name_w, n.size() + 2);
  os << std::string(name_w, ' ') << "interpolation  extrapolation\n";
  char buf[64];
  for (std::size_t r = 0; r < row_names.size(); ++r) {
    os << row_names[r] << std::string(name_w - row_names[r].size(), ' ');
    std::snprintf(buf, sizeof(buf), "%13.4f  %13.4f\n",
                  values(static_cast<Eigen::Index>(r), 0),
                  values(static_cast<Eigen::Index>(r), 1));
    os << buf;
  }
  return os.str();
}

std::string config_hash(const std::string& canonical) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace sdyn
