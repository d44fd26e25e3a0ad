#pragma once

#include <string>
#include <utility>
#include <vector>

namespace bvmlab::svg {

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
  bool connect = true;
};

struct Plot {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  std::vector<Series> series;
};

/// Standalone SVG document. Points that cannot be placed on a log axis are dropped.
std::string render(const Plot& plot);

}  // namespace bvmlab::svg
