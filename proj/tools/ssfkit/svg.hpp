#pragma once

#include <optional>
#include <string>
#include <vector>

namespace ssfcli::svg {

struct Bar {
  std::string label;
  double value = 0.0;
  std::optional<double> lo;  // error bar, drawn when both ends are set
  std::optional<double> hi;
};

std::string bar_chart(const std::string& title, const std::string& ylabel, const std::vector<Bar>& bars);

std::string line_chart(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                       const std::vector<double>& x, const std::vector<double>& y);

struct Point {
  std::string label;
  double x = 0.0;
  double y = 0.0;
  int group = -1;  // colour class; -1 for none
};

struct Arrow {
  std::string label;
  double u = 0.0;
  double v = 0.0;
};

/// Embedding positions with effect arrows drawn from the origin.
std::string biplot(const std::string& title, const std::vector<Point>& points, const std::vector<Arrow>& arrows);

}  // namespace ssfcli::svg
