#pragma once

#include <functional>
#include <string>
#include <vector>

namespace hetspde {

/// A named one-dimensional profile from the scenario registry, e.g.
/// `gaussian(0, 1, 2)` or `indicator(-1, 1)`.
struct Shape {
  std::string name;
  std::vector<double> params;
  std::function<double(double)> f;

  double operator()(double x) const { return f(x); }
  /// Canonical text form, parseable by parse_shape.
  std::string str() const;
};

/// Throws std::invalid_argument on an unknown name or a wrong argument count.
Shape parse_shape(const std::string& text);

/// Registry entries as `name(arg, ...)` signatures.
std::vector<std::string> shape_signatures();

}  // namespace hetspde
