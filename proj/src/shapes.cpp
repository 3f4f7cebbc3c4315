#include "hetspde/shapes.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace hetspde {
namespace {

struct Entry {
  const char* name;
  std::vector<const char*> args;
  std::size_t required;  // trailing arguments beyond this have defaults
  std::vector<double> defaults;
  std::function<double(double)> (*make)(const std::vector<double>&);
};

const std::vector<Entry>& registry() {
  static const std::vector<Entry> entries{
      {"gaussian", {"center", "width", "height"}, 2, {1.0},
       [](const std::vector<double>& p) -> std::function<double(double)> {
         if (!(p[1] > 0.0)) throw std::invalid_argument("gaussian: width must be positive");
         return [c = p[0], w = p[1], h = p[2]](double x) { return h * std::exp(-0.5 * (x - c) * (x - c) / (w * w)); };
       }},
      {"indicator", {"a", "b", "height"}, 2, {1.0},
       [](const std::vector<double>& p) -> std::function<double(double)> {
         if (!(p[0] < p[1])) throw std::invalid_argument("indicator: need a < b");
         return [a = p[0], b = p[1], h = p[2]](double x) { return (x >= a && x <= b) ? h : 0.0; };
       }},
      {"sine", {"amplitude", "frequency", "phase", "offset"}, 2, {0.0, 0.0},
       [](const std::vector<double>& p) -> std::function<double(double)> {
         return [A = p[0], k = p[1], ph = p[2], off = p[3]](double x) { return off + A * std::sin(k * x + ph); };
       }},
      {"constant", {"value"}, 1, {},
       [](const std::vector<double>& p) -> std::function<double(double)> {
         return [v = p[0]](double) { return v; };
       }},
      {"tanh", {"scale", "height"}, 0, {1.0, 1.0},
       [](const std::vector<double>& p) -> std::function<double(double)> {
         return [s = p[0], h = p[1]](double x) { return h * std::tanh(s * x); };
       }},
      {"linear", {"slope", "intercept"}, 1, {0.0},
       [](const std::vector<double>& p) -> std::function<double(double)> {
         return [m = p[0], c = p[1]](double x) { return m * x + c; };
       }},
      {"zero", {}, 0, {},
       [](const std::vector<double>&) -> std::function<double(double)> { return [](double) { return 0.0; }; }},
  };
  return entries;
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

double parse_number(const std::string& token, const std::string& context) {
  const std::string t = trim(token);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
    throw std::invalid_argument(context + ": '" + t + "' is not a number");
  if (!std::isfinite(v)) throw std::invalid_argument(context + ": non-finite argument");
  return v;
}

}  // namespace

std::string Shape::str() const {
  std::ostringstream out;
  out.precision(17);
  out << name << '(';
  for (std::size_t k = 0; k < params.size(); ++k) out << (k ? ", " : "") << params[k];
  out << ')';
  return out.str();
}

Shape parse_shape(const std::string& text) {
  const std::string s = trim(text);
  const auto open = s.find('(');
  std::string name = trim(s.substr(0, open));
  std::vector<double> args;
  if (open != std::string::npos) {
    if (s.back() != ')') throw std::invalid_argument("shape '" + s + "': missing closing parenthesis");
    const std::string inner = trim(s.substr(open + 1, s.size() - open - 2));
    if (!inner.empty()) {
      std::stringstream ss(inner);
      std::string tok;
      while (std::getline(ss, tok, ',')) args.push_back(parse_number(tok, "shape '" + name + "'"));
    }
  }
  for (const Entry& e : registry()) {
    if (name != e.name) continue;
    if (args.size() < e.required || args.size() > e.args.size())
      throw std::invalid_argument("shape '" + name + "' takes " + std::to_string(e.required) + " to " +
                                  std::to_string(e.args.size()) + " arguments, got " + std::to_string(args.size()));
    for (std::size_t k = args.size(); k < e.args.size(); ++k) args.push_back(e.defaults[k - e.required]);
    Shape shape;
    shape.name = name;
    shape.params = args;
    shape.f = e.make(args);
    return shape;
  }
  throw std::invalid_argument("unknown shape '" + name + "'");
}

std::vector<std::string> shape_signatures() {
  std::vector<std::string> out;
  for (const Entry& e : registry()) {
    std::string sig = std::string(e.name) + "(";
    for (std::size_t k = 0; k < e.args.size(); ++k) {
      sig += (k ? ", " : "");
      sig += e.args[k];
      if (k >= e.required) sig += "=" + std::to_string(e.defaults[k - e.required]);
    }
    out.push_back(sig + ")");
  }
  return out;
}

}  // namespace hetspde
