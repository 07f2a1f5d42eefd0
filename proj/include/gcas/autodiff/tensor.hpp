#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gcas {

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using Shape = std::vector<std::size_t>;

inline std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         [](std::size_t a, std::size_t b) { return a * b; });
}

/// Dense row-major array of doubles. Rank 1 is a vector, rank 2 a matrix;
/// scalars are vectors of length one.
struct Tensor {
  Shape shape;
  std::vector<double> values;

  Tensor() = default;

  explicit Tensor(Shape s, double fill = 0.0) : shape(std::move(s)) {
    validate_shape();
    values.assign(shape_size(shape), fill);
  }

  Tensor(Shape s, std::vector<double> v) : shape(std::move(s)), values(std::move(v)) {
    validate_shape();
    if (shape_size(shape) != values.size()) {
      throw ShapeError("tensor shape " + shape_string(shape) + " does not match " +
                       std::to_string(values.size()) + " values");
    }
  }

  static Tensor vector(std::vector<double> v) {
    Shape s{v.size()};
    return Tensor(std::move(s), std::move(v));
  }
  static Tensor scalar(double v) { return Tensor({1}, std::vector<double>{v}); }
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> v) {
    return Tensor({rows, cols}, std::move(v));
  }

  std::size_t size() const { return values.size(); }
  std::size_t rank() const { return shape.size(); }
  bool is_vector() const { return shape.size() == 1; }
  bool is_matrix() const { return shape.size() == 2; }
  std::size_t rows() const { return shape.at(0); }
  std::size_t cols() const { return shape.size() == 2 ? shape[1] : 1; }

  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
  double& at(std::size_t r, std::size_t c) { return values[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return values[r * cols() + c]; }

  bool all_finite() const {
    for (double v : values)
      if (!std::isfinite(v)) return false;
    return true;
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  void validate_shape() const {
    if (shape.empty() || shape.size() > 2) {
      throw ShapeError("unsupported tensor rank " + std::to_string(shape.size()));
    }
    for (std::size_t d : shape) {
      if (d == 0) throw ShapeError("zero dimension in shape " + shape_string(shape));
    }
  }
};

}  // namespace gcas
