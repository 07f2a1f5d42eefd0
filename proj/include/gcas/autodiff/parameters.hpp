#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "gcas/autodiff/tensor.hpp"

namespace gcas {

using ParamId = std::size_t;

/// Fan-in used for initialization: the column count of a matrix, the length of a
/// vector.
inline std::size_t fan_in(const Shape& shape) { return shape.back(); }

/// Uniform values in the open interval (-1/sqrt(fan_in), 1/sqrt(fan_in)),
/// deterministic for a given seed.
inline Tensor init_params(const Shape& shape, std::uint64_t seed) {
  Tensor t(shape);
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in(shape)));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& v : t.values) {
    do {
      v = dist(rng);
    } while (!(std::abs(v) < bound));
  }
  return t;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Named parameter tensors in a fixed insertion order.
class ParameterStore {
 public:
  ParamId add(const std::string& name, Tensor value) {
    if (index_.contains(name)) throw std::invalid_argument("duplicate parameter " + name);
    index_.emplace(name, tensors_.size());
    names_.push_back(name);
    tensors_.push_back(std::move(value));
    return tensors_.size() - 1;
  }

  /// Adds a parameter drawn by init_params with a seed derived from the store
  /// seed and the parameter's position.
  ParamId add_random(const std::string& name, const Shape& shape, std::uint64_t seed) {
    return add(name, init_params(shape, splitmix64(seed ^ splitmix64(tensors_.size() + 1))));
  }

  std::size_t size() const { return tensors_.size(); }
  const std::string& name(ParamId id) const { return names_.at(id); }
  const std::vector<std::string>& names() const { return names_; }
  Tensor& operator[](ParamId id) { return tensors_[id]; }
  const Tensor& operator[](ParamId id) const { return tensors_[id]; }
  std::vector<Tensor>& tensors() { return tensors_; }
  const std::vector<Tensor>& tensors() const { return tensors_; }

  ParamId id(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("no parameter named " + name);
    return it->second;
  }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& t : tensors_) n += t.size();
    return n;
  }

  void fill(double v) {
    for (auto& t : tensors_) std::fill(t.values.begin(), t.values.end(), v);
  }

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> tensors_;
  std::unordered_map<std::string, ParamId> index_;
};

/// Gradient per parameter, indexed like the owning ParameterStore.
using Gradients = std::vector<Tensor>;

inline Gradients zero_gradients(const ParameterStore& store) {
  Gradients g;
  g.reserve(store.size());
  for (const auto& t : store.tensors()) g.emplace_back(t.shape, 0.0);
  return g;
}

inline void accumulate(Gradients& into, const Gradients& from, double scale = 1.0) {
  for (std::size_t i = 0; i < into.size(); ++i) {
    auto& dst = into[i].values;
    const auto& src = from[i].values;
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += scale * src[j];
  }
}

}  // namespace gcas
