#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "gcas/autodiff/parameters.hpp"
#include "json.hpp"

namespace gcas {

class ArchiveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parameter archive: one JSON header line
//   {"parameters":[{"name":...,"shape":[...]}, ...]}
// followed by the concatenated little-endian float64 payloads in header order.

namespace detail {

inline std::uint64_t to_little_endian(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffULL) << (8 * (7 - i));
    return r;
  }
  return v;
}

}  // namespace detail

inline void write_archive(std::ostream& out, const ParameterStore& store) {
  nlohmann::json header;
  header["parameters"] = nlohmann::json::array();
  for (std::size_t i = 0; i < store.size(); ++i) {
    header["parameters"].push_back({{"name", store.name(i)}, {"shape", store[i].shape}});
  }
  out << header.dump() << '\n';
  for (const auto& t : store.tensors()) {
    for (double v : t.values) {
      const std::uint64_t bits = detail::to_little_endian(std::bit_cast<std::uint64_t>(v));
      char buf[8];
      std::memcpy(buf, &bits, 8);
      out.write(buf, 8);
    }
  }
  if (!out) throw ArchiveError("failed writing parameter archive");
}

inline ParameterStore read_archive(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ArchiveError("parameter archive: missing header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ArchiveError(std::string("parameter archive: corrupt header: ") + e.what());
  }
  if (!header.contains("parameters") || !header["parameters"].is_array()) {
    throw ArchiveError("parameter archive: header has no parameter list");
  }
  ParameterStore store;
  for (const auto& entry : header["parameters"]) {
    std::string name;
    Shape shape;
    try {
      name = entry.at("name").get<std::string>();
      shape = entry.at("shape").get<Shape>();
    } catch (const nlohmann::json::exception& e) {
      throw ArchiveError(std::string("parameter archive: corrupt header entry: ") + e.what());
    }
    Tensor t;
    try {
      t = Tensor(shape, 0.0);
    } catch (const ShapeError& e) {
      throw ArchiveError("parameter archive: parameter " + name + ": " + e.what());
    }
    for (double& v : t.values) {
      char buf[8];
      if (!in.read(buf, 8)) {
        throw ArchiveError("parameter archive: truncated payload in parameter " + name);
      }
      std::uint64_t bits = 0;
      std::memcpy(&bits, buf, 8);
      v = std::bit_cast<double>(detail::to_little_endian(bits));
    }
    store.add(name, std::move(t));
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw ArchiveError("parameter archive: trailing bytes after last parameter");
  }
  return store;
}

}  // namespace gcas
