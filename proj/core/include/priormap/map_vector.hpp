#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

#include "priormap/geometry.hpp"

namespace priormap {

enum class ElementClass : std::uint8_t { divider = 0, ped_crossing = 1, boundary = 2 };
inline constexpr std::size_t kNumClasses = 3;
inline constexpr std::array<ElementClass, kNumClasses> kAllClasses = {
    ElementClass::divider, ElementClass::ped_crossing, ElementClass::boundary};

enum class Layer : std::uint8_t { temporal = 0, static_map = 1 };

std::string_view to_string(ElementClass c);
std::string_view to_string(Layer layer);
std::optional<ElementClass> parse_element_class(std::string_view name);
std::optional<Layer> parse_layer(std::string_view name);

// One vectorized map element. `geometry` is in the global UTM frame while it
// lives in a GlobalMap and in the ego frame after retrieval.
struct MapVector {
  std::uint64_t id = 0;
  ElementClass cls = ElementClass::divider;
  Polyline3 geometry;
  double confidence = 1.0;
  Layer layer = Layer::static_map;

  friend bool operator==(const MapVector&, const MapVector&) = default;
};

// Throws ConfigError when confidence is outside [0, 1].
void validate(const MapVector& v);

}  // namespace priormap
