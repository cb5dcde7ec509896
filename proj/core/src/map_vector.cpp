#include "priormap/map_vector.hpp"

#include <cmath>

#include "priormap/errors.hpp"

namespace priormap {

std::string_view to_string(ElementClass c) {
  switch (c) {
    case ElementClass::divider: return "divider";
    case ElementClass::ped_crossing: return "ped_crossing";
    case ElementClass::boundary: return "boundary";
  }
  return "unknown";
}

std::string_view to_string(Layer layer) {
  switch (layer) {
    case Layer::temporal: return "temporal";
    case Layer::static_map: return "static";
  }
  return "unknown";
}

std::optional<ElementClass> parse_element_class(std::string_view name) {
  for (auto c : kAllClasses) {
    if (to_string(c) == name) return c;
  }
  return std::nullopt;
}

std::optional<Layer> parse_layer(std::string_view name) {
  if (name == "temporal") return Layer::temporal;
  if (name == "static" || name == "static_map" || name == "map") return Layer::static_map;
  return std::nullopt;
}

void validate(const MapVector& v) {
  if (!(v.confidence >= 0.0 && v.confidence <= 1.0)) {
    throw ConfigError("map vector " + std::to_string(v.id) + " has confidence outside [0, 1]");
  }
}

}  // namespace priormap
