#include "priormap/tile_store.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "priormap/errors.hpp"

namespace priormap {

namespace {

void check_tile_side(double tile_side) {
  if (!(tile_side > 0.0) || !std::isfinite(tile_side)) {
    throw ConfigError("tile side must be finite and > 0");
  }
}

std::int64_t floor_div(double coord, double tile_side) {
  return static_cast<std::int64_t>(std::floor(coord / tile_side));
}

// Adjacent index pair along one axis.
std::vector<std::int64_t> axis_neighbours(double coord, double tile_side) {
  const std::int64_t t = floor_div(coord, tile_side);
  const double offset = tile_offset(coord, tile_side);
  const double half = tile_side / 2.0;
  if (offset < half) return {t - 1, t};
  if (offset > half) return {t, t + 1};
  return {t};
}

// Closed-interval tile span [lo, hi] covering [min, max].
std::pair<std::int64_t, std::int64_t> tile_span(double min, double max, double tile_side) {
  std::int64_t lo = floor_div(min, tile_side);
  const std::int64_t hi = floor_div(max, tile_side);
  if (static_cast<double>(lo) * tile_side == min) --lo;  // touches the lower neighbour
  return {lo, hi};
}

}  // namespace

TileIndex tile_index(double utm_e, double utm_n, double tile_side) {
  check_tile_side(tile_side);
  return {floor_div(utm_e, tile_side), floor_div(utm_n, tile_side)};
}

double tile_offset(double coord, double tile_side) {
  const double t = std::floor(coord / tile_side);
  double offset = coord - t * tile_side;
  // Rounding can push the remainder just outside [0, l).
  if (offset < 0.0) offset = 0.0;
  if (offset >= tile_side) offset = std::nextafter(tile_side, 0.0);
  return offset;
}

std::vector<TileIndex> adjacent_tiles(double utm_e, double utm_n, double tile_side) {
  check_tile_side(tile_side);
  std::vector<TileIndex> out;
  for (auto i : axis_neighbours(utm_e, tile_side)) {
    for (auto j : axis_neighbours(utm_n, tile_side)) out.push_back({i, j});
  }
  return out;
}

std::vector<TileIndex> neighbourhood_3x3(double utm_e, double utm_n, double tile_side) {
  const TileIndex t = tile_index(utm_e, utm_n, tile_side);
  std::vector<TileIndex> out;
  out.reserve(9);
  for (std::int64_t di = -1; di <= 1; ++di) {
    for (std::int64_t dj = -1; dj <= 1; ++dj) out.push_back({t.i + di, t.j + dj});
  }
  return out;
}

GlobalMap::GlobalMap(double tile_side) : tile_side_(tile_side) {
  check_tile_side(tile_side);
  layers_[0] = std::make_unique<LayerStore>();
  layers_[1] = std::make_unique<LayerStore>();
}

GlobalMap::GlobalMap(const GlobalMap& other) : tile_side_(other.tile_side_) {
  for (int k = 0; k < 2; ++k) {
    layers_[k] = std::make_unique<LayerStore>();
    std::shared_lock lock(other.layers_[k]->mutex);
    layers_[k]->tiles = other.layers_[k]->tiles;
    if (k == 0) next_temporal_id_ = other.next_temporal_id_;
  }
}

GlobalMap& GlobalMap::operator=(const GlobalMap& other) {
  if (this != &other) {
    GlobalMap copy(other);
    *this = std::move(copy);
  }
  return *this;
}

GlobalMap::GlobalMap(GlobalMap&& other) noexcept = default;
GlobalMap& GlobalMap::operator=(GlobalMap&& other) noexcept = default;
GlobalMap::~GlobalMap() = default;

std::size_t GlobalMap::refresh(std::span<const MapVector> predictions_ego, const EgoPose& pose,
                               const RefreshConfig& cfg) {
  if (!(cfg.tau >= 0.0 && cfg.tau <= 1.0)) throw ConfigError("refresh tau must lie in [0, 1]");
  if (predictions_ego.empty()) return 0;
  validate(pose);

  std::vector<std::shared_ptr<MapVector>> accepted;
  for (const auto& pred : predictions_ego) {
    if (!(pred.confidence > cfg.tau)) continue;
    auto stored = std::make_shared<MapVector>(pred);
    stored->geometry = ego_to_global(pred.geometry, pose);
    stored->layer = Layer::temporal;
    accepted.push_back(std::move(stored));
  }
  if (accepted.empty()) return 0;

  const TileIndex tile = tile_index(pose.utm_e, pose.utm_n, tile_side_);
  auto& layer = store(Layer::temporal);
  std::unique_lock lock(layer.mutex);
  auto& bucket = layer.tiles[tile];
  for (auto& v : accepted) {
    v->id = next_temporal_id_++;
    bucket.push_back(std::move(v));
  }
  return accepted.size();
}

void GlobalMap::ingest_static(std::span<const MapVector> vectors_global) {
  if (vectors_global.empty()) return;
  auto& layer = store(Layer::static_map);
  std::unique_lock lock(layer.mutex);

  std::map<TileIndex, std::unordered_set<std::uint64_t>> present;
  auto ids_in = [&](const TileIndex& t) -> std::unordered_set<std::uint64_t>& {
    auto it = present.find(t);
    if (it != present.end()) return it->second;
    auto& ids = present[t];
    if (auto tile_it = layer.tiles.find(t); tile_it != layer.tiles.end()) {
      for (const auto& v : tile_it->second) ids.insert(v->id);
    }
    return ids;
  };

  for (const auto& v : vectors_global) {
    validate(v);
    auto stored = std::make_shared<MapVector>(v);
    stored->layer = Layer::static_map;
    const Bounds2 b = bounds(v.geometry);
    const auto [i_lo, i_hi] = tile_span(b.min_e, b.max_e, tile_side_);
    const auto [j_lo, j_hi] = tile_span(b.min_n, b.max_n, tile_side_);
    for (std::int64_t i = i_lo; i <= i_hi; ++i) {
      for (std::int64_t j = j_lo; j <= j_hi; ++j) {
        const TileIndex t{i, j};
        if (!ids_in(t).insert(v.id).second) continue;
        layer.tiles[t].push_back(stored);
      }
    }
  }
}

std::vector<MapVector> GlobalMap::retrieve(Layer layer_id, const EgoPose& pose,
                                           const PerceptionRange& range,
                                           RetrieveOptions opts) const {
  validate(pose);
  validate(range);
  const auto targets = opts.strict_3x3 ? neighbourhood_3x3(pose.utm_e, pose.utm_n, tile_side_)
                                       : adjacent_tiles(pose.utm_e, pose.utm_n, tile_side_);

  std::vector<MapVector> out;
  std::unordered_set<std::uint64_t> seen;
  const auto& layer = store(layer_id);
  std::shared_lock lock(layer.mutex);
  for (const auto& t : targets) {
    auto it = layer.tiles.find(t);
    if (it == layer.tiles.end()) continue;
    for (const auto& ref : it->second) {
      if (seen.contains(ref->id)) continue;
      Polyline3 local = global_to_ego(ref->geometry, pose);
      if (!intersects_range(local, range)) continue;
      seen.insert(ref->id);
      out.push_back(MapVector{ref->id, ref->cls, std::move(local), ref->confidence, ref->layer});
    }
  }
  std::sort(out.begin(), out.end(),
            [](const MapVector& a, const MapVector& b) { return a.id < b.id; });
  return out;
}

void GlobalMap::insert(Layer layer_id, TileIndex tile, MapVector vector) {
  validate(vector);
  vector.layer = layer_id;
  auto& layer = store(layer_id);
  std::unique_lock lock(layer.mutex);
  if (layer_id == Layer::temporal) {
    next_temporal_id_ = std::max(next_temporal_id_, vector.id + 1);
  }
  layer.tiles[tile].push_back(std::make_shared<const MapVector>(std::move(vector)));
}

TileMap GlobalMap::tiles(Layer layer_id) const {
  const auto& layer = store(layer_id);
  std::shared_lock lock(layer.mutex);
  return layer.tiles;
}

std::size_t GlobalMap::tile_count(Layer layer_id) const {
  const auto& layer = store(layer_id);
  std::shared_lock lock(layer.mutex);
  return layer.tiles.size();
}

std::size_t GlobalMap::registration_count(Layer layer_id) const {
  const auto& layer = store(layer_id);
  std::shared_lock lock(layer.mutex);
  std::size_t n = 0;
  for (const auto& [_, bucket] : layer.tiles) n += bucket.size();
  return n;
}

std::size_t GlobalMap::unique_vector_count(Layer layer_id) const {
  const auto& layer = store(layer_id);
  std::shared_lock lock(layer.mutex);
  std::unordered_set<std::uint64_t> ids;
  for (const auto& [_, bucket] : layer.tiles) {
    for (const auto& v : bucket) ids.insert(v->id);
  }
  return ids.size();
}

void GlobalMap::clear(Layer layer_id) {
  auto& layer = store(layer_id);
  std::unique_lock lock(layer.mutex);
  layer.tiles.clear();
}

bool operator==(const GlobalMap& a, const GlobalMap& b) {
  if (&a == &b) return true;
  if (a.tile_side_ != b.tile_side_) return false;
  for (Layer layer : {Layer::temporal, Layer::static_map}) {
    const TileMap ta = a.tiles(layer);
    const TileMap tb = b.tiles(layer);
    if (ta.size() != tb.size()) return false;
    for (auto ia = ta.begin(), ib = tb.begin(); ia != ta.end(); ++ia, ++ib) {
      if (ia->first != ib->first || ia->second.size() != ib->second.size()) return false;
      for (std::size_t k = 0; k < ia->second.size(); ++k) {
        if (!(*ia->second[k] == *ib->second[k])) return false;
      }
    }
  }
  return true;
}

}  // namespace priormap
