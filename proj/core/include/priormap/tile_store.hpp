#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <span>
#include <vector>

#include "priormap/geometry.hpp"
#include "priormap/map_vector.hpp"

namespace priormap {

struct TileIndex {
  std::int64_t i = 0;
  std::int64_t j = 0;

  friend auto operator<=>(const TileIndex&, const TileIndex&) = default;
};

// (floor(e / l), floor(n / l)). Throws ConfigError when l <= 0.
TileIndex tile_index(double utm_e, double utm_n, double tile_side);

// Floor-consistent remainder in [0, l).
double tile_offset(double coord, double tile_side);

// Target tile plus the neighbours selected by the ego's position inside it:
// per axis {t-1, t} below the tile midpoint, {t} exactly on it, {t, t+1}
// above it. Returns 1, 2 or 4 tiles in ascending order.
std::vector<TileIndex> adjacent_tiles(double utm_e, double utm_n, double tile_side);

// The full 3x3 neighbourhood of the target tile.
std::vector<TileIndex> neighbourhood_3x3(double utm_e, double utm_n, double tile_side);

struct RefreshConfig {
  double tau = 0.8;
};

struct RetrieveOptions {
  // Query the whole 3x3 block around the target tile instead of the
  // position-dependent adjacency set. Needed for exact coverage when the
  // rotated range corner reaches further than l/2 from the ego.
  bool strict_3x3 = false;
};

using VectorRef = std::shared_ptr<const MapVector>;
using TileMap = std::map<TileIndex, std::vector<VectorRef>>;

// Tile-indexed store holding a temporal layer (refreshed predictions) and a
// static layer (pre-stored HD map). Each layer has its own reader/writer lock:
// any number of concurrent retrievals, or one refresh/ingest at a time.
class GlobalMap {
 public:
  explicit GlobalMap(double tile_side);
  GlobalMap(const GlobalMap& other);
  GlobalMap& operator=(const GlobalMap& other);
  GlobalMap(GlobalMap&& other) noexcept;
  GlobalMap& operator=(GlobalMap&& other) noexcept;
  ~GlobalMap();

  double tile_side() const noexcept { return tile_side_; }

  // Stores every prediction with confidence > tau, transformed to the global
  // frame, under the tile of the ego pose. Stored vectors get fresh ids
  // unique within the temporal layer. Returns the number stored.
  std::size_t refresh(std::span<const MapVector> predictions_ego, const EgoPose& pose,
                      const RefreshConfig& cfg);

  // Registers global-frame vectors under every tile their bounding box
  // overlaps (closed tiles). Vectors keep their ids; re-ingesting an id that
  // is already registered under a tile replaces nothing and is skipped there.
  void ingest_static(std::span<const MapVector> vectors_global);

  // Ego-frame vectors from the target and adjacent tiles that intersect the
  // perception range, deduplicated by id and sorted by id.
  std::vector<MapVector> retrieve(Layer layer, const EgoPose& pose, const PerceptionRange& range,
                                  RetrieveOptions opts = {}) const;

  // Low-level insertion used by the file loader; no frame transform and no
  // tile computation.
  void insert(Layer layer, TileIndex tile, MapVector vector);

  // Snapshot of one layer. Vectors are immutable and shared with the map.
  TileMap tiles(Layer layer) const;

  std::size_t tile_count(Layer layer) const;
  // Number of (tile, vector) registrations.
  std::size_t registration_count(Layer layer) const;
  // Number of distinct vector ids.
  std::size_t unique_vector_count(Layer layer) const;

  void clear(Layer layer);

  // Structural equality: same tile side, tiles, and per-tile vector sequences.
  friend bool operator==(const GlobalMap& a, const GlobalMap& b);

 private:
  struct LayerStore {
    TileMap tiles;
    mutable std::shared_mutex mutex;
  };

  LayerStore& store(Layer layer) { return *layers_[static_cast<int>(layer)]; }
  const LayerStore& store(Layer layer) const { return *layers_[static_cast<int>(layer)]; }

  double tile_side_;
  std::uint64_t next_temporal_id_ = 1;
  std::unique_ptr<LayerStore> layers_[2];
};

}  // namespace priormap
