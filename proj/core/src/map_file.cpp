#include "priormap/map_file.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "priormap/errors.hpp"

namespace priormap {

namespace {

constexpr char kMagic[4] = {'U', 'P', 'P', 'M'};

class ByteWriter {
 public:
  void raw(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    out_.insert(out_.end(), p, p + n);
  }
  template <typename T>
  void le(T value) {
    using U = std::make_unsigned_t<T>;
    auto u = static_cast<U>(value);
    for (std::size_t k = 0; k < sizeof(T); ++k) out_.push_back(static_cast<std::uint8_t>(u >> (8 * k)));
  }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v)); }

  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t offset() const { return pos_; }
  bool at_end() const { return pos_ == bytes_.size(); }

  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw DecodeError(std::string("truncated input while reading ") + what, pos_);
    }
  }
  template <typename T>
  T le(const char* what) {
    need(sizeof(T), what);
    using U = std::make_unsigned_t<T>;
    U u = 0;
    for (std::size_t k = 0; k < sizeof(T); ++k) u |= static_cast<U>(bytes_[pos_ + k]) << (8 * k);
    pos_ += sizeof(T);
    return static_cast<T>(u);
  }
  double f64(const char* what) { return std::bit_cast<double>(le<std::uint64_t>(what)); }
  void raw(void* dst, std::size_t n, const char* what) {
    need(n, what);
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

// Smallest possible encoded vector: header fields plus two points.
constexpr std::size_t kMinVectorBytes = 8 + 1 + 8 + 4 + 2 * 24;
constexpr std::size_t kTileHeaderBytes = 8 + 8 + 8;

}  // namespace

std::vector<std::uint8_t> encode_map(const GlobalMap& map) {
  ByteWriter w;
  w.raw(kMagic, sizeof(kMagic));
  w.le<std::uint16_t>(kMapFileVersion);
  w.f64(map.tile_side());
  for (Layer layer : {Layer::temporal, Layer::static_map}) {
    const TileMap tiles = map.tiles(layer);
    w.le<std::uint64_t>(tiles.size());
    for (const auto& [index, bucket] : tiles) {
      w.le<std::int64_t>(index.i);
      w.le<std::int64_t>(index.j);
      w.le<std::uint64_t>(bucket.size());
      for (const auto& v : bucket) {
        w.le<std::uint64_t>(v->id);
        w.le<std::uint8_t>(static_cast<std::uint8_t>(v->cls));
        w.f64(v->confidence);
        w.le<std::uint32_t>(static_cast<std::uint32_t>(v->geometry.size()));
        for (const auto& p : v->geometry.points()) {
          w.f64(p.e);
          w.f64(p.n);
          w.f64(p.z);
        }
      }
    }
  }
  return w.take();
}

GlobalMap decode_map(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  char magic[4];
  r.raw(magic, 4, "magic");
  if (std::memcmp(magic, kMagic, 4) != 0) throw DecodeError("bad magic, expected \"UPPM\"", 0);
  const std::size_t version_at = r.offset();
  const auto version = r.le<std::uint16_t>("version");
  if (version != kMapFileVersion) {
    throw DecodeError("unsupported map file version " + std::to_string(version), version_at);
  }
  const std::size_t side_at = r.offset();
  const double tile_side = r.f64("tile side");
  if (!(tile_side > 0.0) || !std::isfinite(tile_side)) {
    throw DecodeError("tile side must be finite and > 0", side_at);
  }

  GlobalMap map(tile_side);
  for (Layer layer : {Layer::temporal, Layer::static_map}) {
    const std::size_t count_at = r.offset();
    const auto tile_count = r.le<std::uint64_t>("tile count");
    if (tile_count > (bytes.size() - r.offset()) / kTileHeaderBytes) {
      throw DecodeError("tile count exceeds remaining input", count_at);
    }
    TileIndex previous{};
    for (std::uint64_t t = 0; t < tile_count; ++t) {
      const std::size_t tile_at = r.offset();
      TileIndex index;
      index.i = r.le<std::int64_t>("tile i");
      index.j = r.le<std::int64_t>("tile j");
      if (t > 0 && !(previous < index)) {
        throw DecodeError("tiles out of order or duplicated", tile_at);
      }
      previous = index;
      const std::size_t vcount_at = r.offset();
      const auto vector_count = r.le<std::uint64_t>("vector count");
      if (vector_count > (bytes.size() - r.offset()) / kMinVectorBytes) {
        throw DecodeError("vector count exceeds remaining input", vcount_at);
      }
      for (std::uint64_t k = 0; k < vector_count; ++k) {
        const std::size_t vector_at = r.offset();
        MapVector v{0, ElementClass::divider, Polyline3({{0, 0, 0}, {1, 0, 0}}), 1.0, layer};
        v.id = r.le<std::uint64_t>("vector id");
        const std::size_t class_at = r.offset();
        const auto cls = r.le<std::uint8_t>("class");
        if (cls >= kNumClasses) throw DecodeError("unknown class tag " + std::to_string(cls), class_at);
        v.cls = static_cast<ElementClass>(cls);
        const std::size_t conf_at = r.offset();
        v.confidence = r.f64("confidence");
        if (!(v.confidence >= 0.0 && v.confidence <= 1.0)) {
          throw DecodeError("confidence outside [0, 1]", conf_at);
        }
        const std::size_t npts_at = r.offset();
        const auto npts = r.le<std::uint32_t>("point count");
        if (npts < 2) throw DecodeError("polyline needs at least 2 points", npts_at);
        r.need(static_cast<std::size_t>(npts) * 24, "points");
        std::vector<Point3> pts(npts);
        for (auto& p : pts) {
          p.e = r.f64("point");
          p.n = r.f64("point");
          p.z = r.f64("point");
        }
        try {
          v.geometry = Polyline3(std::move(pts));
        } catch (const GeometryError& e) {
          throw DecodeError(std::string("invalid geometry: ") + e.what(), vector_at);
        }
        map.insert(layer, index, std::move(v));
      }
    }
  }
  if (!r.at_end()) throw DecodeError("trailing bytes after last layer", r.offset());
  return map;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failure on " + path.string());
  return bytes;
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failure on " + path.string());
}

void save_map(const GlobalMap& map, const std::filesystem::path& path) {
  write_file_bytes(path, encode_map(map));
}

GlobalMap load_map(const std::filesystem::path& path) { return decode_map(read_file_bytes(path)); }

}  // namespace priormap
