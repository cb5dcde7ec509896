#include "priormap/vector_file.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "priormap/errors.hpp"

namespace priormap {

namespace {

template <typename T>
bool parse_number(const std::string& token, T& out) {
  const char* first = token.data();
  const char* last = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::vector<MapVector> parse_vectors(std::istream& in, Layer layer) {
  std::vector<MapVector> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;

    std::istringstream fields(line);
    std::string id_tok, class_tok, conf_tok;
    fields >> id_tok >> class_tok >> conf_tok;
    std::uint64_t id = 0;
    if (!parse_number(id_tok, id)) throw ParseError("bad id '" + id_tok + "'", line_no);
    const auto cls = parse_element_class(class_tok);
    if (!cls) throw ParseError("unknown class '" + class_tok + "'", line_no);
    double confidence = 0.0;
    if (!parse_number(conf_tok, confidence) || !(confidence >= 0.0 && confidence <= 1.0)) {
      throw ParseError("confidence must be a number in [0, 1], got '" + conf_tok + "'", line_no);
    }

    std::vector<double> coords;
    std::string tok;
    while (fields >> tok) {
      double value = 0.0;
      if (!parse_number(tok, value)) throw ParseError("bad coordinate '" + tok + "'", line_no);
      coords.push_back(value);
    }
    if (coords.size() % 3 != 0) {
      throw ParseError("coordinate count " + std::to_string(coords.size()) +
                           " is not a multiple of 3",
                       line_no);
    }
    std::vector<Point3> pts;
    for (std::size_t k = 0; k < coords.size(); k += 3) {
      pts.push_back({coords[k], coords[k + 1], coords[k + 2]});
    }
    try {
      out.push_back(MapVector{id, *cls, Polyline3(std::move(pts)), confidence, layer});
    } catch (const GeometryError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return out;
}

void format_vectors(std::ostream& out, std::span<const MapVector> vectors) {
  out << "# id class confidence e1 n1 z1 e2 n2 z2 ...\n";
  for (const auto& v : vectors) {
    out << v.id << ' ' << to_string(v.cls) << ' ' << format_double(v.confidence);
    for (const auto& p : v.geometry.points()) {
      out << ' ' << format_double(p.e) << ' ' << format_double(p.n) << ' ' << format_double(p.z);
    }
    out << '\n';
  }
}

std::vector<MapVector> read_vectors(const std::filesystem::path& path, Layer layer) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  return parse_vectors(in, layer);
}

void write_vectors(const std::filesystem::path& path, std::span<const MapVector> vectors) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  format_vectors(out, vectors);
  if (!out) throw IoError("write failure on " + path.string());
}

}  // namespace priormap
