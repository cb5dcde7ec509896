#pragma once

#include <cstdint>
#include <iosfwd>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "priormap/geometry.hpp"
#include "priormap/map_vector.hpp"
#include "priormap/random.hpp"

namespace priormap {

// Distribution parameters for the six HD-map corruption operators. Angles in
// degrees, distances in meters.
struct PerturbationSpec {
  std::uint64_t seed = 0;
  // Instance displacement: each instance is selected with probability
  // inst_select_prob and moved by |d| ~ U[0, inst_disp_range] in a uniformly
  // random planar direction.
  double inst_disp_range = 6.0;
  double inst_select_prob = 0.5;
  // Instance addition: n ~ U{0..add_max} pool templates, re-centred inside
  // placement_range.
  int add_max = 10;
  // Instance deletion: n ~ U{0..min(del_max, count)} distinct instances.
  int del_max = 10;
  // Frame displacement: one offset per frame, each planar axis ~ U[-r, r].
  double frame_disp_range = 6.0;
  // Frame rotation about the ego origin: theta ~ U[-r, r] degrees.
  double frame_rot_range = 15.0;
  // Frame scaling about the ego origin: s ~ U[lo, hi].
  double frame_scale_lo = 0.8;
  double frame_scale_hi = 1.2;
  PerceptionRange placement_range{};

  friend bool operator==(const PerturbationSpec&, const PerturbationSpec&) = default;
};

void validate(const PerturbationSpec& spec);

// Plain-text config: one `key = value` per line, '#' comments. Keys match the
// field names above plus placement_front/rear/left/right. Unknown keys are a
// ConfigError; missing keys keep their defaults.
PerturbationSpec parse_perturbation_spec(std::istream& in);
PerturbationSpec parse_perturbation_spec(std::string_view text);
std::string format_perturbation_spec(const PerturbationSpec& spec);

enum class PerturbOp {
  inst_displacement,
  inst_addition,
  inst_deletion,
  frame_displacement,
  frame_rotation,
  frame_scaling,
};

std::string_view to_string(PerturbOp op);
// Throws ConfigError for an unknown tag.
PerturbOp parse_perturb_op(std::string_view tag);
// Comma-separated list of tags; empty string gives the empty set.
std::set<PerturbOp> parse_perturb_ops(std::string_view list);

struct ElementPool {
  std::vector<MapVector> templates;
};

// Deterministic building blocks.
MapVector translated(const MapVector& v, double de, double dn);
MapVector displaced(const MapVector& v, double magnitude, double heading);
std::vector<MapVector> rotated_about_origin(std::span<const MapVector> vectors, double theta_rad);
std::vector<MapVector> scaled_about_origin(std::span<const MapVector> vectors, double s);

// Per-frame samples, exposed so callers (and tests) can observe the draws.
double sample_frame_rotation_deg(const PerturbationSpec& spec, Rng& rng);
double sample_frame_scale(const PerturbationSpec& spec, Rng& rng);

std::vector<MapVector> instance_displacement(std::span<const MapVector> vectors,
                                             const PerturbationSpec& spec, Rng& rng);
// Throws ConfigError when the pool is empty and at least one element is drawn.
std::vector<MapVector> instance_addition(std::span<const MapVector> vectors,
                                         const ElementPool& pool, const PerturbationSpec& spec,
                                         Rng& rng);
std::vector<MapVector> instance_deletion(std::span<const MapVector> vectors,
                                         const PerturbationSpec& spec, Rng& rng);
std::vector<MapVector> frame_displacement(std::span<const MapVector> vectors,
                                          const PerturbationSpec& spec, Rng& rng);
std::vector<MapVector> frame_rotation(std::span<const MapVector> vectors,
                                      const PerturbationSpec& spec, Rng& rng);
std::vector<MapVector> frame_scaling(std::span<const MapVector> vectors,
                                     const PerturbationSpec& spec, Rng& rng);

// Runs the selected operators in fixed order: instance displacement,
// addition, deletion, then frame displacement, rotation, scaling.
std::vector<MapVector> apply_perturbations(std::span<const MapVector> vectors,
                                           const ElementPool& pool, const PerturbationSpec& spec,
                                           const std::set<PerturbOp>& ops, Rng& rng);

}  // namespace priormap
