#pragma once
// Field-to-device placement: minimize the access-plus-recomputation cost
//
//   sum_j sum_i (F_i C_ij + F_i R_ij P_j) a_ij
//
// over binary assignments a with one device per field, subject to
// X * sum_i B_i a_ij <= S_j per device. solve() is an exact branch-and-bound
// (bound: per-field minima of the unassigned suffix); brute_force() is the
// enumeration oracle. Both break ties toward the lower device index, then
// lexicographically, so they agree bit-for-bit.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "strata/profiling.hpp"
#include "strata/schema.hpp"

namespace strata {

struct PlacementProblem {
  std::vector<std::string> fields;
  std::vector<std::string> devices;
  std::vector<double> access_freq;    // F, n
  std::vector<double> field_bytes;    // B, n
  std::vector<double> capacity;       // S, m
  std::vector<double> failure_prob;   // P, m
  std::vector<double> access_ns;      // C, n x m row-major
  std::vector<double> recompute_ns;   // R, n x m row-major
  uint64_t objects = 1;               // X

  size_t n() const { return fields.size(); }
  size_t m() const { return devices.size(); }
  double c(size_t i, size_t j) const { return access_ns[i * m() + j]; }
  double& c(size_t i, size_t j) { return access_ns[i * m() + j]; }
  double r(size_t i, size_t j) const { return recompute_ns[i * m() + j]; }
  double& r(size_t i, size_t j) { return recompute_ns[i * m() + j]; }

  // F_i C_ij + F_i R_ij P_j
  double field_cost(size_t i, size_t j) const;

  void validate() const;

  static PlacementProblem from_profile(const Profile& profile, uint64_t objects);
};

struct PlacementSolution {
  std::vector<int> device_of;        // one device index per field
  double objective = 0;
  std::vector<double> device_load;   // X * sum B_i a_ij, per device
};

// Full Eq-objective for an explicit assignment; validates dimensions.
double objective(const PlacementProblem& p, std::span<const int> device_of);

PlacementSolution solve(const PlacementProblem& p);        // throws infeasible
PlacementSolution brute_force(const PlacementProblem& p);  // throws too_large / infeasible

// One sweep axis: a parameter binding evaluated at each value.
struct AxisSpec {
  enum class Kind {
    AccessCell,   // C[field][device] = v
    RecomputeCell,// R[field][device] = v
    FailureProb,  // P[device] = v
    Frequency,    // F[field] = v
    Objects,      // X = v
    Iterations,   // F[field] = v and R[field][volatile_device] = v * per_iteration_ns
  };
  Kind kind;
  size_t field = 0;
  size_t device = 0;
  size_t volatile_device = 0;
  double per_iteration_ns = 0;
  std::vector<double> values;
  std::string label;

  // "C:<field>:<device>:<range>", "R:<field>:<device>:<range>",
  // "P:<device>:<range>", "F:<field>:<range>", "X:<range>",
  // "iters:<field>:<volatile device>:<per-iteration ns>:<range>"
  // range := lo..hi[:step] | v1,v2,...
  static AxisSpec parse(std::string_view text, const PlacementProblem& base);
};

void apply_axis(PlacementProblem& p, const AxisSpec& axis, double value);

struct SweepCell {
  double a1 = 0;
  double a2 = 0;
  bool feasible = false;
  std::vector<int> device_of;
  double objective = 0;
};

// Solves the instance at every grid point; infeasible cells are marked.
std::vector<SweepCell> sweep(const PlacementProblem& base, const AxisSpec& axis1,
                             const AxisSpec& axis2);

void write_sweep_csv(const std::filesystem::path& path, const PlacementProblem& base,
                     const std::vector<SweepCell>& cells);

void write_solution_csv(const std::filesystem::path& path, const PlacementProblem& p,
                        const PlacementSolution& s);

// Re-tags the schema with the solved single-device assignment;
// parse_schema(emit_tags(...)) reproduces it.
std::string emit_tags(const PlacementProblem& p, const PlacementSolution& s,
                      const ObjectSchema& schema);

}  // namespace strata
