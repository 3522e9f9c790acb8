#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "statact/cell_action.hpp"
#include "statact/group_words.hpp"

namespace statact {

// Identity action on finitely many atoms. Measure-preserving, entropy 0.
CellAction trivial_action(const std::vector<double>& weights,
                          const StepDistribution& m);

// Action by permutations: perms maps each generator index 1..rank to a
// permutation of {0..N-1}. Weights are taken as given; stationarity is
// decided by validate(), not here. Throws MalformedInputError on arity or
// bijectivity violations.
CellAction finite_bijective(const std::map<int, std::vector<std::uint32_t>>& perms,
                            const std::vector<double>& weights,
                            const StepDistribution& m);

// Stationary weight vectors of a permutation action form a simplex whose
// extreme points are the uniform measures on the orbits of the group
// generated by supp(m).
struct SimplexDescription {
  std::vector<std::vector<std::uint32_t>> orbits;        // sorted, by least element
  std::vector<std::vector<double>> extreme_points;       // one per orbit
};
SimplexDescription stationary_simplex(const std::map<int, std::vector<std::uint32_t>>& perms,
                                      const StepDistribution& m);

// Boundary model of the free group at a fixed cylinder depth: cells are the
// reduced words of length `depth`, weighted by the harmonic measure of the
// inverted-step walk (which makes the stationarity identity
// sum_g m(g) mu(g A) = mu(A) hold for the given m). The measure m must be
// nearest neighbor with all 2*rank letters in its support, rank >= 2.
struct BoundarySpec {
  int rank = 2;
  int depth = 2;
  StepDistribution m;
};

CellAction boundary_action(const BoundarySpec& spec);

// Harmonic measure of the cylinder [w] under the boundary model, exposed for
// tests and tooling. Uses the closed form (1/2r)(2r-1)^(1-|w|) for uniform m
// and the damped first-passage fixed point (residual 1e-12, at most 1e5
// iterations) otherwise.
double boundary_cylinder_mass(const BoundarySpec& spec, const GroupWord& w);

// Convex combination t*a + (1-t)*b realized as a disjoint union: cell ids
// are prefixed "A."/"B." and weights scaled by t and 1-t. Requires matching
// step distributions and t in (0,1). Entropy is affine in t; the result is
// flagged non-ergodic.
CellAction convex_combine(const CellAction& a, const CellAction& b, double t);

// Product with the trivial action on `trivial_weights` (cell ids "<id>|<j>").
// Preserves entropy and weak containment both ways.
CellAction stabilize(const CellAction& a, const std::vector<double>& trivial_weights);

}
