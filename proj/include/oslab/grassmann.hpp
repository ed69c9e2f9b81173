#pragma once

// Distances, complements, refinements, alignment and intersections on
// Grassmannians, flag manifolds and decomposition spaces.
//
// The metric on Gr_k(R^m) is the operator-norm distance of orthogonal
// projectors, which equals the sine of the largest principal angle.

#include "oslab/subspace.hpp"

namespace oslab {

/// Below this transversality the intersection of two flags is rejected.
inline constexpr double kTransversalityMin = 1e-8;

/// ||P_E - P_F||, in [0, 1]. Throws DimensionMismatch unless ambient
/// dimensions and dimensions agree.
double subspace_distance(const Subspace& e, const Subspace& f);

/// max_j subspace_distance(F_j, F'_j). Signatures must agree.
double flag_distance(const Flag& f, const Flag& g);

/// max_j subspace_distance(E_j, E'_j). Signatures must agree.
double decomposition_distance(const Decomposition& d, const Decomposition& e);

/// (F_k^perp, ..., F_1^perp), of signature tau^perp.
Flag complement_flag(const Flag& f);

/// True iff the entries of `coarse` all appear in `fine`.
bool refines(const Signature& fine, const Signature& coarse);

/// Keeps the components of `f` whose dimensions appear in `coarse`.
/// Throws NotARefinement.
Flag project_flag(const Flag& f, const Signature& coarse);

/// Merges consecutive components of `d` into the coarser signature.
/// Throws NotARefinement.
Decomposition project_decomposition(const Decomposition& d, const Signature& coarse);

/// |det(E^T F)|: the product of cosines of the principal angles.
double alignment(const Subspace& e, const Subspace& f);

/// min_i alignment(F_i, (F'_{k-i+1})^perp) for flags of complementary
/// signatures. Empty signatures give 1.
double transversality(const Flag& f, const Flag& f_perp_sig);

/// Component j is F_j intersected with F'_{k-j+2} (with F_{k+1} = F'_{k+1} =
/// R^m). Throws NonTransversal when transversality <= theta_min.
Decomposition intersect(const Flag& f, const Flag& f_perp_sig,
                        double theta_min = kTransversalityMin);

/// Sine of the minimal angle between U and W with dim U + dim W = m; zero
/// iff U + W is not direct.
double min_angle_sine(const Subspace& u, const Subspace& w);

}  // namespace oslab
