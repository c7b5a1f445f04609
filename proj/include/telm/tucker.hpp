// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "telm/tensor.hpp"

namespace telm {

/// Tucker factorization: core tensor of shape (D_0, ..., D_{K-1}) plus one
/// factor matrix per mode, factors[k] of shape I_k x D_k. Factors produced
/// by hosvd/hooi are column-orthonormal; decompose_samples leaves the
/// last (sample) mode with an implicit identity factor.
struct TuckerFactors {
    Tensor core;
    std::vector<Matrix> factors;
};

/// Per-mode numeric ranks of the mode-k matricizations (the k-mode ranks).
/// The overload without tol uses the default relative tolerance of
/// numeric_rank for each matricization.
Shape mode_ranks(const Tensor& x);
Shape mode_ranks(const Tensor& x, double tol);

/// Truncated higher-order SVD: factors[k] holds the leading ranks[k] left
/// singular vectors of matricize(x, k) and the core is x contracted with
/// every factor transpose. Exact whenever ranks[k] >= k-mode rank for all
/// k; otherwise a quasi-optimal truncation (see the energy bound tested in
/// the suite). Requires 1 <= ranks[k] <= I_k.
TuckerFactors hosvd(const Tensor& x, const Shape& ranks);

/// Reconstruction fit 1 - |x - reconstruct(t)| / |x|, defined as 1 when x
/// is the zero tensor and the reconstruction is zero too.
double fit(const Tensor& x, const TuckerFactors& t);

/// Fit values recorded by hooi. iteration_fits[i] is the fit after sweep
/// i+1; the sequence is non-decreasing because sweeps that fail to improve
/// the fit are discarded.
struct HooiTrace {
    double hosvd_fit = 0.0;
    std::vector<double> iteration_fits;
};

/// Higher-order orthogonal iteration: alternating least-squares refinement
/// of the truncated decomposition, starting from hosvd. Each sweep updates
/// every factor in mode order against the current others; iteration stops
/// when a sweep improves the fit by less than fit_tol or after max_iters
/// sweeps. max_iters must be >= 1 and fit_tol > 0.
TuckerFactors hooi(const Tensor& x, const Shape& ranks, std::size_t max_iters = 50,
                   double fit_tol = 1e-6, HooiTrace* trace = nullptr);

/// Expands the core through every factor: result has shape (I_0, ..., I_{K-1}).
Tensor reconstruct(const TuckerFactors& t);

/// Batch decomposition result: one core per input sample, all expressed in
/// the same shared factor basis.
struct SampleDecomposition {
    std::vector<Tensor> cores;
    std::vector<Matrix> factors;
};

/// Stacks N equal-shape order-K samples along a new last mode, decomposes
/// that batch with the last-mode factor fixed to the N x N identity (its
/// SVD is skipped entirely), and returns the N core slices of shape `ranks`
/// together with the K shared factors.
SampleDecomposition decompose_samples(std::span<const Tensor> samples, const Shape& ranks);

/// Number of pairs of cores closer than tol in Frobenius distance.
/// Distinct samples can collide after a truncated decomposition, which
/// invalidates the distinctness assumption behind interpolation training;
/// callers surface a nonzero count as a warning.
std::size_t core_collisions(std::span<const Tensor> cores, double tol = 1e-12);

/// Inner-product duality: returns (inner(w, x), inner(w', x')) where the
/// primed cores are the projections of w and x through the shared factors.
/// When w and x both lie in the factors' span and the factors are
/// column-orthonormal the two values agree to rounding.
std::pair<double, double> duality_check(const Tensor& w, const Tensor& x,
                                        const std::vector<Matrix>& factors);

} // namespace telm
