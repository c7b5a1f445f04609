// SPDX-License-Identifier: Apache-2.0
#include "telm/tucker.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "telm/linalg.hpp"

namespace telm {

namespace {

void validate_ranks(const Shape& shape, const Shape& ranks) {
    if (ranks.size() != shape.size())
        throw std::invalid_argument("tucker: ranks list has " + std::to_string(ranks.size()) +
                                    " entries for an order-" + std::to_string(shape.size()) +
                                    " tensor");
    for (std::size_t k = 0; k < shape.size(); ++k) {
        if (ranks[k] < 1 || ranks[k] > shape[k])
            throw std::invalid_argument("tucker: rank " + std::to_string(ranks[k]) +
                                        " out of range [1, " + std::to_string(shape[k]) +
                                        "] for mode " + std::to_string(k));
    }
}

/// Appends an orthonormal complement so the basis has `want` columns. Needed
/// when a mode's matricization has fewer singular vectors than the requested
/// rank; the extra directions receive zero core energy, so any complement
/// gives the same reconstruction.
Matrix extend_basis(const Matrix& u, Eigen::Index want) {
    Matrix proj = Matrix::Identity(u.rows(), u.rows()) - u * u.transpose();
    Eigen::ColPivHouseholderQR<Matrix> qr(proj);
    Matrix q = qr.householderQ();
    Matrix out(u.rows(), want);
    out.leftCols(u.cols()) = u;
    out.rightCols(want - u.cols()) = q.leftCols(want - u.cols());
    return out;
}

/// Leading `want` left singular vectors of a, orthonormally completed when a
/// has fewer than `want` of them.
Matrix leading_left_singular(const Matrix& a, std::size_t want) {
    SvdResult svd = thin_svd(a);
    auto w = static_cast<Eigen::Index>(want);
    if (w <= svd.u.cols()) return svd.u.leftCols(w);
    return extend_basis(svd.u, w);
}

/// Contracts x with the transpose of every factor (the projected core).
Tensor project_core(const Tensor& x, const std::vector<Matrix>& factors) {
    Tensor core = x;
    for (std::size_t k = 0; k < factors.size(); ++k)
        core = mode_product(core, factors[k].transpose(), k);
    return core;
}

double diff_norm(const Tensor& a, const Tensor& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

} // namespace

Shape mode_ranks(const Tensor& x, double tol) {
    Shape ranks(x.order());
    for (std::size_t k = 0; k < x.order(); ++k)
        ranks[k] = static_cast<std::size_t>(numeric_rank(matricize(x, k), tol));
    return ranks;
}

Shape mode_ranks(const Tensor& x) {
    Shape ranks(x.order());
    for (std::size_t k = 0; k < x.order(); ++k)
        ranks[k] = static_cast<std::size_t>(numeric_rank(matricize(x, k)));
    return ranks;
}

TuckerFactors hosvd(const Tensor& x, const Shape& ranks) {
    validate_ranks(x.shape(), ranks);
    std::vector<Matrix> factors(x.order());
    for (std::size_t k = 0; k < x.order(); ++k)
        factors[k] = leading_left_singular(matricize(x, k), ranks[k]);
    return {project_core(x, factors), std::move(factors)};
}

Tensor reconstruct(const TuckerFactors& t) {
    if (t.factors.size() != t.core.order())
        throw std::invalid_argument("reconstruct: " + std::to_string(t.factors.size()) +
                                    " factors for an order-" + std::to_string(t.core.order()) +
                                    " core");
    Tensor out = t.core;
    for (std::size_t k = 0; k < t.factors.size(); ++k)
        out = mode_product(out, t.factors[k], k);
    return out;
}

double fit(const Tensor& x, const TuckerFactors& t) {
    const double nx = norm(x);
    Tensor xhat = reconstruct(t);
    if (!x.same_shape(xhat))
        throw std::invalid_argument("fit: reconstruction shape " +
                                    shape_to_string(xhat.shape()) + " does not match " +
                                    shape_to_string(x.shape()));
    if (nx == 0.0) return diff_norm(x, xhat) == 0.0 ? 1.0 : 0.0;
    return 1.0 - diff_norm(x, xhat) / nx;
}

TuckerFactors hooi(const Tensor& x, const Shape& ranks, std::size_t max_iters, double fit_tol,
                   HooiTrace* trace) {
    if (max_iters == 0) throw std::invalid_argument("hooi: max_iters must be >= 1");
    if (!(fit_tol > 0.0)) throw std::invalid_argument("hooi: fit_tol must be > 0");

    TuckerFactors best = hosvd(x, ranks);
    double best_fit = fit(x, best);
    if (trace) {
        trace->hosvd_fit = best_fit;
        trace->iteration_fits.clear();
    }

    std::vector<Matrix> factors = best.factors;
    for (std::size_t iter = 0; iter < max_iters; ++iter) {
        for (std::size_t k = 0; k < x.order(); ++k) {
            // Project x on every factor except mode k, then refresh B(k)
            // from that projection's mode-k matricization.
            Tensor y = x;
            for (std::size_t m = 0; m < x.order(); ++m)
                if (m != k) y = mode_product(y, factors[m].transpose(), m);
            factors[k] = leading_left_singular(matricize(y, k), ranks[k]);
        }
        TuckerFactors candidate{project_core(x, factors), factors};
        const double candidate_fit = fit(x, candidate);
        // A sweep cannot lower the fit in exact arithmetic; a drop is
        // rounding noise, so the previous iterate is kept and we stop.
        if (candidate_fit < best_fit) break;
        const double improvement = candidate_fit - best_fit;
        best = std::move(candidate);
        best_fit = candidate_fit;
        if (trace) trace->iteration_fits.push_back(best_fit);
        if (improvement < fit_tol) break;
    }
    return best;
}

SampleDecomposition decompose_samples(std::span<const Tensor> samples, const Shape& ranks) {
    if (samples.empty()) throw std::invalid_argument("decompose_samples: empty sample list");
    validate_ranks(samples[0].shape(), ranks);

    Tensor stacked = stack_last(samples);
    const std::size_t order = samples[0].order();
    std::vector<Matrix> factors(order);
    for (std::size_t k = 0; k < order; ++k)
        factors[k] = leading_left_singular(matricize(stacked, k), ranks[k]);

    Tensor core = stacked;
    for (std::size_t k = 0; k < order; ++k)
        core = mode_product(core, factors[k].transpose(), k);

    SampleDecomposition out;
    out.factors = std::move(factors);
    out.cores.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) out.cores.push_back(slice_last(core, i));
    return out;
}

std::size_t core_collisions(std::span<const Tensor> cores, double tol) {
    // |norm(a) - norm(b)| <= dist(a, b), so after sorting by norm only
    // neighbours within tol of each other in norm need a distance check.
    std::vector<std::size_t> order(cores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> norms(cores.size());
    for (std::size_t i = 0; i < cores.size(); ++i) norms[i] = norm(cores[i]);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return norms[a] < norms[b]; });

    std::size_t count = 0;
    for (std::size_t i = 0; i < order.size(); ++i) {
        for (std::size_t j = i + 1; j < order.size(); ++j) {
            if (norms[order[j]] - norms[order[i]] >= tol) break;
            if (diff_norm(cores[order[i]], cores[order[j]]) < tol) ++count;
        }
    }
    return count;
}

std::pair<double, double> duality_check(const Tensor& w, const Tensor& x,
                                        const std::vector<Matrix>& factors) {
    if (!w.same_shape(x))
        throw std::invalid_argument("duality_check: shapes " + shape_to_string(w.shape()) +
                                    " and " + shape_to_string(x.shape()) + " differ");
    if (factors.size() != w.order())
        throw std::invalid_argument("duality_check: " + std::to_string(factors.size()) +
                                    " factors for order-" + std::to_string(w.order()) +
                                    " tensors");
    const double lhs = inner(w, x);
    const double rhs = inner(project_core(w, factors), project_core(x, factors));
    return {lhs, rhs};
}

} // namespace telm
