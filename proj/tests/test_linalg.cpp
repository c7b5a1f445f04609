// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "telm/linalg.hpp"
#include "test_util.hpp"

using namespace telm;

namespace {

// Moore-Penrose condition oracle: all four defining identities.
void check_moore_penrose(const Matrix& a, const Matrix& ap, double tol) {
    CHECK((a * ap * a - a).cwiseAbs().maxCoeff() < tol);
    CHECK((ap * a * ap - ap).cwiseAbs().maxCoeff() < tol);
    CHECK(((a * ap).transpose() - a * ap).cwiseAbs().maxCoeff() < tol);
    CHECK(((ap * a).transpose() - ap * a).cwiseAbs().maxCoeff() < tol);
}

} // namespace

TEST_SUITE("linalg") {

TEST_CASE("thin_svd on identity and diagonal matrices") {
    SvdResult id = thin_svd(Matrix::Identity(3, 3));
    CHECK(id.s.size() == 3);
    for (int i = 0; i < 3; ++i) CHECK(id.s(i) == doctest::Approx(1.0));

    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = 3.0;
    SvdResult ds = thin_svd(d);
    CHECK(ds.s(0) == doctest::Approx(3.0));
    CHECK(ds.s(1) == doctest::Approx(0.0));

    Matrix bad(1, 1);
    bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(thin_svd(bad), std::invalid_argument);
}

TEST_CASE("thin_svd reconstruction, ordering and orthonormality") {
    Rng rng(17);
    for (auto [m, n] : {std::pair<int, int>{5, 3}, {3, 5}, {4, 4}, {1, 6}, {7, 1}}) {
        Matrix a = testutil::random_matrix(m, n, rng);
        SvdResult svd = thin_svd(a);
        Matrix rec = svd.u * svd.s.asDiagonal() * svd.v.transpose();
        CHECK((rec - a).norm() < 1e-10 * (1.0 + a.norm()));
        for (Eigen::Index i = 0; i + 1 < svd.s.size(); ++i) {
            CHECK(svd.s(i) >= svd.s(i + 1));
            CHECK(svd.s(i + 1) >= 0.0);
        }
        Eigen::Index r = svd.u.cols();
        CHECK((svd.u.transpose() * svd.u - Matrix::Identity(r, r)).norm() < 1e-10);
        CHECK((svd.v.transpose() * svd.v - Matrix::Identity(r, r)).norm() < 1e-10);
    }
}

TEST_CASE("numeric_rank") {
    CHECK(numeric_rank(Matrix::Identity(3, 3)) == 3);
    CHECK(numeric_rank(Matrix::Zero(4, 2)) == 0);

    Rng rng(23);
    Vector u = testutil::random_matrix(6, 1, rng).col(0);
    Vector v = testutil::random_matrix(4, 1, rng).col(0);
    Matrix outer = u * v.transpose();
    CHECK(numeric_rank(outer) == 1);

    CHECK_THROWS_AS(numeric_rank(outer, -0.5), std::invalid_argument);
}

TEST_CASE("numeric_rank is invariant under permutations and orthogonal transforms") {
    Rng rng(29);
    for (int rep = 0; rep < 10; ++rep) {
        std::size_t m = 4 + rng.below(4), n = 3 + rng.below(4);
        std::size_t r = 1 + rng.below(std::min(m, n));
        Matrix a = testutil::random_matrix(m, r, rng) * testutil::random_matrix(r, n, rng);
        int base = numeric_rank(a);
        CHECK(base == static_cast<int>(r));

        std::vector<int> perm(m);
        std::iota(perm.begin(), perm.end(), 0);
        telm::shuffle(perm, rng);
        Matrix pa(m, n);
        for (std::size_t i = 0; i < m; ++i) pa.row(perm[i]) = a.row(i);
        CHECK(numeric_rank(pa) == base);

        Matrix q = testutil::random_orthonormal(m, m, rng);
        CHECK(numeric_rank(q * a) == base);
        Matrix qr = testutil::random_orthonormal(n, n, rng);
        CHECK(numeric_rank(a * qr) == base);
    }
}

TEST_CASE("pinv basics") {
    Matrix id = Matrix::Identity(3, 3);
    CHECK((pinv(id) - id).norm() < 1e-12);

    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = 2.0;
    Matrix dp = pinv(d);
    CHECK(dp(0, 0) == doctest::Approx(0.5));
    CHECK(dp(1, 1) == doctest::Approx(0.0));
    CHECK(dp(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("pinv satisfies the four Moore-Penrose conditions") {
    Rng rng(31);
    for (int rep = 0; rep < 25; ++rep) {
        std::size_t m = 2 + rng.below(6), n = 2 + rng.below(6);
        Matrix a;
        if (rep % 3 == 0) {
            std::size_t r = 1 + rng.below(std::min(m, n));
            a = testutil::random_matrix(m, r, rng) * testutil::random_matrix(r, n, rng);
        } else {
            a = testutil::random_matrix(m, n, rng);
        }
        a /= std::max(1.0, a.norm()); // sigma_1 = O(1) scaling
        check_moore_penrose(a, pinv(a), 1e-10);
    }
}

TEST_CASE("lstsq identity, normal equations, minimal norm") {
    Rng rng(37);
    Vector b = testutil::random_matrix(4, 1, rng).col(0);
    CHECK((lstsq(Matrix::Identity(4, 4), b) - b).norm() < 1e-12);

    // full column rank: matches the normal-equation solution
    Matrix a = testutil::random_matrix(8, 3, rng);
    Vector rhs = testutil::random_matrix(8, 1, rng).col(0);
    Vector x = lstsq(a, rhs);
    Vector xne = (a.transpose() * a).ldlt().solve(a.transpose() * rhs);
    CHECK((x - xne).norm() < 1e-9 * (1.0 + xne.norm()));

    // one-row system: minimal-norm point of the solution line x1 + x2 = 2.
    // Brute-force oracle: scan the line for the smallest-norm solution.
    Matrix row(1, 2);
    row << 1, 1;
    Vector two(1);
    two << 2;
    Vector sol = lstsq(row, two);
    double best_norm = std::numeric_limits<double>::infinity();
    double best_x1 = 0;
    for (double x1 = -3.0; x1 <= 5.0; x1 += 1e-4) {
        double x2 = 2.0 - x1;
        double nrm = std::hypot(x1, x2);
        if (nrm < best_norm) {
            best_norm = nrm;
            best_x1 = x1;
        }
    }
    CHECK(best_x1 == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(sol(0) == doctest::Approx(1.0));
    CHECK(sol(1) == doctest::Approx(1.0));
    CHECK(sol.norm() <= best_norm + 1e-9);

    Vector wrong_len = Vector::Zero(3);
    CHECK_THROWS_AS(lstsq(row, wrong_len), std::invalid_argument);
}

TEST_CASE("lstsq residual is minimal against random perturbations") {
    Rng rng(41);
    for (int rep = 0; rep < 5; ++rep) {
        std::size_t m = 5 + rng.below(4), n = 3 + rng.below(3);
        Matrix a = testutil::random_matrix(m, n, rng);
        if (rep % 2 == 0) a.col(n - 1) = a.col(0); // rank-deficient case
        Vector b = testutil::random_matrix(m, 1, rng).col(0);
        Vector x = lstsq(a, b);
        double res = (a * x - b).norm();
        for (int t = 0; t < 1000; ++t) {
            Vector y = x + 0.1 * testutil::random_matrix(n, 1, rng).col(0);
            CHECK(res <= (a * y - b).norm() + 1e-10);
        }
    }
}

} // TEST_SUITE
