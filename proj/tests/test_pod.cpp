#include "doctest.h"
#include "test_util.hpp"

#include "marom/bench.hpp"
#include "marom/error.hpp"
#include "marom/pod.hpp"

#include <vector>

using namespace marom;

namespace {

/// d x n data with centered sample covariance spectrum `lambda` and mean `mean`.
Eigen::MatrixXd data_with_spectrum(const std::vector<double>& lambda, Index d, Index n, std::uint64_t seed,
                                   const Eigen::VectorXd& mean) {
    const Index r = static_cast<Index>(lambda.size());
    Eigen::MatrixXd u = testutil::random_orthogonal(d, seed).leftCols(r);
    // orthonormal columns orthogonal to the ones vector, so the data stay centered
    Eigen::MatrixXd v0 = testutil::random_matrix(n, r, seed + 1);
    v0 = (v0.rowwise() - v0.colwise().mean()).eval();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(v0);
    Eigen::MatrixXd v = qr.householderQ() * Eigen::MatrixXd::Identity(n, r);
    Eigen::VectorXd s(r);
    for (Index j = 0; j < r; ++j) s(j) = std::sqrt(lambda[static_cast<std::size_t>(j)] * static_cast<double>(n));
    Eigen::MatrixXd x = u * s.asDiagonal() * v.transpose();
    return x.colwise() + mean;
}

}  // namespace

TEST_CASE("rank-one data") {
    Eigen::VectorXd v(4);
    v << 1, -2, 2, 0;
    Eigen::VectorXd base = Eigen::VectorXd::Constant(4, 3.0);
    Eigen::MatrixXd x(4, 5);
    const double c[] = {-1.0, 0.5, 2.0, 3.0, -4.5};
    for (Index j = 0; j < 5; ++j) x.col(j) = base + c[j] * v;
    auto basis = fit_pod(x, RicThreshold{0.999999});
    REQUIRE(basis.k() == 1);
    CHECK(basis.rank() == 1);
    CHECK(basis.achieved_ric() == doctest::Approx(1.0).epsilon(1e-15));
    Eigen::VectorXd unit = v / v.norm();
    CHECK(std::min((basis.modes().col(0) - unit).norm(), (basis.modes().col(0) + unit).norm()) <= 1e-12);
}

TEST_CASE("RIC threshold hit in real arithmetic picks the smaller rank") {
    const std::vector<double> spec{9.0, 0.9, 0.09, 0.01};
    CHECK(select_rank(spec, 0.999) == 3);
    CHECK(select_rank(spec, 0.99) == 2);
    CHECK(select_rank(spec, 0.9) == 1);
    CHECK(select_rank(spec, 1.0) == 4);
    CHECK(ric_at(spec, 3) == doctest::Approx(0.999).epsilon(1e-14));

    auto x = data_with_spectrum(spec, 12, 8, 5, Eigen::VectorXd::Zero(12));
    auto basis = fit_pod(x, RicThreshold{0.999});
    CHECK(basis.k() == 3);
    REQUIRE(basis.rank() == 4);
    for (Index j = 0; j < 4; ++j) CHECK(basis.eigenvalues()(j) == doctest::Approx(spec[static_cast<std::size_t>(j)]).epsilon(1e-10));

    CHECK_THROWS_AS(select_rank(spec, 0.0), UsageError);
    CHECK_THROWS_AS(select_rank(spec, 1.5), UsageError);
}

TEST_CASE("beam dataset reconstruction at the default threshold") {
    bench::BeamProblem pb;
    auto sd = bench::generate_scenario(pb, bench::Scenario::grid, bench::FieldKind::displacement, 50, 50, 2, 1);
    const Eigen::MatrixXd& x = sd.hi.snapshots.values();
    REQUIRE(x.rows() == 201);
    auto basis = fit_pod(x, RicThreshold{0.999999});
    CHECK(basis.achieved_ric() >= 0.999999 - 1e-12);
    Eigen::MatrixXd rec = reconstruct(basis, project(basis, x));
    const double rel = (rec - x).norm() / x.norm();
    CHECK(rel <= 1e-3);
    // the centred residual is bounded by the discarded energy fraction
    const double centred = (x.colwise() - basis.mean()).norm();
    CHECK((rec - x).norm() <= std::sqrt(1.0 - basis.achieved_ric()) * centred * (1 + 1e-8) + 1e-12);
}

TEST_CASE("project") {
    auto x = testutil::random_matrix(30, 10, 11);
    auto basis = fit_pod(x, FixedRank{4});
    CHECK(project(basis, basis.mean()).cwiseAbs().maxCoeff() <= 1e-12);

    Eigen::VectorXd xv = basis.mean() + 2.0 * basis.modes().col(0);
    Eigen::VectorXd z = project(basis, xv);
    CHECK(z(0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(z.tail(3).cwiseAbs().maxCoeff() <= 1e-12);

    Eigen::MatrixXd brute = basis.modes().transpose() * (x.colwise() - x.rowwise().mean());
    CHECK(testutil::max_abs(project(basis, x) - brute) <= 1e-12);

    CHECK_THROWS_AS(project(basis, Eigen::MatrixXd::Zero(29, 2)), DataError);
}

TEST_CASE("reconstruct") {
    auto x = testutil::random_matrix(20, 8, 12);
    auto full = fit_pod(x, RicThreshold{1.0});
    CHECK(full.k() == 7);  // centering removes one dimension
    Eigen::MatrixXd zero = reconstruct(full, Eigen::MatrixXd::Zero(7, 3));
    for (Index j = 0; j < 3; ++j) CHECK((zero.col(j) - full.mean()).norm() == 0.0);
    CHECK((reconstruct(full, project(full, x)) - x).norm() <= 1e-10 * x.norm());

    auto trunc = fit_pod(x, FixedRank{3});
    const double resid = (reconstruct(trunc, project(trunc, x)) - x).squaredNorm();
    const double discarded = trunc.eigenvalues().tail(trunc.rank() - 3).sum();
    CHECK(resid == doctest::Approx(8.0 * discarded).epsilon(1e-8));

    CHECK_THROWS_AS(reconstruct(trunc, Eigen::MatrixXd::Zero(4, 1)), DataError);
}

TEST_CASE("fit_pod errors") {
    CHECK_THROWS_AS(fit_pod(Eigen::MatrixXd::Ones(5, 1), RicThreshold{}), DataError);
    CHECK_THROWS_AS(fit_pod(Eigen::MatrixXd::Ones(5, 4), RicThreshold{}), NumericalError);
    CHECK_THROWS_AS(fit_pod(Eigen::MatrixXd::Ones(5, 4), FixedRank{1}), NumericalError);
    auto x = testutil::random_matrix(6, 4, 1);
    try {
        fit_pod(x, FixedRank{5});
        FAIL("expected rank error");
    } catch (const NumericalError& e) {
        const std::string msg = e.what();
        CHECK(msg.find('5') != std::string::npos);
        CHECK(msg.find('3') != std::string::npos);
    }
    CHECK_THROWS_AS(fit_pod(x, FixedRank{0}), UsageError);
}

TEST_CASE("POD properties over random 201x50 matrices") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        CAPTURE(seed);
        // decaying spectrum so truncation is meaningful
        Eigen::MatrixXd x = testutil::random_matrix(201, 50, 1000 + seed);
        for (Index j = 0; j < 50; ++j) x.col(j) *= 1.0 / (1.0 + 0.3 * static_cast<double>(j));
        x = testutil::random_orthogonal(201, seed) * x;
        x.colwise() += Eigen::VectorXd::LinSpaced(201, -1.0, 4.0);

        auto basis = fit_pod(x, RicThreshold{0.99});
        const Index k = basis.k();
        Eigen::MatrixXd gram = basis.modes().transpose() * basis.modes();
        CHECK(testutil::max_abs(gram - Eigen::MatrixXd::Identity(k, k)) <= 1e-10);

        const Eigen::MatrixXd xc = x.colwise() - x.rowwise().mean();
        CHECK(basis.eigenvalues().sum() == doctest::Approx(xc.squaredNorm() / 50.0).epsilon(1e-10));
        for (Index j = 1; j < basis.rank(); ++j) CHECK(basis.eigenvalues()(j) <= basis.eigenvalues()(j - 1));

        std::vector<double> spec(basis.eigenvalues().data(), basis.eigenvalues().data() + basis.rank());
        double prev = 0.0;
        for (Index kk = 1; kk <= basis.rank(); ++kk) {
            const double r = ric_at(spec, kk);
            CHECK(r >= prev);
            prev = r;
        }
        CHECK(basis.achieved_ric() == doctest::Approx(ric_at(spec, k)).epsilon(1e-12));

        const double resid = (reconstruct(basis, project(basis, x)) - x).squaredNorm();
        CHECK(resid == doctest::Approx(50.0 * basis.eigenvalues().tail(basis.rank() - k).sum()).epsilon(1e-8));

        Eigen::MatrixXd z = testutil::random_matrix(k, 7, seed);
        CHECK(testutil::max_abs(project(basis, reconstruct(basis, z)) - z) <= 1e-12 * (1.0 + testutil::max_abs(z)) * 10);
    }
}

TEST_CASE("sign convention is deterministic") {
    auto x = testutil::random_matrix(40, 12, 3);
    auto a = fit_pod(x, FixedRank{5});
    auto b = fit_pod(x, FixedRank{5});
    CHECK(a.modes() == b.modes());
    for (Index j = 0; j < 5; ++j) {
        Index imax = 0;
        a.modes().col(j).cwiseAbs().maxCoeff(&imax);
        CHECK(a.modes()(imax, j) > 0.0);
    }
}

TEST_CASE("basis save and load") {
    auto dir = testutil::scratch_dir("pod_io");
    auto x = testutil::random_matrix(25, 9, 4);
    auto basis = fit_pod(x, FixedRank{3});
    save_basis(basis, dir, "b");
    auto back = load_basis(dir, "b");
    CHECK(back.modes() == basis.modes());
    CHECK(back.mean() == basis.mean());
    CHECK(back.eigenvalues() == basis.eigenvalues());
    CHECK(back.achieved_ric() == basis.achieved_ric());
    auto h = basis_header(basis);
    CHECK(h["k"] == 3);
    CHECK(h["d"] == 25);
}
