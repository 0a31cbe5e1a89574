#include "doctest.h"
#include "test_util.hpp"

#include "marom/align.hpp"
#include "marom/error.hpp"
#include "marom/rng.hpp"

using namespace marom;
using Eigen::Index;

namespace {

Eigen::MatrixXd centred(Eigen::MatrixXd z) { return z.colwise() - z.rowwise().mean(); }

Eigen::MatrixXd givens(Index k, Index a, Index b, double angle) {
    Eigen::MatrixXd g = Eigen::MatrixXd::Identity(k, k);
    g(a, a) = g(b, b) = std::cos(angle);
    g(a, b) = -std::sin(angle);
    g(b, a) = std::sin(angle);
    return g;
}

struct Constructed {
    Eigen::MatrixXd z, w, q0;
    Eigen::VectorXd t0;
};

/// w = (1/s0) Q0^T z + t0, so s0 Q0 (w - t0) = z exactly.
Constructed construct(Index k, Index n, double s0, std::uint64_t seed) {
    Constructed c;
    c.z = centred(testutil::random_matrix(k, n, seed));
    c.q0 = testutil::random_orthogonal(k, seed + 7);
    c.t0 = testutil::random_matrix(k, 1, seed + 13).col(0);
    c.w = ((c.q0.transpose() * c.z) / s0).colwise() + c.t0;
    return c;
}

}  // namespace

TEST_CASE("identity alignment") {
    auto z = centred(testutil::random_matrix(3, 6, 1));
    auto tr = fit_procrustes(z, z);
    CHECK(tr.scale == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(tr.translation.cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(testutil::max_abs(tr.rotation - Eigen::MatrixXd::Identity(3, 3)) <= 1e-10);
    CHECK(tr.residual <= 1e-12);
    CHECK(tr.det == doctest::Approx(1.0));
}

TEST_CASE("pure translation") {
    auto z = centred(testutil::random_matrix(4, 9, 2));
    Eigen::VectorXd t0(4);
    t0 << 1.0, -2.0, 0.5, 10.0;
    auto tr = fit_procrustes(z, z.colwise() + t0);
    CHECK((tr.translation - t0).norm() <= 1e-12);
    CHECK(tr.scale == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(testutil::max_abs(tr.rotation - Eigen::MatrixXd::Identity(4, 4)) <= 1e-10);
    CHECK(tr.residual <= 1e-10);
}

TEST_CASE("recover a constructed transform") {
    auto c = construct(5, 12, 2.5, 3);
    auto tr = fit_procrustes(c.z, c.w);
    CHECK(testutil::max_abs(apply_transform(tr, c.w) - c.z) <= 1e-10);
    CHECK(tr.residual <= 1e-10);
    CHECK(tr.scale == doctest::Approx(2.5).epsilon(1e-12));
    CHECK((tr.translation - c.t0).norm() <= 1e-10);
    CHECK(testutil::max_abs(tr.rotation - c.q0) <= 1e-10);
    CHECK(tr.det == doctest::Approx(c.q0.determinant()).epsilon(1e-10));
}

TEST_CASE("apply_transform") {
    ProcrustesTransform id{1.0, Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2), 0.0, 1.0};
    Eigen::MatrixXd w(2, 3);
    w << 1, 2, 3, -1, 0, 4;
    CHECK(apply_transform(id, w) == w);

    ProcrustesTransform scale2 = id;
    scale2.scale = 2.0;
    Eigen::MatrixXd col(2, 1);
    col << 1, -1;
    Eigen::MatrixXd expect(2, 1);
    expect << 2, -2;
    CHECK(apply_transform(scale2, col) == expect);

    CHECK_THROWS_AS(apply_transform(id, Eigen::MatrixXd::Zero(3, 1)), DataError);

    // noisy fit: recomputed objective equals the stored residual
    auto z = centred(testutil::random_matrix(4, 15, 5));
    auto wn = testutil::random_matrix(4, 15, 6);
    auto tr = fit_procrustes(z, wn);
    const double recomputed = (apply_transform(tr, wn) - z).norm();
    CHECK(recomputed == doctest::Approx(tr.residual).epsilon(1e-12));
    CHECK(procrustes_objective(z, wn, tr.scale, tr.translation, tr.rotation) ==
          doctest::Approx(tr.residual).epsilon(1e-12));
    const double sum_sq = (apply_transform(tr, wn) - z).colwise().squaredNorm().sum();
    CHECK(sum_sq == doctest::Approx(tr.residual * tr.residual).epsilon(1e-10));
}

TEST_CASE("fit errors") {
    auto z = centred(testutil::random_matrix(3, 5, 1));
    CHECK_THROWS_AS(fit_procrustes(z, Eigen::MatrixXd::Zero(3, 4)), DataError);
    CHECK_THROWS_AS(fit_procrustes(z.leftCols(1) * 0.0, z.leftCols(1)), DataError);
    Eigen::MatrixXd constant = Eigen::MatrixXd::Ones(3, 5);
    CHECK_THROWS_AS(fit_procrustes(z, constant), NumericalError);
    Eigen::MatrixXd off = z;
    off.row(0).array() += 1.0;
    CHECK_THROWS_AS(fit_procrustes(off, z), DataError);
}

TEST_CASE("fitted transform is locally optimal") {
    Rng rng(42);
    for (int c = 0; c < 10; ++c) {
        const Index k = 2 + static_cast<Index>(rng.below(6));
        const Index n = k + 2 + static_cast<Index>(rng.below(20));
        auto z = centred(testutil::random_matrix(k, n, 100 + static_cast<std::uint64_t>(c)));
        auto w = testutil::random_matrix(k, n, 200 + static_cast<std::uint64_t>(c));
        auto tr = fit_procrustes(z, w);
        for (int trial = 0; trial < 100; ++trial) {
            Eigen::MatrixXd r = Eigen::MatrixXd::Identity(k, k);
            for (int g = 0; g < 3; ++g) {
                const Index a = static_cast<Index>(rng.below(static_cast<std::uint64_t>(k)));
                const Index b = (a + 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(k - 1)))) % k;
                r = r * givens(k, a, b, rng.uniform(-1.0, 1.0) * 1e-2 / 3.0);
            }
            const double s = tr.scale * (1.0 + rng.uniform(-0.01, 0.01));
            Eigen::VectorXd t = tr.translation;
            for (Index i = 0; i < k; ++i) t(i) += 0.01 * rng.uniform(-1.0, 1.0) * (std::abs(t(i)) + 1e-3);
            const double obj = procrustes_objective(z, w, s, t, tr.rotation * r);
            CHECK(obj >= tr.residual - 1e-9);
        }
    }
}

TEST_CASE("rotation and scale equivariance") {
    auto z = centred(testutil::random_matrix(4, 20, 31));
    auto w = testutil::random_matrix(4, 20, 32);
    auto base = fit_procrustes(z, w);

    auto r = testutil::random_orthogonal(4, 33);
    auto rot = fit_procrustes(z, r * w);
    CHECK(rot.residual == doctest::Approx(base.residual).epsilon(1e-10));
    CHECK(testutil::max_abs(rot.rotation - base.rotation * r.transpose()) <= 1e-9);
    CHECK(rot.scale == doctest::Approx(base.scale).epsilon(1e-10));

    auto sc = fit_procrustes(z, 3.0 * w);
    CHECK(sc.scale == doctest::Approx(base.scale / 3.0).epsilon(1e-10));
    CHECK(sc.residual == doctest::Approx(base.residual).epsilon(1e-10));
}

TEST_CASE("reflections are allowed and recorded") {
    auto z = centred(testutil::random_matrix(3, 10, 8));
    Eigen::MatrixXd flip = Eigen::MatrixXd::Identity(3, 3);
    flip(2, 2) = -1.0;
    auto tr = fit_procrustes(z, flip * z);
    CHECK(tr.det == doctest::Approx(-1.0));
    CHECK(tr.residual <= 1e-10);
}

TEST_CASE("transform json round trip") {
    auto c = construct(3, 8, 1.7, 9);
    auto tr = fit_procrustes(c.z, c.w);
    auto j = to_json(tr);
    CHECK(j.contains("s"));
    CHECK(j.contains("detQ"));
    auto back = transform_from_json(j);
    CHECK(back.scale == tr.scale);
    CHECK(back.translation == tr.translation);
    CHECK(back.rotation == tr.rotation);
    CHECK(back.residual == tr.residual);
    CHECK(back.det == tr.det);
}
