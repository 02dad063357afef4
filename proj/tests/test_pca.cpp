#include <catch_amalgamated.hpp>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "dreams/pca.hpp"
#include "support.hpp"

using namespace dreams;

namespace {

// Random orthogonal matrix from the QR factorization of a Gaussian matrix.
DataMatrix random_rotation(Index m, std::uint64_t seed) {
    const Eigen::MatrixXd G = test::gaussian(m, m, seed);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
    return qr.householderQ() * Eigen::MatrixXd::Identity(m, m);
}

// Sine of the largest principal angle between the column spaces of two orthonormal bases.
double max_principal_angle(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
    const Eigen::MatrixXd residual = B - A * (A.transpose() * B);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(residual);
    return svd.singularValues().maxCoeff();
}

} // namespace

TEST_CASE("axis-aligned variance") {
    DataMatrix X(3, 2);
    X << 0, 0, 1, 0, 2, 0;
    const auto model = fit_pca(X, 1);
    CHECK(model.components(0, 0) == Catch::Approx(1.0).margin(1e-15));
    CHECK(model.components(1, 0) == Catch::Approx(0.0).margin(1e-15));
    const DataMatrix Y = project(model, X);
    CHECK(Y(0, 0) == Catch::Approx(-1.0));
    CHECK(Y(1, 0) == Catch::Approx(0.0).margin(1e-15));
    CHECK(Y(2, 0) == Catch::Approx(1.0));
}

TEST_CASE("rotated anisotropic data: subspace matches a brute-force covariance eigendecomposition") {
    const Index n = 20, m = 5;
    DataMatrix X = test::gaussian(n, m, 1);
    for (Index j = 0; j < m; ++j)
        X.col(j) *= static_cast<double>(m - j);
    X = X * random_rotation(m, 2).transpose();

    // Oracle: covariance assembled by explicit sums, general (non-symmetric) eigensolver.
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(m, m);
    const Eigen::RowVectorXd mean = X.colwise().mean();
    for (Index i = 0; i < n; ++i)
        for (Index a = 0; a < m; ++a)
            for (Index b = 0; b < m; ++b)
                cov(a, b) += (X(i, a) - mean(a)) * (X(i, b) - mean(b)) / (n - 1);
    Eigen::EigenSolver<Eigen::MatrixXd> es(cov);
    std::vector<std::pair<double, Index>> order;
    for (Index k = 0; k < m; ++k)
        order.emplace_back(es.eigenvalues()(k).real(), k);
    std::sort(order.rbegin(), order.rend());

    for (Index d = 1; d <= 3; ++d) {
        Eigen::MatrixXd oracle(m, d);
        for (Index k = 0; k < d; ++k)
            oracle.col(k) = es.eigenvectors().col(order[static_cast<std::size_t>(k)].second).real().normalized();
        const auto model = fit_pca(X, d);
        CHECK(max_principal_angle(oracle, model.components) < 1e-8);
        for (Index k = 0; k < d; ++k)
            CHECK(model.explained_variance(k) == Catch::Approx(order[static_cast<std::size_t>(k)].first).epsilon(1e-10));
    }
}

TEST_CASE("model invariants: orthonormal components, sorted variance, sign convention") {
    const DataMatrix X = test::gaussian(40, 6, 3) * random_rotation(6, 4);
    const auto model = fit_pca(X, 4);
    const Eigen::MatrixXd gram = model.components.transpose() * model.components;
    CHECK((gram - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-10);
    for (Index k = 0; k + 1 < 4; ++k)
        CHECK(model.explained_variance(k) >= model.explained_variance(k + 1));
    CHECK(model.explained_variance.minCoeff() >= 0.0);
    for (Index k = 0; k < 4; ++k) {
        Index arg = 0;
        model.components.col(k).cwiseAbs().maxCoeff(&arg);
        CHECK(model.components(arg, k) > 0);
    }
}

TEST_CASE("complete basis reconstructs the data and preserves total variance") {
    const DataMatrix X = test::gaussian(15, 4, 5, 3.0);
    const auto model = fit_pca(X, 4);
    const DataMatrix recon =
        (project(model, X) * model.components.transpose()).rowwise() + model.mean;
    CHECK((recon - X).cwiseAbs().maxCoeff() < 1e-8);
    const double total = (X.rowwise() - X.colwise().mean()).squaredNorm() / (X.rows() - 1);
    CHECK(model.explained_variance.sum() == Catch::Approx(total).epsilon(1e-10));
}

TEST_CASE("project: variances, mean rows, shapes, errors") {
    const DataMatrix X = test::gaussian(30, 5, 6);
    const auto model = fit_pca(X, 3);
    const DataMatrix Y = project(model, X);
    const RowVector<double> sd = column_std(Y);
    for (Index k = 0; k < 3; ++k)
        CHECK(sd(k) * sd(k) == Catch::Approx(model.explained_variance(k)).epsilon(1e-8));

    const DataMatrix mean_rows = model.mean.replicate(4, 1);
    CHECK(project(model, mean_rows).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(project(model, X.topRows(1)).rows() == 1);
    CHECK(project(model, X.topRows(1)).cols() == 3);
    CHECK_THROWS_AS(project(model, DataMatrix::Zero(2, 4)), ShapeError);
    CHECK_THROWS_AS(fit_pca(X, 0), ConfigError);
    CHECK_THROWS_AS(fit_pca(X, 6), ConfigError);
}

TEST_CASE("covariance and Gram solvers agree") {
    const DataMatrix X = test::gaussian(12, 30, 7);
    const auto cov = fit_pca(X, 5, PcaSolver::covariance);
    const auto gram = fit_pca(X, 5, PcaSolver::gram);
    CHECK((cov.components - gram.components).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((cov.explained_variance - gram.explained_variance).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((project(cov, X) - project(gram, X)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("rank-deficient input pads with an orthonormal completion") {
    DataMatrix X = test::gaussian(10, 2, 8) * test::gaussian(2, 5, 9); // rank 2
    const auto model = fit_pca(X, 4);
    CHECK(model.rank_deficient);
    CHECK(model.explained_variance(2) == 0.0);
    CHECK(model.explained_variance(3) == 0.0);
    const Eigen::MatrixXd gram = model.components.transpose() * model.components;
    CHECK((gram - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-10);
    CHECK_FALSE(fit_pca(X, 2).rank_deficient);
}

TEST_CASE("projection is invariant to rotating the input, up to column signs") {
    const DataMatrix X = test::gaussian(25, 4, 10) * DataMatrix(Eigen::Vector4d(4, 3, 2, 1).asDiagonal());
    const DataMatrix R = random_rotation(4, 11);
    const DataMatrix a = project(fit_pca(X, 2), X);
    const DataMatrix XR = X * R;
    const DataMatrix b = project(fit_pca(XR, 2), XR);
    for (Index k = 0; k < 2; ++k) {
        const double sign = a.col(k).dot(b.col(k)) >= 0 ? 1.0 : -1.0;
        CHECK((a.col(k) - sign * b.col(k)).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("fit_pca is deterministic") {
    const DataMatrix X = test::gaussian(50, 8, 12);
    const auto a = fit_pca(X, 3);
    const auto b = fit_pca(X, 3);
    CHECK(a.components == b.components);
    CHECK(a.explained_variance == b.explained_variance);
}

TEST_CASE("normalize_by_pc1_std") {
    const DataMatrix Y = test::gaussian(100, 2, 13, 4.0);
    const DataMatrix N = normalize_by_pc1_std(Y);
    // Oracle: explicit two-pass sample standard deviation.
    double mean = 0;
    for (Index i = 0; i < 100; ++i)
        mean += N(i, 0) / 100;
    double var = 0;
    for (Index i = 0; i < 100; ++i)
        var += (N(i, 0) - mean) * (N(i, 0) - mean) / 99;
    CHECK(std::sqrt(var) == Catch::Approx(1.0).margin(1e-12));

    CHECK((normalize_by_pc1_std(N) - N).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((normalize_by_pc1_std(DataMatrix(7.0 * Y)) - N).cwiseAbs().maxCoeff() < 1e-12);

    DataMatrix constant = Y;
    constant.col(0).setConstant(3.0);
    CHECK_THROWS_AS(normalize_by_pc1_std(constant), DegenerateInputError);
}

TEST_CASE("pca_reference is the normalized top-two projection") {
    const DataMatrix X = test::gaussian(30, 5, 14);
    const Embedding<double> ref = pca_reference(X);
    CHECK(ref.cols() == 2);
    CHECK(column_std(ref)(0) == Catch::Approx(1.0).margin(1e-12));
    CHECK((ref - normalize_by_pc1_std(project(fit_pca(X, 2), X))).cwiseAbs().maxCoeff() == 0.0);
}
