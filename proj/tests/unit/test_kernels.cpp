#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "funcause/kernels.hpp"

using namespace funcause;

namespace {

constexpr double kPi = std::numbers::pi;

Curve random_smooth(const Grid& g, std::mt19937_64& rng) {
    std::normal_distribution<double> z;
    const double a = z(rng), b = z(rng), c = z(rng), s = 0.2 * z(rng);
    return Curve::from_function(g, [=](double t) { return a * std::sin(2 * kPi * (t + s)) + b * t * t + c * t; });
}

Dataset curve_dataset(std::size_t n, std::mt19937_64& rng) {
    const Grid g = Grid::uniform(6);
    const Grid gc = Grid::uniform(30);
    std::normal_distribution<double> z;
    std::vector<ObservationalSample> s;
    for (std::size_t i = 0; i < n; ++i) {
        Eigen::VectorXd v(2);
        v << z(rng), z(rng);
        ObservationalSample o{"s" + std::to_string(i), static_cast<double>(i % 2), v, random_smooth(gc, rng),
                              Curve::constant(g, z(rng))};
        s.push_back(std::move(o));
    }
    return Dataset(std::move(s));
}

}  // namespace

TEST_CASE("scalar kernels") {
    Eigen::VectorXd a(1), b(1);
    a << 0.0;
    b << 1.0;
    CHECK(se_kernel(a, a, 0.7) == 1.0);
    CHECK(se_kernel(a, b, 1.0) == doctest::Approx(0.6065306597).epsilon(1e-10));
    std::mt19937_64 rng(2);
    std::normal_distribution<double> z;
    for (int k = 0; k < 20; ++k) {
        Eigen::VectorXd p(3), q(3);
        p << z(rng), z(rng), z(rng);
        q << z(rng), z(rng), z(rng);
        CHECK(std::abs(se_kernel(p, q, 1.3) - se_kernel(q, p, 1.3)) <= 1e-15);
    }
    CHECK(binary_kernel(1, 1) == 1.0);
    CHECK(binary_kernel(0, 1) == 0.0);
    CHECK_THROWS_AS(KernelSpec::squared_exponential(0.0), DomainError);
}

TEST_CASE("binary Gram over (1, 0, 1)") {
    std::vector<ObservationalSample> s;
    const Grid g = Grid::uniform(3);
    for (double x : {1.0, 0.0, 1.0}) s.push_back({"u", x, Eigen::VectorXd(), std::nullopt, Curve::constant(g, 0)});
    const GramMatrix k = input_gram(Dataset(std::move(s)), {KernelSpec::binary(), KernelSpec::constant(), {}});
    Eigen::Matrix3d expected;
    expected << 1, 0, 1, 0, 1, 0, 1, 0, 1;
    CHECK(k.entries() == Eigen::MatrixXd(expected));
    CHECK(k.is_psd());
}

TEST_CASE("fisher-rao kernel") {
    const Grid g = Grid::uniform(65);
    const Curve lin = Curve::from_function(g, [](double t) { return t; });
    CHECK(fr_kernel(lin, lin, 2.0) == 1.0);
    CHECK(fr_kernel(lin, Curve::constant(g, 1.0), 1.0) == doctest::Approx(0.3678794412).epsilon(1e-6));

    std::mt19937_64 rng(8);
    for (int k = 0; k < 20; ++k) {
        const Curve a = random_smooth(g, rng), b = random_smooth(g, rng);
        const double v = fr_kernel(a, b, 0.5);
        CHECK(v > 0.0);
        CHECK(v < 1.0);
    }
    // A vertical shift leaves the SRSF unchanged, so the kernel is 1 exactly.
    const Curve a = random_smooth(g, rng);
    CHECK(fr_kernel(a, a + Curve::constant(g, 3.0), 0.5) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("fisher-rao Gram over random smooth curves is PSD") {
    const Grid g = Grid::uniform(64);
    for (int seed = 0; seed < 3; ++seed) {
        std::mt19937_64 rng(seed);
        std::vector<Curve> curves;
        for (int i = 0; i < 50; ++i) curves.push_back(random_smooth(g, rng));
        const double med = median_heuristic(curves);
        Eigen::MatrixXd k(50, 50);
        for (int i = 0; i < 50; ++i)
            for (int j = 0; j < 50; ++j) k(i, j) = fr_kernel(curves[i], curves[j], 1.0 / (2 * med * med));
        const GramMatrix gm(k, "fr");
        CHECK(gm.min_eigenvalue() >= -1e-8 * gm.max_eigenvalue());
    }
}

TEST_CASE("median heuristic") {
    Eigen::MatrixXd pts(3, 1);
    pts << 0, 1, 2;
    CHECK(median_heuristic(pts) == 1.0);
    CHECK(median_heuristic(Eigen::MatrixXd::Zero(4, 2)) == 1.0);
    Eigen::MatrixXd dup(5, 1);
    dup << 0, 0, 0, 0, 3;  // six zero distances, four of 3: median 0, mean positive 3
    CHECK(median_heuristic(dup) == 3.0);

    std::mt19937_64 rng(4);
    std::normal_distribution<double> z;
    for (int seed = 0; seed < 10; ++seed) {
        Eigen::MatrixXd p(100, 1);
        for (int i = 0; i < 100; ++i) p(i, 0) = z(rng);
        const double m = median_heuristic(p);
        CHECK(m >= 0.8);
        CHECK(m <= 1.6);
        CHECK(std::abs(median_heuristic(Eigen::MatrixXd(2.5 * p)) - 2.5 * m) <= 1e-10);
        Eigen::MatrixXd rev = p.colwise().reverse();
        CHECK(median_heuristic(rev) == m);
    }
}

TEST_CASE("input gram") {
    std::mt19937_64 rng(31);
    const Dataset ds = curve_dataset(25, rng);
    SUBCASE("binary x constant gives the block structure") {
        std::vector<ObservationalSample> s;
        const Grid g = Grid::uniform(3);
        for (double x : {1.0, 0.0}) s.push_back({"u", x, Eigen::VectorXd::Ones(1), std::nullopt, Curve::constant(g, 0)});
        const GramMatrix k = input_gram(Dataset(std::move(s)), {KernelSpec::binary(), KernelSpec::constant(), {}});
        CHECK(k.entries() == Eigen::MatrixXd::Identity(2, 2));
    }
    SUBCASE("products of PSD kernels stay PSD") {
        std::vector<Curve> cc;
        for (std::size_t i = 0; i < ds.size(); ++i) cc.push_back(*ds[i].covariate_curve);
        const double med = median_heuristic(cc);
        const InputKernel kern{KernelSpec::binary(), KernelSpec::squared_exponential(1.0),
                               KernelSpec::fisher_rao(1.0 / (2 * med * med))};
        const GramMatrix k = input_gram(ds, kern);
        CHECK(k.is_psd());
        CHECK(k.min_eigenvalue() >= -1e-8 * std::max(1.0, k.max_eigenvalue()));
        CHECK(k.entries().diagonal().isOnes(0.0));

        // Fisher-Rao factor agrees with fr_kernel on the stored curves.
        const InputKernel only_curves{KernelSpec::constant(), KernelSpec::constant(), kern.curves};
        const Eigen::MatrixXd kc = input_gram(ds, only_curves).entries();
        CHECK(std::abs(kc(3, 7) - fr_kernel(cc[3], cc[7], kern.curves->scale)) <= 1e-12);

        const InputKernel se_curves{KernelSpec::binary(), KernelSpec::constant(), KernelSpec::squared_exponential(5.0)};
        CHECK(input_gram(ds, se_curves).is_psd());
    }
    SUBCASE("one unit") {
        const KernelInputs in = KernelInputs::from_dataset(ds);
        KernelInputs one;
        one.treatment = in.treatment.head(1);
        one.covariates = in.covariates.topRows(1);
        const Eigen::MatrixXd k = cross_kernel(one, one, {KernelSpec::binary(), KernelSpec::squared_exponential(1), {}});
        CHECK(k == Eigen::MatrixXd::Ones(1, 1));
    }
}

TEST_CASE("output gram") {
    const GramMatrix k = output_gram(Grid::uniform(9), 0.3);
    CHECK(k.entries().diagonal().isOnes(0.0));
    for (Eigen::Index i = 0; i + 1 < 9; ++i)
        for (Eigen::Index j = 0; j + 1 < 9; ++j) CHECK(std::abs(k.entries()(i, j) - k.entries()(i + 1, j + 1)) <= 1e-15);
    const GramMatrix two = output_gram(Grid::uniform(2), 1.0);
    CHECK(two.entries()(0, 1) == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
    CHECK(k.is_psd());
    CHECK(default_output_lengthscale(Grid::uniform(3)) == 0.5);
}
