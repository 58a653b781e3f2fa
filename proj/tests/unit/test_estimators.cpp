#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "funcause/estimators.hpp"
#include "funcause/frechet.hpp"

using namespace funcause;

namespace {

constexpr double kPi = std::numbers::pi;

Dataset build(const Eigen::MatrixXd& v, const Eigen::VectorXd& x, const Eigen::MatrixXd& y) {
    const Grid g = Grid::uniform(static_cast<std::size_t>(y.cols()));
    std::vector<ObservationalSample> s;
    for (Eigen::Index i = 0; i < y.rows(); ++i)
        s.push_back({"s" + std::to_string(i), x[i], v.row(i).transpose(), std::nullopt, Curve(g, y.row(i).transpose())});
    return Dataset(std::move(s));
}

Eigen::MatrixXd gaussian(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
    std::normal_distribution<double> z;
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = z(rng);
    return m;
}

Eigen::VectorXd coin_flips(Eigen::Index n, std::mt19937_64& rng) {
    std::bernoulli_distribution coin(0.5);
    Eigen::VectorXd x(n);
    for (Eigen::Index i = 0; i < n; ++i) x[i] = coin(rng) ? 1.0 : 0.0;
    x[0] = 1.0;
    x[1] = 0.0;
    return x;
}

// Dense solve of (K ⊗ K_Y + lambda I) vec(alpha) = vec(Y), with vec stacking rows of alpha.
Eigen::MatrixXd dense_alpha(const Eigen::MatrixXd& k, const Eigen::MatrixXd& ky, const Eigen::MatrixXd& y,
                            double lambda) {
    const Eigen::Index n = y.rows(), T = y.cols();
    Eigen::MatrixXd big(n * T, n * T);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) big.block(i * T, j * T, T, T) = k(i, j) * ky;
    big += lambda * Eigen::MatrixXd::Identity(n * T, n * T);
    Eigen::VectorXd rhs(n * T);
    for (Eigen::Index i = 0; i < n; ++i) rhs.segment(i * T, T) = y.row(i).transpose();
    const Eigen::VectorXd a = big.fullPivLu().solve(rhs);
    Eigen::MatrixXd alpha(n, T);
    for (Eigen::Index i = 0; i < n; ++i) alpha.row(i) = a.segment(i * T, T).transpose();
    return alpha;
}

Eigen::MatrixXd arm_mean(const Eigen::MatrixXd& y, const Eigen::VectorXd& x, double arm) {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(y.cols());
    double count = 0;
    for (Eigen::Index i = 0; i < y.rows(); ++i)
        if (x[i] == arm) {
            sum += y.row(i).transpose();
            ++count;
        }
    return sum / count;
}

const InputKernel kBinaryOnly{KernelSpec::binary(), KernelSpec::constant(), {}};

}  // namespace

TEST_CASE("kronecker solve matches the dense system") {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> nd(2, 8), td(2, 8);
    int checked = 0;
    while (checked < 20) {
        const int n = nd(rng), T = td(rng);
        if (n * T > 64) continue;
        const Eigen::MatrixXd v = gaussian(n, 2, rng);
        const Eigen::VectorXd x = coin_flips(n, rng);
        const Eigen::MatrixXd y = gaussian(n, T, rng);
        const Dataset ds = build(v, x, y);
        const InputKernel kern{KernelSpec::binary(), KernelSpec::squared_exponential(1.2), {}};
        const GramMatrix ky = output_gram(ds.outcome_grid(), 0.3);
        const double lambda = checked % 2 == 0 ? 0.1 : 1e-3;
        const KrrModel m = krr_fit(ds, kern, ky, lambda);
        const Eigen::MatrixXd ref = dense_alpha(input_gram(ds, kern).entries(), ky.entries(), y, lambda);
        CHECK((m.alpha() - ref).norm() <= 1e-8 * ref.norm());

        const KrrModel mi = krr_fit(ds, kern, std::nullopt, lambda);
        const Eigen::MatrixXd refi = dense_alpha(input_gram(ds, kern).entries(), Eigen::MatrixXd::Identity(T, T), y, lambda);
        CHECK((mi.alpha() - refi).norm() <= 1e-8 * refi.norm());
        ++checked;
    }
}

TEST_CASE("tiny kronecker example") {
    Eigen::MatrixXd v(2, 1), y(2, 2);
    v << 0.0, 1.0;
    y << 1.0, 2.0, -1.0, 0.5;
    Eigen::VectorXd x(2);
    x << 1.0, 0.0;
    const Dataset ds = build(v, x, y);
    const InputKernel kern{KernelSpec::constant(), KernelSpec::squared_exponential(1.0), {}};
    const GramMatrix ky = output_gram(ds.outcome_grid(), 1.0);
    const KrrModel m = krr_fit(ds, kern, ky, 0.5);
    const Eigen::MatrixXd ref = dense_alpha(input_gram(ds, kern).entries(), ky.entries(), y, 0.5);
    CHECK((m.alpha() - ref).norm() <= 1e-8 * ref.norm());
    // Training predictions are Y - lambda alpha.
    CHECK((m.fitted() - (y - 0.5 * m.alpha())).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("small lambda interpolates the training outcomes") {
    std::mt19937_64 rng(5);
    const Eigen::MatrixXd v = gaussian(5, 2, rng);
    const Eigen::MatrixXd y = gaussian(5, 4, rng);
    const Dataset ds = build(v, coin_flips(5, rng), y);
    const InputKernel kern{KernelSpec::binary(), KernelSpec::squared_exponential(1.0), {}};
    CHECK(input_gram(ds, kern).min_eigenvalue() > 1e-6);
    const KrrModel m = krr_fit(ds, kern, std::nullopt, 1e-10);
    CHECK((m.fitted() - y).cwiseAbs().maxCoeff() <= 1e-4);
    const KrrModel mo = krr_fit(ds, kern, output_gram(ds.outcome_grid(), 0.2), 1e-10);
    CHECK((mo.fitted() - y).cwiseAbs().maxCoeff() <= 1e-4);
}

TEST_CASE("large lambda shrinks predictions to zero") {
    std::mt19937_64 rng(6);
    const Dataset ds = build(gaussian(30, 2, rng), coin_flips(30, rng), gaussian(30, 6, rng));
    const InputKernel kern{KernelSpec::binary(), KernelSpec::squared_exponential(1.0), {}};
    const GramMatrix ky = output_gram(ds.outcome_grid(), 0.3);
    double prev = std::numeric_limits<double>::infinity();
    for (double lambda : {1e2, 1e4, 1e6}) {
        const KrrModel m = krr_fit(ds, kern, ky, lambda);
        const double norm = m.fitted().norm();
        const double bound = ds.outcome_matrix().norm() * input_gram(ds, kern).max_eigenvalue() * ky.max_eigenvalue() / lambda;
        CHECK(norm <= bound);
        CHECK(norm < prev);
        prev = norm;
    }
    CHECK(prev <= 1e-3);
}

TEST_CASE("binary kernel alone reproduces arm means") {
    std::mt19937_64 rng(7);
    const Eigen::VectorXd x = coin_flips(40, rng);
    const Eigen::MatrixXd y = gaussian(40, 7, rng);
    const Dataset ds = build(gaussian(40, 2, rng), x, y);
    const KrrModel m = krr_fit(ds, kBinaryOnly, std::nullopt, 1e-10);
    CHECK((potential_outcome(m, 1.0).values() - arm_mean(y, x, 1.0)).cwiseAbs().maxCoeff() <= 1e-4);
    CHECK((potential_outcome(m, 0.0).values() - arm_mean(y, x, 0.0)).cwiseAbs().maxCoeff() <= 1e-4);

    const DynamicEffect e = kernel_dynamic_effect(m, Metric::Euclidean);
    const std::vector<Curve> all = ds.outcomes();
    std::vector<Curve> c1, c0;
    for (Eigen::Index i = 0; i < x.size(); ++i) (x[i] == 1.0 ? c1 : c0).push_back(all[static_cast<std::size_t>(i)]);
    const DynamicEffect oracle =
        dynamic_effect(frechet_mean(c1, {}, Metric::Euclidean), frechet_mean(c0, {}, Metric::Euclidean), Metric::Euclidean);
    CHECK((e.delta.values() - oracle.delta.values()).cwiseAbs().maxCoeff() <= 1e-4);
    CHECK(std::abs(e.scalar_norm - oracle.scalar_norm) <= 1e-3);
}

TEST_CASE("constant outcomes are recovered") {
    std::mt19937_64 rng(8);
    const Eigen::MatrixXd y = Eigen::MatrixXd::Constant(30, 5, 2.5);
    const Dataset ds = build(gaussian(30, 2, rng), coin_flips(30, rng), y);
    const InputKernel kern{KernelSpec::binary(), KernelSpec::squared_exponential(10.0), {}};
    const KrrModel m = krr_fit(ds, kern, std::nullopt, 1e-8);
    for (double x : {0.0, 1.0}) CHECK((potential_outcome(m, x).values().array() - 2.5).abs().maxCoeff() <= 1e-3);
    CHECK(kernel_dynamic_effect(m, Metric::Euclidean).delta.values().cwiseAbs().maxCoeff() <= 1e-3);
}

TEST_CASE("averaged kernel row gives the same potential outcome") {
    std::mt19937_64 rng(9);
    const Dataset ds = build(gaussian(25, 3, rng), coin_flips(25, rng), gaussian(25, 6, rng));
    const InputKernel kern{KernelSpec::binary(), KernelSpec::squared_exponential(1.5), {}};
    const GramMatrix ky = output_gram(ds.outcome_grid(), 0.25);
    const KrrModel m = krr_fit(ds, kern, ky, 0.05);
    for (double x : {0.0, 1.0}) {
        const KernelInputs at = m.train().with_treatment(x);
        const Eigen::RowVectorXd avg_row = cross_kernel(at, m.train(), kern).colwise().mean();
        const Eigen::VectorXd direct = (avg_row * m.alpha() * ky.entries()).transpose();
        CHECK((potential_outcome(m, x).values() - direct).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("potential outcome ignores sample order") {
    std::mt19937_64 rng(10);
    const Eigen::MatrixXd v = gaussian(30, 2, rng);
    const Eigen::VectorXd x = coin_flips(30, rng);
    const Eigen::MatrixXd y = gaussian(30, 5, rng);
    std::vector<Eigen::Index> perm(30);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Eigen::MatrixXd vp(30, 2), yp(30, 5);
    Eigen::VectorXd xp(30);
    for (Eigen::Index i = 0; i < 30; ++i) {
        vp.row(i) = v.row(perm[static_cast<std::size_t>(i)]);
        yp.row(i) = y.row(perm[static_cast<std::size_t>(i)]);
        xp[i] = x[perm[static_cast<std::size_t>(i)]];
    }
    const InputKernel kern{KernelSpec::binary(), KernelSpec::squared_exponential(1.0), {}};
    const Dataset a = build(v, x, y), b = build(vp, xp, yp);
    const GramMatrix ky = output_gram(a.outcome_grid(), 0.3);
    const KrrModel ma = krr_fit(a, kern, ky, 0.1), mb = krr_fit(b, kern, ky, 0.1);
    for (double t : {0.0, 1.0})
        CHECK((potential_outcome(ma, t).values() - potential_outcome(mb, t).values()).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(std::abs(kernel_dynamic_effect(ma, Metric::Euclidean).scalar_norm -
                   kernel_dynamic_effect(mb, Metric::Euclidean).scalar_norm) <= 1e-12);
}

TEST_CASE("squared-exponential treatment kernel decays away from the data") {
    std::mt19937_64 rng(11);
    Eigen::VectorXd x(20);
    for (Eigen::Index i = 0; i < 20; ++i) x[i] = 0.1 * static_cast<double>(i);
    const Dataset ds = build(gaussian(20, 1, rng), x, gaussian(20, 4, rng).array() + 3.0);
    const InputKernel kern{KernelSpec::squared_exponential(0.3), KernelSpec::squared_exponential(1.0), {}};
    const KrrModel m = krr_fit(ds, kern, std::nullopt, 1e-2);
    CHECK(potential_outcome(m, 50.0).values().cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(potential_outcome(m, 1.0).values().cwiseAbs().minCoeff() > 1.0);
}

TEST_CASE("dose response") {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> z;
    const std::size_t n = 90, T = 6;
    Eigen::VectorXd x(n);
    Eigen::MatrixXd y(n, T);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = static_cast<double>(i % 3);
        for (std::size_t t = 0; t < T; ++t) y(i, t) = x[i] + 0.05 * z(rng);
    }
    const Dataset ds = build(Eigen::MatrixXd::Zero(n, 0), x, y);
    const InputKernel kern{KernelSpec::squared_exponential(0.5), KernelSpec::constant(), {}};
    const KrrModel m = krr_fit(ds, kern, std::nullopt, 1e-6);
    const DoseResponseCurve d = dose_response(m, {0.0, 1.0, 2.0, 2.0}, Metric::Euclidean);
    REQUIRE(d.effects.size() == 4);
    CHECK(d.effects[0] <= 0.05);
    CHECK(d.effects[1] == doctest::Approx(1.0).epsilon(0.05));
    CHECK(d.effects[2] == doctest::Approx(2.0).epsilon(0.05));
    CHECK(d.effects[1] > d.effects[0]);
    CHECK(d.effects[2] > d.effects[1]);
    CHECK(d.effects[3] == d.effects[2]);

    const Dataset zero = build(Eigen::MatrixXd::Zero(n, 0), x, Eigen::MatrixXd::Zero(n, T));
    for (double v : dose_response(krr_fit(zero, kern, std::nullopt, 1e-3), {0.0, 1.5}, Metric::Euclidean).effects)
        CHECK(v == 0.0);
    CHECK_THROWS_AS(dose_response(m, {1.0}, Metric::FisherRaoSphere), DomainError);
    // The SRSF of a constant curve is zero.
    CHECK(dose_response(m, {2.0}, Metric::FisherRaoSrsf).effects[0] <= 0.2);
}

TEST_CASE("krr input validation") {
    std::mt19937_64 rng(13);
    const Dataset ds = build(gaussian(6, 1, rng), coin_flips(6, rng), gaussian(6, 3, rng));
    CHECK_THROWS_AS(krr_fit(ds, kBinaryOnly, std::nullopt, 0.0), DomainError);
    CHECK_THROWS_AS(krr_fit(ds, kBinaryOnly, output_gram(Grid::uniform(4), 1.0), 1.0), DomainError);
}

TEST_CASE("heuristic kernels") {
    std::mt19937_64 rng(14);
    const Dataset ds = build(gaussian(20, 2, rng), coin_flips(20, rng), gaussian(20, 3, rng));
    const KernelInputs in = KernelInputs::from_dataset(ds);
    const InputKernel k = heuristic_kernel(in, 2.0);
    CHECK(k.treatment.family == KernelFamily::BinaryIndicator);
    CHECK(k.covariates.scale == doctest::Approx(2.0 * median_heuristic(in.covariates)).epsilon(1e-14));
    CHECK_FALSE(k.curves.has_value());
    KernelInputs cont = in;
    cont.treatment = Eigen::VectorXd::LinSpaced(20, 0.0, 1.9);
    CHECK(heuristic_kernel(cont, 1.0).treatment.family == KernelFamily::SquaredExponential);
    CHECK_THROWS_AS(heuristic_kernel(in, 0.0), DomainError);
}

TEST_CASE("holdout search") {
    std::mt19937_64 rng(15);
    std::normal_distribution<double> z;
    const std::size_t n = 80, T = 10;
    const Eigen::VectorXd x = coin_flips(n, rng);
    const Eigen::MatrixXd v = gaussian(n, 2, rng);
    Eigen::MatrixXd y(n, T);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t t = 0; t < T; ++t)
            y(i, t) = std::sin(2 * kPi * t / 9.0) + x[i] + 0.5 * v(i, 0) + 0.1 * z(rng);
    const Dataset ds = build(v, x, y);
    const KernelInputs in = KernelInputs::from_dataset(ds);
    KernelEstimatorOptions opt;
    const Hyperparameters h = select_hyperparameters(in, y, ds.outcome_grid(), opt);
    CHECK(std::isfinite(h.holdout_mse));
    CHECK(h.holdout_mse > 0.0);
    CHECK(std::find(opt.tuning.lambdas.begin(), opt.tuning.lambdas.end(), h.lambda) != opt.tuning.lambdas.end());
    CHECK(h.output_lengthscale.has_value());

    // Same seed, same choice; the search is deterministic.
    const Hyperparameters again = select_hyperparameters(in, y, ds.outcome_grid(), opt);
    CHECK(again.lambda == h.lambda);
    CHECK(again.holdout_mse == h.holdout_mse);

    // The chosen configuration is no worse than any single fixed configuration on the same split.
    KernelEstimatorOptions fixed = opt;
    fixed.tuning.lambdas = {10.0};
    fixed.tuning.bandwidth_multipliers = {1.0};
    fixed.tuning.output_multipliers = {1.0};
    CHECK(h.holdout_mse <= select_hyperparameters(in, y, ds.outcome_grid(), fixed).holdout_mse);

    opt.output = OutputMode::Identity;
    CHECK_FALSE(select_hyperparameters(in, y, ds.outcome_grid(), opt).output_lengthscale.has_value());
    opt.lambda = 0.3;
    const Hyperparameters f = select_hyperparameters(in, y, ds.outcome_grid(), opt);
    CHECK(f.lambda == 0.3);
    CHECK(f.holdout_mse == 0.0);

    const DynamicEffect e = kernel_dynamic_effect(fit_kernel_model(ds, KernelEstimatorOptions{}), Metric::Euclidean);
    CHECK((e.delta.values().array() - 1.0).abs().mean() <= 0.15);
}

namespace {

// Every curve is an affine image of one bump, so no warp improves any alignment.
Dataset phase_free_dataset(std::size_t n, std::mt19937_64& rng) {
    const Grid g = Grid::uniform(40);
    std::normal_distribution<double> z;
    std::bernoulli_distribution coin(0.5);
    std::vector<ObservationalSample> s;
    for (std::size_t i = 0; i < n; ++i) {
        const double h = 1.0 + 0.2 * z(rng), c = z(rng);
        const double x = i < 2 ? static_cast<double>(i) : (coin(rng) ? 1.0 : 0.0);
        Curve vc = Curve::from_function(g, [&](double t) { return c + h * std::exp(-std::pow(t - 0.5, 2) / 0.02); });
        Curve y = Curve::from_function(g, [&](double t) { return (h + 0.5 * x) * std::exp(-std::pow(t - 0.4, 2) / 0.01); });
        s.push_back({"u" + std::to_string(i), x, Eigen::VectorXd(), std::move(vc), std::move(y)});
    }
    return Dataset(std::move(s));
}

Dataset curve_dataset(std::size_t n, double shift_scale, std::mt19937_64& rng) {
    const Grid g = Grid::uniform(40);
    std::normal_distribution<double> z;
    std::bernoulli_distribution coin(0.5);
    std::vector<ObservationalSample> s;
    for (std::size_t i = 0; i < n; ++i) {
        const double h = 1.0 + 0.2 * z(rng);
        const double sv = shift_scale * z(rng), sy = shift_scale * z(rng);
        const double x = i < 2 ? static_cast<double>(i) : (coin(rng) ? 1.0 : 0.0);
        Curve vc = Curve::from_function(g, [&](double t) { return h * std::exp(-std::pow(t - 0.5 - sv, 2) / 0.02); });
        Curve y = Curve::from_function(
            g, [&](double t) { return h * std::exp(-std::pow(t - 0.4 - sy, 2) / 0.01) + x * std::sin(kPi * t); });
        s.push_back({"u" + std::to_string(i), x, Eigen::VectorXd(), std::move(vc), std::move(y)});
    }
    return Dataset(std::move(s));
}

}  // namespace

TEST_CASE("iterative srvf estimate") {
    std::mt19937_64 rng(16);
    IterativeOptions opt;
    opt.kernel.lambda = 1e-2;

    SUBCASE("phase-free data converges quickly with near-identity warps") {
        const Dataset ds = phase_free_dataset(30, rng);
        const IterativeResult r = iterative_srvf_estimate(ds, opt);
        CHECK(r.iterations <= 2);
        CHECK(r.converged);
        std::vector<Curve> v;
        for (const auto& s : ds.samples()) v.push_back(*s.covariate_curve);
        for (const auto& w : register_curves(v).warps) CHECK(w.max_deviation_cells() <= 2.0);
        for (const auto& w : register_curves(ds.outcomes()).warps) CHECK(w.max_deviation_cells() <= 2.0);
    }
    SUBCASE("huge tolerance stops after one pass that equals the registered operator fit") {
        const Dataset ds = curve_dataset(30, 0.03, rng);
        opt.tol = 1e300;
        const IterativeResult r = iterative_srvf_estimate(ds, opt);
        CHECK(r.iterations == 1);
        CHECK(r.converged);
        const KrrModel direct = fit_kernel_model(register_dataset(ds, true, true), opt.kernel);
        CHECK((r.model.alpha() - direct.alpha()).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("misaligned data terminates with a finite trace") {
        const Dataset ds = curve_dataset(30, 0.05, rng);
        opt.max_iter = 3;
        opt.tol = 0.0;
        const IterativeResult r = iterative_srvf_estimate(ds, opt);
        CHECK(r.iterations == 3);
        CHECK_FALSE(r.converged);
        CHECK(r.trace.size() == 3);
        for (double t : r.trace) CHECK(std::isfinite(t));
        CHECK(r.registered.size() == ds.size());
    }
    SUBCASE("without covariate curves it is one registration pass") {
        std::vector<ObservationalSample> s;
        const Dataset full = curve_dataset(20, 0.03, rng);
        for (const auto& u : full.samples()) s.push_back({u.id, u.treatment, Eigen::VectorXd(), std::nullopt, u.outcome});
        const IterativeResult r = iterative_srvf_estimate(Dataset(std::move(s)), opt);
        CHECK(r.iterations == 1);
        CHECK(r.trace.empty());
    }
}

TEST_CASE("registration run to its fixed point is idempotent") {
    std::mt19937_64 rng(17);
    const Dataset ds = curve_dataset(20, 0.05, rng);
    const Registration reg = register_curves(ds.outcomes(), {}, 10);
    CHECK(reg.passes <= 10);
    const Dataset once = register_dataset(ds, true, true, {}, 10);
    const Dataset twice = register_dataset(once, true, true, {}, 10);
    CHECK((once.outcome_matrix() - twice.outcome_matrix()).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK((once.covariate_curve_matrix() - twice.covariate_curve_matrix()).cwiseAbs().maxCoeff() <= 1e-6);
    // Composed warps reproduce the registered curves from the originals.
    const std::vector<Curve> orig = ds.outcomes();
    for (std::size_t i = 0; i < orig.size(); ++i)
        CHECK((warp_curve(orig[i], reg.warps[i]).values() - reg.curves[i].values()).cwiseAbs().maxCoeff() <= 0.05);
}
