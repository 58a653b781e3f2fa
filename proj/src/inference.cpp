#include "funcause/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "funcause/parallel.hpp"
#include "funcause/random.hpp"

namespace funcause {

namespace {

constexpr std::size_t kBlockSize = 10000;
constexpr double kNullQuantile = 0.99;

void check_level(double level) {
    if (!(level > 0.0 && level < 1.0)) throw DomainError("confidence level must lie in (0, 1)");
}

/// Modified Lentz evaluation of the continued fraction for I_x(a, b).
double beta_fraction(double a, double b, double x) {
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-16;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 10000; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < eps) return h;
    }
    throw NumericalError("incomplete beta continued fraction did not converge");
}

double sample_variance(std::span<const double> v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return ss / static_cast<double>(v.size() - 1);
}

double mean_of(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

}  // namespace

std::string_view to_string(CiRegime r) { return r == CiRegime::ZeroNorm ? "zero-norm" : "nonzero-norm"; }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("normal quantile needs p in (0, 1)");
    if (p == 0.5) return 0.0;
    const double q = std::min(p, 1.0 - p);
    const double t = std::sqrt(-2.0 * std::log(q));
    double x = t - (2.515517 + 0.802853 * t + 0.010328 * t * t) /
                       (1.0 + 1.432788 * t + 0.189269 * t * t + 0.001308 * t * t * t);
    // Newton steps on the upper tail erfc(x / sqrt 2) / 2 = q.
    for (int i = 0; i < 50; ++i) {
        const double f = 0.5 * std::erfc(x / std::numbers::sqrt2) - q;
        const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
        const double step = f / pdf;
        x += step;
        if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(x))) break;
    }
    return p < 0.5 ? -x : x;
}

double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0 && b > 0.0)) throw DomainError("incomplete beta needs positive parameters");
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("incomplete beta needs x in [0, 1]");
    if (x == 0.0 || x == 1.0) return x;
    const double log_front =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_fraction(a, b, x) / a;
    return 1.0 - front * beta_fraction(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double df) {
    if (!(df > 0.0)) throw DomainError("degrees of freedom must be positive");
    if (std::isnan(t)) throw DomainError("t statistic is NaN");
    if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
    const double tail = 0.5 * incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
    return t > 0 ? 1.0 - tail : tail;
}

GeneralizedChiSquare::GeneralizedChiSquare(std::vector<double> eigenvalues, std::size_t draws, std::uint64_t seed,
                                           double floor)
    : eigenvalues_(std::move(eigenvalues)) {
    if (eigenvalues_.empty()) throw DomainError("generalized chi-square needs eigenvalues");
    if (draws < 2) throw DomainError("generalized chi-square needs at least two draws");
    for (double& l : eigenvalues_) {
        if (!std::isfinite(l)) throw NumericalError("non-finite eigenvalue");
        l = std::max(l, floor);
    }
    sorted_.assign(draws, 0.0);
    const std::size_t blocks = (draws + kBlockSize - 1) / kBlockSize;
    parallel_for(blocks, [&](std::size_t b) {
        Rng rng(seed, b);
        const std::size_t end = std::min(draws, (b + 1) * kBlockSize);
        for (std::size_t i = b * kBlockSize; i < end; ++i) {
            double s = 0.0;
            for (double l : eigenvalues_) {
                const double z = rng.normal();
                s += l * z * z;
            }
            sorted_[i] = s;
        }
    });
    std::sort(sorted_.begin(), sorted_.end());
}

double GeneralizedChiSquare::quantile(double p) const {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("quantile level must lie in [0, 1]");
    const double pos = p * static_cast<double>(sorted_.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted_.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted_[lo] + frac * (sorted_[hi] - sorted_[lo]);
}

Eigen::MatrixXd effect_covariance(const Dataset& ds) {
    if (!ds.is_binary_treatment()) throw DomainError("effect covariance needs a binary treatment");
    const Eigen::MatrixXd y = ds.outcome_matrix();
    const Eigen::VectorXd x = ds.treatments();
    const auto n = static_cast<double>(ds.size());
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(y.cols(), y.cols());
    for (double arm : {0.0, 1.0}) {
        std::vector<Eigen::Index> rows;
        for (Eigen::Index i = 0; i < x.size(); ++i)
            if (x[i] == arm) rows.push_back(i);
        if (rows.size() < 2) throw ArmEmptyError("each arm needs at least two units");
        const Eigen::MatrixXd sub = y(rows, Eigen::all);
        const Eigen::MatrixXd centered = sub.rowwise() - sub.colwise().mean();
        const auto m = static_cast<double>(rows.size());
        k += (n / m) * (centered.transpose() * centered) / (m - 1.0);
    }
    return k;
}

PointwiseCI pointwise_ci(const Curve& delta_hat, const Eigen::VectorXd& k_diag, std::size_t n, double level) {
    check_level(level);
    if (n == 0) throw DomainError("sample size must be positive");
    if (k_diag.size() != static_cast<Eigen::Index>(delta_hat.size()))
        throw DomainError("variance vector and curve lengths differ");
    if ((k_diag.array() < 0.0).any()) throw DomainError("variances must be nonnegative");
    const double z = normal_quantile(0.5 + 0.5 * level);
    const Eigen::VectorXd half = z * (k_diag / static_cast<double>(n)).cwiseSqrt();
    return {Curve(delta_hat.grid(), delta_hat.values() - half), Curve(delta_hat.grid(), delta_hat.values() + half)};
}

EffectCI effect_ci(const Dataset& ds, const Curve& delta_hat, double level) {
    check_level(level);
    if (ds.size() < 10) throw DomainError("confidence intervals need at least 10 units");
    if (!(delta_hat.grid() == ds.outcome_grid())) throw DomainError("effect curve and outcome grids differ");
    const auto n = static_cast<double>(ds.size());
    const Eigen::MatrixXd k = effect_covariance(ds);
    const Eigen::VectorXd w = ds.outcome_grid().quadrature_weights();
    const Eigen::VectorXd& d = delta_hat.values();

    EffectCI ci;
    ci.level = level;
    const double norm2 = d.dot(w.cwiseProduct(d));
    ci.estimate = std::sqrt(norm2);
    ci.pointwise = pointwise_ci(delta_hat, k.diagonal(), ds.size(), level);

    // Null law of n ||delta_hat||^2 under the quadrature inner product.
    const Eigen::VectorXd sw = w.cwiseSqrt();
    const Eigen::MatrixXd kw = sw.asDiagonal() * k * sw.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(kw, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) throw NumericalError("covariance eigendecomposition failed");
    const Eigen::VectorXd ev = eig.eigenvalues();
    const GeneralizedChiSquare null_law(std::vector<double>(ev.data(), ev.data() + ev.size()));

    if (norm2 > 0.0) {
        const Eigen::VectorXd grad = w.cwiseProduct(d);
        ci.sigma = std::sqrt(std::max(0.0, grad.dot(k * grad)) / norm2);
    }
    const bool nonzero = norm2 > 0.0 && ci.estimate > 2.0 * ci.sigma / std::sqrt(n) &&
                         n * norm2 > null_law.quantile(kNullQuantile);
    const double alpha = 1.0 - level;
    if (nonzero) {
        const double half = normal_quantile(1.0 - 0.5 * alpha) * ci.sigma / std::sqrt(n);
        ci.regime = CiRegime::NonzeroNorm;
        ci.lower = std::max(0.0, ci.estimate - half);
        ci.upper = ci.estimate + half;
    } else {
        ci.regime = CiRegime::ZeroNorm;
        ci.lower = std::sqrt(null_law.quantile(0.5 * alpha) / n);
        ci.upper = std::sqrt(null_law.quantile(1.0 - 0.5 * alpha) / n);
    }
    return ci;
}

WelchResult welch_t_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2) throw DomainError("Welch test needs at least two values per sample");
    for (double v : a)
        if (!std::isfinite(v)) throw DomainError("Welch test needs finite values");
    for (double v : b)
        if (!std::isfinite(v)) throw DomainError("Welch test needs finite values");
    const auto na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    const double va = sample_variance(a) / na, vb = sample_variance(b) / nb;
    const double diff = mean_of(a) - mean_of(b);
    WelchResult r;
    const double se2 = va + vb;
    if (se2 == 0.0) {
        if (diff == 0.0) return {0.0, na + nb - 2.0, 1.0};
        return {diff > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity(),
                na + nb - 2.0, 0.0};
    }
    r.t = diff / std::sqrt(se2);
    r.df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    r.p = 2.0 * student_t_cdf(-std::abs(r.t), r.df);
    return r;
}

}  // namespace funcause
