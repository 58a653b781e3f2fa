#include "funcause/classical.hpp"

#include <algorithm>
#include <cmath>

namespace funcause {

namespace {

double logistic(double z) { return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

// Log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

Eigen::MatrixXd design(const Eigen::MatrixXd& v) {
    Eigen::MatrixXd z(v.rows(), v.cols() + 1);
    z.col(0).setOnes();
    z.rightCols(v.cols()) = v;
    return z;
}

void require_binary(const Dataset& ds) {
    if (!ds.is_binary_treatment()) throw DomainError("estimator needs a binary treatment");
}

double penalized_loss(const Eigen::MatrixXd& z, const Eigen::VectorXd& x, const Eigen::VectorXd& beta, double l2) {
    const Eigen::VectorXd eta = z * beta;
    double loss = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) loss += softplus(eta[i]) - x[i] * eta[i];
    return loss / static_cast<double>(eta.size()) + 0.5 * l2 * beta.tail(beta.size() - 1).squaredNorm();
}

}  // namespace

double PropensityModel::predict(const Eigen::VectorXd& v) const {
    if (v.size() + 1 != coefficients.size()) throw DomainError("covariate dimension does not match propensity model");
    const double p = logistic(coefficients[0] + coefficients.tail(v.size()).dot(v));
    return std::clamp(p, clip_eps, 1.0 - clip_eps);
}

Eigen::VectorXd PropensityModel::predict_rows(const Eigen::MatrixXd& v) const {
    Eigen::VectorXd p(v.rows());
    for (Eigen::Index i = 0; i < v.rows(); ++i) p[i] = predict(Eigen::VectorXd(v.row(i).transpose()));
    return p;
}

PropensityModel PropensityModel::constant(double p, std::size_t d, double clip_eps) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("constant propensity must lie in (0, 1)");
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d) + 1);
    beta[0] = std::log(p / (1.0 - p));
    return PropensityModel{beta, clip_eps};
}

PropensityModel fit_propensity(const Dataset& ds, double l2, double clip_eps) {
    require_binary(ds);
    if (!(clip_eps > 0.0 && clip_eps < 0.5)) throw DomainError("clip_eps must lie in (0, 0.5)");
    if (l2 < 0.0) throw DomainError("l2 must be nonnegative");
    const Eigen::MatrixXd z = design(ds.covariate_matrix());
    const Eigen::VectorXd x = ds.treatments();
    const auto n = static_cast<double>(z.rows());
    const Eigen::Index p = z.cols();

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    const double frac = std::clamp(x.mean(), 1e-6, 1.0 - 1e-6);
    beta[0] = std::log(frac / (1.0 - frac));
    Eigen::VectorXd pen = Eigen::VectorXd::Constant(p, l2);
    pen[0] = 0.0;

    double loss = penalized_loss(z, x, beta, l2);
    for (int iter = 0; iter < 100; ++iter) {
        const Eigen::VectorXd eta = z * beta;
        const Eigen::VectorXd mu = eta.unaryExpr(&logistic);
        const Eigen::VectorXd wts = mu.cwiseProduct((1.0 - mu.array()).matrix()).cwiseMax(1e-12);
        Eigen::VectorXd grad = z.transpose() * (mu - x) / n + pen.cwiseProduct(beta);
        Eigen::MatrixXd hess = z.transpose() * wts.asDiagonal() * z / n;
        hess.diagonal() += pen + Eigen::VectorXd::Constant(p, 1e-12);
        const Eigen::VectorXd step = hess.ldlt().solve(grad);
        double t = 1.0;
        Eigen::VectorXd next = beta - step;
        double next_loss = penalized_loss(z, x, next, l2);
        while (next_loss > loss && t > 1e-10) {
            t *= 0.5;
            next = beta - t * step;
            next_loss = penalized_loss(z, x, next, l2);
        }
        if (next_loss > loss) break;
        const double change = (next - beta).cwiseAbs().maxCoeff();
        beta = next;
        loss = next_loss;
        if (change < 1e-8) break;
    }
    return PropensityModel{beta, clip_eps};
}

Eigen::MatrixXd OutcomeModel::predict(int arm, const Eigen::MatrixXd& v) const {
    const Eigen::MatrixXd& coef = arm == 1 ? treated : control;
    if (v.cols() + 1 != coef.rows()) throw DomainError("covariate dimension does not match outcome model");
    return design(v) * coef;
}

namespace {

Eigen::MatrixXd ridge_fit(const Eigen::MatrixXd& v, const Eigen::MatrixXd& y, double ridge) {
    const Eigen::Index d = v.cols();
    Eigen::MatrixXd coef(d + 1, y.cols());
    const Eigen::RowVectorXd vbar = v.colwise().mean();
    const Eigen::RowVectorXd ybar = y.colwise().mean();
    if (d == 0) {
        coef.row(0) = ybar;
        return coef;
    }
    const Eigen::MatrixXd vc = v.rowwise() - vbar;
    const Eigen::MatrixXd yc = y.rowwise() - ybar;
    Eigen::MatrixXd gram = vc.transpose() * vc;
    gram.diagonal().array() += ridge;
    const Eigen::MatrixXd slopes = gram.ldlt().solve(vc.transpose() * yc);
    coef.bottomRows(d) = slopes;
    coef.row(0) = ybar - vbar * slopes;
    return coef;
}

}  // namespace

OutcomeModel fit_outcome_models(const Dataset& ds, double ridge) {
    require_binary(ds);
    if (ridge < 0.0) throw DomainError("ridge must be nonnegative");
    const Eigen::MatrixXd v = ds.covariate_matrix();
    const Eigen::MatrixXd y = ds.outcome_matrix();
    OutcomeModel om;
    om.ridge = ridge;
    for (int arm : {0, 1}) {
        const auto idx = ds.arm_indices(arm);
        if (idx.empty()) throw ArmEmptyError("treatment arm " + std::to_string(arm) + " is empty");
        const auto rows = static_cast<Eigen::Index>(idx.size());
        Eigen::MatrixXd va(rows, v.cols());
        Eigen::MatrixXd ya(rows, y.cols());
        for (Eigen::Index r = 0; r < rows; ++r) {
            va.row(r) = v.row(static_cast<Eigen::Index>(idx[static_cast<std::size_t>(r)]));
            ya.row(r) = y.row(static_cast<Eigen::Index>(idx[static_cast<std::size_t>(r)]));
        }
        (arm == 1 ? om.treated : om.control) = ridge_fit(va, ya, ridge);
    }
    return om;
}

DynamicEffect ipw_effect(const Dataset& ds, const PropensityModel& pm) {
    require_binary(ds);
    const Eigen::VectorXd pi = pm.predict_rows(ds.covariate_matrix());
    const Eigen::VectorXd x = ds.treatments();
    const Eigen::MatrixXd y = ds.outcome_matrix();
    Eigen::VectorXd delta = Eigen::VectorXd::Zero(y.cols());
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
        const double coef = x[i] == 1.0 ? 1.0 / pi[i] : -1.0 / (1.0 - pi[i]);
        delta += coef * y.row(i).transpose();
    }
    delta /= static_cast<double>(y.rows());
    Curve d(ds.outcome_grid(), std::move(delta));
    const double norm = l2_norm(d);
    return DynamicEffect{std::move(d), norm, Metric::Euclidean};
}

DynamicEffect dr_effect(const Dataset& ds, const PropensityModel& pm, const OutcomeModel& om) {
    require_binary(ds);
    const Eigen::MatrixXd v = ds.covariate_matrix();
    const Eigen::VectorXd pi = pm.predict_rows(v);
    const Eigen::VectorXd x = ds.treatments();
    const Eigen::MatrixXd y = ds.outcome_matrix();
    const Eigen::MatrixXd m1 = om.predict(1, v);
    const Eigen::MatrixXd m0 = om.predict(0, v);
    if (m1.cols() != y.cols()) throw DomainError("outcome model grid does not match dataset");
    Eigen::VectorXd delta = Eigen::VectorXd::Zero(y.cols());
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
        Eigen::VectorXd term = (m1.row(i) - m0.row(i)).transpose();
        if (x[i] == 1.0) {
            term += (y.row(i) - m1.row(i)).transpose() / pi[i];
        } else {
            term -= (y.row(i) - m0.row(i)).transpose() / (1.0 - pi[i]);
        }
        delta += term;
    }
    delta /= static_cast<double>(y.rows());
    Curve d(ds.outcome_grid(), std::move(delta));
    const double norm = l2_norm(d);
    return DynamicEffect{std::move(d), norm, Metric::Euclidean};
}

}  // namespace funcause
