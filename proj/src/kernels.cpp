#include "funcause/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace funcause {

KernelSpec KernelSpec::squared_exponential(double lengthscale) {
    KernelSpec k{KernelFamily::SquaredExponential, lengthscale};
    k.validate();
    return k;
}

KernelSpec KernelSpec::binary() { return {KernelFamily::BinaryIndicator, 1.0}; }

KernelSpec KernelSpec::fisher_rao(double zeta) {
    KernelSpec k{KernelFamily::FisherRaoGaussian, zeta};
    k.validate();
    return k;
}

KernelSpec KernelSpec::constant() { return {KernelFamily::Constant, 1.0}; }

void KernelSpec::validate() const {
    const bool scaled = family == KernelFamily::SquaredExponential || family == KernelFamily::FisherRaoGaussian;
    if (scaled && !(scale > 0.0 && std::isfinite(scale))) throw DomainError("kernel bandwidth must be positive");
}

std::string describe(const KernelSpec& spec) {
    std::ostringstream out;
    switch (spec.family) {
        case KernelFamily::SquaredExponential: out << "se(l=" << spec.scale << ")"; break;
        case KernelFamily::BinaryIndicator: out << "binary"; break;
        case KernelFamily::FisherRaoGaussian: out << "fisher-rao(zeta=" << spec.scale << ")"; break;
        case KernelFamily::Constant: out << "constant"; break;
    }
    return out.str();
}

GramMatrix::GramMatrix(Eigen::MatrixXd entries, std::string provenance)
    : entries_(std::move(entries)), provenance_(std::move(provenance)) {
    if (entries_.rows() != entries_.cols()) throw DomainError("Gram matrix must be square");
    if (!entries_.allFinite()) throw NumericalError("Gram matrix has non-finite entries");
    const double scale = std::max(1.0, entries_.cwiseAbs().maxCoeff());
    if ((entries_ - entries_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw NumericalError("Gram matrix is not symmetric");
}

double GramMatrix::min_eigenvalue() const {
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(entries_, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

double GramMatrix::max_eigenvalue() const {
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(entries_, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
}

bool GramMatrix::is_psd() const {
    const Eigen::VectorXd ev =
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(entries_, Eigen::EigenvaluesOnly).eigenvalues();
    return ev.minCoeff() >= -1e-8 * std::max(1.0, ev.maxCoeff());
}

double se_kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double lengthscale) {
    if (a.size() != b.size()) throw DomainError("kernel arguments must have equal dimension");
    if (!(lengthscale > 0.0)) throw DomainError("lengthscale must be positive");
    return std::exp(-(a - b).squaredNorm() / (2.0 * lengthscale * lengthscale));
}

double binary_kernel(double x, double y) { return x == y ? 1.0 : 0.0; }

double fr_kernel(const Curve& f, const Curve& g, double zeta) {
    if (!(zeta > 0.0)) throw DomainError("zeta must be positive");
    const double d = fr_distance_srsf(f, g);
    return std::exp(-zeta * d * d);
}

namespace {

double median_rule(std::vector<double> d) {
    if (d.empty()) throw DomainError("median heuristic needs at least 2 points");
    const std::size_t mid = d.size() / 2;
    std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid), d.end());
    double med = d[mid];
    if (d.size() % 2 == 0) med = 0.5 * (med + *std::max_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid)));
    if (med > 0.0) return med;
    double sum = 0.0;
    std::size_t count = 0;
    for (double v : d)
        if (v > 0.0) {
            sum += v;
            ++count;
        }
    return count > 0 ? sum / static_cast<double>(count) : 1.0;
}

}  // namespace

double median_heuristic(const Eigen::MatrixXd& points) {
    const Eigen::Index n = points.rows();
    std::vector<double> d;
    d.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) d.push_back((points.row(i) - points.row(j)).norm());
    return median_rule(std::move(d));
}

double median_heuristic(std::span<const Curve> curves) {
    std::vector<SrsfCurve> q;
    q.reserve(curves.size());
    for (const auto& c : curves) q.push_back(srsf_transform(c));
    std::vector<double> d;
    for (std::size_t i = 0; i < q.size(); ++i)
        for (std::size_t j = i + 1; j < q.size(); ++j) d.push_back(fr_distance_srsf(q[i], q[j]));
    return median_rule(std::move(d));
}

KernelInputs KernelInputs::from_dataset(const Dataset& ds) {
    KernelInputs in;
    in.treatment = ds.treatments();
    in.covariates = ds.covariate_matrix();
    if (ds.has_covariate_curves()) {
        in.curve_grid = ds.covariate_grid();
        in.curves = ds.covariate_curve_matrix();
        in.curve_srsf.resize(in.curves.rows(), in.curves.cols());
        for (std::size_t i = 0; i < ds.size(); ++i)
            in.curve_srsf.row(static_cast<Eigen::Index>(i)) = srsf_transform(*ds[i].covariate_curve).values().transpose();
    }
    return in;
}

KernelInputs KernelInputs::with_treatment(double x) const {
    KernelInputs out = *this;
    out.treatment.setConstant(x);
    return out;
}

namespace {

// Multiplies `k` entrywise by the factor kernel on rows of a and b.
void apply_factor(Eigen::MatrixXd& k, const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const KernelSpec& spec,
                  const Eigen::VectorXd* weights) {
    spec.validate();
    if (spec.family == KernelFamily::Constant) return;
    if (a.cols() != b.cols()) throw DomainError("kernel arguments must have equal dimension");
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < b.rows(); ++j) {
            double& out = k(i, j);
            if (out == 0.0) continue;
            switch (spec.family) {
                case KernelFamily::BinaryIndicator:
                    out *= (a.row(i) == b.row(j)) ? 1.0 : 0.0;
                    break;
                case KernelFamily::SquaredExponential:
                    out *= std::exp(-(a.row(i) - b.row(j)).squaredNorm() / (2.0 * spec.scale * spec.scale));
                    break;
                case KernelFamily::FisherRaoGaussian: {
                    const Eigen::RowVectorXd diff = a.row(i) - b.row(j);
                    const double d2 = weights ? diff.cwiseProduct(diff).dot(weights->transpose()) : diff.squaredNorm();
                    out *= std::exp(-spec.scale * d2);
                    break;
                }
                case KernelFamily::Constant: break;
            }
        }
    }
}

}  // namespace

Eigen::MatrixXd cross_kernel(const KernelInputs& a, const KernelInputs& b, const InputKernel& kernel) {
    Eigen::MatrixXd k = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(b.size()));
    if (kernel.treatment.family == KernelFamily::FisherRaoGaussian)
        throw DomainError("the Fisher-Rao kernel applies to covariate curves only");
    apply_factor(k, a.treatment, b.treatment, kernel.treatment, nullptr);
    if (a.covariates.cols() > 0) {
        if (kernel.covariates.family == KernelFamily::FisherRaoGaussian)
            throw DomainError("the Fisher-Rao kernel applies to covariate curves only");
        apply_factor(k, a.covariates, b.covariates, kernel.covariates, nullptr);
    }
    if (kernel.curves && a.has_curves() && b.has_curves()) {
        if (kernel.curves->family == KernelFamily::FisherRaoGaussian) {
            apply_factor(k, a.curve_srsf, b.curve_srsf, *kernel.curves, &a.curve_grid->quadrature_weights());
        } else {
            apply_factor(k, a.curves, b.curves, *kernel.curves, nullptr);
        }
    }
    return k;
}

GramMatrix input_gram(const KernelInputs& inputs, const InputKernel& kernel) {
    Eigen::MatrixXd k = cross_kernel(inputs, inputs, kernel);
    k = 0.5 * (k + k.transpose());
    std::string prov = "input: x " + describe(kernel.treatment) + ", v " + describe(kernel.covariates);
    if (kernel.curves && inputs.has_curves()) prov += ", curve " + describe(*kernel.curves);
    return GramMatrix(std::move(k), std::move(prov));
}

GramMatrix input_gram(const Dataset& ds, const InputKernel& kernel) {
    return input_gram(KernelInputs::from_dataset(ds), kernel);
}

GramMatrix output_gram(const Grid& grid, double lengthscale) {
    if (!(lengthscale > 0.0)) throw DomainError("output lengthscale must be positive");
    const auto T = static_cast<Eigen::Index>(grid.size());
    Eigen::MatrixXd k(T, T);
    for (Eigen::Index i = 0; i < T; ++i)
        for (Eigen::Index j = 0; j < T; ++j) {
            const double d = grid[static_cast<std::size_t>(i)] - grid[static_cast<std::size_t>(j)];
            k(i, j) = std::exp(-d * d / (2.0 * lengthscale * lengthscale));
        }
    return GramMatrix(std::move(k), "output: " + describe(KernelSpec::squared_exponential(lengthscale)));
}

double default_output_lengthscale(const Grid& grid) {
    const auto pts = grid.points();
    return median_heuristic(Eigen::Map<const Eigen::MatrixXd>(pts.data(), static_cast<Eigen::Index>(pts.size()), 1));
}

}  // namespace funcause
