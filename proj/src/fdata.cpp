#include "funcause/fdata.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace funcause {

namespace {

constexpr double kUniformTolerance = 1e-12;

Eigen::VectorXd trapezoid_weights(std::size_t size) {
    const double h = 1.0 / static_cast<double>(size - 1);
    Eigen::VectorXd w = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(size), h);
    w[0] = 0.5 * h;
    w[w.size() - 1] = 0.5 * h;
    return w;
}

}  // namespace

Grid Grid::uniform(std::size_t size) {
    if (size < 2) throw DomainError("grid needs at least 2 points");
    std::vector<double> pts(size);
    const double h = 1.0 / static_cast<double>(size - 1);
    for (std::size_t i = 0; i < size; ++i) pts[i] = static_cast<double>(i) * h;
    pts.back() = 1.0;
    return Grid(std::move(pts));
}

Grid::Grid(std::vector<double> points) {
    const std::size_t n = points.size();
    if (n < 2) throw DomainError("grid needs at least 2 points");
    if (points.front() != 0.0 || points.back() != 1.0)
        throw DomainError("grid must start at 0 and end at 1");
    const double h = 1.0 / static_cast<double>(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double step = points[i + 1] - points[i];
        if (!(step > 0.0)) throw DomainError("grid must be strictly increasing");
        if (std::abs(step - h) > kUniformTolerance * std::max(1.0, h) + 1e-15)
            throw DomainError("only uniform grids are supported");
    }
    points_ = std::make_shared<const std::vector<double>>(std::move(points));
    weights_ = std::make_shared<const Eigen::VectorXd>(trapezoid_weights(n));
}

bool operator==(const Grid& a, const Grid& b) {
    if (a.points_ == b.points_) return true;
    // Uniform grids on [0, 1] are determined by their size.
    return a.size() == b.size();
}

Curve::Curve(Grid grid, Eigen::VectorXd values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (static_cast<std::size_t>(values_.size()) != grid_.size())
        throw DomainError("curve length " + std::to_string(values_.size()) +
                          " does not match grid size " + std::to_string(grid_.size()));
    if (!values_.allFinite()) throw DomainError("curve values must be finite");
}

Curve Curve::constant(const Grid& grid, double value) {
    return Curve(grid, Eigen::VectorXd::Constant(static_cast<Eigen::Index>(grid.size()), value));
}

Curve Curve::operator+(const Curve& other) const {
    if (!(grid_ == other.grid_)) throw DomainError("curves live on different grids");
    return Curve(grid_, values_ + other.values_);
}

Curve Curve::operator-(const Curve& other) const {
    if (!(grid_ == other.grid_)) throw DomainError("curves live on different grids");
    return Curve(grid_, values_ - other.values_);
}

Curve Curve::operator*(double s) const { return Curve(grid_, values_ * s); }

double l2_inner(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Grid& grid) {
    return (a.array() * b.array() * grid.quadrature_weights().array()).sum();
}

double l2_norm(const Eigen::VectorXd& values, const Grid& grid) {
    return std::sqrt(std::max(0.0, l2_inner(values, values, grid)));
}

double l2_norm(const Curve& c) { return l2_norm(c.values(), c.grid()); }

Curve moving_average(const Curve& c, std::size_t window) {
    if (window <= 1) return c;
    const auto n = static_cast<Eigen::Index>(c.size());
    const auto half = static_cast<Eigen::Index>(window / 2);
    Eigen::VectorXd out(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        // Symmetric window, shrunk near the ends so it stays centered.
        const Eigen::Index r = std::min({half, i, n - 1 - i});
        out[i] = c.values().segment(i - r, 2 * r + 1).mean();
    }
    return Curve(c.grid(), std::move(out));
}

Curve derivative(const Curve& c, std::size_t smoothing_window) {
    const auto n = static_cast<Eigen::Index>(c.size());
    if (n < 3) throw GridTooSmall("derivative needs at least 3 grid points");
    const Curve src = smoothing_window > 1 ? moving_average(c, smoothing_window) : c;
    const Eigen::VectorXd& f = src.values();
    const double h = c.grid().spacing();
    Eigen::VectorXd d(n);
    d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
    for (Eigen::Index i = 1; i + 1 < n; ++i) d[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
    d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
    return Curve(c.grid(), std::move(d));
}

namespace {

// Second derivatives of the natural cubic spline through uniformly spaced values.
Eigen::VectorXd natural_spline_moments(const Eigen::VectorXd& y, double h) {
    const Eigen::Index n = y.size();
    Eigen::VectorXd m = Eigen::VectorXd::Zero(n);
    if (n < 3) return m;
    // Thomas algorithm for the (n-2) interior equations m[i-1] + 4 m[i] + m[i+1] = rhs.
    const Eigen::Index k = n - 2;
    Eigen::VectorXd c(k), d(k);
    for (Eigen::Index i = 0; i < k; ++i) {
        const double rhs = 6.0 * (y[i + 2] - 2.0 * y[i + 1] + y[i]) / (h * h);
        const double denom = 4.0 - (i > 0 ? c[i - 1] : 0.0);
        c[i] = 1.0 / denom;
        d[i] = (rhs - (i > 0 ? d[i - 1] : 0.0)) / denom;
    }
    m[k] = d[k - 1];
    for (Eigen::Index i = k - 2; i >= 0; --i) m[i + 1] = d[i] - c[i] * m[i + 2];
    return m;
}

}  // namespace

Eigen::VectorXd interpolate(const Curve& c, std::span<const double> at, Interpolation method) {
    const auto n = static_cast<Eigen::Index>(c.size());
    const double h = c.grid().spacing();
    const Eigen::VectorXd& y = c.values();
    Eigen::VectorXd moments;
    if (method == Interpolation::NaturalCubic) moments = natural_spline_moments(y, h);

    Eigen::VectorXd out(static_cast<Eigen::Index>(at.size()));
    for (std::size_t k = 0; k < at.size(); ++k) {
        const double x = std::clamp(at[k], 0.0, 1.0);
        const double pos = x / h;
        auto i = static_cast<Eigen::Index>(std::floor(pos));
        i = std::clamp<Eigen::Index>(i, 0, n - 2);
        const double u = pos - static_cast<double>(i);
        double v = y[i] + u * (y[i + 1] - y[i]);
        if (method == Interpolation::NaturalCubic) {
            // Cubic correction on top of the chord.
            v -= h * h * u * (1.0 - u) * ((2.0 - u) * moments[i] + (1.0 + u) * moments[i + 1]) / 6.0;
        }
        out[static_cast<Eigen::Index>(k)] = v;
    }
    return out;
}

Curve resample(const Curve& c, const Grid& target, Interpolation method) {
    if (c.grid() == target) return Curve(target, c.values());
    return Curve(target, interpolate(c, target.points(), method));
}

// ---------------------------------------------------------------------------
// Dataset

Dataset::Dataset(std::vector<ObservationalSample> samples) : samples_(std::move(samples)) {
    if (samples_.size() < 2) throw SchemaError(0, "a dataset needs at least 2 samples");
    const auto& first = samples_.front();
    const Grid& og = first.outcome.grid();
    const bool curves = first.covariate_curve.has_value();
    const Eigen::Index d = first.covariates.size();
    bool binary = true;
    bool any_treated = false;
    bool any_control = false;
    for (std::size_t i = 0; i < samples_.size(); ++i) {
        const auto& s = samples_[i];
        const std::size_t row = i + 1;
        if (!(s.outcome.grid() == og)) throw SchemaError(row, "outcome grid differs from first sample");
        if (s.covariates.size() != d) throw SchemaError(row, "covariate dimension differs from first sample");
        if (!s.covariates.allFinite()) throw SchemaError(row, "non-finite covariate");
        if (!std::isfinite(s.treatment)) throw SchemaError(row, "non-finite treatment");
        if (s.covariate_curve.has_value() != curves)
            throw SchemaError(row, "covariate curves must be present for all samples or none");
        if (curves && !(s.covariate_curve->grid() == first.covariate_curve->grid()))
            throw SchemaError(row, "covariate-curve grid differs from first sample");
        if (s.treatment == 1.0) {
            any_treated = true;
        } else if (s.treatment == 0.0) {
            any_control = true;
        } else {
            binary = false;
        }
    }
    if (binary && !(any_treated && any_control))
        throw SchemaError(0, "binary treatment needs at least one sample in each arm");
    binary_ = binary;
}

std::optional<Grid> Dataset::covariate_grid() const {
    if (!has_covariate_curves()) return std::nullopt;
    return samples_.front().covariate_curve->grid();
}

Eigen::VectorXd Dataset::treatments() const {
    Eigen::VectorXd x(static_cast<Eigen::Index>(size()));
    for (std::size_t i = 0; i < size(); ++i) x[static_cast<Eigen::Index>(i)] = samples_[i].treatment;
    return x;
}

Eigen::MatrixXd Dataset::covariate_matrix() const {
    Eigen::MatrixXd v(static_cast<Eigen::Index>(size()), static_cast<Eigen::Index>(covariate_dim()));
    for (std::size_t i = 0; i < size(); ++i) v.row(static_cast<Eigen::Index>(i)) = samples_[i].covariates.transpose();
    return v;
}

Eigen::MatrixXd Dataset::outcome_matrix() const {
    const auto T = static_cast<Eigen::Index>(outcome_grid().size());
    Eigen::MatrixXd y(static_cast<Eigen::Index>(size()), T);
    for (std::size_t i = 0; i < size(); ++i) y.row(static_cast<Eigen::Index>(i)) = samples_[i].outcome.values().transpose();
    return y;
}

Eigen::MatrixXd Dataset::covariate_curve_matrix() const {
    if (!has_covariate_curves()) return {};
    const auto T = static_cast<Eigen::Index>(covariate_grid()->size());
    Eigen::MatrixXd y(static_cast<Eigen::Index>(size()), T);
    for (std::size_t i = 0; i < size(); ++i)
        y.row(static_cast<Eigen::Index>(i)) = samples_[i].covariate_curve->values().transpose();
    return y;
}

std::vector<Curve> Dataset::outcomes() const {
    std::vector<Curve> out;
    out.reserve(size());
    for (const auto& s : samples_) out.push_back(s.outcome);
    return out;
}

std::vector<std::size_t> Dataset::arm_indices(int arm) const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < size(); ++i)
        if (samples_[i].treatment == static_cast<double>(arm)) idx.push_back(i);
    return idx;
}

Dataset Dataset::with_outcomes(std::span<const Curve> outcomes) const {
    if (outcomes.size() != size()) throw DomainError("outcome count does not match dataset size");
    auto copy = samples_;
    for (std::size_t i = 0; i < size(); ++i) copy[i].outcome = outcomes[i];
    return Dataset(std::move(copy));
}

Dataset Dataset::with_covariate_curves(std::span<const Curve> curves) const {
    if (curves.size() != size()) throw DomainError("covariate-curve count does not match dataset size");
    auto copy = samples_;
    for (std::size_t i = 0; i < size(); ++i) copy[i].covariate_curve = curves[i];
    return Dataset(std::move(copy));
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
    std::vector<ObservationalSample> picked;
    picked.reserve(indices.size());
    for (std::size_t i : indices) picked.push_back(samples_.at(i));
    return Dataset(std::move(picked));
}

bool operator==(const Dataset& a, const Dataset& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto& s = a[i];
        const auto& t = b[i];
        if (s.id != t.id || s.treatment != t.treatment) return false;
        if (s.covariates != t.covariates) return false;
        if (!(s.outcome.grid() == t.outcome.grid()) || s.outcome.values() != t.outcome.values()) return false;
        if (s.covariate_curve.has_value() != t.covariate_curve.has_value()) return false;
        if (s.covariate_curve && s.covariate_curve->values() != t.covariate_curve->values()) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Text formats

std::string column_index(std::size_t one_based, std::size_t count) {
    std::size_t width = 4;
    for (std::size_t c = count; c >= 10000; c /= 10) ++width;
    std::string s = std::to_string(one_based);
    if (s.size() < width) s.insert(0, width - s.size(), '0');
    return s;
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw DomainError("cannot format value");
    return std::string(buf, ptr);
}

DatasetFormat format_from_path(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
    return ext == ".json" ? DatasetFormat::Json : DatasetFormat::Csv;
}

Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format) {
    std::ifstream in(path);
    if (!in) throw SchemaError(0, "cannot open " + path.string());
    return format == DatasetFormat::Json ? read_dataset_json(in) : read_dataset_csv(in);
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path, DatasetFormat format) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    if (format == DatasetFormat::Json) {
        write_dataset_json(ds, out);
    } else {
        write_dataset_csv(ds, out);
    }
    if (!out) throw Error("failed writing " + path.string());
}

}  // namespace funcause
