#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "funcause/error.hpp"

namespace funcause {

/**
 * Ordered sample locations on [0, 1].
 *
 * Only uniform grids are supported: the first point is 0, the last is 1 and
 * spacing is constant to 1e-12 relative tolerance. Copies share storage.
 */
class Grid {
public:
    static Grid uniform(std::size_t size);

    /// Validates the points; throws DomainError on a non-uniform or out-of-range grid.
    explicit Grid(std::vector<double> points);

    std::size_t size() const noexcept { return points_->size(); }
    double operator[](std::size_t i) const { return (*points_)[i]; }
    std::span<const double> points() const noexcept { return *points_; }
    double spacing() const noexcept { return 1.0 / static_cast<double>(size() - 1); }

    /// Trapezoid quadrature weights on [0, 1]; they sum to 1.
    const Eigen::VectorXd& quadrature_weights() const noexcept { return *weights_; }

    friend bool operator==(const Grid& a, const Grid& b);

private:
    std::shared_ptr<const std::vector<double>> points_;
    std::shared_ptr<const Eigen::VectorXd> weights_;
};

/// Real-valued function sampled on a Grid. Values are finite.
class Curve {
public:
    Curve(Grid grid, Eigen::VectorXd values);

    template <typename F>
    static Curve from_function(const Grid& grid, F&& f) {
        Eigen::VectorXd v(static_cast<Eigen::Index>(grid.size()));
        for (std::size_t i = 0; i < grid.size(); ++i) v[static_cast<Eigen::Index>(i)] = f(grid[i]);
        return Curve(grid, std::move(v));
    }

    static Curve constant(const Grid& grid, double value);

    const Grid& grid() const noexcept { return grid_; }
    const Eigen::VectorXd& values() const noexcept { return values_; }
    std::size_t size() const noexcept { return grid_.size(); }
    double operator[](std::size_t i) const { return values_[static_cast<Eigen::Index>(i)]; }

    Curve operator+(const Curve& other) const;
    Curve operator-(const Curve& other) const;
    Curve operator*(double s) const;

private:
    Grid grid_;
    Eigen::VectorXd values_;
};

/// sqrt of the trapezoid integral of f^2 over [0, 1].
double l2_norm(const Curve& c);
double l2_norm(const Eigen::VectorXd& values, const Grid& grid);
double l2_inner(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Grid& grid);

/// Centered moving average with a window of `window` points (odd), shrinking at the ends.
Curve moving_average(const Curve& c, std::size_t window);

/**
 * Second-order finite-difference derivative: central differences inside,
 * one-sided three-point stencils at the ends. A non-zero `smoothing_window`
 * applies moving_average first. Throws GridTooSmall when T < 3.
 */
Curve derivative(const Curve& c, std::size_t smoothing_window = 0);

enum class Interpolation { Linear, NaturalCubic };

/// Evaluate the curve at arbitrary points of [0, 1] (clamped to the ends).
Eigen::VectorXd interpolate(const Curve& c, std::span<const double> at,
                            Interpolation method = Interpolation::Linear);

Curve resample(const Curve& c, const Grid& target, Interpolation method = Interpolation::Linear);

struct ObservationalSample {
    std::string id;
    double treatment = 0.0;
    Eigen::VectorXd covariates;
    std::optional<Curve> covariate_curve;
    Curve outcome;
};

/**
 * A validated collection of samples sharing one outcome grid (and one
 * covariate-curve grid when covariate curves are present).
 */
class Dataset {
public:
    explicit Dataset(std::vector<ObservationalSample> samples);

    std::size_t size() const noexcept { return samples_.size(); }
    const std::vector<ObservationalSample>& samples() const noexcept { return samples_; }
    const ObservationalSample& operator[](std::size_t i) const { return samples_[i]; }

    const Grid& outcome_grid() const noexcept { return samples_.front().outcome.grid(); }
    std::optional<Grid> covariate_grid() const;
    bool has_covariate_curves() const noexcept { return samples_.front().covariate_curve.has_value(); }
    std::size_t covariate_dim() const noexcept {
        return static_cast<std::size_t>(samples_.front().covariates.size());
    }

    /// True when every treatment is exactly 0 or 1.
    bool is_binary_treatment() const noexcept { return binary_; }

    Eigen::VectorXd treatments() const;
    Eigen::MatrixXd covariate_matrix() const;       ///< n x d
    Eigen::MatrixXd outcome_matrix() const;         ///< n x T
    Eigen::MatrixXd covariate_curve_matrix() const; ///< n x Tc (empty when absent)

    std::vector<Curve> outcomes() const;
    std::vector<std::size_t> arm_indices(int arm) const;

    /// Same samples with outcomes (and optionally covariate curves) replaced.
    Dataset with_outcomes(std::span<const Curve> outcomes) const;
    Dataset with_covariate_curves(std::span<const Curve> curves) const;
    Dataset subset(std::span<const std::size_t> indices) const;

private:
    std::vector<ObservationalSample> samples_;
    bool binary_ = false;
};

bool operator==(const Dataset& a, const Dataset& b);

enum class DatasetFormat { Csv, Json };

/// Picks the format from the extension: ".json" is JSON, anything else CSV.
DatasetFormat format_from_path(const std::filesystem::path& path);

Dataset read_dataset_csv(std::istream& in);
void write_dataset_csv(const Dataset& ds, std::ostream& out);
Dataset read_dataset_json(std::istream& in);
void write_dataset_json(const Dataset& ds, std::ostream& out);

Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format);
inline Dataset load_dataset(const std::filesystem::path& path) {
    return load_dataset(path, format_from_path(path));
}
void save_dataset(const Dataset& ds, const std::filesystem::path& path, DatasetFormat format);
inline void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
    save_dataset(ds, path, format_from_path(path));
}

/// Zero-padded column suffix used by the CSV schema (`0001`, ...; wider when width > 4).
std::string column_index(std::size_t one_based, std::size_t count);

/// Shortest decimal text that round-trips the double exactly.
std::string format_double(double v);

}  // namespace funcause
