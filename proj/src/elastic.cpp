#include "funcause/elastic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "funcause/parallel.hpp"

namespace funcause {

SrsfCurve::SrsfCurve(Grid grid, Eigen::VectorXd values, double origin)
    : grid_(std::move(grid)), values_(std::move(values)), origin_(origin) {
    if (static_cast<std::size_t>(values_.size()) != grid_.size())
        throw DomainError("SRSF length does not match grid size");
    if (!values_.allFinite() || !std::isfinite(origin_)) throw DomainError("SRSF values must be finite");
}

WarpingFunction::WarpingFunction(Grid grid, Eigen::VectorXd values)
    : grid_(std::move(grid)), values_(std::move(values)) {
    const auto n = values_.size();
    if (static_cast<std::size_t>(n) != grid_.size()) throw DomainError("warp length does not match grid size");
    if (values_[0] != 0.0 || values_[n - 1] != 1.0) throw DomainError("warp must fix both endpoints");
    for (Eigen::Index i = 0; i + 1 < n; ++i)
        if (!(values_[i + 1] > values_[i])) throw DomainError("warp must be strictly increasing");
}

WarpingFunction WarpingFunction::identity(const Grid& grid) {
    const auto pts = grid.points();
    return WarpingFunction(grid, Eigen::Map<const Eigen::VectorXd>(pts.data(), static_cast<Eigen::Index>(pts.size())));
}

double WarpingFunction::max_deviation_cells() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < size(); ++i)
        worst = std::max(worst, std::abs(values_[static_cast<Eigen::Index>(i)] - grid_[i]));
    return worst / grid_.spacing();
}

SrsfCurve srsf_transform(const Curve& f, std::size_t smoothing_window) {
    const Curve df = derivative(f, smoothing_window);
    Eigen::VectorXd q = df.values().unaryExpr([](double v) {
        return v == 0.0 ? 0.0 : std::copysign(std::sqrt(std::abs(v)), v);
    });
    return SrsfCurve(f.grid(), std::move(q), f[0]);
}

Curve srsf_inverse(const SrsfCurve& q) {
    const Eigen::VectorXd slope = q.values().cwiseProduct(q.values().cwiseAbs());
    const double h = q.grid().spacing();
    Eigen::VectorXd f(slope.size());
    f[0] = q.origin();
    for (Eigen::Index i = 1; i < slope.size(); ++i) f[i] = f[i - 1] + 0.5 * h * (slope[i - 1] + slope[i]);
    return Curve(q.grid(), std::move(f));
}

namespace {

void require_same_grid(const Grid& a, const Grid& b) {
    if (!(a == b)) throw DomainError("curves must share a grid");
}

Eigen::VectorXd warp_values(const Eigen::VectorXd& values, const Grid& grid, const WarpingFunction& gamma) {
    require_same_grid(grid, gamma.grid());
    const auto& g = gamma.values();
    return interpolate(Curve(grid, values), std::span<const double>(g.data(), static_cast<std::size_t>(g.size())));
}

}  // namespace

SrsfCurve warp_srsf(const SrsfCurve& q, const WarpingFunction& gamma) {
    const Eigen::VectorXd composed = warp_values(q.values(), q.grid(), gamma);
    const Curve dg = derivative(Curve(gamma.grid(), gamma.values()));
    const Eigen::VectorXd root = dg.values().cwiseMax(0.0).cwiseSqrt();
    return SrsfCurve(q.grid(), composed.cwiseProduct(root), q.origin());
}

Curve warp_curve(const Curve& f, const WarpingFunction& gamma) {
    return Curve(f.grid(), warp_values(f.values(), f.grid(), gamma));
}

WarpingFunction compose(const WarpingFunction& a, const WarpingFunction& b) {
    Eigen::VectorXd v = warp_values(a.values(), a.grid(), b);
    v[0] = 0.0;
    v[v.size() - 1] = 1.0;
    return WarpingFunction(a.grid(), std::move(v));
}

WarpingFunction invert(const WarpingFunction& gamma) {
    const auto& g = gamma.values();
    const Grid& grid = gamma.grid();
    const auto n = g.size();
    Eigen::VectorXd inv(n);
    Eigen::Index k = 0;
    for (Eigen::Index s = 0; s < n; ++s) {
        const double t = grid[static_cast<std::size_t>(s)];
        while (k + 2 < n && g[k + 1] < t) ++k;
        const double frac = std::clamp((t - g[k]) / (g[k + 1] - g[k]), 0.0, 1.0);
        inv[s] = grid[static_cast<std::size_t>(k)] + frac * grid.spacing();
    }
    inv[0] = 0.0;
    inv[n - 1] = 1.0;
    return WarpingFunction(grid, std::move(inv));
}

// ---------------------------------------------------------------------------
// Dynamic-programming alignment

namespace {

struct Move {
    int di;
    int dj;
    std::vector<double> breaks;  ///< offsets along q1 where either interpolant has a knot
};

std::vector<Move> lattice_moves(int cap) {
    std::vector<Move> moves{{1, 1, {}}};
    for (int di = 1; di <= cap; ++di)
        for (int dj = 1; dj <= cap; ++dj)
            if ((di != 1 || dj != 1) && std::gcd(di, dj) == 1) moves.push_back({di, dj, {}});
    for (auto& m : moves) {
        for (int p = 0; p <= m.di; ++p) m.breaks.push_back(p);
        for (int r = 1; r < m.dj; ++r) m.breaks.push_back(static_cast<double>(r * m.di) / m.dj);
        std::sort(m.breaks.begin(), m.breaks.end());
    }
    return moves;
}

double sample_at(const Eigen::VectorXd& q, double pos) {
    const auto last = q.size() - 1;
    if (pos >= static_cast<double>(last)) return q[last];
    const auto i = static_cast<Eigen::Index>(pos);
    const double frac = pos - static_cast<double>(i);
    return frac == 0.0 ? q[i] : (1.0 - frac) * q[i] + frac * q[i + 1];
}

// Warped q2 value at grid index s on the segment (k, l) -> (k + di, l + dj).
double segment_value(const Eigen::VectorXd& q2, Eigen::Index k, Eigen::Index l, const Move& m, Eigen::Index s) {
    const double pos = static_cast<double>(l) + static_cast<double>(m.dj * (s - k)) / static_cast<double>(m.di);
    return sample_at(q2, pos) * std::sqrt(static_cast<double>(m.dj) / static_cast<double>(m.di));
}

// Integral over the segment (k, l) -> (k + di, l + dj) of the squared difference
// between the linear interpolants of q1 and the warped q2, in units of grid spacing.
// Both are linear between knots, so the integrand is quadratic piecewise.
double segment_cost(const Eigen::VectorXd& q1, const Eigen::VectorXd& q2, Eigen::Index k, Eigen::Index l,
                    const Move& m) {
    const double slope = static_cast<double>(m.dj) / static_cast<double>(m.di);
    const double root = std::sqrt(slope);
    double total = 0.0;
    double prev_x = 0.0;
    double prev_f = q1[k] - root * q2[l];
    for (std::size_t b = 1; b < m.breaks.size(); ++b) {
        const double x = m.breaks[b];
        const double f = sample_at(q1, static_cast<double>(k) + x) - root * sample_at(q2, static_cast<double>(l) + slope * x);
        total += (x - prev_x) * (prev_f * prev_f + prev_f * f + f * f) / 3.0;
        prev_x = x;
        prev_f = f;
    }
    return total;
}

}  // namespace

Alignment align_pair(const SrsfCurve& q1, const SrsfCurve& q2, const AlignOptions& options) {
    require_same_grid(q1.grid(), q2.grid());
    if (options.penalty < 0.0) throw DomainError("alignment penalty must be nonnegative");
    if (options.slope_cap < 1) throw DomainError("slope cap must be at least 1");
    const Grid& grid = q1.grid();
    const auto T = static_cast<Eigen::Index>(grid.size());
    const Eigen::VectorXd& a = q1.values();
    const Eigen::VectorXd& b = q2.values();
    const Eigen::VectorXd& w = grid.quadrature_weights();
    const double h = grid.spacing();
    const auto moves = lattice_moves(options.slope_cap);

    const double inf = std::numeric_limits<double>::infinity();
    Eigen::MatrixXd cost = Eigen::MatrixXd::Constant(T, T, inf);
    Eigen::Matrix<signed char, Eigen::Dynamic, Eigen::Dynamic> pred =
        Eigen::Matrix<signed char, Eigen::Dynamic, Eigen::Dynamic>::Constant(T, T, -1);
    cost(0, 0) = 0.0;

    for (Eigen::Index i = 1; i < T; ++i) {
        for (Eigen::Index j = 1; j < T; ++j) {
            double best = inf;
            signed char best_move = -1;
            for (std::size_t mi = 0; mi < moves.size(); ++mi) {
                const Move& m = moves[mi];
                const Eigen::Index k = i - m.di;
                const Eigen::Index l = j - m.dj;
                if (k < 0 || l < 0 || cost(k, l) == inf) continue;
                double c = cost(k, l) + h * segment_cost(a, b, k, l, m);
                if (options.penalty > 0.0) {
                    const double slope = static_cast<double>(m.dj) / static_cast<double>(m.di);
                    c += options.penalty * (slope - 1.0) * (slope - 1.0) * static_cast<double>(m.di) * h;
                }
                if (c < best) {
                    best = c;
                    best_move = static_cast<signed char>(mi);
                }
            }
            cost(i, j) = best;
            pred(i, j) = best_move;
        }
    }

    Eigen::VectorXd gamma(T);
    Eigen::VectorXd aligned(T);
    Eigen::Index i = T - 1;
    Eigen::Index j = T - 1;
    while (i > 0) {
        const Move& m = moves[static_cast<std::size_t>(pred(i, j))];
        const Eigen::Index k = i - m.di;
        const Eigen::Index l = j - m.dj;
        for (Eigen::Index s = (k == 0 ? 0 : k + 1); s <= i; ++s) {
            gamma[s] = (static_cast<double>(l) + static_cast<double>(m.dj * (s - k)) / static_cast<double>(m.di)) * h;
            aligned[s] = segment_value(b, k, l, m, s);
        }
        i = k;
        j = l;
    }
    gamma[0] = 0.0;
    gamma[T - 1] = 1.0;

    const Eigen::VectorXd diff = a - aligned;
    const double distance = std::sqrt(std::max(0.0, w.dot(diff.cwiseProduct(diff))));
    const Eigen::VectorXd plain = a - b;
    const double identity_distance = std::sqrt(std::max(0.0, w.dot(plain.cwiseProduct(plain))));
    if (identity_distance <= distance) return Alignment{WarpingFunction::identity(grid), q2, identity_distance};
    return Alignment{WarpingFunction(grid, std::move(gamma)), SrsfCurve(grid, std::move(aligned), q2.origin()),
                     distance};
}

// ---------------------------------------------------------------------------
// Karcher mean

namespace {

Eigen::VectorXd normalized_weights(std::span<const double> weights, std::size_t n) {
    Eigen::VectorXd w = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), 1.0);
    if (!weights.empty()) {
        if (weights.size() != n) throw WeightError("weight count does not match curve count");
        for (std::size_t i = 0; i < n; ++i) {
            if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) throw WeightError("weights must be finite and nonnegative");
            w[static_cast<Eigen::Index>(i)] = weights[i];
        }
    }
    const double total = w.sum();
    if (!(total > 0.0)) throw WeightError("weights must not all be zero");
    return w / total;
}

}  // namespace

KarcherResult karcher_mean(std::span<const Curve> curves, const KarcherOptions& options,
                           std::span<const double> weights) {
    const std::size_t n = curves.size();
    if (n == 0) throw DomainError("Karcher mean needs at least one curve");
    const Grid& grid = curves.front().grid();
    for (const auto& c : curves) require_same_grid(grid, c.grid());
    const Eigen::VectorXd w = normalized_weights(weights, n);

    if (n == 1) {
        return KarcherResult{curves.front(), srsf_transform(curves.front()), {WarpingFunction::identity(grid)}, {0.0},
                             true};
    }

    std::vector<SrsfCurve> q;
    q.reserve(n);
    double origin = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        q.push_back(srsf_transform(curves[i]));
        origin += w[static_cast<Eigen::Index>(i)] * curves[i][0];
    }

    Eigen::VectorXd euclid = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.size()));
    for (std::size_t i = 0; i < n; ++i) euclid += w[static_cast<Eigen::Index>(i)] * q[i].values();
    std::size_t start = 0;
    double start_dist = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        if (w[static_cast<Eigen::Index>(i)] == 0.0) continue;
        const double d = l2_norm(q[i].values() - euclid, grid);
        if (d < start_dist) {
            start_dist = d;
            start = i;
        }
    }
    Eigen::VectorXd mu = q[start].values();

    std::vector<double> trace;
    std::vector<WarpingFunction> warps;
    Eigen::VectorXd best_mu = mu;
    bool converged = false;
    std::vector<std::optional<Alignment>> aligned(n);
    for (std::size_t iter = 0; iter < std::max<std::size_t>(1, options.max_iter); ++iter) {
        const SrsfCurve target(grid, mu, origin);
        parallel_for(n, [&](std::size_t i) { aligned[i] = align_pair(target, q[i], options.align); });
        double objective = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            objective += w[static_cast<Eigen::Index>(i)] * aligned[i]->distance * aligned[i]->distance;
        if (!trace.empty() && objective > trace.back()) {
            converged = true;
            break;
        }
        trace.push_back(objective);
        best_mu = mu;
        warps.clear();
        for (std::size_t i = 0; i < n; ++i) warps.push_back(aligned[i]->warp);
        if (trace.size() > 1) {
            const double prev = trace[trace.size() - 2];
            if (prev - objective <= options.tol * prev) {
                converged = true;
                break;
            }
        }
        if (objective == 0.0) {
            converged = true;
            break;
        }
        mu.setZero();
        for (std::size_t i = 0; i < n; ++i) mu += w[static_cast<Eigen::Index>(i)] * aligned[i]->aligned.values();
    }

    SrsfCurve mean_srsf(grid, best_mu, origin);
    if (options.center_warps) {
        Eigen::VectorXd avg = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.size()));
        for (std::size_t i = 0; i < n; ++i) avg += w[static_cast<Eigen::Index>(i)] * warps[i].values();
        const auto pts = grid.points();
        const Eigen::Map<const Eigen::VectorXd> id(pts.data(), static_cast<Eigen::Index>(pts.size()));
        if ((avg - id).cwiseAbs().maxCoeff() > 1e-12) {
            avg[0] = 0.0;
            avg[avg.size() - 1] = 1.0;
            const WarpingFunction avg_inv = invert(WarpingFunction(grid, std::move(avg)));
            for (auto& g : warps) g = compose(g, avg_inv);
            mean_srsf = warp_srsf(mean_srsf, avg_inv);
        }
    }
    Curve mean = srsf_inverse(mean_srsf);
    return KarcherResult{std::move(mean), std::move(mean_srsf), std::move(warps), std::move(trace), converged};
}

namespace {

Registration register_once(std::span<const Curve> curves, const KarcherOptions& options) {
    KarcherResult km = karcher_mean(curves, options);
    const std::size_t n = curves.size();
    std::vector<std::optional<Alignment>> aligned(n);
    parallel_for(n, [&](std::size_t i) { aligned[i] = align_pair(km.mean_srsf, srsf_transform(curves[i]), options.align); });
    Registration out{{}, {}, std::move(km.mean), km.converged, 1};
    out.curves.reserve(n);
    out.warps.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.curves.push_back(warp_curve(curves[i], aligned[i]->warp));
        out.warps.push_back(std::move(aligned[i]->warp));
    }
    return out;
}

}  // namespace

Registration register_curves(std::span<const Curve> curves, const KarcherOptions& options, std::size_t passes) {
    if (curves.empty()) throw DomainError("registration needs at least one curve");
    Registration out = register_once(curves, options);
    while (out.passes < passes) {
        const bool fixed = std::all_of(out.warps.begin(), out.warps.end(),
                                       [](const WarpingFunction& g) { return g.max_deviation_cells() == 0.0; });
        if (fixed) break;
        Registration next = register_once(out.curves, options);
        for (std::size_t i = 0; i < curves.size(); ++i) {
            // Exact identity warps leave the curve untouched.
            if (next.warps[i].max_deviation_cells() == 0.0) next.curves[i] = out.curves[i];
            next.warps[i] = compose(out.warps[i], next.warps[i]);
        }
        next.passes = out.passes + 1;
        out = std::move(next);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Fisher-Rao distances

double fr_distance_srsf(const SrsfCurve& qf, const SrsfCurve& qg) {
    require_same_grid(qf.grid(), qg.grid());
    return l2_norm(qf.values() - qg.values(), qf.grid());
}

double fr_distance_srsf(const Curve& f, const Curve& g) {
    return fr_distance_srsf(srsf_transform(f), srsf_transform(g));
}

double fr_distance_sphere(const Eigen::VectorXd& p, const Eigen::VectorXd& r) {
    if (p.size() != r.size()) throw DomainError("vectors must have equal length");
    constexpr double kSumSlack = 1e-9;
    if ((p.array() < 0.0).any() || (r.array() < 0.0).any()) throw DomainError("entries must be nonnegative");
    if (p.sum() > 1.0 + kSumSlack || r.sum() > 1.0 + kSumSlack) throw DomainError("entries must sum to at most 1");
    const double s = p.cwiseProduct(r).cwiseSqrt().sum();
    return 2.0 * std::acos(std::clamp(s, -1.0, 1.0));
}

double fr_distance_sphere(const Curve& p, const Curve& r) {
    require_same_grid(p.grid(), r.grid());
    return fr_distance_sphere(p.values(), r.values());
}

}  // namespace funcause
