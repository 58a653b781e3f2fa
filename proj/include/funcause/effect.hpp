#pragma once

#include <string>
#include <string_view>

#include "funcause/fdata.hpp"

namespace funcause {

enum class Metric { Euclidean, FisherRaoSrsf, FisherRaoSphere };

std::string_view to_string(Metric m);
/// Accepts "euclidean", "fisher-rao-srsf" and "fisher-rao-sphere"; throws DomainError otherwise.
Metric metric_from_string(std::string_view name);

/// Pointwise effect curve together with its scalar size under a metric.
struct DynamicEffect {
    Curve delta;
    double scalar_norm = 0.0;
    Metric metric = Metric::Euclidean;
};

/// Distance between two mean curves under `metric`.
double effect_norm(const Curve& f1, const Curve& f0, Metric metric);

/// delta = f1 - f0 with scalar_norm = effect_norm(f1, f0, metric).
DynamicEffect make_effect(const Curve& f1, const Curve& f0, Metric metric);

}  // namespace funcause
