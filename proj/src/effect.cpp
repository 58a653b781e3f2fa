#include "funcause/effect.hpp"

#include "funcause/elastic.hpp"

namespace funcause {

std::string_view to_string(Metric m) {
    switch (m) {
        case Metric::Euclidean: return "euclidean";
        case Metric::FisherRaoSrsf: return "fisher-rao-srsf";
        case Metric::FisherRaoSphere: return "fisher-rao-sphere";
    }
    return "euclidean";
}

Metric metric_from_string(std::string_view name) {
    if (name == "euclidean") return Metric::Euclidean;
    if (name == "fisher-rao-srsf") return Metric::FisherRaoSrsf;
    if (name == "fisher-rao-sphere") return Metric::FisherRaoSphere;
    throw DomainError("unknown metric '" + std::string(name) + "'");
}

double effect_norm(const Curve& f1, const Curve& f0, Metric metric) {
    switch (metric) {
        case Metric::FisherRaoSrsf: return fr_distance_srsf(f1, f0);
        case Metric::FisherRaoSphere: return fr_distance_sphere(f1, f0);
        case Metric::Euclidean: break;
    }
    return l2_norm(f1 - f0);
}

DynamicEffect make_effect(const Curve& f1, const Curve& f0, Metric metric) {
    return DynamicEffect{f1 - f0, effect_norm(f1, f0, metric), metric};
}

}  // namespace funcause
