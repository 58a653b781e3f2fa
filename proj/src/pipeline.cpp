#include "funcause/pipeline.hpp"

#include <array>

namespace funcause {

namespace {

constexpr std::array<std::pair<EstimatorKind, std::string_view>, 8> kNames{{
    {EstimatorKind::Ipw, "ipw"},
    {EstimatorKind::Dr, "dr"},
    {EstimatorKind::FrechetEuclid, "frechet-euclid"},
    {EstimatorKind::FrechetFr, "frechet-fr"},
    {EstimatorKind::Kernel, "kernel"},
    {EstimatorKind::OperatorKernel, "operator-kernel"},
    {EstimatorKind::SrvfOperatorKernel, "srvf-operator-kernel"},
    {EstimatorKind::IterativeSrvf, "iterative-srvf"},
}};

void describe_model(const KrrModel& m, std::map<std::string, std::string>& meta) {
    meta["lambda"] = format_double(m.lambda());
    meta["treatment_kernel"] = describe(m.kernel().treatment);
    meta["covariate_kernel"] = describe(m.kernel().covariates);
    if (m.kernel().curves && m.train().has_curves()) meta["curve_kernel"] = describe(*m.kernel().curves);
    meta["output_kernel"] = m.output() ? m.output()->provenance() : "identity";
}

}  // namespace

std::string_view to_string(EstimatorKind k) {
    for (const auto& [kind, name] : kNames)
        if (kind == k) return name;
    return "ipw";
}

EstimatorKind estimator_from_string(std::string_view name) {
    for (const auto& [kind, n] : kNames)
        if (n == name) return kind;
    throw DomainError("unknown estimator '" + std::string(name) + "'");
}

const std::vector<EstimatorKind>& all_estimators() {
    static const std::vector<EstimatorKind> all = [] {
        std::vector<EstimatorKind> v;
        for (const auto& entry : kNames) v.push_back(entry.first);
        return v;
    }();
    return all;
}

bool supports_continuous(EstimatorKind k) {
    return k == EstimatorKind::Kernel || k == EstimatorKind::OperatorKernel || k == EstimatorKind::SrvfOperatorKernel ||
           k == EstimatorKind::IterativeSrvf;
}

EffectEstimate estimate(const Dataset& ds, EstimatorKind kind, const EstimateOptions& options) {
    if (!supports_continuous(kind) && !ds.is_binary_treatment())
        throw DomainError(std::string(to_string(kind)) + " needs a binary treatment");
    if (options.ci_level && !ds.is_binary_treatment())
        throw DomainError("confidence intervals need a binary treatment");
    std::map<std::string, std::string> meta;
    const auto finish = [&](DynamicEffect e) {
        std::optional<EffectCI> ci;
        if (options.ci_level) ci = effect_ci(ds, e.delta, *options.ci_level);
        return EffectEstimate{std::move(e), std::string(to_string(kind)), std::move(ci), std::move(meta)};
    };

    switch (kind) {
        case EstimatorKind::Ipw: {
            const PropensityModel pm = fit_propensity(ds, options.propensity_l2, options.clip);
            return finish(ipw_effect(ds, pm));
        }
        case EstimatorKind::Dr: {
            const PropensityModel pm = fit_propensity(ds, options.propensity_l2, options.clip);
            return finish(dr_effect(ds, pm, fit_outcome_models(ds, options.ridge)));
        }
        case EstimatorKind::FrechetEuclid:
        case EstimatorKind::FrechetFr: {
            const Metric metric = kind == EstimatorKind::FrechetEuclid ? Metric::Euclidean : Metric::FisherRaoSrsf;
            const PropensityModel pm = fit_propensity(ds, options.propensity_l2, options.clip);
            FrechetOptions fo = options.frechet;
            fo.karcher = options.karcher;
            const PotentialOutcomes po = group_potential_outcomes(ds, metric, Weighting::InversePropensity, &pm, fo);
            meta["metric"] = std::string(to_string(metric));
            return finish(dynamic_effect(po.treated, po.control, metric));
        }
        case EstimatorKind::Kernel:
        case EstimatorKind::OperatorKernel:
        case EstimatorKind::SrvfOperatorKernel: {
            KernelEstimatorOptions ko = options.kernel;
            ko.output = kind == EstimatorKind::Kernel ? OutputMode::Identity : OutputMode::Operator;
            const Dataset data = kind == EstimatorKind::SrvfOperatorKernel
                                     ? register_dataset(ds, true, true, options.karcher)
                                     : ds;
            const KrrModel m = fit_kernel_model(data, ko);
            describe_model(m, meta);
            return finish(kernel_dynamic_effect(m, options.metric, options.x1, options.x0));
        }
        case EstimatorKind::IterativeSrvf: {
            IterativeOptions io;
            io.kernel = options.kernel;
            io.kernel.output = OutputMode::Operator;
            io.max_iter = options.max_iter;
            io.tol = options.tol;
            io.karcher = options.karcher;
            const IterativeResult r = iterative_srvf_estimate(ds, io);
            describe_model(r.model, meta);
            meta["iterations"] = std::to_string(r.iterations);
            meta["converged"] = r.converged ? "true" : "false";
            return finish(kernel_dynamic_effect(r.model, options.metric, options.x1, options.x0));
        }
    }
    throw DomainError("unknown estimator");
}

}  // namespace funcause
