#include <doctest.h>

#include "funcause/pipeline.hpp"
#include "funcause/simgen.hpp"

using namespace funcause;

namespace {

Simulation clean_binary(std::uint64_t seed, std::size_t n = 80, std::size_t T = 40) {
    ScenarioConfig cfg;
    cfg.n = n;
    cfg.T = T;
    cfg.noise = 0.0;
    cfg.shift = 0.0;
    cfg.confounding = 0.0;
    cfg.covariate_dim = 0;
    cfg.seed = seed;
    return generate(cfg);
}

Curve arm_mean_difference(const Dataset& ds) {
    Eigen::VectorXd m1 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ds.outcome_grid().size()));
    Eigen::VectorXd m0 = m1;
    double n1 = 0, n0 = 0;
    for (const auto& s : ds.samples()) {
        (s.treatment == 1.0 ? m1 : m0) += s.outcome.values();
        (s.treatment == 1.0 ? n1 : n0) += 1;
    }
    return Curve(ds.outcome_grid(), m1 / n1 - m0 / n0);
}

}  // namespace

TEST_CASE("estimator names") {
    CHECK(all_estimators().size() == 8);
    for (EstimatorKind k : all_estimators()) CHECK(estimator_from_string(to_string(k)) == k);
    CHECK(to_string(EstimatorKind::SrvfOperatorKernel) == "srvf-operator-kernel");
    CHECK_THROWS_AS(estimator_from_string("lasso"), DomainError);
    CHECK(supports_continuous(EstimatorKind::IterativeSrvf));
    CHECK_FALSE(supports_continuous(EstimatorKind::FrechetFr));
}

TEST_CASE("sanity ladder on clean randomized data") {
    for (std::uint64_t seed : {1, 2, 3}) {
        const Simulation sim = clean_binary(seed);
        EstimateOptions o;
        o.kernel.lambda = 1e-10;
        for (EstimatorKind k : {EstimatorKind::Ipw, EstimatorKind::Dr, EstimatorKind::FrechetEuclid, EstimatorKind::Kernel}) {
            const EffectEstimate e = estimate(sim.data, k, o);
            INFO(e.estimator << " seed " << seed);
            CHECK(e.estimator == to_string(k));
            CHECK(effect_error(e.effect, sim.truth).mae <= 1e-3);
        }
    }
}

TEST_CASE("frechet-euclid reduces to the arm mean difference without covariates") {
    ScenarioConfig cfg;
    cfg.n = 60;
    cfg.T = 30;
    cfg.covariate_dim = 0;
    cfg.confounding = 0.0;
    cfg.seed = 8;
    const Dataset ds = generate(cfg).data;
    const EffectEstimate e = estimate(ds, EstimatorKind::FrechetEuclid);
    CHECK((e.effect.delta.values() - arm_mean_difference(ds).values()).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(e.metadata.at("metric") == "euclidean");
}

TEST_CASE("binary-only estimators reject continuous treatments") {
    ScenarioConfig cfg;
    cfg.scenario = Scenario::ContinuousFunctional;
    cfg.n = 20;
    cfg.T = 16;
    const Dataset ds = generate(cfg).data;
    for (EstimatorKind k : all_estimators())
        if (!supports_continuous(k)) CHECK_THROWS_AS(estimate(ds, k), DomainError);
    EstimateOptions o;
    o.kernel.lambda = 1e-2;
    o.kernel.bandwidth_multiplier = 1.0;
    o.kernel.output_multiplier = 1.0;
    const EffectEstimate e = estimate(ds, EstimatorKind::OperatorKernel, o);
    CHECK(e.effect.delta.size() == 16);
    CHECK(e.metadata.count("curve_kernel") == 1);
}

TEST_CASE("kernel estimators record their configuration") {
    const Simulation sim = clean_binary(4, 30, 16);
    EstimateOptions o;
    o.kernel.lambda = 1e-3;
    o.kernel.bandwidth_multiplier = 1.0;
    o.kernel.output_multiplier = 1.0;
    CHECK(estimate(sim.data, EstimatorKind::Kernel, o).metadata.at("output_kernel") == "identity");
    CHECK(estimate(sim.data, EstimatorKind::OperatorKernel, o).metadata.at("output_kernel") != "identity");
    const EffectEstimate it = estimate(sim.data, EstimatorKind::IterativeSrvf, o);
    CHECK(it.metadata.at("iterations") == "1");
    CHECK(it.metadata.at("converged") == "true");
}

TEST_CASE("optional confidence interval") {
    ScenarioConfig cfg;
    cfg.n = 60;
    cfg.T = 20;
    cfg.seed = 2;
    const Dataset ds = generate(cfg).data;
    CHECK_FALSE(estimate(ds, EstimatorKind::Ipw).ci.has_value());
    EstimateOptions o;
    o.ci_level = 0.9;
    const EffectEstimate e = estimate(ds, EstimatorKind::Ipw, o);
    REQUIRE(e.ci.has_value());
    CHECK(e.ci->level == 0.9);
    CHECK(e.ci->estimate == doctest::Approx(l2_norm(e.effect.delta)).epsilon(1e-12));

    cfg.scenario = Scenario::ContinuousFunctional;
    CHECK_THROWS_AS(estimate(generate(cfg).data, EstimatorKind::Kernel, o), DomainError);
}
