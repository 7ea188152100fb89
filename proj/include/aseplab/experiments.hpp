#pragma once

#include "aseplab/harness.hpp"
#include "aseplab/observables.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace aseplab
{
    struct CurrentPoint
    {
        double t = 0.0;
        double v = 0.0;
        std::int64_t x = 0;
        Estimate mean;
        double meanFormula = 0.0;
        Estimate variance;
        Estimate variancePerTime;
        double sigma2 = 0.0;
    };

    struct CurrentResult
    {
        std::uint64_t replicas = 0;
        std::vector<CurrentPoint> points;
    };

    struct IdentityPoint
    {
        double t = 0.0;
        double V = 0.0;
        std::int64_t x = 0;
        IdentityEstimate estimate;
        Estimate meanJ;
        double meanJFormula = 0.0;
        double meanQFormula = 0.0;
    };

    struct IdentityResult
    {
        std::uint64_t replicas = 0;
        std::vector<IdentityPoint> points;
    };

    struct ScalingPoint
    {
        double t = 0.0;
        std::int64_t x = 0;
        Estimate meanJ;
        double meanJFormula = 0.0;
        Estimate varJ;
        DiffusivityEstimate D;
        Estimate meanQ;
        double meanQFormula = 0.0;
        Estimate mass;
        Estimate firstMoment;
        double firstMomentFormula = 0.0;
        /// Covariance sum over the S(i,t) support computed without Q.
        Estimate directMass;
    };

    struct ScalingResult
    {
        std::uint64_t replicas = 0;
        std::vector<ScalingPoint> points;
        ScalingFit currentFit;
        ScalingFit diffusivityFit;
        MomentTable moments;
        std::vector<TwoPointTable> tables;
    };

    struct LabelTest
    {
        std::int64_t label = 0;
        std::uint64_t ones = 0;
        std::uint64_t n = 0;
        double expected = 0.0;
        bool tested = false;
        TestResult test;
    };

    struct MarkTime
    {
        double t = 0.0;
        std::vector<LabelTest> labels;
        /// Anomalous-mark total over labels too rare to test one by one,
        /// against a Poisson law with the summed expectation.
        std::uint64_t pooledObserved = 0;
        double pooledExpected = 0.0;
        double pooledPvalue = 1.0;
        double minPvalue = 1.0;
        /// Cov(1{mark_-1 = 1}, 1{mark_1 = 0}) and its two-sided p-value.
        Estimate productCovariance;
        double productPvalue = 1.0;
        /// Cov(mark_0, J^rho of omega) and its two-sided p-value.
        Estimate currentCovariance;
        double independencePvalue = 1.0;
    };

    struct MarkAuditResult
    {
        std::uint64_t replicas = 0;
        std::int64_t K = 0;
        std::vector<MarkTime> times;
        double fractionA = 0.0;
        double fractionB = 0.0;
        AuditCounters audit;
    };

    struct SegmentTime
    {
        double t = 0.0;
        std::int64_t n = 0;
        std::vector<double> counts;     // N = 0, 1, ..., max observed
        std::vector<double> expected;   // geometric cell probabilities, last cell is the tail
        TestResult geometric;
        Estimate meanN;
        double meanNFormula = 0.0;
    };

    struct SegmentAuditResult
    {
        std::uint64_t replicas = 0;
        std::vector<SegmentTime> times;
        AuditCounters audit;
    };

    struct OracleResult
    {
        int sites = 0;
        int count = 0;
        double t = 0.0;
        std::uint64_t replicas = 0;
        double tv = 0.0;
        /// Mean TV of an exact sampler with this many replicas (normal approximation).
        double tvSamplingScale = 0.0;
        double stationarityResidual = 0.0;
        double detailedBalance = 0.0;
        double changeOfMeasureError = 0.0;
        std::vector<double> exact;
        std::vector<double> empirical;
    };

    CurrentResult run_current(const ExperimentConfig &config);
    IdentityResult run_identity(const ExperimentConfig &config);
    ScalingResult run_scaling(const ExperimentConfig &config);
    MarkAuditResult run_mark_audit(const ExperimentConfig &config);
    SegmentAuditResult run_segment_audit(const ExperimentConfig &config);
    OracleResult run_oracle_compare(const ExperimentConfig &config);

    /// Summaries from replica records; each depends only on the records'
    /// contents and indices, never on their order.
    CurrentResult summarize_current(const ExperimentConfig &config, std::vector<ReplicaRecord> records);
    IdentityResult summarize_identity(const ExperimentConfig &config, std::vector<ReplicaRecord> records);

    nlohmann::json to_json(const CurrentResult &r);
    nlohmann::json to_json(const IdentityResult &r);
    nlohmann::json to_json(const ScalingResult &r);
    nlohmann::json to_json(const MarkAuditResult &r);
    nlohmann::json to_json(const SegmentAuditResult &r);
    nlohmann::json to_json(const OracleResult &r);
    nlohmann::json to_json(const AuditCounters &a);
    nlohmann::json to_json(const ScalingFit &f);

    struct ExperimentOutcome
    {
        nlohmann::json summary;
        std::string text;
        std::uint64_t violations = 0;
    };

    /// Runs the configured experiment, writes its output directory when
    /// config.output is set and returns the summary.
    ExperimentOutcome run_experiment(const ExperimentConfig &config);

    /// Human-readable rendering of a summary.json document.
    std::string describe(const nlohmann::json &summary);
} // namespace aseplab
