#pragma once

#include "aseplab/couplings.hpp"
#include "aseplab/lattice.hpp"
#include "aseplab/stats.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace aseplab
{
    enum class ExperimentKind
    {
        Current,
        Identity,
        ScalingCurrent,
        ScalingDiffusivity,
        MarkAudit,
        CouplingAudit,
        SegmentAudit,
        OracleCompare,
    };

    std::string to_string(ExperimentKind kind);
    ExperimentKind parse_kind(const std::string &name);

    struct ExperimentConfig
    {
        ExperimentKind kind = ExperimentKind::Identity;
        Params params;
        std::int64_t u = 1;
        std::vector<double> times;
        /// Observer speeds; empty selects the experiment's default set.
        std::vector<double> speeds;
        std::uint64_t replicas = 1000;
        std::uint64_t seed = 1;
        std::string output;
        /// Multiplies the window half-widths (truncation checks use 2).
        double windowScale = 1.0;
        /// 0 uses the hardware concurrency; ASEPLAB_THREADS overrides either.
        unsigned threads = 0;
        MarkDynamics dynamics = MarkDynamics::Coupled;
        Conditioning conditioning = Conditioning::None;
        int ringSites = 5;
        int ringCount = 2;
        std::vector<double> moments{1.0, 2.0};
        /// Lower end of the moment-ratio range; 0 means the first grid time.
        double t0 = 0.0;

        /// lambda if set, otherwise rho - 0.1 clipped at 0.
        double lambda() const;
        void validate() const;
    };

    /// Sets one `key = value` entry; unknown keys and bad values throw ValidationError.
    void set_config_key(ExperimentConfig &config, const std::string &key, const std::string &value);
    /// Flat `key = value` text with `#` comments.
    ExperimentConfig parse_config(std::istream &in, ExperimentConfig base = {});
    ExperimentConfig load_config(const std::filesystem::path &path, ExperimentConfig base = {});
    /// Canonical `key = value` listing; parse_config(echo_config(c)) reproduces c.
    std::string echo_config(const ExperimentConfig &config);

    /// {t_min 2^k : k = 0..points-1}.
    std::vector<double> geometric_grid(double tMin, int points);

    /// Scales both ends of a frozen window about the origin.
    Window scale_window(const Window &window, double factor);

    struct ReplicaRecord
    {
        std::uint64_t index = 0;
        std::uint64_t seed = 0;
        std::vector<double> values;
        AuditCounters audit;
        std::vector<AuditRecord> trail;
    };

    using ReplicaFn = std::function<ReplicaRecord(std::uint64_t index, std::uint64_t seed)>;

    struct RunOptions
    {
        unsigned threads = 0;
        /// JSONL manifest of finished replicas; empty disables resume.
        std::filesystem::path manifest;
        /// Stored in the manifest header; a mismatch refuses to resume.
        std::string fingerprint;
    };

    /// Threads used for a requested pool size after the environment override.
    unsigned pool_size(unsigned requested);

    /// Runs replicas 0..count-1 with seeds derive_seed(master, index) on a
    /// thread pool and returns them in index order. A replica that throws stops
    /// the pool and the error is rethrown with the replica index and seed.
    std::vector<ReplicaRecord> run_replicas(std::uint64_t count, std::uint64_t master, const ReplicaFn &fn,
                                            const RunOptions &options = {});

    /// Column j of every record, in index order.
    std::vector<double> column(const std::vector<ReplicaRecord> &records, std::size_t j);
    AuditCounters total_audit(const std::vector<ReplicaRecord> &records);
    /// Records sorted by index; summaries depend on this order only.
    std::vector<ReplicaRecord> canonical_order(std::vector<ReplicaRecord> records);

    std::string audit_json_line(const AuditRecord &record);

    struct ScalingFit
    {
        std::vector<double> times;
        std::vector<double> values;
        std::vector<double> se;
        double alpha = 0.0;
        double alphaSe = 0.0;
        Interval ci;
        double prefactor = 0.0;
        std::vector<double> residuals;
        double chi2 = 0.0;
        std::size_t dof = 0;
        /// Quadratic term of a log-log fit and its standard error.
        double curvature = 0.0;
        double curvatureSe = 0.0;
        /// |curvature| > 3 standard errors: the series bends on the grid.
        bool curved = false;
    };

    /// Weighted least squares of log value on log t with weights from the
    /// relative errors (unit weights when every se is zero).
    ScalingFit fit_exponent(std::vector<double> times, std::vector<double> values, std::vector<double> se,
                            double confidence = 0.95);

    struct MomentRow
    {
        double t = 0.0;
        double m = 0.0;
        Estimate value;
        /// m = 2 only: Var(Q) / t^{4/3} = t D(t) / t^{4/3} and the centering
        /// term (E Q - [V t])^2 / t^{4/3} that separates it from the m = 2 entry.
        std::optional<Estimate> central;
        std::optional<double> centering;
    };

    struct MomentTable
    {
        double t0 = 0.0;
        std::vector<MomentRow> rows;
        /// (m, max / min over t >= t0) for each order.
        std::vector<std::pair<double, double>> ratios;
    };

    /// samples[i] holds Q at times[i], one entry per replica.
    MomentTable moment_table(const std::vector<std::vector<double>> &samples, const std::vector<double> &times,
                             const Params &params, double rho, const std::vector<double> &orders, double t0);
} // namespace aseplab
