#include "aseplab/errors.hpp"
#include "aseplab/experiments.hpp"
#include "aseplab/harness.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

namespace
{
    using namespace aseplab;

    constexpr int kOk = 0;
    constexpr int kValidation = 2;
    constexpr int kAssertion = 3;

    /// Flag values kept as text and applied through the config parser, so a
    /// flag and the same key in a config file behave identically.
    struct Overrides
    {
        std::string configPath;
        std::map<std::string, std::string> values;

        void add(CLI::App *app, const std::string &flag, const std::string &key, const std::string &help)
        {
            app->add_option(flag, values[key], help);
        }

        ExperimentConfig build(ExperimentConfig base) const
        {
            if (!configPath.empty())
            {
                base = load_config(configPath, base);
            }
            for (const auto &[key, value] : values)
            {
                if (!value.empty())
                {
                    set_config_key(base, key, value);
                }
            }
            return base;
        }
    };

    void add_common(CLI::App *app, Overrides &o)
    {
        app->add_option("--config", o.configPath, "key = value configuration file");
        o.add(app, "--p", "p", "right jump rate (q = 1 - p)");
        o.add(app, "--rho", "rho", "density");
        o.add(app, "--t", "times", "sample times, comma separated");
        o.add(app, "--replicas", "replicas", "number of replicas");
        o.add(app, "--seed", "seed", "master seed");
        o.add(app, "--out", "output", "output directory");
        o.add(app, "--threads", "threads", "worker threads (ASEPLAB_THREADS overrides)");
        o.add(app, "--window-scale", "window_scale", "multiplier of the window half-width");
    }

    ExperimentConfig defaults(ExperimentKind kind)
    {
        ExperimentConfig c;
        c.kind = kind;
        switch (kind)
        {
        case ExperimentKind::ScalingCurrent:
        case ExperimentKind::ScalingDiffusivity:
            c.params = Params::make(1.0, 0.5);
            c.times = geometric_grid(16.0, 8);
            c.replicas = 2000;
            break;
        case ExperimentKind::MarkAudit:
        case ExperimentKind::CouplingAudit:
        case ExperimentKind::SegmentAudit:
            c.params = Params::make(0.7, 0.5, 0.4);
            c.times = kind == ExperimentKind::SegmentAudit ? std::vector<double>{5, 20, 50} : std::vector<double>{0, 5, 25};
            c.u = 5;
            break;
        case ExperimentKind::OracleCompare:
            c.params = Params::make(0.7, 0.5);
            c.times = {1.0};
            c.replicas = 100000;
            break;
        default:
            c.params = Params::make(0.7, 0.3);
            c.times = {50.0};
            break;
        }
        return c;
    }

    int run(const ExperimentConfig &config)
    {
        const ExperimentOutcome outcome = run_experiment(config);
        std::cout << outcome.text;
        if (outcome.violations > 0)
        {
            std::cerr << "error: " << outcome.violations << " coupling assertion violations\n";
            return kAssertion;
        }
        return kOk;
    }

    int report(const std::string &dir)
    {
        std::ifstream in(std::filesystem::path(dir) / "summary.json");
        require(static_cast<bool>(in), "no summary.json in '" + dir + "'");
        const nlohmann::json summary = nlohmann::json::parse(in, nullptr, false);
        require(!summary.is_discarded(), "summary.json is malformed");
        std::cout << describe(summary);
        return kOk;
    }
} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Exclusion process simulator and verification harness"};
    app.require_subcommand(1);

    Overrides simulate, identity, scaling, audit, oracle;
    std::string auditKind = "coupling";
    std::string reportDir;

    CLI::App *sim = app.add_subcommand("simulate", "stationary currents at observer speeds");
    add_common(sim, simulate);
    simulate.add(sim, "--v", "speeds", "observer speeds, comma separated");

    CLI::App *ide = app.add_subcommand("identity", "variance identity and second class means");
    add_common(ide, identity);
    identity.add(ide, "--v", "speeds", "observer speeds, comma separated");

    CLI::App *sca = app.add_subcommand("scaling", "characteristic current and diffusivity scaling");
    add_common(sca, scaling);
    scaling.add(sca, "--grid", "grid", "geometric grid 't_min, points'");
    scaling.add(sca, "--moments", "moments", "moment orders in [1,3)");
    scaling.add(sca, "--t0", "t0", "lower end of the moment-ratio range");

    CLI::App *aud = app.add_subcommand("audit", "coupling audits");
    add_common(aud, audit);
    aud->add_option("--kind", auditKind, "mark, coupling or segment")
        ->check(CLI::IsMember({"mark", "coupling", "segment"}));
    audit.add(aud, "--lambda", "lambda", "lower density");
    audit.add(aud, "--u", "u", "segment length");
    audit.add(aud, "--v", "speeds", "observer speeds for the current bound");
    audit.add(aud, "--dynamics", "dynamics", "coupled or independent mark dynamics");
    audit.add(aud, "--conditioning", "conditioning", "none, A or B");

    CLI::App *ora = app.add_subcommand("oracle", "ring simulator against exact uniformization");
    add_common(ora, oracle);
    oracle.add(ora, "--ring", "ring", "ring size");
    oracle.add(ora, "--count", "count", "particles on the ring");
    oracle.add(ora, "--lambda", "lambda", "lower density for the change of measure check");

    CLI::App *rep = app.add_subcommand("report", "print the summary of an output directory");
    rep->add_option("dir", reportDir, "output directory")->required();

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        const int code = app.exit(e);
        return code == 0 ? kOk : kValidation;
    }

    try
    {
        if (sim->parsed())
        {
            return run(simulate.build(defaults(ExperimentKind::Current)));
        }
        if (ide->parsed())
        {
            return run(identity.build(defaults(ExperimentKind::Identity)));
        }
        if (sca->parsed())
        {
            return run(scaling.build(defaults(ExperimentKind::ScalingCurrent)));
        }
        if (aud->parsed())
        {
            const ExperimentKind kind = auditKind == "mark"      ? ExperimentKind::MarkAudit
                                        : auditKind == "segment" ? ExperimentKind::SegmentAudit
                                                                 : ExperimentKind::CouplingAudit;
            return run(audit.build(defaults(kind)));
        }
        if (ora->parsed())
        {
            return run(oracle.build(defaults(ExperimentKind::OracleCompare)));
        }
        return report(reportDir);
    }
    catch (const ValidationError &e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return kValidation;
    }
    catch (const InvariantViolation &e)
    {
        std::cerr << "assertion failed: " << e.what() << '\n';
        return kAssertion;
    }
    catch (const TruncationError &e)
    {
        std::cerr << "truncation failed: " << e.what() << '\n';
        return kAssertion;
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return kValidation;
    }
}
