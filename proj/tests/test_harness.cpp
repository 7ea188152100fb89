#include "aseplab/errors.hpp"
#include "aseplab/experiments.hpp"
#include "aseplab/harness.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace aseplab;

namespace
{
    std::filesystem::path scratch(const std::string &name)
    {
        const auto dir = std::filesystem::temp_directory_path() / ("aseplab-test-" + name);
        std::filesystem::remove_all(dir);
        std::filesystem::create_directories(dir);
        return dir;
    }

    ReplicaRecord toy(std::uint64_t index, std::uint64_t seed)
    {
        ReplicaRecord r;
        r.values = {static_cast<double>(index), static_cast<double>(seed % 1000)};
        return r;
    }
} // namespace

TEST_CASE("config parse and echo round trip")
{
    std::istringstream in("# identity run\n"
                          "kind = identity\n"
                          "p = 0.7   # q follows\n"
                          "rho = 0.3\n"
                          "times = 10, 50\n"
                          "speeds = 0, 0.16\n"
                          "replicas = 400\n"
                          "seed = 12\n"
                          "window_scale = 2\n"
                          "\n");
    const ExperimentConfig c = parse_config(in);
    CHECK(c.kind == ExperimentKind::Identity);
    CHECK(c.params.q == doctest::Approx(0.3));
    CHECK(c.times == std::vector<double>{10.0, 50.0});
    CHECK(c.replicas == 400);
    CHECK(c.windowScale == 2.0);
    CHECK_NOTHROW(c.validate());

    std::istringstream again(echo_config(c));
    const ExperimentConfig d = parse_config(again);
    CHECK(echo_config(d) == echo_config(c));
    CHECK(d.params.p == c.params.p);
    CHECK(d.speeds == c.speeds);

    std::istringstream grid("grid = 16, 8\n");
    CHECK(parse_config(grid).times == geometric_grid(16.0, 8));
    CHECK(geometric_grid(16.0, 8).back() == 2048.0);
}

TEST_CASE("config rejects bad input")
{
    ExperimentConfig c;
    CHECK_THROWS_AS(set_config_key(c, "colour", "red"), ValidationError);
    CHECK_THROWS_AS(set_config_key(c, "replicas", "ten"), ValidationError);
    CHECK_THROWS_AS(set_config_key(c, "kind", "nonsense"), ValidationError);
    std::istringstream noEquals("replicas 10\n");
    CHECK_THROWS_AS(parse_config(noEquals), ValidationError);
    CHECK_THROWS_AS(load_config("/nonexistent/aseplab.cfg"), ValidationError);

    c.times = {10.0};
    c.params = Params::make(0.7, 0.3);
    c.replicas = 0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c.replicas = 50;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c.replicas = 100;
    CHECK_NOTHROW(c.validate());
    c.times = {10.0, 5.0};
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c.times = {0.0};
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c.kind = ExperimentKind::CouplingAudit;
    c.replicas = 1;
    CHECK_NOTHROW(c.validate());
    c.params.lambda = 0.5;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c.params.lambda.reset();
    c.moments = {3.0};
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c.moments = {1.0};
    c.windowScale = 0.5;
    CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("window scaling")
{
    CHECK(scale_window(Window::make(-10, 15), 2.0) == Window::make(-20, 30));
    CHECK(scale_window(Window::make(-3, 3), 1.5) == Window::make(-5, 5));
    CHECK_THROWS_AS(scale_window(Window::ring(5), 2.0), ValidationError);
}

TEST_CASE("replica results do not depend on thread count or completion order")
{
    RunOptions one;
    one.threads = 1;
    RunOptions many;
    many.threads = 8;
    const auto a = run_replicas(500, 7, toy, one);
    const auto b = run_replicas(500, 7, toy, many);
    REQUIRE(a.size() == 500);
    for (std::size_t i = 0; i < a.size(); ++i)
    {
        CHECK(a[i].index == i);
        CHECK(a[i].seed == derive_seed(7, i));
        CHECK(a[i].values == b[i].values);
    }
    auto shuffled = a;
    std::shuffle(shuffled.begin(), shuffled.end(), std::mt19937_64(3));
    const auto sorted = canonical_order(shuffled);
    for (std::size_t i = 0; i < a.size(); ++i)
    {
        CHECK(sorted[i].index == i);
    }
    CHECK(column(a, 0)[17] == 17.0);
}

TEST_CASE("summaries are invariant under record order")
{
    ExperimentConfig c;
    c.kind = ExperimentKind::Identity;
    c.params = Params::make(0.7, 0.3);
    c.times = {5.0};
    c.replicas = 200;
    c.threads = 4;
    std::vector<ReplicaRecord> records;
    std::mt19937_64 gen(5);
    std::poisson_distribution<int> pois(3.0);
    for (std::uint64_t i = 0; i < 200; ++i)
    {
        ReplicaRecord r;
        r.index = i;
        r.values = {static_cast<double>(pois(gen)), static_cast<double>(pois(gen)), static_cast<double>(pois(gen)),
                    static_cast<double>(pois(gen))};
        records.push_back(r);
    }
    auto shuffled = records;
    std::shuffle(shuffled.begin(), shuffled.end(), gen);
    CHECK(to_json(summarize_identity(c, records)).dump() == to_json(summarize_identity(c, shuffled)).dump());
}

TEST_CASE("replica failures name the replica and seed")
{
    const ReplicaFn bad = [](std::uint64_t index, std::uint64_t seed) {
        if (index == 13)
        {
            throw InvariantViolation("ordering broke");
        }
        return toy(index, seed);
    };
    try
    {
        run_replicas(40, 9, bad);
        FAIL("expected a failure");
    }
    catch (const InvariantViolation &e)
    {
        const std::string what = e.what();
        CHECK(what.find("replica 13") != std::string::npos);
        CHECK(what.find(std::to_string(derive_seed(9, 13))) != std::string::npos);
    }
}

TEST_CASE("manifest resume skips finished replicas")
{
    const auto dir = scratch("manifest");
    RunOptions o;
    o.manifest = dir / "manifest.jsonl";
    o.fingerprint = "toy";
    const auto full = run_replicas(60, 3, toy, o);

    // Keep the header and the first 20 records, then tear the next line.
    std::ifstream in(o.manifest);
    std::string line, kept;
    for (int i = 0; i < 21 && std::getline(in, line); ++i)
    {
        kept += line + '\n';
    }
    std::getline(in, line);
    in.close();
    std::ofstream(o.manifest, std::ios::trunc) << kept << line.substr(0, line.size() / 2);

    int calls = 0;
    const ReplicaFn counting = [&](std::uint64_t index, std::uint64_t seed) {
        ++calls;
        return toy(index, seed);
    };
    o.threads = 1;
    const auto resumed = run_replicas(60, 3, counting, o);
    CHECK(calls == 40);
    for (std::size_t i = 0; i < full.size(); ++i)
    {
        CHECK(resumed[i].values == full[i].values);
    }

    RunOptions other = o;
    other.fingerprint = "different";
    CHECK_THROWS_AS(run_replicas(60, 3, toy, other), ValidationError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("exponent fit on an exact power law")
{
    const std::vector<double> t = geometric_grid(4.0, 8);
    std::vector<double> v, se0, se;
    for (double x : t)
    {
        v.push_back(0.7 * std::pow(x, 2.0 / 3.0));
        se0.push_back(0.0);
        se.push_back(0.01 * v.back());
    }
    const ScalingFit unit = fit_exponent(t, v, se0);
    CHECK(unit.alpha == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(unit.prefactor == doctest::Approx(0.7).epsilon(1e-10));
    CHECK_FALSE(unit.curved);
    const ScalingFit weighted = fit_exponent(t, v, se);
    CHECK(std::abs(weighted.alpha - 2.0 / 3.0) < 1e-12);
    CHECK(weighted.ci.lo <= weighted.alpha);
    CHECK(weighted.ci.hi >= weighted.alpha);

    std::vector<double> bent;
    for (double x : t)
    {
        const double l = std::log(x);
        bent.push_back(std::exp(0.5 * l + 0.05 * l * l));
    }
    CHECK(fit_exponent(t, bent, se).curved);
}

TEST_CASE("degenerate series are rejected")
{
    const std::vector<double> t = geometric_grid(4.0, 8);
    const std::vector<double> ones(8, 1.0), zeros(8, 0.0);
    CHECK_THROWS_AS(fit_exponent({1, 2, 4, 8}, {1, 2, 3, 4}, {0, 0, 0, 0}), ValidationError);
    CHECK_THROWS_AS(fit_exponent({1, 2, 3, 4, 5}, {1, 2, 3, 4, 5}, {0, 0, 0, 0, 0}), ValidationError);
    std::vector<double> withZero = ones;
    withZero[3] = 0.0;
    CHECK_THROWS_AS(fit_exponent(t, withZero, zeros), ValidationError);
    std::vector<double> mixed = zeros;
    mixed[2] = 0.1;
    CHECK_THROWS_AS(fit_exponent(t, ones, mixed), ValidationError);
    CHECK_NOTHROW(fit_exponent(t, ones, zeros));
}

TEST_CASE("moment table")
{
    const Params p = Params::make(1.0, 0.5);
    const std::vector<double> times{1.0, 8.0};
    std::vector<std::vector<double>> samples(2);
    for (int i = 0; i < 200; ++i)
    {
        samples[0].push_back(i % 2 == 0 ? 1.0 : -1.0);
        samples[1].push_back(i % 2 == 0 ? 4.0 : -4.0);
    }
    const MomentTable m = moment_table(samples, times, p, 0.5, {1.0, 2.0}, 0.0);
    REQUIRE(m.rows.size() == 4);
    CHECK(m.rows[0].value.value == doctest::Approx(1.0));
    CHECK(m.rows[1].value.value == doctest::Approx(1.0));
    CHECK(m.ratios[0].second == doctest::Approx(1.0));
    REQUIRE(m.rows[3].central);
    CHECK(*m.rows[3].centering == doctest::Approx(0.0));
    CHECK(m.rows[3].central->value == doctest::Approx(16.0 * 200.0 / 199.0 / 16.0));
    CHECK_THROWS_AS(moment_table(samples, times, p, 0.5, {3.0}, 0.0), ValidationError);
}

TEST_CASE("small experiments write their outputs and replay exactly")
{
    const auto dir = scratch("identity");
    ExperimentConfig c;
    c.kind = ExperimentKind::Identity;
    c.params = Params::make(0.7, 0.3);
    c.times = {5.0, 10.0};
    c.replicas = 200;
    c.seed = 4;
    c.output = (dir / "a").string();
    const ExperimentOutcome a = run_experiment(c);
    c.output = (dir / "b").string();
    c.threads = 3;
    const ExperimentOutcome b = run_experiment(c);
    CHECK(a.summary.dump() == b.summary.dump());
    for (const char *f : {"config.echo", "summary.json", "summary.txt", "identity.csv"})
    {
        CHECK(std::filesystem::exists(dir / "a" / f));
    }
    CHECK(!describe(a.summary).empty());
    std::filesystem::remove_all(dir);
}

TEST_CASE("coupling audit at time zero has no violations")
{
    ExperimentConfig c;
    c.kind = ExperimentKind::CouplingAudit;
    c.params = Params::make(0.7, 0.5, 0.4);
    c.times = {0.0, 2.0};
    c.replicas = 20;
    const ExperimentOutcome o = run_experiment(c);
    CHECK(o.violations == 0);
}
