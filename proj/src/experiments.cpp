#include "aseplab/experiments.hpp"

#include "aseplab/clock.hpp"
#include "aseplab/errors.hpp"
#include "aseplab/oracle.hpp"

#include <boost/math/distributions/poisson.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

namespace aseplab
{
    using nlohmann::json;

    namespace
    {
        double vmax_of(const std::vector<double> &speeds)
        {
            double m = 0.0;
            for (double v : speeds)
            {
                m = std::max(m, std::abs(v));
            }
            return m;
        }

        RunOptions run_options(const ExperimentConfig &config, const std::string &tag)
        {
            RunOptions o;
            o.threads = config.threads;
            if (!config.output.empty())
            {
                std::filesystem::create_directories(config.output);
                o.manifest = std::filesystem::path(config.output) / ("manifest-" + tag + ".jsonl");
                o.fingerprint = echo_config(config);
            }
            return o;
        }

        std::ofstream output_file(const ExperimentConfig &config, const std::string &name)
        {
            std::filesystem::create_directories(config.output);
            std::ofstream out(std::filesystem::path(config.output) / name);
            require(static_cast<bool>(out), "cannot write '" + name + "' in " + config.output);
            return out;
        }

        void write_trail(const ExperimentConfig &config, const std::vector<ReplicaRecord> &records)
        {
            if (config.output.empty())
            {
                return;
            }
            std::ofstream out = output_file(config, "audit.jsonl");
            for (const ReplicaRecord &r : records)
            {
                for (const AuditRecord &a : r.trail)
                {
                    out << audit_json_line(a) << '\n';
                }
            }
        }

        void require_inside(const Window &w, std::int64_t site, const char *what)
        {
            if (site <= w.lo || site >= w.hi)
            {
                throw TruncationError(std::string(what) + " reached the window boundary");
            }
        }

        double normal_pvalue(const Estimate &e)
        {
            if (e.se <= 0.0)
            {
                return e.value == 0.0 ? 1.0 : 0.0;
            }
            return std::erfc(std::abs(e.value / e.se) / std::numbers::sqrt2);
        }

        json estimate_json(const Estimate &e)
        {
            return json{{"value", e.value}, {"se", e.se}};
        }

        std::vector<double> default_speeds(const ExperimentConfig &config, std::vector<double> fallback)
        {
            return config.speeds.empty() ? fallback : config.speeds;
        }

        double indicator(bool b)
        {
            return b ? 1.0 : 0.0;
        }
    } // namespace

    // Current of the stationary process at observer speeds.

    CurrentResult summarize_current(const ExperimentConfig &config, std::vector<ReplicaRecord> records)
    {
        records = canonical_order(std::move(records));
        const std::vector<double> speeds = default_speeds(config, {0.0});
        const double rho = config.params.rho;
        CurrentResult result;
        result.replicas = records.size();
        std::size_t col = 0;
        for (double t : config.times)
        {
            for (double v : speeds)
            {
                const std::vector<double> J = column(records, col++);
                CurrentPoint p;
                p.t = t;
                p.v = v;
                p.x = int_toward_zero(v * t);
                p.mean = mean_estimate(J);
                p.meanFormula = mean_current_formula(config.params, rho, v, t);
                p.variance = variance_estimate(J);
                p.variancePerTime = off_characteristic_variance(J, t);
                p.sigma2 = sigma_squared(config.params, rho, v);
                result.points.push_back(p);
            }
        }
        return result;
    }

    CurrentResult run_current(const ExperimentConfig &config)
    {
        config.validate();
        const std::vector<double> speeds = default_speeds(config, {0.0});
        const double horizon = config.times.back();
        const Window window =
            scale_window(Window::centered(light_cone_half_width(vmax_of(speeds), horizon)), config.windowScale);
        const Params params = config.params;
        const auto fn = [&](std::uint64_t, std::uint64_t seed) {
            HeightState state = init_height(sample_bernoulli(window, params.rho, seed));
            ClockStream clock(seed, window, params, horizon);
            ReplicaRecord r;
            for (double t : config.times)
            {
                clock.run_until(t, [&](const ClockEvent &e) { state.apply(e.bond(window), e.dir); });
                for (double v : speeds)
                {
                    r.values.push_back(static_cast<double>(current(state, v, t)));
                }
            }
            ensure(state.gradient_ok(), "height gradient broken");
            r.audit.events = clock.emitted();
            return r;
        };
        std::vector<ReplicaRecord> records = run_replicas(config.replicas, config.seed, fn, run_options(config, "current"));
        CurrentResult result = summarize_current(config, std::move(records));
        if (!config.output.empty())
        {
            std::vector<CurrentRow> rows;
            for (const CurrentPoint &p : result.points)
            {
                rows.push_back({p.t, p.v, p.mean.value, p.variance});
            }
            std::ofstream out = output_file(config, "current.csv");
            write_current_csv(out, rows);
        }
        return result;
    }

    // Variance identity and second class means from two independent pairs.

    IdentityResult summarize_identity(const ExperimentConfig &config, std::vector<ReplicaRecord> records)
    {
        records = canonical_order(std::move(records));
        const Params &params = config.params;
        const double rho = params.rho;
        const std::vector<double> speeds = default_speeds(config, {0.0, char_speed(rho, params)});
        IdentityResult result;
        result.replicas = records.size();
        const std::size_t stride = speeds.size() + 2;
        for (std::size_t ti = 0; ti < config.times.size(); ++ti)
        {
            const double t = config.times[ti];
            const std::vector<double> Q = column(records, ti * stride + speeds.size());
            const std::vector<double> Qa = column(records, ti * stride + speeds.size() + 1);
            for (std::size_t vi = 0; vi < speeds.size(); ++vi)
            {
                const std::vector<double> J = column(records, ti * stride + vi);
                IdentityPoint p;
                p.t = t;
                p.V = speeds[vi];
                p.x = int_toward_zero(p.V * t);
                p.estimate = variance_identity_estimators(J, Q, Qa, rho, p.x);
                p.meanJ = mean_estimate(J);
                p.meanJFormula = mean_current_formula(params, rho, p.V, t);
                p.meanQFormula = mean_displacement(params, rho, t);
                result.points.push_back(p);
            }
        }
        return result;
    }

    IdentityResult run_identity(const ExperimentConfig &config)
    {
        config.validate();
        const Params params = config.params;
        require(params.rho > 0.0 && params.rho < 1.0, "identity experiment needs 0 < rho < 1");
        const std::vector<double> speeds = default_speeds(config, {0.0, char_speed(params.rho, params)});
        const double horizon = config.times.back();
        const double vmax = std::max(vmax_of(speeds), std::abs(char_speed(params.rho, params)));
        const Window window = scale_window(Window::centered(light_cone_half_width(vmax, horizon)), config.windowScale);
        const auto fn = [&](std::uint64_t, std::uint64_t seed) {
            const std::uint64_t seedB = derive_seed(seed, 1);
            SecondClassPair a(window, params.rho, seed);
            SecondClassPair b(window, params.rho, seedB);
            ClockStream ca(seed, window, params, horizon);
            ClockStream cb(seedB, window, params, horizon);
            ReplicaRecord r;
            for (double t : config.times)
            {
                ca.run_until(t, [&](const ClockEvent &e) { a.step(e); });
                cb.run_until(t, [&](const ClockEvent &e) { b.step(e); });
                require_inside(window, a.discrepancy(), "second class particle");
                require_inside(window, b.discrepancy(), "second class antiparticle");
                for (double v : speeds)
                {
                    r.values.push_back(static_cast<double>(a.stationary_current(int_toward_zero(v * t))));
                }
                r.values.push_back(static_cast<double>(a.discrepancy()));
                r.values.push_back(static_cast<double>(b.discrepancy()));
            }
            r.audit.events = ca.emitted() + cb.emitted();
            return r;
        };
        std::vector<ReplicaRecord> records =
            run_replicas(config.replicas, config.seed, fn, run_options(config, "identity"));
        IdentityResult result = summarize_identity(config, std::move(records));
        if (!config.output.empty())
        {
            std::ofstream out = output_file(config, "identity.csv");
            out << "t,V,x,var_J,var_J_se,rhs,rhs_se,rhs_a,rhs_a_se,mean_Q,mean_Q_se,mean_Qa,mean_Qa_se\n";
            char buf[512];
            for (const IdentityPoint &p : result.points)
            {
                const IdentityEstimate &e = p.estimate;
                std::snprintf(buf, sizeof buf, "%.15g,%.15g,%lld,%.15g,%.15g,%.15g,%.15g,%.15g,%.15g,%.15g,%.15g,%.15g,%.15g\n",
                              p.t, p.V, static_cast<long long>(p.x), e.lhs.value, e.lhs.se, e.rhs.value, e.rhs.se,
                              e.rhsA.value, e.rhsA.se, e.meanQ.value, e.meanQ.se, e.meanQa.value, e.meanQa.se);
                out << buf;
            }
            std::vector<CurrentRow> rows;
            for (const IdentityPoint &p : result.points)
            {
                rows.push_back({p.t, p.V, p.meanJ.value, p.estimate.lhs});
            }
            std::ofstream cur = output_file(config, "current.csv");
            write_current_csv(cur, rows);
        }
        return result;
    }

    // Characteristic current and second class scaling from one pair per replica.

    ScalingResult run_scaling(const ExperimentConfig &config)
    {
        config.validate();
        const Params params = config.params;
        const double rho = params.rho;
        require(rho > 0.0 && rho < 1.0, "scaling experiment needs 0 < rho < 1");
        const double V = char_speed(rho, params);
        const double horizon = config.times.back();
        const Window window = scale_window(Window::centered(light_cone_half_width(V, horizon)), config.windowScale);
        const auto fn = [&](std::uint64_t, std::uint64_t seed) {
            SecondClassPair pair(window, rho, seed);
            ClockStream clock(seed, window, params, horizon);
            ReplicaRecord r;
            r.values.push_back(indicator(pair.origin_occupied()));
            for (double t : config.times)
            {
                clock.run_until(t, [&](const ClockEvent &e) { pair.step(e); });
                require_inside(window, pair.discrepancy(), "second class particle");
                const std::int64_t x = int_toward_zero(V * t);
                const std::int64_t half = two_point_half_width(t);
                r.values.push_back(static_cast<double>(pair.stationary_current(x)));
                r.values.push_back(static_cast<double>(pair.discrepancy()));
                r.values.push_back(static_cast<double>(pair.stationary_count(x - half, x + half)));
            }
            r.audit.events = clock.emitted();
            return r;
        };
        std::vector<ReplicaRecord> records = canonical_order(
            run_replicas(config.replicas, config.seed, fn, run_options(config, "scaling")));

        ScalingResult result;
        result.replicas = records.size();
        const std::vector<double> origin = column(records, 0);
        std::vector<std::vector<double>> qSamples;
        std::vector<double> varJ, varJse, D, Dse;
        for (std::size_t ti = 0; ti < config.times.size(); ++ti)
        {
            const double t = config.times[ti];
            const std::vector<double> J = column(records, 1 + 3 * ti);
            const std::vector<double> Q = column(records, 2 + 3 * ti);
            const std::vector<double> count = column(records, 3 + 3 * ti);
            ScalingPoint p;
            p.t = t;
            p.x = int_toward_zero(V * t);
            p.meanJ = mean_estimate(J);
            p.meanJFormula = mean_current_formula(params, rho, V, t);
            p.varJ = variance_estimate(J);
            p.D = diffusivity(Q, t, params, rho);
            p.meanQ = mean_estimate(Q);
            p.meanQFormula = mean_displacement(params, rho, t);
            TwoPointTable table = two_point_estimate(Q, t, params, rho);
            p.mass = table.mass;
            p.firstMoment = table.firstMoment;
            p.firstMomentFormula = rho * (1.0 - rho) * p.meanQFormula;
            p.directMass = direct_two_point_mass(count, origin);
            result.points.push_back(p);
            result.tables.push_back(std::move(table));
            varJ.push_back(p.varJ.value);
            varJse.push_back(p.varJ.se);
            D.push_back(p.D.fromTable.value);
            Dse.push_back(p.D.fromTable.se);
            qSamples.push_back(Q);
        }
        if (config.times.size() >= 5 && std::log10(config.times.back() / config.times.front()) >= 1.5 - 1e-12)
        {
            result.currentFit = fit_exponent(config.times, varJ, varJse);
            result.diffusivityFit = fit_exponent(config.times, D, Dse);
        }
        result.moments = moment_table(qSamples, config.times, params, rho, config.moments, config.t0);

        if (!config.output.empty())
        {
            std::vector<CurrentRow> rows;
            std::vector<DiffusivityRow> drows;
            for (const ScalingPoint &p : result.points)
            {
                rows.push_back({p.t, V, p.meanJ.value, p.varJ});
                drows.push_back({p.t, p.D.fromTable});
            }
            std::ofstream cur = output_file(config, "current.csv");
            write_current_csv(cur, rows);
            std::ofstream tp = output_file(config, "two_point.csv");
            write_two_point_csv(tp, result.tables);
            std::ofstream dif = output_file(config, "diffusivity.csv");
            write_diffusivity_csv(dif, drows);
            std::ofstream mom = output_file(config, "moments.csv");
            mom << "t,m,value,se\n";
            char buf[256];
            for (const MomentRow &row : result.moments.rows)
            {
                std::snprintf(buf, sizeof buf, "%.15g,%.15g,%.15g,%.15g\n", row.t, row.m, row.value.value, row.value.se);
                mom << buf;
            }
        }
        return result;
    }

    // Five-process runs: mark law, coupling claims and event frequencies.

    namespace
    {
        struct FiveRun
        {
            std::int64_t K = 0;
            std::vector<ReplicaRecord> records;
        };

        FiveRun run_five(const ExperimentConfig &config)
        {
            config.validate();
            const Params params = config.params;
            FiveProcessOptions options;
            options.lambda = config.lambda();
            options.dynamics = config.dynamics;
            options.conditioning = config.conditioning;
            const std::int64_t K = mark_truncation(params);
            const double V = char_speed(params.rho, params);
            const double horizon = config.times.back();
            const Window window =
                scale_window(five_process_window(params, options.lambda, K, V, horizon), config.windowScale);
            const auto fn = [&](std::uint64_t, std::uint64_t seed) {
                FiveProcess fp(window, params, options, seed);
                ClockStream main(seed, window, params, horizon);
                std::optional<ClockStream> marks;
                if (options.dynamics == MarkDynamics::IndependentClocks)
                {
                    ClockOptions mo;
                    mo.tag = StreamTag::MarkClock;
                    marks.emplace(seed, window, params, horizon, mo);
                }
                ReplicaRecord r;
                for (double t : config.times)
                {
                    fp.run_until(t, main, marks ? &*marks : nullptr);
                    for (std::uint8_t m : fp.marks())
                    {
                        r.values.push_back(m);
                    }
                    r.values.push_back(static_cast<double>(
                        fp.ensemble().member(FiveProcess::Omega).height(int_toward_zero(V * t))));
                    r.values.push_back(indicator(fp.eventA()));
                    r.values.push_back(indicator(fp.eventB()));
                    r.trail.push_back(fp.record(t));
                }
                fp.ensemble().check_orderings();
                r.audit = fp.audit();
                return r;
            };
            FiveRun run;
            run.K = K;
            run.records = canonical_order(
                run_replicas(config.replicas, config.seed, fn, run_options(config, to_string(config.kind))));
            write_trail(config, run.records);
            return run;
        }
    } // namespace

    MarkAuditResult run_mark_audit(const ExperimentConfig &config)
    {
        const FiveRun run = run_five(config);
        const Params &params = config.params;
        const std::int64_t K = run.K;
        const std::size_t labels = static_cast<std::size_t>(2 * K + 1);
        const std::size_t stride = labels + 3;
        MarkAuditResult result;
        result.replicas = run.records.size();
        result.K = K;
        result.audit = total_audit(run.records);
        const auto n = static_cast<double>(run.records.size());
        result.fractionA = sample_mean(column(run.records, labels + 1));
        result.fractionB = sample_mean(column(run.records, labels + 2));

        for (std::size_t ti = 0; ti < config.times.size(); ++ti)
        {
            MarkTime mt;
            mt.t = config.times[ti];
            const std::size_t base = ti * stride;
            double pooledExpected = 0.0;
            std::uint64_t pooledObserved = 0;
            for (std::int64_t k = -K; k <= K; ++k)
            {
                const std::vector<double> col = column(run.records, base + static_cast<std::size_t>(k + K));
                LabelTest lt;
                lt.label = k;
                lt.n = run.records.size();
                lt.ones = static_cast<std::uint64_t>(std::count(col.begin(), col.end(), 1.0));
                lt.expected = mark_probability(k, params);
                const double minority = std::min(lt.expected, 1.0 - lt.expected);
                lt.tested = n * minority >= 5.0;
                if (lt.tested)
                {
                    const double obs[2] = {static_cast<double>(lt.ones), n - static_cast<double>(lt.ones)};
                    const double exp[2] = {lt.expected, 1.0 - lt.expected};
                    lt.test = chi_square_gof(obs, exp);
                    mt.minPvalue = std::min(mt.minPvalue, lt.test.pvalue);
                }
                else
                {
                    // Minority value: 0 above label 0, 1 below it.
                    const bool minorityIsOne = lt.expected < 0.5;
                    pooledObserved += minorityIsOne ? lt.ones : lt.n - lt.ones;
                    pooledExpected += n * minority;
                }
                mt.labels.push_back(lt);
            }
            mt.pooledObserved = pooledObserved;
            mt.pooledExpected = pooledExpected;
            if (pooledExpected <= 0.0)
            {
                mt.pooledPvalue = pooledObserved == 0 ? 1.0 : 0.0;
            }
            else
            {
                const boost::math::poisson_distribution<double> law(pooledExpected);
                const auto k = static_cast<double>(pooledObserved);
                const double lower = boost::math::cdf(law, k);
                const double upper = k == 0.0 ? 1.0 : boost::math::cdf(boost::math::complement(law, k - 1.0));
                mt.pooledPvalue = std::min(1.0, 2.0 * std::min(lower, upper));
            }
            mt.minPvalue = std::min(mt.minPvalue, mt.pooledPvalue);

            const std::vector<double> left = column(run.records, base + static_cast<std::size_t>(K - 1));
            const std::vector<double> right = column(run.records, base + static_cast<std::size_t>(K + 1));
            std::vector<double> a(left.size()), b(right.size());
            std::transform(left.begin(), left.end(), a.begin(), [](double m) { return indicator(m == 1.0); });
            std::transform(right.begin(), right.end(), b.begin(), [](double m) { return indicator(m == 0.0); });
            mt.productCovariance = covariance_estimate(a, b);
            mt.productPvalue = normal_pvalue(mt.productCovariance);

            const std::vector<double> mark0 = column(run.records, base + static_cast<std::size_t>(K));
            const std::vector<double> J = column(run.records, base + labels);
            mt.currentCovariance = covariance_estimate(mark0, J);
            mt.independencePvalue = normal_pvalue(mt.currentCovariance);
            result.times.push_back(std::move(mt));
        }

        if (!config.output.empty())
        {
            std::ofstream out = output_file(config, "marks.csv");
            out << "t,label,ones,n,expected,tested,pvalue\n";
            char buf[256];
            for (const MarkTime &mt : result.times)
            {
                for (const LabelTest &lt : mt.labels)
                {
                    std::snprintf(buf, sizeof buf, "%.15g,%lld,%llu,%llu,%.15g,%d,%.15g\n", mt.t,
                                  static_cast<long long>(lt.label), static_cast<unsigned long long>(lt.ones),
                                  static_cast<unsigned long long>(lt.n), lt.expected, lt.tested ? 1 : 0,
                                  lt.tested ? lt.test.pvalue : 1.0);
                    out << buf;
                }
            }
        }
        return result;
    }

    // Segment-perturbed runs: priority label law and current bound.

    SegmentAuditResult run_segment_audit(const ExperimentConfig &config)
    {
        config.validate();
        const Params params = config.params;
        const double lambda = config.lambda();
        const std::vector<double> speeds =
            default_speeds(config, {0.0, char_speed(lambda, params), char_speed(params.rho, params)});
        const double vmax = vmax_of(speeds);
        std::vector<Window> windows;
        std::vector<SegmentOptions> options;
        for (double t : config.times)
        {
            SegmentOptions o;
            o.lambda = lambda;
            o.t = t;
            o.u = config.u;
            options.push_back(o);
            windows.push_back(scale_window(segment_window(params, o, vmax, t), config.windowScale));
        }
        const auto fn = [&](std::uint64_t, std::uint64_t seed) {
            ReplicaRecord r;
            for (std::size_t ti = 0; ti < config.times.size(); ++ti)
            {
                const double t = config.times[ti];
                const std::uint64_t s = derive_seed(seed, ti);
                SegmentPerturbation seg(windows[ti], params, options[ti], s);
                ClockStream clock(s, windows[ti], params, t);
                seg.run_until(t, clock);
                seg.check_currents(t, speeds);
                seg.ensemble().check_orderings();
                r.values.push_back(static_cast<double>(seg.N()));
                r.values.push_back(static_cast<double>(seg.Q()));
                r.trail.push_back(seg.record(t));
                r.audit += seg.audit();
            }
            return r;
        };
        std::vector<ReplicaRecord> records =
            canonical_order(run_replicas(config.replicas, config.seed, fn, run_options(config, "segment")));
        write_trail(config, records);

        SegmentAuditResult result;
        result.replicas = records.size();
        result.audit = total_audit(records);
        const double r = params.ratio();
        for (std::size_t ti = 0; ti < config.times.size(); ++ti)
        {
            SegmentTime st;
            st.t = config.times[ti];
            st.n = segment_shift(params, lambda, st.t, config.u);
            const std::vector<double> N = column(records, 2 * ti);
            const auto kmax = static_cast<std::size_t>(*std::max_element(N.begin(), N.end()));
            st.counts.assign(kmax + 1, 0.0);
            for (double k : N)
            {
                st.counts[static_cast<std::size_t>(k)] += 1.0;
            }
            // P(N = k) = (1 - r) r^k; the last cell holds P(N >= kmax) = r^kmax.
            for (std::size_t k = 0; k <= kmax; ++k)
            {
                const double pk = std::pow(r, static_cast<double>(k));
                st.expected.push_back(k < kmax ? (1.0 - r) * pk : pk);
            }
            if (r == 0.0)
            {
                st.geometric = TestResult{0.0, 0.0, kmax == 0 ? 1.0 : 0.0};
            }
            else
            {
                st.geometric = chi_square_gof(st.counts, st.expected);
            }
            st.meanN = mean_estimate(N);
            st.meanNFormula = r / (1.0 - r);
            result.times.push_back(std::move(st));
        }

        if (!config.output.empty())
        {
            std::ofstream out = output_file(config, "priority.csv");
            out << "t,k,count,expected\n";
            char buf[256];
            for (const SegmentTime &st : result.times)
            {
                for (std::size_t k = 0; k < st.counts.size(); ++k)
                {
                    std::snprintf(buf, sizeof buf, "%.15g,%zu,%.15g,%.15g\n", st.t, k, st.counts[k],
                                  st.expected[k] * static_cast<double>(result.replicas));
                    out << buf;
                }
            }
        }
        return result;
    }

    // Exact ring oracle against the simulator.

    OracleResult run_oracle_compare(const ExperimentConfig &config)
    {
        config.validate();
        const Params params = config.params;
        OracleResult result;
        result.sites = config.ringSites;
        result.count = config.ringCount;
        result.t = config.times.front();
        result.replicas = config.replicas;

        const GeneratorMatrix g = ring_generator(config.ringSites, params, config.ringCount);
        const Eigen::VectorXd exact = transient_distribution(g, 0, result.t);
        const Eigen::VectorXd empirical = simulate_ring_distribution(g, params, 0, result.t, config.replicas, config.seed);
        result.tv = total_variation(exact, empirical);
        double scale = 0.0;
        for (Eigen::Index i = 0; i < exact.size(); ++i)
        {
            scale += std::sqrt(2.0 * exact(i) * (1.0 - exact(i)) / (std::numbers::pi * static_cast<double>(config.replicas)));
        }
        result.tvSamplingScale = 0.5 * scale;
        result.stationarityResidual = stationarity_check(g, uniform_measure(g));

        for (double p : {0.6, 0.7, 0.9, params.p})
        {
            if (p <= 0.5)
            {
                continue;
            }
            const Params bp = Params::make(p, 0.5);
            for (std::int64_t K : {5, 20, 60})
            {
                result.detailedBalance = std::max(result.detailedBalance, blocking_detailed_balance(bp, K));
            }
        }
        const double rho = params.rho > 0.0 && params.rho < 1.0 ? params.rho : 0.5;
        const double lambda = std::min(config.lambda(), rho);
        for (std::int64_t n = 0; n <= 30; ++n)
        {
            const auto [lhs, rhs] = change_of_measure_identity(rho, lambda, n);
            result.changeOfMeasureError = std::max(result.changeOfMeasureError, std::abs(lhs - rhs) / rhs);
        }
        result.exact.assign(exact.data(), exact.data() + exact.size());
        result.empirical.assign(empirical.data(), empirical.data() + empirical.size());

        if (!config.output.empty())
        {
            std::ofstream golden = output_file(config, "golden.csv");
            write_distribution_csv(golden, g, exact);
            std::ofstream emp = output_file(config, "empirical.csv");
            write_distribution_csv(emp, g, empirical);
        }
        return result;
    }

    // JSON renderings.

    json to_json(const AuditCounters &a)
    {
        return json{{"events", a.events},
                    {"checks", a.checks},
                    {"qaRightOfR", a.qaRightOfR},
                    {"lRightOfQ", a.lRightOfQ},
                    {"qLeftOfQa", a.qLeftOfQa},
                    {"mAboveMq", a.mAboveMq},
                    {"currentBound", a.currentBound},
                    {"heightIdentity", a.heightIdentity},
                    {"heightOrder", a.heightOrder},
                    {"violations", a.violations()}};
    }

    json to_json(const ScalingFit &f)
    {
        return json{{"alpha", f.alpha},          {"alpha_se", f.alphaSe},   {"ci", {f.ci.lo, f.ci.hi}},
                    {"prefactor", f.prefactor},  {"chi2", f.chi2},          {"dof", f.dof},
                    {"residuals", f.residuals},  {"curvature", f.curvature}, {"curvature_se", f.curvatureSe},
                    {"curved", f.curved},        {"times", f.times},        {"values", f.values},
                    {"se", f.se}};
    }

    json to_json(const CurrentResult &r)
    {
        json points = json::array();
        for (const CurrentPoint &p : r.points)
        {
            points.push_back({{"t", p.t},
                              {"v", p.v},
                              {"x", p.x},
                              {"mean", estimate_json(p.mean)},
                              {"mean_formula", p.meanFormula},
                              {"variance", estimate_json(p.variance)},
                              {"variance_per_time", estimate_json(p.variancePerTime)},
                              {"sigma2", p.sigma2}});
        }
        return json{{"kind", "current"}, {"replicas", r.replicas}, {"points", points}};
    }

    json to_json(const IdentityResult &r)
    {
        json points = json::array();
        for (const IdentityPoint &p : r.points)
        {
            const IdentityEstimate &e = p.estimate;
            points.push_back({{"t", p.t},
                              {"V", p.V},
                              {"x", p.x},
                              {"var_J", estimate_json(e.lhs)},
                              {"rhs_Q", estimate_json(e.rhs)},
                              {"rhs_Qa", estimate_json(e.rhsA)},
                              {"mean_Q", estimate_json(e.meanQ)},
                              {"mean_Qa", estimate_json(e.meanQa)},
                              {"mean_Q_formula", p.meanQFormula},
                              {"mean_J", estimate_json(p.meanJ)},
                              {"mean_J_formula", p.meanJFormula}});
        }
        return json{{"kind", "identity"}, {"replicas", r.replicas}, {"points", points}};
    }

    json to_json(const ScalingResult &r)
    {
        json points = json::array();
        for (const ScalingPoint &p : r.points)
        {
            points.push_back({{"t", p.t},
                              {"x", p.x},
                              {"mean_J", estimate_json(p.meanJ)},
                              {"mean_J_formula", p.meanJFormula},
                              {"var_J", estimate_json(p.varJ)},
                              {"D_table", estimate_json(p.D.fromTable)},
                              {"D_variance", estimate_json(p.D.fromVariance)},
                              {"mean_Q", estimate_json(p.meanQ)},
                              {"mean_Q_formula", p.meanQFormula},
                              {"S_mass", estimate_json(p.mass)},
                              {"S_first_moment", estimate_json(p.firstMoment)},
                              {"S_first_moment_formula", p.firstMomentFormula},
                              {"direct_mass", estimate_json(p.directMass)}});
        }
        json moments = json::array();
        for (const MomentRow &row : r.moments.rows)
        {
            json j{{"t", row.t}, {"m", row.m}, {"value", estimate_json(row.value)}};
            if (row.central)
            {
                j["central"] = estimate_json(*row.central);
                j["centering"] = *row.centering;
            }
            moments.push_back(j);
        }
        json ratios = json::array();
        for (const auto &[m, ratio] : r.moments.ratios)
        {
            ratios.push_back({{"m", m}, {"max_over_min", ratio}});
        }
        json out{{"kind", "scaling"},
                 {"replicas", r.replicas},
                 {"points", points},
                 {"moments", moments},
                 {"moment_ratios", ratios},
                 {"moment_t0", r.moments.t0}};
        if (!r.currentFit.times.empty())
        {
            out["current_fit"] = to_json(r.currentFit);
            out["diffusivity_fit"] = to_json(r.diffusivityFit);
        }
        return out;
    }

    json to_json(const MarkAuditResult &r)
    {
        json times = json::array();
        for (const MarkTime &mt : r.times)
        {
            json labels = json::array();
            for (const LabelTest &lt : mt.labels)
            {
                labels.push_back({{"label", lt.label},
                                  {"ones", lt.ones},
                                  {"n", lt.n},
                                  {"expected", lt.expected},
                                  {"tested", lt.tested},
                                  {"pvalue", lt.tested ? lt.test.pvalue : 1.0}});
            }
            times.push_back({{"t", mt.t},
                             {"labels", labels},
                             {"pooled_observed", mt.pooledObserved},
                             {"pooled_expected", mt.pooledExpected},
                             {"pooled_pvalue", mt.pooledPvalue},
                             {"min_pvalue", mt.minPvalue},
                             {"product_covariance", estimate_json(mt.productCovariance)},
                             {"product_pvalue", mt.productPvalue},
                             {"current_covariance", estimate_json(mt.currentCovariance)},
                             {"independence_pvalue", mt.independencePvalue}});
        }
        return json{{"kind", "mark-audit"}, {"replicas", r.replicas},  {"K", r.K},
                    {"times", times},       {"fraction_A", r.fractionA}, {"fraction_B", r.fractionB},
                    {"audit", to_json(r.audit)}};
    }

    json to_json(const SegmentAuditResult &r)
    {
        json times = json::array();
        for (const SegmentTime &st : r.times)
        {
            times.push_back({{"t", st.t},
                             {"n", st.n},
                             {"counts", st.counts},
                             {"expected", st.expected},
                             {"chi2", st.geometric.statistic},
                             {"dof", st.geometric.dof},
                             {"pvalue", st.geometric.pvalue},
                             {"mean_N", estimate_json(st.meanN)},
                             {"mean_N_formula", st.meanNFormula}});
        }
        return json{{"kind", "segment-audit"}, {"replicas", r.replicas}, {"times", times}, {"audit", to_json(r.audit)}};
    }

    json to_json(const OracleResult &r)
    {
        return json{{"kind", "oracle-compare"},
                    {"ring", r.sites},
                    {"count", r.count},
                    {"t", r.t},
                    {"replicas", r.replicas},
                    {"tv", r.tv},
                    {"tv_sampling_scale", r.tvSamplingScale},
                    {"stationarity_residual", r.stationarityResidual},
                    {"detailed_balance", r.detailedBalance},
                    {"change_of_measure_error", r.changeOfMeasureError},
                    {"exact", r.exact},
                    {"empirical", r.empirical}};
    }

    ExperimentOutcome run_experiment(const ExperimentConfig &config)
    {
        config.validate();
        ExperimentOutcome outcome;
        switch (config.kind)
        {
        case ExperimentKind::Current:
            outcome.summary = to_json(run_current(config));
            break;
        case ExperimentKind::Identity:
            outcome.summary = to_json(run_identity(config));
            break;
        case ExperimentKind::ScalingCurrent:
        case ExperimentKind::ScalingDiffusivity:
            outcome.summary = to_json(run_scaling(config));
            break;
        case ExperimentKind::MarkAudit:
        {
            const MarkAuditResult r = run_mark_audit(config);
            outcome.violations = r.audit.violations();
            outcome.summary = to_json(r);
            break;
        }
        case ExperimentKind::CouplingAudit:
        {
            const FiveRun run = run_five(config);
            const AuditCounters audit = total_audit(run.records);
            const std::size_t labels = static_cast<std::size_t>(2 * run.K + 1);
            outcome.violations = audit.violations();
            outcome.summary = json{{"kind", "coupling-audit"},
                                   {"replicas", run.records.size()},
                                   {"K", run.K},
                                   {"fraction_A", sample_mean(column(run.records, labels + 1))},
                                   {"fraction_B", sample_mean(column(run.records, labels + 2))},
                                   {"audit", to_json(audit)}};
            break;
        }
        case ExperimentKind::SegmentAudit:
        {
            const SegmentAuditResult r = run_segment_audit(config);
            outcome.violations = r.audit.violations();
            outcome.summary = to_json(r);
            break;
        }
        case ExperimentKind::OracleCompare:
            outcome.summary = to_json(run_oracle_compare(config));
            break;
        }
        outcome.summary["experiment"] = to_string(config.kind);
        outcome.text = describe(outcome.summary);
        if (!config.output.empty())
        {
            output_file(config, "config.echo") << echo_config(config);
            output_file(config, "summary.json") << outcome.summary.dump(2) << '\n';
            output_file(config, "summary.txt") << outcome.text;
        }
        return outcome;
    }

    namespace
    {
        std::string fmt(const char *format, auto... args)
        {
            char buf[512];
            std::snprintf(buf, sizeof buf, format, args...);
            return buf;
        }

        std::string pm(const json &e)
        {
            return fmt("%.6g +- %.3g", e.at("value").get<double>(), e.at("se").get<double>());
        }

        std::string audit_line(const json &a)
        {
            return fmt("audit: %llu events, %llu checks, %llu violations\n", a.at("events").get<unsigned long long>(),
                       a.at("checks").get<unsigned long long>(), a.at("violations").get<unsigned long long>());
        }
    } // namespace

    std::string describe(const json &s)
    {
        std::ostringstream out;
        const std::string kind = s.value("experiment", s.value("kind", "unknown"));
        out << kind << " (" << s.value("replicas", 0) << " replicas)\n";
        const std::string k = s.at("kind");
        if (k == "current")
        {
            for (const json &p : s.at("points"))
            {
                out << fmt("t=%g v=%g  E J = %s (formula %.6g)  Var J / t = %s (sigma^2 %.6g)\n", p.at("t").get<double>(),
                           p.at("v").get<double>(), pm(p.at("mean")).c_str(), p.at("mean_formula").get<double>(),
                           pm(p.at("variance_per_time")).c_str(), p.at("sigma2").get<double>());
            }
        }
        else if (k == "identity")
        {
            for (const json &p : s.at("points"))
            {
                out << fmt("t=%g V=%g  Var J = %s  rho(1-rho)E|x-Q| = %s  with Q_a = %s\n", p.at("t").get<double>(),
                           p.at("V").get<double>(), pm(p.at("var_J")).c_str(), pm(p.at("rhs_Q")).c_str(),
                           pm(p.at("rhs_Qa")).c_str());
                out << fmt("          E Q = %s  E Q_a = %s  formula %.6g\n", pm(p.at("mean_Q")).c_str(),
                           pm(p.at("mean_Qa")).c_str(), p.at("mean_Q_formula").get<double>());
            }
        }
        else if (k == "scaling")
        {
            for (const json &p : s.at("points"))
            {
                out << fmt("t=%g  Var J = %s  D = %s  E Q = %s (formula %.6g)\n", p.at("t").get<double>(),
                           pm(p.at("var_J")).c_str(), pm(p.at("D_table")).c_str(), pm(p.at("mean_Q")).c_str(),
                           p.at("mean_Q_formula").get<double>());
            }
            if (s.contains("current_fit"))
            {
                for (const char *name : {"current_fit", "diffusivity_fit"})
                {
                    const json &f = s.at(name);
                    out << fmt("%s: alpha = %.4f +- %.4f  CI [%.4f, %.4f]%s\n", name, f.at("alpha").get<double>(),
                               f.at("alpha_se").get<double>(), f.at("ci")[0].get<double>(), f.at("ci")[1].get<double>(),
                               f.at("curved").get<bool>() ? "  (curvature flagged)" : "");
                }
            }
            for (const json &r : s.at("moment_ratios"))
            {
                out << fmt("moment m=%g: max/min over t >= %g is %.4f\n", r.at("m").get<double>(),
                           s.at("moment_t0").get<double>(), r.at("max_over_min").get<double>());
            }
        }
        else if (k == "mark-audit")
        {
            out << "K = " << s.at("K") << '\n';
            for (const json &t : s.at("times"))
            {
                out << fmt("t=%g  min label p-value %.4g  pooled tail p-value %.4g  product p %.4g  independence p %.4g\n",
                           t.at("t").get<double>(), t.at("min_pvalue").get<double>(), t.at("pooled_pvalue").get<double>(),
                           t.at("product_pvalue").get<double>(), t.at("independence_pvalue").get<double>());
            }
            out << audit_line(s.at("audit"));
        }
        else if (k == "coupling-audit")
        {
            out << fmt("K = %lld  P(A) = %.4f  P(B) = %.4f\n", s.at("K").get<long long>(), s.at("fraction_A").get<double>(),
                       s.at("fraction_B").get<double>());
            out << audit_line(s.at("audit"));
        }
        else if (k == "segment-audit")
        {
            for (const json &t : s.at("times"))
            {
                out << fmt("t=%g n=%lld  geometric chi2 = %.4g (dof %g, p = %.4g)  E N = %s (formula %.6g)\n",
                           t.at("t").get<double>(), t.at("n").get<long long>(), t.at("chi2").get<double>(),
                           t.at("dof").get<double>(), t.at("pvalue").get<double>(), pm(t.at("mean_N")).c_str(),
                           t.at("mean_N_formula").get<double>());
            }
            out << audit_line(s.at("audit"));
        }
        else if (k == "oracle-compare")
        {
            out << fmt("ring %d, %d particles, t = %g\n", s.at("ring").get<int>(), s.at("count").get<int>(),
                       s.at("t").get<double>());
            out << fmt("TV(simulator, uniformization) = %.5f (sampling scale %.5f)\n", s.at("tv").get<double>(),
                       s.at("tv_sampling_scale").get<double>());
            out << fmt("uniform stationarity residual = %.3g\n", s.at("stationarity_residual").get<double>());
            out << fmt("blocking detailed balance violation = %.3g\n", s.at("detailed_balance").get<double>());
            out << fmt("change of measure relative error = %.3g\n", s.at("change_of_measure_error").get<double>());
        }
        return out.str();
    }
} // namespace aseplab
