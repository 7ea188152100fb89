#include "aseplab/harness.hpp"

#include "aseplab/errors.hpp"
#include "aseplab/observables.hpp"
#include "aseplab/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <istream>
#include <mutex>
#include <sstream>
#include <thread>

namespace aseplab
{
    using nlohmann::json;

    namespace
    {
        struct KindName
        {
            ExperimentKind kind;
            const char *name;
        };

        constexpr KindName kKinds[] = {
            {ExperimentKind::Current, "current"},
            {ExperimentKind::Identity, "identity"},
            {ExperimentKind::ScalingCurrent, "scaling-current"},
            {ExperimentKind::ScalingDiffusivity, "scaling-diffusivity"},
            {ExperimentKind::MarkAudit, "mark-audit"},
            {ExperimentKind::CouplingAudit, "coupling-audit"},
            {ExperimentKind::SegmentAudit, "segment-audit"},
            {ExperimentKind::OracleCompare, "oracle-compare"},
        };

        std::string trim(std::string_view s)
        {
            const auto b = s.find_first_not_of(" \t\r");
            if (b == std::string_view::npos)
            {
                return {};
            }
            const auto e = s.find_last_not_of(" \t\r");
            return std::string(s.substr(b, e - b + 1));
        }

        double parse_double(const std::string &key, const std::string &text)
        {
            double v = 0.0;
            const std::string t = trim(text);
            const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
            require(ec == std::errc() && ptr == t.data() + t.size() && !t.empty() && std::isfinite(v),
                    "config key '" + key + "': expected a number, got '" + text + "'");
            return v;
        }

        template <class Int>
        Int parse_int(const std::string &key, const std::string &text)
        {
            Int v = 0;
            const std::string t = trim(text);
            const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
            require(ec == std::errc() && ptr == t.data() + t.size() && !t.empty(),
                    "config key '" + key + "': expected an integer, got '" + text + "'");
            return v;
        }

        std::vector<double> parse_list(const std::string &key, const std::string &text)
        {
            std::vector<double> out;
            std::stringstream ss(text);
            std::string item;
            while (std::getline(ss, item, ','))
            {
                out.push_back(parse_double(key, item));
            }
            require(!out.empty(), "config key '" + key + "': empty list");
            return out;
        }

        std::string format_double(double v)
        {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.17g", v);
            return buf;
        }

        std::string format_list(const std::vector<double> &xs)
        {
            std::string s;
            for (std::size_t i = 0; i < xs.size(); ++i)
            {
                s += (i ? ", " : "") + format_double(xs[i]);
            }
            return s;
        }

        bool statistical(ExperimentKind kind)
        {
            return kind != ExperimentKind::CouplingAudit;
        }

        template <class T>
        json optional_json(const std::optional<T> &v)
        {
            return v ? json(*v) : json(nullptr);
        }

        template <class T>
        std::optional<T> optional_from(const json &j)
        {
            if (j.is_null())
            {
                return std::nullopt;
            }
            return j.get<T>();
        }

        json audit_to_json(const AuditCounters &a)
        {
            return json{{"events", a.events},
                        {"checks", a.checks},
                        {"qaRightOfR", a.qaRightOfR},
                        {"lRightOfQ", a.lRightOfQ},
                        {"qLeftOfQa", a.qLeftOfQa},
                        {"mAboveMq", a.mAboveMq},
                        {"currentBound", a.currentBound},
                        {"heightIdentity", a.heightIdentity},
                        {"heightOrder", a.heightOrder}};
        }

        AuditCounters audit_from_json(const json &j)
        {
            AuditCounters a;
            a.events = j.at("events");
            a.checks = j.at("checks");
            a.qaRightOfR = j.at("qaRightOfR");
            a.lRightOfQ = j.at("lRightOfQ");
            a.qLeftOfQa = j.at("qLeftOfQa");
            a.mAboveMq = j.at("mAboveMq");
            a.currentBound = j.at("currentBound");
            a.heightIdentity = j.at("heightIdentity");
            a.heightOrder = j.at("heightOrder");
            return a;
        }

        json trail_to_json(const AuditRecord &r)
        {
            return json{{"t", r.t},
                        {"Q", optional_json(r.Q)},
                        {"Qa", optional_json(r.Qa)},
                        {"X0", optional_json(r.X0)},
                        {"R", optional_json(r.R)},
                        {"L", optional_json(r.L)},
                        {"m", optional_json(r.m)},
                        {"N", optional_json(r.N)},
                        {"eventA", optional_json(r.eventA)},
                        {"eventB", optional_json(r.eventB)}};
        }

        AuditRecord trail_from_json(const json &j)
        {
            AuditRecord r;
            r.t = j.at("t");
            r.Q = optional_from<std::int64_t>(j.at("Q"));
            r.Qa = optional_from<std::int64_t>(j.at("Qa"));
            r.X0 = optional_from<std::int64_t>(j.at("X0"));
            r.R = optional_from<std::int64_t>(j.at("R"));
            r.L = optional_from<std::int64_t>(j.at("L"));
            r.m = optional_from<std::int64_t>(j.at("m"));
            r.N = optional_from<std::int64_t>(j.at("N"));
            r.eventA = optional_from<bool>(j.at("eventA"));
            r.eventB = optional_from<bool>(j.at("eventB"));
            return r;
        }

        json record_to_json(const ReplicaRecord &r)
        {
            json trail = json::array();
            for (const AuditRecord &a : r.trail)
            {
                trail.push_back(trail_to_json(a));
            }
            return json{{"index", r.index}, {"seed", r.seed}, {"values", r.values}, {"audit", audit_to_json(r.audit)},
                        {"trail", trail}};
        }

        ReplicaRecord record_from_json(const json &j)
        {
            ReplicaRecord r;
            r.index = j.at("index");
            r.seed = j.at("seed");
            r.values = j.at("values").get<std::vector<double>>();
            r.audit = audit_from_json(j.at("audit"));
            for (const json &a : j.at("trail"))
            {
                r.trail.push_back(trail_from_json(a));
            }
            return r;
        }

        json manifest_header(std::uint64_t count, std::uint64_t master, const std::string &fingerprint)
        {
            return json{{"manifest", 1}, {"count", count}, {"master", master}, {"fingerprint", fingerprint}};
        }

        std::string with_replica(const std::exception &e, std::uint64_t index, std::uint64_t seed)
        {
            return std::string(e.what()) + " (replica " + std::to_string(index) + ", seed " + std::to_string(seed) + ")";
        }
    } // namespace

    std::string to_string(ExperimentKind kind)
    {
        for (const KindName &k : kKinds)
        {
            if (k.kind == kind)
            {
                return k.name;
            }
        }
        return "unknown";
    }

    ExperimentKind parse_kind(const std::string &name)
    {
        for (const KindName &k : kKinds)
        {
            if (name == k.name)
            {
                return k.kind;
            }
        }
        throw ValidationError("unknown experiment kind '" + name + "'");
    }

    double ExperimentConfig::lambda() const
    {
        return params.lambda ? *params.lambda : std::max(0.0, params.rho - 0.1);
    }

    void ExperimentConfig::validate() const
    {
        params.validate();
        require(!times.empty(), "time grid is empty");
        for (std::size_t i = 0; i < times.size(); ++i)
        {
            require(std::isfinite(times[i]) && times[i] >= 0.0, "times must be finite and nonnegative");
            require(i == 0 || times[i] > times[i - 1], "time grid must be strictly increasing");
        }
        const bool zeroAllowed = kind == ExperimentKind::MarkAudit || kind == ExperimentKind::CouplingAudit;
        require(zeroAllowed || times.front() > 0.0, "this experiment needs t > 0");
        require(times.back() <= 1e6, "times beyond 1e6 are not supported");
        require(replicas > 0, "replica count must be positive");
        require(!statistical(kind) || replicas >= 100, "statistical experiments need at least 100 replicas");
        require(std::isfinite(windowScale) && windowScale >= 1.0, "window scale must be >= 1");
        require(u >= 1, "segment length u must be >= 1");
        for (double v : speeds)
        {
            require(std::isfinite(v) && std::abs(v) <= 10.0, "observer speeds must be finite with |v| <= 10");
        }
        for (double m : moments)
        {
            require(m >= 1.0 && m < 3.0, "moment orders must lie in [1,3)");
        }
        require(t0 >= 0.0, "t0 must be nonnegative");
        require(ringSites >= 2 && ringSites <= 12, "ring must have 2 to 12 sites");
        require(ringCount >= 0 && ringCount <= ringSites, "ring particle count must lie in [0, ring]");
        if (kind == ExperimentKind::MarkAudit || kind == ExperimentKind::CouplingAudit ||
            kind == ExperimentKind::SegmentAudit)
        {
            const double l = lambda();
            require(params.rho > 0.0 && params.rho < 1.0, "coupling experiments need 0 < rho < 1");
            require(l >= 0.0 && l < params.rho, "coupling experiments need 0 <= lambda < rho");
        }
    }

    void set_config_key(ExperimentConfig &c, const std::string &key, const std::string &value)
    {
        const std::string v = trim(value);
        if (key == "kind")
        {
            c.kind = parse_kind(v);
        }
        else if (key == "p")
        {
            c.params.p = parse_double(key, v);
            c.params.q = 1.0 - c.params.p;
        }
        else if (key == "rho")
        {
            c.params.rho = parse_double(key, v);
        }
        else if (key == "lambda")
        {
            c.params.lambda = parse_double(key, v);
        }
        else if (key == "u")
        {
            c.u = parse_int<std::int64_t>(key, v);
        }
        else if (key == "times")
        {
            c.times = parse_list(key, v);
        }
        else if (key == "grid")
        {
            const std::vector<double> g = parse_list(key, v);
            require(g.size() == 2, "config key 'grid' expects 't_min, points'");
            require(g[1] >= 1.0 && g[1] <= 30.0 && g[1] == std::floor(g[1]), "grid points must be an integer in 1..30");
            c.times = geometric_grid(g[0], static_cast<int>(g[1]));
        }
        else if (key == "speeds")
        {
            c.speeds = parse_list(key, v);
        }
        else if (key == "replicas")
        {
            c.replicas = parse_int<std::uint64_t>(key, v);
        }
        else if (key == "seed")
        {
            c.seed = parse_int<std::uint64_t>(key, v);
        }
        else if (key == "output")
        {
            c.output = v;
        }
        else if (key == "window_scale")
        {
            c.windowScale = parse_double(key, v);
        }
        else if (key == "threads")
        {
            c.threads = parse_int<unsigned>(key, v);
        }
        else if (key == "dynamics")
        {
            require(v == "coupled" || v == "independent", "dynamics must be 'coupled' or 'independent'");
            c.dynamics = v == "coupled" ? MarkDynamics::Coupled : MarkDynamics::IndependentClocks;
        }
        else if (key == "conditioning")
        {
            require(v == "none" || v == "A" || v == "B", "conditioning must be 'none', 'A' or 'B'");
            c.conditioning = v == "none" ? Conditioning::None : (v == "A" ? Conditioning::EventA : Conditioning::EventB);
        }
        else if (key == "ring")
        {
            c.ringSites = parse_int<int>(key, v);
        }
        else if (key == "count")
        {
            c.ringCount = parse_int<int>(key, v);
        }
        else if (key == "moments")
        {
            c.moments = parse_list(key, v);
        }
        else if (key == "t0")
        {
            c.t0 = parse_double(key, v);
        }
        else
        {
            throw ValidationError("unknown config key '" + key + "'");
        }
    }

    ExperimentConfig parse_config(std::istream &in, ExperimentConfig base)
    {
        std::string line;
        int lineNo = 0;
        while (std::getline(in, line))
        {
            ++lineNo;
            if (const auto hash = line.find('#'); hash != std::string::npos)
            {
                line.erase(hash);
            }
            const std::string t = trim(line);
            if (t.empty())
            {
                continue;
            }
            const auto eq = t.find('=');
            require(eq != std::string::npos, "config line " + std::to_string(lineNo) + ": expected 'key = value'");
            const std::string key = trim(std::string_view(t).substr(0, eq));
            require(!key.empty(), "config line " + std::to_string(lineNo) + ": missing key");
            set_config_key(base, key, t.substr(eq + 1));
        }
        return base;
    }

    ExperimentConfig load_config(const std::filesystem::path &path, ExperimentConfig base)
    {
        std::ifstream in(path);
        require(static_cast<bool>(in), "cannot open config file '" + path.string() + "'");
        return parse_config(in, std::move(base));
    }

    std::string echo_config(const ExperimentConfig &c)
    {
        std::ostringstream out;
        out << "kind = " << to_string(c.kind) << '\n';
        out << "p = " << format_double(c.params.p) << '\n';
        out << "rho = " << format_double(c.params.rho) << '\n';
        if (c.params.lambda)
        {
            out << "lambda = " << format_double(*c.params.lambda) << '\n';
        }
        out << "u = " << c.u << '\n';
        out << "times = " << format_list(c.times) << '\n';
        if (!c.speeds.empty())
        {
            out << "speeds = " << format_list(c.speeds) << '\n';
        }
        out << "replicas = " << c.replicas << '\n';
        out << "seed = " << c.seed << '\n';
        out << "window_scale = " << format_double(c.windowScale) << '\n';
        out << "dynamics = " << (c.dynamics == MarkDynamics::Coupled ? "coupled" : "independent") << '\n';
        out << "conditioning = "
            << (c.conditioning == Conditioning::None ? "none" : (c.conditioning == Conditioning::EventA ? "A" : "B"))
            << '\n';
        out << "ring = " << c.ringSites << '\n';
        out << "count = " << c.ringCount << '\n';
        out << "moments = " << format_list(c.moments) << '\n';
        out << "t0 = " << format_double(c.t0) << '\n';
        return out.str();
    }

    std::vector<double> geometric_grid(double tMin, int points)
    {
        require(std::isfinite(tMin) && tMin > 0.0, "grid needs t_min > 0");
        require(points >= 1, "grid needs at least one point");
        std::vector<double> out;
        for (int k = 0; k < points; ++k)
        {
            out.push_back(std::ldexp(tMin, k));
        }
        return out;
    }

    Window scale_window(const Window &window, double factor)
    {
        require(window.boundary == Boundary::Frozen, "only frozen windows can be scaled");
        require(factor >= 1.0, "window scale must be >= 1");
        const auto lo = static_cast<std::int64_t>(std::floor(static_cast<double>(window.lo) * factor));
        const auto hi = static_cast<std::int64_t>(std::ceil(static_cast<double>(window.hi) * factor));
        return Window::make(lo, hi);
    }

    unsigned pool_size(unsigned requested)
    {
        if (const char *env = std::getenv("ASEPLAB_THREADS"); env != nullptr && *env != '\0')
        {
            return std::max(1u, parse_int<unsigned>("ASEPLAB_THREADS", env));
        }
        if (requested > 0)
        {
            return requested;
        }
        return std::max(1u, std::thread::hardware_concurrency());
    }

    std::vector<ReplicaRecord> run_replicas(std::uint64_t count, std::uint64_t master, const ReplicaFn &fn,
                                            const RunOptions &options)
    {
        require(count > 0, "replica count must be positive");
        std::vector<ReplicaRecord> records(count);
        std::vector<char> done(count, 0);

        std::ofstream manifest;
        if (!options.manifest.empty())
        {
            if (std::filesystem::exists(options.manifest))
            {
                std::ifstream in(options.manifest);
                std::string line;
                require(static_cast<bool>(std::getline(in, line)), "manifest is empty");
                const json header = json::parse(line, nullptr, false);
                require(!header.is_discarded() && header == manifest_header(count, master, options.fingerprint),
                        "manifest belongs to a different configuration");
                while (std::getline(in, line))
                {
                    const json j = json::parse(line, nullptr, false);
                    if (j.is_discarded())
                    {
                        break;  // torn final line from an interrupted run
                    }
                    ReplicaRecord r = record_from_json(j);
                    require(r.index < count && r.seed == derive_seed(master, r.index), "manifest record out of range");
                    done[r.index] = 1;
                    records[r.index] = std::move(r);
                }
                in.close();
                // Rewrite so a torn line never precedes appended records.
                std::ofstream rewrite(options.manifest, std::ios::trunc);
                rewrite << manifest_header(count, master, options.fingerprint).dump() << '\n';
                for (std::uint64_t i = 0; i < count; ++i)
                {
                    if (done[i])
                    {
                        rewrite << record_to_json(records[i]).dump() << '\n';
                    }
                }
            }
            else
            {
                std::ofstream create(options.manifest);
                require(static_cast<bool>(create), "cannot create manifest '" + options.manifest.string() + "'");
                create << manifest_header(count, master, options.fingerprint).dump() << '\n';
            }
            manifest.open(options.manifest, std::ios::app);
        }

        std::atomic<std::uint64_t> next{0};
        std::atomic<bool> stop{false};
        std::mutex mu;
        std::exception_ptr failure;
        std::uint64_t failedIndex = 0;

        const auto worker = [&] {
            while (!stop.load(std::memory_order_relaxed))
            {
                const std::uint64_t i = next.fetch_add(1, std::memory_order_relaxed);
                if (i >= count)
                {
                    return;
                }
                if (done[i])
                {
                    continue;
                }
                const std::uint64_t seed = derive_seed(master, i);
                try
                {
                    ReplicaRecord r = fn(i, seed);
                    r.index = i;
                    r.seed = seed;
                    const std::lock_guard lock(mu);
                    if (manifest.is_open())
                    {
                        manifest << record_to_json(r).dump() << '\n';
                        manifest.flush();
                    }
                    records[i] = std::move(r);
                }
                catch (...)
                {
                    const std::lock_guard lock(mu);
                    if (!failure || i < failedIndex)
                    {
                        failure = std::current_exception();
                        failedIndex = i;
                    }
                    stop = true;
                }
            }
        };

        const unsigned threads = static_cast<unsigned>(std::min<std::uint64_t>(pool_size(options.threads), count));
        if (threads <= 1)
        {
            worker();
        }
        else
        {
            std::vector<std::jthread> pool;
            for (unsigned k = 0; k < threads; ++k)
            {
                pool.emplace_back(worker);
            }
        }

        if (failure)
        {
            const std::uint64_t seed = derive_seed(master, failedIndex);
            try
            {
                std::rethrow_exception(failure);
            }
            catch (const InvariantViolation &e)
            {
                throw InvariantViolation(with_replica(e, failedIndex, seed));
            }
            catch (const TruncationError &e)
            {
                throw TruncationError(with_replica(e, failedIndex, seed));
            }
            catch (const ValidationError &e)
            {
                throw ValidationError(with_replica(e, failedIndex, seed));
            }
        }

        if (manifest.is_open())
        {
            manifest.close();
            std::ofstream rewrite(options.manifest, std::ios::trunc);
            rewrite << manifest_header(count, master, options.fingerprint).dump() << '\n';
            for (const ReplicaRecord &r : records)
            {
                rewrite << record_to_json(r).dump() << '\n';
            }
        }
        return records;
    }

    std::vector<double> column(const std::vector<ReplicaRecord> &records, std::size_t j)
    {
        std::vector<double> out;
        out.reserve(records.size());
        for (const ReplicaRecord &r : records)
        {
            require(j < r.values.size(), "record column out of range");
            out.push_back(r.values[j]);
        }
        return out;
    }

    AuditCounters total_audit(const std::vector<ReplicaRecord> &records)
    {
        AuditCounters total;
        for (const ReplicaRecord &r : records)
        {
            total += r.audit;
        }
        return total;
    }

    std::vector<ReplicaRecord> canonical_order(std::vector<ReplicaRecord> records)
    {
        std::sort(records.begin(), records.end(),
                  [](const ReplicaRecord &a, const ReplicaRecord &b) { return a.index < b.index; });
        return records;
    }

    std::string audit_json_line(const AuditRecord &record)
    {
        return trail_to_json(record).dump();
    }

    ScalingFit fit_exponent(std::vector<double> times, std::vector<double> values, std::vector<double> se,
                            double confidence)
    {
        require(times.size() == values.size() && times.size() == se.size(), "series columns must have equal length");
        require(times.size() >= 5, "exponent fit needs at least 5 time points");
        require(confidence > 0.0 && confidence < 1.0, "confidence must lie in (0,1)");
        for (std::size_t i = 0; i < times.size(); ++i)
        {
            require(std::isfinite(times[i]) && times[i] > 0.0, "fit times must be positive");
            require(i == 0 || times[i] > times[i - 1], "fit times must be strictly increasing");
            require(std::isfinite(values[i]) && values[i] > 0.0, "fit values must be positive");
            require(std::isfinite(se[i]) && se[i] >= 0.0, "standard errors must be nonnegative");
        }
        require(std::log10(times.back() / times.front()) >= 1.5 - 1e-12, "fit times must span at least 1.5 decades");
        const bool allZero = std::all_of(se.begin(), se.end(), [](double s) { return s == 0.0; });
        const bool allPositive = std::all_of(se.begin(), se.end(), [](double s) { return s > 0.0; });
        require(allZero || allPositive, "standard errors must be all zero or all positive");

        std::vector<double> x, y, w;
        for (std::size_t i = 0; i < times.size(); ++i)
        {
            x.push_back(std::log(times[i]));
            y.push_back(std::log(values[i]));
            const double rel = se[i] / values[i];
            w.push_back(allZero ? 1.0 : 1.0 / (rel * rel));
        }
        const LinearFit line = weighted_polyfit(x, y, w, 1);
        const LinearFit quad = weighted_polyfit(x, y, w, 2);

        ScalingFit fit;
        fit.times = std::move(times);
        fit.values = std::move(values);
        fit.se = std::move(se);
        fit.alpha = line.coef[1];
        fit.alphaSe = line.se[1];
        const double z = normal_two_sided(1.0 - confidence);
        fit.ci = {fit.alpha - z * fit.alphaSe, fit.alpha + z * fit.alphaSe};
        fit.prefactor = std::exp(line.coef[0]);
        fit.residuals = line.residuals;
        fit.chi2 = line.chi2;
        fit.dof = line.dof;
        fit.curvature = quad.coef[2];
        fit.curvatureSe = quad.se[2];
        fit.curved = fit.curvatureSe > 0.0 && std::abs(fit.curvature) > 3.0 * fit.curvatureSe;
        return fit;
    }

    MomentTable moment_table(const std::vector<std::vector<double>> &samples, const std::vector<double> &times,
                             const Params &params, double rho, const std::vector<double> &orders, double t0)
    {
        require(samples.size() == times.size() && !times.empty(), "one sample per grid time is required");
        require(!orders.empty(), "moment table needs at least one order");
        MomentTable table;
        table.t0 = t0 > 0.0 ? t0 : times.front();
        for (double m : orders)
        {
            require(m >= 1.0 && m < 3.0, "moment orders must lie in [1,3)");
            double hi = 0.0;
            double lo = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < times.size(); ++i)
            {
                const double t = times[i];
                MomentRow row;
                row.t = t;
                row.m = m;
                row.value = normalized_moment(samples[i], t, params, rho, m);
                if (m == 2.0)
                {
                    const double scale = std::pow(t, 4.0 / 3.0);
                    const Estimate var = variance_estimate(samples[i]);
                    row.central = Estimate{var.value / scale, var.se / scale};
                    const double x = static_cast<double>(int_toward_zero(char_speed(rho, params) * t));
                    const double shift = sample_mean(samples[i]) - x;
                    row.centering = shift * shift / scale;
                }
                if (t >= table.t0)
                {
                    hi = std::max(hi, row.value.value);
                    lo = std::min(lo, row.value.value);
                }
                table.rows.push_back(row);
            }
            table.ratios.emplace_back(m, lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity());
        }
        return table;
    }
} // namespace aseplab
