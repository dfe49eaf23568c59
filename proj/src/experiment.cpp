#include "cascade/experiment.hpp"

#include "cascade/chain_sim.hpp"
#include "cascade/error.hpp"
#include "cascade/event_sim.hpp"
#include "cascade/kernel.hpp"
#include "cascade/lyapunov.hpp"
#include "cascade/model.hpp"
#include "cascade/stability.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace cascade
{
    using nlohmann::json;

    namespace
    {
        const std::set<std::string, std::less<>> kCommands{"speeds", "simulate", "groups", "drift", "couple", "kernel-check", "check"};

        [[noreturn]] void reject(const std::string &what) { throw Error(ErrorCode::ConfigParse, what); }

        // Strict view of one JSON object: every key must be claimed by a getter
        // before finish() or the config is rejected.
        class Section
        {
        public:
            Section(const json &node, std::string path) : m_node(node), m_path(std::move(path))
            {
                if (!m_node.is_object())
                {
                    reject(label() + " must be an object");
                }
            }

            bool has(const char *key)
            {
                m_claimed.insert(key);
                return m_node.contains(key);
            }

            const json &raw(const char *key)
            {
                m_claimed.insert(key);
                return m_node.at(key);
            }

            double number(const char *key, double fallback)
            {
                if (!has(key))
                {
                    return fallback;
                }
                const auto &v = m_node.at(key);
                if (!v.is_number())
                {
                    reject(label(key) + " must be a number");
                }
                return v.get<double>();
            }

            std::uint64_t count(const char *key, std::uint64_t fallback)
            {
                if (!has(key))
                {
                    return fallback;
                }
                const auto &v = m_node.at(key);
                if (!v.is_number_unsigned())
                {
                    reject(label(key) + " must be a nonnegative integer");
                }
                return v.get<std::uint64_t>();
            }

            bool flag(const char *key, bool fallback)
            {
                if (!has(key))
                {
                    return fallback;
                }
                const auto &v = m_node.at(key);
                if (!v.is_boolean())
                {
                    reject(label(key) + " must be true or false");
                }
                return v.get<bool>();
            }

            std::string text(const char *key, std::string fallback)
            {
                if (!has(key))
                {
                    return fallback;
                }
                const auto &v = m_node.at(key);
                if (!v.is_string())
                {
                    reject(label(key) + " must be a string");
                }
                return v.get<std::string>();
            }

            std::vector<double> numbers(const char *key)
            {
                if (!has(key))
                {
                    reject(label(key) + " is required");
                }
                const auto &v = m_node.at(key);
                if (!v.is_array())
                {
                    reject(label(key) + " must be an array of numbers");
                }
                std::vector<double> out;
                for (const auto &e : v)
                {
                    if (!e.is_number())
                    {
                        reject(label(key) + " must be an array of numbers");
                    }
                    out.push_back(e.get<double>());
                }
                return out;
            }

            Section child(const char *key)
            {
                m_claimed.insert(key);
                static const json empty = json::object();
                return Section(m_node.contains(key) ? m_node.at(key) : empty, label(key));
            }

            void finish() const
            {
                for (const auto &item : m_node.items())
                {
                    if (!m_claimed.contains(item.key()))
                    {
                        reject("unknown key " + label(item.key()));
                    }
                }
            }

        private:
            std::string label(std::string_view key = {}) const
            {
                if (key.empty())
                {
                    return m_path.empty() ? "config" : "'" + m_path + "'";
                }
                return "'" + (m_path.empty() ? std::string(key) : m_path + "." + std::string(key)) + "'";
            }

            const json &m_node;
            std::string m_path;
            std::set<std::string, std::less<>> m_claimed;
        };

        struct Resolved
        {
            std::string command;
            CascadeParams params;
            std::uint64_t seed = 1;
            std::uint64_t steps = 1000000;
            std::uint64_t replicas = 8;
            std::uint64_t burn_in = 0;
            bool exact_gaps = false;
            double horizon = 1000.0;
            std::uint64_t runs = 1000;
            unsigned threads = 0;
            double tolerance = 0.02;
            double a = 1.0;
            double b = 1.0;
            std::optional<double> delta; // absent means auto
            double c0 = 50.0;
            double c1 = 200.0;
            std::vector<double> lo_betas;
            std::uint64_t kernel_states = 1000;
            std::uint64_t kernel_range = 30;
            std::string test = "abs";
            std::uint64_t check_radius = 200;
            std::optional<double> check_delta;
            std::optional<double> finite_radius;
            std::string output_path;
            std::string csv_path;
        };

        std::optional<double> number_or_auto(Section &s, const char *key, const std::string &where)
        {
            if (!s.has(key))
            {
                return std::nullopt;
            }
            const auto &v = s.raw(key);
            if (v.is_string() && v.get<std::string>() == "auto")
            {
                return std::nullopt;
            }
            if (!v.is_number())
            {
                reject("'" + where + "' must be a number or \"auto\"");
            }
            return v.get<double>();
        }

        Resolved resolve(const json &config, std::string_view command)
        {
            Section top(config, "");
            Resolved r;
            const std::string named = top.text("command", "");
            if (!command.empty() && !named.empty() && named != command)
            {
                reject("config command '" + named + "' does not match '" + std::string(command) + "'");
            }
            r.command = command.empty() ? named : std::string(command);
            if (!kCommands.contains(r.command))
            {
                reject(r.command.empty() ? "no command given" : "unknown command '" + r.command + "'");
            }

            Section params = top.child("params");
            const auto lambdas = params.numbers("lambdas");
            const auto betas = params.numbers("betas");
            const std::size_t n = params.count("n", lambdas.size());
            params.finish();
            r.params = validate_params(n, lambdas, betas);

            r.seed = top.count("seed", r.seed);
            r.steps = top.count("steps", r.steps);
            r.replicas = top.count("replicas", r.replicas);
            r.burn_in = top.count("burn_in", r.burn_in);
            r.exact_gaps = top.flag("exact_gaps", r.exact_gaps);
            r.horizon = top.number("horizon", r.horizon);
            r.runs = top.count("runs", r.runs);
            r.threads = static_cast<unsigned>(top.count("threads", r.threads));
            r.tolerance = top.number("tolerance", r.tolerance);
            if (top.has("lo_betas"))
            {
                r.lo_betas = top.numbers("lo_betas");
            }

            Section contour = top.child("contour");
            r.a = contour.number("a", r.a);
            r.b = contour.number("b", r.b);
            r.delta = number_or_auto(contour, "delta", "contour.delta");
            contour.finish();

            Section radii = top.child("radii");
            r.c0 = radii.number("c0", r.c0);
            r.c1 = radii.number("c1", r.c1);
            radii.finish();

            Section kc = top.child("kernel_check");
            r.kernel_states = kc.count("states", r.kernel_states);
            r.kernel_range = kc.count("range", r.kernel_range);
            kc.finish();

            Section check = top.child("check");
            r.test = check.text("test", r.test);
            r.check_radius = check.count("radius", r.check_radius);
            r.check_delta = number_or_auto(check, "delta", "check.delta");
            if (check.has("finite_radius"))
            {
                r.finite_radius = check.number("finite_radius", 0.0);
            }
            check.finish();

            r.output_path = top.text("output", "");
            r.csv_path = top.text("csv", "");
            top.finish();

            if (r.command == "couple" && r.lo_betas.empty() && r.params.n > 1)
            {
                reject("'lo_betas' is required for couple");
            }
            if (r.test != "abs" && r.test != "phi" && r.test != "transience")
            {
                reject("'check.test' must be one of abs, phi, transience");
            }
            if (!(r.tolerance > 0.0))
            {
                reject("'tolerance' must be > 0");
            }
            return r;
        }

        json params_json(const CascadeParams &p)
        {
            return {{"n", p.n}, {"lambdas", p.lambdas}, {"betas", p.betas}, {"z", p.z}, {"b", p.b}};
        }

        json resolved_json(const Resolved &r)
        {
            json j{{"command", r.command},
                   {"params", {{"n", r.params.n}, {"lambdas", r.params.lambdas}, {"betas", r.params.betas}}},
                   {"seed", r.seed},
                   {"threads", r.threads}};
            if (r.command == "speeds")
            {
                j.update({{"steps", r.steps}, {"replicas", r.replicas}, {"burn_in", r.burn_in}, {"exact_gaps", r.exact_gaps},
                          {"tolerance", r.tolerance}});
            }
            if (r.command == "simulate" || r.command == "couple")
            {
                j["horizon"] = r.horizon;
            }
            if (r.command == "couple")
            {
                j.update({{"runs", r.runs}, {"lo_betas", r.lo_betas}});
            }
            if (r.command == "drift" || (r.command == "check" && r.test == "phi"))
            {
                j["contour"] = {{"a", r.a}, {"b", r.b}, {"delta", r.delta ? json(*r.delta) : json("auto")}};
            }
            if (r.command == "drift")
            {
                j["radii"] = {{"c0", r.c0}, {"c1", r.c1}};
            }
            if (r.command == "kernel-check")
            {
                j["kernel_check"] = {{"states", r.kernel_states}, {"range", r.kernel_range}};
            }
            if (r.command == "check")
            {
                json c{{"test", r.test}, {"radius", r.check_radius}};
                if (r.test == "transience")
                {
                    c["delta"] = r.check_delta ? json(*r.check_delta) : json("auto");
                }
                if (r.finite_radius)
                {
                    c["finite_radius"] = *r.finite_radius;
                }
                j["check"] = c;
            }
            return j;
        }

        std::string cell(double v) { return json(v).dump(); }

        struct CommandResult
        {
            json result;
            bool pass = true;
            std::string csv;
        };

        CommandResult run_speeds(const Resolved &r)
        {
            const auto rep = estimate_speeds(r.params, r.steps, r.replicas, r.seed, {r.exact_gaps, r.burn_in, r.threads});
            const auto level = level_function(r.params);
            CommandResult out;
            std::vector<bool> agrees(r.params.n);
            std::ostringstream csv;
            csv << "processor,v_hat,ci_half_width,predicted,agrees\n";
            for (std::size_t k = 0; k < r.params.n; ++k)
            {
                agrees[k] = std::abs(rep.v_hat[k] - level[k]) <= r.tolerance * level[k];
                out.pass = out.pass && agrees[k];
                csv << k + 1 << ',' << cell(rep.v_hat[k]) << ',' << cell(rep.ci_half_width[k]) << ',' << cell(level[k]) << ','
                    << (agrees[k] ? "true" : "false") << '\n';
            }
            out.result = {{"v_hat", rep.v_hat},
                          {"ci_half_width", rep.ci_half_width},
                          {"predicted", level},
                          {"agrees", agrees},
                          {"replicas", rep.replicas},
                          {"steps", rep.steps},
                          {"elapsed_model_time", rep.elapsed_model_time}};
            out.csv = csv.str();
            return out;
        }

        CommandResult run_simulate(const Resolved &r)
        {
            const auto s = run_event_sim(r.params, r.horizon, r.seed);
            CommandResult out;
            out.result = {{"horizon", s.horizon},
                          {"final_x", s.final_x.x},
                          {"speeds", s.speeds},
                          {"tick_counts", s.tick_counts},
                          {"message_counts", s.message_counts},
                          {"effective_messages", s.effective_messages},
                          {"rollback_depth_histogram", s.rollback_depth_histogram},
                          {"events", s.events}};
            std::ostringstream csv;
            csv << "processor,final_x,speed,ticks,messages_sent,effective_messages\n";
            for (std::size_t k = 0; k < r.params.n; ++k)
            {
                csv << k + 1 << ',' << s.final_x.x[k] << ',' << cell(s.speeds[k]) << ',' << s.tick_counts[k] << ',';
                if (k + 1 < r.params.n)
                {
                    csv << s.message_counts[k] << ',' << s.effective_messages[k];
                }
                else
                {
                    csv << ',';
                }
                csv << '\n';
            }
            out.csv = csv.str();
            return out;
        }

        CommandResult run_groups(const Resolved &r)
        {
            const auto g = decompose_groups(r.params);
            CommandResult out;
            json groups = json::array();
            std::ostringstream csv;
            csv << "processor,group,predicted_speed\n";
            for (std::size_t k = 0; k < g.groups.size(); ++k)
            {
                json members = json::array();
                for (auto i : g.groups[k])
                {
                    members.push_back(i + 1);
                    csv << i + 1 << ',' << k + 1 << ',' << cell(g.predicted_speeds[i]) << '\n';
                }
                groups.push_back(members);
            }
            json starts = json::array();
            for (auto s : g.boundaries)
            {
                starts.push_back(s + 1);
            }
            out.result = {{"groups", groups}, {"boundaries", starts}, {"predicted_speeds", g.predicted_speeds},
                          {"level_function", level_function(r.params)}};
            out.csv = csv.str();
            return out;
        }

        json contour_json(const Contour &c)
        {
            return {{"a", c.a},
                    {"b", c.b},
                    {"delta", c.delta},
                    {"T2", {c.t2.y2, c.t2.y3}},
                    {"T3", {c.t3.y2, c.t3.y3}},
                    {"K2", {c.u2, 0.0}},
                    {"K3", {0.0, c.u3}},
                    {"y2_star", {c.y2_star.y2, c.y2_star.y3}},
                    {"y3_star", {c.y3_star.y2, c.y3_star.y3}}};
        }

        Contour resolve_contour(Resolved &r)
        {
            if (!r.delta)
            {
                r.delta = auto_tune_delta(r.params, r.a, r.b);
            }
            return build_contour(r.a, r.b, *r.delta);
        }

        CommandResult run_drift(Resolved &r)
        {
            // Validate the assumption before tuning so the diagnostic names it.
            if (r.params.n == 3 && !(r.params.lambdas[0] < r.params.lambdas[1] && r.params.lambdas[0] < r.params.lambdas[2]))
            {
                throw Error(ErrorCode::AssumptionViolated, "needs lambda_1 < lambda_2 and lambda_1 < lambda_3");
            }
            const Contour c = resolve_contour(r);
            const auto rep = drift_report(r.params, c, r.c0, r.c1, r.threads);
            CommandResult out;
            json regions = json::array();
            std::ostringstream csv;
            csv << "region,count,max_full,max_free,max_rollback,worst_y2,worst_y3\n";
            for (const auto &g : rep.regions)
            {
                const bool any = g.count > 0;
                regions.push_back({{"region", region_name(g.region)},
                                   {"count", g.count},
                                   {"max_full", any ? json(g.max_full) : json(nullptr)},
                                   {"max_free", any ? json(g.max_free) : json(nullptr)},
                                   {"max_rollback", any ? json(g.max_rollback) : json(nullptr)},
                                   {"worst_state", any ? json(g.worst_state) : json(nullptr)}});
                csv << region_name(g.region) << ',' << g.count << ',';
                if (any)
                {
                    csv << cell(g.max_full) << ',' << cell(g.max_free) << ',' << cell(g.max_rollback) << ',' << g.worst_state[0]
                        << ',' << g.worst_state[1];
                }
                else
                {
                    csv << ",,,,";
                }
                csv << '\n';
            }
            out.result = {{"contour", contour_json(c)},
                          {"box_half_width", rep.box_half_width},
                          {"regions", regions},
                          {"annulus_size", rep.annulus_size},
                          {"worst_drift", rep.worst_drift},
                          {"worst_state", rep.worst_state},
                          {"epsilon", rep.epsilon},
                          {"finite_set", {{"radius", rep.c0}, {"size", rep.finite_set_size}, {"sup_expected_next", rep.finite_set_sup}}},
                          {"rollback_increases", rep.rollback_increases}};
            out.pass = rep.verdict;
            out.csv = csv.str();
            return out;
        }

        CommandResult run_couple(const Resolved &r)
        {
            const CascadeParams lo = validate_params(r.params.n, r.params.lambdas, r.lo_betas);
            const auto rep = coupled_run(lo, r.params, r.horizon, r.seed, r.runs);
            CommandResult out;
            out.result = {{"lo", params_json(lo)},
                          {"hi", params_json(r.params)},
                          {"runs", rep.runs},
                          {"dominance_violations", rep.dominance_violations},
                          {"violating_runs", rep.violating_runs},
                          {"first_violation_time", rep.first_violation_time ? json(*rep.first_violation_time) : json(nullptr)},
                          {"events", rep.events}};
            out.pass = rep.dominance_violations == 0;
            return out;
        }

        double table_residual(const CascadeParams &params, const RelativeState &y)
        {
            const auto [free_part, generic] = split_transitions(relative_transitions(params, y));
            const auto table = rollback_table_n3(params, y);
            std::map<RelativeState, double> diff;
            for (const auto &e : generic.entries)
            {
                diff[e.target] += e.rollback_mass;
            }
            for (const auto &e : table.entries)
            {
                diff[e.target] -= e.rollback_mass;
            }
            double worst = 0.0;
            for (const auto &[t, d] : diff)
            {
                worst = std::max(worst, std::abs(d));
            }
            return worst;
        }

        CommandResult run_kernel_check(const Resolved &r)
        {
            constexpr double tol = 1e-12;
            const auto &p = r.params;
            Rng rng = Rng::for_stream(r.seed, 0);
            double normalization = 0.0;
            double table = 0.0;
            double marginal = 0.0;
            const auto range = static_cast<std::int64_t>(r.kernel_range);
            for (std::uint64_t s = 0; s < r.kernel_states; ++s)
            {
                AbsoluteState x;
                for (std::size_t k = 0; k < p.n; ++k)
                {
                    x.x.push_back(rng.uniform_int(0, range));
                }
                normalization = std::max(normalization, std::abs(enumerate_transitions(p, x).total_mass() - 1.0));
                if (p.n == 3)
                {
                    table = std::max(table, table_residual(p, to_relative(x)));
                }
                for (std::size_t n1 = 1; n1 < p.n; ++n1)
                {
                    marginal = std::max(marginal, marginal_residual(p, x, n1));
                }
            }
            CommandResult out;
            out.result = {{"states", r.kernel_states},
                          {"tolerance", tol},
                          {"normalization_residual", normalization},
                          {"table_residual", p.n == 3 ? json(table) : json(nullptr)},
                          {"marginal_residual", p.n > 1 ? json(marginal) : json(nullptr)}};
            out.pass = normalization < tol && table < tol && marginal < tol;
            return out;
        }

        json drift_check_json(const DriftCheckResult &d)
        {
            return {{"domain_size", d.domain_size},
                    {"worst_drift", std::isnan(d.worst_drift) ? json(nullptr) : json(d.worst_drift)},
                    {"worst_state", d.worst_state},
                    {"finite_set_size", d.finite_set_size},
                    {"finite_set_radius", d.finite_set_radius},
                    {"finite_set_sup", d.finite_set_sup},
                    {"epsilon", d.epsilon},
                    {"note", d.note}};
        }

        CommandResult run_check(Resolved &r)
        {
            CommandResult out;
            const auto radius = static_cast<std::int64_t>(r.check_radius);
            if (r.test == "transience")
            {
                if (!r.check_delta)
                {
                    const auto found = find_transience_delta(r.params, radius);
                    if (!found)
                    {
                        out.pass = false;
                        out.result = {{"test", r.test}, {"delta", nullptr}, {"note", "no delta in 1, 1/2, 1/4, ... passes"}};
                        return out;
                    }
                    r.check_delta = *found;
                }
                const auto d = transience_check(r.params, *r.check_delta, radius);
                out.result = drift_check_json(d);
                out.result["test"] = r.test;
                out.result["delta"] = *r.check_delta;
                out.pass = d.verdict;
                return out;
            }

            FosterOptions options;
            options.finite_radius = r.finite_radius;
            options.threads = r.threads;
            DriftCheckResult d;
            if (r.test == "abs")
            {
                auto f = [](std::span<const std::int64_t> y)
                {
                    double s = 0.0;
                    for (auto v : y)
                    {
                        s += std::abs(static_cast<double>(v));
                    }
                    return s;
                };
                d = foster_check(r.params, f, CheckDomain::box(radius), options);
            }
            else
            {
                if (r.params.n != 3)
                {
                    throw Error(ErrorCode::LengthMismatch, "the phi test needs three processors");
                }
                const Contour c = resolve_contour(r);
                const auto hw = static_cast<std::int64_t>(std::ceil(static_cast<double>(radius) * c.max_radius())) + 1;
                d = foster_check(
                    r.params, [&c](std::span<const std::int64_t> y) { return phi(c, y); },
                    CheckDomain::level(static_cast<double>(radius), hw), options);
                out.result["contour"] = contour_json(c);
            }
            out.result.update(drift_check_json(d));
            out.result["test"] = r.test;
            out.pass = d.verdict;
            return out;
        }

        bool is_usage_error(ErrorCode code)
        {
            switch (code)
            {
            case ErrorCode::NonPositiveLambda:
            case ErrorCode::NegativeBeta:
            case ErrorCode::LengthMismatch:
            case ErrorCode::NonPositiveHorizon:
            case ErrorCode::BadRadii:
            case ErrorCode::ParamMismatch:
            case ErrorCode::IndexOutOfRange:
            case ErrorCode::ConfigParse:
            case ErrorCode::InvalidArgument:
                return true;
            default:
                return false;
            }
        }
    } // namespace

    ExperimentOutcome run_experiment(const json &config, std::string_view command)
    {
        ExperimentOutcome outcome;
        Resolved r;
        try
        {
            r = resolve(config, command);
        }
        catch (const Error &e)
        {
            outcome.exit_code = kExitUsage;
            outcome.diagnostic = e.what();
            return outcome;
        }
        outcome.output_path = r.output_path;
        outcome.csv_path = r.csv_path;

        try
        {
            CommandResult res;
            if (r.command == "speeds")
            {
                res = run_speeds(r);
            }
            else if (r.command == "simulate")
            {
                res = run_simulate(r);
            }
            else if (r.command == "groups")
            {
                res = run_groups(r);
            }
            else if (r.command == "drift")
            {
                res = run_drift(r);
            }
            else if (r.command == "couple")
            {
                res = run_couple(r);
            }
            else if (r.command == "kernel-check")
            {
                res = run_kernel_check(r);
            }
            else
            {
                res = run_check(r);
            }
            outcome.exit_code = res.pass ? kExitOk : kExitFailed;
            outcome.report = {{"command", r.command},
                              {"config", resolved_json(r)},
                              {"params", params_json(r.params)},
                              {"result", res.result},
                              {"verdict", res.pass ? "pass" : "fail"},
                              {"exit_code", outcome.exit_code}};
            outcome.csv = std::move(res.csv);
            if (!res.pass)
            {
                outcome.diagnostic = r.command + ": verification failed";
            }
        }
        catch (const Error &e)
        {
            outcome.exit_code = is_usage_error(e.code()) ? kExitUsage : kExitFailed;
            outcome.diagnostic = e.what();
            outcome.report = {{"command", r.command},
                              {"config", resolved_json(r)},
                              {"error", {{"code", to_string(e.code())}, {"message", e.what()}}},
                              {"verdict", "error"},
                              {"exit_code", outcome.exit_code}};
        }
        return outcome;
    }

    ExperimentOutcome run_experiment_text(std::string_view text, std::string_view command)
    {
        json config;
        try
        {
            config = json::parse(text);
        }
        catch (const json::parse_error &e)
        {
            ExperimentOutcome outcome;
            outcome.exit_code = kExitUsage;
            outcome.diagnostic = std::string(to_string(ErrorCode::ConfigParse)) + ": " + e.what();
            return outcome;
        }
        return run_experiment(config, command);
    }

    std::string render_report(const json &report) { return report.dump(2) + "\n"; }
} // namespace cascade
