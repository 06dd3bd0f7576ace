#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qsched/io.hpp"
#include "qsched/oracle.hpp"
#include "qsched/sim.hpp"

namespace {

using namespace qsched;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitVerifyFailed = 3;

std::string now_string() {
    std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return std::string(buf);
}

RunManifest make_manifest(const std::string& config_path, const std::string& command,
                          const std::string& parameters, std::uint64_t seed, bool timestamp) {
    RunManifest m;
    m.config_path = config_path;
    m.command = command;
    m.parameters = parameters;
    m.seed = seed;
    m.version = tool_version();
    m.timestamp = timestamp ? now_string() : "-";
    return m;
}

void warn_boundary_mass(double mass) {
    if (mass > 1e-6)
        std::cerr << "warning: stationary mass " << format_value(mass)
                  << " at the buffer cap; results depend on K, consider a larger buffer\n";
}

int cmd_solve(const std::string& config_path, double budget_flag, bool has_budget,
              const std::string& out_path, bool timestamp) {
    RunConfig rc = load_config(config_path);
    double budget = has_budget ? budget_flag : rc.budget.value_or(-1.0);
    if (budget < 0.0) {
        std::cerr << "error: no power budget given (flag --budget or config key)\n";
        return kExitUsage;
    }
    SolveResult res = solve_for_policy(rc.system, budget);
    if (res.status != LpStatus::Optimal) {
        std::cerr << "infeasible: no stable policy within budget "
                  << format_value(budget) << "\n";
        return kExitInfeasible;
    }
    warn_boundary_mass(res.boundary_mass);

    std::cout << "budget          " << format_value(budget) << "\n"
              << "optimal delay   " << format_value(res.delay) << " slots\n"
              << "power used      " << format_value(res.power) << "\n";
    for (size_t w = 0; w < res.policy.threshold.size(); ++w)
        std::cout << "channel " << w + 1 << "       threshold " << res.policy.threshold[w]
                  << "  frac " << format_value(res.policy.frac[w]) << "\n";

    if (!out_path.empty()) {
        RunManifest manifest = make_manifest(
            config_path, "solve", "budget=" + format_value(budget), 0, timestamp);
        save_policy(out_path, res.policy, rc.system, res, manifest);
        std::cout << "policy written to " << out_path << "\n";
    }
    return kExitOk;
}

int cmd_sweep(const std::string& config_path, std::vector<double> budgets, int auto_n,
              const std::string& out_path, bool gnuplot, bool timestamp) {
    RunConfig rc = load_config(config_path);
    if (budgets.empty())
        budgets = rc.budgets;
    if (budgets.empty())
        budgets = default_budget_grid(rc.system, auto_n);
    std::sort(budgets.begin(), budgets.end());

    std::vector<TradeoffPoint> points = sweep(rc.system, budgets);
    double worst_mass = 0.0;
    for (const TradeoffPoint& pt : points)
        if (pt.feasible)
            worst_mass = std::max(worst_mass, pt.boundary_mass);
    warn_boundary_mass(worst_mass);

    std::ostringstream params;
    params << "budgets=" << budgets.size();
    RunManifest manifest =
        make_manifest(config_path, "sweep", params.str(), rc.seed.value_or(0), timestamp);
    std::string csv = sweep_to_csv(points, rc.system.num_channel_states(), manifest);
    if (out_path.empty()) {
        std::cout << csv;
    } else {
        std::ofstream out(out_path);
        if (!out) {
            std::cerr << "error: cannot write " << out_path << "\n";
            return kExitUsage;
        }
        out << csv;
        std::cout << "sweep written to " << out_path << " (" << points.size() << " budgets)\n";
        if (gnuplot) {
            std::string gp_path = out_path + ".gp";
            std::ofstream gp(gp_path);
            gp << gnuplot_script(out_path);
            std::cout << "gnuplot script written to " << gp_path << "\n";
        }
    }
    return kExitOk;
}

int cmd_simulate(const std::string& config_path, const std::string& policy_path,
                 std::int64_t slots, std::uint64_t seed, int batches, bool sojourn) {
    RunConfig rc = load_config(config_path);
    ThresholdPolicy tp = load_policy(policy_path, rc.system);
    Policy policy = threshold_to_policy(tp, rc.system);

    PolicyMetrics theory = evaluate_policy(rc.system, policy);
    warn_boundary_mass(theory.stationary[rc.system.buffer_capacity()]);

    SimConfig sc;
    sc.n_slots = slots;
    sc.seed = seed;
    sc.warmup = std::min<std::int64_t>(10'000, slots / 10);
    sc.track_sojourn = sojourn;

    auto print_line = [](const char* name, double th, double emp) {
        double rel = th != 0.0 ? (emp - th) / th : 0.0;
        std::printf("%-14s theory %-15s empirical %-15s rel.err %+.3e\n", name,
                    format_value(th).c_str(), format_value(emp).c_str(), rel);
    };

    if (batches <= 1) {
        SimResult r = simulate(rc.system, policy, sc);
        print_line("delay", theory.delay, r.empirical_delay);
        print_line("power", theory.power, r.empirical_power);
        std::printf("%-14s %s packets/slot lost (%s of arrivals)\n", "loss",
                    format_value(r.loss_rate * mean_rate(rc.system.arrival())).c_str(),
                    format_value(r.loss_rate).c_str());
        if (sojourn)
            std::printf("%-14s %s slots (per-packet FIFO)\n", "sojourn",
                        format_value(r.sojourn_delay).c_str());
        std::printf("%-14s %lld slots, seed %llu\n", "run",
                    static_cast<long long>(r.slots_run),
                    static_cast<unsigned long long>(seed));
    } else {
        std::vector<double> delays, powers;
        for (int b = 0; b < batches; ++b) {
            SimConfig bc = sc;
            bc.seed = SplitMix64::stream(seed, static_cast<std::uint64_t>(b)).next_u64();
            SimResult r = simulate(rc.system, policy, bc);
            delays.push_back(r.empirical_delay);
            powers.push_back(r.empirical_power);
        }
        Confidence cd = confidence(delays);
        Confidence cp = confidence(powers);
        print_line("delay", theory.delay, cd.mean);
        std::printf("%-14s 95%% half-width %s\n", "", format_value(cd.half_width).c_str());
        print_line("power", theory.power, cp.mean);
        std::printf("%-14s 95%% half-width %s\n", "", format_value(cp.half_width).c_str());
    }
    return kExitOk;
}

int cmd_verify(const std::string& config_path, std::uint64_t seed, int n_policies,
               double tamper_g) {
    RunConfig rc = load_config(config_path);
    if (tamper_g != 0.0)
        set_g_tamper(tamper_g);

    bool ok = true;

    TransformReport rep = verify_transformations(rc.system, n_policies, seed);
    std::cout << rep.to_text();
    ok = ok && rep.pass();

    std::cout << "\nLP vs exhaustive threshold enumeration\n";
    try {
        HullCheck hull = hull_vs_lp(rc.system);
        std::printf("  %zu budgets in [%s, %s]\n", hull.budgets.size(),
                    format_value(hull.budgets.front()).c_str(),
                    format_value(hull.budgets.back()).c_str());
        std::printf("  max |LP delay - hull delay|     %.3e  (tol %.0e)\n", hull.max_gap,
                    hull.tol);
        std::printf("  max fractional entries/column   %d\n", hull.max_fractional);
        std::printf("  threshold structure             %s\n",
                    hull.threshold_structured ? "held" : "VIOLATED");
        std::printf("  verdict                         %s\n", hull.pass() ? "PASS" : "FAIL");
        ok = ok && hull.pass();

        double mid = std::sqrt(hull.budgets.front() * hull.budgets.back());
        DominanceCheck dom = dominance_check(rc.system, mid, 200, seed + 1);
        std::cout << "\ndominance sample at budget " << format_value(mid) << "\n";
        std::printf("  %d feasible policies of %d sampled\n", dom.n_feasible, dom.n_sampled);
        std::printf("  min delay margin over LP        %.3e\n", dom.min_margin);
        std::printf("  verdict                         %s\n", dom.pass() ? "PASS" : "FAIL");
        ok = ok && dom.pass();
    } catch (const Error& e) {
        std::cout << "  " << e.what() << "\n  verdict                         FAIL\n";
        ok = false;
    }

    std::cout << "\noverall: " << (ok ? "PASS" : "FAIL") << "\n";
    return ok ? kExitOk : kExitVerifyFailed;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"delay-optimal power-constrained packet scheduling toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_path, policy_path;
    double budget = 0.0;
    std::vector<double> budgets;
    int auto_n = 60;
    bool gnuplot = false, timestamp = false, sojourn = false;
    std::int64_t slots = 1'000'000;
    std::uint64_t seed = 1;
    int batches = 1, n_policies = 200;
    double tamper_g = 0.0;

    CLI::App* solve = app.add_subcommand("solve", "optimal thresholds for one power budget");
    solve->add_option("config", config_path, "JSON system config")->required();
    CLI::Option* budget_opt = solve->add_option("--budget", budget, "average power budget");
    solve->add_option("-o,--output", out_path, "write the threshold policy (JSON)");
    solve->add_flag("--timestamp", timestamp, "embed wall-clock time in the manifest");

    CLI::App* sw = app.add_subcommand("sweep", "delay-power tradeoff curve");
    sw->add_option("config", config_path, "JSON system config")->required();
    sw->add_option("--budgets", budgets, "explicit budget list")->delimiter(',');
    sw->add_option("--auto", auto_n, "log-spaced budget count (default 60)");
    sw->add_option("-o,--output", out_path, "write CSV here instead of stdout");
    sw->add_flag("--gnuplot", gnuplot, "also emit a gnuplot script");
    sw->add_flag("--timestamp", timestamp, "embed wall-clock time in the manifest");

    CLI::App* sim = app.add_subcommand("simulate", "Monte Carlo check of a policy file");
    sim->add_option("config", config_path, "JSON system config")->required();
    sim->add_option("policy", policy_path, "threshold policy JSON (from solve)")->required();
    sim->add_option("--slots", slots, "slots per run (default 1e6)");
    sim->add_option("--seed", seed, "RNG seed");
    sim->add_option("--batches", batches, "independent batches (>= 10 gives a 95% CI)");
    sim->add_flag("--sojourn", sojourn, "track per-packet FIFO delay too");

    CLI::App* verify = app.add_subcommand("verify", "oracle suite on a small instance");
    verify->add_option("config", config_path, "JSON system config (small K, W)")->required();
    verify->add_option("--seed", seed, "RNG seed");
    verify->add_option("--policies", n_policies, "random policies for the identity checks");
    verify->add_option("--tamper-g", tamper_g, "fault injection: scale one G entry")
        ->group(""); // hidden

    CLI11_PARSE(app, argc, argv);

    try {
        if (solve->parsed())
            return cmd_solve(config_path, budget, budget_opt->count() > 0, out_path, timestamp);
        if (sw->parsed())
            return cmd_sweep(config_path, budgets, auto_n, out_path, gnuplot, timestamp);
        if (sim->parsed())
            return cmd_simulate(config_path, policy_path, slots, seed, batches, sojourn);
        if (verify->parsed())
            return cmd_verify(config_path, seed, n_policies, tamper_g);
    } catch (const qsched::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        switch (e.code()) {
        case qsched::Errc::ConfigParse:
        case qsched::Errc::PolicyParse:
            return kExitUsage;
        default:
            return kExitUsage;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
