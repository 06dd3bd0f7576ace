#include "qsched/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace qsched {

namespace {

using nlohmann::json;

json parse_file(const std::string& path, Errc code) {
    std::ifstream in(path);
    if (!in)
        throw Error(code, "cannot open " + path);
    try {
        return json::parse(in, nullptr, /*allow_exceptions=*/true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw Error(code, path + ": " + e.what());
    }
}

std::vector<double> number_array(const json& j, const std::string& path, const char* key) {
    if (!j.contains(key))
        throw Error(Errc::ConfigParse, path + ": missing field '" + key + "'");
    const json& a = j.at(key);
    if (!a.is_array() || a.empty())
        throw Error(Errc::ConfigParse, path + ": '" + key + "' must be a non-empty array");
    std::vector<double> out;
    out.reserve(a.size());
    for (size_t i = 0; i < a.size(); ++i) {
        if (!a[i].is_number())
            throw Error(Errc::ConfigParse, path + ": '" + key + "[" + std::to_string(i) +
                                               "]' is not a number");
        out.push_back(a[i].get<double>());
    }
    return out;
}

} // namespace

std::string tool_version() { return "qsched 0.1.0"; }

std::string format_value(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return std::string(buf);
}

RunConfig load_config(const std::string& path) {
    json j = parse_file(path, Errc::ConfigParse);
    std::vector<double> theta = number_array(j, path, "theta");
    std::vector<double> eta = number_array(j, path, "eta");
    std::vector<double> power = number_array(j, path, "power");
    if (!j.contains("K") || !j.at("K").is_number_integer())
        throw Error(Errc::ConfigParse, path + ": missing integer field 'K'");
    int cap = j.at("K").get<int>();

    SystemConfig system = [&] {
        try {
            return validate(theta, eta, power, cap);
        } catch (const Error& e) {
            throw Error(Errc::ConfigParse, path + ": " + e.what());
        }
    }();

    RunConfig rc{std::move(system), {}, {}, {}, {}};
    if (j.contains("budget"))
        rc.budget = j.at("budget").get<double>();
    if (j.contains("budgets"))
        rc.budgets = number_array(j, path, "budgets");
    if (j.contains("slots"))
        rc.slots = j.at("slots").get<std::int64_t>();
    if (j.contains("seed"))
        rc.seed = j.at("seed").get<std::uint64_t>();
    return rc;
}

std::string RunManifest::to_comment(const std::string& prefix) const {
    std::ostringstream out;
    out << prefix << " " << version << " | command: " << command;
    if (!parameters.empty())
        out << " | " << parameters;
    out << "\n"
        << prefix << " config: " << config_path << " | seed: " << seed
        << " | generated: " << (timestamp.empty() ? "-" : timestamp) << "\n";
    return out.str();
}

void save_policy(const std::string& path, const ThresholdPolicy& tp, const SystemConfig& config,
                 const SolveResult& predicted, const RunManifest& manifest) {
    json j;
    j["thresholds"] = tp.threshold;
    j["frac"] = tp.frac;
    j["K"] = config.buffer_capacity();
    j["W"] = config.num_channel_states();
    j["predicted"] = {{"delay", predicted.delay},
                      {"power", predicted.power},
                      {"boundary_mass", predicted.boundary_mass}};
    std::ofstream out(path);
    if (!out)
        throw Error(Errc::PolicyParse, "cannot write " + path);
    out << manifest.to_comment("//") << j.dump(2) << "\n";
}

ThresholdPolicy load_policy(const std::string& path, const SystemConfig& config) {
    json j = parse_file(path, Errc::PolicyParse);
    ThresholdPolicy tp;
    if (!j.contains("thresholds") || !j.contains("frac"))
        throw Error(Errc::PolicyParse, path + ": needs 'thresholds' and 'frac' arrays");
    tp.threshold = j.at("thresholds").get<std::vector<int>>();
    tp.frac = j.at("frac").get<std::vector<double>>();
    if (static_cast<int>(tp.threshold.size()) != config.num_channel_states() ||
        tp.frac.size() != tp.threshold.size())
        throw Error(Errc::PolicyParse,
                    path + ": policy width does not match the config's channel count");
    if (j.contains("K") && j.at("K").get<int>() != config.buffer_capacity())
        throw Error(Errc::PolicyParse, path + ": policy was solved for a different K");
    for (size_t w = 0; w < tp.threshold.size(); ++w) {
        if (tp.threshold[w] < 1 || tp.threshold[w] > config.buffer_capacity() + 1)
            throw Error(Errc::PolicyParse, path + ": threshold outside [1, K+1]");
        if (!(tp.frac[w] >= 0.0 && tp.frac[w] <= 1.0))
            throw Error(Errc::PolicyParse, path + ": frac outside [0, 1]");
    }
    return tp;
}

std::string sweep_to_csv(const std::vector<TradeoffPoint>& points, int num_channel_states,
                         const RunManifest& manifest) {
    std::ostringstream out;
    out << manifest.to_comment("#");
    out << "budget,power_used,delay";
    for (int w = 1; w <= num_channel_states; ++w)
        out << ",K_" << w;
    for (int w = 1; w <= num_channel_states; ++w)
        out << ",frac_" << w;
    out << "\n";
    for (const TradeoffPoint& pt : points) {
        if (!pt.feasible) {
            out << "# infeasible: budget=" << format_value(pt.budget) << "\n";
            continue;
        }
        out << format_value(pt.budget) << "," << format_value(pt.power) << ","
            << format_value(pt.delay);
        for (int v : pt.policy.threshold)
            out << "," << v;
        for (double fr : pt.policy.frac)
            out << "," << format_value(fr);
        out << "\n";
    }
    return out.str();
}

std::string gnuplot_script(const std::string& csv_path) {
    std::ostringstream out;
    out << "set datafile separator ','\n"
        << "set xlabel 'average power budget'\n"
        << "set ylabel 'average delay (slots)'\n"
        << "set grid\n"
        << "plot '" << csv_path << "' using 1:3 with linespoints title 'optimal tradeoff'\n";
    return out.str();
}

} // namespace qsched
