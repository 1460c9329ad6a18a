#include "mbl/serialize.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mbl/errors.hpp"

namespace mbl {

std::string format_number(double value, int digits) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", digits, value);
    return buf;
}

namespace {

// JSON has no infinities or NaN.
std::string json_number(double value) {
    if (!std::isfinite(value)) return "null";
    return format_number(value, 17);
}

template <typename Vector>
void append_array(std::ostringstream& out, const Vector& values) {
    out << '[';
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        if (i) out << ',';
        out << json_number(values[i]);
    }
    out << ']';
}

}  // namespace

std::string instance_to_json(const Instance& inst) {
    std::ostringstream out;
    out << "{\"kind\":\"" << to_string(inst.kind) << "\""
        << ",\"n_actions\":" << inst.n_actions() << ",\"dim\":" << inst.dim()
        << ",\"epsilon\":" << json_number(inst.epsilon) << ",\"seed\":" << inst.seed << ",\"x_star\":";
    if (inst.x_star) out << *inst.x_star; else out << "null";
    out << ",\"features\":";
    append_array(out, Eigen::Map<const Eigen::VectorXd>(inst.features.data(), inst.features.size()));
    out << ",\"rewards\":";
    append_array(out, inst.rewards);
    out << ",\"certificate\":{\"theta\":";
    append_array(out, inst.certificate.theta);
    out << ",\"achieved_error\":" << json_number(inst.certificate.achieved_error) << "}}\n";
    return out.str();
}

Instance instance_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidParam(std::string("malformed instance JSON: ") + e.what());
    }
    try {
        Instance inst;
        inst.kind = parse_instance_kind(j.at("kind").get<std::string>());
        const auto n = j.at("n_actions").get<Eigen::Index>();
        const auto d = j.at("dim").get<Eigen::Index>();
        if (n < 1 || d < 1) throw InvalidParam("instance sizes must be positive");
        inst.epsilon = j.at("epsilon").get<double>();
        inst.seed = j.at("seed").get<std::uint64_t>();
        if (!j.at("x_star").is_null()) inst.x_star = j.at("x_star").get<Action>();

        const auto features = j.at("features").get<std::vector<double>>();
        const auto rewards = j.at("rewards").get<std::vector<double>>();
        if (static_cast<Eigen::Index>(features.size()) != n * d) throw DimensionMismatch("features size mismatch");
        if (static_cast<Eigen::Index>(rewards.size()) != n) throw DimensionMismatch("rewards size mismatch");
        inst.features = Eigen::Map<const FeatureMatrix>(features.data(), n, d);
        inst.rewards = Eigen::Map<const Eigen::VectorXd>(rewards.data(), n);

        const auto theta = j.at("certificate").at("theta").get<std::vector<double>>();
        if (static_cast<Eigen::Index>(theta.size()) != d) throw DimensionMismatch("certificate size mismatch");
        inst.certificate = certify_misspecification(inst, Eigen::Map<const Eigen::VectorXd>(theta.data(), d));
        return inst;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidParam(std::string("instance JSON schema error: ") + e.what());
    }
}

void write_instance(const std::filesystem::path& path, const Instance& instance) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << instance_to_json(instance);
    if (!out) throw IoError("failed writing " + path.string());
}

Instance read_instance(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return instance_from_json(buf.str());
}

void write_trace_jsonl(std::ostream& out, const Instance& instance, const Trace& trace) {
    for (const Round& r : trace.rounds) {
        out << "{\"t\":" << r.t << ",\"action\":" << r.action << ",\"width\":" << json_number(r.width)
            << ",\"y\":" << json_number(r.y) << "}\n";
    }
    out << "{\"stopped\":" << (trace.stopped ? "true" : "false") << ",\"trials\":" << trace.trials
        << ",\"recommendation\":";
    if (trace.recommendation) out << *trace.recommendation; else out << "null";
    out << ",\"recommendation_optimal\":" << (recommendation_optimal(instance, trace) ? "true" : "false")
        << ",\"bound_B\":" << json_number(trace.bound_B)
        << ",\"epsilon_prime_min\":" << json_number(trace.epsilon_prime_min)
        << ",\"wide_rounds\":" << trace.wide_round_count << "}\n";
}

nlohmann::json state_to_json(const ConfidenceState& state) {
    nlohmann::json j;
    j["t"] = state.t();
    j["dim"] = state.dim();
    j["epsilon"] = state.epsilon();
    const Eigen::MatrixXd& g = state.gram();
    j["gram"] = std::vector<double>(g.data(), g.data() + g.size());
    j["xy"] = std::vector<double>(state.xy().data(), state.xy().data() + state.xy().size());
    nlohmann::json history = nlohmann::json::array();
    for (const auto& obs : state.history()) {
        history.push_back({{"phi", std::vector<double>(obs.phi.data(), obs.phi.data() + obs.phi.size())},
                           {"y", obs.y}});
    }
    j["history"] = std::move(history);
    return j;
}

ConfidenceState state_from_json(const nlohmann::json& j) {
    ConfidenceState state(j.at("dim").get<int>(), j.at("epsilon").get<double>());
    for (const auto& obs : j.at("history")) {
        const auto phi = obs.at("phi").get<std::vector<double>>();
        state = update(std::move(state),
                       Eigen::Map<const Eigen::VectorXd>(phi.data(), static_cast<Eigen::Index>(phi.size())),
                       obs.at("y").get<double>());
    }
    return state;
}

}  // namespace mbl
