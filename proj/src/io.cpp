#include "sogym/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace sogym {

namespace {

[[noreturn]] void field_error(std::string_view field, std::string_view what) {
    throw std::invalid_argument("field '" + std::string(field) + "': " + std::string(what));
}

double number_field(const json& j, const char* key) {
    if (!j.contains(key)) field_error(key, "missing");
    const json& v = j.at(key);
    if (!v.is_number()) field_error(key, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) field_error(key, "must be finite");
    return d;
}

Boundary boundary_field(const json& j, const char* key) {
    if (!j.contains(key)) field_error(key, "missing");
    const json& v = j.at(key);
    if (!v.is_string()) field_error(key, "expected one of left, right, top, bottom");
    const auto b = boundary_from_string(v.get<std::string>());
    if (!b) field_error(key, "expected one of left, right, top, bottom");
    return *b;
}

json optional_number(const std::optional<double>& v) {
    return v ? json(*v) : json(nullptr);
}

}  // namespace

json problem_to_json(const BoundaryProblem& p) {
    return json{{"b_s", std::string(to_string(p.support_boundary))},
                {"l_s", p.support_length},
                {"p_s", p.support_position},
                {"b_l", std::string(to_string(p.load_boundary))},
                {"p_l", p.load_position},
                {"theta_l", p.load_angle_deg},
                {"v_star", p.volume_fraction},
                {"h", p.height},
                {"w", p.width},
                {"seed", p.seed}};
}

BoundaryProblem problem_from_json(const json& j) {
    if (!j.is_object()) throw std::invalid_argument("problem: expected a JSON object");
    BoundaryProblem p;
    p.support_boundary = boundary_field(j, "b_s");
    p.support_length = number_field(j, "l_s");
    p.support_position = number_field(j, "p_s");
    p.load_boundary = boundary_field(j, "b_l");
    p.load_position = number_field(j, "p_l");
    p.load_angle_deg = number_field(j, "theta_l");
    p.volume_fraction = number_field(j, "v_star");
    p.height = number_field(j, "h");
    p.width = number_field(j, "w");
    if (j.contains("seed")) {
        const json& s = j.at("seed");
        if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0)) {
            field_error("seed", "expected a non-negative integer");
        }
        p.seed = s.get<std::uint64_t>();
    }
    validate(p);
    return p;
}

NormalizedAction action_from_json(const json& j) {
    if (!j.is_array() || j.size() != kVariablesPerComponent) {
        throw std::invalid_argument("action: expected an array of 6 numbers");
    }
    NormalizedAction a{};
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!j[i].is_number()) throw std::invalid_argument("action: entry " + std::to_string(i) + " is not a number");
        a[i] = j[i].get<double>();
        if (!std::isfinite(a[i])) throw std::invalid_argument("action: entry " + std::to_string(i) + " is not finite");
    }
    return a;
}

json action_to_json(const NormalizedAction& a) {
    return json(std::vector<double>(a.begin(), a.end()));
}

json record_to_json(const EpisodeRecord& r) {
    json actions = json::array();
    for (const NormalizedAction& a : r.actions) actions.push_back(action_to_json(a));
    return json{{"problem_id", r.problem_id},
                {"problem", problem_to_json(r.problem)},
                {"actions", actions},
                {"compliance", optional_number(r.compliance)},
                {"volume", r.volume},
                {"connected", r.connected},
                {"reward", r.reward},
                {"wall_seconds", r.wall_seconds},
                {"failed", r.failed},
                {"error", r.error}};
}

namespace {

EpisodeRecord record_fields(const json& j) {
    EpisodeRecord r;
    r.problem = problem_from_json(j.at("problem"));
    r.problem_id = j.contains("problem_id") ? j.at("problem_id").get<std::string>() : problem_id(r.problem);
    if (j.contains("actions")) {
        for (const json& a : j.at("actions")) r.actions.push_back(action_from_json(a));
    }
    if (j.contains("compliance") && !j.at("compliance").is_null()) r.compliance = j.at("compliance").get<double>();
    r.volume = number_field(j, "volume");
    r.connected = j.at("connected").get<bool>();
    r.reward = j.value("reward", 0.0);
    r.wall_seconds = j.value("wall_seconds", 0.0);
    r.failed = j.value("failed", false);
    r.error = j.value("error", std::string());
    if (r.compliance && !r.connected) throw std::invalid_argument("record: compliance present on a disconnected design");
    return r;
}

}  // namespace

EpisodeRecord record_from_json(const json& j) {
    if (!j.is_object()) throw std::invalid_argument("record: expected a JSON object");
    try {
        return record_fields(j);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("record: ") + e.what());
    }
}

json optrun_to_json(const OptRun& run) {
    json history = json::object();
    std::vector<int> iteration, inner;
    std::vector<std::string> phase;
    std::vector<double> compliance, volume, constraint, change;
    std::vector<bool> converged, connected;
    for (const IterationRecord& h : run.history) {
        iteration.push_back(h.iteration);
        phase.push_back(h.phase == Phase::Mma ? "mma" : "gcmma");
        compliance.push_back(h.compliance);
        volume.push_back(h.volume);
        constraint.push_back(h.constraint);
        change.push_back(h.max_change);
        inner.push_back(h.inner_iterations);
        converged.push_back(h.subproblem_converged);
        connected.push_back(h.connected);
    }
    history["iteration"] = iteration;
    history["phase"] = phase;
    history["compliance"] = compliance;
    history["volume"] = volume;
    history["constraint"] = constraint;
    history["max_change"] = change;
    history["inner_iterations"] = inner;
    history["subproblem_converged"] = converged;
    history["connected"] = connected;

    return json{{"problem", problem_to_json(run.problem)},
                {"components", run.components},
                {"history", history},
                {"switch_iteration", run.switch_iteration ? json(*run.switch_iteration) : json(nullptr)},
                {"final_design", run.final_design},
                {"final_iteration", run.final_iteration},
                {"initial_compliance", run.initial_compliance},
                {"final_compliance", run.final_compliance},
                {"final_volume", run.final_volume},
                {"connected", run.connected},
                {"failed", run.failed},
                {"stop_reason", run.stop_reason},
                {"error", run.error},
                {"wall_seconds", run.wall_seconds}};
}

json metrics_to_json(const MetricsReport& m) {
    return json{{"median_compliance_delta_pct", optional_number(m.median_compliance_delta)},
                {"disconnection_rate_pct", m.disconnection_rate},
                {"mean_volume_delta_pct", m.mean_volume_delta},
                {"records", m.records},
                {"matched", m.matched},
                {"connected_pairs", m.connected_pairs},
                {"disconnected", m.disconnected}};
}

json density_to_json(const DensityField& f) {
    return json{{"nx", f.nx}, {"ny", f.ny}, {"order", "iy*nx+ix"}, {"rho", f.rho}};
}

json raster_to_json(const Raster& r) {
    json channels = json::array();
    for (int c = 0; c < kRasterChannels; ++c) {
        json rows = json::array();
        for (int row = 0; row < kRasterSize; ++row) {
            const auto* begin = r.data.data() + (c * kRasterSize + row) * kRasterSize;
            rows.push_back(std::vector<int>(begin, begin + kRasterSize));
        }
        channels.push_back(std::move(rows));
    }
    return channels;
}

std::string base64_encode(std::string_view bytes) {
    static constexpr char kTable[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 2 < bytes.size(); i += 3) {
        const unsigned v = (static_cast<unsigned char>(bytes[i]) << 16) | (static_cast<unsigned char>(bytes[i + 1]) << 8) |
                           static_cast<unsigned char>(bytes[i + 2]);
        out += kTable[(v >> 18) & 63];
        out += kTable[(v >> 12) & 63];
        out += kTable[(v >> 6) & 63];
        out += kTable[v & 63];
    }
    if (i < bytes.size()) {
        unsigned v = static_cast<unsigned char>(bytes[i]) << 16;
        if (i + 1 < bytes.size()) v |= static_cast<unsigned char>(bytes[i + 1]) << 8;
        out += kTable[(v >> 18) & 63];
        out += kTable[(v >> 12) & 63];
        out += i + 1 < bytes.size() ? kTable[(v >> 6) & 63] : '=';
        out += '=';
    }
    return out;
}

json observation_to_json(const Observation& o) {
    json j{{"beta", o.beta},
           {"steps_left", o.steps_left},
           {"design_variables", o.design_variables},
           {"volume", o.volume}};
    auto image = [](const Raster& r) {
        return json{{"shape", {kRasterChannels, kRasterSize, kRasterSize}},
                    {"data", raster_to_json(r)},
                    {"png", base64_encode(encode_png(r))}};
    };
    if (o.design_image) j["design_image"] = image(*o.design_image);
    if (o.strain_image) j["strain_image"] = image(*o.strain_image);
    if (o.score) j["score"] = *o.score;
    return j;
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(path.string() + ": " + e.what());
    }
}

void write_json_file(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

std::vector<json> read_json_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open " + path.string());
    std::vector<json> out;
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(json::parse(line));
        } catch (const json::parse_error& e) {
            throw std::invalid_argument(path.string() + ":" + std::to_string(n) + ": " + e.what());
        }
    }
    return out;
}

void write_json_lines(const std::filesystem::path& path, const std::vector<json>& values) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (const json& v : values) out << v.dump() << '\n';
}

std::vector<EpisodeRecord> read_records(const std::filesystem::path& path) {
    std::vector<EpisodeRecord> out;
    for (const json& j : read_json_lines(path)) out.push_back(record_from_json(j));
    return out;
}

void write_records(const std::filesystem::path& path, const std::vector<EpisodeRecord>& records) {
    std::vector<json> lines;
    for (const EpisodeRecord& r : records) lines.push_back(record_to_json(r));
    write_json_lines(path, lines);
}

std::vector<ProblemEntry> read_problems(const std::filesystem::path& path) {
    std::vector<json> items;
    if (path.extension() == ".jsonl") {
        items = read_json_lines(path);
    } else {
        json j = read_json_file(path);
        if (j.is_array()) items.assign(j.begin(), j.end());
        else items.push_back(std::move(j));
    }
    std::vector<ProblemEntry> out;
    for (const json& j : items) {
        ProblemEntry e;
        e.problem = problem_from_json(j);
        e.id = j.contains("id") && j.at("id").is_string() ? j.at("id").get<std::string>() : problem_id(e.problem);
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace sogym
