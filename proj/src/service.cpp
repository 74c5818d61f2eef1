#include "sogym/service.hpp"

#include <algorithm>
#include <atomic>
#include <ctime>
#include <fstream>
#include <stdexcept>

#include "sogym/eval.hpp"
#include "sogym/io.hpp"

// After Eigen: the resolver header it pulls in defines a macro named _res.
#include "httplib.h"

namespace sogym {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

ApiResult error(int status, const std::string& message) {
    json body{{"error", message}, {"status", status}};
    // Problem parse errors read "field 'name': ..."; expose the name.
    const std::string prefix = "field '";
    if (message.rfind(prefix, 0) == 0) {
        const auto end = message.find('\'', prefix.size());
        if (end != std::string::npos) body["field"] = message.substr(prefix.size(), end - prefix.size());
    }
    return {status, std::move(body)};
}

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json actions_to_json(const std::vector<NormalizedAction>& actions) {
    json out = json::array();
    for (const NormalizedAction& a : actions) out.push_back(action_to_json(a));
    return out;
}

}  // namespace

json leaderboard_entry_to_json(const LeaderboardEntry& e) {
    return json{{"entry_id", e.entry_id},
                {"player", e.player},
                {"problem_id", e.problem_id},
                {"score", e.score},
                {"session_id", e.session_id},
                {"timestamp", e.timestamp},
                {"problem", problem_to_json(e.problem)},
                {"actions", actions_to_json(e.actions)},
                {"observation_mode", e.observation_mode},
                {"reward_mode", e.reward_mode}};
}

LeaderboardEntry leaderboard_entry_from_json(const json& j) {
    if (!j.is_object()) throw std::invalid_argument("leaderboard entry: expected a JSON object");
    try {
        LeaderboardEntry e;
        e.entry_id = j.at("entry_id").get<std::string>();
        e.player = j.at("player").get<std::string>();
        e.problem_id = j.at("problem_id").get<std::string>();
        e.score = j.at("score").get<double>();
        e.session_id = j.value("session_id", std::string());
        e.timestamp = j.value("timestamp", std::string());
        e.problem = problem_from_json(j.at("problem"));
        for (const json& a : j.at("actions")) e.actions.push_back(action_from_json(a));
        e.observation_mode = j.value("observation_mode", std::string(to_string(ObservationMode::TopOptGame)));
        e.reward_mode = j.value("reward_mode", std::string(to_string(RewardMode::SparseTerminal)));
        return e;
    } catch (const json::exception& ex) {
        throw std::invalid_argument(std::string("leaderboard entry: ") + ex.what());
    }
}

std::optional<double> replay_score(const LeaderboardEntry& e, const EnvConfig& base) {
    EnvConfig cfg = base;
    const auto mode = observation_mode_from_string(e.observation_mode);
    const auto reward = reward_mode_from_string(e.reward_mode);
    if (!mode || !reward) return std::nullopt;
    cfg.observation = *mode;
    cfg.reward.mode = *reward;
    Environment env(cfg);
    env.reset(e.problem);
    bool done = false;
    for (const NormalizedAction& a : e.actions) {
        if (done) return std::nullopt;
        done = env.step(a).done;
    }
    if (!done) return std::nullopt;
    return env.state().score;
}

struct SessionService::Session {
    std::mutex mutex;
    std::string id;
    Environment env;
    std::optional<std::uint64_t> seed;
    std::string problem_id;
    std::atomic<Clock::rep> last_used;
    std::optional<std::string> submitted_entry;

    Session(std::string id_, EnvConfig cfg) : id(std::move(id_)), env(std::move(cfg)), last_used(now()) {}
    static Clock::rep now() { return Clock::now().time_since_epoch().count(); }
    void touch() { last_used = now(); }

    json view(const Observation& obs) const {
        const EpisodeState& s = env.state();
        return json{{"session_id", id},
                    {"seed", seed ? json(*seed) : json(nullptr)},
                    {"problem_id", problem_id},
                    {"problem", problem_to_json(s.problem)},
                    {"mode", std::string(to_string(env.config().observation))},
                    {"reward_mode", std::string(to_string(env.config().reward.mode))},
                    {"t_max", s.t_max},
                    {"step", s.t},
                    {"done", s.done},
                    {"reward", s.reward},
                    {"score", s.score},
                    {"connected", s.connected},
                    {"volume", s.volume()},
                    {"compliance", s.compliance() ? json(*s.compliance()) : json(nullptr)},
                    {"actions", actions_to_json(s.actions)},
                    {"submitted", submitted_entry ? json(*submitted_entry) : json(nullptr)},
                    {"observation", observation_to_json(obs)}};
    }
};

SessionService::SessionService(ServiceConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.id_seed) rng_.seed(*cfg_.id_seed);
    else rng_.seed((static_cast<std::uint64_t>(std::random_device{}()) << 32) ^ std::random_device{}());
    if (cfg_.data_dir.empty()) return;
    std::filesystem::create_directories(cfg_.data_dir);
    const auto board = cfg_.data_dir / "leaderboard.jsonl";
    if (std::filesystem::exists(board)) {
        for (const json& j : read_json_lines(board)) entries_.push_back(leaderboard_entry_from_json(j));
    }
}

SessionService::~SessionService() = default;

std::string SessionService::new_token() {
    std::lock_guard lock(rng_mutex_);
    char buf[33];
    std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(rng_()),
                  static_cast<unsigned long long>(rng_()));
    return buf;
}

std::size_t SessionService::session_count() const {
    std::lock_guard lock(sessions_mutex_);
    return sessions_.size();
}

std::size_t SessionService::expire_idle() {
    const Clock::rep cutoff = Session::now() - std::chrono::duration_cast<Clock::duration>(cfg_.ttl).count();
    std::lock_guard lock(sessions_mutex_);
    return std::erase_if(sessions_, [&](const auto& kv) { return kv.second->last_used.load() < cutoff; });
}

std::shared_ptr<SessionService::Session> SessionService::find(const std::string& id) {
    expire_idle();
    std::lock_guard lock(sessions_mutex_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) return nullptr;
    it->second->touch();
    return it->second;
}

void SessionService::append(const std::filesystem::path& file, const json& line) {
    if (cfg_.data_dir.empty()) return;
    std::ofstream out(cfg_.data_dir / file, std::ios::app);
    if (!out) throw std::runtime_error("cannot append to " + (cfg_.data_dir / file).string());
    out << line.dump() << '\n';
    out.flush();
    if (!out) throw std::runtime_error("write failed on " + (cfg_.data_dir / file).string());
}

ApiResult SessionService::create_session(const json& request) {
    const json req = request.is_null() ? json::object() : request;
    if (!req.is_object()) return error(400, "request: expected a JSON object");

    EnvConfig cfg = cfg_.env;
    cfg.observation = ObservationMode::TopOptGame;
    if (req.contains("mode")) {
        const json& m = req.at("mode");
        const auto mode = m.is_string() ? observation_mode_from_string(m.get<std::string>()) : std::nullopt;
        if (!mode) return error(400, "field 'mode': expected one of vector, image, topopt_game");
        cfg.observation = *mode;
    }
    if (req.contains("reward_mode")) {
        const json& m = req.at("reward_mode");
        const auto mode = m.is_string() ? reward_mode_from_string(m.get<std::string>()) : std::nullopt;
        if (!mode) return error(400, "field 'reward_mode': expected one of sparse_terminal, soft_volume, strain_uniform");
        cfg.reward.mode = *mode;
    }

    BoundaryProblem problem;
    std::optional<std::uint64_t> seed;
    if (req.contains("problem")) {
        if (req.contains("seed")) return error(400, "request: give either seed or problem, not both");
        try {
            problem = problem_from_json(req.at("problem"));
        } catch (const std::invalid_argument& e) {
            return error(400, e.what());
        }
        seed = problem.seed;
    } else {
        if (req.contains("seed")) {
            const json& s = req.at("seed");
            if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0)) {
                return error(400, "field 'seed': expected a non-negative integer");
            }
            seed = s.get<std::uint64_t>();
        } else {
            std::lock_guard lock(rng_mutex_);
            seed = rng_() >> 11;  // exact in a JSON double
        }
        problem = sample(*seed);
    }

    auto session = std::make_shared<Session>(new_token(), cfg);
    session->seed = seed;
    session->problem_id = problem_id(problem);
    const Observation obs = session->env.reset(problem);

    expire_idle();
    {
        std::lock_guard lock(sessions_mutex_);
        if (sessions_.size() >= cfg_.max_sessions) return error(503, "session capacity reached");
        sessions_.emplace(session->id, session);
    }
    std::lock_guard lock(session->mutex);
    return {201, session->view(obs)};
}

ApiResult SessionService::get_session(const std::string& id) {
    const auto session = find(id);
    if (!session) return error(404, "unknown session " + id);
    std::lock_guard lock(session->mutex);
    return {200, session->view(session->env.observe())};
}

ApiResult SessionService::post_action(const std::string& id, const json& request) {
    const auto session = find(id);
    if (!session) return error(404, "unknown session " + id);
    NormalizedAction action{};
    try {
        const json& a = request.is_object() && request.contains("action") ? request.at("action") : request;
        action = action_from_json(a);
    } catch (const std::invalid_argument& e) {
        return error(422, e.what());
    }
    std::lock_guard lock(session->mutex);
    if (session->env.state().done) return error(409, "episode is done; reset or submit");
    const StepResult r = session->env.step(action);
    json body = session->view(r.observation);
    return {200, std::move(body)};
}

ApiResult SessionService::reset_session(const std::string& id) {
    const auto session = find(id);
    if (!session) return error(404, "unknown session " + id);
    std::lock_guard lock(session->mutex);
    const BoundaryProblem p = session->env.state().problem;
    const Observation obs = session->env.reset(p);
    session->submitted_entry.reset();
    return {200, session->view(obs)};
}

ApiResult SessionService::submit(const std::string& id, const json& request) {
    const auto session = find(id);
    if (!session) return error(404, "unknown session " + id);
    if (!request.is_object() || !request.contains("player") || !request.at("player").is_string()) {
        return error(400, "field 'player': expected a string");
    }
    const std::string player = request.at("player").get<std::string>();
    if (player.empty() || player.size() > 64) return error(400, "field 'player': expected 1 to 64 characters");

    std::lock_guard lock(session->mutex);
    const EpisodeState& s = session->env.state();
    if (!s.done) return error(409, "episode is not finished");
    if (session->submitted_entry) return error(409, "episode already submitted as " + *session->submitted_entry);

    LeaderboardEntry e;
    e.entry_id = new_token();
    e.player = player;
    e.problem_id = session->problem_id;
    e.session_id = session->id;
    e.timestamp = utc_now();
    e.problem = s.problem;
    e.actions = s.actions;
    e.observation_mode = std::string(to_string(session->env.config().observation));
    e.reward_mode = std::string(to_string(session->env.config().reward.mode));

    // The client never reports a score: it is recomputed from the actions
    // and must agree with the live episode to the bit.
    const std::optional<double> replayed = replay_score(e, session->env.config());
    if (!replayed || *replayed != s.score) {
        return error(500, "replay audit failed: stored actions do not reproduce the episode score");
    }
    e.score = *replayed;

    EpisodeRecord rec;
    rec.problem_id = e.problem_id;
    rec.problem = s.problem;
    rec.actions = s.actions;
    rec.compliance = s.connected ? s.compliance() : std::nullopt;
    rec.volume = s.volume();
    rec.connected = s.connected;
    rec.reward = s.reward;
    json episode = record_to_json(rec);
    episode["session_id"] = session->id;
    episode["entry_id"] = e.entry_id;

    {
        std::lock_guard store(store_mutex_);
        append("episodes.jsonl", episode);
        append("leaderboard.jsonl", leaderboard_entry_to_json(e));
        entries_.push_back(e);
    }
    session->submitted_entry = e.entry_id;
    return {201, leaderboard_entry_to_json(e)};
}

ApiResult SessionService::leaderboard(const std::optional<std::string>& problem) const {
    std::vector<LeaderboardEntry> rows;
    {
        std::lock_guard lock(store_mutex_);
        for (const LeaderboardEntry& e : entries_) {
            if (!problem || e.problem_id == *problem) rows.push_back(e);
        }
    }
    std::stable_sort(rows.begin(), rows.end(), [](const LeaderboardEntry& a, const LeaderboardEntry& b) {
        return a.score > b.score;
    });
    json entries = json::array();
    for (const LeaderboardEntry& e : rows) entries.push_back(leaderboard_entry_to_json(e));
    return {200, json{{"problem", problem ? json(*problem) : json(nullptr)}, {"entries", std::move(entries)}}};
}

std::vector<std::string> SessionService::audit() const {
    std::vector<LeaderboardEntry> rows;
    {
        std::lock_guard lock(store_mutex_);
        rows = entries_;
    }
    std::vector<std::string> bad;
    for (const LeaderboardEntry& e : rows) {
        std::optional<double> s;
        try {
            s = replay_score(e, cfg_.env);
        } catch (const std::exception&) {
        }
        if (!s || *s != e.score) bad.push_back(e.entry_id);
    }
    return bad;
}

namespace {

void send(httplib::Response& res, const ApiResult& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
}

// Empty bodies count as an empty object.
std::optional<json> parse_body(const httplib::Request& req, httplib::Response& res) {
    if (req.body.find_first_not_of(" \t\r\n") == std::string::npos) return json::object();
    try {
        return json::parse(req.body);
    } catch (const json::parse_error& e) {
        send(res, error(400, std::string("malformed JSON: ") + e.what()));
        return std::nullopt;
    }
}

}  // namespace

void mount_routes(httplib::Server& server, SessionService& service) {
    server.set_default_headers({{"Access-Control-Allow-Origin", service.config().cors_origin},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                {"Access-Control-Allow-Headers", "Content-Type"}});
    // Game-mode bodies carry two images (~100 kB); a busy or slow client can
    // take longer than the 5 s default to drain one.
    server.set_read_timeout(30, 0);
    server.set_write_timeout(30, 0);
    server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
        send(res, {200, json{{"status", "ok"}}});
    });
    server.Post("/sessions", [&service](const httplib::Request& req, httplib::Response& res) {
        if (auto body = parse_body(req, res)) send(res, service.create_session(*body));
    });
    server.Get(R"(/sessions/([0-9a-f]+))", [&service](const httplib::Request& req, httplib::Response& res) {
        send(res, service.get_session(req.matches[1]));
    });
    server.Post(R"(/sessions/([0-9a-f]+)/actions)", [&service](const httplib::Request& req, httplib::Response& res) {
        if (auto body = parse_body(req, res)) send(res, service.post_action(req.matches[1], *body));
    });
    server.Post(R"(/sessions/([0-9a-f]+)/reset)", [&service](const httplib::Request& req, httplib::Response& res) {
        send(res, service.reset_session(req.matches[1]));
    });
    server.Post(R"(/sessions/([0-9a-f]+)/submit)", [&service](const httplib::Request& req, httplib::Response& res) {
        if (auto body = parse_body(req, res)) send(res, service.submit(req.matches[1], *body));
    });
    server.Get("/leaderboard", [&service](const httplib::Request& req, httplib::Response& res) {
        std::optional<std::string> problem;
        if (req.has_param("problem")) problem = req.get_param_value("problem");
        send(res, service.leaderboard(problem));
    });

    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string what = "internal error";
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            what = e.what();
        } catch (...) {
        }
        send(res, error(500, what));
    });
    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (res.body.empty()) send(res, error(res.status, res.status == 404 ? "no such route" : "request failed"));
    });
}

}  // namespace sogym
