#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "sogym/environment.hpp"

namespace httplib {
class Server;
}

namespace sogym {

struct ServiceConfig {
    std::filesystem::path data_dir;  // empty: keep everything in memory
    std::size_t max_sessions = 256;
    std::chrono::milliseconds ttl = std::chrono::hours(1);
    std::string cors_origin = "*";
    EnvConfig env;  // observation mode is overridden per session
    std::optional<std::uint64_t> id_seed;  // fixed token stream for tests
};

/// Status code and JSON body of one API call.
struct ApiResult {
    int status = 200;
    nlohmann::json body;
};

struct LeaderboardEntry {
    std::string entry_id;
    std::string player;
    std::string problem_id;
    double score = 0.0;
    std::string session_id;
    std::string timestamp;  // UTC, ISO 8601
    BoundaryProblem problem;
    std::vector<NormalizedAction> actions;
    std::string observation_mode;
    std::string reward_mode;
};

nlohmann::json leaderboard_entry_to_json(const LeaderboardEntry& e);
LeaderboardEntry leaderboard_entry_from_json(const nlohmann::json& j);

/// Replays an entry's actions on a fresh environment and returns the terminal
/// score, or nothing when the episode does not finish.
std::optional<double> replay_score(const LeaderboardEntry& e, const EnvConfig& base);

/// Episode sessions and the leaderboard, independent of the transport.
/// Calls on distinct sessions run concurrently; calls on one session are
/// serialised.
class SessionService {
public:
    explicit SessionService(ServiceConfig cfg = {});
    ~SessionService();

    ApiResult create_session(const nlohmann::json& request);
    ApiResult get_session(const std::string& id);
    ApiResult post_action(const std::string& id, const nlohmann::json& request);
    ApiResult reset_session(const std::string& id);
    ApiResult submit(const std::string& id, const nlohmann::json& request);
    ApiResult leaderboard(const std::optional<std::string>& problem) const;

    /// Entries whose stored actions no longer reproduce their score.
    std::vector<std::string> audit() const;

    std::size_t session_count() const;
    /// Drops sessions idle for longer than the TTL; returns how many.
    std::size_t expire_idle();

    const ServiceConfig& config() const { return cfg_; }

private:
    struct Session;

    std::shared_ptr<Session> find(const std::string& id);
    std::string new_token();
    void append(const std::filesystem::path& file, const nlohmann::json& line);

    ServiceConfig cfg_;
    mutable std::mutex sessions_mutex_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::mutex rng_mutex_;
    std::mt19937_64 rng_;
    mutable std::mutex store_mutex_;
    std::vector<LeaderboardEntry> entries_;
};

/// Binds the HTTP routes, CORS headers and JSON error handling to `server`.
void mount_routes(httplib::Server& server, SessionService& service);

}  // namespace sogym
