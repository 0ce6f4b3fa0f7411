#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "creditgrid/grid.hpp"
#include "creditgrid/record.hpp"

namespace httplib {
class Server;
}

namespace creditgrid {

enum class InfoMode : std::uint8_t { FullGrid, Restricted };

std::string_view to_string(InfoMode m);
InfoMode parse_info_mode(std::string_view s);  // "full-grid" | "restricted"

inline constexpr int kEpisodesPerSession = 40;
inline constexpr int kPracticeSize = 6;

/// Carries the HTTP status the error maps to.
class ServiceError : public std::runtime_error {
 public:
  ServiceError(int status, const std::string& message) : std::runtime_error(message), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

enum class Phase : std::uint8_t { Practice, Main, Complete };
std::string_view to_string(Phase p);

struct Session {
  std::string id;
  int number = 0;  // also the run index in exported records
  std::string participant;
  Complexity condition = Complexity::Simple;
  InfoMode info_mode = InfoMode::FullGrid;
  std::string config_id;
  Phase phase = Phase::Main;
  int episode = 1;
  EnvState state;
  std::vector<StepRecord> current_steps;
  std::vector<EpisodeRecord> finished;  // main-game episodes only
  std::set<Coord> revealed;             // FullGrid; survives across episodes
  std::set<Coord> practice_revealed;
  double last_reward = 0.0;
  double total_score = 0.0;  // main-game episodes
  std::optional<nlohmann::json> recall;

  std::mutex mu;
};

struct ServiceOptions {
  std::string data_dir;  // empty keeps everything in memory
  bool shuffle = false;
  std::uint64_t seed = 0;
};

/// Transport-independent experiment service; every method is safe to call
/// concurrently. Moves of one session are serialized.
class TaskService {
 public:
  TaskService(std::vector<GridConfig> configs, ServiceOptions options = {});

  nlohmann::json create_session(const nlohmann::json& body);
  nlohmann::json view(const std::string& id);
  nlohmann::json move(const std::string& id, const nlohmann::json& body);
  nlohmann::json next_episode(const std::string& id);
  nlohmann::json recall(const std::string& id, const nlohmann::json& body);

  /// kind "steps" (default) or "episodes"; empty filters match everything.
  std::string export_csv(const std::string& kind, const std::string& condition, const std::string& info_mode);

  const GridConfig& practice() const { return practice_; }
  std::size_t session_count() const;

 private:
  struct Assignment {
    std::vector<std::string> order;
    std::size_t next = 0;
  };

  std::shared_ptr<Session> find(const std::string& id) const;
  const GridConfig& active_config(const Session& s) const;
  nlohmann::json render(const Session& s) const;
  std::shared_ptr<Session> open_session(const std::string& id, int number, const std::string& participant,
                                        Complexity condition, InfoMode mode, const std::string& config_id);
  void apply_move(Session& s, Direction d);
  void apply_next_episode(Session& s);
  void apply_recall(Session& s, const nlohmann::json& payload);
  void append_event(const Session& s, const nlohmann::json& event);
  void replay();

  std::map<std::string, GridConfig> configs_;
  GridConfig practice_;
  ServiceOptions options_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::map<Complexity, Assignment> assignment_;
  int next_number_ = 1;
};

/// Generated once from a fixed seed; FullGrid sessions play it before episode 1.
GridConfig practice_config();

/// Installs the JSON-over-HTTP routes on `server`.
void mount_routes(httplib::Server& server, TaskService& service);

}  // namespace creditgrid
