#include "creditgrid/server.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <httplib.h>

#include "creditgrid/grid_gen.hpp"
#include "creditgrid/io.hpp"
#include "creditgrid/rng.hpp"

namespace creditgrid {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(InfoMode m) { return m == InfoMode::FullGrid ? "full-grid" : "restricted"; }

InfoMode parse_info_mode(std::string_view s) {
  if (s == "full-grid") return InfoMode::FullGrid;
  if (s == "restricted") return InfoMode::Restricted;
  throw std::invalid_argument("unknown info mode: " + std::string(s));
}

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::Practice: return "practice";
    case Phase::Main: return "main";
    case Phase::Complete: return "complete";
  }
  return "?";
}

GridConfig practice_config() {
  GenSpec spec;
  spec.seed = 6;
  spec.complexity = Complexity::Simple;
  spec.n_obstacles = 1;
  spec.width = kPracticeSize;
  spec.height = kPracticeSize;
  spec.id = "practice";
  return generate(spec);
}

namespace {

double scaled(double v) { return std::round(v * 100.0 * 1e6) / 1e6; }

Complexity parse_condition(const json& body) {
  if (!body.contains("condition") || !body["condition"].is_string()) throw ServiceError(400, "condition is required");
  try {
    return parse_complexity(body["condition"].get<std::string>());
  } catch (const std::exception&) {
    throw ServiceError(400, "unknown condition: " + body["condition"].get<std::string>());
  }
}

InfoMode parse_mode(const json& body) {
  if (!body.contains("info_mode")) return InfoMode::FullGrid;
  if (!body["info_mode"].is_string()) throw ServiceError(400, "info_mode must be a string");
  try {
    return parse_info_mode(body["info_mode"].get<std::string>());
  } catch (const std::exception&) {
    throw ServiceError(400, "unknown info_mode: " + body["info_mode"].get<std::string>());
  }
}

bool is_cell(const json& j) {
  return j.is_array() && j.size() == 2 && j[0].is_number_integer() && j[1].is_number_integer();
}

void check_recall_payload(const json& body) {
  if (!body.is_object()) throw ServiceError(400, "recall payload must be an object");
  if (body.contains("targets")) {
    const json& t = body["targets"];
    if (!t.is_array() || t.size() > 4) throw ServiceError(400, "targets must be a list of at most 4 cells");
    for (const json& c : t)
      if (!c.is_null() && !is_cell(c)) throw ServiceError(400, "each target must be [x, y] or null");
  }
  if (body.contains("preferred") && !body["preferred"].is_null() && !is_cell(body["preferred"]))
    throw ServiceError(400, "preferred must be [x, y] or null");
}

std::string session_id(int number) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "s%05d", number);
  return buf;
}

}  // namespace

TaskService::TaskService(std::vector<GridConfig> configs, ServiceOptions options)
    : practice_(practice_config()), options_(std::move(options)) {
  for (GridConfig& c : configs) {
    Complexity k = c.complexity;
    std::string id = c.id;
    if (!configs_.emplace(id, std::move(c)).second) throw std::invalid_argument("duplicate config id " + id);
    assignment_[k].order.push_back(id);
  }
  Rng rng(derive_seed(options_.seed, "assignment", 0));
  for (auto& [k, a] : assignment_) {
    std::sort(a.order.begin(), a.order.end());
    if (options_.shuffle) std::shuffle(a.order.begin(), a.order.end(), rng);
  }
  if (!options_.data_dir.empty()) {
    fs::create_directories(fs::path(options_.data_dir) / "sessions");
    replay();
  }
}

std::size_t TaskService::session_count() const {
  std::lock_guard lock(mu_);
  return sessions_.size();
}

std::shared_ptr<Session> TaskService::find(const std::string& id) const {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw ServiceError(404, "unknown session " + id);
  return it->second;
}

const GridConfig& TaskService::active_config(const Session& s) const {
  if (s.phase == Phase::Practice) return practice_;
  return configs_.at(s.config_id);
}

std::shared_ptr<Session> TaskService::open_session(const std::string& id, int number, const std::string& participant,
                                                   Complexity condition, InfoMode mode, const std::string& config_id) {
  auto s = std::make_shared<Session>();
  s->id = id;
  s->number = number;
  s->participant = participant;
  s->condition = condition;
  s->info_mode = mode;
  s->config_id = config_id;
  s->phase = mode == InfoMode::FullGrid ? Phase::Practice : Phase::Main;
  s->episode = s->phase == Phase::Practice ? 0 : 1;
  const GridConfig& c = active_config(*s);
  s->state = initial_state(c);
  (s->phase == Phase::Practice ? s->practice_revealed : s->revealed).insert(c.spawn);
  return s;
}

json TaskService::create_session(const json& body) {
  if (!body.is_object()) throw ServiceError(400, "body must be a JSON object");
  Complexity condition = parse_condition(body);
  InfoMode mode = parse_mode(body);
  std::string participant;
  if (body.contains("participant")) {
    if (!body["participant"].is_string()) throw ServiceError(400, "participant must be a string");
    participant = body["participant"].get<std::string>();
  }

  std::shared_ptr<Session> s;
  std::unique_lock<std::mutex> session_lock;
  {
    std::lock_guard lock(mu_);
    auto a = assignment_.find(condition);
    if (a == assignment_.end() || a->second.order.empty())
      throw ServiceError(400, "no configs loaded for condition " + std::string(to_string(condition)));
    std::string config_id = a->second.order[a->second.next % a->second.order.size()];
    ++a->second.next;
    int number = next_number_++;
    s = open_session(session_id(number), number, participant, condition, mode, config_id);
    session_lock = std::unique_lock(s->mu);
    sessions_.emplace(s->id, s);
  }
  append_event(*s, {{"event", "create"},
                    {"session", s->id},
                    {"number", s->number},
                    {"participant", s->participant},
                    {"condition", std::string(to_string(s->condition))},
                    {"info_mode", std::string(to_string(s->info_mode))},
                    {"config_id", s->config_id},
                    {"time", utc_timestamp()}});
  return render(*s);
}

json TaskService::view(const std::string& id) {
  auto s = find(id);
  std::lock_guard lock(s->mu);
  return render(*s);
}

json TaskService::move(const std::string& id, const json& body) {
  auto s = find(id);
  if (!body.is_object() || !body.contains("direction") || !body["direction"].is_string())
    throw ServiceError(400, "direction is required");
  Direction d;
  try {
    d = parse_direction(body["direction"].get<std::string>());
  } catch (const std::exception&) {
    throw ServiceError(400, "unknown direction: " + body["direction"].get<std::string>());
  }
  std::lock_guard lock(s->mu);
  apply_move(*s, d);
  append_event(*s, {{"event", "move"}, {"direction", std::string(to_string(d))}});
  return render(*s);
}

json TaskService::next_episode(const std::string& id) {
  auto s = find(id);
  std::lock_guard lock(s->mu);
  apply_next_episode(*s);
  append_event(*s, {{"event", "next-episode"}});
  return render(*s);
}

json TaskService::recall(const std::string& id, const json& body) {
  auto s = find(id);
  check_recall_payload(body);
  std::lock_guard lock(s->mu);
  apply_recall(*s, body);
  append_event(*s, {{"event", "recall"}, {"payload", body}});
  return {{"session", s->id}, {"stored", true}};
}

void TaskService::apply_move(Session& s, Direction d) {
  if (s.phase == Phase::Complete) throw ServiceError(409, "session is complete");
  if (s.state.terminated) throw ServiceError(409, "episode is over");
  const GridConfig& c = active_config(s);
  Coord attempted = offset(s.state.position, d);
  auto [next, out] = step(c, s.state, d);
  auto& revealed = s.phase == Phase::Practice ? s.practice_revealed : s.revealed;
  revealed.insert(out.new_position);
  if (out.collided && c.in_bounds(attempted)) revealed.insert(attempted);
  s.state = next;
  s.last_reward = out.reward;
  if (s.phase != Phase::Main) return;
  s.current_steps.push_back({out.new_position, d, out.reward, out.collided});
  if (!next.terminated) return;
  EpisodeRecord r;
  r.config_id = s.config_id;
  r.run = s.number;
  r.episode = s.episode;
  r.spawn = c.spawn;
  r.steps = std::move(s.current_steps);
  r.consumed_target = next.consumed_target;
  r.score = next.accumulated_score;
  s.current_steps.clear();
  s.total_score += r.score;
  s.finished.push_back(std::move(r));
}

void TaskService::apply_next_episode(Session& s) {
  if (s.phase == Phase::Complete) throw ServiceError(409, "session is complete");
  if (!s.state.terminated) throw ServiceError(409, "current episode is not over");
  if (s.phase == Phase::Practice) {
    s.phase = Phase::Main;
    s.episode = 1;
  } else if (s.episode >= kEpisodesPerSession) {
    s.phase = Phase::Complete;
    s.last_reward = 0.0;
    return;
  } else {
    ++s.episode;
  }
  const GridConfig& c = active_config(s);
  s.state = initial_state(c);
  s.revealed.insert(c.spawn);
  s.last_reward = 0.0;
}

void TaskService::apply_recall(Session& s, const json& payload) {
  bool done = s.phase == Phase::Complete ||
              (s.phase == Phase::Main && s.episode == kEpisodesPerSession && s.state.terminated);
  if (!done) throw ServiceError(409, "recall is available after the last episode");
  if (s.recall) throw ServiceError(409, "recall already submitted");
  s.recall = payload;
}

json TaskService::render(const Session& s) const {
  json v{{"session", s.id},
         {"mode", std::string(to_string(s.info_mode))},
         {"phase", std::string(to_string(s.phase))},
         {"episode", s.episode},
         {"episodes_total", kEpisodesPerSession},
         {"position", {s.state.position.x, s.state.position.y}},
         {"steps", s.state.step_index},
         {"last_reward", scaled(s.last_reward)},
         {"terminal", s.state.terminated},
         {"complete", s.phase == Phase::Complete}};
  if (s.info_mode == InfoMode::Restricted) return v;

  const GridConfig& c = active_config(s);
  const auto& revealed = s.phase == Phase::Practice ? s.practice_revealed : s.revealed;
  json cells = json::array();
  for (Coord p : revealed) {
    json cell{{"x", p.x}, {"y", p.y}};
    if (c.is_obstacle(p)) {
      cell["kind"] = "obstacle";
    } else if (auto t = c.target_at(p)) {
      cell["kind"] = "target";
      cell["target"] = *t;
      cell["value"] = scaled(c.targets[*t].value);
    } else {
      cell["kind"] = "empty";
    }
    cells.push_back(std::move(cell));
  }
  v["width"] = c.width;
  v["height"] = c.height;
  v["cells"] = std::move(cells);
  v["score"] = scaled(s.state.accumulated_score);
  v["total_score"] = scaled(s.total_score);
  if (s.state.consumed_target) v["consumed_value"] = scaled(c.targets[*s.state.consumed_target].value);
  return v;
}

std::string TaskService::export_csv(const std::string& kind, const std::string& condition,
                                    const std::string& info_mode) {
  if (!kind.empty() && kind != "steps" && kind != "episodes") throw ServiceError(400, "kind must be steps or episodes");
  std::optional<Complexity> cond;
  std::optional<InfoMode> mode;
  try {
    if (!condition.empty()) cond = parse_complexity(condition);
    if (!info_mode.empty()) mode = parse_info_mode(info_mode);
  } catch (const std::exception& e) {
    throw ServiceError(400, e.what());
  }
  std::vector<std::shared_ptr<Session>> selected;
  {
    std::lock_guard lock(mu_);
    for (const auto& [id, s] : sessions_) selected.push_back(s);
  }
  std::sort(selected.begin(), selected.end(), [](const auto& a, const auto& b) { return a->number < b->number; });

  bool episodes = kind == "episodes";
  std::ostringstream out;
  if (episodes) write_episodes_header(out);
  else write_steps_header(out);
  for (const auto& s : selected) {
    std::lock_guard lock(s->mu);
    if (cond && s->condition != *cond) continue;
    if (mode && s->info_mode != *mode) continue;
    for (const EpisodeRecord& r : s->finished) {
      if (episodes) write_episode_row(out, r, configs_.at(r.config_id));
      else write_steps_rows(out, r);
    }
  }
  return out.str();
}

void TaskService::append_event(const Session& s, const json& event) {
  if (options_.data_dir.empty()) return;
  auto path = fs::path(options_.data_dir) / "sessions" / (s.id + ".ndjson");
  std::ofstream out(path, std::ios::app | std::ios::binary);
  if (!out) throw ServiceError(500, "cannot append to " + path.string());
  out << event.dump() << "\n";
  out.flush();
}

void TaskService::replay() {
  std::vector<fs::path> logs;
  for (const auto& entry : fs::directory_iterator(fs::path(options_.data_dir) / "sessions"))
    if (entry.path().extension() == ".ndjson") logs.push_back(entry.path());
  std::sort(logs.begin(), logs.end());

  for (const fs::path& path : logs) {
    std::ifstream in(path);
    std::string line;
    std::shared_ptr<Session> s;
    int line_no = 0;
    std::optional<std::uintmax_t> torn_at;
    for (std::streamoff start = in.tellg(); std::getline(in, line); start = in.tellg()) {
      ++line_no;
      if (line.empty()) continue;
      json e;
      try {
        e = json::parse(line);
      } catch (const json::exception&) {
        // A torn final write from a crash; earlier events stand and the tail is cut
        // so later appends start on a fresh line.
        torn_at = static_cast<std::uintmax_t>(start);
        break;
      }
      const std::string type = e.at("event").get<std::string>();
      if (type == "create") {
        auto id = e.at("session").get<std::string>();
        auto config_id = e.at("config_id").get<std::string>();
        if (!configs_.count(config_id))
          throw std::runtime_error(path.string() + ": config " + config_id + " is not loaded");
        Complexity condition = parse_complexity(e.at("condition").get<std::string>());
        s = open_session(id, e.at("number").get<int>(), e.at("participant").get<std::string>(), condition,
                         parse_info_mode(e.at("info_mode").get<std::string>()), config_id);
        sessions_.emplace(s->id, s);
        next_number_ = std::max(next_number_, s->number + 1);
        ++assignment_[condition].next;
      } else if (!s) {
        throw std::runtime_error(path.string() + ": event before create at line " + std::to_string(line_no));
      } else if (type == "move") {
        apply_move(*s, parse_direction(e.at("direction").get<std::string>()));
      } else if (type == "next-episode") {
        apply_next_episode(*s);
      } else if (type == "recall") {
        apply_recall(*s, e.at("payload"));
      } else {
        throw std::runtime_error(path.string() + ": unknown event " + type);
      }
    }
    if (torn_at) {
      in.close();
      fs::resize_file(path, *torn_at);
    }
  }
}

void mount_routes(httplib::Server& server, TaskService& service) {
  auto handle = [](httplib::Response& res, auto&& fn) {
    try {
      res.set_content(fn().dump(), "application/json");
    } catch (const ServiceError& e) {
      res.status = e.status();
      res.set_content(json{{"error", e.what()}}.dump(), "application/json");
    } catch (const json::exception& e) {
      res.status = 400;
      res.set_content(json{{"error", std::string("invalid JSON: ") + e.what()}}.dump(), "application/json");
    } catch (const std::exception& e) {
      res.status = 500;
      res.set_content(json{{"error", e.what()}}.dump(), "application/json");
    }
  };
  auto body_of = [](const httplib::Request& req) { return req.body.empty() ? json::object() : json::parse(req.body); };

  server.Post("/sessions", [&service, handle, body_of](const httplib::Request& req, httplib::Response& res) {
    handle(res, [&] { return service.create_session(body_of(req)); });
  });
  server.Get("/sessions/:id", [&service, handle](const httplib::Request& req, httplib::Response& res) {
    handle(res, [&] { return service.view(req.path_params.at("id")); });
  });
  server.Post("/sessions/:id/move", [&service, handle, body_of](const httplib::Request& req, httplib::Response& res) {
    handle(res, [&] { return service.move(req.path_params.at("id"), body_of(req)); });
  });
  server.Post("/sessions/:id/next-episode", [&service, handle](const httplib::Request& req, httplib::Response& res) {
    handle(res, [&] { return service.next_episode(req.path_params.at("id")); });
  });
  server.Post("/sessions/:id/recall", [&service, handle, body_of](const httplib::Request& req, httplib::Response& res) {
    handle(res, [&] { return service.recall(req.path_params.at("id"), body_of(req)); });
  });
  server.Get("/export", [&service](const httplib::Request& req, httplib::Response& res) {
    try {
      res.set_content(service.export_csv(req.get_param_value("kind"), req.get_param_value("condition"),
                                         req.get_param_value("info_mode")),
                      "text/csv");
    } catch (const ServiceError& e) {
      res.status = e.status();
      res.set_content(json{{"error", e.what()}}.dump(), "application/json");
    }
  });
}

}  // namespace creditgrid
