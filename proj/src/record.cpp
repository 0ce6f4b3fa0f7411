#include "creditgrid/record.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "creditgrid/metrics.hpp"

namespace creditgrid {

namespace {

int parse_int(const std::string& s) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw std::invalid_argument("bad integer field: " + s);
  return v;
}

double parse_double(const std::string& s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw std::invalid_argument("bad numeric field: " + s);
  return v;
}

void check_id(const std::string& id) {
  if (id.find_first_of(",\n\r\"") != std::string::npos) throw std::invalid_argument("config id not CSV-safe: " + id);
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("double formatting failed");
  return std::string(buf, ptr);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

std::vector<std::string> check_record(const EpisodeRecord& record, const GridConfig& config) {
  std::vector<std::string> issues;
  if (record.config_id != config.id) issues.push_back("config id mismatch");
  if (record.spawn != config.spawn) issues.push_back("spawn does not match config");
  if (record.steps.empty()) issues.push_back("episode has no steps");
  if (record.steps.size() > static_cast<std::size_t>(kMaxSteps)) issues.push_back("episode exceeds step limit");
  if (!issues.empty()) return issues;

  EnvState state = initial_state(config);
  double score = 0.0;
  for (std::size_t i = 0; i < record.steps.size(); ++i) {
    const StepRecord& s = record.steps[i];
    if (state.terminated) {
      issues.push_back("steps continue after a terminal step");
      break;
    }
    auto [next, out] = step(config, state, s.action);
    if (out.new_position != s.position) issues.push_back("step " + std::to_string(i + 1) + ": position mismatch");
    if (out.collided != s.collided) issues.push_back("step " + std::to_string(i + 1) + ": collision flag mismatch");
    if (std::abs(out.reward - s.reward) > 1e-9) issues.push_back("step " + std::to_string(i + 1) + ": reward mismatch");
    score += s.reward;
    state = next;
  }
  if (state.consumed_target != record.consumed_target) issues.push_back("consumed target inconsistent with last step");
  if (std::abs(score - record.score) > 1e-9) issues.push_back("score is not the sum of rewards");
  return issues;
}

void write_steps_header(std::ostream& out) { out << kStepsCsvHeader << '\n'; }

void write_steps_rows(std::ostream& out, const EpisodeRecord& record) {
  check_id(record.config_id);
  for (std::size_t i = 0; i < record.steps.size(); ++i) {
    const StepRecord& s = record.steps[i];
    out << record.config_id << ',' << record.run << ',' << record.episode << ',' << (i + 1) << ',' << s.position.x
        << ',' << s.position.y << ',' << to_string(s.action) << ',' << format_double(s.reward) << ','
        << (s.collided ? 1 : 0) << '\n';
  }
}

void write_episodes_header(std::ostream& out) { out << kEpisodesCsvHeader << '\n'; }

void write_episode_row(std::ostream& out, const EpisodeRecord& record, const GridConfig& config) {
  check_id(record.config_id);
  out << record.config_id << ',' << record.run << ',' << record.episode << ',';
  if (record.consumed_target) out << config.rank_of(*record.consumed_target);
  else out << "none";
  out << ',' << record.steps.size() << ',' << format_double(record.score) << ',' << (pmax(record, config) ? 1 : 0)
      << ',' << (poptimal(record, config) ? 1 : 0) << '\n';
}

std::vector<EpisodeRecord> read_steps_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("steps CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kStepsCsvHeader) throw std::invalid_argument("unexpected steps CSV header: " + line);

  std::vector<EpisodeRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto f = split_csv_line(line);
    if (f.size() != 9) throw std::invalid_argument("line " + std::to_string(line_no) + ": expected 9 fields");
    int run = parse_int(f[1]);
    int episode = parse_int(f[2]);
    int step_no = parse_int(f[3]);
    bool same = !records.empty() && records.back().config_id == f[0] && records.back().run == run &&
                records.back().episode == episode;
    if (!same) {
      if (step_no != 1) throw std::invalid_argument("line " + std::to_string(line_no) + ": episode must start at step 1");
      EpisodeRecord r;
      r.config_id = f[0];
      r.run = run;
      r.episode = episode;
      records.push_back(std::move(r));
    } else if (step_no != static_cast<int>(records.back().steps.size()) + 1) {
      throw std::invalid_argument("line " + std::to_string(line_no) + ": steps out of order");
    }
    StepRecord s;
    s.position = {parse_int(f[4]), parse_int(f[5])};
    s.action = parse_direction(f[6]);
    s.reward = parse_double(f[7]);
    if (f[8] != "0" && f[8] != "1") throw std::invalid_argument("line " + std::to_string(line_no) + ": bad collided flag");
    s.collided = f[8] == "1";
    records.back().steps.push_back(s);
  }
  return records;
}

std::vector<EpisodeRecord> read_steps_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_steps_csv(in);
}

void attach_config(EpisodeRecord& record, const GridConfig& config) {
  record.spawn = config.spawn;
  record.score = 0.0;
  for (const StepRecord& s : record.steps) record.score += s.reward;
  record.consumed_target.reset();
  if (!record.steps.empty()) {
    auto t = config.target_at(record.steps.back().position);
    if (t && !record.steps.back().collided) record.consumed_target = t;
  }
  auto issues = check_record(record, config);
  if (!issues.empty()) {
    throw std::invalid_argument("record " + record.config_id + "/" + std::to_string(record.run) + "/" +
                                std::to_string(record.episode) + " inconsistent: " + issues.front());
  }
}

}  // namespace creditgrid
