#include "ilv/io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace ilv {

namespace {

using nlohmann::json;

[[noreturn]] void parse_fail(const std::string& path, std::int64_t line,
                             const std::string& what) {
  throw ParseError(path + ":" + std::to_string(line) + ": " + what);
}

std::int64_t parse_i64(const std::string& s, const std::string& path,
                       std::int64_t line) {
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (errno != 0 || end == s.c_str() || *end != '\0') {
    parse_fail(path, line, "expected integer, got '" + s + "'");
  }
  return static_cast<std::int64_t>(v);
}

double parse_f64(const std::string& s, const std::string& path,
                 std::int64_t line) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (errno != 0 || end == s.c_str() || *end != '\0') {
    parse_fail(path, line, "expected number, got '" + s + "'");
  }
  return v;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string field;
  while (ss >> field) out.push_back(std::move(field));
  return out;
}

// Header + record iteration for the line-oriented table files.
class TableReader {
 public:
  TableReader(const std::string& path, const std::string& expect_name)
      : path_(path), is_(path) {
    if (!is_) throw FileError("cannot open " + path);
    std::string line;
    if (!std::getline(is_, line)) parse_fail(path_, 1, "missing header");
    ++line_;
    const auto fields = split_fields(line);
    if (fields.size() != 5 || fields[0] != "#format") {
      parse_fail(path_, 1, "bad header '" + line + "'");
    }
    if (fields[1] != expect_name) {
      parse_fail(path_, 1, "expected format '" + expect_name + "', found '" +
                               fields[1] + "'");
    }
    version_ = parse_i64(fields[2], path_, 1);
    count_ = parse_i64(fields[3], path_, 1);
    width_ = parse_i64(fields[4], path_, 1);
    if (version_ != 1) parse_fail(path_, 1, "unsupported version");
    if (count_ < 0 || width_ < 1) parse_fail(path_, 1, "bad counts");
  }

  // One record; returns false once the declared count is consumed (and
  // verifies nothing but blank lines follow).
  bool next(std::vector<std::string>& fields) {
    if (read_ == count_) {
      std::string line;
      while (std::getline(is_, line)) {
        ++line_;
        if (!split_fields(line).empty()) {
          parse_fail(path_, line_, "more records than the declared count " +
                                       std::to_string(count_));
        }
      }
      return false;
    }
    std::string line;
    if (!std::getline(is_, line)) {
      parse_fail(path_, line_ + 1,
                 "expected " + std::to_string(count_) + " records, found " +
                     std::to_string(read_));
    }
    ++line_;
    fields = split_fields(line);
    if (static_cast<std::int64_t>(fields.size()) != width_) {
      parse_fail(path_, line_, "expected " + std::to_string(width_) +
                                   " fields, got " +
                                   std::to_string(fields.size()));
    }
    ++read_;
    return true;
  }

  std::int64_t count() const { return count_; }
  std::int64_t width() const { return width_; }
  std::int64_t line() const { return line_; }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ifstream is_;
  std::int64_t line_ = 0;
  std::int64_t count_ = 0;
  std::int64_t width_ = 0;
  std::int64_t version_ = 0;
  std::int64_t read_ = 0;
};

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw FileError("cannot write " + path);
  return os;
}

void write_header(std::ofstream& os, const std::string& name,
                  std::int64_t count, std::int64_t width) {
  os << "#format " << name << " 1 " << count << ' ' << width << '\n';
}

void finish(std::ofstream& os, const std::string& path) {
  os.flush();
  if (!os) throw FileError("write failed for " + path);
}

}  // namespace

std::string fmt_double(double v) {
  char buf[40];
  for (const int precision : {15, 16, 17}) {
    std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

void write_odometry(const std::string& path,
                    std::span<const OdometryMeasurement> odometry) {
  auto os = open_out(path);
  write_header(os, "odometry", static_cast<std::int64_t>(odometry.size()), 4);
  for (const auto& m : odometry) {
    os << m.t << ' ' << fmt_double(m.delta.x) << ' ' << fmt_double(m.delta.y)
       << ' ' << fmt_double(m.delta.theta) << '\n';
  }
  finish(os, path);
}

std::vector<OdometryMeasurement> read_odometry(const std::string& path) {
  TableReader reader(path, "odometry");
  if (reader.width() != 4) parse_fail(path, 1, "odometry needs 4 fields");
  std::vector<OdometryMeasurement> out;
  out.reserve(static_cast<std::size_t>(reader.count()));
  std::vector<std::string> f;
  while (reader.next(f)) {
    out.push_back({parse_i64(f[0], path, reader.line()),
                   Pose2d(parse_f64(f[1], path, reader.line()),
                          parse_f64(f[2], path, reader.line()),
                          parse_f64(f[3], path, reader.line()))});
  }
  return out;
}

void write_descriptors(const std::string& path,
                       std::span<const RawDescriptor> descriptors) {
  auto os = open_out(path);
  const std::int64_t dim =
      descriptors.empty() ? 0 : descriptors.front().values.size();
  write_header(os, "descriptors",
               static_cast<std::int64_t>(descriptors.size()), dim + 1);
  for (const auto& d : descriptors) {
    os << d.t;
    for (Eigen::Index i = 0; i < d.values.size(); ++i) {
      os << ' ' << fmt_double(d.values[i]);
    }
    os << '\n';
  }
  finish(os, path);
}

std::vector<RawDescriptor> read_descriptors(const std::string& path) {
  TableReader reader(path, "descriptors");
  const std::int64_t dim = reader.width() - 1;
  if (dim < 1) parse_fail(path, 1, "descriptor dimension must be positive");
  std::vector<RawDescriptor> out;
  out.reserve(static_cast<std::size_t>(reader.count()));
  std::vector<std::string> f;
  while (reader.next(f)) {
    RawDescriptor d;
    d.t = parse_i64(f[0], path, reader.line());
    d.values.resize(dim);
    for (std::int64_t i = 0; i < dim; ++i) {
      d.values[i] = parse_f64(f[static_cast<std::size_t>(i + 1)], path,
                              reader.line());
    }
    out.push_back(std::move(d));
  }
  return out;
}

void write_ground_truth(const std::string& path, const Trajectory& traj) {
  auto os = open_out(path);
  write_header(os, "groundtruth", static_cast<std::int64_t>(traj.size()), 4);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    os << (i + 1) << ' ' << fmt_double(traj[i].x) << ' '
       << fmt_double(traj[i].y) << ' ' << fmt_double(traj[i].theta) << '\n';
  }
  finish(os, path);
}

Trajectory read_ground_truth(const std::string& path) {
  TableReader reader(path, "groundtruth");
  if (reader.width() != 4) parse_fail(path, 1, "groundtruth needs 4 fields");
  Trajectory out;
  out.reserve(static_cast<std::size_t>(reader.count()));
  std::vector<std::string> f;
  std::int64_t expected = 1;
  while (reader.next(f)) {
    const std::int64_t t = parse_i64(f[0], path, reader.line());
    if (t != expected) {
      parse_fail(path, reader.line(),
                 "expected frame " + std::to_string(expected));
    }
    ++expected;
    out.push_back(Pose2d(parse_f64(f[1], path, reader.line()),
                         parse_f64(f[2], path, reader.line()),
                         parse_f64(f[3], path, reader.line())));
  }
  return out;
}

void write_registry(const std::string& path, const RevisitRegistry& registry) {
  auto os = open_out(path);
  write_header(os, "registry",
               static_cast<std::int64_t>(registry.pairs.size()), 2);
  for (const auto& [t, tp] : registry.pairs) {
    os << t << ' ' << tp << '\n';
  }
  finish(os, path);
}

RevisitRegistry read_registry(const std::string& path) {
  TableReader reader(path, "registry");
  if (reader.width() != 2) parse_fail(path, 1, "registry needs 2 fields");
  RevisitRegistry out;
  out.pairs.reserve(static_cast<std::size_t>(reader.count()));
  std::vector<std::string> f;
  while (reader.next(f)) {
    out.pairs.emplace_back(parse_i64(f[0], path, reader.line()),
                           parse_i64(f[1], path, reader.line()));
  }
  return out;
}

void write_dataset(const std::string& dir, const Dataset& dataset) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  write_odometry(dir + "/odometry.txt", dataset.odometry);
  write_descriptors(dir + "/descriptors.txt", dataset.descriptors);
  write_ground_truth(dir + "/ground_truth.txt", dataset.gt.trajectory);
  write_registry(dir + "/registry.txt", dataset.registry);
}

Dataset read_dataset(const std::string& dir) {
  Dataset ds;
  ds.odometry = read_odometry(dir + "/odometry.txt");
  ds.descriptors = read_descriptors(dir + "/descriptors.txt");
  ds.gt.trajectory = read_ground_truth(dir + "/ground_truth.txt");
  ds.registry = read_registry(dir + "/registry.txt");
  ds.check_consistent_counts();
  return ds;
}

void write_constraints(const std::string& path,
                       std::span<const ConstraintRecord> records) {
  auto os = open_out(path);
  write_header(os, "constraints", static_cast<std::int64_t>(records.size()),
               5);
  for (const auto& r : records) {
    os << r.id << ' ' << r.t << ' ' << r.t_prime << ' ' << fmt_double(r.score)
       << ' ' << r.gt_label << '\n';
  }
  finish(os, path);
}

std::vector<ConstraintRecord> read_constraints(const std::string& path) {
  TableReader reader(path, "constraints");
  if (reader.width() != 5) parse_fail(path, 1, "constraints need 5 fields");
  std::vector<ConstraintRecord> out;
  out.reserve(static_cast<std::size_t>(reader.count()));
  std::vector<std::string> f;
  while (reader.next(f)) {
    ConstraintRecord r;
    r.id = parse_i64(f[0], path, reader.line());
    r.t = parse_i64(f[1], path, reader.line());
    r.t_prime = parse_i64(f[2], path, reader.line());
    r.score = parse_f64(f[3], path, reader.line());
    r.gt_label = static_cast<int>(parse_i64(f[4], path, reader.line()));
    out.push_back(r);
  }
  return out;
}

void write_lineage(const std::string& path,
                   std::span<const LineageRecord> records) {
  auto os = open_out(path);
  write_header(os, "lineage", static_cast<std::int64_t>(records.size()), 6);
  for (const auto& r : records) {
    os << r.id << ' ' << r.parent << ' ' << r.birth_window << ' ';
    for (std::size_t i = 0; i < r.constraint_ids.size(); ++i) {
      if (i) os << ',';
      os << r.constraint_ids[i];
    }
    if (r.constraint_ids.empty()) os << '-';
    os << ' ' << r.final_count << ' ' << r.final_rank << '\n';
  }
  finish(os, path);
}

void write_ranked_trajectories(const std::string& path,
                               std::span<const RankedTrajectory> rows) {
  std::int64_t count = 0;
  for (const auto& row : rows) {
    count += static_cast<std::int64_t>(row.trajectory->size());
  }
  auto os = open_out(path);
  write_header(os, "trajectories", count, 6);
  for (const auto& row : rows) {
    const Trajectory& traj = *row.trajectory;
    for (std::size_t i = 0; i < traj.size(); ++i) {
      os << row.rank << ' ' << row.id << ' ' << (i + 1) << ' '
         << fmt_double(traj[i].x) << ' ' << fmt_double(traj[i].y) << ' '
         << fmt_double(traj[i].theta) << '\n';
    }
  }
  finish(os, path);
}

std::vector<std::pair<std::int64_t, Trajectory>> read_ranked_trajectories(
    const std::string& path) {
  TableReader reader(path, "trajectories");
  if (reader.width() != 6) parse_fail(path, 1, "trajectories need 6 fields");
  std::vector<std::pair<std::int64_t, Trajectory>> out;
  std::vector<std::string> f;
  while (reader.next(f)) {
    const auto rank =
        static_cast<std::size_t>(parse_i64(f[0], path, reader.line()));
    const std::int64_t id = parse_i64(f[1], path, reader.line());
    const std::int64_t t = parse_i64(f[2], path, reader.line());
    if (rank >= out.size()) out.resize(rank + 1);
    if (out[rank].second.empty()) out[rank].first = id;
    if (t != static_cast<std::int64_t>(out[rank].second.size()) + 1) {
      parse_fail(path, reader.line(), "trajectory frames out of order");
    }
    out[rank].second.push_back(Pose2d(parse_f64(f[3], path, reader.line()),
                                      parse_f64(f[4], path, reader.line()),
                                      parse_f64(f[5], path, reader.line())));
  }
  return out;
}

void write_consistency_snapshot(const std::string& path,
                                std::span<const ConsistencySnapshotRow> rows) {
  auto os = open_out(path);
  write_header(os, "consistency", static_cast<std::int64_t>(rows.size()), 3);
  for (const auto& row : rows) {
    os << row.hyp_id << ' ' << row.rank << ' '
       << (row.states.empty() ? "-" : row.states) << '\n';
  }
  finish(os, path);
}

void write_window_stats(const std::string& path,
                        std::span<const WindowStats> stats) {
  auto os = open_out(path);
  os << "window,births,stagnant_births,evaluated_pairs,live_before,"
        "live_after,history_size,frames_end\n";
  for (const auto& w : stats) {
    os << w.window << ',' << w.births << ',' << w.stagnant_births << ','
       << w.evaluated_pairs << ',' << w.live_before << ',' << w.live_after
       << ',' << w.history_size << ',' << w.frames_end << '\n';
  }
  finish(os, path);
}

namespace {

std::string metric_or_undefined(const std::optional<double>& v) {
  return v ? fmt_double(*v) : "undefined";
}

}  // namespace

void write_pr_csv(const std::string& path, std::span<const SweepEntry> rows) {
  auto os = open_out(path);
  os << "method,param,seed,precision,recall,tp,fp,fn\n";
  for (const auto& e : rows) {
    os << e.method << ',' << fmt_double(e.param) << ',' << e.seed << ','
       << metric_or_undefined(e.point.precision) << ','
       << metric_or_undefined(e.point.recall) << ',' << e.point.tp << ','
       << e.point.fp << ',' << e.point.fn << '\n';
  }
  finish(os, path);
}

std::vector<SweepEntry> read_pr_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw FileError("cannot open " + path);
  std::string line;
  std::int64_t line_no = 0;
  if (!std::getline(is, line)) parse_fail(path, 1, "missing CSV header");
  ++line_no;
  std::vector<SweepEntry> out;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) f.push_back(field);
    if (f.size() != 8) parse_fail(path, line_no, "expected 8 CSV fields");
    SweepEntry e;
    e.method = f[0];
    e.param = parse_f64(f[1], path, line_no);
    e.seed = static_cast<std::uint64_t>(parse_i64(f[2], path, line_no));
    if (f[3] != "undefined") e.point.precision = parse_f64(f[3], path, line_no);
    if (f[4] != "undefined") e.point.recall = parse_f64(f[4], path, line_no);
    e.point.tp = parse_i64(f[5], path, line_no);
    e.point.fp = parse_i64(f[6], path, line_no);
    e.point.fn = parse_i64(f[7], path, line_no);
    out.push_back(std::move(e));
  }
  return out;
}

void write_sweep_summary_csv(const std::string& path,
                             std::span<const SweepSummary> rows) {
  auto os = open_out(path);
  os << "method,param,defined,undefined,precision_mean,precision_sd,"
        "recall_mean,recall_sd\n";
  for (const auto& s : rows) {
    os << s.method << ',' << fmt_double(s.param) << ',' << s.defined << ','
       << s.undefined << ',' << fmt_double(s.precision_mean) << ','
       << fmt_double(s.precision_sd) << ',' << fmt_double(s.recall_mean)
       << ',' << fmt_double(s.recall_sd) << '\n';
  }
  finish(os, path);
}

void write_rmse_csv(const std::string& path, std::span<const RmseRow> rows) {
  auto os = open_out(path);
  os << "hypothesis_id,rank,rmse_m\n";
  for (const auto& r : rows) {
    os << r.hypothesis_id << ',' << r.rank << ',' << fmt_double(r.rmse_m)
       << '\n';
  }
  finish(os, path);
}

std::string manifest_to_json(const RunConfig& cfg) {
  json j;
  j["seed"] = cfg.seed;
  j["world"] = {{"rng_seed", cfg.world.rng_seed},
                {"frames", cfg.world.frames},
                {"shape", to_string(cfg.world.shape)},
                {"step", cfg.world.step},
                {"laps", cfg.world.laps},
                {"sigma_xy", cfg.world.sigma_xy},
                {"sigma_theta", cfg.world.sigma_theta},
                {"bias_xy", cfg.world.bias_xy},
                {"bias_theta", cfg.world.bias_theta},
                {"descriptor_dim", cfg.world.descriptor_dim},
                {"place_cell", cfg.world.place_cell},
                {"alias_pairs", cfg.world.alias_pairs},
                {"appearance_noise", cfg.world.appearance_noise},
                {"alias_min_gap", cfg.world.alias_min_gap},
                {"delta_t", cfg.world.delta_t},
                {"t_p", cfg.world.t_p}};
  j["retrieval"] = {{"n_r", cfg.retrieval.n_r},
                    {"t_b", cfg.retrieval.t_b},
                    {"delta_t", cfg.retrieval.delta_t},
                    {"n_b", cfg.retrieval.n_b},
                    {"pca_k", cfg.retrieval.pca_k}};
  j["engine"] = {{"window", cfg.engine.window},
                 {"parents_per_window", cfg.engine.parents_per_window},
                 {"children_per_parent", cfg.engine.children_per_parent},
                 {"live_cap", cfg.engine.live_cap},
                 {"t_p", cfg.engine.t_p},
                 {"history_cap", cfg.engine.history_cap},
                 {"rng_seed", cfg.engine.rng_seed}};
  j["weights"] = {{"w_xy", cfg.engine.weights.w_xy},
                  {"w_theta", cfg.engine.weights.w_theta},
                  {"loop", cfg.engine.weights.loop}};
  j["optimizer"] = {{"max_iters", cfg.engine.optimizer.max_iters},
                    {"tol", cfg.engine.optimizer.tol},
                    {"lambda_init", cfg.engine.optimizer.lambda_init},
                    {"lambda_max", cfg.engine.optimizer.lambda_max}};
  j["pca_training_path"] = cfg.pca_training_path;
  j["baseline_x"] = cfg.baseline_x;
  j["baseline_reps"] = cfg.baseline_reps;
  return j.dump(2) + "\n";
}

RunConfig run_config_from_manifest_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw FileError("cannot open " + path);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  try {
    RunConfig cfg;
    cfg.seed = j.at("seed").get<std::uint64_t>();
    const json& w = j.at("world");
    cfg.world.rng_seed = w.at("rng_seed").get<std::uint64_t>();
    cfg.world.frames = w.at("frames").get<std::int64_t>();
    cfg.world.shape = path_shape_from_string(w.at("shape").get<std::string>());
    cfg.world.step = w.at("step").get<double>();
    cfg.world.laps = w.at("laps").get<int>();
    cfg.world.sigma_xy = w.at("sigma_xy").get<double>();
    cfg.world.sigma_theta = w.at("sigma_theta").get<double>();
    cfg.world.bias_xy = w.at("bias_xy").get<double>();
    cfg.world.bias_theta = w.at("bias_theta").get<double>();
    cfg.world.descriptor_dim = w.at("descriptor_dim").get<int>();
    cfg.world.place_cell = w.at("place_cell").get<double>();
    cfg.world.alias_pairs = w.at("alias_pairs").get<int>();
    cfg.world.appearance_noise = w.at("appearance_noise").get<double>();
    cfg.world.alias_min_gap = w.at("alias_min_gap").get<double>();
    cfg.world.delta_t = w.at("delta_t").get<std::int64_t>();
    cfg.world.t_p = w.at("t_p").get<double>();
    const json& r = j.at("retrieval");
    cfg.retrieval.n_r = r.at("n_r").get<int>();
    cfg.retrieval.t_b = r.at("t_b").get<int>();
    cfg.retrieval.delta_t = r.at("delta_t").get<std::int64_t>();
    cfg.retrieval.n_b = r.at("n_b").get<int>();
    cfg.retrieval.pca_k = r.at("pca_k").get<int>();
    const json& e = j.at("engine");
    cfg.engine.window = e.at("window").get<std::int64_t>();
    cfg.engine.parents_per_window = e.at("parents_per_window").get<int>();
    cfg.engine.children_per_parent = e.at("children_per_parent").get<int>();
    cfg.engine.live_cap = e.at("live_cap").get<int>();
    cfg.engine.t_p = e.at("t_p").get<double>();
    cfg.engine.history_cap = e.at("history_cap").get<std::int64_t>();
    cfg.engine.rng_seed = e.at("rng_seed").get<std::uint64_t>();
    const json& wt = j.at("weights");
    cfg.engine.weights.w_xy = wt.at("w_xy").get<double>();
    cfg.engine.weights.w_theta = wt.at("w_theta").get<double>();
    cfg.engine.weights.loop = wt.at("loop").get<double>();
    const json& o = j.at("optimizer");
    cfg.engine.optimizer.max_iters = o.at("max_iters").get<int>();
    cfg.engine.optimizer.tol = o.at("tol").get<double>();
    cfg.engine.optimizer.lambda_init = o.at("lambda_init").get<double>();
    cfg.engine.optimizer.lambda_max = o.at("lambda_max").get<double>();
    cfg.pca_training_path = j.at("pca_training_path").get<std::string>();
    cfg.baseline_x = j.at("baseline_x").get<std::vector<int>>();
    cfg.baseline_reps = j.at("baseline_reps").get<int>();
    return cfg;
  } catch (const json::exception& e) {
    throw ParseError(path + ": manifest field error: " + e.what());
  }
}

void write_manifest(const std::string& path, const RunConfig& cfg) {
  auto os = open_out(path);
  os << manifest_to_json(cfg);
  finish(os, path);
}

}  // namespace ilv
