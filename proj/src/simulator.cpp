#include "ilv/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <stdexcept>

namespace ilv {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Closed polylines in path units; scaled so `laps` traversals cover
// frames * step metres of travel.
std::vector<Eigen::Vector2d> unit_polyline(PathShape shape) {
  switch (shape) {
    case PathShape::square_loop:
      return {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    case PathShape::campus_grid:
      // Theta-shaped block tour: outer rectangle plus a middle street
      // walked twice per lap in opposite directions.
      return {{0, 0}, {2, 0}, {2, 1}, {0, 1}, {0, 2},
              {2, 2}, {2, 1}, {0, 1}, {0, 0}};
    default:
      throw std::logic_error("unit_polyline: analytic shape");
  }
}

Trajectory polyline_path(const WorldConfig& cfg,
                         const std::vector<Eigen::Vector2d>& unit) {
  double unit_len = 0.0;
  for (std::size_t i = 0; i < unit.size(); ++i) {
    unit_len += (unit[(i + 1) % unit.size()] - unit[i]).norm();
  }
  const double lap_length =
      static_cast<double>(cfg.frames) * cfg.step / cfg.laps;
  const double scale = lap_length / unit_len;

  std::vector<Eigen::Vector2d> pts;
  pts.reserve(unit.size());
  for (const auto& p : unit) pts.push_back(scale * p);
  std::vector<double> cum{0.0};
  for (std::size_t i = 0; i < pts.size(); ++i) {
    cum.push_back(cum.back() + (pts[(i + 1) % pts.size()] - pts[i]).norm());
  }
  const double perimeter = cum.back();

  Trajectory traj;
  traj.reserve(cfg.frames);
  for (std::int64_t t = 0; t < cfg.frames; ++t) {
    const double s = std::fmod(static_cast<double>(t) * cfg.step, perimeter);
    const auto seg = static_cast<std::size_t>(
        std::upper_bound(cum.begin(), cum.end(), s) - cum.begin() - 1);
    const Eigen::Vector2d a = pts[seg % pts.size()];
    const Eigen::Vector2d b = pts[(seg + 1) % pts.size()];
    const Eigen::Vector2d dir = (b - a).normalized();
    const Eigen::Vector2d pos = a + (s - cum[seg]) * dir;
    traj.push_back(Pose2d(pos.x(), pos.y(), std::atan2(dir.y(), dir.x())));
  }
  return traj;
}

Trajectory figure_eight_path(const WorldConfig& cfg) {
  // Two tangent circles traversed in opposite senses.
  const std::int64_t per_circle =
      std::max<std::int64_t>(8, cfg.frames / (2 * cfg.laps));
  const double dtheta = 2.0 * M_PI / static_cast<double>(per_circle);

  Trajectory traj;
  traj.reserve(cfg.frames);
  Pose2d pose(0.0, 0.0, 0.0);
  traj.push_back(pose);
  std::int64_t in_circle = 0;
  double turn = dtheta;
  for (std::int64_t t = 1; t < cfg.frames; ++t) {
    pose = compose(pose, Pose2d(cfg.step, 0.0, turn));
    traj.push_back(pose);
    if (++in_circle == per_circle) {
      in_circle = 0;
      turn = -turn;
    }
  }
  return traj;
}

Trajectory make_path(const WorldConfig& cfg) {
  if (cfg.shape == PathShape::figure_eight) return figure_eight_path(cfg);
  Trajectory traj = polyline_path(cfg, unit_polyline(cfg.shape));
  // The anchor convention wants pose 1 at the identity.
  const Pose2d shift = inverse(traj.front());
  for (auto& p : traj) p = compose(shift, p);
  return traj;
}

}  // namespace

PathShape path_shape_from_string(const std::string& s) {
  if (s == "square_loop") return PathShape::square_loop;
  if (s == "figure_eight") return PathShape::figure_eight;
  if (s == "campus_grid") return PathShape::campus_grid;
  throw std::invalid_argument("unknown path shape: " + s);
}

std::string to_string(PathShape shape) {
  switch (shape) {
    case PathShape::square_loop: return "square_loop";
    case PathShape::figure_eight: return "figure_eight";
    case PathShape::campus_grid: return "campus_grid";
  }
  return "square_loop";
}

void WorldConfig::validate() const {
  if (frames < 2) throw std::invalid_argument("WorldConfig: frames must be >= 2");
  if (step <= 0) throw std::invalid_argument("WorldConfig: step must be positive");
  if (laps < 1) throw std::invalid_argument("WorldConfig: laps must be >= 1");
  if (sigma_xy < 0 || sigma_theta < 0 || appearance_noise < 0) {
    throw std::invalid_argument("WorldConfig: noise sigmas must be >= 0");
  }
  if (descriptor_dim < 1) {
    throw std::invalid_argument("WorldConfig: descriptor_dim must be >= 1");
  }
  if (place_cell <= 0) {
    throw std::invalid_argument("WorldConfig: place_cell must be positive");
  }
  if (alias_pairs < 0) {
    throw std::invalid_argument("WorldConfig: alias_pairs must be >= 0");
  }
}

bool RevisitRegistry::contains(std::int64_t t, std::int64_t t_prime) const {
  auto p = std::minmax(t, t_prime);
  return std::binary_search(pairs.begin(), pairs.end(),
                            std::make_pair(p.first, p.second));
}

World generate(const WorldConfig& cfg) {
  cfg.validate();
  World world;
  world.config = cfg;
  world.gt.t_p = cfg.t_p;
  world.gt.trajectory = make_path(cfg);
  const Trajectory& gt = world.gt.trajectory;

  // Odometry: exact relative motion plus Gaussian noise and bias.
  std::mt19937_64 odo_rng(splitmix64(cfg.rng_seed ^ 0x6f646f6dULL));
  std::normal_distribution<double> gauss(0.0, 1.0);
  world.odometry.reserve(gt.size() - 1);
  for (std::size_t t = 2; t <= gt.size(); ++t) {
    Pose2d delta = between(gt[t - 2], gt[t - 1]);
    const double nx = cfg.sigma_xy > 0 ? cfg.sigma_xy * gauss(odo_rng) : 0.0;
    const double ny = cfg.sigma_xy > 0 ? cfg.sigma_xy * gauss(odo_rng) : 0.0;
    const double nt =
        cfg.sigma_theta > 0 ? cfg.sigma_theta * gauss(odo_rng) : 0.0;
    world.odometry.push_back(
        {static_cast<std::int64_t>(t),
         Pose2d(delta.x + nx + cfg.bias_xy, delta.y + ny,
                delta.theta + nt + cfg.bias_theta)});
  }

  // Place cells in first-visit order.
  std::map<std::pair<std::int64_t, std::int64_t>, int> cell_ids;
  world.cell_of_frame.reserve(gt.size());
  for (const auto& pose : gt) {
    const std::pair<std::int64_t, std::int64_t> key{
        static_cast<std::int64_t>(std::floor(pose.x / cfg.place_cell)),
        static_cast<std::int64_t>(std::floor(pose.y / cfg.place_cell))};
    auto [it, fresh] = cell_ids.try_emplace(
        key, static_cast<int>(world.cell_centers.size()));
    if (fresh) {
      world.cell_centers.emplace_back(
          (static_cast<double>(key.first) + 0.5) * cfg.place_cell,
          (static_cast<double>(key.second) + 0.5) * cfg.place_cell);
    }
    world.cell_of_frame.push_back(it->second);
  }

  // Revisit registry by exhaustive scan (needed below to place aliases).
  {
    const auto n = static_cast<std::int64_t>(gt.size());
    for (std::int64_t t = 1; t <= n; ++t) {
      for (std::int64_t tp = t + cfg.delta_t + 1; tp <= n; ++tp) {
        if ((gt[t - 1].position() - gt[tp - 1].position()).norm() < cfg.t_p) {
          world.registry.pairs.emplace_back(t, tp);
        }
      }
    }
  }

  // Aliased cell pairs: truly distant, and never firing before the first
  // genuine revisit, so planted false positives contaminate real loop
  // evidence instead of monopolising the early history.
  if (cfg.alias_pairs > 0) {
    if (world.registry.pairs.empty()) {
      throw std::invalid_argument(
          "generate: cannot plant aliases in a world with no revisits");
    }
    std::int64_t first_revisit = std::numeric_limits<std::int64_t>::max();
    for (const auto& [t, tp] : world.registry.pairs) {
      first_revisit = std::min(first_revisit, tp);
    }
    std::vector<std::vector<std::int64_t>> frames_in_cell(
        world.cell_centers.size());
    for (std::size_t i = 0; i < world.cell_of_frame.size(); ++i) {
      frames_in_cell[world.cell_of_frame[i]].push_back(
          static_cast<std::int64_t>(i + 1));
    }
    // Earliest frame at which a collision between cells a and b would
    // clear the temporal exclusion.
    auto earliest_qualifying = [&](int a, int b) {
      std::int64_t earliest = std::numeric_limits<std::int64_t>::max();
      for (const int x : {a, b}) {
        const auto& from = frames_in_cell[x == a ? a : b];
        const auto& into = frames_in_cell[x == a ? b : a];
        for (const std::int64_t t : from) {
          const auto it =
              std::upper_bound(into.begin(), into.end(), t + cfg.delta_t);
          if (it != into.end()) earliest = std::min(earliest, *it);
        }
      }
      return earliest;
    };
    std::vector<std::pair<int, int>> candidates;
    const int n_cells = static_cast<int>(world.cell_centers.size());
    for (int a = 0; a < n_cells; ++a) {
      for (int b = a + 1; b < n_cells; ++b) {
        if ((world.cell_centers[a] - world.cell_centers[b]).norm() <
            cfg.alias_min_gap)
          continue;
        const std::int64_t earliest = earliest_qualifying(a, b);
        if (earliest == std::numeric_limits<std::int64_t>::max()) continue;
        if (earliest < first_revisit) continue;
        candidates.emplace_back(a, b);
      }
    }
    std::mt19937_64 alias_rng(splitmix64(cfg.rng_seed ^ 0x616c6961ULL));
    std::shuffle(candidates.begin(), candidates.end(), alias_rng);
    std::vector<bool> used(world.cell_centers.size(), false);
    for (const auto& [a, b] : candidates) {
      if (static_cast<int>(world.aliased_cells.size()) >= cfg.alias_pairs)
        break;
      if (used[a] || used[b]) continue;
      used[a] = used[b] = true;
      world.aliased_cells.emplace_back(a, b);
    }
    if (static_cast<int>(world.aliased_cells.size()) < cfg.alias_pairs) {
      throw std::invalid_argument(
          "generate: world too small to plant " +
          std::to_string(cfg.alias_pairs) + " alias pairs (found " +
          std::to_string(world.aliased_cells.size()) + ")");
    }
  }

  // Cell embeddings; aliased partners share one.
  std::mt19937_64 embed_rng(splitmix64(cfg.rng_seed ^ 0x656d6264ULL));
  std::vector<Eigen::VectorXd> embeddings;
  embeddings.reserve(world.cell_centers.size());
  for (std::size_t c = 0; c < world.cell_centers.size(); ++c) {
    Eigen::VectorXd e(cfg.descriptor_dim);
    for (int i = 0; i < cfg.descriptor_dim; ++i) e[i] = gauss(embed_rng);
    embeddings.push_back(std::move(e));
  }
  for (const auto& [a, b] : world.aliased_cells) embeddings[b] = embeddings[a];

  std::mt19937_64 app_rng(splitmix64(cfg.rng_seed ^ 0x61707065ULL));
  world.descriptors.reserve(gt.size());
  for (std::size_t t = 1; t <= gt.size(); ++t) {
    RawDescriptor d;
    d.t = static_cast<std::int64_t>(t);
    d.values = embeddings[world.cell_of_frame[t - 1]];
    if (cfg.appearance_noise > 0) {
      for (int i = 0; i < cfg.descriptor_dim; ++i) {
        d.values[i] += cfg.appearance_noise * gauss(app_rng);
      }
    }
    world.descriptors.push_back(std::move(d));
  }

  return world;
}

std::vector<AliasReportEntry> aliasing_report(const World& world) {
  std::vector<AliasReportEntry> report;
  const Trajectory& gt = world.gt.trajectory;
  std::vector<std::vector<std::int64_t>> frames_in_cell(
      world.cell_centers.size());
  for (std::size_t i = 0; i < world.cell_of_frame.size(); ++i) {
    frames_in_cell[world.cell_of_frame[i]].push_back(
        static_cast<std::int64_t>(i + 1));
  }
  for (const auto& [a, b] : world.aliased_cells) {
    AliasReportEntry entry;
    entry.cell_a = a;
    entry.cell_b = b;
    entry.center_a = world.cell_centers[a];
    entry.center_b = world.cell_centers[b];
    for (const std::int64_t t : frames_in_cell[a]) {
      for (const std::int64_t tp : frames_in_cell[b]) {
        if (std::abs(t - tp) <= world.config.delta_t) continue;
        if ((gt[t - 1].position() - gt[tp - 1].position()).norm() <
            world.config.t_p)
          continue;
        entry.frame_pairs.emplace_back(std::min(t, tp), std::max(t, tp));
      }
    }
    std::sort(entry.frame_pairs.begin(), entry.frame_pairs.end());
    report.push_back(std::move(entry));
  }
  return report;
}

}  // namespace ilv
