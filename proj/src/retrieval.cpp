#include "ilv/retrieval.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <fstream>
#include <random>
#include <stdexcept>

#include <Eigen/SVD>

namespace ilv {

void RetrievalConfig::validate() const {
  if (n_r < 1 || t_b < 1 || delta_t < 1 || n_b < 1 || pca_k < 1) {
    throw std::invalid_argument("RetrievalConfig: all parameters must be positive");
  }
  if (t_b > n_b) {
    throw std::invalid_argument("RetrievalConfig: t_b must not exceed n_b");
  }
  if (n_b > 32) {
    throw std::invalid_argument("RetrievalConfig: codes are stored in 32-bit words");
  }
}

bool PcaModel::rows_orthonormal(double tol) const {
  const Eigen::MatrixXd gram = basis * basis.transpose();
  return (gram - Eigen::MatrixXd::Identity(basis.rows(), basis.rows()))
             .cwiseAbs()
             .maxCoeff() < tol;
}

PcaModel fit_pca(const std::vector<RawDescriptor>& descriptors, int k) {
  if (descriptors.empty()) {
    throw std::invalid_argument("fit_pca: no descriptors");
  }
  const Eigen::Index d = descriptors.front().values.size();
  const Eigen::Index n = static_cast<Eigen::Index>(descriptors.size());
  if (k < 1 || k > d) {
    throw std::invalid_argument("fit_pca: k = " + std::to_string(k) +
                                " outside [1, D = " + std::to_string(d) + "]");
  }
  if (n < k + 1) {
    throw std::invalid_argument("fit_pca: need at least k + 1 = " +
                                std::to_string(k + 1) + " descriptors, got " +
                                std::to_string(n));
  }

  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (descriptors[i].values.size() != d) {
      throw std::invalid_argument("fit_pca: inconsistent descriptor dimension");
    }
    x.row(i) = descriptors[i].values;
  }
  PcaModel model;
  model.mean = x.colwise().mean();
  x.rowwise() -= model.mean.transpose();
  model.total_variance = x.squaredNorm() / static_cast<double>(n - 1);

  Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  if (sv.size() < k || sv[0] <= 0.0 || sv[k - 1] <= 1e-12 * sv[0]) {
    throw std::invalid_argument(
        "fit_pca: degenerate data, variance vanishes before direction " +
        std::to_string(k));
  }
  model.basis = svd.matrixV().leftCols(k).transpose();
  model.variances = sv.head(k).array().square() / static_cast<double>(n - 1);
  // Deterministic sign: largest-magnitude component of each row positive.
  for (Eigen::Index r = 0; r < model.basis.rows(); ++r) {
    Eigen::Index max_at = 0;
    model.basis.row(r).cwiseAbs().maxCoeff(&max_at);
    if (model.basis(r, max_at) < 0.0) model.basis.row(r) *= -1.0;
  }
  return model;
}

CompressedDescriptor compress(const PcaModel& model, const RawDescriptor& d) {
  if (d.values.size() != model.input_dim()) {
    throw std::invalid_argument("compress: descriptor dimension " +
                                std::to_string(d.values.size()) +
                                " does not match model D = " +
                                std::to_string(model.input_dim()));
  }
  return {d.t, model.basis * (d.values - model.mean)};
}

ProjectionModel make_projection(int k, int n_b, std::uint64_t seed) {
  if (k < 1 || n_b < 1 || n_b > 32) {
    throw std::invalid_argument("make_projection: bad dimensions");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  ProjectionModel model;
  model.seed = seed;
  model.hyperplanes.resize(n_b, k);
  for (int r = 0; r < n_b; ++r) {
    for (int c = 0; c < k; ++c) model.hyperplanes(r, c) = gauss(rng);
    model.hyperplanes.row(r).normalize();
  }
  return model;
}

BinaryCode encode_binary(const ProjectionModel& projection,
                         const CompressedDescriptor& c) {
  if (c.values.size() != projection.hyperplanes.cols()) {
    throw std::invalid_argument("encode_binary: dimension mismatch");
  }
  BinaryCode code;
  code.t = c.t;
  code.n_bits = static_cast<int>(projection.hyperplanes.rows());
  const Eigen::VectorXd dots = projection.hyperplanes * c.values;
  for (int b = 0; b < code.n_bits; ++b) {
    if (dots[b] >= 0.0) code.bits |= (1u << b);
  }
  return code;
}

int hamming(const BinaryCode& a, const BinaryCode& b) {
  if (a.n_bits != b.n_bits) {
    throw std::invalid_argument("hamming: code lengths differ");
  }
  return std::popcount(a.bits ^ b.bits);
}

void RetrievalIndex::append(const BinaryCode& code,
                            const CompressedDescriptor& desc) {
  if (code.t != desc.t) {
    throw std::invalid_argument("RetrievalIndex::append: frame mismatch");
  }
  entries_.push_back({code.t, code.bits, desc.values});
}

std::vector<VprConstraint> RetrievalIndex::query(
    std::int64_t t, const BinaryCode& code, const CompressedDescriptor& desc,
    const RetrievalConfig& cfg) const {
  cfg.validate();
  std::vector<std::pair<double, std::int64_t>> candidates;
  for (const auto& e : entries_) {
    if (std::abs(t - e.t) <= cfg.delta_t) continue;
    if (std::popcount(code.bits ^ e.bits) > cfg.t_b) continue;
    candidates.emplace_back((desc.values - e.values).norm(), e.t);
  }
  std::sort(candidates.begin(), candidates.end());
  if (candidates.size() > static_cast<std::size_t>(cfg.n_r)) {
    candidates.resize(static_cast<std::size_t>(cfg.n_r));
  }
  std::vector<VprConstraint> out;
  out.reserve(candidates.size());
  for (const auto& [dist, t_prime] : candidates) {
    out.push_back({kUnassignedId, t, t_prime, -dist});
  }
  return out;
}

namespace {

constexpr std::uint32_t kModelMagic = 0x494c564d;  // "ILVM"
constexpr std::uint32_t kModelVersion = 1;

template <typename T>
void write_pod(std::ofstream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::ifstream& is, T& v) {
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
}

void write_matrix(std::ofstream& os, const Eigen::MatrixXd& m) {
  os.write(reinterpret_cast<const char*>(m.data()),
           static_cast<std::streamsize>(sizeof(double) * m.size()));
}

void read_matrix(std::ifstream& is, Eigen::MatrixXd& m) {
  is.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(sizeof(double) * m.size()));
}

}  // namespace

void save_models(const std::string& path, const PcaModel& pca,
                 const ProjectionModel& projection) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_models: cannot open " + path);
  write_pod(os, kModelMagic);
  write_pod(os, kModelVersion);
  const std::uint64_t d = static_cast<std::uint64_t>(pca.input_dim());
  const std::uint64_t k = static_cast<std::uint64_t>(pca.output_dim());
  const std::uint64_t n_b = static_cast<std::uint64_t>(projection.hyperplanes.rows());
  write_pod(os, d);
  write_pod(os, k);
  write_pod(os, n_b);
  write_pod(os, projection.seed);
  write_pod(os, pca.total_variance);
  Eigen::MatrixXd mean = pca.mean, variances = pca.variances;
  write_matrix(os, mean);
  write_matrix(os, pca.basis);
  write_matrix(os, variances);
  write_matrix(os, projection.hyperplanes);
  if (!os) throw std::runtime_error("save_models: write failed for " + path);
}

void load_models(const std::string& path, PcaModel& pca,
                 ProjectionModel& projection) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_models: cannot open " + path);
  std::uint32_t magic = 0, version = 0;
  read_pod(is, magic);
  read_pod(is, version);
  if (magic != kModelMagic || version != kModelVersion) {
    throw std::runtime_error("load_models: bad header in " + path);
  }
  std::uint64_t d = 0, k = 0, n_b = 0;
  read_pod(is, d);
  read_pod(is, k);
  read_pod(is, n_b);
  read_pod(is, projection.seed);
  read_pod(is, pca.total_variance);
  Eigen::MatrixXd mean(d, 1), variances(k, 1);
  pca.basis.resize(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(d));
  projection.hyperplanes.resize(static_cast<Eigen::Index>(n_b),
                                static_cast<Eigen::Index>(k));
  read_matrix(is, mean);
  read_matrix(is, pca.basis);
  read_matrix(is, variances);
  read_matrix(is, projection.hyperplanes);
  if (!is) throw std::runtime_error("load_models: truncated file " + path);
  pca.mean = mean;
  pca.variances = variances;
}

}  // namespace ilv
