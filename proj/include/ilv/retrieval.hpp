#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ilv/constraint_store.hpp"

namespace ilv {

struct RawDescriptor {
  std::int64_t t = 0;
  Eigen::VectorXd values;
};

struct CompressedDescriptor {
  std::int64_t t = 0;
  Eigen::VectorXd values;
};

struct BinaryCode {
  std::int64_t t = 0;
  std::uint32_t bits = 0;
  int n_bits = 0;
};

struct RetrievalConfig {
  int n_r = 10;              // matches kept per query
  int t_b = 3;               // Hamming prefilter threshold
  std::int64_t delta_t = 200;  // temporal self-match exclusion
  int n_b = 20;              // code length in bits
  int pca_k = 128;           // compressed descriptor dimension

  void validate() const;
};

// Principal directions of a descriptor collection. Rows of `basis` are
// orthonormal; `variances` holds the per-direction explained variance in
// non-increasing order and `total_variance` the full data variance, so
// explained fractions are variances / total_variance.
struct PcaModel {
  Eigen::VectorXd mean;
  Eigen::MatrixXd basis;  // k x D
  Eigen::VectorXd variances;
  double total_variance = 0.0;

  Eigen::Index input_dim() const { return mean.size(); }
  Eigen::Index output_dim() const { return basis.rows(); }
  bool rows_orthonormal(double tol = 1e-8) const;
};

PcaModel fit_pca(const std::vector<RawDescriptor>& descriptors, int k);
CompressedDescriptor compress(const PcaModel& model, const RawDescriptor& d);

// n_b fixed random hyperplanes (unit-norm rows), drawn once per dataset
// from the given seed.
struct ProjectionModel {
  Eigen::MatrixXd hyperplanes;  // n_b x k
  std::uint64_t seed = 0;
};

ProjectionModel make_projection(int k, int n_b, std::uint64_t seed);

// bit b = 1 iff hyperplane_b . values >= 0 (ties land on 1).
BinaryCode encode_binary(const ProjectionModel& projection,
                         const CompressedDescriptor& c);

int hamming(const BinaryCode& a, const BinaryCode& b);

// Append-only search index over past frames: word-level Hamming prefilter,
// then exact L2 re-ranking of the compressed descriptors.
class RetrievalIndex {
 public:
  void append(const BinaryCode& code, const CompressedDescriptor& desc);

  // Up to n_r matches by ascending L2 distance (ties: smaller frame
  // first); score is the negated distance. Candidates must pass both
  // hamming <= t_b and |t - t'| > delta_t.
  std::vector<VprConstraint> query(std::int64_t t, const BinaryCode& code,
                                   const CompressedDescriptor& desc,
                                   const RetrievalConfig& cfg) const;

  std::size_t size() const { return entries_.size(); }

 private:
  struct Entry {
    std::int64_t t;
    std::uint32_t bits;
    Eigen::VectorXd values;
  };
  std::vector<Entry> entries_;
};

// Flat binary serialization of the fitted models (magic, version, D, k,
// n_b, seed, then the arrays).
void save_models(const std::string& path, const PcaModel& pca,
                 const ProjectionModel& projection);
void load_models(const std::string& path, PcaModel& pca,
                 ProjectionModel& projection);

}  // namespace ilv
