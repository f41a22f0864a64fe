#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

#include "ilv/retrieval.hpp"
#include "support/oracles.hpp"

using ilv::BinaryCode;
using ilv::CompressedDescriptor;
using ilv::PcaModel;
using ilv::RawDescriptor;
using ilv::RetrievalConfig;
using ilv::RetrievalIndex;

namespace {

std::vector<RawDescriptor> gaussian_cloud(std::mt19937_64& rng, int n, int d) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<RawDescriptor> out;
  for (int i = 0; i < n; ++i) {
    RawDescriptor r;
    r.t = i + 1;
    r.values.resize(d);
    for (int j = 0; j < d; ++j) r.values[j] = gauss(rng);
    out.push_back(std::move(r));
  }
  return out;
}

// Brute-force reference for query: filter every frame, sort, truncate.
std::vector<ilv::VprConstraint> query_oracle(
    const std::vector<BinaryCode>& codes,
    const std::vector<CompressedDescriptor>& descs, std::int64_t t,
    const BinaryCode& code, const CompressedDescriptor& desc,
    const RetrievalConfig& cfg) {
  struct Cand {
    double dist;
    std::int64_t t_prime;
  };
  std::vector<Cand> cands;
  for (std::size_t i = 0; i < codes.size(); ++i) {
    if (std::abs(t - codes[i].t) <= cfg.delta_t) continue;
    int h = 0;
    for (int b = 0; b < cfg.n_b; ++b) {
      if (((codes[i].bits >> b) & 1u) != ((code.bits >> b) & 1u)) ++h;
    }
    if (h > cfg.t_b) continue;
    cands.push_back({(descs[i].values - desc.values).norm(), codes[i].t});
  }
  std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    if (a.dist != b.dist) return a.dist < b.dist;
    return a.t_prime < b.t_prime;
  });
  if (cands.size() > static_cast<std::size_t>(cfg.n_r))
    cands.resize(static_cast<std::size_t>(cfg.n_r));
  std::vector<ilv::VprConstraint> out;
  for (const auto& c : cands)
    out.push_back({ilv::kUnassignedId, t, c.t_prime, -c.dist});
  return out;
}

}  // namespace

TEST_SUITE_BEGIN("retrieval");

TEST_CASE("fit_pca recovers rank-1 data") {
  std::mt19937_64 rng(59);
  std::uniform_real_distribution<double> along(-5.0, 5.0);
  const Eigen::Vector3d dir = Eigen::Vector3d(1.0, 2.0, -0.5).normalized();
  std::vector<RawDescriptor> data;
  for (int i = 0; i < 50; ++i) {
    RawDescriptor r;
    r.t = i + 1;
    r.values = (Eigen::Vector3d::Ones() + along(rng) * dir).eval();
    data.push_back(std::move(r));
  }
  const PcaModel model = ilv::fit_pca(data, 1);
  CHECK(model.rows_orthonormal());
  CHECK(std::abs(std::abs(model.basis.row(0).dot(dir)) - 1.0) < 1e-9);
  // Reconstruction through the single component is exact for on-line data.
  for (const auto& d : data) {
    const auto c = ilv::compress(model, d);
    const Eigen::VectorXd rec =
        model.mean + model.basis.transpose() * c.values;
    CHECK((rec - d.values).norm() < 1e-9);
  }
}

TEST_CASE("fit_pca explained variance on an isotropic cloud") {
  std::mt19937_64 rng(61);
  const int d = 16;
  const auto data = gaussian_cloud(rng, 4000, d);
  const PcaModel model = ilv::fit_pca(data, 2);
  const double frac = model.variances.sum() / model.total_variance;
  // Top-2 eigenvalues of a Wishart-ish sample run slightly above 2/D.
  CHECK(frac > 2.0 / d * 0.8);
  CHECK(frac < 2.0 / d * 1.6);
  CHECK(model.variances[0] >= model.variances[1]);
}

TEST_CASE("fit_pca at k = D preserves pairwise distances") {
  std::mt19937_64 rng(67);
  const int d = 12;
  const auto data = gaussian_cloud(rng, 60, d);
  const PcaModel model = ilv::fit_pca(data, d);
  CHECK(model.rows_orthonormal());
  std::vector<CompressedDescriptor> compressed;
  for (const auto& r : data) compressed.push_back(ilv::compress(model, r));
  for (int i = 0; i < 40; ++i) {
    for (int j = i + 1; j < 40; ++j) {
      const double before = (data[i].values - data[j].values).norm();
      const double after =
          (compressed[i].values - compressed[j].values).norm();
      CHECK(std::abs(before - after) < 1e-8);
    }
  }
}

TEST_CASE("fit_pca rejects bad inputs") {
  std::mt19937_64 rng(71);
  auto data = gaussian_cloud(rng, 10, 4);
  CHECK_THROWS_AS(ilv::fit_pca(data, 5), std::invalid_argument);   // k > D
  CHECK_THROWS_AS(ilv::fit_pca(data, 10), std::invalid_argument);  // n < k+1
  for (auto& r : data) r.values.setConstant(3.0);                  // zero variance
  CHECK_THROWS_AS(ilv::fit_pca(data, 2), std::invalid_argument);
}

TEST_CASE("compress basics and matrix-product oracle") {
  std::mt19937_64 rng(73);
  const auto data = gaussian_cloud(rng, 40, 8);
  const PcaModel model = ilv::fit_pca(data, 3);

  RawDescriptor at_mean{99, model.mean};
  CHECK(ilv::compress(model, at_mean).values.norm() == doctest::Approx(0.0));

  RawDescriptor along_first{100, model.mean + model.basis.row(0).transpose()};
  const auto e1 = ilv::compress(model, along_first);
  CHECK(e1.values[0] == doctest::Approx(1.0));
  CHECK(std::abs(e1.values[1]) < 1e-9);
  CHECK(std::abs(e1.values[2]) < 1e-9);

  for (const auto& d : data) {
    const auto c = ilv::compress(model, d);
    Eigen::VectorXd want(3);
    for (int r = 0; r < 3; ++r)
      want[r] = model.basis.row(r).dot(d.values - model.mean);
    CHECK((c.values - want).norm() < 1e-12);
  }

  RawDescriptor wrong{101, Eigen::VectorXd::Zero(5)};
  CHECK_THROWS_AS(ilv::compress(model, wrong), std::invalid_argument);
}

TEST_CASE("encode_binary tie convention and sign symmetry") {
  const auto projection = ilv::make_projection(6, 20, 12345);
  CompressedDescriptor zero{1, Eigen::VectorXd::Zero(6)};
  const BinaryCode code_zero = ilv::encode_binary(projection, zero);
  CHECK(code_zero.bits == (1u << 20) - 1);  // all bits set on ties

  std::mt19937_64 rng(79);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int rep = 0; rep < 100; ++rep) {
    Eigen::VectorXd v(6);
    for (int i = 0; i < 6; ++i) v[i] = gauss(rng);
    const BinaryCode plus = ilv::encode_binary(projection, {1, v});
    const BinaryCode minus = ilv::encode_binary(projection, {1, -v});
    CHECK((plus.bits ^ minus.bits) == (1u << 20) - 1);
  }
}

TEST_CASE("encode_binary determinism per seed") {
  const auto a = ilv::make_projection(16, 20, 777);
  const auto b = ilv::make_projection(16, 20, 777);
  const auto c = ilv::make_projection(16, 20, 778);
  CHECK(a.hyperplanes == b.hyperplanes);
  CHECK(a.hyperplanes != c.hyperplanes);
}

TEST_CASE("hamming distance correlates with angular distance") {
  const int k = 16, n_b = 20;
  const auto projection = ilv::make_projection(k, n_b, 4242);
  std::mt19937_64 rng(83);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> hams, angles;
  for (int i = 0; i < 1000; ++i) {
    Eigen::VectorXd u(k), v(k);
    for (int j = 0; j < k; ++j) {
      u[j] = gauss(rng);
      v[j] = gauss(rng);
    }
    const BinaryCode cu = ilv::encode_binary(projection, {1, u});
    const BinaryCode cv = ilv::encode_binary(projection, {2, v});
    hams.push_back(static_cast<double>(ilv::hamming(cu, cv)));
    angles.push_back(std::acos(std::clamp(
        u.dot(v) / (u.norm() * v.norm()), -1.0, 1.0)));
  }
  CHECK(oracle::spearman(hams, angles) > 0.5);
}

TEST_CASE("hamming basics") {
  BinaryCode a{1, 0b1010u, 4}, b{2, 0b1010u, 4}, c{3, 0b0101u, 4};
  CHECK(ilv::hamming(a, b) == 0);
  CHECK(ilv::hamming(a, c) == 4);
  CHECK(ilv::hamming(c, a) == 4);
  std::mt19937_64 rng(89);
  for (int rep = 0; rep < 200; ++rep) {
    BinaryCode u{1, static_cast<std::uint32_t>(rng() & 0xFFFFF), 20};
    BinaryCode v{2, static_cast<std::uint32_t>(rng() & 0xFFFFF), 20};
    int bits = 0;
    for (int i = 0; i < 20; ++i)
      bits += ((u.bits >> i) & 1u) != ((v.bits >> i) & 1u);
    CHECK(ilv::hamming(u, v) == bits);
    CHECK(ilv::hamming(u, v) == ilv::hamming(v, u));
  }
}

TEST_CASE("query finds an exact duplicate first") {
  RetrievalConfig cfg;
  cfg.delta_t = 10;
  cfg.pca_k = 4;
  const auto projection = ilv::make_projection(4, cfg.n_b, 5);
  std::mt19937_64 rng(97);
  std::normal_distribution<double> gauss(0.0, 1.0);

  RetrievalIndex index;
  Eigen::VectorXd dup(4);
  dup << 1, 2, 3, 4;
  for (int t = 1; t <= 40; ++t) {
    Eigen::VectorXd v(4);
    if (t == 7) {
      v = dup;
    } else {
      for (int i = 0; i < 4; ++i) v[i] = gauss(rng);
    }
    CompressedDescriptor d{t, v};
    index.append(ilv::encode_binary(projection, d), d);
  }
  CompressedDescriptor q{41, dup};
  const auto res =
      index.query(41, ilv::encode_binary(projection, q), q, cfg);
  REQUIRE(!res.empty());
  CHECK(res.front().t_prime == 7);
  CHECK(res.front().score == 0.0);
  CHECK(res.front().t == 41);
}

TEST_CASE("query returns nothing when the exclusion window covers the db") {
  RetrievalConfig cfg;
  cfg.delta_t = 200;
  const auto projection = ilv::make_projection(4, cfg.n_b, 5);
  RetrievalIndex index;
  for (int t = 1; t <= 150; ++t) {
    CompressedDescriptor d{t, Eigen::VectorXd::Zero(4)};
    index.append(ilv::encode_binary(projection, d), d);
  }
  CompressedDescriptor q{151, Eigen::VectorXd::Zero(4)};
  CHECK(index.query(151, ilv::encode_binary(projection, q), q, cfg).empty());
}

TEST_CASE("query equals the exhaustive-scan oracle") {
  std::mt19937_64 seed_rng(101);
  for (int rep = 0; rep < 12; ++rep) {
    RetrievalConfig cfg;
    cfg.pca_k = 8;
    cfg.t_b = 3 + static_cast<int>(seed_rng() % 8);  // widen to get candidates
    cfg.delta_t = 20 + static_cast<int>(seed_rng() % 100);
    const auto projection =
        ilv::make_projection(cfg.pca_k, cfg.n_b, seed_rng());
    std::mt19937_64 rng(seed_rng());
    std::normal_distribution<double> gauss(0.0, 1.0);

    const int n = 200 + static_cast<int>(seed_rng() % 800);
    RetrievalIndex index;
    std::vector<BinaryCode> codes;
    std::vector<CompressedDescriptor> descs;
    for (int t = 1; t <= n; ++t) {
      Eigen::VectorXd v(cfg.pca_k);
      for (int i = 0; i < cfg.pca_k; ++i) v[i] = gauss(rng);
      CompressedDescriptor d{t, v};
      const BinaryCode code = ilv::encode_binary(projection, d);
      index.append(code, d);
      codes.push_back(code);
      descs.push_back(d);
    }
    Eigen::VectorXd vq(cfg.pca_k);
    for (int i = 0; i < cfg.pca_k; ++i) vq[i] = gauss(rng);
    CompressedDescriptor q{n + 1, vq};
    const BinaryCode code_q = ilv::encode_binary(projection, q);

    const auto got = index.query(n + 1, code_q, q, cfg);
    const auto want = query_oracle(codes, descs, n + 1, code_q, q, cfg);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].t_prime == want[i].t_prime);
      CHECK(got[i].score == want[i].score);
    }
    // Prefilter soundness.
    for (const auto& c : got) {
      CHECK(std::abs(c.t - c.t_prime) > cfg.delta_t);
      CHECK(ilv::hamming(code_q, codes[c.t_prime - 1]) <= cfg.t_b);
    }
  }
}

TEST_CASE("model serialization round trip") {
  std::mt19937_64 rng(103);
  const auto data = gaussian_cloud(rng, 50, 10);
  const PcaModel pca = ilv::fit_pca(data, 6);
  const auto projection = ilv::make_projection(6, 20, 999);

  const auto path = std::filesystem::temp_directory_path() / "ilv_models.bin";
  ilv::save_models(path.string(), pca, projection);
  PcaModel pca2;
  ilv::ProjectionModel projection2;
  ilv::load_models(path.string(), pca2, projection2);
  CHECK(pca2.mean == pca.mean);
  CHECK(pca2.basis == pca.basis);
  CHECK(pca2.variances == pca.variances);
  CHECK(pca2.total_variance == pca.total_variance);
  CHECK(projection2.hyperplanes == projection.hyperplanes);
  CHECK(projection2.seed == projection.seed);
  std::filesystem::remove(path);
}

TEST_SUITE_END();
