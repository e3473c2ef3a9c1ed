#include "seqlab/dtw.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include <Eigen/Dense>

#include "seqlab/error.hpp"

namespace seqlab::dtw {

StateCostMatrix::StateCostMatrix() {
  for (std::size_t i = 0; i < kStateCount; ++i) {
    for (std::size_t j = 0; j < kStateCount; ++j) cost_[i * kStateCount + j] = i == j ? 0.0 : 1.0;
  }
}

void StateCostMatrix::set(BehaviorState a, BehaviorState b, double cost) {
  if (!std::isfinite(cost) || cost < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "state cost must be finite and >= 0");
  }
  if (a == b && cost != 0.0) throw Error(ErrorCode::InvalidArgument, "cost(a, a) must be 0");
  const auto i = abstraction::index_of(a);
  const auto j = abstraction::index_of(b);
  cost_[i * kStateCount + j] = cost;
  cost_[j * kStateCount + i] = cost;
}

double StateCostMatrix::max_cost() const { return *std::max_element(cost_.begin(), cost_.end()); }

double dtw_distance(std::span<const BehaviorState> a, std::span<const BehaviorState> b,
                    const StateCostMatrix& costs, const DtwOptions& options) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::EmptySequence, "DTW needs non-empty sequences");
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  const std::size_t radius =
      options.band ? std::max(*options.band, n > m ? n - m : m - n) : std::max(n, m);
  constexpr double kInf = std::numeric_limits<double>::infinity();

  // Two rolling rows of (cost, path length).
  std::vector<double> prev_cost(m, kInf), cur_cost(m, kInf);
  std::vector<std::size_t> prev_len(m, 0), cur_len(m, 0);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(cur_cost.begin(), cur_cost.end(), kInf);
    const std::size_t lo = i > radius ? i - radius : 0;
    const std::size_t hi = std::min(m - 1, i + radius);
    for (std::size_t j = lo; j <= hi; ++j) {
      const double local = costs(a[i], b[j]);
      if (i == 0 && j == 0) {
        cur_cost[0] = local;
        cur_len[0] = 1;
        continue;
      }
      double best = kInf;
      std::size_t len = 0;
      if (i > 0 && j > 0 && prev_cost[j - 1] < best) {
        best = prev_cost[j - 1];
        len = prev_len[j - 1];
      }
      if (i > 0 && prev_cost[j] < best) {
        best = prev_cost[j];
        len = prev_len[j];
      }
      if (j > 0 && cur_cost[j - 1] < best) {
        best = cur_cost[j - 1];
        len = cur_len[j - 1];
      }
      cur_cost[j] = best + local;
      cur_len[j] = len + 1;
    }
    std::swap(prev_cost, cur_cost);
    std::swap(prev_len, cur_len);
  }
  const double total = prev_cost[m - 1];
  return options.normalize ? total / static_cast<double>(prev_len[m - 1]) : total;
}

double dtw_distance(const abstraction::DssSequence& a, const abstraction::DssSequence& b,
                    const StateCostMatrix& costs, const DtwOptions& options) {
  const auto pa = a.pattern();
  const auto pb = b.pattern();
  return dtw_distance(pa, pb, costs, options);
}

DistanceMatrix DistanceMatrix::zeros(std::vector<std::string> ids) {
  DistanceMatrix m;
  m.n = ids.size();
  m.ids = std::move(ids);
  m.d.assign(m.n * m.n, 0.0);
  return m;
}

std::string sequence_id(const abstraction::DssSequence& seq) {
  return seq.match_id + "/" + seq.player_id;
}

DistanceMatrix pairwise_distances(std::span<const abstraction::DssSequence> corpus,
                                  const StateCostMatrix& costs, const DtwOptions& options,
                                  unsigned threads) {
  if (corpus.size() < 2) throw Error(ErrorCode::InvalidArgument, "need at least 2 sequences");
  std::vector<std::string> ids;
  std::vector<std::vector<BehaviorState>> patterns;
  for (const auto& seq : corpus) {
    if (seq.runs.empty()) throw Error(ErrorCode::EmptySequence, "sequence " + sequence_id(seq) + " is empty");
    ids.push_back(sequence_id(seq));
    patterns.push_back(seq.pattern());
  }
  auto m = DistanceMatrix::zeros(std::move(ids));
  const std::size_t n = m.n;

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  // Rows are dealt round-robin; each worker writes only cells (i, j > i) of
  // its own rows, then the lower triangle is mirrored.
  auto work = [&](unsigned worker) {
    for (std::size_t i = worker; i < n; i += threads) {
      for (std::size_t j = i + 1; j < n; ++j) {
        m.at(i, j) = dtw_distance(patterns[i], patterns[j], costs, options);
      }
    }
  };
  if (threads <= 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, w);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) m.at(j, i) = m(i, j);
  }
  return m;
}

ClusterAssignment hierarchical_cluster(const DistanceMatrix& m, Linkage linkage, std::size_t k) {
  const std::size_t n = m.n;
  if (k < 1 || k > n) {
    throw Error(ErrorCode::BadK, "k must satisfy 1 <= k <= n (n = " + std::to_string(n) + ")");
  }
  std::vector<double> dist = m.d;
  std::vector<std::size_t> size(n, 1);
  std::vector<bool> active(n, true);

  ClusterAssignment out;
  out.k = k;
  out.ids = m.ids;
  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::size_t bi = n;
    std::size_t bj = n;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!active[j]) continue;
        if (dist[i * n + j] < best || bi == n) {
          best = dist[i * n + j];
          bi = i;
          bj = j;
        }
      }
    }
    for (std::size_t x = 0; x < n; ++x) {
      if (!active[x] || x == bi || x == bj) continue;
      const double di = dist[bi * n + x];
      const double dj = dist[bj * n + x];
      const double merged =
          linkage == Linkage::Complete
              ? std::max(di, dj)
              : (static_cast<double>(size[bi]) * di + static_cast<double>(size[bj]) * dj) /
                    static_cast<double>(size[bi] + size[bj]);
      dist[bi * n + x] = merged;
      dist[x * n + bi] = merged;
    }
    size[bi] += size[bj];
    active[bj] = false;
    out.merges.push_back(Merge{bi, bj, best, size[bi]});
  }

  // Replay the first n - k merges to cut the tree.
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t s = 0; s < n - k; ++s) parent[find(out.merges[s].b)] = find(out.merges[s].a);

  out.assignment.assign(n, 0);
  std::vector<std::size_t> label(n, n);
  std::size_t next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t root = find(i);
    if (label[root] == n) label[root] = next++;
    out.assignment[i] = label[root];
  }
  return out;
}

namespace {

// Sign convention: the largest-magnitude component of each axis is positive.
void fix_sign(Eigen::VectorXd& v) {
  Eigen::Index idx = 0;
  v.cwiseAbs().maxCoeff(&idx);
  if (v(idx) < 0) v = -v;
}

std::pair<double, Eigen::VectorXd> power_iteration(const Eigen::MatrixXd& a,
                                                   const MdsOptions& options) {
  const Eigen::Index n = a.rows();
  // Shift by a Gershgorin bound so the dominant eigenvalue is the largest one.
  const double shift = a.cwiseAbs().rowwise().sum().maxCoeff();
  const Eigen::MatrixXd shifted = a + shift * Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd v = Eigen::VectorXd::Unit(n, 0);
  for (std::size_t it = 0; it < options.max_iterations; ++it) {
    Eigen::VectorXd next = shifted * v;
    const double norm = next.norm();
    if (norm == 0.0) break;
    next /= norm;
    const double change = (next - v).norm();
    v = std::move(next);
    if (change < options.tolerance) break;
  }
  const double lambda = v.dot(a * v);
  return {lambda, v};
}

}  // namespace

Embedding2D mds_embed(const DistanceMatrix& m, const MdsOptions& options) {
  const std::size_t n = m.n;
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "MDS needs at least 2 points");
  Embedding2D out;
  out.ids = m.ids;
  out.points.assign(n, {0.0, 0.0});
  out.degenerate = std::all_of(m.d.begin(), m.d.end(), [](double v) { return v == 0.0; });
  if (out.degenerate) return out;

  const auto N = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd sq(N, N);
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index j = 0; j < N; ++j) {
      const double v = m(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      sq(i, j) = v * v;
    }
  }
  const Eigen::MatrixXd centering =
      Eigen::MatrixXd::Identity(N, N) - Eigen::MatrixXd::Constant(N, N, 1.0 / static_cast<double>(n));
  const Eigen::MatrixXd gram = -0.5 * centering * sq * centering;

  std::array<double, 2> lambdas{};
  std::array<Eigen::VectorXd, 2> vectors;
  if (n <= options.direct_solver_limit) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
    // Eigenvalues come back in ascending order.
    for (int c = 0; c < 2; ++c) {
      const Eigen::Index col = N - 1 - c;
      if (col < 0) break;
      lambdas[static_cast<std::size_t>(c)] = solver.eigenvalues()(col);
      vectors[static_cast<std::size_t>(c)] = solver.eigenvectors().col(col);
    }
  } else {
    Eigen::MatrixXd deflated = gram;
    for (std::size_t c = 0; c < 2; ++c) {
      auto [lambda, v] = power_iteration(deflated, options);
      lambdas[c] = lambda;
      vectors[c] = v;
      deflated -= lambda * v * v.transpose();
    }
  }

  for (std::size_t c = 0; c < 2; ++c) {
    if (vectors[c].size() == 0) continue;
    fix_sign(vectors[c]);
    const double lambda = std::max(lambdas[c], 0.0);
    out.eigenvalues[c] = lambda;
    const double scale = std::sqrt(lambda);
    for (std::size_t i = 0; i < n; ++i) {
      out.points[i][c] = vectors[c](static_cast<Eigen::Index>(i)) * scale;
    }
  }
  for (std::size_t c = 0; c < 2; ++c) {
    double mean = 0.0;
    for (const auto& p : out.points) mean += p[c];
    mean /= static_cast<double>(n);
    for (auto& p : out.points) p[c] -= mean;
  }
  return out;
}

}  // namespace seqlab::dtw
