#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "seqlab/abstraction.hpp"

namespace seqlab::dtw {

using abstraction::BehaviorState;
using abstraction::kStateCount;

// Symmetric local cost between states with a zero diagonal. Defaults to 1 for
// every pair of distinct states.
class StateCostMatrix {
 public:
  StateCostMatrix();

  double operator()(BehaviorState a, BehaviorState b) const {
    return cost_[abstraction::index_of(a) * kStateCount + abstraction::index_of(b)];
  }
  // Sets both (a,b) and (b,a). Throws Error(InvalidArgument) for a negative or
  // non-finite cost, or a nonzero cost on the diagonal.
  void set(BehaviorState a, BehaviorState b, double cost);
  double max_cost() const;

 private:
  std::array<double, kStateCount * kStateCount> cost_{};
};

struct DtwOptions {
  bool normalize = false;           // divide by the warping-path length
  std::optional<std::size_t> band;  // Sakoe-Chiba radius, in steps
};

// Classic DTW with symmetric unit steps (match, insertion, deletion). Among
// equal-cost predecessors the diagonal, then the vertical, then the
// horizontal step is preferred, which fixes the path used for normalization.
// Throws Error(EmptySequence).
double dtw_distance(std::span<const BehaviorState> a, std::span<const BehaviorState> b,
                    const StateCostMatrix& costs = {}, const DtwOptions& options = {});
double dtw_distance(const abstraction::DssSequence& a, const abstraction::DssSequence& b,
                    const StateCostMatrix& costs = {}, const DtwOptions& options = {});

struct DistanceMatrix {
  std::vector<std::string> ids;
  std::size_t n = 0;
  std::vector<double> d;  // row-major n x n

  double operator()(std::size_t i, std::size_t j) const { return d[i * n + j]; }
  double& at(std::size_t i, std::size_t j) { return d[i * n + j]; }

  static DistanceMatrix zeros(std::vector<std::string> ids);
};

// Each unordered pair is computed once and mirrored. `threads == 0` uses the
// hardware concurrency. Throws Error(InvalidArgument) for fewer than 2 items.
DistanceMatrix pairwise_distances(std::span<const abstraction::DssSequence> corpus,
                                  const StateCostMatrix& costs = {}, const DtwOptions& options = {},
                                  unsigned threads = 0);

std::string sequence_id(const abstraction::DssSequence& seq);  // "match/player"

enum class Linkage { Average, Complete };

struct Merge {
  std::size_t a = 0;  // smallest original index in each merged cluster
  std::size_t b = 0;
  double height = 0.0;
  std::size_t size = 0;  // size of the resulting cluster
};

struct ClusterAssignment {
  std::size_t k = 0;
  std::vector<std::size_t> assignment;  // per item; clusters numbered by first member
  std::vector<Merge> merges;            // full tree, n - 1 merges
  std::vector<std::string> ids;
};

// Agglomerative clustering (Lance-Williams updates). Among equal linkage
// values the pair with the lowest (i, j) representative indices merges first.
// Throws Error(BadK) unless 1 <= k <= n.
ClusterAssignment hierarchical_cluster(const DistanceMatrix& m, Linkage linkage, std::size_t k);

struct Embedding2D {
  std::vector<std::string> ids;
  std::vector<std::array<double, 2>> points;
  std::array<double, 2> eigenvalues{};  // top two of the centred Gram matrix, clipped at 0
  bool degenerate = false;              // every distance was zero
};

struct MdsOptions {
  std::size_t direct_solver_limit = 2000;  // above this, power iteration
  double tolerance = 1e-10;
  std::size_t max_iterations = 10000;
};

// Classical MDS. Throws Error(InvalidArgument) for n < 2.
Embedding2D mds_embed(const DistanceMatrix& m, const MdsOptions& options = {});

}  // namespace seqlab::dtw
