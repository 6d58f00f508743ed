#pragma once

// Ground-truth generation for controlled experiments: Erdős–Rényi graphs,
// node-arrival expansion that preserves the old block exactly, precision
// matrices built as Laplacian + δI, and GMRF signal sampling.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Cholesky>

#include "expgraph/matops.hpp"

namespace expgraph {

struct ArrivalEvent {
  long t = 0;       // time of the arrival, in (1, horizon]
  Index count = 0;  // number of incoming nodes, >= 1
};

/** Growth plan of the node set: N_t = n0 + Σ counts of events with time <= t. */
struct ArrivalSchedule {
  Index n0 = 0;
  long horizon = 0;
  std::vector<ArrivalEvent> events;

  void validate() const;          // strictly increasing times in (1, horizon], counts >= 1
  Index nodes_at(long t) const;   // N_t
  Index arrivals_at(long t) const;  // |I_t|, 0 when no event at t
  Index final_nodes() const { return nodes_at(horizon); }
};

/**
 * Erdős–Rényi adjacency on n nodes: each unordered pair is an edge
 * independently with p = avg_degree/(n−1). Requires n >= 2 and p in (0, 1].
 * Output is symmetric 0/1 with zero diagonal.
 */
Matrix generate_er(Index n, double avg_degree, std::uint64_t seed);

/**
 * Appends k nodes to adjacency A (old block preserved exactly). Each new
 * node connects to each existing node independently with the original
 * p = avg_degree/(n−1); a node whose existing-side draw comes up empty gets
 * one uniformly chosen existing neighbor, so no arrival is isolated from
 * the old graph. New-new pairs are drawn with the same p.
 */
Matrix attach_nodes(const Matrix& A, Index k, double avg_degree, std::uint64_t seed);

/**
 * Precision matrix L + delta·I where L is the combinatorial Laplacian of A.
 * Positive definite with smallest eigenvalue >= delta.
 */
Matrix precision_from_adjacency(const Matrix& A, double delta);

/**
 * One zero-mean GMRF draw with precision S_true: x = M z, z standard
 * normal, M Mᵀ = S_true⁻¹. Deterministic given the seed. Throws
 * NumericalError when S_true is not positive definite.
 */
Vector sample_gmrf(const Matrix& S_true, std::uint64_t seed);

/**
 * Streaming GMRF sampler: factorizes the precision once and draws many
 * samples from one seeded generator. Used by build_scenario so per-epoch
 * sampling costs O(N²) per draw.
 */
class GmrfSampler {
 public:
  GmrfSampler(const Matrix& S_true, std::uint64_t seed);
  Vector draw();
  Index side() const { return llt_.matrixL().rows(); }

 private:
  Eigen::LLT<Matrix> llt_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> gauss_;
};

/**
 * The ground-truth GSO sequence: piecewise constant between arrivals, one
 * stored matrix per epoch. Between arrivals S_t is literally the same
 * matrix, and at arrivals the old block is preserved exactly (changes are
 * solely new nodes), unless the optional rewiring perturbation was enabled.
 */
struct GroundTruthSequence {
  ArrivalSchedule schedule;
  double delta = 0.0;
  std::vector<long> epoch_start;      // first t of each epoch; epoch_start[0] == 1
  std::vector<Matrix> adjacencies;    // per-epoch 0/1 adjacency
  std::vector<Matrix> gsos;           // per-epoch precision (Laplacian + delta·I)

  std::size_t epoch_of(long t) const;
  const Matrix& gso_at(long t) const { return gsos[epoch_of(t)]; }
  const Matrix& adjacency_at(long t) const { return adjacencies[epoch_of(t)]; }
};

struct Scenario {
  GroundTruthSequence truth;
  std::vector<Vector> signals;  // x_t for t = 1..horizon, length N_t each
};

/**
 * Builds the full scenario: topology sequence per the schedule and one GMRF
 * signal per timestep. (schedule, avg_degree, delta, seed, rewire_prob)
 * fully determine the output. rewire_prob > 0 additionally rewires each
 * existing edge with that probability at every arrival event — a
 * perturbation knob that deliberately violates the exact old-block
 * preservation; it defaults to off and stays off in all shipped configs.
 */
Scenario build_scenario(const ArrivalSchedule& schedule, double avg_degree, double delta,
                        std::uint64_t seed, double rewire_prob = 0.0);

/**
 * Plain-text dump of the distinct ground-truth GSOs plus the schedule
 * (matrix-market-style coordinate blocks), for experiment reproducibility.
 */
void write_scenario(const std::string& path, const GroundTruthSequence& truth);

/** Parses a write_scenario dump back; adjacency support is recovered from
 *  the off-diagonal nonzeros of each GSO. */
GroundTruthSequence read_scenario(const std::string& path);

}  // namespace expgraph
