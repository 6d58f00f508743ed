#include "expgraph/synth.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

namespace expgraph {

void ArrivalSchedule::validate() const {
  if (n0 < 1) throw ParameterError("schedule: n0 must be >= 1");
  if (horizon < 1) throw ParameterError("schedule: horizon must be >= 1");
  long prev = 1;
  for (const auto& e : events) {
    if (e.t <= prev) {
      throw ParameterError("schedule: event times must be strictly increasing and > 1, got t=" +
                           std::to_string(e.t));
    }
    if (e.t > horizon) {
      throw ParameterError("schedule: event time " + std::to_string(e.t) +
                           " exceeds horizon " + std::to_string(horizon));
    }
    if (e.count < 1) throw ParameterError("schedule: arrival count must be >= 1");
    prev = e.t;
  }
}

Index ArrivalSchedule::nodes_at(long t) const {
  Index n = n0;
  for (const auto& e : events) {
    if (e.t <= t) n += e.count;
  }
  return n;
}

Index ArrivalSchedule::arrivals_at(long t) const {
  for (const auto& e : events) {
    if (e.t == t) return e.count;
  }
  return 0;
}

namespace {

double edge_probability(Index n, double avg_degree) {
  if (n < 2) throw ParameterError("edge probability needs n >= 2");
  const double p = avg_degree / static_cast<double>(n - 1);
  if (!(p > 0.0 && p <= 1.0)) {
    throw ParameterError("edge probability avg_degree/(n-1) = " + std::to_string(p) +
                         " outside (0, 1]");
  }
  return p;
}

}  // namespace

Matrix generate_er(Index n, double avg_degree, std::uint64_t seed) {
  const double p = edge_probability(n, avg_degree);
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution edge(p);
  Matrix A = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      if (edge(rng)) {
        A(i, j) = 1.0;
        A(j, i) = 1.0;
      }
    }
  }
  return A;
}

Matrix attach_nodes(const Matrix& A, Index k, double avg_degree, std::uint64_t seed) {
  if (A.rows() != A.cols()) throw DimensionError("attach_nodes: adjacency must be square");
  if (k < 1) throw ParameterError("attach_nodes: k must be >= 1");
  const Index n = A.rows();
  const double p = edge_probability(n, avg_degree);

  std::mt19937_64 rng(seed);
  std::bernoulli_distribution edge(p);
  std::uniform_int_distribution<Index> uniform_existing(0, n - 1);

  Matrix out = zero_pad(A, n + k);
  // Existing-side draws first, one new node at a time, with the forced
  // fallback edge keeping every arrival attached to the old graph.
  for (Index v = n; v < n + k; ++v) {
    bool any = false;
    for (Index u = 0; u < n; ++u) {
      if (edge(rng)) {
        out(u, v) = out(v, u) = 1.0;
        any = true;
      }
    }
    if (!any) {
      const Index u = uniform_existing(rng);
      out(u, v) = out(v, u) = 1.0;
    }
  }
  // Then pairs among the newcomers.
  for (Index v = n; v < n + k; ++v) {
    for (Index w = v + 1; w < n + k; ++w) {
      if (edge(rng)) {
        out(v, w) = out(w, v) = 1.0;
      }
    }
  }
  return out;
}

Matrix precision_from_adjacency(const Matrix& A, double delta) {
  if (A.rows() != A.cols()) {
    throw DimensionError("precision_from_adjacency: adjacency must be square");
  }
  if (!(delta > 0.0)) {
    throw ParameterError("precision_from_adjacency: delta must be > 0");
  }
  Matrix S = -A;
  S.diagonal() = A.rowwise().sum();
  S.diagonal().array() += delta;
  return S;
}

GmrfSampler::GmrfSampler(const Matrix& S_true, std::uint64_t seed)
    : llt_(symmetrize(S_true)), rng_(seed), gauss_(0.0, 1.0) {
  if (S_true.rows() != S_true.cols()) {
    throw DimensionError("GmrfSampler: precision must be square");
  }
  if (llt_.info() != Eigen::Success) {
    throw NumericalError("GmrfSampler: precision matrix is not positive definite");
  }
}

Vector GmrfSampler::draw() {
  Vector z(side());
  for (Index i = 0; i < z.size(); ++i) z(i) = gauss_(rng_);
  // Precision S = L Lᵀ gives covariance L⁻ᵀ L⁻¹, so x = L⁻ᵀ z has
  // covariance exactly S⁻¹.
  return llt_.matrixU().solve(z);
}

Vector sample_gmrf(const Matrix& S_true, std::uint64_t seed) {
  GmrfSampler sampler(S_true, seed);
  return sampler.draw();
}

std::size_t GroundTruthSequence::epoch_of(long t) const {
  if (epoch_start.empty() || t < epoch_start.front() || t > schedule.horizon) {
    throw ParameterError("epoch_of: t outside [1, horizon]");
  }
  auto it = std::upper_bound(epoch_start.begin(), epoch_start.end(), t);
  return static_cast<std::size_t>(std::distance(epoch_start.begin(), it)) - 1;
}

namespace {

// Rewiring perturbation: each existing edge is, with probability prob,
// removed and replaced by an edge between a uniformly chosen currently
// non-adjacent pair. Edge count is preserved; old-block preservation is not.
Matrix rewire_edges(const Matrix& A, double prob, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution flip(prob);
  std::uniform_int_distribution<Index> pick(0, A.rows() - 1);
  Matrix out = A;
  const Index n = out.rows();
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      if (out(i, j) != 0.0 && flip(rng)) {
        out(i, j) = out(j, i) = 0.0;
        for (int attempt = 0; attempt < 64; ++attempt) {
          const Index u = pick(rng);
          const Index v = pick(rng);
          if (u != v && out(u, v) == 0.0) {
            out(u, v) = out(v, u) = 1.0;
            break;
          }
        }
      }
    }
  }
  return out;
}

}  // namespace

Scenario build_scenario(const ArrivalSchedule& schedule, double avg_degree, double delta,
                        std::uint64_t seed, double rewire_prob) {
  schedule.validate();
  if (rewire_prob < 0.0 || rewire_prob >= 1.0) {
    throw ParameterError("build_scenario: rewire_prob must lie in [0, 1)");
  }
  std::mt19937_64 master(seed);

  Scenario sc;
  sc.truth.schedule = schedule;
  sc.truth.delta = delta;

  // Topology sequence first: one epoch per arrival event.
  sc.truth.epoch_start.push_back(1);
  sc.truth.adjacencies.push_back(generate_er(schedule.n0, avg_degree, master()));
  for (const auto& e : schedule.events) {
    Matrix A = attach_nodes(sc.truth.adjacencies.back(), e.count, avg_degree, master());
    if (rewire_prob > 0.0) A = rewire_edges(A, rewire_prob, master());
    sc.truth.epoch_start.push_back(e.t);
    sc.truth.adjacencies.push_back(std::move(A));
  }
  for (const Matrix& A : sc.truth.adjacencies) {
    sc.truth.gsos.push_back(precision_from_adjacency(A, delta));
  }

  // Then the signal stream, one factorization per epoch.
  sc.signals.reserve(static_cast<std::size_t>(schedule.horizon));
  for (std::size_t e = 0; e < sc.truth.gsos.size(); ++e) {
    const long begin = sc.truth.epoch_start[e];
    const long end = (e + 1 < sc.truth.epoch_start.size()) ? sc.truth.epoch_start[e + 1]
                                                           : schedule.horizon + 1;
    GmrfSampler sampler(sc.truth.gsos[e], master());
    for (long t = begin; t < end; ++t) {
      sc.signals.push_back(sampler.draw());
    }
  }
  return sc;
}

void write_scenario(const std::string& path, const GroundTruthSequence& truth) {
  std::ofstream out(path);
  if (!out) throw DataError("write_scenario: cannot open " + path);
  out << "expgraph-scenario v1\n";
  out << "n0 " << truth.schedule.n0 << "\n";
  out << "horizon " << truth.schedule.horizon << "\n";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", truth.delta);
  out << "delta " << buf << "\n";
  out << "events " << truth.schedule.events.size() << "\n";
  for (const auto& e : truth.schedule.events) {
    out << e.t << " " << e.count << "\n";
  }
  out << "epochs " << truth.gsos.size() << "\n";
  for (std::size_t e = 0; e < truth.gsos.size(); ++e) {
    const Matrix& S = truth.gsos[e];
    long nnz = 0;
    for (Index i = 0; i < S.rows(); ++i) {
      for (Index j = 0; j <= i; ++j) {
        if (S(i, j) != 0.0) ++nnz;
      }
    }
    out << "epoch " << truth.epoch_start[e] << " " << S.rows() << " " << nnz << "\n";
    for (Index i = 0; i < S.rows(); ++i) {
      for (Index j = 0; j <= i; ++j) {
        if (S(i, j) != 0.0) {
          std::snprintf(buf, sizeof buf, "%.17g", S(i, j));
          out << (i + 1) << " " << (j + 1) << " " << buf << "\n";
        }
      }
    }
  }
  if (!out) throw DataError("write_scenario: write failed for " + path);
}

GroundTruthSequence read_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("read_scenario: cannot open " + path);
  std::string line;
  auto next_line = [&](const char* what) {
    if (!std::getline(in, line)) {
      throw DataError(std::string("read_scenario: truncated file, expected ") + what);
    }
    return line;
  };

  if (next_line("header") != "expgraph-scenario v1") {
    throw DataError("read_scenario: unrecognized header");
  }
  GroundTruthSequence truth;
  std::string key;
  std::size_t n_events = 0, n_epochs = 0;
  {
    std::istringstream s(next_line("n0"));
    s >> key >> truth.schedule.n0;
    if (key != "n0" || !s) throw DataError("read_scenario: bad n0 line");
  }
  {
    std::istringstream s(next_line("horizon"));
    s >> key >> truth.schedule.horizon;
    if (key != "horizon" || !s) throw DataError("read_scenario: bad horizon line");
  }
  {
    std::istringstream s(next_line("delta"));
    s >> key >> truth.delta;
    if (key != "delta" || !s) throw DataError("read_scenario: bad delta line");
  }
  {
    std::istringstream s(next_line("events"));
    s >> key >> n_events;
    if (key != "events" || !s) throw DataError("read_scenario: bad events line");
  }
  for (std::size_t i = 0; i < n_events; ++i) {
    ArrivalEvent e;
    std::istringstream s(next_line("event"));
    s >> e.t >> e.count;
    if (!s) throw DataError("read_scenario: bad event line");
    truth.schedule.events.push_back(e);
  }
  {
    std::istringstream s(next_line("epochs"));
    s >> key >> n_epochs;
    if (key != "epochs" || !s) throw DataError("read_scenario: bad epochs line");
  }
  for (std::size_t e = 0; e < n_epochs; ++e) {
    long start = 0, nnz = 0;
    Index side = 0;
    {
      std::istringstream s(next_line("epoch header"));
      s >> key >> start >> side >> nnz;
      if (key != "epoch" || !s) throw DataError("read_scenario: bad epoch header");
    }
    Matrix S = Matrix::Zero(side, side);
    for (long r = 0; r < nnz; ++r) {
      Index i = 0, j = 0;
      double v = 0.0;
      std::istringstream s(next_line("entry"));
      s >> i >> j >> v;
      if (!s || i < 1 || j < 1 || i > side || j > side) {
        throw DataError("read_scenario: bad coordinate entry");
      }
      S(i - 1, j - 1) = v;
      S(j - 1, i - 1) = v;
    }
    truth.epoch_start.push_back(start);
    truth.gsos.push_back(std::move(S));
  }
  truth.schedule.validate();

  // Adjacency support from the off-diagonal nonzeros.
  for (const Matrix& S : truth.gsos) {
    Matrix A = Matrix::Zero(S.rows(), S.cols());
    for (Index i = 0; i < S.rows(); ++i) {
      for (Index j = 0; j < S.cols(); ++j) {
        if (i != j && S(i, j) != 0.0) A(i, j) = 1.0;
      }
    }
    truth.adjacencies.push_back(std::move(A));
  }
  return truth;
}

}  // namespace expgraph
