#include "evsched/feeder.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "evsched/error.hpp"
#include "evsched/simd/kernels.hpp"

namespace evsched {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kTopology: return "topology";
    case ErrorKind::kDimension: return "dimension";
    case ErrorKind::kInfeasibleConfig: return "infeasible-configuration";
    case ErrorKind::kBaseLoadInfeasible: return "base-load-infeasible";
    case ErrorKind::kIterationLimit: return "iteration-limit";
    case ErrorKind::kInternalConsistency: return "internal-consistency";
    case ErrorKind::kInvariantViolation: return "invariant-violation";
  }
  return "unknown";
}

void FeederModel::validate() const {
  const auto n = static_cast<std::size_t>(node_count);
  if (node_count < 1) throw Error(ErrorKind::kConfig, "feeder needs at least the substation node");
  if (parent.size() != n || line_r.size() != n || line_x.size() != n || s_bar.size() != n) {
    throw Error(ErrorKind::kDimension, "feeder node arrays must all have node_count entries");
  }
  if (!(v_min_sq > 0.0) || !(v_min_sq < v_max_sq)) {
    throw Error(ErrorKind::kConfig,
                fmt::format("voltage band must satisfy 0 < v_min_sq < v_max_sq, got [{}, {}]",
                            v_min_sq, v_max_sq));
  }
  if (p_min > p_max || q_min > q_max) throw Error(ErrorKind::kConfig, "injection bounds cross");
  if (!(base_kva > 0.0)) throw Error(ErrorKind::kConfig, "base_kva must be positive");
  for (int j = 1; j < node_count; ++j) {
    if (parent[j] < 0 || parent[j] >= node_count || parent[j] == j) {
      throw Error(ErrorKind::kTopology, fmt::format("node {} has invalid parent {}", j, parent[j]));
    }
    if (!(line_r[j] > 0.0) || !(line_x[j] >= 0.0)) {
      throw Error(ErrorKind::kConfig,
                  fmt::format("line into node {} needs r > 0 and x >= 0 (r={}, x={})", j,
                              line_r[j], line_x[j]));
    }
    if (s_bar[j] && !(*s_bar[j] >= 0.0)) {
      throw Error(ErrorKind::kConfig, fmt::format("node {} has negative s_bar", j));
    }
  }
  // Every node must reach the substation within N steps.
  for (int j = 1; j < node_count; ++j) {
    int cur = j;
    int steps = 0;
    while (cur != 0) {
      cur = parent[cur];
      if (++steps > node_count) {
        throw Error(ErrorKind::kTopology, fmt::format("cycle detected through node {}", j));
      }
    }
  }
}

std::vector<int> path_to_substation(const FeederModel& feeder, int node) {
  std::vector<int> path;
  int cur = node;
  while (cur != 0) {
    path.push_back(cur);
    cur = feeder.parent[cur];
    if (static_cast<int>(path.size()) > feeder.node_count) {
      throw Error(ErrorKind::kTopology, fmt::format("cycle detected through node {}", node));
    }
  }
  return path;
}

LdfMatrices build_ldf_matrices(const FeederModel& feeder) {
  feeder.validate();
  const int n = feeder.lines();
  // Cumulative impedance from the substation, then R[j][k] = 2 * cum(lca(j, k)).
  std::vector<double> cum_r(feeder.node_count, 0.0), cum_x(feeder.node_count, 0.0);
  std::vector<int> depth(feeder.node_count, 0);
  std::vector<std::vector<int>> ancestors(feeder.node_count);
  for (int j = 1; j < feeder.node_count; ++j) {
    ancestors[j] = path_to_substation(feeder, j);
    depth[j] = static_cast<int>(ancestors[j].size());
    for (int l : ancestors[j]) {
      cum_r[j] += feeder.line_r[l];
      cum_x[j] += feeder.line_x[l];
    }
  }
  auto lca = [&](int a, int b) {
    while (depth[a] > depth[b]) a = feeder.parent[a];
    while (depth[b] > depth[a]) b = feeder.parent[b];
    while (a != b) {
      a = feeder.parent[a];
      b = feeder.parent[b];
    }
    return a;
  };
  LdfMatrices ldf{Matrix<double>(n, n), Matrix<double>(n, n)};
  for (int j = 1; j <= n; ++j) {
    for (int k = j; k <= n; ++k) {
      const int c = lca(j, k);
      const double r = 2.0 * cum_r[c];
      const double x = 2.0 * cum_x[c];
      ldf.r(j - 1, k - 1) = ldf.r(k - 1, j - 1) = r;
      ldf.x(j - 1, k - 1) = ldf.x(k - 1, j - 1) = x;
    }
  }
  return ldf;
}

std::vector<double> evaluate_voltages(const LdfMatrices& ldf, double v0,
                                      std::span<const double> p,
                                      std::span<const double> q) {
  const std::size_t n = ldf.r.rows();
  if (p.size() != n || q.size() != n || ldf.x.rows() != n) {
    throw Error(ErrorKind::kDimension,
                fmt::format("evaluate_voltages: expected {} injections, got p={} q={}", n,
                            p.size(), q.size()));
  }
  std::vector<double> rp(n), xq(n), v(n);
  const auto& k = simd::active();
  k.gemv(n, n, n, ldf.r.data(), p.data(), rp.data());
  k.gemv(n, n, n, ldf.x.data(), q.data(), xq.data());
  for (std::size_t i = 0; i < n; ++i) v[i] = v0 + rp[i] + xq[i];
  return v;
}

std::vector<double> active_power_envelope(const FeederModel& feeder,
                                          std::span<const double> q, int interval) {
  const int n = feeder.lines();
  if (static_cast<int>(q.size()) != n) {
    throw Error(ErrorKind::kDimension, "active_power_envelope: q must have N-1 entries");
  }
  std::vector<double> bound(n, kUnbounded);
  for (int j = 1; j <= n; ++j) {
    if (!feeder.s_bar[j]) continue;
    const double s = *feeder.s_bar[j];
    const double qj = q[j - 1];
    const double slack = s * s - qj * qj;
    if (slack < 0.0) {
      throw Error(ErrorKind::kInfeasibleConfig,
                  fmt::format("reactive injection {} exceeds apparent-power limit {} at node {}"
                              " interval {}",
                              qj, s, j, interval));
    }
    bound[j - 1] = std::sqrt(slack);
  }
  return bound;
}

InjectionProfile InjectionProfile::zeros(int nodes_excl_substation, int intervals) {
  InjectionProfile p;
  p.intervals = intervals;
  p.p_g = Matrix<double>(nodes_excl_substation, intervals);
  p.q_g = Matrix<double>(nodes_excl_substation, intervals);
  p.p_l = Matrix<double>(nodes_excl_substation, intervals);
  p.q_l = Matrix<double>(nodes_excl_substation, intervals);
  return p;
}

InjectionProfile InjectionProfile::slice(int first, int count) const {
  if (first < 0 || count < 0 || first + count > intervals) {
    throw Error(ErrorKind::kDimension,
                fmt::format("profile slice [{}, {}) outside 0..{}", first, first + count,
                            intervals));
  }
  InjectionProfile out = zeros(nodes(), count);
  for (int j = 0; j < nodes(); ++j) {
    for (int t = 0; t < count; ++t) {
      out.p_g(j, t) = p_g(j, first + t);
      out.q_g(j, t) = q_g(j, first + t);
      out.p_l(j, t) = p_l(j, first + t);
      out.q_l(j, t) = q_l(j, first + t);
    }
  }
  return out;
}

void InjectionProfile::validate() const {
  const auto shape_ok = [&](const Matrix<double>& m) {
    return m.rows() == p_l.rows() && m.cols() == static_cast<std::size_t>(intervals);
  };
  if (!shape_ok(p_g) || !shape_ok(q_g) || !shape_ok(p_l) || !shape_ok(q_l)) {
    throw Error(ErrorKind::kDimension, "injection profile arrays must share (N-1) x T shape");
  }
}

NetInjections net_injections(const InjectionProfile& profile, const Matrix<double>& p_ev) {
  profile.validate();
  if (p_ev.rows() != profile.p_l.rows() || p_ev.cols() != profile.p_l.cols()) {
    throw Error(ErrorKind::kDimension, "p_ev must match the profile's (N-1) x T shape");
  }
  NetInjections out{Matrix<double>(p_ev.rows(), p_ev.cols()),
                    Matrix<double>(p_ev.rows(), p_ev.cols())};
  for (std::size_t j = 0; j < p_ev.rows(); ++j) {
    for (std::size_t t = 0; t < p_ev.cols(); ++t) {
      out.p(j, t) = profile.p_g(j, t) - profile.p_l(j, t) - p_ev(j, t);
      out.q(j, t) = profile.q_g(j, t) - profile.q_l(j, t);
    }
  }
  return out;
}

const char* to_string(NetworkViolation::Kind kind) {
  switch (kind) {
    case NetworkViolation::Kind::kVoltageLow: return "voltage-low";
    case NetworkViolation::Kind::kVoltageHigh: return "voltage-high";
    case NetworkViolation::Kind::kActiveLow: return "active-power-low";
    case NetworkViolation::Kind::kActiveHigh: return "active-power-high";
    case NetworkViolation::Kind::kReactiveLow: return "reactive-power-low";
    case NetworkViolation::Kind::kReactiveHigh: return "reactive-power-high";
    case NetworkViolation::Kind::kApparentPower: return "apparent-power";
  }
  return "unknown";
}

NetworkCheck check_network(const FeederModel& feeder, const LdfMatrices& ldf,
                           const InjectionProfile& profile, const Matrix<double>& p_ev,
                           double tol) {
  using Kind = NetworkViolation::Kind;
  const NetInjections inj = net_injections(profile, p_ev);
  const int n = feeder.lines();
  const int T = profile.intervals;
  NetworkCheck out;
  out.v_min.assign(T, kUnbounded);
  out.v_max.assign(T, -kUnbounded);
  out.v_min_node.assign(T, -1);
  std::vector<double> p(n), q(n);
  for (int t = 0; t < T; ++t) {
    for (int j = 0; j < n; ++j) {
      p[j] = inj.p(j, t);
      q[j] = inj.q(j, t);
    }
    const std::vector<double> v = evaluate_voltages(ldf, feeder.v0, p, q);
    for (int j = 0; j < n; ++j) {
      const int node = j + 1;
      if (v[j] < out.v_min[t]) {
        out.v_min[t] = v[j];
        out.v_min_node[t] = node;
      }
      out.v_max[t] = std::max(out.v_max[t], v[j]);
      out.worst_low_margin = std::min(out.worst_low_margin, v[j] - feeder.v_min_sq);
      out.worst_high_margin = std::min(out.worst_high_margin, feeder.v_max_sq - v[j]);
      auto flag = [&](Kind kind, double value, double limit) {
        out.violations.push_back(NetworkViolation{kind, node, t, value, limit});
      };
      if (v[j] < feeder.v_min_sq - tol) flag(Kind::kVoltageLow, v[j], feeder.v_min_sq);
      if (v[j] > feeder.v_max_sq + tol) flag(Kind::kVoltageHigh, v[j], feeder.v_max_sq);
      if (p[j] < feeder.p_min - tol) flag(Kind::kActiveLow, p[j], feeder.p_min);
      if (p[j] > feeder.p_max + tol) flag(Kind::kActiveHigh, p[j], feeder.p_max);
      if (q[j] < feeder.q_min - tol) flag(Kind::kReactiveLow, q[j], feeder.q_min);
      if (q[j] > feeder.q_max + tol) flag(Kind::kReactiveHigh, q[j], feeder.q_max);
      if (feeder.s_bar[node]) {
        const double s = *feeder.s_bar[node];
        if (q[j] * q[j] > s * s) {
          flag(Kind::kApparentPower, std::fabs(q[j]), s);
        } else if (std::fabs(p[j]) > std::sqrt(s * s - q[j] * q[j]) + tol) {
          flag(Kind::kApparentPower, std::fabs(p[j]), std::sqrt(s * s - q[j] * q[j]));
        }
      }
    }
  }
  return out;
}

}  // namespace evsched
