#include "oio/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "oio/errors.hpp"

namespace oio {

Trajectory::Trajectory(int n, long horizon_hint) : n_(n) {
  if (n < 1) throw ConfigError("trajectory needs n >= 1");
  if (horizon_hint > 0) {
    std::size_t cells = static_cast<std::size_t>(horizon_hint) * static_cast<std::size_t>(n);
    x_.reserve(cells);
    y_.reserve(cells);
    d_.reserve(cells);
    s_.reserve(cells);
    g_.reserve(cells);
    loss_.reserve(static_cast<std::size_t>(horizon_hint));
    cycle_.reserve(static_cast<std::size_t>(horizon_hint));
    updated_.reserve(static_cast<std::size_t>(horizon_hint));
  }
}

void Trajectory::append(const Vec& x, const Vec& y, const Vec& d, const Vec& s,
                        const Vec& g, double loss, int cycle, bool updated) {
  x_.insert(x_.end(), x.begin(), x.end());
  y_.insert(y_.end(), y.begin(), y.end());
  d_.insert(d_.end(), d.begin(), d.end());
  s_.insert(s_.end(), s.begin(), s.end());
  g_.insert(g_.end(), g.begin(), g.end());
  loss_.push_back(loss);
  cycle_.push_back(cycle);
  updated_.push_back(updated ? 1 : 0);
}

Vec Trajectory::y_row(long t) const {
  Vec r(static_cast<std::size_t>(n_));
  for (int i = 0; i < n_; ++i) r[static_cast<std::size_t>(i)] = y(t, i);
  return r;
}

Vec Trajectory::x_row(long t) const {
  Vec r(static_cast<std::size_t>(n_));
  for (int i = 0; i < n_; ++i) r[static_cast<std::size_t>(i)] = x(t, i);
  return r;
}

std::vector<Vec> Trajectory::demand_rows() const {
  std::vector<Vec> rows(static_cast<std::size_t>(periods()));
  for (long t = 1; t <= periods(); ++t) {
    Vec r(static_cast<std::size_t>(n_));
    for (int i = 0; i < n_; ++i) r[static_cast<std::size_t>(i)] = d(t, i);
    rows[static_cast<std::size_t>(t - 1)] = std::move(r);
  }
  return rows;
}

double Trajectory::total_loss() const {
  double s = 0.0;
  for (double v : loss_) s += v;
  return s;
}

struct CsvTrajectorySink::Impl {
  std::ofstream out;
  int n;
};

CsvTrajectorySink::CsvTrajectorySink(const std::string& path, int n)
    : impl_(new Impl{std::ofstream(path), n}) {
  if (!impl_->out) {
    delete impl_;
    throw IngestionError("cannot open trajectory file for writing: " + path);
  }
  auto& out = impl_->out;
  out << "t";
  const char* groups[] = {"x", "y", "d", "s", "g"};
  for (const char* gname : groups)
    for (int i = 0; i < n; ++i) out << "," << gname << i;
  out << ",loss,cycle_k,updated\n";
  out.precision(17);
}

CsvTrajectorySink::~CsvTrajectorySink() { delete impl_; }

void CsvTrajectorySink::on_period(const Trajectory& traj, long t) {
  auto& out = impl_->out;
  out << t;
  for (int i = 0; i < impl_->n; ++i) out << "," << traj.x(t, i);
  for (int i = 0; i < impl_->n; ++i) out << "," << traj.y(t, i);
  for (int i = 0; i < impl_->n; ++i) out << "," << traj.d(t, i);
  for (int i = 0; i < impl_->n; ++i) out << "," << traj.s(t, i);
  for (int i = 0; i < impl_->n; ++i) out << "," << traj.g(t, i);
  out << "," << traj.loss(t) << "," << traj.cycle(t) << ","
      << (traj.updated(t) ? 1 : 0) << "\n";
}

Trajectory run(Policy& policy, Dynamic& dynamic, DemandSource& demand, const Loss& loss,
               const FeasibleSet& set, Feedback feedback, long horizon, uint64_t seed,
               TrajectorySink* sink) {
  int n = set.dim();
  if (dynamic.dim() != n || demand.dim() != n || loss.dim() != n)
    throw ConfigError("set, dynamic, demand and loss dimensions disagree");
  if (horizon < 1) throw ConfigError("horizon must be >= 1");
  demand.reset(seed);
  dynamic.reset();
  Trajectory traj(n, horizon);
  traj.seed = seed;
  Vec x = dynamic.state();
  for (long t = 1; t <= horizon; ++t) {
    // copy: observe() below may move the policy's level before the row is stored
    Vec y = policy.propose();
    if (!dominated_by(x, y)) throw FeasibilityViolation(static_cast<int>(t), y, x);
    Vec d = demand.next();
    Vec s = cwise_min(y, d);
    double cost = loss.evaluate(y, d);
    Vec g = feedback == Feedback::Censored ? loss.subgradient_censored(y, s)
                                           : loss.subgradient(y, d);
    int k = policy.cycle_index();
    bool upd = policy.at_update_period();
    Vec x_next = dynamic.step(y, d);
    policy.observe(g, x_next);
    traj.append(x, y, d, s, g, cost, k, upd);
    if (sink) sink->on_period(traj, t);
    x = std::move(x_next);
  }
  return traj;
}

Vec hindsight_box_quantile(const std::vector<Vec>& demands, const NewsvendorLoss& loss,
                           const Vec& lower, const Vec& upper) {
  if (demands.empty()) throw ConfigError("hindsight needs at least one demand row");
  std::size_t n = lower.size();
  long horizon = static_cast<long>(demands.size());
  const Vec& h = loss.holding();
  const Vec& p = loss.penalty();
  Vec best(n);
  Vec column(static_cast<std::size_t>(horizon));
  for (std::size_t i = 0; i < n; ++i) {
    double denom = h[i] + p[i];
    if (denom <= 0.0) {
      // cost is identically zero in this coordinate; any level works
      best[i] = lower[i];
      continue;
    }
    double q = p[i] / denom;
    if (q <= 0.0) {
      best[i] = lower[i];
      continue;
    }
    for (long t = 0; t < horizon; ++t)
      column[static_cast<std::size_t>(t)] = demands[static_cast<std::size_t>(t)][i];
    std::sort(column.begin(), column.end());
    double rank = std::ceil(q * static_cast<double>(horizon));
    long k = std::min<long>(horizon, std::max<long>(1, static_cast<long>(rank)));
    double level = column[static_cast<std::size_t>(k - 1)];
    best[i] = std::min(std::max(level, lower[i]), upper[i]);
  }
  return best;
}

namespace {

double sequence_cost(const std::vector<Vec>& demands, const Loss& loss, const Vec& y) {
  double c = 0.0;
  for (const Vec& d : demands) c += loss.evaluate(y, d);
  return c;
}

// Mean-cost subgradient evaluator. For the newsvendor cost the per-product
// subgradient sum depends only on how many demands fall strictly below y_i,
// which presorted columns turn into a binary search.
class MeanSubgradient {
 public:
  MeanSubgradient(const std::vector<Vec>& demands, const Loss& loss)
      : demands_(demands), loss_(loss) {
    if (loss.kind() == LossKind::Newsvendor) {
      const auto& nv = static_cast<const NewsvendorLoss&>(loss);
      h_ = &nv.holding();
      p_ = &nv.penalty();
      std::size_t n = static_cast<std::size_t>(loss.dim());
      sorted_.assign(n, Vec(demands.size()));
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t t = 0; t < demands.size(); ++t) sorted_[i][t] = demands[t][i];
        std::sort(sorted_[i].begin(), sorted_[i].end());
      }
    }
  }

  Vec at(const Vec& y) const {
    double horizon = static_cast<double>(demands_.size());
    if (!sorted_.empty()) {
      Vec g(y.size());
      for (std::size_t i = 0; i < y.size(); ++i) {
        const Vec& col = sorted_[i];
        // count of demands strictly below y_i; the rest sit on the stockout side
        auto below = std::lower_bound(col.begin(), col.end(), y[i]) - col.begin();
        double met = static_cast<double>(below);
        g[i] = ((*h_)[i] * met - (*p_)[i] * (horizon - met)) / horizon;
      }
      return g;
    }
    Vec g = zeros(y.size());
    for (const Vec& d : demands_) {
      Vec gi = loss_.subgradient(y, d);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += gi[i];
    }
    for (double& v : g) v /= horizon;
    return g;
  }

 private:
  const std::vector<Vec>& demands_;
  const Loss& loss_;
  const Vec* h_ = nullptr;
  const Vec* p_ = nullptr;
  std::vector<Vec> sorted_;
};

}  // namespace

Hindsight hindsight_subgradient(const std::vector<Vec>& demands, const Loss& loss,
                                const FeasibleSet& set) {
  if (demands.empty()) throw ConfigError("hindsight needs at least one demand row");
  const double diam = set.diameter();
  const double gbound = loss.gradient_bound();
  const long max_iters = 100000;
  const double stop_tol = 1e-8 * diam;
  MeanSubgradient mean_grad(demands, loss);

  Vec y = set.project(zeros(static_cast<std::size_t>(set.dim())));
  // suffix averaging: restart the running average halfway through, so the
  // returned point averages the second half of the iterates
  Vec avg = y;
  long avg_count = 1;
  for (long j = 1; j <= max_iters; ++j) {
    Vec g = mean_grad.at(y);
    double eta = gbound > 0.0 ? diam / (gbound * std::sqrt(static_cast<double>(j))) : 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) y[i] -= eta * g[i];
    y = set.project(y);
    if (j == max_iters / 2) {
      avg = y;
      avg_count = 1;
      continue;
    }
    ++avg_count;
    double delta_sq = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      double step = (y[i] - avg[i]) / static_cast<double>(avg_count);
      avg[i] += step;
      delta_sq += step * step;
    }
    if (j > max_iters / 2 && std::sqrt(delta_sq) < stop_tol) break;
  }
  Vec best = set.project(avg);
  return Hindsight{best, sequence_cost(demands, loss, best)};
}

Hindsight hindsight_best(const std::vector<Vec>& demands, const Loss& loss,
                         const FeasibleSet& set) {
  if (demands.empty()) throw ConfigError("hindsight needs at least one demand row");
  if (loss.kind() == LossKind::Linear) {
    // cost grows in every coordinate: the best level is the smallest point
    Vec y = set.kind() == FeasibleSet::Kind::Box ? set.lower()
                                                 : zeros(static_cast<std::size_t>(set.dim()));
    return Hindsight{y, sequence_cost(demands, loss, y)};
  }
  const auto& nv = static_cast<const NewsvendorLoss&>(loss);
  if (set.kind() == FeasibleSet::Kind::Box) {
    Vec y = hindsight_box_quantile(demands, nv, set.lower(), set.upper());
    return Hindsight{y, sequence_cost(demands, loss, y)};
  }
  // capacity: the unconstrained (box-free) quantile solution is exact whenever
  // it satisfies the capacity, and cross-checks the iterative solver
  std::size_t n = static_cast<std::size_t>(set.dim());
  Vec wide_upper(n, std::numeric_limits<double>::max());
  Vec quantile = hindsight_box_quantile(demands, nv, zeros(n), wide_upper);
  Hindsight iterative = hindsight_subgradient(demands, loss, set);
  if (sum(quantile) <= set.cap()) {
    double drift = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double diff = iterative.y[i] - quantile[i];
      drift += diff * diff;
    }
    if (std::sqrt(drift) > 1e-4 * set.diameter())
      throw Error("capacity hindsight solver drifted from the slack quantile solution");
    return Hindsight{quantile, sequence_cost(demands, loss, quantile)};
  }
  return iterative;
}

RegretReport regret(const Trajectory& traj, const Loss& loss, const FeasibleSet& set) {
  RegretReport report;
  Hindsight best = hindsight_best(traj.demand_rows(), loss, set);
  report.cumulative_loss = traj.total_loss();
  report.hindsight_y = best.y;
  report.hindsight_value = best.value;
  report.regret = report.cumulative_loss - best.value;
  double coarse = set.diameter() * loss.gradient_bound() * static_cast<double>(traj.periods());
  report.checks.push_back(
      {"coarse_ceiling", coarse, report.regret <= coarse + 1e-9 * std::max(1.0, coarse)});
  return report;
}

std::vector<NamedBound> theoretical_bounds(double horizon, double gradient_bound,
                                           double diameter, double gamma,
                                           std::optional<double> mu, double delta) {
  if (!(horizon >= 1.0)) throw ConfigError("bounds need horizon >= 1");
  if (!(gamma > 0.0)) throw ConfigError("bounds need gamma > 0");
  if (mu && !(*mu > 0.0 && *mu <= 1.0))
    throw ConfigError("bounds need mu in (0, 1]");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("bounds need delta in (0, 1)");
  const double gd = gradient_bound * diameter;
  const double sqrt_horizon = std::sqrt(horizon);
  const double coef = 1.0 / (2.0 * gamma) + gamma + 1.0;
  std::vector<NamedBound> out;
  if (mu) {
    out.push_back({"adaptive_expected", std::sqrt(2.0) * gd * coef * sqrt_horizon / *mu});
    out.push_back({"adaptive_high_prob",
                   gd * coef * (1.0 + std::log(horizon / delta) / *mu) * sqrt_horizon});
  }
  out.push_back(
      {"descent_sqrt_t", (1.0 + 2.0 * gamma) / (2.0 * gamma) * gd * sqrt_horizon});
  out.push_back({"coarse_ceiling", gd * horizon});
  return out;
}

std::pair<std::vector<long>, int> cycle_lengths(const Trajectory& traj) {
  long horizon = traj.periods();
  // cycle m's length is the gap between consecutive update periods
  std::vector<long> starts;
  for (long t = 1; t <= horizon; ++t)
    if (traj.updated(t)) starts.push_back(t);
  std::vector<long> lengths;
  for (std::size_t i = 0; i + 1 < starts.size(); ++i)
    lengths.push_back(starts[i + 1] - starts[i]);
  int open_tail = starts.empty() ? static_cast<int>(horizon)
                                 : static_cast<int>(horizon - starts.back() + 1);
  return {std::move(lengths), open_tail};
}

CycleStats cycle_stats(const Trajectory& traj, std::optional<double> mu, double c_mu,
                       int tail_max) {
  auto [lengths, open_tail] = cycle_lengths(traj);
  return cycle_stats_from_lengths(std::move(lengths), open_tail, mu, c_mu, tail_max);
}

CycleStats cycle_stats_from_lengths(std::vector<long> lengths, int open_tail,
                                    std::optional<double> mu, double c_mu, int tail_max) {
  CycleStats st;
  st.lengths = std::move(lengths);
  st.completed = static_cast<int>(st.lengths.size());
  st.open_tail = open_tail;
  if (st.completed < 30) {
    st.status = "insufficient_data";
    return st;
  }
  st.status = "ok";
  double k = static_cast<double>(st.completed);
  double m1 = 0.0, m2 = 0.0;
  for (long len : st.lengths) {
    m1 += static_cast<double>(len);
    m2 += static_cast<double>(len) * static_cast<double>(len);
  }
  m1 /= k;
  m2 /= k;
  st.mean = m1;
  st.second_moment = m2;
  double var = std::max(0.0, m2 - m1 * m1) * k / std::max(1.0, k - 1.0);
  st.stderr_mean = std::sqrt(var / k);
  st.tail_freq.resize(static_cast<std::size_t>(tail_max));
  for (int m = 1; m <= tail_max; ++m) {
    long count = 0;
    for (long len : st.lengths)
      if (len > m) ++count;
    st.tail_freq[static_cast<std::size_t>(m - 1)] = static_cast<double>(count) / k;
  }
  if (mu) {
    // mean check: E[len] <= c_mu / mu, allowing 3 standard errors of slack
    double mean_limit = c_mu / *mu + 3.0 * st.stderr_mean;
    st.checks.push_back({"mean_length", st.mean, mean_limit, st.mean <= mean_limit});
    for (int m = 1; m <= tail_max; ++m) {
      double target = c_mu * std::pow(1.0 - *mu, m);
      double phat = st.tail_freq[static_cast<std::size_t>(m - 1)];
      double slack = 3.0 * std::sqrt(std::max(target * (1.0 - target), 0.0) / k);
      double limit = std::min(1.0, target + slack);
      st.checks.push_back({"tail_gt_" + std::to_string(m), phat, limit, phat <= limit});
    }
  }
  return st;
}

AuditResult feasibility_audit(const Trajectory& traj) {
  for (long t = 1; t <= traj.periods(); ++t) {
    for (int i = 0; i < traj.products(); ++i) {
      if (!(traj.x(t, i) <= traj.y(t, i))) {
        return AuditResult{false, t, traj.y_row(t), traj.x_row(t)};
      }
    }
  }
  return AuditResult{true, 0, {}, {}};
}

}  // namespace oio
