#include "oio/demand.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "oio/dynamics.hpp"
#include "oio/errors.hpp"
#include "oio/feasible_set.hpp"
#include "oio/policy.hpp"
#include "oio/rng.hpp"

namespace oio {

namespace {

std::string vec_repr(const Vec& v, std::size_t max_terms = 4) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < v.size() && i < max_terms; ++i) os << (i ? "," : "") << v[i];
  if (v.size() > max_terms) os << ",...";
  os << "]";
  return os.str();
}

class DeterministicSource final : public DemandSource {
 public:
  DeterministicSource(std::vector<Vec> rows, bool repeat, std::string label)
      : rows_(std::move(rows)), repeat_(repeat), label_(std::move(label)) {
    if (rows_.empty()) throw ConfigError("deterministic demand needs at least one row");
    n_ = static_cast<int>(rows_.front().size());
    if (n_ < 1) throw ConfigError("deterministic demand rows must be nonempty");
    double lo = rows_[0][0];
    for (const Vec& r : rows_) {
      if (static_cast<int>(r.size()) != n_)
        throw ConfigError("deterministic demand rows have inconsistent widths");
      for (double v : r) {
        if (!(v >= 0.0) || !std::isfinite(v))
          throw ConfigError("demand values must be finite and >= 0");
        lo = std::min(lo, v);
      }
    }
    min_entry_ = lo;
  }

  int dim() const override { return n_; }
  void reset(uint64_t) override { cursor_ = 0; }
  Vec next() override {
    if (cursor_ >= rows_.size()) {
      if (!repeat_) throw EndOfData("demand sequence exhausted after " +
                                    std::to_string(rows_.size()) + " periods");
      cursor_ = 0;
    }
    return rows_[cursor_++];
  }
  std::optional<NonDegeneracy> non_degeneracy() const override {
    if (min_entry_ > 0.0) return NonDegeneracy{min_entry_, 1.0};
    return std::nullopt;
  }
  std::optional<long> max_periods() const override {
    if (repeat_) return std::nullopt;
    return static_cast<long>(rows_.size());
  }
  std::string describe() const override { return label_; }
  std::unique_ptr<DemandSource> clone_fresh() const override {
    return std::make_unique<DeterministicSource>(rows_, repeat_, label_);
  }

 private:
  std::vector<Vec> rows_;
  bool repeat_;
  std::string label_;
  int n_ = 0;
  double min_entry_ = 0.0;
  std::size_t cursor_ = 0;
};

class PoissonSource final : public DemandSource {
 public:
  PoissonSource(Vec intensities, std::string label)
      : lambda_(std::move(intensities)), label_(std::move(label)) {
    if (lambda_.empty()) throw ConfigError("poisson demand needs at least one intensity");
    for (double l : lambda_)
      if (!(l > 0.0) || !std::isfinite(l))
        throw ConfigError("poisson intensities must be finite and > 0");
  }

  int dim() const override { return static_cast<int>(lambda_.size()); }
  void reset(uint64_t seed) override {
    streams_.clear();
    streams_.reserve(lambda_.size());
    for (std::size_t i = 0; i < lambda_.size(); ++i)
      streams_.emplace_back(mix_seed(seed, static_cast<uint64_t>(i)));
  }
  Vec next() override {
    if (streams_.empty()) throw ConfigError("demand source used before reset");
    Vec d(lambda_.size());
    for (std::size_t i = 0; i < lambda_.size(); ++i)
      d[i] = static_cast<double>(streams_[i].poisson(lambda_[i]));
    return d;
  }
  std::optional<NonDegeneracy> non_degeneracy() const override {
    // P(d_i >= 1) = 1 - exp(-lambda_i), independent across products
    double mu = 1.0;
    for (double l : lambda_) mu *= -std::expm1(-l);
    return NonDegeneracy{1.0, mu};
  }
  std::string describe() const override { return label_; }
  std::unique_ptr<DemandSource> clone_fresh() const override {
    return std::make_unique<PoissonSource>(lambda_, label_);
  }

  const Vec& intensities() const { return lambda_; }

 private:
  Vec lambda_;
  std::string label_;
  std::vector<Rng> streams_;
};

class ClippedAr1Source final : public DemandSource {
 public:
  ClippedAr1Source(Vec mean, double phi, double sigma)
      : mean_(std::move(mean)), phi_(phi), sigma_(sigma) {
    if (mean_.empty()) throw ConfigError("ar1 demand needs at least one mean");
    for (double m : mean_)
      if (!(m >= 0.0) || !std::isfinite(m))
        throw ConfigError("ar1 means must be finite and >= 0");
    if (!(phi > -1.0 && phi < 1.0)) throw ConfigError("ar1 coefficient must lie in (-1, 1)");
    if (!(sigma >= 0.0)) throw ConfigError("ar1 noise scale must be >= 0");
  }

  int dim() const override { return static_cast<int>(mean_.size()); }
  void reset(uint64_t seed) override {
    streams_.clear();
    streams_.reserve(mean_.size());
    for (std::size_t i = 0; i < mean_.size(); ++i)
      streams_.emplace_back(mix_seed(seed, static_cast<uint64_t>(i)));
    prev_ = mean_;
  }
  Vec next() override {
    if (streams_.empty()) throw ConfigError("demand source used before reset");
    Vec d(mean_.size());
    for (std::size_t i = 0; i < mean_.size(); ++i) {
      double eps = sigma_ > 0.0 ? streams_[i].normal() : 0.0;
      d[i] = std::max(0.0, mean_[i] + phi_ * (prev_[i] - mean_[i]) + sigma_ * eps);
    }
    prev_ = d;
    return d;
  }
  std::string describe() const override {
    std::ostringstream os;
    os << "clipped_ar1(mean=" << vec_repr(mean_) << ",phi=" << phi_ << ",sigma=" << sigma_
       << ")";
    return os.str();
  }
  std::unique_ptr<DemandSource> clone_fresh() const override {
    return std::make_unique<ClippedAr1Source>(mean_, phi_, sigma_);
  }

 private:
  Vec mean_;
  double phi_, sigma_;
  std::vector<Rng> streams_;
  Vec prev_;
};

class DecayingSource final : public DemandSource {
 public:
  DecayingSource(double y1, double ratio) : y1_(y1), ratio_(ratio) {}
  int dim() const override { return 1; }
  void reset(uint64_t) override { t_ = 0; }
  Vec next() override {
    ++t_;
    return Vec{std::ldexp(ratio_ * y1_, -t_)};
  }
  std::string describe() const override {
    std::ostringstream os;
    os << "decaying(y1=" << y1_ << ",ratio=" << ratio_ << ")";
    return os.str();
  }
  std::unique_ptr<DemandSource> clone_fresh() const override {
    return std::make_unique<DecayingSource>(y1_, ratio_);
  }

 private:
  double y1_, ratio_;
  int t_ = 0;
};

bool parse_cell(const std::string& cell, double& out) {
  const char* begin = cell.c_str();
  char* end = nullptr;
  out = std::strtod(begin, &end);
  if (end == begin) return false;
  while (*end == ' ' || *end == '\t') ++end;
  return *end == '\0';
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

std::unique_ptr<DemandSource> make_deterministic(std::vector<Vec> rows, bool repeat) {
  std::string label =
      "sequence(T=" + std::to_string(rows.size()) + (repeat ? ",repeat)" : ")");
  return std::make_unique<DeterministicSource>(std::move(rows), repeat, std::move(label));
}

std::unique_ptr<DemandSource> make_constant(Vec level) {
  std::string label = "constant(" + vec_repr(level) + ")";
  std::vector<Vec> rows{std::move(level)};
  return std::make_unique<DeterministicSource>(std::move(rows), true, std::move(label));
}

std::unique_ptr<DemandSource> make_poisson(Vec intensities) {
  std::string label = "poisson(lambda=" + vec_repr(intensities) + ")";
  return std::make_unique<PoissonSource>(std::move(intensities), std::move(label));
}

std::unique_ptr<DemandSource> make_uniform_intensity_poisson(int n, double lo, double hi,
                                                             uint64_t meta_seed) {
  if (n < 1) throw ConfigError("uniform-intensity poisson needs n >= 1");
  if (!(lo > 0.0) || !(hi >= lo))
    throw ConfigError("uniform intensity range needs 0 < lo <= hi");
  Rng meta(mix_seed(meta_seed, 0));
  Vec lambda(static_cast<std::size_t>(n));
  for (double& l : lambda) l = meta.uniform(lo, hi);
  std::ostringstream os;
  os << "poisson(lambda~uniform[" << lo << "," << hi << "],meta_seed=" << meta_seed << ")";
  return std::make_unique<PoissonSource>(std::move(lambda), os.str());
}

std::unique_ptr<DemandSource> make_clipped_ar1(Vec mean, double phi, double sigma) {
  return std::make_unique<ClippedAr1Source>(std::move(mean), phi, sigma);
}

const Vec* poisson_intensities(const DemandSource& src) {
  if (auto* p = dynamic_cast<const PoissonSource*>(&src)) return &p->intensities();
  return nullptr;
}

CsvDataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open demand file: " + path);
  CsvDataset data;
  std::string line;
  long line_no = 0;
  bool header_checked = false;
  while (std::getline(in, line)) {
    ++line_no;
    std::string stripped = trim(line);
    if (stripped.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(stripped);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
    if (stripped.back() == ',') cells.push_back("");
    if (!header_checked) {
      header_checked = true;
      double probe;
      if (!parse_cell(cells.front(), probe)) continue;  // header row
    }
    Vec row(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
      double v;
      if (!parse_cell(cells[i], v))
        throw IngestionError("line " + std::to_string(line_no) + ": cell '" + cells[i] +
                             "' is not a number");
      if (!(v >= 0.0) || !std::isfinite(v))
        throw IngestionError("line " + std::to_string(line_no) +
                             ": demand values must be finite and >= 0");
      row[i] = v;
    }
    if (data.products == 0) {
      data.products = static_cast<int>(row.size());
    } else if (static_cast<int>(row.size()) != data.products) {
      throw IngestionError("line " + std::to_string(line_no) + ": expected " +
                           std::to_string(data.products) + " columns, found " +
                           std::to_string(row.size()));
    }
    data.rows.push_back(std::move(row));
  }
  if (data.rows.empty()) throw IngestionError("demand file has no data rows: " + path);
  data.periods = static_cast<long>(data.rows.size());
  return data;
}

std::unique_ptr<DemandSource> make_csv_source(CsvDataset data) {
  std::string label = "csv(T=" + std::to_string(data.periods) +
                      ",n=" + std::to_string(data.products) + ")";
  return std::make_unique<DeterministicSource>(std::move(data.rows), false,
                                               std::move(label));
}

std::vector<Vec> adversary_replay_sequence(const PolicyFactory& make_policy,
                                           const FeasibleSet& set, const Loss& loss,
                                           double probe, long horizon) {
  if (set.dim() != 1 || loss.dim() != 1)
    throw ConfigError("replay construction handles a single product");
  if (!(probe > 0.0) || probe > set.diameter())
    throw ConfigError("probe demand must lie in (0, diameter]");
  if (horizon < 1) throw ConfigError("replay construction needs horizon >= 1");
  std::unique_ptr<Policy> policy = make_policy();
  if (!policy || !policy->deterministic())
    throw ConfigError("replay construction requires a deterministic policy");

  // simulate the policy against the constant probe under lost-sales carry-over
  Vec d_probe{probe};
  auto dyn = make_lost_sales(1);
  dyn->reset();
  Vec x = dyn->state();
  long first_positive = 0;
  for (long t = 1; t <= horizon; ++t) {
    Vec y = policy->propose();
    if (!dominated_by(x, y))
      throw FeasibilityViolation(static_cast<int>(t), y, x);
    if (y[0] > 0.0) {
      first_positive = t;
      break;
    }
    Vec g = loss.subgradient(y, d_probe);
    Vec x_next = dyn->step(y, d_probe);
    policy->observe(g, x_next);
    x = x_next;
  }

  std::vector<Vec> rows(static_cast<std::size_t>(horizon), Vec{probe});
  if (first_positive > 0) {
    // starve the positive order and everything after it
    for (long t = first_positive; t <= horizon; ++t)
      rows[static_cast<std::size_t>(t - 1)] = Vec{0.0};
  }
  return rows;
}

DecayingConstruction adversary_decaying_demand(double y1, double ratio) {
  if (!(y1 > 0.0) || !std::isfinite(y1))
    throw ConfigError("decaying construction needs y1 > 0");
  if (!(ratio > 0.0) || !(ratio < 1.0))
    throw ConfigError("budget ratio must lie in (0, 1)");
  DecayingConstruction c;
  c.demand = std::make_unique<DecayingSource>(y1, ratio);
  c.loss = std::make_unique<LinearLoss>(1);
  c.regret_rate = y1 * (1.0 - ratio);
  return c;
}

}  // namespace oio
