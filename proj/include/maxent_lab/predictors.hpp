#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "maxent_lab/error.hpp"
#include "maxent_lab/integer_prior.hpp"
#include "maxent_lab/lattice.hpp"
#include "maxent_lab/lattice_dp.hpp"
#include "maxent_lab/maxent.hpp"

namespace maxent_lab {

/// Sequential probability assignment on X^infinity. Codelength accumulates -log2 of each
/// emitted conditional and becomes +inf once a zero-mass symbol is observed.
class Predictor {
 public:
  virtual ~Predictor() = default;

  virtual std::string tag() const = 0;
  virtual std::size_t alphabet() const = 0;
  virtual std::unique_ptr<Predictor> clone() const = 0;

  /// Conditional masses of the next symbol given the observed prefix.
  virtual void next_masses(std::span<double> out) const = 0;

  /// Consumes x and returns the conditional mass it was assigned.
  double observe(std::size_t x) {
    std::vector<double> m(alphabet());
    next_masses(m);
    log2_prob_ += m[x] > 0 ? std::log2(m[x]) : -std::numeric_limits<double>::infinity();
    ++position_;
    update(x);
    return m[x];
  }

  void reset() {
    log2_prob_ = 0;
    position_ = 0;
    restart();
  }

  double codelength_bits() const { return -log2_prob_; }
  double log2_prob() const { return log2_prob_; }
  std::int64_t position() const { return position_; }

 protected:
  virtual void update(std::size_t x) = 0;
  virtual void restart() = 0;

 private:
  double log2_prob_ = 0;
  std::int64_t position_ = 0;
};

/// Codelength in bits of a whole sequence under a fresh copy of `p`.
inline double codelength(const Predictor& p, std::span<const std::size_t> seq) {
  auto c = p.clone();
  c->reset();
  for (auto x : seq) c->observe(x);
  return c->codelength_bits();
}

class IidPredictor final : public Predictor {
 public:
  IidPredictor(std::string tag, std::vector<double> mass) : tag_(std::move(tag)), mass_(std::move(mass)) {}

  std::string tag() const override { return tag_; }
  std::size_t alphabet() const override { return mass_.size(); }
  std::unique_ptr<Predictor> clone() const override { return std::make_unique<IidPredictor>(*this); }
  void next_masses(std::span<double> out) const override { std::copy(mass_.begin(), mass_.end(), out.begin()); }

 protected:
  void update(std::size_t) override {}
  void restart() override {}

 private:
  std::string tag_;
  std::vector<double> mass_;
};

/// I.i.d. p~: the MaxEnt product code.
inline std::unique_ptr<Predictor> maxent_predictor(const MaxEntSolution& sol) {
  return std::make_unique<IidPredictor>("maxent", sol.pmf);
}

inline std::unique_ptr<Predictor> prior_predictor(const SampleSpace& space) {
  return std::make_unique<IidPredictor>("prior", space.prior_mass);
}

/// q(. | C_{n_j}) on the first n_j symbols, then i.i.d. q. Conditionals come from backward
/// sum tables; any measure proportional to q times a function of T gives the same process, so
/// the table may be built from p~ to keep magnitudes moderate.
class ConditionedPriorPredictor final : public Predictor {
 public:
  ConditionedPriorPredictor(const ConstraintSpec& c, std::vector<double> table_mass, std::vector<double> prior_mass,
                            std::int64_t horizon, std::shared_ptr<const SumTable> table)
      : c_(&c), table_mass_(std::move(table_mass)), prior_mass_(std::move(prior_mass)), horizon_(horizon),
        table_(std::move(table)) {
    auto t = c.target_sum_index(horizon);
    if (!t || !table_ || table_->max_length() < horizon ||
        !std::isfinite(table_->log_constraint_mass(horizon)))
      throw Error(ErrorCode::infeasible_size, "conditioning horizon " + std::to_string(horizon) + " is not feasible");
    target_ = *t;
    sum_.assign(c.dim, 0);
  }

  std::string tag() const override { return "conditioned_" + std::to_string(horizon_); }
  std::size_t alphabet() const override { return prior_mass_.size(); }
  std::unique_ptr<Predictor> clone() const override { return std::make_unique<ConditionedPriorPredictor>(*this); }
  std::int64_t horizon() const { return horizon_; }

  void next_masses(std::span<double> out) const override {
    const std::int64_t i = position();
    if (i >= horizon_ || dead_) {
      std::copy(prior_mass_.begin(), prior_mass_.end(), out.begin());
      return;
    }
    const std::int64_t r = horizon_ - i;
    std::vector<std::int64_t> need(c_->dim);
    for (std::size_t j = 0; j < c_->dim; ++j) need[j] = target_[j] - sum_[j];
    const double here = table_->log_mass(r, need).value_or(-std::numeric_limits<double>::infinity());
    double total = 0;
    for (std::size_t x = 0; x < out.size(); ++x) {
      for (std::size_t j = 0; j < c_->dim; ++j) need[j] = target_[j] - sum_[j] - c_->index[x][j];
      const double after = table_->log_mass(r - 1, need).value_or(-std::numeric_limits<double>::infinity());
      out[x] = std::isfinite(after) ? table_mass_[x] * std::exp(after - here) : 0.0;
      total += out[x];
    }
    if (total > 0)
      for (auto& v : out) v /= total;
  }

 protected:
  void update(std::size_t x) override {
    if (!std::isfinite(log2_prob())) dead_ = true;
    for (std::size_t j = 0; j < c_->dim; ++j) sum_[j] += c_->index[x][j];
  }

  void restart() override {
    std::fill(sum_.begin(), sum_.end(), 0);
    dead_ = false;
  }

 private:
  const ConstraintSpec* c_;
  std::vector<double> table_mass_;
  std::vector<double> prior_mass_;
  std::int64_t horizon_;
  std::shared_ptr<const SumTable> table_;
  std::vector<std::int64_t> target_;
  std::vector<std::int64_t> sum_;
  bool dead_ = false;
};

/// Bayes mixture: p(x^n) = sum_i w_i p_i(x^n), conditionals by posterior weighting.
class MixturePredictor final : public Predictor {
 public:
  MixturePredictor(std::string tag, std::vector<std::unique_ptr<Predictor>> components, std::vector<double> weights)
      : tag_(std::move(tag)), prior_weights_(std::move(weights)) {
    if (components.empty() || components.size() != prior_weights_.size())
      throw Error(ErrorCode::invalid_input, "mixture needs one weight per component");
    for (auto& c : components) components_.push_back(std::move(c));
    init_weights();
  }

  MixturePredictor(const MixturePredictor& o)
      : Predictor(o), tag_(o.tag_), prior_weights_(o.prior_weights_), log_post_(o.log_post_) {
    for (const auto& c : o.components_) components_.push_back(c->clone());
  }

  std::string tag() const override { return tag_; }
  std::size_t alphabet() const override { return components_.front()->alphabet(); }
  std::unique_ptr<Predictor> clone() const override { return std::make_unique<MixturePredictor>(*this); }
  std::size_t size() const { return components_.size(); }
  const Predictor& component(std::size_t i) const { return *components_[i]; }

  void next_masses(std::span<double> out) const override {
    std::fill(out.begin(), out.end(), 0.0);
    std::vector<double> m(out.size());
    double top = -std::numeric_limits<double>::infinity();
    for (double l : log_post_) top = std::max(top, l);
    if (!std::isfinite(top)) {
      components_.front()->next_masses(out);
      return;
    }
    double total = 0;
    for (std::size_t i = 0; i < components_.size(); ++i) {
      if (!std::isfinite(log_post_[i])) continue;
      const double w = std::exp(log_post_[i] - top);
      components_[i]->next_masses(m);
      for (std::size_t x = 0; x < out.size(); ++x) out[x] += w * m[x];
      total += w;
    }
    for (auto& v : out) v /= total;
  }

 protected:
  void update(std::size_t x) override {
    for (std::size_t i = 0; i < components_.size(); ++i) {
      const double m = components_[i]->observe(x);
      if (std::isfinite(log_post_[i])) log_post_[i] += m > 0 ? std::log(m) : -std::numeric_limits<double>::infinity();
    }
  }

  void restart() override {
    for (auto& c : components_) c->reset();
    init_weights();
  }

 private:
  void init_weights() {
    log_post_.clear();
    for (double w : prior_weights_) log_post_.push_back(w > 0 ? std::log(w) : -std::numeric_limits<double>::infinity());
  }

  std::string tag_;
  std::vector<double> prior_weights_;
  std::vector<std::unique_ptr<Predictor>> components_;
  std::vector<double> log_post_;
};

/// Restarts a fresh copy of the block predictor after every prefix that satisfies the constraint.
class RenewalPredictor final : public Predictor {
 public:
  RenewalPredictor(std::string tag, const ConstraintSpec& c, std::unique_ptr<Predictor> block)
      : tag_(std::move(tag)), c_(&c), prototype_(std::move(block)), current_(prototype_->clone()) {
    current_->reset();
    sum_.assign(c.dim, 0);
  }

  RenewalPredictor(const RenewalPredictor& o)
      : Predictor(o), tag_(o.tag_), c_(o.c_), prototype_(o.prototype_->clone()), current_(o.current_->clone()),
        sum_(o.sum_), hits_(o.hits_) {}

  std::string tag() const override { return tag_; }
  std::size_t alphabet() const override { return prototype_->alphabet(); }
  std::unique_ptr<Predictor> clone() const override { return std::make_unique<RenewalPredictor>(*this); }
  void next_masses(std::span<double> out) const override { current_->next_masses(out); }

  /// Hitting times s_1 < s_2 < ... observed so far (including the current position if it hit).
  const std::vector<std::int64_t>& hits() const { return hits_; }

 protected:
  void update(std::size_t x) override {
    current_->observe(x);
    for (std::size_t j = 0; j < c_->dim; ++j) sum_[j] += c_->index[x][j];
    auto t = c_->target_sum_index(position());
    if (t && *t == sum_) {
      hits_.push_back(position());
      current_ = prototype_->clone();
      current_->reset();
    }
  }

  void restart() override {
    current_ = prototype_->clone();
    current_->reset();
    std::fill(sum_.begin(), sum_.end(), 0);
    hits_.clear();
  }

 private:
  std::string tag_;
  const ConstraintSpec* c_;
  std::unique_ptr<Predictor> prototype_;
  std::unique_ptr<Predictor> current_;
  std::vector<std::int64_t> sum_;
  std::vector<std::int64_t> hits_;
};

inline std::unique_ptr<Predictor> renewal_compose(std::unique_ptr<Predictor> block, const ConstraintSpec& c) {
  const std::string tag = "renewal_" + block->tag();
  return std::make_unique<RenewalPredictor>(tag, c, std::move(block));
}

/// Shared backward tables for conditioned priors up to a horizon.
inline std::shared_ptr<const SumTable> conditioning_table(const ConstraintSpec& c, const MaxEntSolution& sol,
                                                         std::int64_t horizon,
                                                         std::uint64_t budget = kDefaultCellBudget) {
  return std::make_shared<SumTable>(SumTable::build(c, maxent_measure(sol), horizon, std::nullopt, budget));
}

inline std::unique_ptr<Predictor> conditioned_prior_predictor(const SampleSpace& space, const ConstraintSpec& c,
                                                              const MaxEntSolution& sol, std::int64_t n_j,
                                                              std::shared_ptr<const SumTable> table = nullptr) {
  if (!table) table = conditioning_table(c, sol, n_j);
  return std::make_unique<ConditionedPriorPredictor>(c, sol.pmf, space.prior_mass, n_j, std::move(table));
}

/// p' = sum_j pi(j) q_j over the first `components` feasible sizes, weights renormalized over them.
inline std::unique_ptr<MixturePredictor> mixture_predictor(const SampleSpace& space, const ConstraintSpec& c,
                                                           const MaxEntSolution& sol, const IntegerPrior& prior,
                                                           std::size_t components, std::int64_t search_limit = 1 << 20) {
  auto sizes = first_feasible_sizes(space, c, components, search_limit);
  auto weights = prior.normalized_head(sizes.size());
  auto table = conditioning_table(c, sol, sizes.back());
  std::vector<std::unique_ptr<Predictor>> parts;
  for (auto n_j : sizes) parts.push_back(conditioned_prior_predictor(space, c, sol, n_j, table));
  return std::make_unique<MixturePredictor>("mixture", std::move(parts), std::move(weights));
}

/// p_alpha = alpha * block + (1 - alpha) * p~.
inline std::unique_ptr<MixturePredictor> alpha_mixture(std::unique_ptr<Predictor> block, const MaxEntSolution& sol,
                                                       double alpha) {
  if (!(alpha > 0 && alpha < 1)) throw Error(ErrorCode::invalid_input, "alpha must lie in (0, 1)");
  std::vector<std::unique_ptr<Predictor>> parts;
  parts.push_back(std::move(block));
  parts.push_back(maxent_predictor(sol));
  return std::make_unique<MixturePredictor>("p_alpha", std::move(parts), std::vector<double>{alpha, 1 - alpha});
}

}  // namespace maxent_lab
