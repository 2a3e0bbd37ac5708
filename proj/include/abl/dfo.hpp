#pragma once

// Randomized sampling-and-classification optimizer over sparsity-constrained
// binary vectors, plus a uniform random-search baseline. The optimizer keeps
// a small positive set of the best evaluated points; new proposals copy a
// positive point on a frozen coordinate pattern grown until every negative
// sample disagrees with it, and sample the rest uniformly.

#include <cstdint>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "abl/rng.hpp"

namespace abl::dfo {

using BinaryVector = std::vector<std::uint8_t>;

struct InfeasibleConstraint : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConstraintViolation : std::logic_error {
  using std::logic_error::logic_error;
};

// Per-block cardinality cap: every block of the partition may carry at most
// k one-bits.
struct SparsityConstraint {
  int k = 2;
  std::vector<std::pair<std::size_t, std::size_t>> blocks;  // [lo, hi)

  static SparsityConstraint single_block(std::size_t dim, int k) {
    SparsityConstraint c;
    c.k = k;
    c.blocks = {{0, dim}};
    c.validate(dim);
    return c;
  }

  void validate(std::size_t dim) const {
    if (k < 2) throw std::invalid_argument("sparsity cap k must be >= 2");
    if (blocks.empty()) throw std::invalid_argument("constraint needs at least one block");
    std::size_t expect = 0;
    for (const auto& [lo, hi] : blocks) {
      if (lo != expect || hi <= lo) throw std::invalid_argument("blocks must partition [0, dim)");
      expect = hi;
    }
    if (expect != dim) throw std::invalid_argument("blocks must cover [0, dim)");
  }

  bool feasible(const BinaryVector& v) const {
    for (const auto& [lo, hi] : blocks) {
      int ones = 0;
      for (std::size_t i = lo; i < hi; ++i) ones += v[i];
      if (ones > k) return false;
    }
    return true;
  }

  // uniform sample from the feasible set (block-wise rejection; blocks are
  // independent, so the joint draw is uniform as well)
  BinaryVector sample(std::size_t dim, Rng& rng) const {
    BinaryVector v(dim, 0);
    for (const auto& [lo, hi] : blocks) {
      while (true) {
        int ones = 0;
        for (std::size_t i = lo; i < hi; ++i) {
          v[i] = rng.coin() ? 1 : 0;
          ones += v[i];
        }
        if (ones <= k) break;
      }
    }
    return v;
  }

  // clear uniformly chosen excess one-bits per block
  void repair(BinaryVector& v, Rng& rng) const {
    for (const auto& [lo, hi] : blocks) {
      std::vector<std::size_t> ones;
      for (std::size_t i = lo; i < hi; ++i)
        if (v[i]) ones.push_back(i);
      while (static_cast<int>(ones.size()) > k) {
        const std::size_t pick = rng.below(ones.size());
        v[ones[pick]] = 0;
        ones.erase(ones.begin() + static_cast<long>(pick));
      }
    }
  }
};

struct DfoConfig {
  std::size_t budget = 64;
  std::size_t positive_set_size = 2;
  double lambda = 0.1;  // probability of a uniform exploration sample
  std::uint64_t seed = 0;

  void validate() const {
    if (positive_set_size < 1) throw std::invalid_argument("positive_set_size must be >= 1");
    if (budget < positive_set_size + 1)
      throw std::invalid_argument("budget must be >= positive_set_size + 1");
    if (lambda < 0.0 || lambda > 1.0) throw std::invalid_argument("lambda must lie in [0,1]");
  }
};

struct Evaluation {
  std::size_t index;
  double value;
  BinaryVector point;
};

struct OptimizeResult {
  BinaryVector best;
  double best_value = 0.0;
  std::vector<Evaluation> trace;
};

using Objective = std::function<double(const BinaryVector&)>;

namespace detail {

class Archive {
 public:
  Archive(const Objective& f, const SparsityConstraint& c, std::size_t positive_size)
      : f_(f), c_(c), positive_size_(positive_size) {}

  double evaluate(const BinaryVector& v) {
    if (!c_.feasible(v)) throw ConstraintViolation("optimizer produced an infeasible point");
    const double value = f_(v);
    trace_.push_back({trace_.size(), value, v});
    // positive set: indices of the top entries by (value desc, index asc)
    positives_.push_back(trace_.size() - 1);
    for (std::size_t i = positives_.size(); i > 1; --i) {
      const Evaluation& a = trace_[positives_[i - 1]];
      const Evaluation& b = trace_[positives_[i - 2]];
      if (a.value > b.value) std::swap(positives_[i - 1], positives_[i - 2]);
    }
    if (positives_.size() > positive_size_) positives_.resize(positive_size_);
    return value;
  }

  const std::vector<Evaluation>& trace() const { return trace_; }
  const std::vector<std::size_t>& positives() const { return positives_; }

  bool is_positive(std::size_t idx) const {
    for (std::size_t p : positives_)
      if (p == idx) return true;
    return false;
  }

  const Evaluation& incumbent() const {
    const Evaluation* best = &trace_.front();
    for (const auto& e : trace_)
      if (e.value > best->value) best = &e;
    return *best;
  }

 private:
  const Objective& f_;
  const SparsityConstraint& c_;
  std::size_t positive_size_;
  std::vector<Evaluation> trace_;
  std::vector<std::size_t> positives_;
};

}  // namespace detail

inline OptimizeResult optimize(const Objective& objective, std::size_t dim,
                               const SparsityConstraint& constraint, const DfoConfig& cfg) {
  cfg.validate();
  constraint.validate(dim);
  if (dim < 1) throw std::invalid_argument("dimension must be >= 1");

  Rng rng(cfg.seed);
  detail::Archive archive(objective, constraint, cfg.positive_set_size);

  const std::size_t init = std::min(cfg.budget, cfg.positive_set_size + 1);
  for (std::size_t i = 0; i < init; ++i) archive.evaluate(constraint.sample(dim, rng));

  while (archive.trace().size() < cfg.budget) {
    BinaryVector x;
    if (rng.uniform() < cfg.lambda) {
      x = constraint.sample(dim, rng);
    } else {
      const auto& pos = archive.positives();
      const Evaluation& anchor = archive.trace()[pos[rng.below(pos.size())]];

      // grow a random frozen coordinate pattern until every negative sample
      // disagrees with it somewhere
      std::vector<std::size_t> order(dim);
      for (std::size_t i = 0; i < dim; ++i) order[i] = i;
      rng.shuffle(order);
      std::vector<std::uint8_t> frozen(dim, 0);
      std::size_t next = 0;
      auto some_negative_agrees = [&]() {
        for (const auto& e : archive.trace()) {
          if (archive.is_positive(e.index)) continue;
          bool agrees = true;
          for (std::size_t d = 0; d < dim && agrees; ++d)
            if (frozen[d] && e.point[d] != anchor.point[d]) agrees = false;
          if (agrees) return true;
        }
        return false;
      };
      while (next < dim && some_negative_agrees()) frozen[order[next++]] = 1;

      x.assign(dim, 0);
      for (std::size_t d = 0; d < dim; ++d)
        x[d] = frozen[d] ? anchor.point[d] : (rng.coin() ? 1 : 0);
      constraint.repair(x, rng);
    }
    archive.evaluate(x);
  }

  OptimizeResult out;
  const auto& inc = archive.incumbent();
  out.best = inc.point;
  out.best_value = inc.value;
  out.trace = archive.trace();
  return out;
}

inline OptimizeResult random_search(const Objective& objective, std::size_t dim,
                                    const SparsityConstraint& constraint, std::size_t budget,
                                    std::uint64_t seed) {
  constraint.validate(dim);
  if (budget < 1) throw std::invalid_argument("budget must be >= 1");
  Rng rng(seed);
  OptimizeResult out;
  for (std::size_t i = 0; i < budget; ++i) {
    BinaryVector v = constraint.sample(dim, rng);
    if (!constraint.feasible(v)) throw ConstraintViolation("sampler produced an infeasible point");
    const double value = objective(v);
    out.trace.push_back({i, value, v});
    if (i == 0 || value > out.best_value) {
      out.best = v;
      out.best_value = value;
    }
  }
  return out;
}

// eval_index,value,bits-as-hex (bits packed most-significant-first, four per
// hex digit, zero-padded at the tail)
inline void write_trace_csv(const std::vector<Evaluation>& trace, std::ostream& os) {
  os << "eval_index,value,bits_hex\n";
  for (const auto& e : trace) {
    os << e.index << ',' << e.value << ',';
    for (std::size_t i = 0; i < e.point.size(); i += 4) {
      int nibble = 0;
      for (std::size_t j = 0; j < 4; ++j)
        nibble = (nibble << 1) | (i + j < e.point.size() ? e.point[i + j] : 0);
      os << "0123456789abcdef"[nibble];
    }
    os << '\n';
  }
}

}  // namespace abl::dfo
