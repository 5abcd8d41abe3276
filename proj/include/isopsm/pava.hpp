#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <cstdio>
#include <utility>
#include <vector>

#include "isopsm/data.hpp"
#include "isopsm/errors.hpp"

namespace isopsm {

/// Monotone step-function propensity fit.  Blocks are maximal constant runs
/// in sorted order; block j covers sorted positions [block_ends[j],
/// block_ends[j+1]) and carries the mean of the treatment indicator over the
/// block.  Block values are strictly increasing.
struct StepPropensity {
  std::vector<Eigen::Index> block_ends;  // 0 = i_0 < i_1 < ... < i_k = n
  std::vector<double> block_values;      // strictly increasing, in [0, 1]
  Eigen::VectorXd fitted;                // per-unit fitted value, sorted order
  SortPermutation perm;                  // ordering that produced the fit

  Eigen::Index n() const { return fitted.size(); }
  std::size_t block_count() const { return block_values.size(); }
};

/// Pool-adjacent-violators fit of a binary sequence already in sorted order:
/// the unique minimizer of sum (d_i - p_i)^2 subject to p_1 <= ... <= p_n,
/// equivalently the monotone binomial MLE.  O(n) via a block stack; adjacent
/// blocks are merged on integer cross-products, so equal means pool exactly
/// and each fitted value is (treated count) / (block length).
inline StepPropensity pava_fit(const Eigen::VectorXi& d_sorted) {
  const Eigen::Index n = d_sorted.size();
  if (n < 1) throw EmptyInput("pava_fit needs at least one value");

  struct Block {
    std::int64_t count;  // treated units in the block
    std::int64_t len;
  };
  std::vector<Block> stack;
  stack.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const int di = d_sorted[i];
    if (di != 0 && di != 1)
      throw NonBinaryTreatment("pava_fit input must be 0/1");
    Block blk{di, 1};
    // merge while the previous mean is >= the new mean (exact in integers)
    while (!stack.empty() &&
           stack.back().count * blk.len >= blk.count * stack.back().len) {
      blk.count += stack.back().count;
      blk.len += stack.back().len;
      stack.pop_back();
    }
    stack.push_back(blk);
  }

  StepPropensity step;
  step.fitted.resize(n);
  step.block_ends.reserve(stack.size() + 1);
  step.block_values.reserve(stack.size());
  step.block_ends.push_back(0);
  Eigen::Index pos = 0;
  for (const Block& blk : stack) {
    const double value = static_cast<double>(blk.count) / static_cast<double>(blk.len);
    step.block_values.push_back(value);
    for (std::int64_t l = 0; l < blk.len; ++l) step.fitted[pos++] = value;
    step.block_ends.push_back(pos);
  }
  step.perm = identity_permutation(n);
  return step;
}

/// Sorts the sample by a scalar key and PAVA-fits the treatment indicator
/// along it; the permutation is kept so estimators can map units back.
inline StepPropensity fit_step_propensity(const ObservationSet& data,
                                          const Eigen::VectorXd& key) {
  if (key.size() != data.n())
    throw DimensionMismatch("key length must equal the unit count");
  SortPermutation perm = sort_by_key(key);
  Eigen::VectorXi d_sorted(data.n());
  for (Eigen::Index i = 0; i < data.n(); ++i)
    d_sorted[i] = data.d[perm.order[static_cast<std::size_t>(i)]];
  StepPropensity step = pava_fit(d_sorted);
  step.perm = std::move(perm);
  return step;
}

/// Fitted value at a sorted position.
inline double evaluate(const StepPropensity& step, Eigen::Index index_sorted) {
  if (index_sorted < 0 || index_sorted >= step.n())
    throw IndexOutOfRange("unit index out of range");
  return step.fitted[index_sorted];
}

/// Empirical mean of (D_i - pihat_i) h(pihat_i).  Residuals sum to zero
/// within each block, so the result is ~0 for any h.
template <class H>
double check_balance(const StepPropensity& step, const Eigen::VectorXi& d_sorted,
                     H&& h) {
  if (d_sorted.size() != step.n())
    throw DimensionMismatch("d length must match the fit");
  double acc = 0.0;
  for (std::size_t j = 0; j + 1 < step.block_ends.size(); ++j) {
    const double hv = h(step.block_values[j]);
    for (Eigen::Index i = step.block_ends[j]; i < step.block_ends[j + 1]; ++i)
      acc += (static_cast<double>(d_sorted[i]) - step.fitted[i]) * hv;
  }
  return acc / static_cast<double>(step.n());
}

/// Two-column export (sorted key, fitted value), one row per unit.
template <class Stream>
void write_step_function(Stream& out, const StepPropensity& step) {
  out << "key,fitted\n";
  char buf[64];
  for (Eigen::Index i = 0; i < step.n(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", step.perm.key[i], step.fitted[i]);
    out << buf;
  }
}

}  // namespace isopsm
