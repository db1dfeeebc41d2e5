#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "lcslab/common.hpp"

namespace lcslab {

struct FirstOrderResponse {
  double value = 0.0;
  Eigen::VectorXd gradient;
};

struct LogEntry {
  Eigen::VectorXd point;
  FirstOrderResponse response;
};

// Transcript of first-order queries. Entries are recorded eagerly in query
// order; once `cap` entries exist, recording stops but counting continues.
class QueryLog {
 public:
  explicit QueryLog(std::int64_t cap = 1'000'000) : cap_(cap) {}

  void record(const Eigen::VectorXd& point, const FirstOrderResponse& response) {
    if (static_cast<std::int64_t>(entries_.size()) < cap_) entries_.push_back({point, response});
    else dropped_ = true;
  }

  std::int64_t size() const { return static_cast<std::int64_t>(entries_.size()); }
  bool truncated() const { return dropped_; }
  const LogEntry& entry(std::int64_t i) const { return entries_.at(static_cast<std::size_t>(i)); }

 private:
  std::int64_t cap_;
  bool dropped_ = false;
  std::vector<LogEntry> entries_;
};

// Counting wrapper around a (value, gradient) evaluation. One query returns
// both; the count is the resource the experiments meter.
class FirstOrderOracle {
 public:
  using Fn = std::function<FirstOrderResponse(const Eigen::VectorXd&)>;
  using ValueFn = std::function<double(const Eigen::VectorXd&)>;

  FirstOrderOracle(Eigen::Index dim, Fn fn, std::int64_t log_cap = 1'000'000,
                   ValueFn value_fn = nullptr)
      : dim_(dim), fn_(std::move(fn)), value_fn_(std::move(value_fn)), log_(log_cap) {
    LCSLAB_REQUIRE(dim_ >= 1, "oracle dimension must be >= 1");
    LCSLAB_REQUIRE(static_cast<bool>(fn_), "oracle callable must be non-empty");
  }

  FirstOrderResponse query(const Eigen::VectorXd& x) {
    LCSLAB_REQUIRE(x.size() == dim_, "first-order query dimension mismatch");
    ++count_;
    FirstOrderResponse r = fn_(x);
    log_.record(x, r);
    return r;
  }

  // Value-only query. Costs one query like query() but skips the transcript
  // and, when the oracle provides a dedicated value path, the gradient
  // allocation; rejection loops issue billions of these.
  double query_value(const Eigen::VectorXd& x) {
    LCSLAB_REQUIRE(x.size() == dim_, "first-order query dimension mismatch");
    ++count_;
    if (value_fn_) return value_fn_(x);
    return fn_(x).value;
  }

  Eigen::Index dim() const { return dim_; }
  std::int64_t query_count() const { return count_; }
  const QueryLog& log() const { return log_; }

 private:
  Eigen::Index dim_;
  Fn fn_;
  ValueFn value_fn_;
  std::int64_t count_ = 0;
  QueryLog log_;
};

// Counting wrapper around v -> A v for a hidden symmetric matrix.
class MatVecOracle {
 public:
  using Fn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

  MatVecOracle(Eigen::Index dim, Fn fn) : dim_(dim), fn_(std::move(fn)) {
    LCSLAB_REQUIRE(dim_ >= 1, "oracle dimension must be >= 1");
    LCSLAB_REQUIRE(static_cast<bool>(fn_), "oracle callable must be non-empty");
  }

  Eigen::VectorXd apply(const Eigen::VectorXd& v) {
    LCSLAB_REQUIRE(v.size() == dim_, "mat-vec query dimension mismatch");
    ++count_;
    Eigen::VectorXd out = fn_(v);
    LCSLAB_CHECK_NUMERIC(out.size() == dim_, "mat-vec response dimension mismatch");
    return out;
  }

  Eigen::Index dim() const { return dim_; }
  std::int64_t query_count() const { return count_; }

 private:
  Eigen::Index dim_;
  Fn fn_;
  std::int64_t count_ = 0;
};

// Potential x -> x' A x / 2 with gradient A x. The matrix must be symmetric;
// positive definiteness is the caller's contract.
inline FirstOrderOracle make_quadratic_oracle(const Eigen::MatrixXd& a,
                                              std::int64_t log_cap = 1'000'000) {
  LCSLAB_REQUIRE(a.rows() == a.cols() && a.rows() >= 1, "quadratic oracle needs a square matrix");
  const double scale = a.cwiseAbs().maxCoeff();
  const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  LCSLAB_REQUIRE(asym <= 1e-10 * std::max(1.0, scale), "quadratic oracle matrix is not symmetric");
  Eigen::MatrixXd m = 0.5 * (a + a.transpose());
  const Eigen::Index d = m.rows();
  // The value path reuses one workspace vector so hot loops stay allocation
  // free after the first call.
  auto value_only = [m, w = Eigen::VectorXd(d)](const Eigen::VectorXd& x) mutable {
    w.noalias() = m * x;
    return 0.5 * x.dot(w);
  };
  return FirstOrderOracle(
      d,
      [m](const Eigen::VectorXd& x) {
        FirstOrderResponse r;
        r.gradient = m * x;
        r.value = 0.5 * x.dot(r.gradient);
        return r;
      },
      log_cap, std::move(value_only));
}

inline MatVecOracle make_matvec_oracle(Eigen::MatrixXd a) {
  LCSLAB_REQUIRE(a.rows() == a.cols() && a.rows() >= 1, "mat-vec oracle needs a square matrix");
  const Eigen::Index d = a.rows();
  return MatVecOracle(d, [m = std::move(a)](const Eigen::VectorXd& v) { return m * v; });
}

// Index pair (i, j) naming the response A^i v_j of an extended transcript.
struct IndexPair {
  int power = 0;  // i
  int seed = 0;   // j
  friend bool operator==(const IndexPair&, const IndexPair&) = default;
};

// Pairs {(i, j) : i + j <= k + 1, i >= 0, 1 <= j <= k}, sorted by i + j with
// ties broken by smaller j. This is the data available after k query rounds.
inline std::vector<IndexPair> extended_index_set(int k) {
  LCSLAB_REQUIRE(k >= 1 && k <= 64, "extended index set: k in [1, 64]");
  std::vector<IndexPair> out;
  for (int total = 1; total <= k + 1; ++total)
    for (int j = 1; j <= k && j <= total; ++j) {
      const int i = total - j;
      if (i >= 0) out.push_back({i, j});
    }
  return out;
}

// First m entries of the infinite enumeration v_1, A v_1, v_2, A^2 v_1,
// A v_2, v_3, ... (all pairs i >= 0, j >= 1 ordered by i + j, then by j).
inline std::vector<IndexPair> enumeration_order(int m) {
  LCSLAB_REQUIRE(m >= 1, "enumeration order: m >= 1");
  std::vector<IndexPair> out;
  out.reserve(static_cast<std::size_t>(m));
  for (int total = 1; static_cast<int>(out.size()) < m; ++total)
    for (int j = 1; j <= total && static_cast<int>(out.size()) < m; ++j)
      out.push_back({total - j, j});
  return out;
}

}  // namespace lcslab
