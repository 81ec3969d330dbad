#pragma once

// Position-based-model examination functions v(x): the probability a user
// attends to rank x. Evaluable at real x >= 1 because the welfare lower bound
// applies v to 1 + an expected competitor count.

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace matchmarket {

enum class ExaminationKind { inv, log, exp, table };

template <typename Scalar>
class Examination {
 public:
  // v(x) = 1/x.
  static Examination inv() { return Examination(ExaminationKind::inv); }
  // v(x) = 1/log2(x+1). Base 2 so that v(1) = 1 (the DCG convention); the
  // base is a documented project decision, not implied by the formula name.
  static Examination log() { return Examination(ExaminationKind::log); }
  // v(x) = exp(1-x).
  static Examination exp() { return Examination(ExaminationKind::exp); }
  // Tabulated v at integer ranks 1..len, linearly interpolated in between,
  // zero beyond the table. Entries must be probabilities, non-increasing.
  static Examination table(std::vector<Scalar> values) {
    if (values.empty())
      throw std::invalid_argument("examination table must be non-empty");
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (values[i] < Scalar(0) || values[i] > Scalar(1))
        throw std::invalid_argument("examination table entries must lie in [0,1]");
      if (i > 0 && values[i] > values[i - 1])
        throw std::invalid_argument("examination table must be non-increasing");
    }
    Examination e(ExaminationKind::table);
    e.table_ = std::move(values);
    return e;
  }

  static Examination from_name(const std::string& name) {
    if (name == "inv") return inv();
    if (name == "log") return log();
    if (name == "exp") return exp();
    throw std::invalid_argument("unknown examination kind '" + name +
                                "' (expected inv, log or exp)");
  }

  ExaminationKind kind() const { return kind_; }

  std::string name() const {
    switch (kind_) {
      case ExaminationKind::inv: return "inv";
      case ExaminationKind::log: return "log";
      case ExaminationKind::exp: return "exp";
      case ExaminationKind::table: return "table";
    }
    return "?";
  }

  const std::vector<Scalar>& table_values() const { return table_; }

  Scalar value(Scalar x) const {
    if (!(x >= Scalar(1)))
      throw std::domain_error("examination function requires x >= 1, got " +
                              std::to_string(static_cast<double>(x)));
    switch (kind_) {
      case ExaminationKind::inv:
        return Scalar(1) / x;
      case ExaminationKind::log:
        return Scalar(1) / std::log2(x + Scalar(1));
      case ExaminationKind::exp:
        return std::exp(Scalar(1) - x);
      case ExaminationKind::table: {
        const auto len = static_cast<Scalar>(table_.size());
        if (x > len) return Scalar(0);
        const Scalar fl = std::floor(x);
        const auto lo = static_cast<std::size_t>(fl) - 1;
        if (fl == x) return table_[lo];
        const Scalar frac = x - fl;
        return table_[lo] + frac * (table_[lo + 1] - table_[lo]);
      }
    }
    throw std::logic_error("unreachable examination kind");
  }

  // dv/dx. Defined for the closed-form kinds only.
  Scalar derivative(Scalar x) const {
    if (!(x >= Scalar(1)))
      throw std::domain_error("examination function requires x >= 1, got " +
                              std::to_string(static_cast<double>(x)));
    switch (kind_) {
      case ExaminationKind::inv:
        return Scalar(-1) / (x * x);
      case ExaminationKind::log: {
        const Scalar ln2 = std::log(Scalar(2));
        const Scalar lx = std::log(x + Scalar(1));
        return -ln2 / ((x + Scalar(1)) * lx * lx);
      }
      case ExaminationKind::exp:
        return -std::exp(Scalar(1) - x);
      case ExaminationKind::table:
        throw std::invalid_argument(
            "table examination has no derivative; use a closed-form kind");
    }
    throw std::logic_error("unreachable examination kind");
  }

 private:
  explicit Examination(ExaminationKind kind) : kind_(kind) {}

  ExaminationKind kind_;
  std::vector<Scalar> table_;
};

}  // namespace matchmarket
