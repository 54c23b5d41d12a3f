#include "mildhjb/operator_b.hpp"

#include <cmath>

#include "mildhjb/error.hpp"

namespace mildhjb {

ScalarFunction ScalarFunction::constant(double c) {
  return {[c](double) { return c; }, [](double) { return 0.0; },
          [](double) { return 0.0; }, std::to_string(c)};
}

DriftData::DriftData(const Grid1D& grid, const ScalarFunction& f)
    : f_(Field::from_function(grid, f.value)),
      df_(Field::from_function(grid, f.d1)),
      d2f_(grid) {
  if (f.d2) {
    d2f_ = Field::from_function(grid, f.d2);
  } else {
    d2f_ = diff2(f_);
    d2f_[0] = d2f_[1];
    d2f_[grid.size() - 1] = d2f_[grid.size() - 2];
  }
  finish();
}

DriftData::DriftData(Field f, Field df, Field d2f)
    : f_(std::move(f)), df_(std::move(df)), d2f_(std::move(d2f)) {
  if (!(f_.grid() == df_.grid()) || !(f_.grid() == d2f_.grid())) {
    throw ConfigError("drift tables live on different grids");
  }
  finish();
}

DriftData DriftData::zero(const Grid1D& grid) {
  return DriftData(Field(grid), Field(grid), Field(grid));
}

void DriftData::finish() {
  for (const Field* t : {&f_, &df_, &d2f_}) {
    for (double v : t->values()) {
      if (!std::isfinite(v)) throw ConfigError("drift table is not finite");
    }
  }
  lambda0_ = df_.linf_norm();
  d2f_l1_ = d2f_.l1_norm();
  local_ = d2f_.linf_norm() == 0.0;
  green_ = measure_green_bounds(f_.grid());
}

double DriftData::bound() const {
  return d2f_l1_ * green_.gradient + 2.0 * lambda0_;
}

Field apply_B(const DriftData& drift, const Field& y) {
  Field out(y.grid());
  const Field dpsi =
      drift.local() ? Field(y.grid()) : poisson_gradient(y);
  for (std::size_t k = 0; k < y.size(); ++k) {
    out[k] = drift.d2f()[k] * dpsi[k] - 2.0 * drift.df()[k] * y[k];
  }
  return out;
}

}  // namespace mildhjb
