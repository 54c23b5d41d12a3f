#pragma once

#include "mildhjb/grid.hpp"
#include "mildhjb/problem.hpp"

namespace mildhjb {

/// Drift f and its derivatives tabulated on a grid, with the norms the
/// bounded perturbation B needs.
class DriftData {
 public:
  DriftData(const Grid1D& grid, const ScalarFunction& f);
  /// Tables supplied directly (f'' by central differences of f when empty).
  DriftData(Field f, Field df, Field d2f);

  static DriftData zero(const Grid1D& grid);

  const Grid1D& grid() const { return f_.grid(); }
  const Field& f() const { return f_; }
  const Field& df() const { return df_; }
  const Field& d2f() const { return d2f_; }

  /// ||f'||_inf, the accretivity shift lambda_0.
  double lambda0() const { return lambda0_; }
  /// ||f''||_1
  double d2f_l1() const { return d2f_l1_; }
  const GreenBounds& green() const { return green_; }
  /// C = ||f''||_1 C_Phi + 2 ||f'||_inf with ||B y||_1 <= C ||y||_1.
  double bound() const;
  /// True when f'' vanishes on the grid, i.e. B is local.
  bool local() const { return local_; }

 private:
  void finish();

  Field f_, df_, d2f_;
  double lambda0_ = 0.0;
  double d2f_l1_ = 0.0;
  GreenBounds green_{};
  bool local_ = true;
};

/// B y = f'' (Phi(y))' - 2 f' y, nodewise.
///
/// Phi solves -Psi'' = y.  The value function is phi = Phi(y) (so that
/// phi_xx = -y), which fixes the sign of the nonlocal term.
Field apply_B(const DriftData& drift, const Field& y);

}  // namespace mildhjb
