#pragma once

#include <string>

#include "gridfreq/dynamics.hpp"
#include "gridfreq/errors.hpp"

namespace gridfreq {

/// Squared H2 norm of the frequency output, or a certificate that it is
/// infinite (nonzero high-frequency gain).
struct H2Result {
  enum class Kind { Finite, Infinite };
  Kind kind = Kind::Finite;
  double value = 0.0;             // squared norm, (rad/s)^2; finite case
  double feedthrough_gain = 0.0;  // sigma_max of lim_{s->inf} G(s); infinite case
  double gain_at_1mhz = 0.0;      // sigma_max G(i 2 pi 1e6), numerical cross-check
  std::string method;             // "gramian" or "frequency-weighted"

  bool finite() const { return kind == Kind::Finite; }
  static H2Result make_finite(double value, std::string method);
  static H2Result make_infinite(double gain, double gain_check);
};

/// Settings for the spectral integral. The grid is log-spaced with
/// `points_per_decade` Simpson intervals per decade over
/// [10^first_decade, 10^last_decade] rad/s, then grown a decade at a time on
/// either end until the end decade contributes below `tail_tolerance` of the
/// running total.
struct QuadratureOptions {
  int points_per_decade = 2000;
  int first_decade = -4;
  int last_decade = 4;
  double tail_tolerance = 1e-6;
  int max_extra_decades = 12;
  double feedthrough_threshold = 1e-9;
};

class QuadratureError : public NumericalError {
 public:
  QuadratureError(const std::string& what, double partial, double tail)
      : NumericalError(what), partial_value(partial), tail_bound(tail) {}
  double partial_value;
  double tail_bound;
};

/// tr(B^T X B) with X the observability Gramian on the rotation-free
/// subspace. Refuses models with derivative noise.
H2Result h2_gramian(const StateSpaceModel& model);

/// Norm with w3 = d/dt w2 folded in: G(s) = C (sI - A)^-1 [B1 | B2 + s B3].
/// Infinite when the limiting gain sigma_max(C B3) exceeds the threshold;
/// otherwise (1/2pi) * integral over all real frequencies of ||G||_F^2.
H2Result h2_frequency_weighted(const StateSpaceModel& model,
                               const QuadratureOptions& options = {});

/// Gramian when there is no derivative noise, frequency-weighted otherwise.
H2Result h2_norm(const StateSpaceModel& model, const QuadratureOptions& options = {});

enum class ClosedFormKind { Droop, Swing };

struct HomogeneousParams {
  int n = 1;
  double m = 1.0;
  double d = 0.0;
  double r_g = 1.0;
  double r_r = 1.0;  // ignored for Swing
  double k1 = 0.0;
  double k2 = 0.0;   // ignored for Swing
};

/// Droop:  n (k1^2 + (k2/r_r)^2) / (2 m (d + 1/r_g + 1/r_r))
/// Swing:  n k1^2 / (2 m (d + 1/r_g))
double h2_closed_form(ClosedFormKind kind, const HomogeneousParams& p);

/// sigma_max of C (i w I - A)^-1 [B1 | B2 + i w B3] evaluated directly.
double gain_at_frequency(const StateSpaceModel& model, double omega);

}  // namespace gridfreq
