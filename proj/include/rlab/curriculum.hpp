#pragma once

// Shift / scale reparameterizations of the sample-weighting argument that
// undo the class-count driven shrinkage of the initial margin:
//   scale:  w*(d) = w(d / |E| * tau)
//   shift:  w+(d) = w(d + |E| - tau)

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "rlab/loss.hpp"

namespace rlab {

enum class TransformKind { Identity, Shift, Scale };

class WeightTransform {
 public:
  WeightTransform() = default;

  static WeightTransform identity() { return {}; }
  /// Throws DomainError unless tau > 0 and expected_margin_abs > 0.
  static WeightTransform shift(double tau, double expected_margin_abs);
  static WeightTransform scale(double tau, double expected_margin_abs);

  /// Parses "identity", "shift:TAU" or "scale:TAU"; |E| supplied separately.
  static WeightTransform parse(const std::string& text, double expected_margin_abs);

  TransformKind kind() const { return kind_; }
  double tau() const { return tau_; }
  double expected_margin_abs() const { return expected_; }
  bool is_identity() const { return kind_ == TransformKind::Identity; }

  double apply(double delta) const;

  std::string describe() const;

  friend bool operator==(const WeightTransform&, const WeightTransform&) = default;

 private:
  WeightTransform(TransformKind k, double tau, double e) : kind_(k), tau_(tau), expected_(e) {}
  TransformKind kind_ = TransformKind::Identity;
  double tau_ = 1.0;
  double expected_ = 1.0;
};

std::string transform_kind_name(TransformKind k);

inline double transform_margin(const WeightTransform& t, double delta) { return t.apply(delta); }

/// weight_at(loss, t.apply(delta)); raw, not normalized.
double transformed_weight(const LossSpec& loss, const WeightTransform& t, double delta);

/// transformed_weight scaled by the raw weight's unit-max factor. Shift and
/// scale only reparameterize the argument, so the maximum is unchanged.
double normalized_weight(const LossSpec& loss, const WeightTransform& t, double delta);

struct WeightCurve {
  std::vector<double> deltas;
  std::vector<double> weights;  // normalized to unit max over the grid
};

/// Uniform grid of n points on [lo, hi]. Throws DomainError unless lo < hi, n >= 2.
WeightCurve sample_curve(const LossSpec& loss, const WeightTransform& t, double lo, double hi,
                         std::size_t n);

/// Two-column CSV with header "delta,weight".
void write_curve_csv(std::ostream& os, const WeightCurve& c);

}  // namespace rlab
