#include "rlab/curriculum.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "rlab/errors.hpp"

namespace rlab {

namespace {

void check_params(double tau, double e) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw DomainError("weight transform: tau must be > 0");
  if (!(e > 0.0) || !std::isfinite(e))
    throw DomainError("weight transform: |E[delta]| must be > 0");
}

}  // namespace

std::string transform_kind_name(TransformKind k) {
  switch (k) {
    case TransformKind::Shift:
      return "shift";
    case TransformKind::Scale:
      return "scale";
    default:
      return "identity";
  }
}

WeightTransform WeightTransform::shift(double tau, double e) {
  check_params(tau, e);
  return {TransformKind::Shift, tau, e};
}

WeightTransform WeightTransform::scale(double tau, double e) {
  check_params(tau, e);
  return {TransformKind::Scale, tau, e};
}

WeightTransform WeightTransform::parse(const std::string& text, double e) {
  if (text.empty() || text == "identity") return identity();
  const auto colon = text.find(':');
  if (colon == std::string::npos)
    throw DomainError("transform '" + text + "': expected identity, shift:TAU or scale:TAU");
  const std::string kind = text.substr(0, colon);
  const std::string num = text.substr(colon + 1);
  double tau = 0.0;
  const auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), tau);
  if (ec != std::errc() || ptr != num.data() + num.size())
    throw DomainError("transform '" + text + "': bad tau");
  if (kind == "shift") return shift(tau, e);
  if (kind == "scale") return scale(tau, e);
  throw DomainError("transform '" + text + "': unknown kind '" + kind + "'");
}

double WeightTransform::apply(double delta) const {
  switch (kind_) {
    case TransformKind::Scale:
      return delta / expected_ * tau_;
    case TransformKind::Shift:
      return delta + expected_ - tau_;
    default:
      return delta;
  }
}

std::string WeightTransform::describe() const {
  if (is_identity()) return "identity";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s:%g", transform_kind_name(kind_).c_str(), tau_);
  return buf;
}

double transformed_weight(const LossSpec& loss, const WeightTransform& t, double delta) {
  return weight_at(loss, t.apply(delta));
}

double normalized_weight(const LossSpec& loss, const WeightTransform& t, double delta) {
  return transformed_weight(loss, t, delta) * normalize_to_unit_max(loss).scale;
}

WeightCurve sample_curve(const LossSpec& loss, const WeightTransform& t, double lo, double hi,
                         std::size_t n) {
  if (!(lo < hi)) throw DomainError("sample_curve: need lo < hi");
  if (n < 2) throw DomainError("sample_curve: need n >= 2");
  WeightCurve c;
  c.deltas.resize(n);
  c.weights.resize(n);
  const double step = (hi - lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    c.deltas[i] = (i + 1 == n) ? hi : lo + step * static_cast<double>(i);
    c.weights[i] = transformed_weight(loss, t, c.deltas[i]);
  }
  const double peak = *std::max_element(c.weights.begin(), c.weights.end());
  if (peak > 0.0)
    for (double& w : c.weights) w /= peak;
  return c;
}

void write_curve_csv(std::ostream& os, const WeightCurve& c) {
  os << "delta,weight\n";
  char buf[64];
  for (std::size_t i = 0; i < c.deltas.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", c.deltas[i], c.weights[i]);
    os << buf;
  }
}

}  // namespace rlab
