#pragma once

// Classification losses written against the class-score margin.
//
// Standard-form families are functions of p_y alone, so their score gradient
// factorizes as  grad L = -w(delta_y) * grad delta_y  with a nonnegative
// sample weight w. The regularized families (NCE, NCE_MAE, MSE, CE_GLS) also
// depend on p_i for i != y; they carry exact gradients but no weight.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rlab {

enum class LossFamily {
  CE,
  FL,
  MAE,
  RCE,  // evaluated as MAE
  NCE,
  AUL,
  AGCE,
  AEL,
  GCE,
  SCE,
  TCE,
  MSE,
  CE_GLS,
  NCE_MAE,
};

std::string_view family_name(LossFamily f);
/// Inverse of family_name; accepts "NCE+MAE" and "CE+GLS" spellings too.
std::optional<LossFamily> parse_family(std::string_view name);

/// True for families whose loss is l(p_y) and hence has a weight function.
bool is_standard_form(LossFamily f);

/// Truncation constant for log 0 in reverse cross entropy.
inline constexpr double kRceTruncation = -4.0;

struct LossParams {
  std::optional<double> a;
  std::optional<double> q;
  std::optional<double> mix;
  std::optional<double> alpha_reg;

  friend bool operator==(const LossParams&, const LossParams&) = default;
};

/// A loss family plus validated hyperparameters. Immutable once built.
class LossSpec {
 public:
  /// Throws ConstructionError when a required parameter is missing, an
  /// irrelevant one is given, or a constraint is violated:
  ///   FL q>0 | AUL a>1, q>0 | AGCE a>0, q>0 | AEL q>0 | GCE 0<q<=1
  ///   SCE, NCE_MAE 0<mix<1 | TCE integer q>=1 | CE_GLS alpha_reg finite
  ///   MSE alpha_reg finite (defaults to 0.5)
  static LossSpec make(LossFamily family, const LossParams& params = {});

  static LossSpec ce() { return make(LossFamily::CE); }
  static LossSpec mae() { return make(LossFamily::MAE); }

  LossFamily family() const { return family_; }
  const LossParams& params() const { return params_; }
  bool standard_form() const { return is_standard_form(family_); }

  double a() const { return params_.a.value_or(0.0); }
  double q() const { return params_.q.value_or(0.0); }
  double mix() const { return params_.mix.value_or(0.0); }
  double alpha_reg() const { return params_.alpha_reg.value_or(0.0); }

  std::string describe() const;

  friend bool operator==(const LossSpec&, const LossSpec&) = default;

 private:
  LossSpec(LossFamily f, LossParams p) : family_(f), params_(p) {}
  LossFamily family_;
  LossParams params_;
};

struct LossEval {
  double value = 0.0;
  std::vector<double> grad;        // d L / d s
  std::optional<double> weight;    // |w(delta_y)|, absent for regularized families
  double margin = 0.0;             // delta_y
};

LossEval eval(const LossSpec& loss, std::span<const double> s, std::size_t y);

/// Loss value only (same formulas as eval, no gradient work).
double loss_value(const LossSpec& loss, std::span<const double> s, std::size_t y);

/// w evaluated at p_y = sigmoid(delta). Throws UnsupportedFamily for
/// regularized families.
double weight_at(const LossSpec& loss, double delta);

struct UnitMax {
  double scale = 1.0;       // 1 / max w
  double peak_delta = 0.0;  // argmax (lower search bound when the sup is at -inf)
};

inline constexpr double kWeightSearchLo = -30.0;
inline constexpr double kWeightSearchHi = 30.0;

/// Scale that brings max_delta w(delta) to one. MAE and CE are closed form;
/// other families use a grid scan refined by golden-section search.
UnitMax normalize_to_unit_max(const LossSpec& loss);

struct NceDecomposition {
  double gamma = 0.0;          // 1 / sum_i -log p_i
  double epsilon = 0.0;        // k (-log p_y) / sum_i -log p_i
  double reg_value = 0.0;      // (1/k) sum_i log p_i
  double primary_value = 0.0;  // -log p_y
  double grad_bound = 0.0;     // 2 gamma (1 + epsilon) w_CE
};

/// NCE as  gamma * CE + gamma * epsilon * R  with frozen gamma, epsilon.
/// With `verify`, checks grad NCE == gamma (grad CE + epsilon grad R) to 1e-8
/// and throws std::logic_error on mismatch.
NceDecomposition decompose_nce(std::span<const double> s, std::size_t y, bool verify = false);

/// Gradient of R(s) = (1/k) sum_i log p_i.
std::vector<double> nce_regularizer_grad(std::span<const double> s);

struct RobustnessReport {
  bool symmetric = false;
  double symmetric_constant = 0.0;  // mean of sum_i L(s, i) over probes
  double residual = 0.0;            // max |sum_i L(s, i) - mean|
};

inline constexpr double kSymmetryTolerance = 1e-8;

/// Probes sum_i L(s, i) at `probes` random score vectors (entries N(0, 3^2)).
/// Throws DomainError when probes < 10 or k < 2.
RobustnessReport check_symmetry(const LossSpec& loss, std::size_t k, std::size_t probes,
                                std::uint64_t seed);

/// Largest noise ratio r~ for which an asymmetric family satisfies its
/// condition. Throws UnsupportedFamily for anything but AGCE, AUL, AEL.
double asymmetry_threshold(const LossSpec& loss);

}  // namespace rlab
