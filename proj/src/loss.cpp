#include "rlab/loss.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "rlab/errors.hpp"
#include "rlab/margin.hpp"

namespace rlab {

namespace {

struct FamilyName {
  LossFamily family;
  std::string_view name;
};

constexpr std::array<FamilyName, 14> kFamilyNames{{
    {LossFamily::CE, "CE"},
    {LossFamily::FL, "FL"},
    {LossFamily::MAE, "MAE"},
    {LossFamily::RCE, "RCE"},
    {LossFamily::NCE, "NCE"},
    {LossFamily::AUL, "AUL"},
    {LossFamily::AGCE, "AGCE"},
    {LossFamily::AEL, "AEL"},
    {LossFamily::GCE, "GCE"},
    {LossFamily::SCE, "SCE"},
    {LossFamily::TCE, "TCE"},
    {LossFamily::MSE, "MSE"},
    {LossFamily::CE_GLS, "CE_GLS"},
    {LossFamily::NCE_MAE, "NCE_MAE"},
}};

// p_y and 1 - p_y from the margin, each computed without cancellation.
struct LabelProb {
  double p;
  double pc;
  double log_p;
};

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

LabelProb label_prob(double delta) { return {sigmoid(delta), sigmoid(-delta), -softplus(-delta)}; }

double standard_value(const LossSpec& l, const LabelProb& lp) {
  const double p = lp.p, pc = lp.pc;
  switch (l.family()) {
    case LossFamily::CE:
      return -lp.log_p;
    case LossFamily::FL:
      return -std::pow(pc, l.q()) * lp.log_p;
    case LossFamily::MAE:
    case LossFamily::RCE:
      return pc;
    case LossFamily::AUL:
      return (std::pow(l.a() - p, l.q()) - std::pow(l.a() - 1.0, l.q())) / l.q();
    case LossFamily::AGCE:
      return ((l.a() + 1.0) - std::pow(l.a() + p, l.q())) / l.q();
    case LossFamily::AEL:
      return std::exp(-p / l.q());
    case LossFamily::GCE:
      // (1 - p^q) / q without cancellation for small q
      return -std::expm1(l.q() * lp.log_p) / l.q();
    case LossFamily::SCE:
      return (1.0 - l.mix()) * (-lp.log_p) + l.mix() * pc;
    case LossFamily::TCE: {
      double acc = 0.0, term = 1.0;
      const int n = static_cast<int>(l.q());
      for (int i = 1; i <= n; ++i) {
        term *= pc;
        acc += term / i;
      }
      return acc;
    }
    default:
      throw UnsupportedFamily(std::string(family_name(l.family())) + " is not a standard-form loss");
  }
}

double standard_weight(const LossSpec& l, const LabelProb& lp) {
  const double p = lp.p, pc = lp.pc;
  switch (l.family()) {
    case LossFamily::CE:
      return pc;
    case LossFamily::FL:
      return std::pow(pc, l.q()) * (pc - l.q() * p * lp.log_p);
    case LossFamily::MAE:
    case LossFamily::RCE:
      return p * pc;
    case LossFamily::AUL:
      return p * pc * std::pow(l.a() - p, l.q() - 1.0);
    case LossFamily::AGCE:
      return p * pc * std::pow(l.a() + p, l.q() - 1.0);
    case LossFamily::AEL:
      return p * pc * std::exp(-p / l.q()) / l.q();
    case LossFamily::GCE:
      return std::exp(l.q() * lp.log_p) * pc;
    case LossFamily::SCE:
      return (1.0 - l.mix() + l.mix() * p) * pc;
    case LossFamily::TCE: {
      double acc = 0.0, term = 1.0;
      const int n = static_cast<int>(l.q());
      for (int i = 1; i <= n; ++i) {
        term *= pc;
        acc += term;
      }
      return p * acc;
    }
    default:
      throw UnsupportedFamily(std::string(family_name(l.family())) +
                              " has no sample-weighting function");
  }
}

void fail(LossFamily f, const std::string& msg) {
  throw ConstructionError(std::string(family_name(f)) + ": " + msg);
}

// grad of NCE value  CE_y / sum_i CE_i  given log-probabilities.
double nce_value_and_grad(std::span<const double> logp, std::size_t y, std::vector<double>* grad) {
  const std::size_t k = logp.size();
  double total = 0.0;
  for (double lp : logp) total -= lp;
  const double ce_y = -logp[y];
  if (grad) {
    // d CE_i / d s = p - e_i, so d(sum CE)/ds = k p - 1.
    grad->assign(k, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
      const double pj = std::exp(logp[j]);
      const double d_ce_y = pj - (j == y ? 1.0 : 0.0);
      const double d_total = static_cast<double>(k) * pj - 1.0;
      (*grad)[j] = (d_ce_y * total - d_total * ce_y) / (total * total);
    }
  }
  return ce_y / total;
}

}  // namespace

std::string_view family_name(LossFamily f) {
  for (const auto& e : kFamilyNames)
    if (e.family == f) return e.name;
  return "?";
}

std::optional<LossFamily> parse_family(std::string_view name) {
  if (name == "NCE+MAE") return LossFamily::NCE_MAE;
  if (name == "CE+GLS") return LossFamily::CE_GLS;
  for (const auto& e : kFamilyNames)
    if (e.name == name) return e.family;
  return std::nullopt;
}

bool is_standard_form(LossFamily f) {
  switch (f) {
    case LossFamily::NCE:
    case LossFamily::NCE_MAE:
    case LossFamily::MSE:
    case LossFamily::CE_GLS:
      return false;
    default:
      return true;
  }
}

LossSpec LossSpec::make(LossFamily f, const LossParams& in) {
  LossParams p = in;
  const bool uses_a = f == LossFamily::AUL || f == LossFamily::AGCE;
  const bool uses_q = f == LossFamily::FL || f == LossFamily::AUL || f == LossFamily::AGCE ||
                      f == LossFamily::AEL || f == LossFamily::GCE || f == LossFamily::TCE;
  const bool uses_mix = f == LossFamily::SCE || f == LossFamily::NCE_MAE;
  const bool uses_alpha = f == LossFamily::MSE || f == LossFamily::CE_GLS;

  if (p.a && !uses_a) fail(f, "does not take parameter 'a'");
  if (p.q && !uses_q) fail(f, "does not take parameter 'q'");
  if (p.mix && !uses_mix) fail(f, "does not take parameter 'mix'");
  if (p.alpha_reg && !uses_alpha) fail(f, "does not take parameter 'alpha_reg'");

  if (f == LossFamily::MSE && !p.alpha_reg) p.alpha_reg = 0.5;
  if (uses_a && !p.a) fail(f, "missing parameter 'a'");
  if (uses_q && !p.q) fail(f, "missing parameter 'q'");
  if (uses_mix && !p.mix) fail(f, "missing parameter 'mix'");
  if (uses_alpha && !p.alpha_reg) fail(f, "missing parameter 'alpha_reg'");

  for (auto v : {p.a, p.q, p.mix, p.alpha_reg})
    if (v && !std::isfinite(*v)) fail(f, "parameters must be finite");

  switch (f) {
    case LossFamily::FL:
    case LossFamily::AEL:
      if (!(*p.q > 0)) fail(f, "requires q > 0");
      break;
    case LossFamily::AUL:
      if (!(*p.a > 1)) fail(f, "requires a > 1");
      if (!(*p.q > 0)) fail(f, "requires q > 0");
      break;
    case LossFamily::AGCE:
      if (!(*p.a > 0)) fail(f, "requires a > 0");
      if (!(*p.q > 0)) fail(f, "requires q > 0");
      break;
    case LossFamily::GCE:
      if (!(*p.q > 0 && *p.q <= 1)) fail(f, "requires 0 < q <= 1");
      break;
    case LossFamily::SCE:
    case LossFamily::NCE_MAE:
      if (!(*p.mix > 0 && *p.mix < 1)) fail(f, "requires 0 < mix < 1");
      break;
    case LossFamily::TCE:
      if (!(*p.q >= 1) || std::floor(*p.q) != *p.q) fail(f, "requires integer q >= 1");
      if (*p.q > 1000) fail(f, "q above 1000 is not supported");
      break;
    default:
      break;
  }
  return LossSpec(f, p);
}

std::string LossSpec::describe() const {
  std::ostringstream os;
  os << family_name(family_);
  bool first = true;
  auto put = [&](const char* key, const std::optional<double>& v) {
    if (!v) return;
    os << (first ? "(" : ",") << key << "=" << *v;
    first = false;
  };
  put("a", params_.a);
  put("q", params_.q);
  put("mix", params_.mix);
  put("alpha_reg", params_.alpha_reg);
  if (!first) os << ")";
  return os.str();
}

LossEval eval(const LossSpec& loss, std::span<const double> s, std::size_t y) {
  const MarginView mv = margin(s, y);
  const std::size_t k = s.size();
  LossEval out;
  out.margin = mv.margin;

  if (loss.standard_form()) {
    const LabelProb lp = label_prob(mv.margin);
    out.value = standard_value(loss, lp);
    const double w = standard_weight(loss, lp);
    out.weight = w;
    out.grad.resize(k);
    for (std::size_t j = 0; j < k; ++j) out.grad[j] = -w * mv.grad_margin[j];
    return out;
  }

  const std::vector<double> logp = log_softmax(s);
  switch (loss.family()) {
    case LossFamily::NCE:
      out.value = nce_value_and_grad(logp, y, &out.grad);
      break;
    case LossFamily::NCE_MAE: {
      const double m = loss.mix();
      out.value = (1.0 - m) * nce_value_and_grad(logp, y, &out.grad);
      const LabelProb lp = label_prob(mv.margin);
      out.value += m * lp.pc;
      const double w_mae = lp.p * lp.pc;
      for (std::size_t j = 0; j < k; ++j)
        out.grad[j] = (1.0 - m) * out.grad[j] - m * w_mae * mv.grad_margin[j];
      break;
    }
    case LossFamily::MSE: {
      // (1 - p_y) + alpha * sum_i p_i^2
      const double alpha = loss.alpha_reg();
      const LabelProb lp = label_prob(mv.margin);
      std::vector<double> p(k);
      double sq = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        p[j] = std::exp(logp[j]);
        sq += p[j] * p[j];
      }
      out.value = lp.pc + alpha * sq;
      const double w_mae = lp.p * lp.pc;
      out.grad.resize(k);
      for (std::size_t j = 0; j < k; ++j)
        out.grad[j] = -w_mae * mv.grad_margin[j] + alpha * 2.0 * p[j] * (p[j] - sq);
      break;
    }
    case LossFamily::CE_GLS: {
      // -log p_y + alpha' * ( -(1/k) sum_i log p_i )
      const double alpha = loss.alpha_reg();
      const double inv_k = 1.0 / static_cast<double>(k);
      double mean_logp = 0.0;
      for (double lp : logp) mean_logp += lp * inv_k;
      out.value = -logp[y] - alpha * mean_logp;
      out.grad.resize(k);
      for (std::size_t j = 0; j < k; ++j) {
        const double pj = std::exp(logp[j]);
        out.grad[j] = pj - (j == y ? 1.0 : 0.0) + alpha * (pj - inv_k);
      }
      break;
    }
    default:
      throw std::logic_error("unreachable loss family");
  }
  return out;
}

double loss_value(const LossSpec& loss, std::span<const double> s, std::size_t y) {
  if (loss.standard_form()) {
    const MarginView mv = margin(s, y);
    return standard_value(loss, label_prob(mv.margin));
  }
  return eval(loss, s, y).value;
}

double weight_at(const LossSpec& loss, double delta) {
  if (!loss.standard_form())
    throw UnsupportedFamily(std::string(family_name(loss.family())) +
                            " has no sample-weighting function");
  return standard_weight(loss, label_prob(delta));
}

UnitMax normalize_to_unit_max(const LossSpec& loss) {
  switch (loss.family()) {
    case LossFamily::MAE:
    case LossFamily::RCE:
      return {4.0, 0.0};
    case LossFamily::CE:
      return {1.0, kWeightSearchLo};
    default:
      break;
  }
  auto w = [&](double d) { return weight_at(loss, d); };

  constexpr int kGrid = 6000;
  const double step = (kWeightSearchHi - kWeightSearchLo) / kGrid;
  int best = 0;
  double best_w = w(kWeightSearchLo);
  for (int i = 1; i <= kGrid; ++i) {
    const double v = w(kWeightSearchLo + i * step);
    if (v > best_w) {
      best_w = v;
      best = i;
    }
  }
  if (best == 0 || best == kGrid) return {1.0 / best_w, kWeightSearchLo + best * step};

  // Golden-section refinement inside the bracketing grid cells.
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = kWeightSearchLo + (best - 1) * step;
  double hi = kWeightSearchLo + (best + 1) * step;
  double x1 = hi - inv_phi * (hi - lo), x2 = lo + inv_phi * (hi - lo);
  double f1 = w(x1), f2 = w(x2);
  while (hi - lo > 1e-10) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = w(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = w(x1);
    }
  }
  const double peak = 0.5 * (lo + hi);
  return {1.0 / std::max(w(peak), best_w), peak};
}

std::vector<double> nce_regularizer_grad(std::span<const double> s) {
  std::vector<double> p = softmax(s);
  const double inv_k = 1.0 / static_cast<double>(s.size());
  // d/ds (1/k) sum_i log p_i = (1/k) sum_i (e_i - p) = 1/k - p
  for (double& x : p) x = inv_k - x;
  return p;
}

NceDecomposition decompose_nce(std::span<const double> s, std::size_t y, bool verify) {
  const MarginView mv = margin(s, y);
  const std::vector<double> logp = log_softmax(s);
  const double k = static_cast<double>(s.size());
  double total = 0.0, reg = 0.0;
  for (double lp : logp) {
    total -= lp;
    reg += lp / k;
  }
  NceDecomposition d;
  d.gamma = 1.0 / total;
  d.epsilon = k * (-logp[y]) / total;
  d.reg_value = reg;
  d.primary_value = -logp[y];
  const double w_ce = sigmoid(-mv.margin);
  d.grad_bound = 2.0 * d.gamma * (1.0 + d.epsilon) * w_ce;

  if (verify) {
    std::vector<double> g_nce;
    nce_value_and_grad(logp, y, &g_nce);
    const std::vector<double> g_reg = nce_regularizer_grad(s);
    for (std::size_t j = 0; j < s.size(); ++j) {
      const double g_ce = std::exp(logp[j]) - (j == y ? 1.0 : 0.0);
      const double rebuilt = d.gamma * (g_ce + d.epsilon * g_reg[j]);
      if (std::abs(rebuilt - g_nce[j]) > 1e-8)
        throw std::logic_error("decompose_nce: gradient identity violated at coordinate " +
                               std::to_string(j));
    }
  }
  return d;
}

RobustnessReport check_symmetry(const LossSpec& loss, std::size_t k, std::size_t probes,
                                std::uint64_t seed) {
  if (probes < 10) throw DomainError("check_symmetry: probes must be >= 10");
  if (k < 2) throw DomainError("check_symmetry: k must be >= 2");
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> draw(0.0, 3.0);
  std::vector<double> s(k), sums;
  sums.reserve(probes);
  for (std::size_t t = 0; t < probes; ++t) {
    for (double& x : s) x = draw(gen);
    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) total += loss_value(loss, s, i);
    sums.push_back(total);
  }
  RobustnessReport r;
  r.symmetric_constant = std::accumulate(sums.begin(), sums.end(), 0.0) / static_cast<double>(probes);
  for (double v : sums) r.residual = std::max(r.residual, std::abs(v - r.symmetric_constant));
  r.symmetric = r.residual <= kSymmetryTolerance;
  return r;
}

double asymmetry_threshold(const LossSpec& loss) {
  const double a = loss.a(), q = loss.q();
  switch (loss.family()) {
    case LossFamily::AGCE:
      return q <= 1.0 ? std::pow((a + 1.0) / a, q - 1.0) : 1.0;
    case LossFamily::AUL:
      return q > 1.0 ? std::pow((a - 1.0) / a, q - 1.0) : 1.0;
    case LossFamily::AEL:
      return std::exp(-1.0 / q);
    default:
      throw UnsupportedFamily("asymmetry_threshold: " + std::string(family_name(loss.family())) +
                              " is not one of AGCE, AUL, AEL");
  }
}

}  // namespace rlab
