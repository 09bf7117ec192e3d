#include "wrht/psi_divergence.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wrht {

namespace {
constexpr double kLn2 = 0.6931471805599453094172321214581766;

double xlog(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

void check_nonneg(double a, double b) {
  if (!(a >= 0.0) || !(b >= 0.0))
    throw std::domain_error("pointwise objective arguments must be nonnegative");
}
}  // namespace

PsiFamily family_from_string(std::string_view name) {
  PsiFamily f;
  if (name == "exp") f.kind = FamilyKind::Exp;
  else if (name == "log") f.kind = FamilyKind::Log;
  else if (name == "quad") f.kind = FamilyKind::Quad;
  else if (name == "hinge") f.kind = FamilyKind::Hinge;
  else throw std::invalid_argument("unknown family '" + std::string(name) + "' (expected exp, log, quad, or hinge)");
  return f;
}

std::string to_string(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::Exp: return "exp";
    case FamilyKind::Log: return "log";
    case FamilyKind::Quad: return "quad";
    case FamilyKind::Hinge: return "hinge";
  }
  throw std::invalid_argument("invalid family enum value");
}

double ell(const PsiFamily& family, double t) {
  switch (family.kind) {
    case FamilyKind::Exp:
      return std::exp(t);
    case FamilyKind::Log:
      // log2(1 + e^t), written to avoid overflow for large t.
      return (t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t))) / kLn2;
    case FamilyKind::Quad: {
      const double u = std::max(t + 1.0, 0.0);
      return u * u;
    }
    case FamilyKind::Hinge:
      return std::max(t + 1.0, 0.0);
  }
  throw std::invalid_argument("invalid family enum value");
}

double psi(const PsiFamily& family, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("psi argument must lie in [0, 1]");
  switch (family.kind) {
    case FamilyKind::Exp:
      return 2.0 * std::sqrt(p * (1.0 - p));
    case FamilyKind::Log:
      return -(xlog(p) + xlog(1.0 - p)) / kLn2;
    case FamilyKind::Quad:
      return 4.0 * p * (1.0 - p);
    case FamilyKind::Hinge:
      return 2.0 * std::min(p, 1.0 - p);
  }
  throw std::invalid_argument("invalid family enum value");
}

double psi_smoothed(const PsiFamily& family, double p) {
  if (family.kind != FamilyKind::Hinge) return psi(family, p);
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("psi argument must lie in [0, 1]");
  const double mu = family.smoothing_mu;
  const double x = mu * (2.0 * p - 1.0) / 2.0;
  // 2*min(p,1-p) = 1 - |2p-1|; replace |.| by the softabs log(2 cosh x)/x-scale.
  return 1.0 - (2.0 / mu) * (std::abs(x) + std::log1p(std::exp(-2.0 * std::abs(x))));
}

double psi_smoothed_deriv(const PsiFamily& family, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("psi argument must lie in [0, 1]");
  switch (family.kind) {
    case FamilyKind::Exp:
      return (1.0 - 2.0 * p) / std::sqrt(p * (1.0 - p));
    case FamilyKind::Log:
      return (std::log(1.0 - p) - std::log(p)) / kLn2;
    case FamilyKind::Quad:
      return 4.0 - 8.0 * p;
    case FamilyKind::Hinge:
      return -2.0 * std::tanh(family.smoothing_mu * (2.0 * p - 1.0) / 2.0);
  }
  throw std::invalid_argument("invalid family enum value");
}

double pointwise_objective(const PsiFamily& family, double a, double b) {
  check_nonneg(a, b);
  if (a + b == 0.0) return 0.0;
  switch (family.kind) {
    case FamilyKind::Exp:
      return 2.0 * std::sqrt(a * b);
    case FamilyKind::Log:
      // (a+b)*entropy(a/(a+b)); max(.,0) guards the -1e-16 rounding that the
      // log form can produce when one argument dominates.
      return std::max(0.0, (xlog(a + b) - xlog(a) - xlog(b)) / kLn2);
    case FamilyKind::Quad:
      return 4.0 * a * b / (a + b);
    case FamilyKind::Hinge:
      return 2.0 * std::min(a, b);
  }
  throw std::invalid_argument("invalid family enum value");
}

double pointwise_objective_smoothed(const PsiFamily& family, double a, double b) {
  if (family.kind != FamilyKind::Hinge) return pointwise_objective(family, a, b);
  check_nonneg(a, b);
  if (a + b == 0.0) return 0.0;
  return (a + b) * psi_smoothed(family, a / (a + b));
}

std::pair<double, double> pointwise_grad(const PsiFamily& family, double a, double b) {
  check_nonneg(a, b);
  if (a + b == 0.0) throw std::domain_error("pointwise gradient undefined at (0, 0)");
  const double r = a / (a + b);
  switch (family.kind) {
    case FamilyKind::Exp:
      return {std::sqrt(b / a), std::sqrt(a / b)};
    case FamilyKind::Log:
      return {std::log((a + b) / a) / kLn2, std::log((a + b) / b) / kLn2};
    case FamilyKind::Quad: {
      const double s = a + b;
      return {4.0 * b * b / (s * s), 4.0 * a * a / (s * s)};
    }
    case FamilyKind::Hinge: {
      const double v = psi_smoothed(family, r);
      const double dv = psi_smoothed_deriv(family, r);
      return {v + (1.0 - r) * dv, v - r * dv};
    }
  }
  throw std::invalid_argument("invalid family enum value");
}

double detector_value(const PsiFamily& family, double p1, double p2) {
  if (!(p1 >= 0.0) || !(p2 >= 0.0))
    throw std::domain_error("detector masses must be nonnegative");
  if (p1 == 0.0 && p2 == 0.0) return 0.0;
  switch (family.kind) {
    case FamilyKind::Exp: {
      if (p2 == 0.0) return kDetectorClamp;
      if (p1 == 0.0) return -kDetectorClamp;
      return std::clamp(0.5 * std::log(p1 / p2), -kDetectorClamp, kDetectorClamp);
    }
    case FamilyKind::Log: {
      if (p2 == 0.0) return kDetectorClamp;
      if (p1 == 0.0) return -kDetectorClamp;
      return std::clamp(std::log(p1 / p2), -kDetectorClamp, kDetectorClamp);
    }
    case FamilyKind::Quad:
      return (p1 - p2) / (p1 + p2);
    case FamilyKind::Hinge:
      return p1 > p2 ? 1.0 : (p1 < p2 ? -1.0 : 0.0);
  }
  throw std::invalid_argument("invalid family enum value");
}

double divergence_of_value(const PsiFamily& /*family*/, double value) {
  if (!(value >= 0.0 && value <= 2.0 + 1e-9))
    throw std::domain_error("objective value outside [0, 2]; solver output is inconsistent");
  return 1.0 - value / 2.0;
}

}  // namespace wrht
