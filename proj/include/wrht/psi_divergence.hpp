#pragma once

#include <string>
#include <string_view>
#include <utility>

namespace wrht {

/// The four loss families.  Each couples a convex margin loss ell with a
/// concave weight function psi on [0,1]; the pointwise objective
/// h(a, b) = (a + b) * psi(a / (a + b)) is what the distributionally robust
/// solver maximizes, and 1 - objective/2 is the induced divergence.
enum class FamilyKind { Exp, Log, Quad, Hinge };

struct PsiFamily {
  FamilyKind kind = FamilyKind::Exp;
  /// Hinge only: softmin smoothing sharpness used inside the solver.  The
  /// smoothed weight satisfies psi - 2*ln(2)/mu <= psi_mu <= psi, so larger
  /// mu means a tighter (but stiffer) surrogate.  Ignored by other families.
  double smoothing_mu = 200.0;
};

PsiFamily family_from_string(std::string_view name);
std::string to_string(FamilyKind kind);

/// Detector outputs from the Exp/Log families are log-likelihood ratios and
/// blow up when one density vanishes; they are clamped to this magnitude.
inline constexpr double kDetectorClamp = 50.0;

/// Margin loss ell(t): Exp e^t, Log log2(1+e^t), Quad ((t+1)_+)^2,
/// Hinge (t+1)_+.  Defined for all real t.
double ell(const PsiFamily& family, double t);

/// Concave weight psi(p) on [0,1] (throws std::domain_error outside):
/// Exp 2*sqrt(p(1-p)), Log binary entropy in bits, Quad 4p(1-p),
/// Hinge 2*min(p, 1-p).
double psi(const PsiFamily& family, double p);

/// Smoothed weight used by the solver.  Identical to psi except for Hinge,
/// where the kink at p = 1/2 is replaced by a log-cosh softmin of sharpness
/// smoothing_mu.
double psi_smoothed(const PsiFamily& family, double p);

/// Derivative of psi_smoothed.  For Exp/Log this diverges as p -> 0 or 1;
/// callers that need finite gradients clamp their arguments first.
double psi_smoothed_deriv(const PsiFamily& family, double p);

/// h(a, b) = (a + b) psi(a / (a + b)) for a, b >= 0, with h(0, 0) = 0.
/// Closed forms: Exp 2*sqrt(ab); Log [a*ln((a+b)/a) + b*ln((a+b)/b)]/ln 2;
/// Quad 4ab/(a+b); Hinge 2*min(a, b).  Throws std::domain_error on negative
/// input.
double pointwise_objective(const PsiFamily& family, double a, double b);

/// Same but with psi_smoothed; equals pointwise_objective except for Hinge.
double pointwise_objective_smoothed(const PsiFamily& family, double a, double b);

/// Gradient of the smoothed pointwise objective:
/// (psi(r) + (1-r) psi'(r), psi(r) - r psi'(r)) with r = a/(a+b).
/// Throws std::domain_error if a + b == 0 or either argument is negative.
/// May return infinite components at the exact boundary (a == 0 or b == 0)
/// for Exp/Log.
std::pair<double, double> pointwise_grad(const PsiFamily& family, double a, double b);

/// The optimal detector value at a support point carrying masses (p1, p2):
/// the minimizer of p1*ell(-t) + p2*ell(t) over t, under the convention that
/// nonnegative values accept the alternative.  Exp: 0.5*ln(p1/p2); Log:
/// ln(p1/p2); Quad: (p1-p2)/(p1+p2); Hinge: sign(p1-p2).  Log-ratios are
/// clamped to +-kDetectorClamp; (0, 0) maps to 0.
double detector_value(const PsiFamily& family, double p1, double p2);

/// Converts a solver objective value into the induced divergence
/// 1 - value/2.  Domain [0, 2 + 1e-9]; throws std::domain_error outside.
double divergence_of_value(const PsiFamily& family, double value);

}  // namespace wrht
