#pragma once

#include <string>

#include "wrht/distributions.hpp"
#include "wrht/lfd_solver.hpp"
#include "wrht/psi_divergence.hpp"

namespace wrht {

/// @brief The robust detector induced by a solved instance: a value phi[m]
/// per pool point, derived from the least favorable masses (p1[m], p2[m]).
/// The decision rule accepts the alternative hypothesis iff the evaluated
/// value is >= 0.
struct DetectorModel {
  SupportPool pool;
  PsiFamily family;
  Norm norm_kind = Norm::L2;
  Eigen::VectorXd p1, p2;
  Eigen::VectorXd phi;  // phi[m] = detector_value(family, p1[m], p2[m]), |phi| <= clamp
};

/// Builds the detector from a solution: phi per pool point, zero where both
/// masses vanish.
DetectorModel build(const LfdSolution& solution, const PsiFamily& family, Norm norm_kind);

/// Detector value of an arbitrary observation: the phi of the nearest pool
/// point under norm_kind; ties resolve to the lowest pool index.  Throws
/// std::invalid_argument on dimension mismatch.
double evaluate(const DetectorModel& model, const Eigen::VectorXd& omega);

/// A finitely supported pushforward sample of detector values.
struct WeightedValues {
  Eigen::VectorXd values;
  Eigen::VectorXd weights;  // must sum to 1 within 1e-9
};

/// The detector risk: E_{P1}[ell(-phi)] + E_{P2}[ell(phi)] over the two
/// weighted value samples.  Throws std::invalid_argument when either weight
/// vector does not sum to 1 within 1e-9.
double risk_phi(const WeightedValues& under_p1, const WeightedValues& under_p2,
                const PsiFamily& family);

/// The guarantee curve psi(epsilon) for epsilon in (0, 1/2): when the solved
/// objective stays below this value, the optimal test's worst-case error is
/// below epsilon.  Throws std::domain_error outside the interval.
double risk_bound(const PsiFamily& family, double epsilon);

/// Writes a versioned flat text file: header "wrht-detector v1"; a line with
/// family, norm, dimension, point count; then one line per pool point with
/// coordinates, p1, p2, phi at 17 significant digits.  Throws io_error on
/// write failure.
void save_detector(const DetectorModel& model, const std::string& path);

/// Reads the format written by save_detector.  The pool's source labels are
/// not persisted, so the loaded pool carries a single segment (n1 = count,
/// n2 = 0); nothing downstream of evaluation needs the labels.  Throws
/// io_error on malformed files, including phi values inconsistent with the
/// stored masses.
DetectorModel load_detector(const std::string& path);

}  // namespace wrht
