#include "wrht/detector.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "wrht/errors.hpp"

namespace wrht {

namespace {

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_real(std::string_view token, const std::string& context) {
  double value = 0.0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end)
    throw io_error("detector file: bad number '" + std::string(token) + "' in " + context);
  return value;
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

}  // namespace

DetectorModel build(const LfdSolution& solution, const PsiFamily& family, Norm norm_kind) {
  DetectorModel model;
  model.pool = solution.pool;
  model.family = family;
  model.norm_kind = norm_kind;
  model.p1 = solution.p1.cwiseMax(0.0);
  model.p2 = solution.p2.cwiseMax(0.0);
  const int n = model.pool.size();
  model.phi.resize(n);
  for (int m = 0; m < n; ++m)
    model.phi[m] = detector_value(family, model.p1[m], model.p2[m]);
  return model;
}

double evaluate(const DetectorModel& model, const Eigen::VectorXd& omega) {
  if (omega.size() != model.pool.dimension())
    throw std::invalid_argument("observation dimension does not match the detector's support pool");
  int best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (int m = 0; m < model.pool.size(); ++m) {
    const double d = point_norm(omega - model.pool.points[m], model.norm_kind);
    if (d < best_dist) {  // strict: ties keep the lowest index
      best_dist = d;
      best = m;
    }
  }
  return model.phi[best];
}

double risk_phi(const WeightedValues& under_p1, const WeightedValues& under_p2,
                const PsiFamily& family) {
  auto check = [](const WeightedValues& wv, const char* name) {
    if (wv.values.size() != wv.weights.size())
      throw std::invalid_argument(std::string(name) + ": values and weights differ in length");
    if (std::abs(wv.weights.sum() - 1.0) > 1e-9)
      throw std::invalid_argument(std::string(name) + ": weights must sum to 1");
  };
  check(under_p1, "first sample");
  check(under_p2, "second sample");
  double total = 0.0;
  for (Eigen::Index i = 0; i < under_p1.values.size(); ++i)
    total += under_p1.weights[i] * ell(family, -under_p1.values[i]);
  for (Eigen::Index j = 0; j < under_p2.values.size(); ++j)
    total += under_p2.weights[j] * ell(family, under_p2.values[j]);
  return total;
}

double risk_bound(const PsiFamily& family, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 0.5))
    throw std::domain_error("risk bound is defined for error levels in (0, 1/2)");
  return psi(family, epsilon);
}

void save_detector(const DetectorModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot open '" + path + "' for writing");
  out << "wrht-detector v1\n";
  out << to_string(model.family.kind) << ' ' << to_string(model.norm_kind) << ' '
      << model.pool.dimension() << ' ' << model.pool.size() << '\n';
  for (int m = 0; m < model.pool.size(); ++m) {
    for (int j = 0; j < model.pool.dimension(); ++j)
      out << format_real(model.pool.points[m][j]) << ' ';
    out << format_real(model.p1[m]) << ' ' << format_real(model.p2[m]) << ' '
        << format_real(model.phi[m]) << '\n';
  }
  if (!out) throw io_error("failed while writing '" + path + "'");
}

DetectorModel load_detector(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open detector file '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != "wrht-detector v1")
    throw io_error("'" + path + "' is not a wrht-detector v1 file");
  if (!std::getline(in, line)) throw io_error("'" + path + "': missing header line");
  const auto header = split_ws(line);
  if (header.size() != 4) throw io_error("'" + path + "': header needs family, norm, d, count");

  DetectorModel model;
  model.family = family_from_string(header[0]);
  model.norm_kind = norm_from_string(header[1]);
  const int d = static_cast<int>(parse_real(header[2], "header dimension"));
  const int count = static_cast<int>(parse_real(header[3], "header count"));
  if (d < 1 || count < 1) throw io_error("'" + path + "': dimension and count must be positive");

  model.pool.points.reserve(count);
  model.pool.n1 = count;  // source labels are not persisted; single segment
  model.pool.n2 = 0;
  model.p1.resize(count);
  model.p2.resize(count);
  model.phi.resize(count);
  for (int m = 0; m < count; ++m) {
    if (!std::getline(in, line))
      throw io_error("'" + path + "': expected " + std::to_string(count) + " point lines, got " +
                     std::to_string(m));
    const auto tokens = split_ws(line);
    if (static_cast<int>(tokens.size()) != d + 3)
      throw io_error("'" + path + "': line " + std::to_string(m + 3) + " needs " +
                     std::to_string(d + 3) + " fields");
    const std::string context = "line " + std::to_string(m + 3);
    Eigen::VectorXd pt(d);
    for (int j = 0; j < d; ++j) pt[j] = parse_real(tokens[j], context);
    model.pool.points.push_back(std::move(pt));
    model.p1[m] = parse_real(tokens[d], context);
    model.p2[m] = parse_real(tokens[d + 1], context);
    model.phi[m] = parse_real(tokens[d + 2], context);
    if (!(model.p1[m] >= 0.0) || !(model.p2[m] >= 0.0))
      throw io_error("'" + path + "': negative mass on " + context);
    if (std::abs(model.phi[m] - detector_value(model.family, model.p1[m], model.p2[m])) > 1e-9)
      throw io_error("'" + path + "': stored detector value on " + context +
                     " is inconsistent with the stored masses");
  }
  return model;
}

}  // namespace wrht
