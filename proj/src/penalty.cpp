#include "sdb/penalty.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "sdb/errors.hpp"

namespace sdb {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

PenaltySpec make(double l1, double l2) {
  if (l1 < 0.0 || l2 < 0.0)
    throw Error(ErrorCode::BadArgument, "penalty: negative tuning parameter");
  if (l1 == 0.0 && l2 == 0.0)
    throw Error(ErrorCode::BadArgument, "penalty: lambda1 and lambda2 cannot both be zero");
  PenaltySpec p;
  p.lambda1 = l1;
  p.lambda2 = l2;
  return p;
}
}  // namespace

PenaltySpec PenaltySpec::ridge(double lambda2) { return make(0.0, lambda2); }
PenaltySpec PenaltySpec::lasso(double lambda1) { return make(lambda1, 0.0); }
PenaltySpec PenaltySpec::elastic_net(double lambda1, double lambda2) {
  return make(lambda1, lambda2);
}

PenaltySpec PenaltySpec::parse(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos)
    throw Error(ErrorCode::BadArgument, "penalty: expected kind:params, got '" + text + "'");
  const std::string kind = text.substr(0, colon);
  const std::string params = text.substr(colon + 1);
  try {
    if (kind == "ridge") return ridge(std::stod(params));
    if (kind == "lasso") return lasso(std::stod(params));
    if (kind == "en") {
      const auto comma = params.find(',');
      if (comma == std::string::npos)
        throw Error(ErrorCode::BadArgument, "penalty: en takes two parameters");
      return elastic_net(std::stod(params.substr(0, comma)),
                         std::stod(params.substr(comma + 1)));
    }
  } catch (const std::invalid_argument&) {
    throw Error(ErrorCode::BadArgument, "penalty: malformed parameters in '" + text + "'");
  }
  throw Error(ErrorCode::BadArgument, "penalty: unknown kind '" + kind + "'");
}

std::string PenaltySpec::to_string() const {
  std::ostringstream os;
  if (lambda1 == 0.0)
    os << "ridge:" << lambda2;
  else if (lambda2 == 0.0)
    os << "lasso:" << lambda1;
  else
    os << "en:" << lambda1 << "," << lambda2;
  return os.str();
}

double PenaltySpec::value(double x) const {
  return lambda1 * std::abs(x) + 0.5 * lambda2 * x * x;
}

double PenaltySpec::prox(double v, double x) const {
  const double t = lambda1 * v;
  const double soft = (x > t) ? x - t : (x < -t ? x + t : 0.0);
  return soft / (1.0 + lambda2 * v);
}

double PenaltySpec::hpp_extended(double x) const {
  if (lambda1 > 0.0 && x == 0.0) return kInf;
  return lambda2;
}

double PenaltySpec::prox_deriv_extended(double v, double x) const {
  if (lambda1 > 0.0 && std::abs(x) <= lambda1 * v) return 0.0;
  return 1.0 / (1.0 + lambda2 * v);
}

Vector PenaltySpec::prox(double v, const Vector& x) const {
  Vector out(x.size());
  for (Index i = 0; i < x.size(); ++i) out[i] = prox(v, x[i]);
  return out;
}

double PenaltySpec::value(const Vector& x) const {
  return lambda1 * x.lpNorm<1>() + 0.5 * lambda2 * x.squaredNorm();
}

Vector PenaltySpec::hpp_extended(const Vector& beta) const {
  Vector out(beta.size());
  for (Index i = 0; i < beta.size(); ++i) out[i] = hpp_extended(beta[i]);
  return out;
}

} // namespace sdb
