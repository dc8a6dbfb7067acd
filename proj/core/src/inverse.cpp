#include "pinnuq/inverse.hpp"

#include "pinnuq/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

namespace pinnuq {

namespace {

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, r.ptr};
}

}  // namespace

double softplus(double x) noexcept {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double softplus_inverse(double y) {
  if (!(y > 0.0) || !std::isfinite(y)) throw ContractError("softplus inverse needs a finite positive value");
  // log(e^y - 1) = y + log(1 - e^{-y})
  return y + std::log(-std::expm1(-y));
}

ParameterVector extend_parameters(const ParameterVector& params, const LambdaPair& lambda_init) {
  if (!std::isfinite(lambda_init[0]) || !std::isfinite(lambda_init[1])) {
    throw ContractError("lambda initial values must be finite");
  }
  ParameterVector out(params.size() + static_cast<Eigen::Index>(kLambdaSlots));
  out.head(params.size()) = params;
  out(params.size()) = lambda_init[0];
  out(params.size() + 1) = softplus_inverse(lambda_init[1]);
  return out;
}

ParameterVector strip_lambda(const NetworkSpec& spec, const ParameterVector& extended) {
  const auto n = static_cast<Eigen::Index>(spec.parameter_count());
  if (extended.size() != n + static_cast<Eigen::Index>(kLambdaSlots)) {
    throw ContractError("extended parameter vector has the wrong length");
  }
  return extended.head(n);
}

LambdaPair lambda_of(const NetworkSpec& spec, const ParameterVector& extended) {
  const auto n = static_cast<Eigen::Index>(spec.parameter_count());
  if (extended.size() != n + static_cast<Eigen::Index>(kLambdaSlots)) {
    throw ContractError("extended parameter vector has the wrong length");
  }
  return {extended(n), softplus(extended(n + 1))};
}

LambdaPrior default_lambda_prior() {
  LambdaPrior prior;
  prior.raw_mean2 = softplus_inverse(0.01);
  return prior;
}

LambdaEstimate estimate_lambda(UqMethod method, std::span<const LambdaPair> values) {
  if (values.empty()) throw ContractError("lambda estimate needs at least one value");
  LambdaEstimate est;
  est.method = method;
  est.raw.assign(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  for (std::size_t c = 0; c < 2; ++c) {
    double sum = 0.0;
    for (const auto& v : values) sum += v[c];
    est.mean[c] = sum / n;
    if (values.size() > 1) {
      double ss = 0.0;
      for (const auto& v : values) ss += (v[c] - est.mean[c]) * (v[c] - est.mean[c]);
      est.std[c] = std::sqrt(ss / (n - 1.0));
    }
  }
  est.degenerate = values.size() == 1;
  return est;
}

LambdaEstimate estimate_lambda(UqMethod method, const NetworkSpec& spec, std::span<const ParameterVector> extended) {
  std::vector<LambdaPair> values;
  values.reserve(extended.size());
  for (const auto& p : extended) values.push_back(lambda_of(spec, p));
  return estimate_lambda(method, values);
}

void write_lambda_csv(const std::filesystem::path& path, std::span<const LambdaEstimate> estimates) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "method,lambda1_mean,lambda1_std,lambda2_mean,lambda2_std\n";
  for (const auto& e : estimates) {
    out << to_string(e.method) << ',' << format_double(e.mean[0]) << ',' << format_double(e.std[0]) << ','
        << format_double(e.mean[1]) << ',' << format_double(e.std[1]) << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace pinnuq
