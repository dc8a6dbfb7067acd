#include "fd_burgers.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pinnuq::testing {

namespace {

// du/dt = -(u^2/2)_x + nu u_xx at interior nodes; boundary rates stay zero.
void rate(const std::vector<double>& u, std::vector<double>& out, double dx, double nu) {
  const std::size_t n = u.size();
  const double inv2dx = 1.0 / (2.0 * dx);
  const double invdx2 = 1.0 / (dx * dx);
  out[0] = 0.0;
  out[n - 1] = 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double flux = (u[i + 1] * u[i + 1] - u[i - 1] * u[i - 1]) * 0.5 * inv2dx;
    out[i] = -flux + nu * (u[i + 1] - 2.0 * u[i] + u[i - 1]) * invdx2;
  }
}

}  // namespace

FdBurgers::FdBurgers(double dx, double dt, double nu, std::span<const double> snapshot_times) : dx_(dx) {
  const auto cells = static_cast<std::size_t>(std::llround(2.0 / dx));
  if (std::abs(static_cast<double>(cells) * dx - 2.0) > 1e-12) throw std::invalid_argument("dx must divide 2");
  std::vector<double> u(cells + 1), k(cells + 1), stage(cells + 1);
  for (std::size_t i = 0; i <= cells; ++i) u[i] = -std::sin(std::numbers::pi * (-1.0 + static_cast<double>(i) * dx));
  u.front() = 0.0;
  u.back() = 0.0;

  std::vector<double> times(snapshot_times.begin(), snapshot_times.end());
  std::vector<std::size_t> order(times.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });
  snapshots_.resize(times.size());

  double t = 0.0;
  for (std::size_t idx : order) {
    const auto steps = static_cast<long long>(std::llround((times[idx] - t) / dt));
    for (long long s = 0; s < steps; ++s) {
      rate(u, k, dx, nu);
      for (std::size_t i = 0; i <= cells; ++i) stage[i] = u[i] + dt * k[i];
      rate(stage, k, dx, nu);
      for (std::size_t i = 0; i <= cells; ++i) stage[i] = 0.75 * u[i] + 0.25 * (stage[i] + dt * k[i]);
      rate(stage, k, dx, nu);
      for (std::size_t i = 0; i <= cells; ++i) u[i] = u[i] / 3.0 + 2.0 / 3.0 * (stage[i] + dt * k[i]);
    }
    t += static_cast<double>(steps) * dt;
    snapshots_[idx] = u;
  }
}

double FdBurgers::at(std::size_t k, double x) const {
  const auto& u = snapshots_.at(k);
  const double pos = (x + 1.0) / dx_;
  const auto i = static_cast<std::size_t>(std::clamp(std::floor(pos), 0.0, static_cast<double>(u.size() - 2)));
  const double w = pos - static_cast<double>(i);
  return (1.0 - w) * u[i] + w * u[i + 1];
}

}  // namespace pinnuq::testing
