#include "gridfreq/sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "gridfreq/control.hpp"

namespace gridfreq {

namespace {

struct Schedule {
  std::vector<int> step_index;  // grid index at which each disturbance starts
};

int sample_count(const SimConfig& sim) {
  if (!(sim.dt > 0.0) || !(sim.horizon > 0.0) || sim.dt > sim.horizon)
    throw ValidationError("simulation needs 0 < dt <= horizon");
  return static_cast<int>(std::llround(sim.horizon / sim.dt)) + 1;
}

void check_config(const StateSpaceModel& model, const SimConfig& sim) {
  for (const auto& d : sim.disturbances) {
    if (d.bus < 0 || d.bus >= model.channels)
      throw ValidationError("disturbance at unknown bus " + std::to_string(d.bus));
    if (d.time < 0.0 || d.time > sim.horizon)
      throw ValidationError("disturbance time outside [0, horizon]");
  }
  if (sim.initial_state.size() != 0 && sim.initial_state.size() != model.state_dim())
    throw ValidationError("initial state has the wrong dimension");
  if (sim.base_injection.size() != 0 && sim.base_injection.size() != model.channels)
    throw ValidationError("base injection has the wrong dimension");
}

// Bus injection active on [t_k, t_k+1).
class InjectionSchedule {
 public:
  InjectionSchedule(const StateSpaceModel& model, const SimConfig& sim)
      : current_(sim.base_injection.size() ? sim.base_injection
                                           : Eigen::VectorXd::Zero(model.channels)) {
    for (const auto& d : sim.disturbances) {
      const int k = static_cast<int>(std::ceil(d.time / sim.dt - 1e-9));
      events_.push_back({k, d.bus, d.delta_p});
    }
    std::stable_sort(events_.begin(), events_.end(),
                     [](const Event& a, const Event& b) { return a.k < b.k; });
  }

  const Eigen::VectorXd& at(int k) {
    while (next_ < events_.size() && events_[next_].k <= k) {
      current_(events_[next_].bus) += events_[next_].delta_p;
      ++next_;
    }
    return current_;
  }

 private:
  struct Event {
    int k;
    int bus;
    double delta_p;
  };
  std::vector<Event> events_;
  std::size_t next_ = 0;
  Eigen::VectorXd current_;
};

class Recorder {
 public:
  Recorder(const StateSpaceModel& model, int samples) : model_(model) {
    const int n = model.channels;
    out_.times.reserve(samples);
    out_.theta.resize(samples, n);
    out_.omega.resize(samples, n);
    out_.q_r.resize(samples, n);
    out_.x.resize(samples, model.idroop_buses.size());
    out_.idroop_buses = model.idroop_buses;
    x_slot_.assign(n, -1);
    for (std::size_t s = 0; s < model.idroop_buses.size(); ++s)
      x_slot_[model.idroop_buses[s]] = static_cast<int>(s);
  }

  void record(int k, double t, const Eigen::VectorXd& z, const Eigen::VectorXd& u) {
    const int n = model_.channels;
    out_.times.push_back(t);
    out_.theta.row(k) = z.head(n).transpose();
    out_.omega.row(k) = z.segment(n, n).transpose();
    out_.x.row(k) = z.tail(model_.idroop_buses.size()).transpose();
    Eigen::VectorXd omega_dot;
    for (int i = 0; i < n; ++i) {
      const InverterConfig& c = model_.inverters.empty() ? InverterConfig{}
                                                         : model_.inverters[i];
      const double w = z(n + i);
      double q = 0.0;
      switch (c.mode) {
        case InverterMode::ConstantPower: break;
        case InverterMode::Droop: q = -w / c.droop; break;
        case InverterMode::VirtualInertia:
          if (omega_dot.size() == 0)
            omega_dot = (model_.a * z + model_.injection * u).segment(n, n);
          q = -w / c.droop - c.virtual_inertia * omega_dot(i);
          break;
        case InverterMode::IDroop: q = z(2 * n + x_slot_[i]); break;
      }
      out_.q_r(k, i) = q;
    }
  }

  Trajectory take() { return std::move(out_); }

 private:
  const StateSpaceModel& model_;
  std::vector<int> x_slot_;
  Trajectory out_;
};

Eigen::VectorXd rk4_step(const StateSpaceModel& model, const Eigen::VectorXd& z,
                         const Eigen::VectorXd& forcing, double h) {
  auto f = [&](const Eigen::VectorXd& s) -> Eigen::VectorXd {
    return model.a * s + forcing;
  };
  const Eigen::VectorXd k1 = f(z);
  const Eigen::VectorXd k2 = f(z + 0.5 * h * k1);
  const Eigen::VectorXd k3 = f(z + 0.5 * h * k2);
  const Eigen::VectorXd k4 = f(z + h * k3);
  return z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Trajectory integrate(const StateSpaceModel& model, const SimConfig& sim, bool noisy) {
  check_config(model, sim);
  const int samples = sample_count(sim);
  const int n = model.channels;
  const double h = sim.dt;
  InjectionSchedule schedule(model, sim);
  Recorder recorder(model, samples);

  Eigen::VectorXd z = sim.initial_state.size() ? sim.initial_state
                                               : Eigen::VectorXd::Zero(model.state_dim());
  std::mt19937_64 rng(sim.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double sqrt_h = std::sqrt(h);
  Eigen::VectorXd dw1(n), dw2(n), dw2_prev = Eigen::VectorXd::Zero(n);

  for (int k = 0; k < samples; ++k) {
    const Eigen::VectorXd& u = schedule.at(k);
    recorder.record(k, k * h, z, u);
    if (k + 1 == samples) break;
    Eigen::VectorXd next = rk4_step(model, z, model.injection * u, h);
    if (noisy) {
      for (int i = 0; i < n; ++i) dw1(i) = sqrt_h * normal(rng);
      for (int i = 0; i < n; ++i) dw2(i) = sqrt_h * normal(rng);
      next += model.b_injection() * dw1 + model.b_measurement() * dw2 +
              model.b_derivative() * ((dw2 - dw2_prev) / h);
      dw2_prev = dw2;
    }
    if (!next.allFinite())
      throw DivergenceError("simulation diverged at t = " + std::to_string((k + 1) * h),
                            k * h, z);
    z = std::move(next);
  }
  return recorder.take();
}

}  // namespace

Eigen::VectorXd Trajectory::state(int k) const {
  const auto n = theta.cols();
  Eigen::VectorXd z(2 * n + x.cols());
  z << theta.row(k).transpose(), omega.row(k).transpose(), x.row(k).transpose();
  return z;
}

Trajectory simulate_deterministic(const StateSpaceModel& model, const SimConfig& sim) {
  if (sim.noise_enabled)
    throw ValidationError("simulate_deterministic: noise_enabled must be false");
  return integrate(model, sim, false);
}

Trajectory simulate_stochastic(const StateSpaceModel& model, const SimConfig& sim) {
  if (!sim.noise_enabled)
    throw ValidationError("simulate_stochastic: noise_enabled must be true");
  return integrate(model, sim, true);
}

Metrics compute_metrics(const Trajectory& trajectory, const SteadyState& reference) {
  Metrics m;
  const int samples = trajectory.samples();
  const auto n = trajectory.omega.cols();
  m.peak_inverter_power_per_bus = Eigen::VectorXd::Zero(n);
  if (samples == 0 || n == 0) return m;

  const double lo = trajectory.omega.minCoeff();
  const double hi = trajectory.omega.maxCoeff();
  if (reference.omega0 < 0.0)
    m.nadir = std::min(lo, 0.0);
  else if (reference.omega0 > 0.0)
    m.nadir = std::max(hi, 0.0);
  else
    m.nadir = std::abs(lo) >= std::abs(hi) ? lo : hi;

  const int tail10 = std::max(1, samples / 10);
  m.settling_frequency = trajectory.omega.bottomRows(tail10).mean();

  m.peak_inverter_power_per_bus = trajectory.q_r.cwiseAbs().colwise().maxCoeff().transpose();
  m.peak_inverter_power = m.peak_inverter_power_per_bus.maxCoeff();

  const int tail50 = std::max(1, samples / 2);
  m.empirical_output_variance =
      trajectory.omega.bottomRows(tail50).rowwise().squaredNorm().mean();
  return m;
}

SteadyState disturbance_shift(const PowerNetwork& network,
                              std::span<const InverterConfig> configs,
                              std::span<const Disturbance> disturbances) {
  PowerNetwork shifted = network;
  for (auto& bus : shifted.buses) bus.injection = 0.0;
  for (const auto& d : disturbances) {
    if (d.bus < 0 || d.bus >= shifted.size())
      throw ValidationError("disturbance at unknown bus " + std::to_string(d.bus));
    shifted.buses[d.bus].injection += d.delta_p;
  }
  std::vector<InverterConfig> zeroed(configs.begin(), configs.end());
  for (auto& c : zeroed) c.q0 = 0.0;
  return steady_state(shifted, zeroed);
}

std::vector<double> lyapunov_trace(const Trajectory& trajectory,
                                   const PowerNetwork& network,
                                   std::span<const InverterConfig> configs,
                                   const SteadyState& reference) {
  std::vector<double> out;
  out.reserve(trajectory.samples());
  const Eigen::VectorXd omega0 =
      Eigen::VectorXd::Constant(trajectory.omega.cols(), reference.omega0);
  for (int k = 0; k < trajectory.samples(); ++k) {
    const Eigen::VectorXd theta = trajectory.theta.row(k).transpose() - reference.theta;
    const Eigen::VectorXd omega = trajectory.omega.row(k).transpose() - omega0;
    const Eigen::VectorXd x = trajectory.x.row(k).transpose() - reference.x;
    out.push_back(lyapunov_diagnostics(theta, omega, x, network, configs).value);
  }
  return out;
}

}  // namespace gridfreq
