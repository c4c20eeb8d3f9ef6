#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <fmt/format.h>

#include "sigvar/case_studies.hpp"

namespace sigvar {

namespace {

std::vector<std::string> flare_keys() {
  std::vector<std::string> keys = {"heat_of_combustion", "wind_speed",  "reference_distance",
                                   "radiation_limit",    "mach_limit",  "design_flow",
                                   "flow_mean",          "t_lower",     "t_upper",
                                   "h_lower",            "h_upper"};
  for (int i = 1; i <= 12; ++i) keys.push_back(fmt::format("a{}", i));
  return keys;
}

}  // namespace

FlareCoefficients::FlareCoefficients() {
  a[1] = 0.4;    // flame length exponent on heat release
  a[2] = 3.88;   // flame length log offset
  a[3] = 1e-10;  // squared Mach number per squared flow, at unit diameter
  a[4] = 0.038;  // exit velocity per flow / diameter^2
  a[5] = 1.3;    // horizontal flame offset factor
  a[6] = 0.5;    // horizontal offset exponent on wind / exit velocity
  a[7] = 0.5;    // vertical flame offset factor
  a[8] = 0.05;   // vertical offset exponent on exit velocity / wind
  a[9] = 0.3 / (4.0 * std::numbers::pi) / 317.0;  // radiated fraction, BTU/h/ft^2 -> kW/m^2
  a[10] = 233.0;
  a[11] = 20.0;
  a[12] = 0.6;
}

FlareCoefficients FlareCoefficients::from_file(const std::filesystem::path& path) {
  return from_keys(KeyValueFile::read(path));
}

FlareCoefficients FlareCoefficients::from_keys(const KeyValueFile& kv) {
  kv.require_only(flare_keys());
  FlareCoefficients c;
  c.heat_of_combustion = kv.number_or("heat_of_combustion", c.heat_of_combustion);
  c.wind_speed = kv.number_or("wind_speed", c.wind_speed);
  c.reference_distance = kv.number_or("reference_distance", c.reference_distance);
  c.radiation_limit = kv.number_or("radiation_limit", c.radiation_limit);
  c.mach_limit = kv.number_or("mach_limit", c.mach_limit);
  c.design_flow = kv.number_or("design_flow", c.design_flow);
  c.flow_mean = kv.number_or("flow_mean", c.flow_mean);
  c.t_lower = kv.number_or("t_lower", c.t_lower);
  c.t_upper = kv.number_or("t_upper", c.t_upper);
  c.h_lower = kv.number_or("h_lower", c.h_lower);
  c.h_upper = kv.number_or("h_upper", c.h_upper);
  for (int i = 1; i <= 12; ++i) c.a[i] = kv.number_or(fmt::format("a{}", i), c.a[i]);
  c.validate();
  return c;
}

std::string FlareCoefficients::to_text() const {
  std::ostringstream out;
  out << "# Flare stack coefficients (flow in lb/h, lengths in ft, radiation in kW/m^2)\n";
  out << "format_version = 1\n";
  out << fmt::format("heat_of_combustion = {}\n", heat_of_combustion);
  out << fmt::format("wind_speed = {}\n", wind_speed);
  out << fmt::format("reference_distance = {}\n", reference_distance);
  out << fmt::format("radiation_limit = {}\n", radiation_limit);
  out << fmt::format("mach_limit = {}\n", mach_limit);
  out << fmt::format("design_flow = {}\n", design_flow);
  out << fmt::format("flow_mean = {}\n", flow_mean);
  out << fmt::format("t_lower = {}\nt_upper = {}\n", t_lower, t_upper);
  out << fmt::format("h_lower = {}\nh_upper = {}\n", h_lower, h_upper);
  for (int i = 1; i <= 12; ++i) out << fmt::format("a{} = {}\n", i, a[i]);
  return out.str();
}

void FlareCoefficients::validate() const {
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument(fmt::format("flare coefficient {} must be finite and > 0", what));
    }
  };
  positive(heat_of_combustion, "heat_of_combustion");
  positive(wind_speed, "wind_speed");
  positive(reference_distance, "reference_distance");
  positive(radiation_limit, "radiation_limit");
  positive(mach_limit, "mach_limit");
  positive(design_flow, "design_flow");
  positive(flow_mean, "flow_mean");
  positive(t_lower, "t_lower");
  positive(h_lower, "h_lower");
  if (!(t_upper > t_lower) || !(h_upper > h_lower)) {
    throw std::invalid_argument("flare bounds must satisfy lower < upper");
  }
  for (int i = 1; i <= 12; ++i) {
    if (!std::isfinite(a[i])) throw std::invalid_argument(fmt::format("flare coefficient a{} not finite", i));
  }
  for (int i : {3, 4, 5, 7, 9}) {
    if (!(a[i] > 0.0)) throw std::invalid_argument(fmt::format("flare coefficient a{} must be > 0", i));
  }
}

std::string FlareCoefficients::flow_distribution() const {
  return fmt::format("exponential:{}", flow_mean);
}

FlareChain flare_chain(const FlareCoefficients& c, double t, double h, double Q) {
  FlareChain ch{};
  ch.H = c.heat_of_combustion * Q;
  if (!(ch.H > 0.0)) throw EvaluationError(fmt::format("flare heat release {} is not positive", ch.H));
  if (!(c.wind_speed > 0.0)) throw EvaluationError("flare wind speed is not positive");
  if (!(t > 0.0)) throw EvaluationError(fmt::format("flare diameter {} is not positive", t));
  ch.L = std::exp(c.a[1] * std::log(ch.H) - c.a[2]);
  ch.U = c.a[4] * Q / (t * t);
  if (!(ch.U > 0.0)) throw EvaluationError(fmt::format("flare exit velocity {} is not positive", ch.U));
  const double w = c.wind_speed;
  ch.dX = c.a[5] * ch.L * std::pow(w / ch.U, c.a[6]);
  ch.dY = c.a[7] * ch.L * std::pow(ch.U / w, c.a[8]);
  ch.X = c.reference_distance - 0.5 * ch.dX;
  ch.Y = h + 0.5 * ch.dY;
  ch.D2 = ch.X * ch.X + ch.Y * ch.Y;
  if (!(ch.D2 > 0.0)) throw EvaluationError("flare flame-centre distance is zero");
  ch.K = c.a[9] * ch.H / ch.D2;
  return ch;
}

double flare_cost(const FlareCoefficients& c, double t, double h) {
  const double s = c.a[10] + c.a[11] * t + c.a[12] * h;
  return s * s;
}

StochasticProgram flare_build(const FlareCoefficients& c, const ScenarioSet& scen) {
  c.validate();
  if (scen.dim() != 1) {
    throw ProblemDimensionError(
        fmt::format("flare scenarios carry one waste flow; got dimension {}", scen.dim()));
  }
  StochasticProgram p;
  p.name = "flare";
  p.n1 = 2;
  p.n2 = 0;
  p.scenario_dim = 1;
  p.x_lower = Eigen::Vector2d(c.t_lower, c.h_lower);
  p.x_upper = Eigen::Vector2d(c.t_upper, c.h_upper);
  p.x_start = Eigen::Vector2d(std::clamp(3.0, c.t_lower, c.t_upper), std::clamp(400.0, c.h_lower, c.h_upper));
  p.x_scale = Eigen::Vector2d(1.0, 100.0);
  p.y_lower = p.y_upper = p.y_start = p.y_scale = Vec(0);
  p.cc_scale = 1.0;
  p.cc_report_offset = c.radiation_limit;

  p.first_stage_cost = [c](VecCRef x, VecRef g) {
    const double s = c.a[10] + c.a[11] * x[0] + c.a[12] * x[1];
    g[0] = 2.0 * s * c.a[11];
    g[1] = 2.0 * s * c.a[12];
    return s * s;
  };
  p.cc_function = [c](VecCRef x, VecCRef, Xi xi, VecRef g, VecRef) {
    const double t = x[0];
    const FlareChain ch = flare_chain(c, t, x[1], xi[0]);
    const double dXdt = -c.a[6] * ch.dX / t;
    const double dYdt = -c.a[8] * ch.dY / t;
    const double dD2dt = 2.0 * ch.X * dXdt + 2.0 * ch.Y * dYdt;
    const double dD2dh = 2.0 * ch.Y;
    g[0] = -ch.K * dD2dt / ch.D2;
    g[1] = -ch.K * dD2dh / ch.D2;
    return ch.K - c.radiation_limit;
  };

  // Mach number at the design flow: M^2 = a3 Qd^2 / t^2 <= M_max^2.
  p.m_det = 1;
  p.det_constraints = [c](VecCRef x, VecRef g, MatRef jac) {
    const double m2 = c.mach_limit * c.mach_limit;
    g[0] = m2 * x[0] * x[0] - c.a[3] * c.design_flow * c.design_flow;
    jac(0, 0) = 2.0 * m2 * x[0];
    jac(0, 1) = 0.0;
  };
  p.validate();
  return p;
}

}  // namespace sigvar
