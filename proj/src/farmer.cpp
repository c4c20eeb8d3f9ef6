#include <cmath>
#include <sstream>

#include <fmt/format.h>

#include "sigvar/case_studies.hpp"

namespace sigvar {

namespace {

constexpr const char* kCrops[3] = {"wheat", "corn", "beets"};

std::vector<std::string> farmer_keys() {
  std::vector<std::string> keys = {"land_capacity", "wheat_yield",    "corn_yield",
                                   "beet_yield_mean", "beet_yield_sd", "cost_threshold"};
  for (const char* crop : kCrops) {
    for (const char* what : {"planting_cost", "purchase_price", "sale_price", "demand",
                             "purchase_capacity", "sale_capacity"}) {
      keys.push_back(fmt::format("{}.{}", what, crop));
    }
  }
  return keys;
}

}  // namespace

FarmerCoefficients FarmerCoefficients::from_file(const std::filesystem::path& path) {
  return from_keys(KeyValueFile::read(path));
}

FarmerCoefficients FarmerCoefficients::from_keys(const KeyValueFile& kv) {
  kv.require_only(farmer_keys());
  FarmerCoefficients c;
  c.land_capacity = kv.number_or("land_capacity", c.land_capacity);
  c.wheat_yield = kv.number_or("wheat_yield", c.wheat_yield);
  c.corn_yield = kv.number_or("corn_yield", c.corn_yield);
  c.beet_yield_mean = kv.number_or("beet_yield_mean", c.beet_yield_mean);
  c.beet_yield_sd = kv.number_or("beet_yield_sd", c.beet_yield_sd);
  c.cost_threshold = kv.number_or("cost_threshold", c.cost_threshold);
  for (int j = 0; j < 3; ++j) {
    auto key = [&](const char* what) { return fmt::format("{}.{}", what, kCrops[j]); };
    c.planting_cost[j] = kv.number_or(key("planting_cost"), c.planting_cost[j]);
    c.purchase_price[j] = kv.number_or(key("purchase_price"), c.purchase_price[j]);
    c.sale_price[j] = kv.number_or(key("sale_price"), c.sale_price[j]);
    c.demand[j] = kv.number_or(key("demand"), c.demand[j]);
    c.purchase_capacity[j] = kv.number_or(key("purchase_capacity"), c.purchase_capacity[j]);
    c.sale_capacity[j] = kv.number_or(key("sale_capacity"), c.sale_capacity[j]);
  }
  c.validate();
  return c;
}

std::string FarmerCoefficients::to_text() const {
  std::ostringstream out;
  out << "# Farmer problem coefficients (costs in $, land in acres, yields in T/acre)\n";
  out << "format_version = 1\n";
  out << fmt::format("land_capacity = {}\n", land_capacity);
  out << fmt::format("wheat_yield = {}\n", wheat_yield);
  out << fmt::format("corn_yield = {}\n", corn_yield);
  out << fmt::format("beet_yield_mean = {}\n", beet_yield_mean);
  out << fmt::format("beet_yield_sd = {}\n", beet_yield_sd);
  out << fmt::format("cost_threshold = {}\n", cost_threshold);
  for (int j = 0; j < 3; ++j) {
    out << fmt::format("planting_cost.{} = {}\n", kCrops[j], planting_cost[j]);
    out << fmt::format("purchase_price.{} = {}\n", kCrops[j], purchase_price[j]);
    out << fmt::format("sale_price.{} = {}\n", kCrops[j], sale_price[j]);
    out << fmt::format("demand.{} = {}\n", kCrops[j], demand[j]);
    out << fmt::format("purchase_capacity.{} = {}\n", kCrops[j], purchase_capacity[j]);
    out << fmt::format("sale_capacity.{} = {}\n", kCrops[j], sale_capacity[j]);
  }
  return out.str();
}

void FarmerCoefficients::validate() const {
  auto nonneg = [](double v, const std::string& what) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("farmer coefficient " + what + " must be finite and >= 0");
    }
  };
  if (!(land_capacity > 0.0)) throw std::invalid_argument("farmer land_capacity must be > 0");
  nonneg(wheat_yield, "wheat_yield");
  nonneg(corn_yield, "corn_yield");
  nonneg(beet_yield_sd, "beet_yield_sd");
  if (!std::isfinite(beet_yield_mean) || !std::isfinite(cost_threshold)) {
    throw std::invalid_argument("farmer beet_yield_mean and cost_threshold must be finite");
  }
  for (int j = 0; j < 3; ++j) {
    nonneg(planting_cost[j], "planting_cost");
    nonneg(purchase_price[j], "purchase_price");
    nonneg(sale_price[j], "sale_price");
    nonneg(demand[j], "demand");
    nonneg(purchase_capacity[j], "purchase_capacity");
    nonneg(sale_capacity[j], "sale_capacity");
  }
}

std::string FarmerCoefficients::yield_distribution() const {
  return fmt::format("normal:{}:{}", beet_yield_mean, beet_yield_sd);
}

StochasticProgram farmer_build(const FarmerCoefficients& c, const ScenarioSet& scen) {
  c.validate();
  if (scen.dim() != 1) {
    throw ProblemDimensionError(
        fmt::format("farmer scenarios carry one beet yield; got dimension {}", scen.dim()));
  }
  StochasticProgram p;
  p.name = "farmer";
  p.n1 = 3;
  p.n2 = 6;
  p.scenario_dim = 1;
  p.x_lower = Vec::Zero(3);
  p.x_upper = Vec::Constant(3, c.land_capacity);
  p.x_start = Vec::Constant(3, c.land_capacity / 3.0);
  p.x_scale = Vec::Constant(3, 100.0);
  p.y_lower = Vec::Zero(6);
  p.y_upper.resize(6);
  for (int j = 0; j < 3; ++j) {
    p.y_upper[j] = c.purchase_capacity[j];
    p.y_upper[3 + j] = c.sale_capacity[j];
  }
  p.y_start = Vec::Zero(6);
  p.y_scale = Vec::Constant(6, 1000.0);
  p.cc_scale = 1e4;
  p.cc_report_offset = c.cost_threshold;

  const Eigen::Vector3d gx(c.planting_cost[0], c.planting_cost[1], c.planting_cost[2]);
  Vec gy(6);
  for (int j = 0; j < 3; ++j) {
    gy[j] = c.purchase_price[j];
    gy[3 + j] = -c.sale_price[j];
  }
  p.first_stage_cost = [gx](VecCRef x, VecRef g) {
    g = gx;
    return gx.dot(x);
  };
  p.recourse_cost = [gy](VecCRef, VecCRef y, Xi, VecRef g_x, VecRef g_y) {
    g_x.setZero();
    g_y = gy;
    return gy.dot(y);
  };
  const double threshold = c.cost_threshold;
  p.cc_function = [gx, gy, threshold](VecCRef x, VecCRef y, Xi, VecRef g_x, VecRef g_y) {
    g_x = gx;
    g_y = gy;
    return gx.dot(x) + gy.dot(y) - threshold;
  };

  p.m_det = 1;
  const double land = c.land_capacity;
  p.det_constraints = [land](VecCRef x, VecRef g, MatRef jac) {
    g[0] = land - x.sum();
    jac.setConstant(-1.0);
  };

  // Balance per crop: yield * land + purchases - sales - demand >= 0.
  p.m_rec = 3;
  const double wheat = c.wheat_yield;
  const double corn = c.corn_yield;
  const Eigen::Vector3d demand(c.demand[0], c.demand[1], c.demand[2]);
  p.recourse_constraints = [wheat, corn, demand](VecCRef x, VecCRef y, Xi xi, VecRef h, MatRef jx,
                                                 MatRef jy) {
    const double yields[3] = {wheat, corn, xi[0]};
    jx.setZero();
    jy.setZero();
    for (int j = 0; j < 3; ++j) {
      h[j] = yields[j] * x[j] + y[j] - y[3 + j] - demand[j];
      jx(j, j) = yields[j];
      jy(j, j) = 1.0;
      jy(j, 3 + j) = -1.0;
    }
  };
  p.validate();
  return p;
}

}  // namespace sigvar
