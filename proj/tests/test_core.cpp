#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "vapormem/core.hpp"

using namespace vapormem;

TEST(DefaultParams, CalibratedValues) {
  const auto p = default_params();
  EXPECT_EQ(p.p0, 760.0);
  EXPECT_EQ(p.d0, 0.24);
  EXPECT_EQ(p.t0, 273.15);
  EXPECT_EQ(p.t_cell, 333.15);
  EXPECT_EQ(p.p_buffer, 5.0);
  EXPECT_EQ(p.w_signal, 270.0);
  EXPECT_EQ(p.w_control, 350.0);
  EXPECT_EQ(p.pos_per_mhz, 270.0 / 8.0);
  EXPECT_EQ(p.sigma0, p.w_signal / 2.0);
  EXPECT_EQ(p.w_dep, 500.0);
  EXPECT_EQ(p.m_dep, 3);
  EXPECT_EQ(p.f_center, 200.0);
  EXPECT_EQ(p.f_halfband, 50.0);
  EXPECT_EQ(p.edge_loss, 0.25);
  EXPECT_EQ(p.t_switch, 48.0);
  EXPECT_EQ(p.pump_fidelity, 1.0);
  EXPECT_EQ(p.decay_mode, DecayMode::Empirical);
  EXPECT_NO_THROW(p.validate());
  EXPECT_EQ(default_params(), default_params());
}

TEST(DefaultParams, ValidateRejectsBrokenInvariants) {
  auto broken = [](auto mutate) {
    auto p = default_params();
    mutate(p);
    return p;
  };
  EXPECT_THROW(broken([](PhysicsParams& p) { p.d0 = 0; }).validate(), DomainError);
  EXPECT_THROW(broken([](PhysicsParams& p) { p.w_dep = -1; }).validate(), DomainError);
  EXPECT_THROW(broken([](PhysicsParams& p) { p.m_dep = 0; }).validate(), DomainError);
  EXPECT_THROW(broken([](PhysicsParams& p) { p.edge_loss = 1.0; }).validate(), DomainError);
  EXPECT_THROW(broken([](PhysicsParams& p) { p.pump_fidelity = 1.5; }).validate(), DomainError);
  EXPECT_THROW(broken([](PhysicsParams& p) { p.t_switch = 0; }).validate(), DomainError);
  EXPECT_NO_THROW(broken([](PhysicsParams& p) { p.edge_loss = 0.0; }).validate());
}

TEST(Table1, Entries) {
  const auto rails = table1_calibration();
  ASSERT_EQ(rails.size(), 4u);
  const auto* r190 = find_rail(rails, 190.0);
  ASSERT_NE(r190, nullptr);
  EXPECT_EQ(r190->tau, 5.4);
  EXPECT_EQ(r190->tau_err, 0.7);
  EXPECT_EQ(r190->eta_mem, 0.35);
  const auto* r230 = find_rail(rails, 230.0);
  EXPECT_DOUBLE_EQ(r230->eta_write, 0.6);
  EXPECT_DOUBLE_EQ(r230->eta_read, 0.6);
  const auto p = default_params();
  for (const auto& r : rails) {
    EXPECT_GE(r.f_rail, 150.0);
    EXPECT_LE(r.f_rail, 250.0);
    EXPECT_NO_THROW(check_rail(r, p));
  }
}

TEST(RailCalibration, SplitProductMatchesEfficiency) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> eta(1e-3, 1.0);
  std::uniform_real_distribution<double> log_ratio(-1.0, 1.0);
  int built = 0;
  for (int i = 0; i < 2000; ++i) {
    const double e = eta(rng);
    const double r = std::exp(log_ratio(rng));
    try {
      const auto rail = make_rail(200.0, 1.0, 0.1, e, r);
      EXPECT_LE(std::abs(rail.eta_write * rail.eta_read - e), 1e-12 * e);
      EXPECT_NEAR(rail.eta_write / rail.eta_read, r, 1e-12 * r);
      ++built;
    } catch (const DomainError&) {
      // only legal when one factor would exceed 1
      EXPECT_GT(std::max(std::sqrt(e * r), std::sqrt(e / r)), 1.0);
    }
  }
  EXPECT_GT(built, 1000);
}

TEST(RailCalibration, RejectsBadValues) {
  EXPECT_THROW(make_rail(190, 0.0, 0.1, 0.3), DomainError);
  EXPECT_THROW(make_rail(190, 1.0, 0.1, 0.0), DomainError);
  EXPECT_THROW(make_rail(190, 1.0, 0.1, 1.2), DomainError);
  EXPECT_THROW(make_rail(190, 1.0, 0.1, 0.9, 4.0), DomainError);
  EXPECT_THROW(check_rail(make_rail(260, 1.0, 0.1, 0.3), default_params()), OutOfBandError);
}

TEST(Sequence, ConstructorChecks) {
  EXPECT_NO_THROW(Sequence("ok", {190}, {{0, OpKind::Write, 190, 1.0}, {400, OpKind::Read, 190, 1.0}}));
  EXPECT_THROW(Sequence("unsorted", {190}, {{400, OpKind::Write, 190, 1.0}, {0, OpKind::Read, 190, 1.0}}),
               TimeOrderError);
  EXPECT_THROW(Sequence("tie", {190}, {{0, OpKind::Write, 190, 1.0}, {0, OpKind::Read, 190, 1.0}}),
               TimeOrderError);
  EXPECT_THROW(Sequence("undeclared", {190}, {{0, OpKind::Read, 210, 1.0}}), UnknownRailError);
  EXPECT_THROW(Sequence("dup", {190, 190}, {}), DuplicateRailError);
  EXPECT_THROW(Sequence("neg", {190}, {{-1, OpKind::Read, 190, 1.0}}), PreconditionError);
  EXPECT_THROW(Sequence("zero", {190}, {{0, OpKind::Write, 190, 0.0}}), PreconditionError);
  // spacing is the validator's business, not the constructor's
  EXPECT_NO_THROW(Sequence("fast", {190}, {{0, OpKind::Write, 190, 1.0}, {1, OpKind::Read, 190, 1.0}}));
}

TEST(OpticalConfig, DefaultsAndChecks) {
  OpticalConfig c;
  EXPECT_EQ(c.fwhm_signal, 25.0);
  EXPECT_EQ(c.fwhm_control, 43.75);
  EXPECT_EQ(c.norm_detuning, 2.0);
  EXPECT_NO_THROW(c.validate());
  c.fwhm_signal = 0;
  EXPECT_THROW(c.validate(), DomainError);
}
